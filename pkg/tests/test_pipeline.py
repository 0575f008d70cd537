import json

import numpy as np
import pytest

from holoeeg.errors import DatasetError, ValidationError
from holoeeg.pipeline.dataset import (
    DEAP_CHANNELS,
    FRONTAL_CHANNELS,
    LabelConfig,
    Trial,
    binarize,
    labels_for,
    load_dataset,
    read_trial,
    write_dataset,
    write_trial,
)
from holoeeg.pipeline.featuresets import (
    ExtractionConfig,
    FeatureMatrix,
    FeatureSetSpec,
    build_feature_matrices,
    build_feature_set,
    build_feature_sets,
    default_spec,
    read_feature_matrix,
    reduce_channels,
    spec_columns,
    write_feature_matrix,
)
from holoeeg.pipeline.synth import SeparationSpec, synth_dataset
from holoeeg.wavelet import band_levels, dwt_decompose, energy_entropy

CFG = ExtractionConfig()


def small_trial(seconds=8.0, seed=0, subject=1, trial=1, valence=6.0, arousal=3.0):
    r = np.random.default_rng(seed)
    x = r.standard_normal((32, int(seconds * 128)))
    return Trial(x, subject, trial, valence, arousal)


class TestLabels:
    @pytest.mark.parametrize("rating,label", [(4.5, 0), (4.6, 1), (9.0, 1), (1.0, 0)])
    def test_binarize(self, rating, label):
        assert binarize(rating, LabelConfig()) == label

    def test_partition(self):
        trials = synth_dataset(1, 1, 12, duration_s=2)
        y = labels_for(trials, LabelConfig(dimension="arousal"))
        assert int((y == 1).sum() + (y == 0).sum()) == len(trials)

    def test_threshold_range(self):
        with pytest.raises(ValidationError):
            LabelConfig(threshold=9.5)


class TestDatasetIO:
    def test_round_trip_bit_exact(self, tmp_path):
        trials = synth_dataset(3, 1, 2)
        write_dataset(trials, tmp_path)
        back = load_dataset(tmp_path)
        for a, b in zip(trials, back):
            assert a.key == b.key
            assert a.channels.tobytes() == b.channels.tobytes()
            assert (a.valence, a.arousal) == (b.valence, b.arousal)

    def test_two_files_ordered(self, tmp_path):
        t2 = small_trial(60, subject=2, trial=1)
        t1 = small_trial(60, subject=1, trial=5)
        write_trial(t2, tmp_path / "a.trial")
        write_trial(t1, tmp_path / "b.trial")
        assert [t.key for t in load_dataset(tmp_path)] == ["s01_t05", "s02_t01"]

    def test_wrong_channel_count(self, tmp_path):
        t = Trial(np.zeros((30, 7680)), 1, 1, 5, 5, channel_names=DEAP_CHANNELS[:30])
        write_trial(t, tmp_path / "x.trial")
        with pytest.raises(DatasetError, match="expected 32 channels"):
            load_dataset(tmp_path)

    def test_rating_out_of_range(self, tmp_path):
        t = small_trial(60, valence=9.5)
        write_trial(t, tmp_path / "x.trial")
        with pytest.raises(DatasetError, match="rating out of range"):
            load_dataset(tmp_path)

    def test_malformed_header(self, tmp_path):
        (tmp_path / "x.trial").write_bytes(b"{not json\n" + bytes(16))
        with pytest.raises(DatasetError, match="malformed header"):
            read_trial(tmp_path / "x.trial")

    def test_partial_load_rejected_lists_all(self, tmp_path):
        write_trial(small_trial(60, valence=0.5, trial=1), tmp_path / "a.trial")
        write_trial(small_trial(60, trial=2), tmp_path / "b.trial")
        write_trial(small_trial(60, arousal=10, trial=3), tmp_path / "c.trial")
        with pytest.raises(DatasetError) as e:
            load_dataset(tmp_path)
        assert "a.trial" in str(e.value) and "c.trial" in str(e.value)

    def test_truncated_block(self, tmp_path):
        p = write_trial(small_trial(60), tmp_path / "x.trial")
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(DatasetError, match="bytes"):
            load_dataset(tmp_path)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            load_dataset(tmp_path / "nope")

    def test_header_is_json_line(self, tmp_path):
        p = write_trial(small_trial(60), tmp_path / "x.trial")
        head = json.loads(p.read_bytes().split(b"\n", 1)[0])
        assert head["n_samples"] == 7680 and len(head["channels"]) == 32


class TestSynth:
    def test_shape_and_both_classes(self):
        trials = synth_dataset(0, 1, 6)
        assert trials[0].channels.shape == (32, 7680) and trials[0].fs == 128
        y = labels_for(trials)
        assert 0 < y.sum() < len(y)

    def test_deterministic(self):
        a = synth_dataset(5, 1, 3, duration_s=4)
        b = synth_dataset(5, 1, 3, duration_s=4)
        assert all(x.channels.tobytes() == y.channels.tobytes() and x.valence == y.valence for x, y in zip(a, b))

    def test_negative_effect(self):
        with pytest.raises(ValidationError):
            SeparationSpec(effect=-0.1)

    def test_boost_raises_band_power(self):
        # theta: the AM tone (carrier >= 18 Hz, sidebands >= 10 Hz) never reaches it
        trials = synth_dataset(2, 1, 20, SeparationSpec("theta", 2.0), duration_s=8)
        y = labels_for(trials)
        f = np.fft.rfftfreq(1024, 1 / 128)
        band = (f >= 4) & (f < 8)
        power = np.array([np.mean(np.abs(np.fft.rfft(t.channels, axis=1))[:, band] ** 2) for t in trials])
        ratio = power[y == 1].mean() / power[y == 0].mean()
        assert 2.4 < ratio < 3.6  # 1 + effect, with channel and trial noise


class TestDimensions:
    @pytest.mark.parametrize(
        "set_id,dim,d",
        [("A", "valence", 416), ("B", "valence", 64), ("C", "valence", 64), ("C", "arousal", 256),
         ("D", "valence", 256), ("D", "arousal", 288), ("MHS", "valence", 8192), ("HHSA", "valence", 800)],
    )
    def test_default_d(self, set_id, dim, d):
        assert len(spec_columns(default_spec(set_id, dim), DEAP_CHANNELS, CFG)) == d

    def test_mhs_frontal(self):
        spec = FeatureSetSpec("MHS", ("mhs",), default_spec("MHS").bands, FRONTAL_CHANNELS)
        assert len(spec_columns(spec, DEAP_CHANNELS, CFG)) == 2560

    def test_unknown_set(self):
        with pytest.raises(ValidationError):
            default_spec("Z")


@pytest.fixture(scope="module")
def built():
    trials = [small_trial(8, seed=s, trial=s + 1) for s in range(2)]
    specs = [default_spec(s, "valence") for s in ("A", "B", "C", "D", "MHS", "HHSA")]
    return trials, build_feature_sets(trials, specs, CFG)


class TestBuild:
    def test_built_dimensions(self, built):
        _, m = built
        assert {k: v.d for k, v in m.items()} == {"A": 416, "B": 64, "C": 64, "D": 256, "MHS": 8192, "HHSA": 800}
        assert reduce_channels(m["MHS"], FRONTAL_CHANNELS).d == 2560

    def test_finite_and_unique(self, built):
        _, m = built
        for mat in m.values():
            assert np.all(np.isfinite(mat.values))
            assert len(set(mat.column_names)) == mat.d

    def test_window_average_c(self, built):
        trials, m = built
        v = trials[0].channels[DEAP_CHANNELS.index("Fz")]
        frames = [v[s : s + 512] for s in range(0, v.size - 512 + 1, 256)]
        level = band_levels(128.0)["gamma"]
        vals = [energy_entropy(dwt_decompose(f, 5).details[level - 1]) for f in frames]
        names = m["C"].column_names
        assert m["C"].values[0, names.index("energy@gamma@Fz")] == pytest.approx(np.mean([e for e, _ in vals]), rel=1e-12)
        assert m["C"].values[0, names.index("entropy@gamma@Fz")] == pytest.approx(np.mean([h for _, h in vals]), rel=1e-12)

    def test_window_average_b(self, built):
        from scipy.signal import welch

        trials, m = built
        v = trials[1].channels[0]
        frames = [v[s : s + 512] for s in range(0, v.size - 512 + 1, 256)]
        per = []
        for fr in frames:
            f, p = welch(fr, 128, "hann", nperseg=512, noverlap=256, detrend=False)
            per.append(p[(f >= 10) & (f < 13)].sum())
        col = m["B"].column_names.index("psd@alpha_high@Fp1")
        assert m["B"].values[1, col] == pytest.approx(np.mean(per), rel=1e-12)

    def test_parallel_identical(self, built):
        trials, m = built
        par = build_feature_set(trials, default_spec("C"), CFG, n_jobs=2)
        assert par.values.tobytes() == m["C"].values.tobytes()

    def test_duplicate_set_ids_in_list_api(self):
        trials = [small_trial(8)]
        a, b = build_feature_matrices(trials, [default_spec("C", "valence"), default_spec("C", "arousal")], CFG)
        assert (a.d, b.d) == (64, 256)
        with pytest.raises(ValidationError):
            build_feature_sets(trials, [default_spec("C", "valence"), default_spec("C", "arousal")], CFG)

    def test_too_few_imfs_zero_filled_and_flagged(self):
        t = small_trial(8)
        x = np.array(t.channels)
        x[0] = np.linspace(-1, 1, x.shape[1])  # monotone: no IMFs
        t = Trial(x, 1, 1, 5.0, 5.0)
        m = build_feature_set([t], default_spec("D"), CFG)
        cols = [i for i, c in enumerate(m.columns) if c[2] == "Fp1"]
        assert not m.values[0, cols].any()
        assert any("zero-filled" in f for f in m.flags)


class TestReduceAndIO:
    def test_identity_and_errors(self, built):
        _, m = built
        full = reduce_channels(m["A"], DEAP_CHANNELS)
        assert full.values.tobytes() == m["A"].values.tobytes() and full.columns == m["A"].columns
        with pytest.raises(ValidationError, match="empty channel selection"):
            reduce_channels(m["A"], [])
        with pytest.raises(ValidationError, match="unknown channel"):
            reduce_channels(m["A"], ["Cz9"])

    def test_csv_round_trip(self, built, tmp_path):
        _, m = built
        csv, side = write_feature_matrix(m["D"], tmp_path / "d.csv", "abc123")
        assert csv.read_text().startswith("# config_hash: abc123\ntrial_id,")
        back = read_feature_matrix(csv)
        assert back.values.tobytes() == m["D"].values.tobytes()
        assert back.spec == m["D"].spec and back.columns == m["D"].columns
        assert json.loads(side.read_text())["config_hash"] == "abc123"

    def test_csv_bad_row_names_line(self, built, tmp_path):
        _, m = built
        csv, _ = write_feature_matrix(m["B"], tmp_path / "b.csv", "h")
        lines = csv.read_text().splitlines()
        lines[2] = lines[2].split(",", 1)[0] + ",oops" + lines[2][lines[2].index(",", lines[2].index(",") + 1):]
        csv.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValidationError, match=":3:"):
            read_feature_matrix(csv)

    def test_matrix_rejects_nan(self):
        with pytest.raises(ValidationError):
            FeatureMatrix("A", np.array([[np.nan]]), [("a", "b", "c")], ["t"])
