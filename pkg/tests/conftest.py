import numpy as np
import pytest

FS = 128.0


def tone(freq, seconds=10.0, fs=FS, amp=1.0, phase=0.0):
    t = np.arange(int(round(seconds * fs))) / fs
    return amp * np.cos(2 * np.pi * freq * t + phase)


def brute_extrema(v):
    """Strict three-point local extrema over interior points (no plateaus)."""
    mx = [i for i in range(1, len(v) - 1) if v[i] > v[i - 1] and v[i] > v[i + 1]]
    mn = [i for i in range(1, len(v) - 1) if v[i] < v[i - 1] and v[i] < v[i + 1]]
    return mx, mn


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
