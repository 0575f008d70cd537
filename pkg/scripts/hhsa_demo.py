"""Print the Holo-Hilbert grid of an AM tone next to an unmodulated one."""

import argparse

import numpy as np

from holoeeg.signal import Signal
from holoeeg.spectra import SpectrumConfig, holo_spectrum


def show(title, hs):
    print(title)
    grid = hs.grid
    print("carrier \\ AM  " + " ".join(f"bin{j:<5}" for j in range(grid.shape[1])))
    for i, row in enumerate(grid):
        print(f"bin{i:<10} " + " ".join(f"{v:9.2f}" for v in row))
    print(f"total {grid.sum():.2f}\n")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--carrier", type=float, default=30.0)
    p.add_argument("--am", type=float, default=6.0)
    p.add_argument("--depth", type=float, default=0.8)
    p.add_argument("--bins", type=int, default=5)
    a = p.parse_args()
    fs = 128.0
    t = np.arange(int(10 * fs)) / fs
    cfg = SpectrumConfig(5.0, 45.0, a.bins)
    carrier = np.cos(2 * np.pi * a.carrier * t)
    show(f"AM {a.am} Hz on {a.carrier} Hz, depth {a.depth}",
         holo_spectrum(Signal((1 + a.depth * np.cos(2 * np.pi * a.am * t)) * carrier, fs), cfg, cfg))
    show("unmodulated", holo_spectrum(Signal(carrier, fs), cfg, cfg))
    print("bin edges (Hz):", np.round(cfg.bin_edges, 2).tolist())
