"""Classification accuracy of the frequency-band features versus segment
duration, averaged over seeded synthetic subjects.

Usage: python scripts/ssvep_duration_curve.py [--snr 0.15] [--seeds 50]
"""

import argparse
from dataclasses import replace

import numpy as np

from riemann_bci import mdm
from riemann_bci.datasets import SyntheticSpec, generate_ssvep
from riemann_bci.features import DEFAULT_ERP_SHRINKAGE, SSVEP, build_recipe
from riemann_bci.preprocessing import Epoch

DURATIONS = (1, 2, 3, 4, 5, 6)


def crop(e: Epoch, seconds: float) -> Epoch:
    n = int(round(seconds * e.fs))
    return Epoch(e.data[:, :n], fs=e.fs, label=e.label, channels=e.channels)


def curve(snr: float, seed: int) -> np.ndarray:
    spec = SyntheticSpec(
        n_channels=6, n_samples=768, fs=128.0, trials_per_class=4, seed=seed, snr=snr
    )
    train = generate_ssvep(spec)
    test = generate_ssvep(replace(spec, seed=seed + 50_000))
    recipe = build_recipe(
        SSVEP, shrinkage=DEFAULT_ERP_SHRINKAGE, freqs=(12.0, 15.0, 20.0)
    )
    accs = []
    for seconds in DURATIONS:
        model = mdm.fit([crop(e, seconds) for e in train], recipe)
        cropped = [crop(e, seconds) for e in test]
        accs.append(np.mean([mdm.predict(model, e) == e.label for e in cropped]))
    return np.array(accs)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--snr", type=float, default=0.15)
    parser.add_argument("--seeds", type=int, default=50)
    args = parser.parse_args()

    curves = np.array([curve(args.snr, seed) for seed in range(args.seeds)])
    mean_curve = curves.mean(axis=0)
    print(f"snr {args.snr}, {args.seeds} seeds")
    print(f"{'duration':>9}  {'accuracy':>9}")
    for seconds, acc in zip(DURATIONS, mean_curve):
        print(f"{seconds:8d}s  {acc:9.4f}")


if __name__ == "__main__":
    main()
