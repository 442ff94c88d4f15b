#!/usr/bin/env python3
"""Generate a synthetic story + fMRI dataset directory with a run config.

Example:
    python3 scripts/make_synthetic_dataset.py --out data/planted --seed 11
    python3 scripts/make_synthetic_dataset.py --out data/null --null
"""

import argparse

from neurosyntax import synth


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--subjects", type=int, default=3)
    ap.add_argument("--voxels", type=int, default=2000)
    ap.add_argument("--n-tr", type=int, default=282)
    ap.add_argument("--sentences", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--snr", type=float, default=10.0)
    ap.add_argument("--planted-roi", default="MFG")
    ap.add_argument("--planted-space", default="CC")
    ap.add_argument("--baseline-space", default="CM")
    ap.add_argument("--null", action="store_true", help="pure-noise fMRI")
    args = ap.parse_args()

    config_path = synth.make_dataset(
        args.out,
        n_subjects=args.subjects,
        n_voxels=args.voxels,
        n_tr=args.n_tr,
        n_sentences=args.sentences,
        seed=args.seed,
        planted_space=None if args.null else args.planted_space,
        baseline_space=args.baseline_space,
        planted_roi=args.planted_roi,
        snr=args.snr,
    )
    print(f"wrote dataset; run config at {config_path}")


if __name__ == "__main__":
    main()
