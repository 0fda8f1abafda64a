"""Refit the shipped parameters against the measured operating points.

    python scripts/fit_measured_anchors.py [--seed 0] [--out src/qkdcoexist/data/fitted_params.toml]
"""
import argparse
from dataclasses import replace
from pathlib import Path

from qkdcoexist import calibration, config
from qkdcoexist.optics import FiberLink
from qkdcoexist.qkd import ModelParams

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "qkdcoexist" / "data" / "fitted_params.toml"

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-evals", type=int, default=6000)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args()

    spec = replace(calibration.FitSpec(), seed=args.seed, max_evals=args.max_evals)
    result = calibration.fit(spec, calibration.MEASURED_ANCHORS, ModelParams(), FiberLink(length_km=0.0))
    print(result.report())
    config.write_params(args.out, result)
    print(f"wrote {args.out}")
