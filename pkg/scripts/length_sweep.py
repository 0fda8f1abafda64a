"""SKR and CE against fiber length at a constant 15.3 dBm comb, written as CSV."""
import argparse
from dataclasses import replace

import numpy as np

from qkdcoexist import config, scenario
from qkdcoexist.config import CombConfig, ScenarioConfig, SweepConfig

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--power-dbm", type=float, default=15.3)
    ap.add_argument("--out", default="length_sweep.csv")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    lengths = tuple(float(x) for x in np.arange(10.0, 100.1, 5.0))
    cfg = replace(
        ScenarioConfig().with_model(config.load_params()),
        comb=CombConfig(total_power_dbm=args.power_dbm),
        sweep=SweepConfig("length", lengths),
    )
    rows = scenario.run_sweep(cfg, workers=args.workers)
    for r in rows:
        print(f"{r.length_km:6.1f} km  SKR {r.skr / 1e3:10.2f} kb/s  QBER {100 * r.qber:6.3f} %  CE {r.ce:8.2f}")
    scenario.emit_csv(rows, args.out)
