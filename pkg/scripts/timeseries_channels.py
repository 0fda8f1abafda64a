"""Emulated 20-hour SKR/QBER traces at 50 km with no comb, 30 and 60 channels.

Writes one CSV per configuration: timeseries_<label>.csv.
"""
import argparse
from dataclasses import replace

import numpy as np

from qkdcoexist import config, scenario
from qkdcoexist.config import CombConfig, ScenarioConfig, TimeseriesConfig

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--hours", type=float, default=20.0)
    ap.add_argument("--interval-s", type=float, default=60.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    base = ScenarioConfig().with_model(config.load_params())
    ts = TimeseriesConfig(duration_s=args.hours * 3600.0, interval_s=args.interval_s, seed=args.seed)
    for label, comb in (
        ("no_wdm", CombConfig(enabled=False)),
        ("30ch", CombConfig(n_channels=30, total_power_dbm=16.8)),
        ("60ch", CombConfig(n_channels=60, total_power_dbm=16.8)),
    ):
        samples = scenario.run_timeseries(replace(base, comb=comb, timeseries=ts))
        skr = np.array([s.skr_bps for s in samples])
        qber = np.array([s.qber for s in samples])
        print(f"{label:>7}: SKR {skr.mean() / 1e3:7.2f} +- {skr.std() / 1e3:5.2f} kb/s, "
              f"QBER {100 * qber.mean():.3f} +- {100 * qber.std():.3f} %")
        scenario.emit_timeseries_csv(samples, f"timeseries_{label}.csv")
