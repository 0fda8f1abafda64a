"""Command line entry point: simulate, sweep, timeseries, calibrate, ce."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace

from . import calibration, config, scenario
from .errors import ConfigError, DomainError

log = logging.getLogger("qkdcoexist")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _fmt_result(r: scenario.CoexistenceResult) -> str:
    p = "off" if r.p_wdm_dbm == -math.inf else f"{r.p_wdm_dbm:.2f} dBm"
    lines = [
        f"length          {r.length_km:g} km",
        f"WDM power       {p} ({r.n_channels} ch)",
        f"loss quantum    {r.loss_quantum_db:.2f} dB",
        f"loss classical  {r.loss_classical_db:.2f} dB",
        f"noise / gate    {r.point.stats.noise_per_gate:.4g}",
        f"QBER            {r.qber:.4%}",
        f"SKR             {r.skr / 1e3:.2f} kb/s{'' if r.secure else ' (no secure key)'}",
        f"CE              {r.ce:.2f} Mb/s*mW*km",
    ]
    if r.flags:
        lines.append(f"flags           {';'.join(r.flags)}")
    return "\n".join(lines)


def _cmd_simulate(args) -> int:
    cfg = config.load_config(args.config, args.params)
    result = scenario.run_scenario(cfg)
    print(_fmt_result(result))
    if args.out:
        scenario.emit_csv([result], args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = config.load_config(args.config, args.params)
    if cfg.sweep is None:
        raise ConfigError("sweep", "config has no [sweep] section")
    workers = args.workers if args.workers is not None else cfg.sweep.workers
    results = scenario.run_sweep(cfg, workers=workers)
    print(f"{cfg.sweep.variable:>10} {'SKR kb/s':>12} {'QBER %':>8} {'CE':>10}")
    for v, r in zip(cfg.sweep.values, results):
        print(f"{v:>10g} {r.skr / 1e3:>12.3f} {100 * r.qber:>8.3f} {r.ce:>10.2f}")
    if args.out:
        scenario.emit_csv(results, args.out)
    return EXIT_OK


def _cmd_timeseries(args) -> int:
    cfg = config.load_config(args.config, args.params)
    if cfg.timeseries is None:
        raise ConfigError("timeseries", "config has no [timeseries] section")
    samples = scenario.run_timeseries(cfg, seed=args.seed)
    if samples:
        skr = [s.skr_bps for s in samples]
        qber = [s.qber for s in samples]
        print(f"{len(samples)} intervals; mean SKR {sum(skr) / len(skr) / 1e3:.2f} kb/s, "
              f"mean QBER {100 * sum(qber) / len(qber):.3f} %")
    else:
        print("0 intervals")
    if args.out:
        scenario.emit_timeseries_csv(samples, args.out)
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    if args.config:
        cfg = config.load_config(args.config, args.params)
    else:
        cfg = config.ScenarioConfig().with_model(config.load_params(args.params))
    spec = cfg.calibration or calibration.FitSpec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.max_evals is not None:
        spec = replace(spec, max_evals=args.max_evals)
    result = calibration.fit(spec, config.default_anchors(cfg), cfg.model, cfg.link.build())
    print(result.report())
    if args.out:
        config.write_params(args.out, result)
    return EXIT_OK


def _cmd_ce(args) -> int:
    ce = scenario.compute_ce(args.skr_bps, args.p_wdm_dbm, args.length_km)
    print(f"CE = {ce:.1f} Mb/s*mW*km")
    print(f"reference: {scenario.REFERENCE_CE_WANG_2017:.1f} Mb/s*mW*km "
          f"({scenario.REFERENCE_CE_WANG_2017_CITATION})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qkdcoexist", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="scenario TOML file")
        sp.add_argument("--params", default=None, help="fitted-parameter TOML (default: shipped fit)")
        sp.add_argument("--out", default=None, help="output path")
        sp.add_argument("--seed", type=int, default=None)

    common(sub.add_parser("simulate", help="evaluate one operating point"))
    sp = sub.add_parser("sweep", help="sweep length, power or channel count")
    common(sp)
    sp.add_argument("--workers", type=int, default=None)
    common(sub.add_parser("timeseries", help="sampled SKR/QBER per interval"))
    sp = sub.add_parser("calibrate", help="fit model parameters to anchors")
    common(sp, config_required=False)
    sp.add_argument("--max-evals", type=int, default=None)

    sp = sub.add_parser("ce", help="co-propagation efficiency calculator")
    sp.add_argument("--skr-bps", type=float, required=True)
    sp.add_argument("--p-wdm-dbm", type=float, required=True)
    sp.add_argument("--length-km", type=float, required=True)
    return p


COMMANDS = {
    "simulate": _cmd_simulate, "sweep": _cmd_sweep, "timeseries": _cmd_timeseries,
    "calibrate": _cmd_calibrate, "ce": _cmd_ce,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.cmd](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
