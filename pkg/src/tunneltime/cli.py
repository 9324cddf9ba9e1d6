"""Command-line front end.

Exit status: 0 on success, 1 on a configuration or validation error,
2 when a numeric-quality check fails (outputs written so far are kept and
the manifest records the failure).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import COMMANDS, CliConfig, parse_config
from .errors import ConfigError, DomainError, PeakAtBoundaryError
from .scattering import CoefficientTable, transmission_closed
from .synthesis import (constituent_packets, fidelity, first_order_packet, incident_packet,
                        l2_relative_deviation, partial_packets, peak_time, spectral_centroid,
                        transmitted_packet)

log = logging.getLogger("tunneltime")

EXIT_OK, EXIT_CONFIG, EXIT_QUALITY = 0, 1, 2


def _coef(cfg, sc):
    table = CoefficientTable.from_region(sc.packet.omega_grid(), sc.region)
    res = ex.RunResult("coef", datasets={"coefficients": table})
    res.summary["rows"] = len(table.omegas)
    return [res]


def _packet(cfg, sc):
    report = sc.delay_report()
    times = sc.times(report.tau_phi)
    inc = incident_packet(sc.packet, times)
    tr = transmitted_packet(sc.packet, sc.region, times)
    pred = first_order_packet(sc.packet, report, times)
    report.peak_delay = peak_time(tr)
    centroid = spectral_centroid(lambda w: transmission_closed(w, sc.region), sc.packet)
    res = ex.RunResult("packet", report=report, flags=list(report.quality_flags))
    res.datasets.update({"incident": inc, "transmitted": tr, "predicted": pred})
    res.summary.update({"fidelity": fidelity(inc, tr),
                        "first_order_l2": l2_relative_deviation(pred, tr),
                        "spectral_centroid": centroid,
                        "predicted_centroid": sc.packet.omega0 + report.tau_n / sc.packet.tau ** 2})
    return [res]


def _constituents(cfg, sc):
    report = sc.delay_report()
    times = sc.times(report.tau_phi)
    parts = constituent_packets(cfg.constituents, sc.packet, sc.region, times)
    res = ex.RunResult("constituents", report=report, flags=list(report.quality_flags))
    for j, f in zip(cfg.constituents, parts):
        res.datasets[f"constituent_{j}"] = f
        res.summary[f"peak_{j}"] = ex.peak_or_none(f)
    return [res]


def _partial(cfg, sc):
    report = sc.delay_report()
    times = sc.times(report.tau_phi)
    parts = partial_packets(cfg.partials, sc.packet, sc.region, times)
    res = ex.RunResult("partial", report=report, flags=list(report.quality_flags))
    for m, f in zip(cfg.partials, parts):
        res.datasets[f"partial_{m}"] = f
        res.summary[f"peak_{m}"] = ex.peak_or_none(f)
    return [res]


def _hartman(cfg, sc):
    kappa_a = np.geomspace(cfg.kappa_a_min, cfg.kappa_a_max, cfg.n_thickness)
    return [ex.hartman_sweep(sc, kappa_a)]


def _figures(cfg, sc):
    return [ex.run_figure1(sc), ex.run_figure2(sc), ex.run_figure3(sc, cfg.peak_orders)]


def _sweep(cfg, sc):
    return [ex.condition_study(sc, ex.multipliers_for_ratios(sc, cfg.ratios))]


HANDLERS = {"coef": _coef, "packet": _packet, "constituents": _constituents,
            "partial": _partial, "hartman": _hartman, "figures": _figures, "sweep": _sweep}


def dispatch(cfg: CliConfig) -> int:
    """Run one configured command and persist its outputs."""
    sc = cfg.scenario()
    try:
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("output directory %s not writable: %s", cfg.out_dir, exc)
        return EXIT_CONFIG
    try:
        results = HANDLERS[cfg.command](cfg, sc)
    except PeakAtBoundaryError as exc:
        failed = ex.RunResult(cfg.command, flags=["peak-at-boundary"], summary={"error": str(exc)})
        ex.write_run(cfg.out_dir, sc, [failed], cfg.format, cfg.to_dict())
        log.error("%s", exc)
        return EXIT_QUALITY
    run_dir = ex.write_run(cfg.out_dir, sc, results, cfg.format, cfg.to_dict())
    for r in results:
        for name, ok in r.checks.items():
            log.info("%s check %s: %s", r.name, name, "pass" if ok else "FAIL")
        for flag in r.flags:
            log.warning("%s flagged: %s", r.name, flag)
    log.info("outputs in %s", run_dir)
    return EXIT_OK if all(r.ok for r in results) else EXIT_QUALITY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tunneltime",
                                description="Wave-packet transmission and group delay through "
                                            "rectangular wells and barriers")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="INI or JSON scenario file")
    p.add_argument("--out", help="output directory (overrides [output] out_dir)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--n-omega", type=int)
    p.add_argument("--n-t", type=int)
    p.add_argument("--terms", type=int)
    p.add_argument("--diff-step", type=float)
    p.add_argument("--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    overrides = {"n_omega": args.n_omega, "n_t": args.n_t, "terms": args.terms,
                 "diff_step": args.diff_step, "out": args.out, "format": args.format}
    try:
        data = args.config.read_bytes() if args.config else b""
        cfg = parse_config(data, overrides, command=args.command)
        return dispatch(cfg)
    except (ConfigError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
