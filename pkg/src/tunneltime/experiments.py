"""Scenario runner: the three exit-face figures, the barrier thickness sweep,
the shape-preservation study, and manifest-stamped persistence."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dispersion import (Kind, ScatterRegion, characteristic_scales, condition_ratio,
                         inside_wavenumber, is_evanescent)
from .errors import DomainError
from .io import Table, sha256_file, write_json
from .scattering import (DEFAULT_TERMS, DelayReport, group_delay, hartman_limit, series_term,
                         tail_bound)
from .synthesis import (DEFAULT_HALF_SPAN_TAUS, DEFAULT_N_T, FIDELITY_THRESHOLD, FieldSamples,
                        PacketSpec, constituent_packets, fidelity, first_order_packet,
                        incident_packet, l2_relative_deviation, partial_packets, peak_time,
                        time_grid, transmitted_packet)

log = logging.getLogger(__name__)

HARTMAN_KAPPA_A = (0.1, 10.0)
HARTMAN_POINTS = 30
CONVERGENCE_ORDER = 20
DEFAULT_RATIOS = (0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0)


@dataclass(frozen=True)
class Scenario:
    region: ScatterRegion
    packet: PacketSpec
    label: str
    n_t: int = DEFAULT_N_T
    half_span_taus: float = DEFAULT_HALF_SPAN_TAUS
    terms: int = DEFAULT_TERMS
    constituents: tuple = (1, 2, 3)
    partials: tuple = (1, 2, 3, "all")
    diff_step: Optional[float] = None

    def __post_init__(self):
        if not self.label:
            raise ValueError("scenario label must be nonempty")
        if self.n_t < 3 or self.terms < 1:
            raise ValueError("n_t must be >= 3 and terms >= 1")

    def delay_report(self) -> DelayReport:
        return group_delay(self.packet.omega0, self.region, step=self.diff_step,
                           tau_scale=self.packet.tau, constituents=self.constituents)

    def times(self, center: float = 0.0) -> np.ndarray:
        return time_grid(center, self.half_span_taus * self.packet.tau, self.n_t)

    def to_dict(self) -> dict:
        return {"label": self.label, "region": self.region.to_dict(),
                "packet": self.packet.to_dict(), "n_t": self.n_t,
                "half_span_taus": self.half_span_taus, "terms": self.terms,
                "constituents": list(self.constituents),
                "partials": [str(m) for m in self.partials], "diff_step": self.diff_step}


def figure1_scenario(energy_ratio: float = 0.01, kprime_a: float = 3.4, tau_units: float = 80.0,
                     label: str = "fig1-well", **kwargs) -> Scenario:
    """Natural-unit well with ``E0 = energy_ratio * V0``, ``a = kprime_a / k0'``
    and ``tau = tau_units * tau_u``."""
    omega0 = energy_ratio
    probe = ScatterRegion(Kind.WELL, 1.0, 1.0)
    kin0 = complex(inside_wavenumber(omega0, probe)).real
    region = ScatterRegion(Kind.WELL, 1.0, kprime_a / kin0)
    tau = tau_units * characteristic_scales(omega0, region).tau_u
    return Scenario(region, PacketSpec(omega0, tau), label, **kwargs)


def symmetric_barrier_scenario(kappa_a: float = 10.0, tau: float = 80.0,
                               label: str = "hartman-barrier", **kwargs) -> Scenario:
    """Barrier with ``E0 = V0 / 2`` so that ``k0 = kappa0 = 1`` in natural units."""
    region = ScatterRegion(Kind.BARRIER, 1.0, kappa_a)
    return Scenario(region, PacketSpec(0.5, tau), label, **kwargs)


@dataclass
class RunResult:
    """In-memory output of one experiment: named datasets plus scalar
    summaries, pass/fail checks and flags."""

    name: str
    datasets: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    report: Optional[DelayReport] = None

    @property
    def ok(self) -> bool:
        return all(self.checks.values()) and not self.flags


def peak_or_none(f: FieldSamples) -> Optional[float]:
    if not np.any(f.envelope):
        return None
    return peak_time(f)


def delay_tolerance(tau_phi: float, tau_u: float) -> float:
    """Allowed gap between peak-tracked delay and phase-derivative delay."""
    return max(0.05 * abs(tau_phi), 0.5 * tau_u)


def _require_well(scenario: Scenario):
    if scenario.region.kind is not Kind.WELL:
        raise DomainError(f"scenario {scenario.label!r} must be a well")


def run_figure1(scenario: Scenario) -> RunResult:
    """Transmitted packet with its first constituents at the exit face."""
    _require_well(scenario)
    report = scenario.delay_report()
    times = scenario.times(report.tau_phi)
    tr = transmitted_packet(scenario.packet, scenario.region, times)
    parts = constituent_packets(scenario.constituents, scenario.packet, scenario.region, times)
    scales = characteristic_scales(scenario.packet.omega0, scenario.region)
    report.peak_delay = peak_time(tr)

    res = RunResult("fig1", report=report)
    res.datasets["fig1_transmitted"] = tr
    peaks = {}
    for j, p in zip(scenario.constituents, parts):
        res.datasets[f"fig1_constituent_{j}"] = p
        peaks[j] = peak_or_none(p)
    res.summary.update({"tau_phi": report.tau_phi, "tau_n": report.tau_n,
                        "peak_delay": report.peak_delay, "t1": scales.t1,
                        "constituent_peaks": {str(j): v for j, v in peaks.items()},
                        "constituent_delays": report.constituent_delays})
    live = [(j, peaks[j]) for j in scenario.constituents if peaks[j] is not None]
    spacing_ok = True
    for (ja, pa), (jb, pb) in zip(live, live[1:]):
        expected = 2 * (jb - ja) * scales.t1
        spacing_ok &= abs((pb - pa) - expected) <= 0.01 * expected
    res.checks["constituent_spacing"] = bool(spacing_ok)
    ratio = condition_ratio(scenario.packet.omega0, scenario.region, scenario.packet.tau)
    if ratio <= 0.05:
        res.checks["peak_matches_group_delay"] = bool(
            abs(report.peak_delay - report.tau_phi) <= delay_tolerance(report.tau_phi, scales.tau_u))
    res.flags.extend(report.quality_flags)
    return res


def run_figure2(scenario: Scenario) -> RunResult:
    """Normalised incident (entry face) against transmitted (exit face)."""
    _require_well(scenario)
    report = scenario.delay_report()
    times = scenario.times(report.tau_phi)
    inc = incident_packet(scenario.packet, times)
    tr = transmitted_packet(scenario.packet, scenario.region, times)
    fid = fidelity(inc, tr)
    res = RunResult("fig2", report=report)
    res.datasets["fig2_incident_normalized"] = inc.normalized()
    res.datasets["fig2_transmitted_normalized"] = tr.normalized()
    res.summary.update({"fidelity": fid, "threshold": FIDELITY_THRESHOLD})
    res.checks["shape_maintained"] = bool(fid >= FIDELITY_THRESHOLD)
    if fid < FIDELITY_THRESHOLD:
        res.flags.append("group-delay-not-applicable")
    return res


def run_figure3(scenario: Scenario, orders: int = CONVERGENCE_ORDER) -> RunResult:
    """Partial sums of constituents and the convergence of their peaks."""
    _require_well(scenario)
    report = scenario.delay_report()
    times = scenario.times(report.tau_phi)
    ms = list(range(1, orders + 1)) + ["all"]
    fields = dict(zip(ms, partial_packets(ms, scenario.packet, scenario.region, times)))
    peaks = {m: peak_time(f) for m, f in fields.items()}
    res = RunResult("fig3", report=report)
    for m in scenario.partials:
        key = m if m == "all" else int(m)
        f = fields[key] if key in fields else partial_packets([key], scenario.packet,
                                                              scenario.region, times)[0]
        res.datasets[f"fig3_partial_{m}"] = f
    res.datasets["fig3_peaks"] = Table(
        ["m", "peak_time", "peak_minus_full"],
        [[m, peaks[m], peaks[m] - peaks["all"]] for m in ms if m != "all"])
    dt = times[1] - times[0]
    res.summary.update({"peak_full": peaks["all"], "peak_sequence": [peaks[m] for m in ms[:-1]],
                        "grid_step": dt})
    res.checks["converged_at_order"] = bool(abs(peaks[orders] - peaks["all"]) < dt)
    return res


def hartman_sweep(scenario: Scenario, kappa_a: Optional[Sequence[float]] = None,
                  phase_orders: Sequence[int] = (1, 2, 3)) -> RunResult:
    """Group delay against barrier thickness, alongside the opaque limit.

    ``kappa_a`` lists thicknesses in units of the penetration depth
    ``1/kappa0``; the default is log-spaced over ``[0.1, 10]``.
    """
    region, omega0 = scenario.region, scenario.packet.omega0
    if region.kind is not Kind.BARRIER or not is_evanescent(omega0, region):
        raise DomainError("Hartman sweep needs a barrier with hbar*omega0 < v0")
    if kappa_a is None:
        kappa_a = np.geomspace(*HARTMAN_KAPPA_A, HARTMAN_POINTS)
    kappa0 = complex(inside_wavenumber(omega0, region)).imag
    rows, flags = [], []
    for ka in kappa_a:
        reg = region.with_thickness(ka / kappa0)
        rep = group_delay(omega0, reg, step=scenario.diff_step, tau_scale=scenario.packet.tau)
        flags.extend(f"{q}@kappa_a={ka!r}" for q in rep.quality_flags)
        args = [float(np.angle(series_term(j, omega0, reg))) for j in phase_orders]
        rows.append([reg.a, ka, rep.tau_phi, rep.tau_n, rep.hartman_limit,
                     rep.tau_phi / rep.hartman_limit - 1.0, *args])
    header = ["a", "kappa0_a", "tau_phi", "tau_n", "limit", "rel_dev"] + \
        [f"arg_T{j}" for j in phase_orders]
    table = Table(header, rows)
    res = RunResult("hartman", flags=flags)
    res.datasets["hartman"] = table
    spread = max(float(np.ptp(table.column(f"arg_T{j}"))) for j in phase_orders)
    res.summary.update({"limit": rows[0][4], "tau_phi_thickest": rows[-1][2],
                        "tau_phi_thinnest": rows[0][2], "constituent_phase_spread": spread})
    return res


def _study_grid(scenario: Scenario, report: DelayReport, t1: float):
    span = scenario.half_span_taus * scenario.packet.tau
    lo = min(0.0, report.tau_phi) - span
    hi = max(0.0, report.tau_phi, 5 * t1) + span
    base_dt = 2 * span / (scenario.n_t - 1)
    n = max(scenario.n_t, int(math.ceil((hi - lo) / base_dt)) + 1)
    return np.linspace(lo, hi, n)


def multipliers_for_ratios(scenario: Scenario, ratios: Sequence[float]) -> list:
    base = condition_ratio(scenario.packet.omega0, scenario.region, scenario.packet.tau)
    return [r / base for r in ratios]


def condition_study(scenario: Scenario, multipliers: Sequence[float]) -> RunResult:
    """Shape fidelity and delay agreement as the well thickens.

    Each multiplier scales the base thickness.  Rows come back sorted by
    ``a / (v_g tau)``; degradation is recorded, not enforced.
    """
    _require_well(scenario)
    rows, flags = [], []
    for mult in sorted(set([1.0, *multipliers])):
        reg = scenario.region.with_thickness(scenario.region.a * mult)
        sc = replace(scenario, region=reg)
        rep = sc.delay_report()
        scales = characteristic_scales(sc.packet.omega0, reg)
        times = _study_grid(sc, rep, scales.t1)
        inc = incident_packet(sc.packet, times)
        tr = transmitted_packet(sc.packet, reg, times)
        pk = peak_time(tr)
        fid = fidelity(inc, tr)
        dev = l2_relative_deviation(first_order_packet(sc.packet, rep, times), tr)
        row_flags = list(rep.quality_flags)
        if fid < FIDELITY_THRESHOLD:
            row_flags.append("group-delay-not-applicable")
        if abs(pk - rep.tau_phi) > delay_tolerance(rep.tau_phi, scales.tau_u):
            row_flags.append("peak-delay-disagreement")
        ratio = condition_ratio(sc.packet.omega0, reg, sc.packet.tau)
        rows.append([ratio, mult, reg.a, rep.tau_phi, pk, abs(pk - rep.tau_phi), fid, dev,
                     ";".join(row_flags)])
        flags.extend(q for q in rep.quality_flags)
    rows.sort(key=lambda r: r[0])
    table = Table(["ratio", "multiplier", "a", "tau_phi", "peak_delay", "abs_peak_minus_tau_phi",
                   "fidelity", "first_order_l2", "flags"], rows)
    res = RunResult("condition", flags=flags)
    res.datasets["condition_study"] = table
    return res


def scenario_scales(scenario: Scenario) -> dict:
    omega0, region = scenario.packet.omega0, scenario.region
    scales = characteristic_scales(omega0, region, evanescent_tau_u=True)
    out = scales.to_dict()
    out["condition_ratio"] = condition_ratio(omega0, region, scenario.packet.tau)
    out["hartman_limit"] = hartman_limit(omega0, region)
    return out


def spectral_settings(scenario: Scenario) -> dict:
    spec = scenario.packet
    omegas = spec.omega_grid()
    return {"n_omega": spec.n_omega, "window_sigmas": spec.window_sigmas,
            "omega_lo": float(omegas[0]), "omega_hi": float(omegas[-1]),
            "n_t": scenario.n_t, "half_span_taus": scenario.half_span_taus,
            "series_terms": scenario.terms,
            "series_tail_bound_at_carrier": float(tail_bound(scenario.terms, spec.omega0,
                                                             scenario.region)),
            "discarded_spectral_weight": spec.discarded_weight(),
            "spectrum_edge_ratio": spec.edge_ratio(),
            "diff_step": scenario.delay_report().step}


def write_run(out_dir, scenario: Scenario, results: Sequence[RunResult], fmt: str = "csv",
              config_echo: Optional[dict] = None, extra_datasets: Optional[dict] = None) -> Path:
    """Persist datasets under ``<out_dir>/<label>/`` and write ``manifest.json`` last."""
    run_dir = Path(out_dir) / scenario.label
    run_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    datasets = {}
    for r in results:
        datasets.update(r.datasets)
    datasets.update(extra_datasets or {})
    for name, data in datasets.items():
        path = run_dir / f"{name}.{fmt}"
        if fmt == "csv":
            data.write_csv(path)
        else:
            write_json(path, data.to_json_dict())
        files[path.name] = sha256_file(path)
    manifest = {
        "scenario": scenario.to_dict(),
        "derived_scales": scenario_scales(scenario),
        "numeric_settings": spectral_settings(scenario),
        "outputs": files,
        "results": {r.name: {"summary": r.summary, "checks": r.checks, "flags": r.flags,
                             "delay_report": r.report.to_dict() if r.report else None}
                    for r in results},
        "ok": all(r.ok for r in results),
    }
    if config_echo is not None:
        manifest["config"] = config_echo
    write_json(run_dir / "manifest.json", manifest)
    log.info("wrote %d datasets to %s", len(files), run_dir)
    return run_dir


def verify_manifest(run_dir) -> bool:
    """True when every listed output exists with a matching digest."""
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    return all((run_dir / name).exists() and sha256_file(run_dir / name) == digest
               for name, digest in manifest["outputs"].items())
