"""Transmission through a rectangular well or barrier.

The closed form and the multiple-reflection series are kept as two
independent evaluation routes; the series is summed term by term, never
through its geometric closed form, so each route checks the other.

Sign convention: a transmitted component is ``T(omega) exp{i[k(x - a) - omega t]}``
and free flight (``v0 = 0``) gives ``T = exp(i k a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dispersion import (Kind, ScatterRegion, characteristic_scales, inside_wavenumber,
                         is_evanescent, outside_wavenumber)
from .errors import DomainError, UnwrapError
from .io import write_table

DEFAULT_TERMS = 100
RICHARDSON_TOLERANCE = 0.01


def _sinc(z):
    """sin(z)/z for complex z, 1 at the origin."""
    z = np.asarray(z, dtype=complex)
    safe = np.where(z == 0, 1.0, z)
    return np.where(z == 0, 1.0 + 0j, np.sin(safe) / safe)


def _scalar_or_array(x):
    x = np.asarray(x)
    return x if x.ndim else x.item()


def transmission_closed(omega, region: ScatterRegion):
    """Amplitude transmission coefficient from the closed form.

    Evaluates ``1 / [cos k'a - (i/2)(k/k' + k'/k) sin k'a]`` rewritten as
    ``k / [k cos k'a - (i a / 2) sinc(k'a) (k^2 + k'^2)]``, which stays
    finite at the barrier top (``k' = 0``) and for imaginary ``k'``.
    At ``omega = 0`` the continuous limit is returned: 1 for ``v0 = 0``,
    0 otherwise (zero-energy resonances are not special-cased).
    """
    omega = np.asarray(omega, dtype=float)
    k = np.asarray(outside_wavenumber(omega, region), dtype=float)
    kin = np.asarray(inside_wavenumber(omega, region), dtype=complex)
    a = region.a
    denom = k * np.cos(kin * a) - 0.5j * a * _sinc(kin * a) * (k * k + kin * kin)
    zero = k == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = k / np.where(zero, 1.0, denom)
    t = np.where(zero, 1.0 + 0j if region.v0 == 0 else 0j, t)
    return _scalar_or_array(t)


@dataclass(frozen=True)
class PolarPair:
    """``k + i kappa = delta_mag * exp(i delta_arg)``."""

    delta_mag: float
    delta_arg: float


def polar_decompose(k: float, kappa: float) -> PolarPair:
    if not (k > 0 and kappa > 0):
        raise DomainError(f"k and kappa must be positive, got k={k}, kappa={kappa}")
    return PolarPair(math.hypot(k, kappa), math.atan2(kappa, k))


def _evanescent_parts(omega, region):
    k = np.asarray(outside_wavenumber(omega, region), dtype=float)
    kappa = np.asarray(inside_wavenumber(omega, region)).imag
    mag = np.hypot(k, kappa)
    delta = np.arctan2(kappa, k)
    return k, kappa, mag, delta


def series_ratio(omega, region: ScatterRegion):
    """Common ratio between successive series terms,
    ``[((k' - k)/(k' + k)) exp(i k' a)]^2``.

    Under a barrier top this is ``exp(-2 kappa a) exp(-4 i delta)``.  The
    magnitude is below one except at ``omega = 0`` and exactly at the
    barrier top, where the series stops converging.
    """
    omega = np.asarray(omega, dtype=float)
    if region.kind is Kind.BARRIER and np.all(region.hbar * omega < region.v0):
        _, kappa, _, delta = _evanescent_parts(omega, region)
        return _scalar_or_array(np.exp(-2.0 * kappa * region.a) * np.exp(-4j * delta))
    k = np.asarray(outside_wavenumber(omega, region), dtype=float)
    kin = np.asarray(inside_wavenumber(omega, region), dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (kin - k) / (kin + k) * np.exp(1j * kin * region.a)
    r = np.where(kin + k == 0, 0j, r)
    return _scalar_or_array(r * r)


def series_term(j: int, omega, region: ScatterRegion):
    """The ``j``-th transmitted constituent amplitude ``T_j(omega)``.

    Well (and above a barrier top): ``T_1 = 4kk'/(k'+k)^2 exp(ik'a)`` and
    ``T_j = T_1 * ratio**(j-1)``.  Under a barrier top the polar form
    ``(4 k kappa / Delta^2) exp(-(2j-1) kappa a) exp(i[pi/2 - 2 delta - 4 delta (j-1)])``
    is used so the phase never touches the thickness.
    """
    if int(j) != j or j < 1:
        raise ValueError(f"constituent index must be an integer >= 1, got {j}")
    j = int(j)
    omega = np.asarray(omega, dtype=float)
    if region.kind is Kind.BARRIER and np.all(region.hbar * omega < region.v0):
        k, kappa, mag, delta = _evanescent_parts(omega, region)
        with np.errstate(invalid="ignore"):
            amp = 4.0 * k * kappa / (mag * mag) * np.exp(-(2 * j - 1) * kappa * region.a)
        # unit phasor from delta alone: integer powers keep large j accurate
        unit = np.exp(1j * (0.5 * np.pi - 2.0 * delta)) * np.exp(-4j * delta) ** (j - 1)
        return _scalar_or_array(amp * unit)
    k = np.asarray(outside_wavenumber(omega, region), dtype=float)
    kin = np.asarray(inside_wavenumber(omega, region), dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = 4.0 * k * kin / (kin + k) ** 2 * np.exp(1j * kin * region.a)
    # k = k' = 0 only for a free particle at zero frequency
    t1 = np.where(kin + k == 0, 1.0 + 0j, t1)
    if j == 1:
        return _scalar_or_array(t1)
    return _scalar_or_array(t1 * np.asarray(series_ratio(omega, region)) ** (j - 1))


def series_partial_sum(j_max: int, omega, region: ScatterRegion):
    """``sum_{j=1}^{j_max} T_j(omega)``, accumulated term by term."""
    if int(j_max) != j_max or j_max < 1:
        raise ValueError(f"j_max must be an integer >= 1, got {j_max}")
    omega = np.asarray(omega, dtype=float)
    term = np.asarray(series_term(1, omega, region), dtype=complex)
    ratio = np.asarray(series_ratio(omega, region), dtype=complex)
    total = term.copy()
    for _ in range(int(j_max) - 1):
        term = term * ratio
        total = total + term
    return _scalar_or_array(total)


def tail_bound(j_max: int, omega, region: ScatterRegion):
    """Upper bound on ``|closed - partial(j_max)|``: ``|T_1| |r|^J / (1 - |r|)``."""
    t1 = np.abs(np.asarray(series_term(1, omega, region)))
    r = np.abs(np.asarray(series_ratio(omega, region)))
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = np.where(t1 == 0, 0.0, t1 * r ** j_max / (1.0 - r))
    return _scalar_or_array(bound)


def unwrap_phase(values) -> np.ndarray:
    """Continuous phase of complex samples on an ascending grid.

    The first sample keeps its principal value in ``(-pi, pi]``; every later
    increment is shifted by a multiple of ``2 pi`` into ``(-pi, pi]``.
    """
    values = np.asarray(values, dtype=complex)
    zeros = np.flatnonzero(values == 0)
    if zeros.size:
        raise UnwrapError(int(zeros[0]))
    return np.unwrap(np.angle(values))


def _zero_frequency_phase(region: ScatterRegion) -> float:
    # T ~ 2 i k / (k' sin k'a) as k -> 0
    kin = complex(inside_wavenumber(0.0, region))
    d = kin * np.sin(kin * region.a)
    return 0.0 if d == 0 else float(np.angle(1j / d))


@dataclass(frozen=True)
class CoefficientTable:
    """Sampled transmission coefficient with its unwrapped phase.

    A clamped spectral window can start at ``omega = 0``, where ``T``
    vanishes; that single sample carries magnitude 0 and the
    zero-frequency limit of the phase.
    """

    omegas: np.ndarray
    values: np.ndarray
    phase_unwrapped: np.ndarray
    magnitude: np.ndarray

    def __post_init__(self):
        n = len(self.omegas)
        if not (len(self.values) == len(self.phase_unwrapped) == len(self.magnitude) == n):
            raise ValueError("coefficient table columns differ in length")
        if n > 1 and not np.all(np.diff(self.omegas) > 0):
            raise ValueError("omegas must be strictly increasing")

    @classmethod
    def from_region(cls, omegas, region: ScatterRegion) -> "CoefficientTable":
        omegas = np.asarray(omegas, dtype=float)
        values = np.asarray(transmission_closed(omegas, region), dtype=complex).reshape(omegas.shape)
        phase = np.empty(omegas.shape)
        start = 0
        if omegas.size and omegas[0] == 0 and values[0] == 0:
            start = 1
        phase[start:] = unwrap_phase(values[start:])
        if start:
            p0 = _zero_frequency_phase(region)
            if phase.size > 1:
                p0 += 2 * np.pi * np.round((phase[1] - p0) / (2 * np.pi))
            phase[0] = p0
        return cls(omegas, values, phase, np.abs(values))

    def rows(self):
        return zip(self.omegas, self.values.real, self.values.imag, self.magnitude,
                   self.phase_unwrapped)

    def write_csv(self, path, comments: Sequence[str] = ()) -> None:
        write_table(path, ["omega", "re_T", "im_T", "abs_T", "phase_unwrapped"],
                    self.rows(), comments)

    def to_json_dict(self) -> dict:
        return {
            "omega": self.omegas.tolist(),
            "re_T": self.values.real.tolist(),
            "im_T": self.values.imag.tolist(),
            "abs_T": self.magnitude.tolist(),
            "phase_unwrapped": self.phase_unwrapped.tolist(),
        }


@dataclass
class DelayReport:
    """Delay quantities at a carrier frequency.

    ``tau_n + i tau_phi`` is the logarithmic derivative of ``T`` at the
    carrier.  ``peak_delay`` is filled in by callers that track the
    synthesized packet.
    """

    omega0: float
    tau_phi: float
    tau_n: float
    step: float
    richardson_rel: float
    coefficient0: complex = 1.0 + 0j
    hartman_limit: Optional[float] = None
    constituent_delays: Optional[list] = None
    peak_delay: Optional[float] = None
    quality_flags: list = field(default_factory=list)

    @property
    def log_derivative(self) -> complex:
        return complex(self.tau_n, self.tau_phi)

    def to_dict(self) -> dict:
        return {
            "omega0": self.omega0,
            "tau_phi": self.tau_phi,
            "tau_n": self.tau_n,
            "step": self.step,
            "coefficient0_re": self.coefficient0.real,
            "coefficient0_im": self.coefficient0.imag,
            "richardson_rel": self.richardson_rel,
            "hartman_limit": self.hartman_limit,
            "constituent_delays": self.constituent_delays,
            "peak_delay": self.peak_delay,
            "quality_flags": list(self.quality_flags),
        }


def default_step(omega0: float, tau_scale: Optional[float] = None) -> float:
    step = 1e-4 * omega0
    if tau_scale:
        step = min(step, 0.01 / tau_scale)
    return step


def _log_derivative(omega0, region, h):
    vals = np.asarray(transmission_closed(np.array([omega0 - h, omega0, omega0 + h]), region))
    phase = unwrap_phase(vals)
    logmag = np.log(np.abs(vals))
    return (logmag[2] - logmag[0]) / (2 * h), (phase[2] - phase[0]) / (2 * h)


def hartman_limit(omega0: float, region: ScatterRegion) -> Optional[float]:
    """Opaque-barrier delay ``2 mu / (hbar k0 kappa0)``; ``None`` outside
    the tunnelling regime."""
    if not is_evanescent(omega0, region):
        return None
    k0 = outside_wavenumber(omega0, region)
    kappa0 = complex(inside_wavenumber(omega0, region)).imag
    return 2.0 * region.mu / (region.hbar * k0 * kappa0)


def group_delay(omega0: float, region: ScatterRegion, step: Optional[float] = None,
                tau_scale: Optional[float] = None,
                constituents: Sequence[int] = (1, 2, 3)) -> DelayReport:
    """Group delay ``d arg T / d omega`` and amplitude delay ``d ln|T| / d omega``.

    Both come from central differences with ``step``; the same differences
    at ``step / 2`` feed a Richardson consistency check.  Disagreement above
    1 % is recorded in ``quality_flags`` rather than raised.
    """
    if not omega0 > 0:
        raise DomainError(f"omega0 must be > 0, got {omega0}")
    h = default_step(omega0, tau_scale) if step is None else float(step)
    if not (h > 0 and omega0 - h >= 0):
        raise DomainError(f"differentiation step must lie in (0, omega0], got {h}")
    tau_n, tau_phi = _log_derivative(omega0, region, h)
    tau_n2, tau_phi2 = _log_derivative(omega0, region, h / 2)
    coarse, fine = complex(tau_n, tau_phi), complex(tau_n2, tau_phi2)
    rel = abs(coarse - fine) / abs(fine) if fine != 0 else abs(coarse - fine)
    flags = []
    if rel > RICHARDSON_TOLERANCE:
        flags.append("richardson-disagreement")
    delays = None
    if region.kind is Kind.WELL:
        t1 = characteristic_scales(omega0, region).t1
        delays = [(2 * j - 1) * t1 for j in constituents]
    return DelayReport(omega0=float(omega0), tau_phi=float(tau_phi), tau_n=float(tau_n),
                       step=h, richardson_rel=float(rel),
                       coefficient0=complex(transmission_closed(omega0, region)),
                       hartman_limit=hartman_limit(omega0, region),
                       constituent_delays=delays, quality_flags=flags)
