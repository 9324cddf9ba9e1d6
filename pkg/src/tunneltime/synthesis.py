"""Time-domain wave packets at the exit face, built by spectral quadrature.

Every packet is ``Psi(t) = integral c(omega) A(omega) exp(-i omega t) d omega``
over a Gaussian spectrum ``A`` clamped to non-negative frequencies and
integrated with the composite Simpson rule on a uniform grid.

The frequency sum is evaluated by Horner's scheme in ``exp(-i d_omega t)``,
running from the highest node down to the lowest.  That order is fixed, so
results do not depend on BLAS threading and are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .dispersion import ScatterRegion
from .errors import DomainError, PeakAtBoundaryError
from .io import write_table
from .scattering import DelayReport, series_partial_sum, series_term, transmission_closed

DEFAULT_WINDOW_SIGMAS = 5.0
DEFAULT_N_OMEGA = 2049
DEFAULT_N_T = 4096
DEFAULT_HALF_SPAN_TAUS = 6.0
FIDELITY_THRESHOLD = 0.99

Coefficient = Union[Callable, np.ndarray, complex, float]


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian incident packet ``exp(-t^2 / 2 tau^2) exp(-i omega0 t)``."""

    omega0: float
    tau: float
    window_sigmas: float = DEFAULT_WINDOW_SIGMAS
    n_omega: int = DEFAULT_N_OMEGA

    def __post_init__(self):
        if not (self.omega0 > 0 and self.tau > 0 and self.window_sigmas > 0):
            raise DomainError("omega0, tau and window_sigmas must be positive")
        if self.n_omega < 33 or self.n_omega % 2 == 0:
            raise DomainError(f"n_omega must be odd and >= 33, got {self.n_omega}")

    @property
    def window(self) -> tuple:
        half = self.window_sigmas / self.tau
        return max(0.0, self.omega0 - half), self.omega0 + half

    def omega_grid(self) -> np.ndarray:
        lo, hi = self.window
        return np.linspace(lo, hi, self.n_omega)

    def discarded_weight(self) -> float:
        """Fraction of the spectral integral of ``A`` that lies outside the
        clamped window (both tails)."""
        lo, hi = self.window
        s = math.sqrt(2.0)
        return 0.5 * math.erfc((self.omega0 - lo) * self.tau / s) + \
            0.5 * math.erfc((hi - self.omega0) * self.tau / s)

    def edge_ratio(self) -> float:
        """``A(lo) / A(omega0)`` at the lower window edge."""
        lo, _ = self.window
        return math.exp(-0.5 * (self.tau * (self.omega0 - lo)) ** 2)

    def to_dict(self) -> dict:
        lo, hi = self.window
        return {"omega0": self.omega0, "tau": self.tau, "window_sigmas": self.window_sigmas,
                "n_omega": self.n_omega, "omega_lo": lo, "omega_hi": hi}


@dataclass
class FieldSamples:
    times: np.ndarray
    values: np.ndarray
    label: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")

    @property
    def envelope(self) -> np.ndarray:
        return np.abs(self.values)

    def norm(self) -> float:
        dt = self.times[1] - self.times[0]
        return math.sqrt(float(np.sum(self.envelope ** 2)) * dt)

    def normalized(self, label: Optional[str] = None) -> "FieldSamples":
        """Copy scaled so the envelope peaks at 1."""
        peak = float(np.max(self.envelope))
        if peak == 0:
            raise DomainError("cannot normalise an all-zero field")
        return FieldSamples(self.times, self.values / peak, label or self.label,
                            dict(self.metadata, normalized=True))

    def comments(self) -> list:
        out = [f"label: {self.label}"]
        out.extend(f"{k}: {v}" for k, v in sorted(self.metadata.items()))
        return out

    def write_csv(self, path) -> None:
        write_table(path, ["t", "re_psi", "im_psi", "abs_psi"],
                    zip(self.times, self.values.real, self.values.imag, self.envelope),
                    self.comments())

    def to_json_dict(self) -> dict:
        return {"label": self.label, "metadata": self.metadata,
                "t": self.times.tolist(), "re_psi": self.values.real.tolist(),
                "im_psi": self.values.imag.tolist(), "abs_psi": self.envelope.tolist()}


def gaussian_spectrum(omega, spec: PacketSpec):
    """Amplitude spectrum ``tau exp[-(tau^2 / 2)(omega - omega0)^2]``."""
    return spec.tau * np.exp(-0.5 * spec.tau ** 2 * (np.asarray(omega) - spec.omega0) ** 2)


def simpson_weights(n: int, dx: float) -> np.ndarray:
    if n < 3 or n % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of nodes >= 3")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (dx / 3.0)


def time_grid(center: float, half_span: float, n: int = DEFAULT_N_T) -> np.ndarray:
    return np.linspace(center - half_span, center + half_span, n)


def default_time_grid(spec: PacketSpec, expected_delay: float = 0.0,
                      n: int = DEFAULT_N_T) -> np.ndarray:
    return time_grid(expected_delay, DEFAULT_HALF_SPAN_TAUS * spec.tau, n)


def _coefficient_values(coefficient: Coefficient, omegas: np.ndarray) -> np.ndarray:
    if callable(coefficient):
        vals = np.asarray(coefficient(omegas), dtype=complex)
    else:
        vals = np.asarray(coefficient, dtype=complex)
    vals = np.broadcast_to(vals, vals.shape[:-1] + omegas.shape if vals.ndim else omegas.shape)
    bad = np.argwhere(~np.isfinite(vals))
    if bad.size:
        idx = int(bad[0][-1])
        raise DomainError(f"coefficient undefined at node {idx} (omega={omegas[idx]!r})")
    return vals


def _fourier_sum(g: np.ndarray, omegas: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``sum_n g[..., n] exp(-i omegas[n] t)`` by Horner in ``exp(-i d_omega t)``."""
    dw = omegas[1] - omegas[0]
    z = np.exp(-1j * dw * times)
    acc = np.zeros(g.shape[:-1] + times.shape, dtype=complex)
    for n in range(g.shape[-1] - 1, -1, -1):
        acc = acc * z + g[..., n, None]
    return acc * np.exp(-1j * omegas[0] * times)


def synthesize_many(coefficients: np.ndarray, spec: PacketSpec, times) -> np.ndarray:
    """Synthesize a stack of coefficient arrays (shape ``(m, n_omega)``) at once.

    Row ``i`` of the result depends only on row ``i`` of the input.
    """
    times = np.asarray(times, dtype=float)
    omegas = spec.omega_grid()
    vals = _coefficient_values(coefficients, omegas)
    w = simpson_weights(omegas.size, omegas[1] - omegas[0]) * gaussian_spectrum(omegas, spec)
    return _fourier_sum(vals * w, omegas, times)


def synthesize(coefficient: Coefficient, spec: PacketSpec, times, label: str = "transmitted",
               metadata: Optional[dict] = None) -> FieldSamples:
    """Packet at the exit face for a given spectral coefficient.

    ``coefficient`` may be a callable of omega, an array sampled on
    ``spec.omega_grid()``, or a constant.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("empty time grid")
    psi = synthesize_many(coefficient, spec, times)
    meta = _base_metadata(spec)
    meta.update(metadata or {})
    return FieldSamples(times, psi, label, meta)


def _base_metadata(spec: PacketSpec, region: Optional[ScatterRegion] = None) -> dict:
    meta = {"quadrature": "composite-simpson", **spec.to_dict(),
            "discarded_weight": spec.discarded_weight()}
    if region is not None:
        meta.update(region.to_dict())
    return meta


def incident_packet(spec: PacketSpec, times) -> FieldSamples:
    return synthesize(1.0, spec, times, label="incident")


def transmitted_packet(spec: PacketSpec, region: ScatterRegion, times) -> FieldSamples:
    return synthesize(lambda w: transmission_closed(w, region), spec, times, "transmitted",
                      region.to_dict())


def constituent_packet(j: int, spec: PacketSpec, region: ScatterRegion, times) -> FieldSamples:
    return constituent_packets([j], spec, region, times)[0]


def constituent_packets(js: Sequence[int], spec: PacketSpec, region: ScatterRegion,
                        times) -> list:
    omegas = spec.omega_grid()
    stack = np.array([series_term(j, omegas, region) for j in js], dtype=complex)
    psi = synthesize_many(stack, spec, times)
    base = _base_metadata(spec, region)
    return [FieldSamples(np.asarray(times, dtype=float), psi[i], f"constituent({j})", dict(base))
            for i, j in enumerate(js)]


def _partial_coefficients(m, omegas, region):
    if m == "all":
        return transmission_closed(omegas, region)
    return series_partial_sum(int(m), omegas, region)


def partial_packet(m, spec: PacketSpec, region: ScatterRegion, times) -> FieldSamples:
    """Sum of the first ``m`` constituents; ``m = "all"`` uses the closed form."""
    return partial_packets([m], spec, region, times)[0]


def partial_packets(ms: Sequence, spec: PacketSpec, region: ScatterRegion, times) -> list:
    for m in ms:
        if m != "all" and (int(m) != m or m < 1):
            raise ValueError(f"partial-sum order must be >= 1 or 'all', got {m!r}")
    omegas = spec.omega_grid()
    stack = np.array([_partial_coefficients(m, omegas, region) for m in ms], dtype=complex)
    psi = synthesize_many(stack, spec, times)
    base = _base_metadata(spec, region)
    return [FieldSamples(np.asarray(times, dtype=float), psi[i], f"partial({m})", dict(base))
            for i, m in enumerate(ms)]


def _parabolic_vertex(y, i):
    denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
    if denom == 0:
        return 0.0, y[i]
    offset = 0.5 * (y[i - 1] - y[i + 1]) / denom
    return offset, y[i] - 0.25 * (y[i - 1] - y[i + 1]) * offset


def peak_time(f: FieldSamples) -> float:
    """Time of the envelope maximum, refined by a parabola through the three
    samples of ``|psi|^2`` around the discrete maximum."""
    if len(f.times) < 3:
        raise ValueError("peak_time needs at least three samples")
    power = f.envelope ** 2
    i = int(np.argmax(power))
    if i == 0 or i == len(power) - 1:
        raise PeakAtBoundaryError(
            f"envelope peak of {f.label!r} at grid boundary t={f.times[i]!r}; widen the time grid")
    offset, _ = _parabolic_vertex(power, i)
    return float(f.times[i] + offset * (f.times[1] - f.times[0]))


def _check_same_grid(f: FieldSamples, g: FieldSamples):
    if f.times.shape != g.times.shape or not np.allclose(f.times, g.times, rtol=1e-12, atol=0):
        raise ValueError("fields must share the same time grid")


def fidelity(f: FieldSamples, g: FieldSamples) -> float:
    """Envelope cross-correlation maximum, normalised to 1 for identical
    shapes regardless of delay and scale."""
    _check_same_grid(f, g)
    ef, eg = f.envelope, g.envelope
    norm = math.sqrt(float(np.dot(ef, ef)) * float(np.dot(eg, eg)))
    if norm == 0:
        raise DomainError("fidelity undefined for a zero-norm field")
    corr = np.correlate(ef, eg, mode="full")
    i = int(np.argmax(corr))
    best = corr[i]
    if 0 < i < corr.size - 1:
        _, best = _parabolic_vertex(corr, i)
    return float(min(max(best / norm, 0.0), 1.0))


def l2_relative_deviation(f: FieldSamples, reference: FieldSamples) -> float:
    _check_same_grid(f, reference)
    ref = float(np.linalg.norm(reference.values))
    if ref == 0:
        raise DomainError("reference field has zero norm")
    return float(np.linalg.norm(f.values - reference.values)) / ref


def spectral_centroid(coefficient: Coefficient, spec: PacketSpec) -> float:
    """Power-weighted mean frequency of ``c(omega) A(omega)`` on the quadrature grid."""
    omegas = spec.omega_grid()
    vals = _coefficient_values(coefficient, omegas)
    w = simpson_weights(omegas.size, omegas[1] - omegas[0])
    power = np.abs(vals * gaussian_spectrum(omegas, spec)) ** 2
    total = float(np.dot(w, power))
    if total == 0:
        raise DomainError("spectral centroid undefined: zero total weight")
    return float(np.dot(w, omegas * power)) / total


def spectral_energy(coefficient: Coefficient, spec: PacketSpec) -> float:
    """``2 pi * integral |c A|^2 d omega``, the time-domain energy by Parseval."""
    omegas = spec.omega_grid()
    vals = _coefficient_values(coefficient, omegas)
    w = simpson_weights(omegas.size, omegas[1] - omegas[0])
    return 2.0 * math.pi * float(np.dot(w, np.abs(vals * gaussian_spectrum(omegas, spec)) ** 2))


@dataclass(frozen=True)
class FirstOrderPrediction:
    tau_phi: float
    tau_n: float
    amplitude: complex
    carrier_shift: float


def first_order_prediction(spec: PacketSpec, report: DelayReport) -> FirstOrderPrediction:
    tau2 = spec.tau ** 2
    t0 = report.coefficient0
    c = math.sqrt(2 * math.pi) * t0 * math.exp(report.tau_n ** 2 / (2 * tau2)) \
        * np.exp(1j * report.tau_n * report.tau_phi / tau2)
    return FirstOrderPrediction(report.tau_phi, report.tau_n, complex(c), report.tau_n / tau2)


def first_order_packet(spec: PacketSpec, report: DelayReport, times) -> FieldSamples:
    """Gaussian predicted by linearising ``ln T`` about the carrier:
    delayed by ``tau_phi`` and carried at ``omega0 + tau_n / tau^2``."""
    times = np.asarray(times, dtype=float)
    pred = first_order_prediction(spec, report)
    psi = pred.amplitude * np.exp(-(times - pred.tau_phi) ** 2 / (2 * spec.tau ** 2)) \
        * np.exp(-1j * (spec.omega0 + pred.carrier_shift) * times)
    return FieldSamples(times, psi, "predicted",
                        {"tau_phi": pred.tau_phi, "tau_n": pred.tau_n,
                         "carrier_shift": pred.carrier_shift})
