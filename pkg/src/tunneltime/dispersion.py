"""Dispersion relations and derived scales for a rectangular well or barrier.

Frequencies are angular (``omega = E / hbar``).  All wavenumber functions
accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DomainError


class Kind(str, Enum):
    WELL = "well"
    BARRIER = "barrier"


@dataclass(frozen=True)
class ScatterRegion:
    """Rectangular potential occupying ``0 <= x <= a``.

    ``v0`` is the magnitude of the potential; ``kind`` fixes its sign
    (well: ``-v0``, barrier: ``+v0``).  ``v0 = 0`` is accepted as the
    free-particle control case.
    """

    kind: Kind
    v0: float
    a: float
    mu: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        for name in ("v0", "a", "mu", "hbar"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.v0 >= 0.0:
            raise DomainError(f"v0 must be >= 0, got {self.v0}")
        for name in ("a", "mu", "hbar"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def potential(self) -> float:
        """Signed potential inside the region."""
        return -self.v0 if self.kind is Kind.WELL else self.v0

    def with_thickness(self, a: float) -> "ScatterRegion":
        return ScatterRegion(self.kind, self.v0, a, self.mu, self.hbar)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


@dataclass(frozen=True)
class DispersionSample:
    omega: float
    k: float
    k_inside: complex


def _check_omega(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0) or np.any(np.isnan(omega)):
        raise DomainError("omega must be >= 0; truncate the spectrum at zero frequency")
    return omega


def outside_wavenumber(omega, region: ScatterRegion):
    """Free-space wavenumber ``sqrt(2 mu hbar omega) / hbar``."""
    omega = _check_omega(omega)
    # same association as inside_wavenumber, so v0 = 0 matches bit for bit
    k = np.sqrt(2.0 * region.mu * (region.hbar * omega)) / region.hbar
    return k if k.ndim else float(k)


def inside_wavenumber(omega, region: ScatterRegion):
    """Wavenumber inside the region, on the branch with ``Im >= 0``.

    Below a barrier top this is ``i*kappa`` with ``kappa > 0``.  The real
    and imaginary cases are taken with a real square root each, so that
    ``v0 = 0`` reproduces :func:`outside_wavenumber` bit for bit.
    """
    omega = _check_omega(omega)
    arg = 2.0 * region.mu * (region.hbar * omega - region.potential)
    root = np.sqrt(np.abs(arg)) / region.hbar
    kin = np.where(arg >= 0, root + 0j, 1j * root)
    return kin if kin.ndim else complex(kin)


def dispersion_sample(omega: float, region: ScatterRegion) -> DispersionSample:
    return DispersionSample(float(omega), outside_wavenumber(omega, region),
                            inside_wavenumber(omega, region))


def is_evanescent(omega, region: ScatterRegion) -> bool:
    return region.kind is Kind.BARRIER and region.hbar * omega < region.v0


@dataclass(frozen=True)
class CharacteristicScales:
    """Scales at the carrier frequency.

    ``v_g`` and ``t1`` are ``None`` under a barrier top, where the region
    supports no propagating wave.  ``tau_u`` is then ``None`` too unless
    the kappa-based variant was requested.
    """

    k0: float
    k_inside0: complex
    v_g: Optional[float]
    tau_u: Optional[float]
    t1: Optional[float]

    def to_dict(self) -> dict:
        return {
            "k0": self.k0,
            "k_inside0_re": self.k_inside0.real,
            "k_inside0_im": self.k_inside0.imag,
            "v_g": self.v_g,
            "tau_u": self.tau_u,
            "t1": self.t1,
        }


def characteristic_scales(omega0: float, region: ScatterRegion,
                          evanescent_tau_u: bool = False) -> CharacteristicScales:
    """Group velocity inside the region, the time unit ``mu/(hbar k0 k0')``
    and the single-pass time ``t1 = a / v_g``.

    Parameters
    ----------
    omega0 : float
        Carrier frequency, > 0.
    region : ScatterRegion
    evanescent_tau_u : bool
        For a barrier below its top, build ``tau_u`` from ``kappa0`` in
        place of ``k0'``.
    """
    if not omega0 > 0:
        raise DomainError(f"omega0 must be > 0, got {omega0}")
    k0 = outside_wavenumber(omega0, region)
    kin = inside_wavenumber(omega0, region)
    mu, hbar = region.mu, region.hbar
    if kin.real > 0:
        v_g = hbar * kin.real / mu
        return CharacteristicScales(k0, kin, v_g, mu / (hbar * k0 * kin.real), region.a / v_g)
    tau_u = mu / (hbar * k0 * kin.imag) if evanescent_tau_u and kin.imag > 0 else None
    return CharacteristicScales(k0, kin, None, tau_u, None)


def condition_ratio(omega0: float, region: ScatterRegion, tau: float) -> float:
    """Shape-preservation ratio ``a / (v_g tau)``; small means the
    transmitted packet keeps the incident profile."""
    scales = characteristic_scales(omega0, region)
    if scales.v_g is None:
        return math.nan
    return region.a / (scales.v_g * tau)
