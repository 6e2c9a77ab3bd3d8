"""Microwave control power for a magnetic-dipole qubit driven by a circular waveguide TE11 mode.

The ion sits on the waveguide axis. Given the Rabi frequency, the field
amplitude there fixes the mode amplitude, and integrating the time-averaged
Poynting flux over the cross-section gives the carried power.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from scipy.integrate import quad
from scipy.optimize import bisect

# CODATA 2018
HBAR = 1.054571817e-34  # J s
H_PLANCK = 6.62607015e-34  # J s
C_LIGHT = 299792458.0  # m / s
MU_0 = 1.25663706212e-6  # N / A^2
MU_B = 9.2740100783e-24  # J / T
E_CHARGE = 1.602176634e-19  # C

_SERIES_LIMIT = 8.0


class BelowCutoffError(ValueError):
    """The TE11 mode does not propagate (evanescent) at this frequency and radius."""


def _j_series(n: int, x: float) -> float:
    half = 0.5 * x
    term = half**n / math.factorial(n)
    total = term
    k = 0
    while True:
        k += 1
        term *= -(half * half) / (k * (k + n))
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1e-300):
            return total


def _j_miller(n: int, x: float) -> float:
    # backward recurrence, normalised with J0 + 2 * sum(J_2k) = 1
    m = 2 * ((max(n, int(x)) + 20 + int(math.sqrt(40 * max(n, x)))) // 2)
    j_next, j_cur = 0.0, 1e-30
    norm = 0.0
    result = 0.0
    for k in range(m, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            result *= 1e-250
            norm *= 1e-250
        if k - 1 == n:
            result = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
    norm += j_cur
    return result / norm


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind ``J_n(x)`` for integer ``n``."""
    if n < 0:
        return (-1) ** n * bessel_j(-n, x)
    if x < 0:
        return (-1) ** n * bessel_j(n, -x)
    if x == 0:
        return 1.0 if n == 0 else 0.0
    if x <= _SERIES_LIMIT:
        return _j_series(n, x)
    return _j_miller(n, x)


def bessel_jp(n: int, x: float) -> float:
    """Derivative ``J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2``."""
    return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))


def _j_over_x(n: int, x: float) -> float:
    if x == 0:
        return 0.5 if n == 1 else 0.0
    return bessel_j(n, x) / x


def mode_root(n: int = 1, m: int = 1) -> float:
    """First zero of ``J_1'``, the TE11 cutoff constant; only ``(1, 1)`` is supported."""
    if (n, m) != (1, 1):
        raise ValueError("only the TE11 mode root is supported")
    return bisect(lambda x: bessel_jp(1, x), 1.5, 2.5, xtol=1e-12, maxiter=200)


P11 = mode_root()


def i11_integrand(r: float) -> float:
    return (_j_over_x(1, r) ** 2 + bessel_jp(1, r) ** 2) * r


def i11_integral(tol: float = 1e-6) -> float:
    """Cross-section integral ``int_0^p11 [(J1(r)/r)^2 + J1'(r)^2] r dr``."""
    value, _ = quad(i11_integrand, 0.0, P11, epsabs=tol, epsrel=0.0, limit=200)
    return value


I11 = i11_integral(1e-10)


@dataclass(frozen=True)
class WaveguideGeometry:
    radius: float = 8.15e-3
    frequency: float = 12.6e9

    def __post_init__(self):
        if self.radius <= 0 or self.frequency <= 0:
            raise ValueError("radius and frequency must be positive")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency


@dataclass(frozen=True)
class DipoleParams:
    mu: float = MU_B
    theta: float = 0.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("dipole moment must be positive")


@dataclass(frozen=True)
class PropagationParams:
    k: float
    k_c: float
    beta: float
    x: float


def propagation(g: WaveguideGeometry) -> PropagationParams:
    k = g.omega / C_LIGHT
    k_c = P11 / g.radius
    x = C_LIGHT * P11 / (g.omega * g.radius)
    if x >= 1.0:
        raise BelowCutoffError(f"TE11 is below cutoff (x = {x:.4f} >= 1) for a = {g.radius} m, f = {g.frequency} Hz")
    return PropagationParams(k=k, k_c=k_c, beta=math.sqrt(k * k - k_c * k_c), x=x)


def te_fields(n: int, rho: float, phi: float, g: WaveguideGeometry, b0: float = 1.0) -> dict[str, complex]:
    """Complex TE_n1 field amplitudes at ``z = t = 0`` (mode orientation ``phi0 = 0``)."""
    pp = propagation(g) if n == 1 else None
    if pp is None:
        raise ValueError("field evaluation is implemented for n = 1 only")
    kc, beta, w = pp.k_c, pp.beta, g.omega
    r = kc * rho
    jr = _j_over_x(n, r)
    jp = bessel_jp(n, r)
    s, c = math.sin(n * phi), math.cos(n * phi)
    return {
        "E_rho": 1j * w * b0 * n / kc * jr * s,
        "E_phi": 1j * w * b0 / kc * jp * c,
        "B_rho": -1j * beta * b0 / kc * jp * c,
        "B_phi": 1j * beta * b0 * n / kc * jr * s,
        "B_z": b0 * bessel_j(n, r) * c,
    }


def areas(g: WaveguideGeometry, d: DipoleParams = DipoleParams()) -> tuple[float, float]:
    """Effective radiated wavefront area and dipole cross-section, both in m^2."""
    pp = propagation(g)
    a_rad = 4.0 * I11 / P11**2 * math.pi * g.radius**2 / math.sqrt(1.0 - pp.x**2)
    a_dip = MU_0 * d.mu**2 / (HBAR * C_LIGHT)
    return a_rad, a_dip


@dataclass(frozen=True)
class PowerEstimate:
    p_watts: float
    b_amp_tesla: float
    b0_tesla: float
    a_rad_m2: float
    a_dip_m2: float
    x: float

    def to_dict(self) -> dict:
        return asdict(self)


def power_required(omega_r: float, g: WaveguideGeometry = WaveguideGeometry(), d: DipoleParams = DipoleParams()) -> PowerEstimate:
    """Microwave power needed for Rabi frequency ``omega_r`` (rad/s) at the waveguide axis."""
    cos_t = math.cos(d.theta)
    if abs(cos_t) < 1e-12:
        raise ValueError("dipole perpendicular to the field: no coupling")
    pp = propagation(g)
    a_rad, a_dip = areas(g, d)
    b_amp = HBAR * omega_r / (d.mu * cos_t)
    b0 = 2.0 * pp.k_c / pp.beta * b_amp
    p = 0.5 * a_rad / a_dip * HBAR * omega_r**2 / cos_t**2
    return PowerEstimate(p, b_amp, b0, a_rad, a_dip, pp.x)


def pi_pulse_energy(omega_r: float, g: WaveguideGeometry = WaveguideGeometry(), d: DipoleParams = DipoleParams()) -> float:
    """Energy of a pi pulse, ``P * pi / omega_r``; linear in ``omega_r``."""
    return power_required(omega_r, g, d).p_watts * math.pi / omega_r


def photon_count(energy: float, frequency: float) -> float:
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    return energy / (H_PLANCK * frequency)


def one_photon_limit(omega_r: float) -> float:
    """Pi-pulse energy when the radiated area shrinks to the dipole cross-section: ``(pi/2) hbar omega_r``."""
    return 0.5 * math.pi * HBAR * omega_r


def joules_to_ev(energy: float) -> float:
    return energy / E_CHARGE
