"""Ising spin-chain Hamiltonians and piecewise-constant time evolution.

All frequencies are angular (rad/s) and Hamiltonians are returned as
``H / hbar``. The chain always has three qubits; the drive acts on
``target`` (the middle qubit by default).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .linalg import X, Y, Z, embed, expm_herm, expm_herm_batch

N_QUBITS = 3
TWO_PI = 2.0 * math.pi

ZZ = np.kron(Z, Z)


@dataclass(frozen=True)
class ChainParams:
    """Couplings and drive for one constant-Hamiltonian stretch.

    ``j13`` defaults to zero: the outer-qubit coupling only contributes a
    diagonal phase, which classical logic never sees.
    """

    j12: float = 0.0
    j23: float = 0.0
    j13: float = 0.0
    delta: float = 0.0
    omega: float = 0.0
    phi: float = 0.0
    target: int = 1

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("drive strength omega must be non-negative")
        if not all(math.isfinite(v) for v in (self.j12, self.j23, self.j13, self.delta, self.omega, self.phi)):
            raise ValueError("chain parameters must be finite")
        if self.target not in range(N_QUBITS):
            raise ValueError(f"target qubit {self.target} out of range")

    @classmethod
    def toffoli(cls, j: float, omega_ratio: float = 1.1, delta_ratio: float = 2.0, **kw) -> "ChainParams":
        """Operating point ``J12 = J23 = j``, ``delta = delta_ratio*j``, ``omega = omega_ratio*j``."""
        return cls(j12=j, j23=j, delta=delta_ratio * j, omega=omega_ratio * j, **kw)

    @classmethod
    def from_hz(cls, **kw_hz) -> "ChainParams":
        """Build from frequencies given in Hz (each multiplied by 2*pi); ``phi`` and ``target`` pass through."""
        kw = {k: (v if k in ("phi", "target") else TWO_PI * v) for k, v in kw_hz.items()}
        return cls(**kw)


@dataclass(frozen=True)
class LabParams:
    """Lab-frame description: chain parameters plus bare qubit frequencies and carrier."""

    chain: ChainParams
    omega_qubits: tuple[float, float, float]
    omega_x: float

    @classmethod
    def tuned(cls, chain: ChainParams, omega_qubits: Sequence[float]) -> "LabParams":
        """Carrier set to ``omega_target - delta``, the tuning that yields ``chain`` in the rotating frame."""
        oq = tuple(float(w) for w in omega_qubits)
        return cls(chain=chain, omega_qubits=oq, omega_x=oq[chain.target] - chain.delta)


def _zz_terms(p: ChainParams) -> np.ndarray:
    h = np.zeros((8, 8), dtype=complex)
    for (a, b), j in (((0, 1), p.j12), ((1, 2), p.j23), ((0, 2), p.j13)):
        if j:
            h += 0.5 * j * embed(ZZ, [a, b], N_QUBITS)
    return h


def build_h_rot(p: ChainParams, detunings: Sequence[float] | None = None) -> np.ndarray:
    """Rotating-frame Hamiltonian with drive axis ``cos(phi) X + sin(phi) Y`` on the target.

    ``detunings`` adds static ``(eps_i / 2) Z_i`` terms (quasi-static noise).
    """
    t = p.target
    h = _zz_terms(p)
    h += 0.5 * p.delta * embed(Z, [t], N_QUBITS)
    if p.omega:
        axis = math.cos(p.phi) * X + math.sin(p.phi) * Y
        h += 0.5 * p.omega * embed(axis, [t], N_QUBITS)
    if detunings is not None:
        for q, eps in enumerate(detunings):
            if eps:
                h += 0.5 * eps * embed(Z, [q], N_QUBITS)
    return h


def build_h_tof(p: ChainParams) -> np.ndarray:
    """Toffoli Hamiltonian: Ising couplings, detuning and an X drive on the target (phase ignored)."""
    return build_h_rot(replace(p, phi=0.0))


def evolve_piecewise(segments: Iterable[tuple[np.ndarray, float]], psi: np.ndarray) -> np.ndarray:
    """Apply ``exp(-i H_k t_k)`` for each ``(H_k, t_k)`` in order."""
    psi = np.asarray(psi, dtype=complex)
    for h, dt in segments:
        h = np.asarray(h)
        if h.shape != (psi.size, psi.size):
            raise ValueError(f"segment of shape {h.shape} does not match state of size {psi.size}")
        psi = expm_herm(h, dt) @ psi
    return psi


def toffoli_fidelity_of_unitary(u: np.ndarray) -> float:
    """Classical fidelity of ``u`` against the Toffoli with the middle qubit as target."""
    from .metrics import classical_fidelity, truth_table

    return classical_fidelity(np.abs(u.T) ** 2, truth_table("toffoli"))


@dataclass
class SweepResult:
    """Toffoli fidelity curve over the drive strength, sorted by ``omega_over_j``."""

    omega_over_j: np.ndarray
    gate_time: np.ndarray
    classical_fidelity: np.ndarray
    peaks: list[int] = field(default_factory=list)

    @property
    def rightmost_peak(self) -> int | None:
        return self.peaks[-1] if self.peaks else None

    def rows(self):
        return zip(self.omega_over_j, self.gate_time, self.classical_fidelity)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["omega_over_j", "gate_time_s", "classical_fidelity"])
            for r, t, f in self.rows():
                w.writerow([f"{r:.6g}", f"{t:.6g}", f"{f:.6g}"])


def find_peaks(values: Sequence[float]) -> list[int]:
    """Indices strictly greater than both neighbours."""
    v = np.asarray(values)
    return [i for i in range(1, len(v) - 1) if v[i] > v[i - 1] and v[i] > v[i + 1]]


def sweep_omega(j: float, delta_ratio: float, omega_grid: Sequence[float]) -> SweepResult:
    """Classical Toffoli fidelity of ``exp(-i H_TOF pi/Omega)`` for each ``Omega/J`` in ``omega_grid``."""
    ratios = np.sort(np.asarray(omega_grid, dtype=float))
    if ratios.size == 0:
        raise ValueError("omega grid is empty")
    if np.any(ratios <= 0):
        raise ValueError("omega values must be positive")
    omegas = ratios * j
    times = math.pi / omegas
    hs = np.array([build_h_tof(ChainParams.toffoli(j, r, delta_ratio)) for r in ratios])
    us = expm_herm_batch(hs, times)
    fid = np.array([toffoli_fidelity_of_unitary(u) for u in us])
    return SweepResult(ratios, times, fid, find_peaks(fid))


def _lab_hamiltonians(p: LabParams, times: np.ndarray) -> np.ndarray:
    c = p.chain
    static = _zz_terms(c)
    for q, w in enumerate(p.omega_qubits):
        static = static + 0.5 * w * embed(Z, [q], N_QUBITS)
    drive = embed(X, [c.target], N_QUBITS)
    amp = c.omega * np.cos(p.omega_x * times + c.phi)
    return static[None, :, :] + amp[:, None, None] * drive[None, :, :]


def rwa_validate(p: LabParams, steps_per_cycle: int = 50, duration: float | None = None) -> float:
    """Worst-case deviation between lab-frame and rotating-frame evolution over the 8 basis inputs.

    The lab Hamiltonian (explicit ``cos(omega_x t + phi)`` drive) is
    integrated with piecewise-constant midpoint steps. The returned gap is
    ``max_x sqrt(1 - |<R psi_rot | psi_lab>|^2)`` where ``R`` is the
    frame rotation at the final time; it scales linearly with the
    counter-rotating amplitude.
    """
    if steps_per_cycle < 50:
        raise ValueError("time step under-resolved: steps_per_cycle must be >= 50")
    c = p.chain
    if duration is None:
        duration = math.pi / c.omega if c.omega else 1e-3
    max_freq = max(abs(w) for w in (*p.omega_qubits, p.omega_x))
    n_steps = max(1, math.ceil(duration * max_freq / TWO_PI * steps_per_cycle))
    dt = duration / n_steps
    mid = (np.arange(n_steps) + 0.5) * dt

    u_lab = np.eye(8, dtype=complex)
    chunk = 4096
    for start in range(0, n_steps, chunk):
        us = expm_herm_batch(_lab_hamiltonians(p, mid[start:start + chunk]), dt)
        for u in us:
            u_lab = u @ u_lab

    u_rot = expm_herm(build_h_rot(c), duration)
    frame = [w for w in p.omega_qubits]
    frame[c.target] = p.omega_x
    h_frame = sum(0.5 * w * embed(Z, [q], N_QUBITS) for q, w in enumerate(frame))
    u_ref = expm_herm(h_frame, duration) @ u_rot

    # sqrt(1 - |<a|b>|^2) as the norm of b's component orthogonal to a (no cancellation)
    overlaps = np.einsum("ij,ij->j", u_ref.conj(), u_lab)
    residual = u_lab - u_ref * overlaps[None, :]
    return float(np.linalg.norm(residual, axis=0).max())
