"""Pauli transfer matrices, subset depolarizing noise and the Half-Adder circuit model.

PTMs use the normalised convention ``R_ij = tr(P_i L(P_j)) / 2**n`` with
Pauli strings in lexicographic ``I, X, Y, Z`` order, so the identity
channel is the identity matrix.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import bisect

from .linalg import embed, is_unitary, pauli_basis, pauli_labels
from .metrics import TruthTable

SQ2 = 1.0 / math.sqrt(2.0)

GATES = {
    "H": np.array([[SQ2, SQ2], [SQ2, -SQ2]], dtype=complex),
    "T": np.diag([1.0, np.exp(1j * math.pi / 4)]),
    "Tdg": np.diag([1.0, np.exp(-1j * math.pi / 4)]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}


@lru_cache(maxsize=None)
def _basis(n: int) -> np.ndarray:
    return pauli_basis(n)


def ptm_of_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    n = int(round(math.log2(u.shape[0])))
    if u.shape != (2**n, 2**n) or not is_unitary(u):
        raise ValueError("ptm_of_unitary requires a unitary on whole qubits")
    p = _basis(n)
    conj = np.einsum("ab,jbc,dc->jad", u, p, u.conj())  # U P_j U^dagger
    r = np.einsum("iab,jba->ij", p, conj).real / 2**n
    return r


def ptm_of_channel(kraus: Iterable[np.ndarray]) -> np.ndarray:
    """PTM of a channel given by Kraus operators."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    n = int(round(math.log2(kraus[0].shape[0])))
    p = _basis(n)
    out = sum(np.einsum("ab,jbc,dc->jad", k, p, k.conj()) for k in kraus)
    return np.einsum("iab,jba->ij", p, out).real / 2**n


def depolarizing_diagonal(n: int, lam: float, subset: Iterable[int]) -> np.ndarray:
    """Diagonal of the PTM that depolarizes ``subset`` with strength ``lam``.

    A Pauli string is left alone when it is the identity on every qubit
    of ``subset``, and scaled by ``lam`` otherwise.
    """
    subset = sorted(set(subset))
    if not subset:
        raise ValueError("depolarizing subset is empty")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    return np.array([1.0 if all(lbl[q] == "I" for q in subset) else lam for lbl in pauli_labels(n)])


def depolarize(r: np.ndarray, lam: float, subset: Iterable[int]) -> np.ndarray:
    n = int(round(math.log(r.shape[0], 4)))
    return depolarizing_diagonal(n, lam, subset)[:, None] * r


@dataclass(frozen=True)
class CircuitGate:
    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GATES:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind == "CNOT" else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} acts on {arity} qubit(s)")
        if self.kind == "CNOT" and abs(self.qubits[0] - self.qubits[1]) != 1:
            raise ValueError("CNOT must act on neighbouring qubits")

    def unitary(self, n: int) -> np.ndarray:
        return embed(GATES[self.kind], list(self.qubits), n)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "qubits": list(self.qubits)}


@dataclass(frozen=True)
class NoiseSpec:
    lambda_h: float = 0.999
    lambda_t: float = 1.0
    lambda_cnot: float = 1.0

    def __post_init__(self):
        for v in (self.lambda_h, self.lambda_t, self.lambda_cnot):
            if not 0.0 <= v <= 1.0:
                raise ValueError("lambda values must lie in [0, 1]")

    def for_kind(self, kind: str) -> float:
        if kind == "H":
            return self.lambda_h
        if kind in ("T", "Tdg"):
            return self.lambda_t
        return self.lambda_cnot


def load_circuit(path: str | Path | None = None) -> list[CircuitGate]:
    """Read a circuit file (JSON list of ``{kind, qubits}``); default is the bundled decomposition."""
    if path is None:
        text = resources.files("ionlogic.data").joinpath("half_adder_decomposition.json").read_text()
    else:
        text = Path(path).read_text()
    return [CircuitGate(g["kind"], tuple(g["qubits"])) for g in json.loads(text)]


def save_circuit(circuit: Sequence[CircuitGate], path: str | Path) -> None:
    Path(path).write_text(json.dumps([g.to_dict() for g in circuit], indent=1) + "\n")


def cancel_adjacent_cnots(circuit: Sequence[CircuitGate]) -> list[CircuitGate]:
    """Drop consecutive identical CNOT pairs (each CNOT is its own inverse)."""
    out: list[CircuitGate] = []
    for g in circuit:
        if out and g.kind == "CNOT" and out[-1] == g:
            out.pop()
        else:
            out.append(g)
    return out


def half_adder_circuit(cancel: bool = True) -> list[CircuitGate]:
    """Nearest-neighbour decomposition: Toffoli (target 1) then CNOT 0 -> 2 through a swap.

    With ``cancel`` the two identical CNOTs meeting at the Toffoli/CNOT
    boundary are removed, leaving 11 CNOTs.
    """
    c = load_circuit()
    return cancel_adjacent_cnots(c) if cancel else c


def circuit_unitary(circuit: Sequence[CircuitGate], n: int = 3) -> np.ndarray:
    u = np.eye(2**n, dtype=complex)
    for g in circuit:
        u = g.unitary(n) @ u
    return u


def circuit_ptm(circuit: Sequence[CircuitGate], noise: NoiseSpec | None = None, n: int = 3) -> np.ndarray:
    """Product of gate PTMs, each followed by depolarizing noise on the gate's qubits."""
    noise = noise or NoiseSpec(1.0, 1.0, 1.0)
    r = np.eye(4**n)
    cache: dict[CircuitGate, np.ndarray] = {}
    for g in circuit:
        if g not in cache:
            cache[g] = ptm_of_unitary(g.unitary(n))
        step = cache[g]
        lam = noise.for_kind(g.kind)
        if lam != 1.0:
            step = depolarize(step, lam, g.qubits)
        r = step @ r
    return r


@lru_cache(maxsize=None)
def _z_expansions(n: int) -> np.ndarray:
    """Row x holds ``tr(P_i |x><x|)`` for every Pauli string i."""
    labels = pauli_labels(n)
    out = np.zeros((2**n, 4**n))
    for x in range(2**n):
        bits = format(x, f"0{n}b")
        for i, lbl in enumerate(labels):
            if set(lbl) <= {"I", "Z"}:
                out[x, i] = np.prod([-1.0 if (c == "Z" and b == "1") else 1.0 for c, b in zip(lbl, bits)])
    return out


def transition_probabilities(r: np.ndarray) -> np.ndarray:
    """``p[x, y] = <y| L(|x><x|) |y>`` for a channel with PTM ``r``."""
    n = int(round(math.log(r.shape[0], 4)))
    c = _z_expansions(n)
    return c @ r.T @ c.T / 2**n


def classical_fidelity_from_ptm(r: np.ndarray, tt: TruthTable) -> float:
    p = transition_probabilities(r)
    return float(np.mean(p[np.arange(p.shape[0]), list(tt.mapping)]))


def half_adder_fidelity(lambda_cnot: float, lambda_h: float = 0.999, circuit: Sequence[CircuitGate] | None = None) -> float:
    from .metrics import truth_table

    circuit = half_adder_circuit() if circuit is None else circuit
    r = circuit_ptm(circuit, NoiseSpec(lambda_h=lambda_h, lambda_cnot=lambda_cnot))
    return classical_fidelity_from_ptm(r, truth_table("half_adder"))


def cnot_classical_fidelity(lam: float) -> float:
    """Classical fidelity of a CNOT followed by two-qubit depolarizing noise."""
    return lam + (1.0 - lam) / 4.0


class UnreachableTargetError(RuntimeError):
    pass


@dataclass(frozen=True)
class EquivalentCNOT:
    lambda_cnot: float
    f_cnot: float
    f_half_adder: float

    def to_dict(self) -> dict:
        return {"lambda_cnot": self.lambda_cnot, "f_cnot": self.f_cnot, "f_half_adder": self.f_half_adder}


def equivalent_cnot_fidelity(target_f: float, lambda_h: float = 0.999, tol: float = 1e-6) -> EquivalentCNOT:
    """CNOT depolarizing strength for which the decomposed Half-Adder reaches ``target_f``.

    Bisection on ``lambda_cnot`` in [0, 1]; the circuit fidelity is
    monotone in it. ``f_cnot`` is the single-CNOT classical fidelity.
    """
    if not 0.125 < target_f <= 1.0:
        raise ValueError("target fidelity must lie in (0.125, 1]")
    circuit = half_adder_circuit()
    f = lambda lam: half_adder_fidelity(lam, lambda_h, circuit) - target_f  # noqa: E731
    top = f(1.0)
    if top < -tol:
        raise UnreachableTargetError(f"target {target_f} unreachable: noiseless-CNOT fidelity is {top + target_f:.6f}")
    if top <= tol:
        lam = 1.0
    elif f(0.0) >= 0:
        lam = 0.0
    else:
        lam = bisect(f, 0.0, 1.0, xtol=1e-12, maxiter=200)
    return EquivalentCNOT(lam, cnot_classical_fidelity(lam), f(lam) + target_f)
