"""Truth tables, outcome tables and classical fidelity for 3-bit reversible gates."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import bitstring

N_BITS = 3
N_STATES = 2**N_BITS


@dataclass(frozen=True)
class TruthTable:
    name: str
    mapping: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError(f"truth table {self.name!r} is not a bijection")

    def __call__(self, x: int) -> int:
        return self.mapping[x]

    def permutation_matrix(self) -> np.ndarray:
        """Row-stochastic table of the ideal gate (rows inputs, columns outputs)."""
        m = np.zeros((len(self.mapping), len(self.mapping)))
        m[np.arange(len(self.mapping)), self.mapping] = 1.0
        return m

    def then(self, other: "TruthTable") -> "TruthTable":
        return TruthTable(f"{self.name}+{other.name}", tuple(other(self(x)) for x in range(len(self.mapping))))


def _bits(x: int) -> list[int]:
    return [int(b) for b in bitstring(x, N_BITS)]


def _from_bits(bits: list[int]) -> int:
    return int("".join(map(str, bits)), 2)


def _cnot_map(control: int, target: int) -> tuple[int, ...]:
    out = []
    for x in range(N_STATES):
        b = _bits(x)
        b[target] ^= b[control]
        out.append(_from_bits(b))
    return tuple(out)


def truth_table(gate: str, qubit: int | None = None, control: int = 0, target: int = 2) -> TruthTable:
    """Canonical classical action of ``toffoli`` (controls 0, 2; target 1), ``cnot``, ``half_adder`` or ``not``.

    Qubit indices are 0-based; the default CNOT is controlled by qubit 0
    and acts on qubit 2.
    """
    gate = gate.lower().replace("-", "_")
    if gate == "toffoli":
        out = []
        for x in range(N_STATES):
            b = _bits(x)
            b[1] ^= b[0] & b[2]
            out.append(_from_bits(b))
        return TruthTable("toffoli", tuple(out))
    if gate == "cnot":
        return TruthTable("cnot", _cnot_map(control, target))
    if gate == "half_adder":
        return TruthTable("half_adder", truth_table("toffoli").then(truth_table("cnot", control=0, target=2)).mapping)
    if gate == "not":
        if qubit is None or qubit not in range(N_BITS):
            raise ValueError("not gate needs a qubit index in 0..2")
        out = []
        for x in range(N_STATES):
            b = _bits(x)
            b[qubit] ^= 1
            out.append(_from_bits(b))
        return TruthTable(f"not{qubit}", tuple(out))
    if gate == "identity":
        return TruthTable("identity", tuple(range(N_STATES)))
    raise ValueError(f"unknown gate {gate!r}")


def check_outcome_table(table: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    t = np.asarray(table, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError(f"outcome table must be square, got shape {t.shape}")
    if np.any(t < -atol) or not np.allclose(t.sum(axis=1), 1.0, atol=atol, rtol=0):
        raise ValueError("outcome table rows must be probability distributions")
    return t


def classical_fidelity(table: np.ndarray, tt: TruthTable) -> float:
    """Probability of the correct output averaged uniformly over all inputs."""
    t = check_outcome_table(table)
    idx = np.arange(t.shape[0])
    return float(np.mean(t[idx, list(tt.mapping)]))


def outcome_table(prog, noise=None, workers: int = 1) -> np.ndarray:
    """Outcome probabilities of ``prog`` for every basis input (rows) and output (columns)."""
    from .pulses import execute_all

    return execute_all(prog, noise, workers=workers)


def write_outcome_csv(table: np.ndarray, path: str | Path) -> None:
    t = check_outcome_table(table)
    n = int(np.log2(t.shape[0]))
    labels = [bitstring(i, n) for i in range(t.shape[0])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["input"] + [f"out{lbl}" for lbl in labels])
        for lbl, row in zip(labels, t):
            w.writerow([lbl] + [f"{max(p, 0.0):.6f}" for p in row])


def read_outcome_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(v) for v in r[1:]] for r in rows[1:]])
