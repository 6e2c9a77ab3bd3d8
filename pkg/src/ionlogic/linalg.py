"""Dense operator algebra for registers of a few qubits.

Conventions used throughout the package:

* ``|0>`` is the +1 eigenstate of sigma-z and ``|1>`` the -1 eigenstate.
* Qubits are indexed ``0 .. n-1`` from left to right; in a basis label
  ``b0 b1 b2`` qubit 0 is the most significant bit.
* Hamiltonians are stored as ``H / hbar`` in rad/s, so propagators are
  ``exp(-1j * h * t)``.
"""
from __future__ import annotations

from itertools import product
from typing import Sequence

import numpy as np

HERMITIAN_ATOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product of the operands, left operand acting on qubit 0."""
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def is_hermitian(h: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.max(np.abs(h - h.conj().T), initial=0.0) < atol


def expm_herm(h: np.ndarray, t: float) -> np.ndarray:
    """Propagator ``exp(-1j h t)`` via Hermitian eigendecomposition.

    Raises ``ValueError`` if ``h`` is not Hermitian to ``HERMITIAN_ATOL``
    (relative to its largest entry).
    """
    h = np.asarray(h, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    if not is_hermitian(h, HERMITIAN_ATOL * scale):
        raise ValueError("expm_herm requires a Hermitian matrix")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def expm_herm_batch(hs: np.ndarray, ts: np.ndarray | float) -> np.ndarray:
    """Stacked version of :func:`expm_herm` for an ``(k, d, d)`` array.

    Hermiticity is not re-checked; callers build ``hs`` from Hermitian terms.
    """
    w, v = np.linalg.eigh(hs)
    phases = np.exp(-1j * w * np.asarray(ts, dtype=float).reshape(-1, 1))
    return np.einsum("kij,kj,klj->kil", v, phases, v.conj())


def embed(op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Lift ``op`` acting on ``targets`` (in that order) to an ``n``-qubit operator."""
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target indices: {targets}")
    if any(q < 0 or q >= n for q in targets):
        raise ValueError(f"target indices {targets} out of range for {n} qubits")
    k = len(targets)
    op = np.asarray(op, dtype=complex)
    if op.shape != (2**k, 2**k):
        raise ValueError(f"operator of shape {op.shape} does not act on {k} qubits")
    rest = [q for q in range(n) if q not in targets]
    # build op (x) I on the ordering targets + rest, then permute axes back
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex)).reshape([2] * (2 * n))
    order = targets + rest
    perm = [order.index(q) for q in range(n)]
    full = full.transpose(perm + [n + p for p in perm])
    return full.reshape(2**n, 2**n)


def pauli_matrix(label: str) -> np.ndarray:
    """Matrix of a Pauli string such as ``"XZI"``."""
    if not label or any(ch not in PAULIS for ch in label):
        raise ValueError(f"invalid Pauli label {label!r}")
    return kron(*(PAULIS[ch] for ch in label))


def pauli_labels(n: int) -> list[str]:
    """All ``4**n`` Pauli strings in lexicographic order over ``I, X, Y, Z``."""
    return ["".join(p) for p in product("IXYZ", repeat=n)]


def pauli_basis(n: int) -> np.ndarray:
    """Stack of the ``4**n`` Pauli matrices, shape ``(4**n, 2**n, 2**n)``."""
    return np.array([pauli_matrix(lbl) for lbl in pauli_labels(n)])


def basis_state(bits: str | int, n: int | None = None) -> np.ndarray:
    """Computational basis vector from a bit string (``"101"``) or an index."""
    if isinstance(bits, str):
        n = len(bits)
        index = int(bits, 2)
    else:
        if n is None:
            raise ValueError("n is required when bits is an integer")
        index = int(bits)
    if not 0 <= index < 2**n:
        raise ValueError(f"basis index {index} out of range for {n} qubits")
    psi = np.zeros(2**n, dtype=complex)
    psi[index] = 1.0
    return psi


def bitstring(index: int, n: int) -> str:
    return format(index, f"0{n}b")


def rotation(angle: float, phase: float) -> np.ndarray:
    """Single-qubit rotation ``angle`` about the equatorial axis at ``phase``.

    ``rotation(pi, 0)`` is ``-1j * X`` and ``rotation(pi, pi/2)`` is ``-1j * Y``.
    """
    axis = np.cos(phase) * X + np.sin(phase) * Y
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * axis


def is_unitary(u: np.ndarray, atol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0)
