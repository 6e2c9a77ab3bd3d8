"""Pulse programs for the Toffoli, CNOT and Half-Adder gates, and their execution.

A program is a list of constant-Hamiltonian segments interleaved with sets
of simultaneous single-qubit pulses. Dynamical-decoupling pulses change
the frame the remaining evolution has to be written in; the builder keeps
track of that frame per qubit and rewrites detuning and drive phase so
the compiled program equals the undecoupled evolution.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .dynamics import N_QUBITS, TWO_PI, ChainParams, build_h_rot
from .linalg import I2, X, Y, Z, expm_herm, kron, rotation

PI = math.pi
DEFAULT_J = TWO_PI * 31.0
DD_RABI = TWO_PI * 33e3
T_CNOT = 8.75e-3


def _wrap(phase: float) -> float:
    return phase % TWO_PI


@dataclass(frozen=True)
class PulseInstr:
    """Rotation by ``angle`` about the equatorial axis at ``phase`` on ``qubit``.

    ``duration is None`` means an instantaneous pulse; otherwise it is a
    top-hat pulse of Rabi frequency ``rabi`` lasting ``angle / rabi``.
    """

    qubit: int
    angle: float = PI
    phase: float = 0.0
    duration: float | None = None
    rabi: float | None = None

    def __post_init__(self):
        if (self.duration is None) != (self.rabi is None):
            raise ValueError("finite pulses need both duration and rabi")
        if self.duration is not None and abs(self.angle - self.rabi * self.duration) > 1e-9:
            raise ValueError("finite pulse must satisfy angle = rabi * duration")

    @classmethod
    def make(cls, qubit: int, angle: float, phase: float, mode: str = "instantaneous", rabi: float = DD_RABI):
        if mode == "instantaneous":
            return cls(qubit, angle, _wrap(phase))
        if mode == "finite":
            return cls(qubit, angle, _wrap(phase), duration=angle / rabi, rabi=rabi)
        raise ValueError(f"unknown pulse mode {mode!r}")

    @property
    def finite(self) -> bool:
        return self.duration is not None


@dataclass(frozen=True)
class Segment:
    """Free evolution under ``params`` for ``duration`` seconds (``params=None``: no Hamiltonian)."""

    params: ChainParams | None
    duration: float


@dataclass(frozen=True)
class Pulses:
    instrs: tuple[PulseInstr, ...]
    role: str = "dd"

    def __post_init__(self):
        qs = [p.qubit for p in self.instrs]
        if len(set(qs)) != len(qs):
            raise ValueError("a pulse set addresses each qubit at most once")
        durations = {p.duration for p in self.instrs}
        if len(durations) > 1:
            raise ValueError("simultaneous pulses must share one duration")

    @property
    def duration(self) -> float:
        d = self.instrs[0].duration if self.instrs else None
        return d or 0.0


Item = Union[Segment, Pulses]


@dataclass
class PulseProgram:
    n_qubits: int
    items: list[Item] = field(default_factory=list)
    name: str = ""

    @property
    def segments(self) -> list[Segment]:
        return [it for it in self.items if isinstance(it, Segment)]

    @property
    def pulse_sets(self) -> list[Pulses]:
        return [it for it in self.items if isinstance(it, Pulses)]

    def segment_time(self) -> float:
        return math.fsum(s.duration for s in self.segments)

    def total_time(self) -> float:
        return self.segment_time() + math.fsum(p.duration for p in self.pulse_sets)

    def pulse_report(self) -> dict:
        """Counts of DD pi pulses and pi-pulse equivalents (a pi/2 pulse counts one half)."""
        dd = sum(len(p.instrs) for p in self.pulse_sets if p.role == "dd")
        gate = math.fsum(i.angle / PI for p in self.pulse_sets if p.role != "dd" for i in p.instrs)
        return {"dd_pi_pulses": dd, "gate_pi_equivalents": gate, "pi_pulse_equivalents": dd + gate}

    def __add__(self, other: "PulseProgram") -> "PulseProgram":
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot concatenate programs on different registers")
        return PulseProgram(self.n_qubits, self.items + other.items, f"{self.name}+{other.name}")

    def to_dict(self) -> dict:
        items = []
        for it in self.items:
            if isinstance(it, Segment):
                items.append({"type": "segment", "duration": it.duration,
                              "params": None if it.params is None else asdict(it.params)})
            else:
                items.append({"type": "pulses", "role": it.role, "pulses": [asdict(p) for p in it.instrs]})
        return {"name": self.name, "n_qubits": self.n_qubits, "items": items}

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "PulseProgram":
        items: list[Item] = []
        for it in d["items"]:
            if it["type"] == "segment":
                params = None if it["params"] is None else ChainParams(**it["params"])
                items.append(Segment(params, it["duration"]))
            elif it["type"] == "pulses":
                items.append(Pulses(tuple(PulseInstr(**p) for p in it["pulses"]), it.get("role", "dd")))
            else:
                raise ValueError(f"unknown item type {it['type']!r}")
        return cls(d["n_qubits"], items, d.get("name", ""))


class FrameState:
    """Per-qubit toggling frame left behind by the pulses applied so far.

    Each qubit carries the map ``theta -> z_sign * theta + offset`` that a
    bare drive axis undergoes; ``z_sign`` is also the sign picked up by that
    qubit's sigma-z. A pi pulse at phase ``a`` reflects the axis about ``a``.
    With pulses at phases 0 and pi/2 only, a bare X axis is left unchanged
    by X pulses and shifted by pi by Y pulses.
    """

    def __init__(self, n: int):
        self.z_sign = [1] * n
        self.offset = [0.0] * n

    def apply_pi(self, qubit: int, phase: float) -> None:
        self.z_sign[qubit] = -self.z_sign[qubit]
        self.offset[qubit] = _wrap(2.0 * phase - self.offset[qubit])

    def phase(self, qubit: int, theta: float) -> float:
        return _wrap(self.z_sign[qubit] * theta + self.offset[qubit])

    @property
    def drive_phase_offset(self) -> list[float]:
        return list(self.offset)

    def is_identity(self, atol: float = 1e-9) -> bool:
        return all(s == 1 for s in self.z_sign) and all(
            min(o, TWO_PI - o) < atol for o in self.offset
        )


class ProgramBuilder:
    """Accumulates a program while rewriting logical operations into the current frame."""

    def __init__(self, n_qubits: int = N_QUBITS, name: str = "", mode: str = "instantaneous", rabi: float = DD_RABI):
        self.program = PulseProgram(n_qubits, [], name)
        self.frame = FrameState(n_qubits)
        self.mode = mode
        self.rabi = rabi

    def evolve(self, params: ChainParams | None, duration: float) -> "ProgramBuilder":
        """Logical evolution; the driven qubit's detuning and drive phase follow the frame.

        Ising terms are emitted unchanged: they are invariant only if both
        partners were flipped equally often, which is how DD on gate qubits
        keeps them and averages out couplings to undecoupled spectators.
        """
        if params is not None:
            t = params.target
            s = self.frame.z_sign[t]
            params = replace(params, delta=s * params.delta, phi=self.frame.phase(t, params.phi))
        self.program.items.append(Segment(params, duration))
        return self

    def dd(self, phases: dict[int, float]) -> "ProgramBuilder":
        """Simultaneous physical pi pulses ``{qubit: phase}``; updates the frame."""
        instrs = tuple(PulseInstr.make(q, PI, ph, self.mode, self.rabi) for q, ph in sorted(phases.items()))
        self.program.items.append(Pulses(instrs, "dd"))
        for q, ph in phases.items():
            self.frame.apply_pi(q, ph)
        return self

    def rotate(self, qubit: int, angle: float, phase: float, role: str = "gate") -> "ProgramBuilder":
        """Logical rotation; its phase is mapped into the current frame (angle unchanged)."""
        instr = PulseInstr.make(qubit, angle, self.frame.phase(qubit, phase), self.mode, self.rabi)
        self.program.items.append(Pulses((instr,), role))
        return self

    def build(self) -> PulseProgram:
        return self.program


def cpmg_xy(n: int) -> list[float]:
    """Alternating X/Y phases ``0, pi/2, 0, pi/2, ...``."""
    if n < 1:
        raise ValueError("n must be positive")
    return [0.0 if k % 2 == 0 else PI / 2 for k in range(n)]


def ur_sequence(n: int, big_phi: float | None = None, phi2: float | None = None) -> list[float]:
    """Universal-robust phases ``(k-1)(k-2)/2 * big_phi + (k-1) * phi2`` for ``k = 1..n``, wrapped to [0, 2pi).

    Defaults ``big_phi = 4 pi / n`` and ``phi2 = big_phi / 2`` make the
    composed pi pulses the identity up to a global phase.
    """
    if n < 4 or n % 2:
        raise ValueError("UR sequences need an even n >= 4")
    if big_phi is None:
        big_phi = 4.0 * PI / n
    if phi2 is None:
        phi2 = big_phi / 2.0
    return [_wrap((k - 1) * (k - 2) / 2 * big_phi + (k - 1) * phi2) for k in range(1, n + 1)]


def toffoli_gate_time(j: float = DEFAULT_J, omega_ratio: float = 1.1) -> float:
    return PI / (omega_ratio * j)


def _toffoli_into(b: ProgramBuilder, j, omega_ratio, n_blocks, delta_ratio, gate_time, dd):
    params = ChainParams.toffoli(j, omega_ratio, delta_ratio)
    if gate_time is None:
        gate_time = toffoli_gate_time(j, omega_ratio)
    if not dd:
        return b.evolve(params, gate_time)
    half = gate_time / (2 * n_blocks)
    outer = ur_sequence(n_blocks)
    middle = cpmg_xy(n_blocks)
    for k in range(n_blocks):
        b.evolve(params, half)
        b.dd({0: outer[k], 1: middle[k], 2: outer[k]})
        b.evolve(params, half)
    return b


def toffoli_program(
    j: float = DEFAULT_J,
    omega_ratio: float = 1.1,
    n_blocks: int = 200,
    pulse_mode: str = "instantaneous",
    *,
    delta_ratio: float = 2.0,
    gate_time: float | None = None,
    dd: bool = True,
    rabi: float = DD_RABI,
) -> PulseProgram:
    """Toffoli (target qubit 1) with UR decoupling on qubits 0 and 2 and CPMG-XY on qubit 1.

    Each of the ``n_blocks`` blocks is ``T/(2 n) -- pi pulses -- T/(2 n)``
    where ``T = pi / Omega`` unless ``gate_time`` is given. ``dd=False``
    gives the bare single-segment evolution.
    """
    b = ProgramBuilder(N_QUBITS, "toffoli", pulse_mode, rabi)
    _toffoli_into(b, j, omega_ratio, n_blocks, delta_ratio, gate_time, dd)
    return b.build()


def _pair_couplings(pairs: dict[frozenset, float]) -> dict[str, float]:
    names = {frozenset((0, 1)): "j12", frozenset((1, 2)): "j23", frozenset((0, 2)): "j13"}
    out = {"j12": 0.0, "j23": 0.0, "j13": 0.0}
    for pair, j in pairs.items():
        out[names[pair]] += j
    return out


def cnot_default_coupling(t_cond: float = T_CNOT) -> float:
    """Coupling giving a conditional pi phase: ``J_ct * t_cond = pi / 2``."""
    return PI / (2.0 * t_cond)


def _cnot_into(b: ProgramBuilder, j_ct, t_cond, n_pulses, control, target, spectator, spectator_j):
    if len({control, target, spectator}) != 3:
        raise ValueError("control, target and spectator must be distinct")
    if j_ct is None:
        j_ct = cnot_default_coupling(t_cond)
    couplings = {frozenset((control, target)): j_ct}
    if spectator_j:
        couplings[frozenset((control, spectator))] = spectator_j
        couplings[frozenset((target, spectator))] = spectator_j
    params = ChainParams(**_pair_couplings(couplings), target=target)
    half = t_cond / (2 * n_pulses)
    phases = ur_sequence(n_pulses)
    b.rotate(target, PI / 2, 0.0)
    for k in range(n_pulses):
        b.evolve(params, half)
        b.dd({control: phases[k], target: phases[k]})
        b.evolve(params, half)
    b.rotate(target, PI / 2, 3 * PI / 2)
    return b


def cnot_program(
    j_ct: float | None = None,
    t_cond: float = T_CNOT,
    n_pulses: int = 120,
    control: int = 0,
    target: int = 2,
    spectator: int = 1,
    *,
    spectator_j: float = 0.0,
    pulse_mode: str = "instantaneous",
    rabi: float = DD_RABI,
) -> PulseProgram:
    """Ramsey-type CNOT: pi/2 on the target, Ising evolution under UR decoupling, pi/2 at phase 3pi/2.

    ``spectator_j`` switches on the couplings of the spectator to both
    gate qubits; the DD pulses on the gate qubits average them out.
    """
    b = ProgramBuilder(N_QUBITS, "cnot", pulse_mode, rabi)
    _cnot_into(b, j_ct, t_cond, n_pulses, control, target, spectator, spectator_j)
    return b.build()


def half_adder_program(
    j: float = DEFAULT_J,
    omega_ratio: float = 1.1,
    n_blocks: int = 200,
    t_cond: float = T_CNOT,
    n_pulses: int = 120,
    *,
    j_ct: float | None = None,
    spectator_j: float | None = None,
    pulse_mode: str = "instantaneous",
    rabi: float = DD_RABI,
) -> PulseProgram:
    """Toffoli onto qubit 1 followed by CNOT from qubit 0 to qubit 2, in one frame.

    Spectator couplings during the CNOT default to ``j`` (the chain is
    always coupled).
    """
    if spectator_j is None:
        spectator_j = j
    b = ProgramBuilder(N_QUBITS, "half_adder", pulse_mode, rabi)
    _toffoli_into(b, j, omega_ratio, n_blocks, 2.0, None, True)
    _cnot_into(b, j_ct, t_cond, n_pulses, 0, 2, 1, spectator_j)
    return b.build()


def not_program(qubit: int, pulse_mode: str = "instantaneous", rabi: float = DD_RABI) -> PulseProgram:
    b = ProgramBuilder(N_QUBITS, f"not{qubit}", pulse_mode, rabi)
    return b.rotate(qubit, PI, 0.0).build()


def ramsey_program(wait: float, pulse_mode: str = "instantaneous", rabi: float = DD_RABI) -> PulseProgram:
    """Single qubit: pi/2, free evolution for ``wait``, pi/2 (same phase)."""
    b = ProgramBuilder(1, "ramsey", pulse_mode, rabi)
    return b.rotate(0, PI / 2, 0.0).evolve(None, wait).rotate(0, PI / 2, 0.0).build()


@dataclass(frozen=True)
class NoiseModel:
    """Quasi-static Gaussian dephasing: per-shot static detunings ``eps_i ~ N(0, sigma^2)``.

    ``sigma`` defaults to ``sqrt(2) / t2_star`` so that Ramsey contrast
    ``exp(-sigma^2 t^2 / 2)`` drops to ``1/e`` at ``t = t2_star``.
    """

    t2_star: float = 200e-6
    samples: int = 500
    seed: int = 0
    sigma_override: float | None = None

    @property
    def sigma(self) -> float:
        if self.sigma_override is not None:
            return self.sigma_override
        return math.sqrt(2.0) / self.t2_star

    @classmethod
    def from_sigma(cls, sigma: float, samples: int = 500, seed: int = 0) -> "NoiseModel":
        return cls(t2_star=math.inf, samples=samples, seed=seed, sigma_override=sigma)


def _pulse_set_unitary(p: Pulses, n: int, eps: np.ndarray | None) -> np.ndarray:
    by_qubit = {i.qubit: i for i in p.instrs}
    factors = []
    for q in range(n):
        instr = by_qubit.get(q)
        if not p.instrs or not p.instrs[0].finite:
            factors.append(I2 if instr is None else rotation(instr.angle, instr.phase))
            continue
        # finite pulses: couplings off, qubits evolve independently
        h = np.zeros((2, 2), dtype=complex)
        if instr is not None:
            h += 0.5 * instr.rabi * (math.cos(instr.phase) * X + math.sin(instr.phase) * Y)
        if eps is not None and eps[q]:
            h += 0.5 * eps[q] * Z
        factors.append(expm_herm(h, p.duration))
    return kron(*factors)


def _segment_hamiltonian(s: Segment, n: int, eps: np.ndarray | None) -> np.ndarray:
    if s.params is not None:
        return build_h_rot(s.params, eps)
    h = np.zeros((2**n, 2**n), dtype=complex)
    if eps is not None:
        diag = np.zeros(2**n)
        for q in range(n):
            z = np.array([1.0 if ((idx >> (n - 1 - q)) & 1) == 0 else -1.0 for idx in range(2**n)])
            diag += 0.5 * eps[q] * z
        h += np.diag(diag)
    return h


def program_unitary(prog: PulseProgram, eps: Sequence[float] | None = None) -> np.ndarray:
    """Unitary of ``prog`` with optional static detunings ``eps`` (rad/s per qubit).

    Instantaneous pulses are noiseless; finite pulses and segments see ``eps``.
    """
    n = prog.n_qubits
    eps_arr = None if eps is None else np.asarray(eps, dtype=float)
    cache: dict = {}
    u = np.eye(2**n, dtype=complex)
    for it in prog.items:
        key = it
        op = cache.get(key)
        if op is None:
            if isinstance(it, Segment):
                op = expm_herm(_segment_hamiltonian(it, n, eps_arr), it.duration)
            else:
                op = _pulse_set_unitary(it, n, eps_arr)
            cache[key] = op
        u = op @ u
    return u


def _probabilities(u: np.ndarray) -> np.ndarray:
    # rows: inputs, columns: outputs
    return np.abs(u.T) ** 2


def _sample_tables(prog: PulseProgram, sigma: float, seed: int, indices: range) -> np.ndarray:
    out = np.empty((len(indices), 2**prog.n_qubits, 2**prog.n_qubits))
    for k, i in enumerate(indices):
        rng = np.random.default_rng([seed, i])
        eps = rng.normal(0.0, sigma, prog.n_qubits)
        out[k] = _probabilities(program_unitary(prog, eps))
    return out


def execute_all(prog: PulseProgram, noise: NoiseModel | None = None, workers: int = 1) -> np.ndarray:
    """Outcome table (inputs x outputs) of ``prog``.

    With noise, the table is the Monte Carlo mean over ``noise.samples``
    detuning draws. Sample ``i`` uses the seed ``[noise.seed, i]`` and the
    per-sample tables are summed in index order, so the result does not
    depend on ``workers``.
    """
    if noise is None or noise.sigma == 0:
        if noise is not None and noise.samples < 1:
            raise ValueError("noise mode needs at least one sample")
        return _probabilities(program_unitary(prog))
    if noise.samples < 1:
        raise ValueError("noise mode needs at least one sample")
    n = noise.samples
    if workers <= 1:
        tables = _sample_tables(prog, noise.sigma, noise.seed, range(n))
    else:
        bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
        chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(_sample_tables, [prog] * len(chunks), [noise.sigma] * len(chunks),
                                  [noise.seed] * len(chunks), chunks))
        tables = np.concatenate(parts)
    return tables.sum(axis=0) / n


def execute(prog: PulseProgram, input_state: int | str, noise: NoiseModel | None = None, workers: int = 1) -> np.ndarray:
    """Outcome distribution over the basis states for one basis input."""
    idx = int(input_state, 2) if isinstance(input_state, str) else int(input_state)
    return execute_all(prog, noise, workers)[idx]
