import json
import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionlogic import pulses
from ionlogic.dynamics import TWO_PI, ChainParams, build_h_rot
from ionlogic.linalg import Z, embed, expm_herm, rotation
from ionlogic.metrics import classical_fidelity, truth_table
from ionlogic.pulses import (
    FrameState,
    NoiseModel,
    ProgramBuilder,
    PulseInstr,
    PulseProgram,
    Pulses,
    Segment,
    cnot_program,
    cpmg_xy,
    execute,
    execute_all,
    half_adder_program,
    not_program,
    program_unitary,
    ramsey_program,
    toffoli_program,
    ur_sequence,
)

PI = math.pi


def up_to_global_phase(a, b):
    """max |a - e^{i g} b| minimised over the global phase g."""
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    ph = a[k] / b[k]
    return np.max(np.abs(a - ph / abs(ph) * b))


def compose_pi_pulses(phases):
    return reduce(lambda acc, ph: rotation(PI, ph) @ acc, phases, np.eye(2, dtype=complex))


# --- sequences ---------------------------------------------------------------

def test_cpmg_xy_basic():
    assert cpmg_xy(2) == [0.0, PI / 2]
    seq = cpmg_xy(200)
    assert seq.count(0.0) == 100 and seq.count(PI / 2) == 100
    with pytest.raises(ValueError):
        cpmg_xy(0)


def test_cpmg_xy_four_is_identity():
    assert up_to_global_phase(compose_pi_pulses(cpmg_xy(4)), np.eye(2)) < 1e-12


def test_ur_first_phase_zero_and_cpmg_case():
    assert ur_sequence(8, 1.234, 0.5)[0] == 0.0
    got = ur_sequence(4, PI, PI / 2)
    assert np.allclose(got, [0.0, PI / 2, 0.0, PI / 2], atol=1e-12)


@pytest.mark.parametrize("n", [4, 6, 8, 10, 20, 120, 200])
def test_ur_default_composes_to_identity(n):
    assert up_to_global_phase(compose_pi_pulses(ur_sequence(n)), np.eye(2)) < 1e-10


def test_ur_rejects_odd_or_short():
    for n in (2, 5):
        with pytest.raises(ValueError):
            ur_sequence(n)


# --- instructions and program structure --------------------------------------

def test_pulse_instr_finite_consistency():
    p = PulseInstr.make(0, PI, 0.0, "finite", pulses.DD_RABI)
    assert p.duration == pytest.approx(PI / pulses.DD_RABI)
    assert p.duration == pytest.approx(15.15e-6, rel=1e-3)
    with pytest.raises(ValueError):
        PulseInstr(0, PI, 0.0, duration=15e-6, rabi=pulses.DD_RABI * 1.01)
    with pytest.raises(ValueError):
        PulseInstr.make(0, PI, 0.0, "smooth")


def test_pulses_reject_duplicate_qubit():
    with pytest.raises(ValueError):
        Pulses((PulseInstr(0), PulseInstr(0)))


def test_toffoli_program_structure():
    prog = toffoli_program()
    segs = prog.segments
    assert len(segs) == 400 and len(prog.pulse_sets) == 200
    assert all(len(p.instrs) == 3 for p in prog.pulse_sets)
    assert prog.segment_time() == pytest.approx(pulses.toffoli_gate_time(), rel=1e-12)
    assert all(s.duration == pytest.approx(prog.segment_time() / 400) for s in segs)
    assert prog.pulse_report()["pi_pulse_equivalents"] == 600


def test_toffoli_delta_sequence():
    segs = toffoli_program().segments
    d = segs[0].params.delta
    assert d == pytest.approx(2 * pulses.DEFAULT_J)
    assert [s.params.delta for s in segs[:4]] == [d, -d, -d, d]


def test_toffoli_outer_and_middle_phases():
    sets = toffoli_program(n_blocks=8).pulse_sets
    ur = ur_sequence(8)
    for k, ps in enumerate(sets):
        ph = {i.qubit: i.phase for i in ps.instrs}
        assert ph[0] == pytest.approx(ur[k]) and ph[2] == pytest.approx(ur[k])
        assert ph[1] == cpmg_xy(8)[k]


def test_cnot_and_half_adder_reports():
    c = cnot_program().pulse_report()
    assert c["dd_pi_pulses"] == 240 and c["gate_pi_equivalents"] == pytest.approx(1.0)
    h = half_adder_program().pulse_report()
    assert h["dd_pi_pulses"] == 840 and h["pi_pulse_equivalents"] == pytest.approx(841)


def test_cnot_structure():
    prog = cnot_program()
    assert len(prog.segments) == 240
    first, last = prog.pulse_sets[0], prog.pulse_sets[-1]
    assert first.role == last.role == "gate"
    assert first.instrs[0].angle == PI / 2 and first.instrs[0].qubit == 2
    assert prog.segment_time() == pytest.approx(pulses.T_CNOT)
    j_ct = prog.segments[0].params.j13
    assert j_ct * pulses.T_CNOT == pytest.approx(PI / 2)
    assert j_ct / TWO_PI == pytest.approx(28.57, abs=0.01)


def test_json_round_trip(tmp_path):
    prog = half_adder_program(n_blocks=10, n_pulses=6, pulse_mode="finite")
    text = prog.to_json(tmp_path / "p.json")
    back = PulseProgram.from_dict(json.loads(text))
    assert back.items == prog.items and back.n_qubits == 3
    assert {it["type"] for it in json.loads(text)["items"]} == {"segment", "pulses"}
    assert np.array_equal(program_unitary(back), program_unitary(prog))


def test_json_unknown_type():
    with pytest.raises(ValueError):
        PulseProgram.from_dict({"n_qubits": 1, "items": [{"type": "wait"}]})


def test_concatenation():
    a, b = not_program(0), not_program(1)
    ab = a + b
    assert len(ab.items) == 2
    with pytest.raises(ValueError):
        a + ramsey_program(1e-6)


# --- frame bookkeeping --------------------------------------------------------

def test_frame_state_rules():
    f = FrameState(3)
    f.apply_pi(1, PI / 2)
    assert f.z_sign[1] == -1 and f.phase(1, 0.0) == pytest.approx(PI)
    f.apply_pi(1, 0.0)
    assert f.z_sign[1] == 1 and f.phase(1, 0.0) == pytest.approx(PI)
    f.apply_pi(1, PI / 2)
    f.apply_pi(1, PI / 2)
    assert f.phase(1, 0.3) == pytest.approx(0.3 + PI)
    assert not f.is_identity()


def logical_unitary(ops):
    """Bare logical evolution of a list of ("evolve", params, t) / ("rotate", q, angle, phase)."""
    u = np.eye(8, dtype=complex)
    for op in ops:
        if op[0] == "evolve":
            u = expm_herm(build_h_rot(op[1]), op[2]) @ u
        elif op[0] == "rotate":
            u = embed(rotation(op[2], op[3]), [op[1]], 3) @ u
    return u


phase_st = st.floats(0, 2 * PI)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.one_of(
            st.tuples(st.just("evolve"), st.floats(-3, 3), st.floats(0, 3), phase_st, st.floats(0.01, 1.0)),
            st.tuples(st.just("dd"), phase_st, phase_st, phase_st),
            st.tuples(st.just("rotate"), st.integers(0, 2), st.floats(0, 2 * PI), phase_st),
        ),
        min_size=1,
        max_size=8,
    ),
    st.integers(0, 2),
)
def test_frame_correctness_property(ops, target):
    # physical program == (product of physical pulses) @ (bare logical evolution)
    b = ProgramBuilder(3)
    logical = []
    pulses_only = np.eye(8, dtype=complex)
    for op in ops:
        if op[0] == "evolve":
            _, delta, omega, phi, t = op
            p = ChainParams(j12=0.7, j23=-0.4, j13=0.2, delta=delta, omega=omega, phi=phi, target=target)
            b.evolve(p, t)
            logical.append(("evolve", p, t))
        elif op[0] == "dd":
            b.dd({0: op[1], 1: op[2], 2: op[3]})
            pulses_only = reduce(np.kron, [rotation(PI, ph) for ph in op[1:]]) @ pulses_only
        else:
            b.rotate(op[1], op[2], op[3])
            logical.append(op)
    u_phys = program_unitary(b.build())
    u_expected = pulses_only @ logical_unitary(logical)
    assert np.max(np.abs(u_phys - u_expected)) < 1e-10


@pytest.mark.parametrize("n_blocks", [4, 8, 20])
def test_zz_echo_accumulates_linearly(n_blocks):
    j = TWO_PI * 30.0
    t_total = 5e-3
    p = ChainParams(j13=j)
    b = ProgramBuilder(3)
    seq = ur_sequence(n_blocks)
    for k in range(n_blocks):
        b.evolve(p, t_total / (2 * n_blocks))
        b.dd({0: seq[k], 2: seq[k]})
        b.evolve(p, t_total / (2 * n_blocks))
    u = program_unitary(b.build())
    expected = expm_herm(0.5 * j * embed(np.kron(Z, Z), [0, 2], 3), t_total)
    assert up_to_global_phase(u, expected) < 1e-10


# --- execution ---------------------------------------------------------------

def test_noiseless_toffoli_off_resonant_input():
    assert execute(toffoli_program(), "110")[0b110] >= 0.98


def test_dd_program_matches_bare_evolution():
    tt = truth_table("toffoli")
    bare = classical_fidelity(execute_all(toffoli_program(dd=False)), tt)
    dd = classical_fidelity(execute_all(toffoli_program()), tt)
    assert abs(dd - bare) < 1e-6
    assert bare == pytest.approx(0.9962227, abs=1e-6)


def test_not_program():
    for q in range(3):
        for mode in ("instantaneous", "finite"):
            t = execute_all(not_program(q, mode))
            assert classical_fidelity(t, truth_table("not", qubit=q)) == pytest.approx(1.0, abs=1e-10)


def test_cnot_noiseless():
    f = classical_fidelity(execute_all(cnot_program()), truth_table("cnot"))
    assert f >= 0.999
    f_spec = classical_fidelity(execute_all(cnot_program(spectator_j=pulses.DEFAULT_J)), truth_table("cnot"))
    assert f - f_spec < 1e-3


def test_half_adder_noiseless_action():
    t = execute_all(half_adder_program())
    assert t[0b101, 0b110] > 0.99
    assert classical_fidelity(t, truth_table("half_adder")) >= 0.97


def test_sigma_zero_bit_identical():
    prog = toffoli_program(n_blocks=20)
    assert np.array_equal(execute_all(prog, NoiseModel.from_sigma(0.0, samples=5)), execute_all(prog))


def test_noise_needs_samples():
    with pytest.raises(ValueError):
        execute_all(not_program(0), NoiseModel(samples=0))


def test_noise_calibration():
    assert NoiseModel(t2_star=200e-6).sigma == pytest.approx(math.sqrt(2) / 200e-6)


def test_worker_count_independence():
    prog = toffoli_program(n_blocks=20)
    noise = NoiseModel(200e-6, samples=12, seed=5)
    a = execute_all(prog, noise, workers=1)
    b = execute_all(prog, noise, workers=3)
    assert np.array_equal(a, b)
    assert np.array_equal(a, execute_all(prog, noise, workers=1))


def test_seed_changes_result():
    prog = toffoli_program(n_blocks=20, dd=False)
    a = execute_all(prog, NoiseModel(200e-6, samples=8, seed=1))
    b = execute_all(prog, NoiseModel(200e-6, samples=8, seed=2))
    assert not np.array_equal(a, b)


def test_ramsey_contrast_at_t2_star():
    t2 = 200e-6
    table = execute_all(ramsey_program(t2), NoiseModel(t2, samples=4000, seed=7))
    contrast = 2 * table[0, 1] - 1
    assert contrast == pytest.approx(math.exp(-1), abs=0.05)


def test_finite_pulses_see_noise():
    # a detuned finite pi pulse no longer flips perfectly
    prog = not_program(0, "finite")
    eps = [0.3 * pulses.DD_RABI, 0.0, 0.0]
    u = program_unitary(prog, eps)
    assert abs(u[0b100, 0b000]) ** 2 < 0.95
    u_inst = program_unitary(not_program(0), eps)
    assert abs(u_inst[0b100, 0b000]) ** 2 == pytest.approx(1.0)
