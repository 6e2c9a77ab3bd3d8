import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionlogic.metrics import (
    TruthTable,
    check_outcome_table,
    classical_fidelity,
    outcome_table,
    read_outcome_csv,
    truth_table,
    write_outcome_csv,
)
from ionlogic.pulses import NoiseModel, half_adder_program, not_program, toffoli_program


def b(s):
    return int(s, 2)


def test_toffoli_table():
    tt = truth_table("toffoli")
    assert tt(b("101")) == b("111") and tt(b("111")) == b("101")
    moved = [x for x in range(8) if tt(x) != x]
    assert moved == [b("101"), b("111")]


def test_cnot_table():
    tt = truth_table("cnot")
    for x, y in (("100", "101"), ("101", "100"), ("110", "111"), ("111", "110")):
        assert tt(b(x)) == b(y)
    assert all(tt(x) == x for x in range(4))


def test_half_adder_table():
    tt = truth_table("half-adder")
    assert tt(b("101")) == b("110")
    for a in (0, 1):
        for c in (0, 1):
            out = format(tt(b(f"{a}0{c}")), "03b")
            assert out == f"{a}{a & c}{a ^ c}"
    # every input with a = 0 passes through unchanged
    fixed = [x for x in range(8) if tt(x) == x]
    assert fixed == [b("000"), b("001"), b("010"), b("011")]
    assert tt.mapping == truth_table("toffoli").then(truth_table("cnot")).mapping


def test_not_and_errors():
    assert truth_table("not", qubit=2)(0) == 1
    with pytest.raises(ValueError):
        truth_table("not")
    with pytest.raises(ValueError):
        truth_table("fredkin")
    with pytest.raises(ValueError):
        TruthTable("bad", (0, 0, 1, 2, 3, 4, 5, 6))


def test_fidelity_examples():
    tt = truth_table("toffoli")
    assert classical_fidelity(tt.permutation_matrix(), tt) == 1.0
    assert classical_fidelity(np.full((8, 8), 1 / 8), tt) == pytest.approx(0.125)
    assert classical_fidelity(np.eye(8), tt) == pytest.approx(0.75)


def test_table_validation():
    with pytest.raises(ValueError):
        check_outcome_table(np.ones((8, 8)))
    with pytest.raises(ValueError):
        check_outcome_table(np.ones((8, 4)) / 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_relabel_invariance_and_bounds(seed):
    rng = np.random.default_rng(seed)
    t = rng.dirichlet(np.ones(8), size=8)
    tt = truth_table("half_adder")
    f = classical_fidelity(t, tt)
    assert 0.0 <= f <= 1.0
    perm = rng.permutation(8)
    inv = np.argsort(perm)
    t2 = t[np.ix_(inv, inv)]  # state x renamed to perm[x]
    tt2 = TruthTable("relabelled", tuple(int(perm[tt(int(inv[x]))]) for x in range(8)))
    assert classical_fidelity(t2, tt2) == pytest.approx(f, abs=1e-12)


def test_fidelity_one_only_for_permutation():
    tt = truth_table("toffoli")
    t = tt.permutation_matrix()
    t[0] = 0.999 * t[0] + 0.001 / 8
    assert classical_fidelity(t, tt) < 1.0


def test_noiseless_programs():
    assert classical_fidelity(outcome_table(half_adder_program()), truth_table("half_adder")) >= 0.97
    assert classical_fidelity(outcome_table(not_program(1)), truth_table("not", qubit=1)) == pytest.approx(1, abs=1e-10)


@pytest.mark.xfail(strict=True, reason="pure sigma-z dephasing conserves populations; the large-sigma limit is 0.75 (see ledger)")
def test_fully_dephased_limit():
    t = outcome_table(toffoli_program(), NoiseModel.from_sigma(1e6, samples=100, seed=3))
    assert classical_fidelity(t, truth_table("toffoli")) < 0.5


def test_fully_dephased_limit_value():
    # every row stays in its input's z sector: the identity table scores 0.75
    t = outcome_table(toffoli_program(), NoiseModel.from_sigma(1e6, samples=100, seed=3))
    assert classical_fidelity(t, truth_table("toffoli")) == pytest.approx(0.75, abs=0.02)


def test_csv_round_trip(tmp_path):
    t = outcome_table(toffoli_program(n_blocks=10))
    path = tmp_path / "t.csv"
    write_outcome_csv(t, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "input," + ",".join(f"out{x:03b}" for x in range(8))
    assert lines[1].split(",")[0] == "000" and len(lines) == 9
    assert np.allclose(read_outcome_csv(path), t, atol=5e-7)
