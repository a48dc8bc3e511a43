import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from ontodist.bodcheck import quadruple_states, trine_states
from ontodist.commtask import (
    ClassicalStrategy,
    CommTask,
    Distinguishability,
    InfeasibleConstraintError,
    Leakage,
    QuantumStrategy,
    _encoder_lp,
    check_prop4,
    classical_optimize,
    constraint_value_classical,
    constraint_value_quantum,
    eval_classical,
    eval_quantum,
    fig4_protocol,
    load_strategy,
    load_task,
    parity_protocol,
    parity_task,
    strategy_from_json,
    strategy_to_json,
    task1,
    task2,
    task_from_json,
    task_to_json,
    theory_bound,
)
from ontodist.quantcore import DimensionError, Povm, ValidationError, density_from_bloch, qubit_projective


def deterministic(nx, d, ny, nz, rng):
    enc = np.eye(d)[rng.integers(0, d, size=nx)]
    dec = np.zeros((d, ny, nz))
    w, y = np.meshgrid(np.arange(d), np.arange(ny), indexing="ij")
    dec[w, y, rng.integers(0, nz, size=(d, ny))] = 1
    return enc, dec


class TestTasks:
    def test_task1_cells(self):
        c = task1().coeffs
        assert np.count_nonzero(c) == 5 and set(c[c > 0]) == {1.0}

    def test_task2_cells(self):
        c = task2().coeffs
        assert np.count_nonzero(c) == 6
        assert np.allclose(c[c > 0], 1 / 6)

    def test_parity_normalized(self):
        assert parity_task(0.1).coeffs.sum() == pytest.approx(1)

    def test_negative_coeffs(self):
        with pytest.raises(ValidationError):
            CommTask(1, 1, 2, -np.ones((1, 1, 2)), Distinguishability(1))

    def test_shape(self):
        with pytest.raises(DimensionError):
            CommTask(2, 1, 2, np.ones((1, 1, 2)), Distinguishability(1))

    def test_epsilon_range(self):
        Leakage((0, 1), 0.0)
        Leakage((0, 1), 0.5)
        with pytest.raises(ValidationError):
            Leakage((0, 1), 0.6)

    def test_p_range(self):
        with pytest.raises(ValidationError):
            Distinguishability(1.2)

    def test_theory_bounds(self):
        assert theory_bound(task1(0.5)) == pytest.approx(3.5)
        assert theory_bound(task2(0.5)) == pytest.approx(0.75)
        assert theory_bound(parity_task(0.2)) == pytest.approx(0.85)
        custom = CommTask(1, 1, 2, np.ones((1, 1, 2)), Distinguishability(1))
        assert theory_bound(custom) is None


class TestStrategies:
    def test_stochastic_enc(self):
        with pytest.raises(ValidationError):
            ClassicalStrategy(np.array([[0.5, 0.4]]), np.ones((2, 1, 1)))

    def test_alphabet_mismatch(self):
        with pytest.raises(DimensionError):
            ClassicalStrategy(np.eye(2), np.ones((3, 1, 1)))

    def test_quantum_dims(self):
        with pytest.raises(DimensionError):
            QuantumStrategy((density_from_bloch([0, 0, 1]),), (Povm((np.eye(3),)),))


class TestEvaluation:
    def test_zero_task_quantum(self):
        t = CommTask(3, 2, 2, np.zeros((3, 2, 2)), Distinguishability(1))
        assert eval_quantum(t, fig4_protocol()) == 0

    def test_fig4(self):
        s = fig4_protocol()
        assert eval_quantum(task1(), s) == pytest.approx(3 + np.sqrt(2), abs=1e-9)
        assert constraint_value_quantum(s, Distinguishability(1)) == pytest.approx(2 / 3, abs=1e-6)
        assert eval_quantum(task1(), s) - theory_bound(task1(2 / 3)) == pytest.approx(np.sqrt(2) - 1, abs=1e-9)

    def test_parity_protocol(self):
        s = parity_protocol()
        assert eval_quantum(parity_task(0), s) == pytest.approx((2 + np.sqrt(2)) / 4, abs=1e-9)
        assert constraint_value_quantum(s, parity_task(0).constraint) == pytest.approx(0.5, abs=1e-9)

    def test_parity_states_are_quadruple(self):
        for a, b in zip(parity_protocol().states, quadruple_states(0)):
            assert np.allclose(a.mat, b.mat)

    def test_identical_states(self):
        rho = density_from_bloch([0, 0, 1])
        s = QuantumStrategy((rho,) * 3, fig4_protocol().povms)
        assert constraint_value_quantum(s, Distinguishability(1)) == pytest.approx(1 / 3, abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            eval_quantum(task2(), fig4_protocol())

    def test_uniform_decoder_task1(self):
        enc = np.full((3, 4), 0.25)
        dec = np.full((4, 2, 2), 0.5)
        assert eval_classical(task1(), ClassicalStrategy(enc, dec)) == pytest.approx(2.5)

    def test_identity_task2(self):
        enc = np.eye(3)
        dec = np.zeros((3, 3, 3))
        for w in range(3):
            dec[w, :, w] = 1
        # every winning cell is hit with probability one
        assert eval_classical(task2(), ClassicalStrategy(enc, dec)) == pytest.approx(1.0)

    def test_classical_matches_enumeration(self, rng):
        t = task1()
        enc, dec = deterministic(3, 4, 2, 2, rng)
        direct = sum(t.coeffs[x, y, int(np.argmax(dec[int(np.argmax(enc[x])), y]))] for x in range(3) for y in range(2))
        assert eval_classical(t, ClassicalStrategy(enc, dec)) == pytest.approx(direct)


class TestConstraintValues:
    def test_identity(self):
        s = ClassicalStrategy(np.eye(3), np.ones((3, 1, 1)))
        assert constraint_value_classical(s, Distinguishability(1)) == pytest.approx(1)

    def test_constant(self):
        s = ClassicalStrategy(np.tile([1.0, 0, 0], (3, 1)), np.ones((3, 1, 1)))
        assert constraint_value_classical(s, Distinguishability(1)) == pytest.approx(1 / 3)

    def test_two_merged(self):
        s = ClassicalStrategy(np.array([[1.0, 0], [1, 0], [0, 1]]), np.ones((2, 1, 1)))
        assert constraint_value_classical(s, Distinguishability(1)) == pytest.approx(2 / 3)

    def test_leakage_of_parity_blind_encoding(self):
        # message = a1 reveals nothing about a1 xor a2
        enc = np.array([[1.0, 0], [0, 1], [1, 0], [0, 1]])
        s = ClassicalStrategy(enc, np.ones((2, 1, 1)))
        assert constraint_value_classical(s, parity_task(0).constraint) == pytest.approx(0.5)


class TestProp4:
    def test_fig4(self):
        rep = check_prop4(fig4_protocol())
        assert rep.p == pytest.approx(2 / 3, abs=1e-6)
        assert rep.lhs == pytest.approx(3 + np.sqrt(2), abs=1e-9)
        assert rep.bound == pytest.approx(4, abs=1e-6)
        assert rep.violated
        assert rep.distinctness_lower_bound == pytest.approx((1 + np.sqrt(2)) / 3, abs=1e-6)

    def test_identical_states(self):
        rho = density_from_bloch([1, 0, 0])
        rep = check_prop4(QuantumStrategy((rho,) * 3, fig4_protocol().povms))
        assert rep.lhs <= rep.bound + 1e-9

    def test_trine_self_consistent(self):
        povms = (qubit_projective([0, 1, 0]), qubit_projective([1, 0, 0]))
        rep = check_prop4(QuantumStrategy(tuple(trine_states()), povms))
        assert rep.margin == pytest.approx(rep.lhs - rep.bound)

    def test_arity(self):
        with pytest.raises(ValidationError):
            check_prop4(parity_protocol())


class TestClassicalOptimize:
    def test_task1(self):
        strat, value = classical_optimize(task1(2 / 3), d=6, restarts=50, seed=1)
        assert 3.99 <= value <= 4 + 1e-6
        assert constraint_value_classical(strat, Distinguishability(2 / 3)) <= 2 / 3 + 1e-9

    def test_parity(self):
        _, value = classical_optimize(parity_task(0), d=8, restarts=20, seed=2)
        assert value <= 0.75 + 1e-6

    def test_unconstrained_task2(self):
        _, value = classical_optimize(task2(1.0), restarts=5, seed=3)
        assert value == pytest.approx(1, abs=1e-9)

    def test_infeasible_p(self):
        with pytest.raises(InfeasibleConstraintError):
            classical_optimize(task1(0.2), restarts=1)

    def test_reproducible_and_thread_independent(self):
        a = classical_optimize(task1(0.8), d=4, restarts=6, seed=9)
        b = classical_optimize(task1(0.8), d=4, restarts=6, seed=9, threads=3)
        assert a[1] == b[1]
        assert np.array_equal(a[0].enc, b[0].enc)

    def test_relabel_invariance(self, rng):
        strat, value = classical_optimize(task1(0.7), d=5, restarts=3, seed=4)
        perm = rng.permutation(5)
        relabelled = ClassicalStrategy(strat.enc[:, perm], strat.dec[perm])
        assert eval_classical(task1(), relabelled) == pytest.approx(value, abs=1e-12)
        assert constraint_value_classical(relabelled, Distinguishability(1)) == pytest.approx(
            constraint_value_classical(strat, Distinguishability(1)), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_encoder_lp_matches_scipy(self, seed):
        rng = np.random.default_rng(seed)
        nx, ny, nz, d = (int(v) for v in rng.integers(2, 4, size=4))
        p = rng.uniform(1 / nx, 1)
        t = CommTask(nx, ny, nz, rng.random((nx, ny, nz)), Distinguishability(p))
        _, dec = deterministic(nx, d, ny, nz, rng)
        enc = _encoder_lp(t, dec)
        ours = eval_classical(t, ClassicalStrategy(enc, dec))
        # independent formulation: variables enc (nx*d) and t (d)
        gain = np.einsum("xyz,wyz->xw", t.coeffs, dec).reshape(-1)
        n = nx * d
        a_ub = [np.r_[np.eye(n)[x * d + w], -np.eye(d)[w]] for x in range(nx) for w in range(d)]
        a_ub.append(np.r_[np.zeros(n), np.ones(d)])
        b_ub = np.r_[np.zeros(n), nx * p]
        a_eq = [np.r_[np.kron(np.eye(nx)[x], np.ones(d)), np.zeros(d)] for x in range(nx)]
        ref = linprog(-np.r_[gain, np.zeros(d)], A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=np.ones(nx),
                      bounds=(0, None), method="highs")
        assert ours == pytest.approx(-ref.fun, abs=1e-7)
        assert constraint_value_classical(ClassicalStrategy(enc, dec), t.constraint) <= p + 1e-9

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_shared_randomness_gives_no_advantage(self, seed):
        # convex mixtures of deterministic strategies, randomness folded into the message
        rng = np.random.default_rng(seed)
        k, d0 = int(rng.integers(2, 5)), int(rng.integers(2, 4))
        lam = rng.dirichlet(np.ones(k))
        parts = [deterministic(3, d0, 2, 2, rng) for _ in range(k)]
        enc = np.hstack([l * e for l, (e, _) in zip(lam, parts)])
        dec = np.concatenate([dd for _, dd in parts])
        strat = ClassicalStrategy(enc, dec)
        p = constraint_value_classical(strat, Distinguishability(1))
        assert eval_classical(task1(), strat) <= theory_bound(task1(p)) + 1e-9


class TestJson:
    def test_task_round_trip(self, tmp_path):
        for t in (task1(0.7), task2(), parity_task(0.1)):
            doc = task_to_json(t)
            path = tmp_path / "t.json"
            path.write_text(json.dumps(doc))
            back = load_task(path)
            assert np.array_equal(back.coeffs, t.coeffs)
            assert back.constraint == t.constraint

    def test_zero_based_entries(self):
        doc = task_to_json(task1())
        assert [0, 0, 0, 1.0] in doc["coeffs"]
        assert doc["constraint"]["kind"] == "distinguishability"

    def test_bad_index(self):
        doc = task_to_json(task1())
        doc["coeffs"].append([3, 0, 0, 1.0])
        with pytest.raises(ValidationError):
            task_from_json(doc)

    def test_bad_kind(self):
        doc = task_to_json(task1())
        doc["constraint"] = {"kind": "nope"}
        with pytest.raises(ValidationError):
            task_from_json(doc)

    def test_strategy_round_trip(self, tmp_path):
        q = fig4_protocol()
        path = tmp_path / "q.json"
        path.write_text(json.dumps(strategy_to_json(q)))
        back = load_strategy(path)
        assert eval_quantum(task1(), back) == pytest.approx(eval_quantum(task1(), q))
        c, _ = classical_optimize(task1(), d=3, restarts=2, seed=0)
        back_c = strategy_from_json(json.loads(json.dumps(strategy_to_json(c))))
        assert np.array_equal(back_c.enc, c.enc)

    def test_unknown_strategy(self):
        with pytest.raises(ValidationError):
            strategy_from_json({"kind": "other"})
