from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from functal import generate as gen
from functal import linalg as la
from functal.ctrb import (CtrbTriple, eigenspace_intersection_witness, min_energy_steering,
                          simulate_lti, test_output_ctrb_kalman as kalman,
                          test_output_ctrb_pbh as pbh)
from functal.errors import (DimensionError, NotOutputControllable, SignalError,
                            SingularProjectionError)
from functal.obsv import Signal

SHIFT = la.as_exact([[0, 1, 0], [0, 0, 1], [0, 0, 0]])
E1 = la.as_exact([[1], [0], [0]])


def example3(F):
    return CtrbTriple(SHIFT, E1, la.as_exact([F]))


def test_example3_not_output_controllable():
    t = example3([0, 1, 0])
    k = kalman(t)
    assert not k.verdict and not k.full_state_controllable
    assert k.ranks == {"F": 1, "FC": 0, "C": 1}
    assert k.certificate.kind == "vector"
    p = pbh(t)
    assert not p.verdict
    assert p.ranks["lambda=0:FPsi"] == 1
    assert p.intersection_nonempty is False


def test_example3_f_times_psi_at_zero():
    F = la.as_exact([[0, 1, 0]])
    FPsi = F @ la.hstack(-SHIFT, E1)
    assert [int(x) for x in FPsi[0]] == [0, 0, -1, 0]
    assert la.numerical_rank(FPsi) == 1


def test_example3_last_state_target():
    # F = e3: the eigenvector e3 of A^T lies in ker(C^T) ∩ row(F), but the rank clause fails
    t = example3([0, 0, 1])
    assert not kalman(t).verdict
    p = pbh(t)
    assert not p.verdict and p.intersection_nonempty
    assert p.ranks["lambda=0:FPsi"] == 0
    assert eigenspace_intersection_witness(t) == (0, (1, 0, 0)) or \
        eigenspace_intersection_witness(t)[1] == (0, 0, 1)


def test_reachable_target_is_rejected_by_intersection_condition():
    # counterexample: F = e1 is reached by the input, yet ker(C^T) ∩ row(F) = {0}
    t = example3([1, 0, 0])
    assert kalman(t).verdict
    p = pbh(t)
    assert p.rank_clause and p.intersection_nonempty is False and not p.verdict


def test_rank_clause_alone_is_not_sufficient():
    # diagonalizable A with distinct eigenvalues; F mixes an unreachable mode
    t = CtrbTriple(la.as_exact(np.diag([1, 2, 3])), la.as_exact([[0], [0], [1]]),
                   la.as_exact([[1, 1, 0]]))
    assert not kalman(t).verdict
    assert pbh(t).rank_clause


def test_full_state_controllable_agrees():
    A = SHIFT.T
    t = CtrbTriple(A, E1, la.as_exact([[0, 1, 0]]))
    assert kalman(t).full_state_controllable
    assert kalman(t).verdict and pbh(t).verdict
    assert pbh(t).intersection_nonempty is None


@given(st.integers(0, 10_000))
def test_rank_clause_is_necessary(seed):
    rng = np.random.default_rng(seed)
    s = gen.random_system(rng, n_max=6)
    t = s.ctrb_triple()
    k, p = kalman(t), pbh(t)
    if k.verdict:
        assert p.rank_clause
    if k.full_state_controllable:
        assert k.verdict and p.verdict


@given(st.integers(0, 10_000))
def test_float_agrees_with_exact(seed):
    s = gen.random_system(np.random.default_rng(seed), n_max=5)
    te = s.ctrb_triple()
    tf = CtrbTriple(la.as_float(s.A), la.as_float(s.B), la.as_float(s.F), la.FLOAT)
    assert kalman(te).ranks == kalman(tf).ranks


def test_dimension_checks():
    with pytest.raises(DimensionError):
        CtrbTriple(SHIFT, la.as_exact([[1], [0]]), la.as_exact([[1, 0, 0]]))


# ---------------------------------------------------------------------------
# simulation and steering

def test_simulate_constant_input_matches_closed_form():
    A = np.array([[-1.0, 2.0], [0.0, -3.0]])
    B = np.array([[1.0], [1.0]])
    x0 = np.array([1.0, -1.0])
    u = Signal(2.0, np.ones((401, 1)))
    x = simulate_lti(A, B, x0, u)
    # x(t) = e^{At} x0 + A^{-1}(e^{At} - I) B for u = 1
    E = scipy.linalg.expm(2.0 * A)
    want = E @ x0 + np.linalg.solve(A, (E - np.eye(2)) @ B).ravel()
    # the input term is trapezoidal, so O(h^2) with h = 1/200
    assert np.allclose(x.values[-1], want, atol=1e-4)


def test_simulate_trapezoid_order():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    errs = []
    for N in (101, 201):
        u = Signal.from_function(np.cos, 1.0, N)
        x = simulate_lti(A, B, [0, 0], u)
        # resonant forcing: x1(t) = t sin(t) / 2
        errs.append(abs(x.values[-1, 0] - 0.5 * np.sin(1.0)))
    assert errs[1] < errs[0] / 3.5


def test_simulate_rejects_bad_input():
    with pytest.raises(DimensionError):
        simulate_lti(np.eye(2), np.ones((2, 1)), [0, 0], Signal.zeros(1.0, 8, 2))
    with pytest.raises(SignalError):
        simulate_lti(np.eye(2), np.ones((2, 1)), [0, 0], Signal.zeros(1.0, 8, 1), t1=2.0)


def test_steering_integrator_energy():
    # A = 0, B = I: u is constant, u = (z - F x0) F^T (F F^T)^{-1} / t1
    t = CtrbTriple(np.zeros((3, 3)), np.eye(3), np.array([[1.0, 2.0, 0.0]]), la.FLOAT)
    x0 = np.array([1.0, 0.0, 0.0])
    plan = min_energy_steering(t, x0, [6.0], 2.0, samples=64)
    # (6 - 1)^2 / (||F||^2 t1) = 25 / 10
    assert plan.energy == pytest.approx(2.5, rel=1e-12)
    x = simulate_lti(t.A, t.B, x0, plan.u)
    assert t.F @ x.values[-1] == pytest.approx([6.0], abs=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_steering_reaches_target(seed):
    s = gen.generate_system(gen.parse_jordan_spec("-1:[2];0:[1];2:[1]"), q=1, r=2,
                            ensure="ctrb", seed=seed)
    t = CtrbTriple(la.as_float(s.A), la.as_float(s.B), la.as_float(s.F), la.FLOAT)
    rng = np.random.default_rng(seed)
    x0, z = rng.standard_normal(s.n), rng.standard_normal(2)
    plan = min_energy_steering(t, x0, z, 1.0)
    x = simulate_lti(t.A, t.B, x0, plan.u)
    zt = t.F @ x.values[-1]
    assert np.allclose(zt, z, atol=1e-8 * plan.condition_number)
    assert np.allclose(plan.predicted_z_t1, zt, atol=1e-8)


def test_steering_with_partially_controllable_pair():
    # (A, B) not controllable, but F only asks for the reachable direction
    t = CtrbTriple(la.as_float(SHIFT), la.as_float(E1), np.array([[1.0, 0.0, 0.0]]), la.FLOAT)
    plan = min_energy_steering(t, [0, 0, 0], [1.0], 1.0)
    x = simulate_lti(t.A, t.B, [0, 0, 0], plan.u)
    assert x.values[-1, 0] == pytest.approx(1.0, abs=1e-10)
    assert plan.energy == pytest.approx(1.0, rel=1e-3)


def test_steering_refuses_unreachable_target():
    with pytest.raises(NotOutputControllable) as exc:
        min_energy_steering(example3([0, 1, 0]), [0, 0, 0], [1], 1.0)
    assert exc.value.report.ranks["FC"] == 0


def test_steering_singular_projection():
    F = np.array([[1.0, 0.0], [1.0, 1e-7]])
    t = CtrbTriple(np.zeros((2, 2)), np.eye(2), F, la.FLOAT)
    with pytest.raises(SingularProjectionError):
        min_energy_steering(t, [0, 0], [1, 1], 1.0)


def test_steering_grid_and_exact_gramians_agree():
    s = gen.generate_system(gen.parse_jordan_spec("-1:[1];1:[1]"), q=1, r=1,
                            ensure="ctrb", seed=5)
    t = CtrbTriple(la.as_float(s.A), la.as_float(s.B), la.as_float(s.F), la.FLOAT)
    a = min_energy_steering(t, [1, 1], [0.5], 1.0, samples=2048, gramian="grid")
    b = min_energy_steering(t, [1, 1], [0.5], 1.0, samples=2048, gramian="exact")
    assert a.energy == pytest.approx(b.energy, rel=1e-5)
