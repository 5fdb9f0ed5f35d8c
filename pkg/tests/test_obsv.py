from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from functal import generate as gen
from functal import linalg as la
from functal.ctrb import simulate_lti
from functal.errors import DimensionError, NotFunctionallyObservable, SignalError
from functal.obsv import (ObsvTriple, Signal, canonical_obsv_decomposition, reconstruct_target,
                          test_functional_detectability as detect,
                          test_functional_obsv_kalman as kalman,
                          test_functional_obsv_pbh as pbh,
                          test_functional_obsv_rotella as rotella)

from conftest import int_matrices, square_and_rows

SHIFT = [[0, 1, 0], [0, 0, 1], [0, 0, 0]]


def example2(F=(0, 1, 0)):
    return ObsvTriple(la.as_exact([[0, 0, 1]]), la.as_exact(SHIFT), la.as_exact([list(F)]))


def test_example2_rank_tests():
    t = example2()
    k, r, p = kalman(t), rotella(t), pbh(t)
    assert (k.verdict, r.verdict) == (False, False)
    assert k.ranks == {"stacked": 2, "O": 1}
    assert k.certificate.kind == "row" and k.certificate.index == 0
    # PBH equality holds, but F's lead column is zero, so it proves nothing
    assert p.verdict and p.assumption_ok is False and p.necessary_only
    assert p.ranks == {"lambda=0:stacked": 2, "lambda=0:psi": 2}


def test_example4_stacked_ranks_differ():
    t = example2((1, 1, 1))
    assert kalman(t).ranks == {"stacked": 2, "O": 1}
    assert rotella(t).ranks == {"stacked": 3, "O": 1}
    assert not pbh(t).verdict and pbh(t).assumption_ok


def test_example2_target_in_row_of_O():
    # F = C is trivially observable
    t = example2((0, 0, 1))
    assert kalman(t).verdict and rotella(t).verdict and pbh(t).verdict


def test_example2_detectability_not_skipped_at_zero():
    # lambda = 0 has Re >= 0, so it is checked
    assert detect(example2()).ranks == {"lambda=0:stacked": 2, "lambda=0:psi": 2}


def test_stable_unobservable_mode_is_detectable():
    A = la.as_exact([[-1, 0], [0, 2]])
    t = ObsvTriple(la.as_exact([[0, 1]]), A, la.as_exact([[1, 1]]))
    assert not kalman(t).verdict
    assert detect(t).verdict
    assert not pbh(t).verdict
    assert pbh(t).certificate.eigenvalue == -1


def test_dependent_rows_of_f_are_dropped():
    t = ObsvTriple(la.as_exact([[1, 0]]), la.as_exact([[0, 1], [0, 0]]),
                   la.as_exact([[1, 0], [2, 0]]))
    assert t.F.shape == (1, 2) and t.warnings


def test_zero_f_is_rejected():
    with pytest.raises(DimensionError):
        ObsvTriple(la.as_exact([[1, 0]]), la.as_exact(np.eye(2, dtype=int)), la.as_exact([[0, 0]]))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        ObsvTriple(la.as_exact([[1, 0, 0]]), la.as_exact(SHIFT[:2]), la.as_exact([[1, 0, 0]]))


@given(square_and_rows(), st.integers(1, 2), st.data())
def test_kalman_equals_rotella(Af, q, data):
    A, F = Af
    C = data.draw(int_matrices(q, A.shape[0]))
    if la.numerical_rank(F) == 0:
        return
    t = ObsvTriple(C, A, F)
    k, r = kalman(t), rotella(t)
    assert k.verdict == r.verdict
    # the stacked ranks differ in general; rank O does not
    assert k.ranks["O"] == r.ranks["O"]


@given(st.integers(0, 10_000))
def test_pbh_necessary_and_sufficient_under_assumption(seed):
    rng = np.random.default_rng(seed)
    s = gen.random_system(rng, n_max=6)
    t = s.obsv_triple()
    k, p = kalman(t), pbh(t)
    if k.verdict:
        assert p.verdict
    if p.assumption_ok:
        assert p.verdict == k.verdict


@given(st.integers(0, 10_000))
def test_float_agrees_with_exact(seed):
    rng = np.random.default_rng(seed)
    s = gen.random_system(rng, n_max=5)
    te = s.obsv_triple()
    tf = ObsvTriple(la.as_float(s.C), la.as_float(s.A), la.as_float(s.F), la.FLOAT)
    assert kalman(te).verdict == kalman(tf).verdict
    assert kalman(te).ranks == kalman(tf).ranks


@given(st.integers(0, 10_000))
def test_decomposition_blocks(seed):
    rng = np.random.default_rng(seed)
    s = gen.random_system(rng, n_max=6)
    d = canonical_obsv_decomposition(s.C, s.A, s.F)
    scale = 1 + np.linalg.norm(la.as_float(s.A)) + np.linalg.norm(la.as_float(s.C))
    assert d.residual <= 1e-8 * scale
    assert np.allclose(d.Q @ d.Q.T, np.eye(s.n))
    assert d.n_o == kalman(s.obsv_triple()).ranks["O"]
    assert d.F_u_zero == kalman(s.obsv_triple()).verdict


def _observable_case(seed):
    s = gen.generate_system(gen.parse_jordan_spec("-1:[2];1/2:[1]"), q=1, r=2,
                            ensure="obsv", seed=seed)
    return s, ObsvTriple(la.as_float(s.C), la.as_float(s.A), la.as_float(s.F), la.FLOAT)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_reconstruction_free_response(seed):
    s, t = _observable_case(seed)
    x0 = np.random.default_rng(seed).standard_normal(s.n)
    t1, N = 1.0, 512
    x = simulate_lti(t.A, np.zeros((s.n, 1)), x0, Signal.zeros(t1, N, 1))
    y = Signal(t1, x.values @ t.C.T)
    z0, G = reconstruct_target(t, None, None, y, t1)
    assert np.allclose(z0, t.F @ x0, atol=1e-8)
    assert G.shape == (t.F.shape[0], s.n)


def test_reconstruction_with_input():
    s, t = _observable_case(3)
    rng = np.random.default_rng(3)
    x0 = rng.standard_normal(s.n)
    B = rng.standard_normal((s.n, 1))
    t1, N = 1.0, 2048
    u = Signal.from_function(lambda tt: np.sin(3 * tt), t1, N)
    x = simulate_lti(t.A, B, x0, u)
    y = Signal(t1, x.values @ t.C.T)
    z0, _ = reconstruct_target(t, B, u, y, t1)
    assert np.allclose(z0, t.F @ x0, atol=1e-5)


def test_reconstruction_exact_gramian_converges():
    s, t = _observable_case(4)
    x0 = np.ones(s.n)
    errs = []
    for N in (64, 256, 1024):
        x = simulate_lti(t.A, np.zeros((s.n, 1)), x0, Signal.zeros(1.0, N, 1))
        z0, _ = reconstruct_target(t, None, None, Signal(1.0, x.values @ t.C.T), 1.0,
                                   gramian="exact")
        errs.append(np.linalg.norm(z0 - t.F @ x0))
    # trapezoid rule: error drops by about 16 per factor 4 in N
    assert errs[2] < errs[0] / 50


def test_reconstruction_refuses_unobservable_target():
    t = example2()
    y = Signal.zeros(1.0, 64, 1)
    with pytest.raises(NotFunctionallyObservable) as exc:
        reconstruct_target(t, None, None, y, 1.0)
    assert exc.value.report.verdict is False


def test_reconstruction_signal_checks():
    t = example2((0, 0, 1))
    with pytest.raises(SignalError):
        reconstruct_target(t, None, None, Signal.zeros(1.0, 8, 1), 1.0)
    with pytest.raises(SignalError):
        reconstruct_target(t, None, None, Signal.zeros(2.0, 64, 1), 1.0)
    with pytest.raises(DimensionError):
        reconstruct_target(t, None, None, Signal.zeros(1.0, 64, 2), 1.0)
    with pytest.raises(SignalError):
        Signal(0.0, np.zeros((4, 1)))


def test_example2_first_state_target():
    # lead column is 1 now, so PBH is decisive and agrees: both fail
    t = example2((1, 0, 0))
    p = pbh(t)
    assert not kalman(t).verdict
    assert p.assumption_ok and not p.verdict and p.certificate.eigenvalue == 0
