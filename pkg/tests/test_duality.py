from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from functal import generate as gen
from functal import linalg as la
from functal.ctrb import CtrbTriple, test_output_ctrb_kalman as ctrb_kalman
from functal.duality import (STRUCTURAL_GAP, check_structural_conditions,
                             check_psi_rank_duality, check_strong_duality, check_weak_duality,
                             dualize, primalize)
from functal.errors import ConsistencyError
from functal.obsv import ObsvTriple, test_functional_obsv_kalman as obsv_kalman

SHIFT = [[0, 1, 0], [0, 0, 1], [0, 0, 0]]


def example4(F=(1, 1, 1)):
    return ObsvTriple(la.as_exact([[0, 0, 1]]), la.as_exact(SHIFT), la.as_exact([list(F)]))


def test_dualize_is_an_involution():
    t = example4()
    back = primalize(dualize(t))
    for a, b in ((t.A, back.A), (t.C, back.C), (t.F, back.F)):
        assert np.array_equal(a, b)
    d = dualize(t)
    assert np.array_equal(d.A, t.A.T) and np.array_equal(d.B, t.C.T)


@pytest.mark.parametrize("t1", [0.5, 1.0, 2.0])
def test_example4_strong_duality(t1):
    rep = check_strong_duality(example4(), t1)
    assert not rep.primal_obsv
    assert rep.dual_ctrb
    assert rep.orthogonality_ok is False
    assert rep.strong_duality_consistent
    assert len([c for c in rep.certificates if c.kind == "vector"]) >= 2


def test_example4_first_state_target():
    rep = check_strong_duality(example4((1, 0, 0)))
    assert (rep.primal_obsv, rep.dual_ctrb, rep.orthogonality_ok) == (False, False, True)
    assert rep.strong_duality_consistent


def test_full_state_f_is_classical_duality():
    # F = I: functional observability is observability, output controllability is controllability
    for C in ([[0, 0, 1]], [[1, 0, 0]]):
        t = ObsvTriple(la.as_exact(C), la.as_exact(SHIFT), la.as_exact(np.eye(3, dtype=int)))
        rep = check_weak_duality(t)
        assert rep.primal_obsv == rep.dual_ctrb


@given(st.integers(0, 10_000))
def test_weak_duality_on_random_systems(seed):
    s = gen.random_system(np.random.default_rng(seed), n_max=6)
    rep = check_weak_duality(s.obsv_triple())
    assert rep.dual_ctrb or not rep.primal_obsv


@given(st.integers(0, 10_000), st.sampled_from([0.5, 1.0, 2.0]))
def test_strong_duality_on_random_systems(seed, t1):
    s = gen.random_system(np.random.default_rng(seed), n_max=6)
    rep = check_strong_duality(s.obsv_triple(), t1)
    assert rep.strong_duality_consistent


def test_strong_duality_is_horizon_invariant():
    s = gen.generate_system(gen.parse_jordan_spec("-1:[2];1:[1,1]"), q=1, r=2, seed=11)
    reps = [check_strong_duality(s.obsv_triple(), t1) for t1 in (0.1, 1.0, 5.0)]
    assert len({(r.orthogonality_ok, r.primal_obsv, r.dual_ctrb) for r in reps}) == 1


def test_weak_duality_violation_is_raised(monkeypatch):
    import functal.duality as dm

    def broken(t):
        rep = ctrb_kalman(t)
        rep.verdict = False
        return rep

    monkeypatch.setattr(dm, "test_output_ctrb_kalman", broken)
    t = example4((0, 0, 1))
    assert obsv_kalman(t).verdict
    with pytest.raises(ConsistencyError):
        dm.check_weak_duality(t)


def test_psi_example2():
    t = ObsvTriple(la.as_exact([[0, 0, 1]]), la.as_exact(SHIFT), la.as_exact([[0, 1, 0]]))
    (chk,) = check_psi_rank_duality(t)
    assert chk.eigenvalue == 0
    assert chk.stacked_equal and chk.dual_equal and chk.holds
    psi = la.stack(-t.A, t.C)
    assert [int(x) for x in (t.F @ psi.T)[0]] == [-1, 0, 0, 0]


@given(st.integers(0, 10_000))
def test_psi_implication_on_random_systems(seed):
    s = gen.random_system(np.random.default_rng(seed), n_max=6)
    assert all(c.holds for c in check_psi_rank_duality(s.obsv_triple()))


@pytest.mark.parametrize("c, verdict", [([1, 0, 0], False), ([0, 0, 2], True)])
def test_structural_conditions_distinct_eigenvalues(c, verdict):
    t = ObsvTriple(la.as_exact([c]), la.as_exact(np.diag([1, 2, 3])), la.as_exact([[0, 0, 1]]))
    chk = check_structural_conditions(t)
    assert chk.applicable
    assert chk.primal_obsv == chk.dual_ctrb == verdict
    assert chk.consistent and not chk.warnings


def test_structural_conditions_not_normal():
    chk = check_structural_conditions(example4())
    assert not chk.normal_A and not chk.applicable and chk.consistent


def test_structural_conditions_repeated_eigenvalue_gap():
    # A = I: every row of F lies in the single eigenspace, yet the verdicts differ
    t = ObsvTriple(la.as_exact([[1, 0]]), la.as_exact([[1, 0], [0, 1]]), la.as_exact([[1, 1]]))
    chk = check_structural_conditions(t)
    assert chk.applicable
    assert not chk.primal_obsv and chk.dual_ctrb
    assert not chk.consistent and chk.warnings == [STRUCTURAL_GAP]


def test_structural_conditions_cross_eigenspace_coupling():
    # C couples two eigenspaces of a diagonal A
    t = ObsvTriple(la.as_exact([[1, 1]]), la.as_exact(np.diag([1, 2])), la.as_exact([[1, 0]]))
    chk = check_structural_conditions(t)
    assert not chk.orthogonal_CU_columns and not chk.applicable


@given(st.integers(0, 10_000))
def test_structural_conditions_on_simple_spectra(seed):
    # orthogonal similarity of a diagonal with distinct integer eigenvalues
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    lam = rng.choice(np.arange(-4, 5), size=n, replace=False).astype(float)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = Q @ np.diag(lam) @ Q.T
    # rows of C are eigenvectors, so the columns of C Q are orthogonal
    C = Q[:, rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)].T
    F = Q[:, [int(rng.integers(n))]].T
    t = ObsvTriple(C, A, F, la.FLOAT)
    chk = check_structural_conditions(t)
    assert chk.applicable
    assert chk.consistent and chk.primal_obsv == chk.dual_ctrb
