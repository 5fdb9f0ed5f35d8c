"""Duality between functional observability and output controllability."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import linalg as la
from .ctrb import CtrbTriple, test_output_ctrb_kalman
from .errors import ConsistencyError
from .jordan import eigen_cluster
from .obsv import Certificate, ObsvTriple, _shift, test_functional_obsv_kalman

NORMALITY_TOL = 1e-10
STRUCTURE_TOL = 1e-8
STRUCTURAL_GAP = ("structural conditions hold but primal and dual verdicts differ; the "
                 "conditions are not sufficient when A has a repeated eigenvalue")


def dualize(t: ObsvTriple) -> CtrbTriple:
    """(C, A; F) -> (A^T, C^T; F)."""
    return CtrbTriple(t.A.T, t.C.T, t.F, t.field)


def primalize(t: CtrbTriple) -> ObsvTriple:
    """(A, B; F) -> (B^T, A^T; F), the inverse of :func:`dualize`."""
    return ObsvTriple(t.B.T, t.A.T, t.F, t.field)


@dataclass
class DualityReport:
    primal_obsv: bool
    dual_ctrb: bool
    orthogonality_ok: bool | None = None
    strong_duality_consistent: bool | None = None
    gramian_horizon: float | None = None
    certificates: list[Certificate] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def _primal_dual(t: ObsvTriple):
    primal = test_functional_obsv_kalman(t)
    dual = test_output_ctrb_kalman(dualize(t))
    if primal.verdict and not dual.verdict:
        raise ConsistencyError(
            "functionally observable primal with a dual that is not output controllable "
            f"(primal ranks {primal.ranks}, dual ranks {dual.ranks})")
    certs = [c for c in (primal.certificate, dual.certificate) if c is not None]
    return primal, dual, certs


def check_weak_duality(t: ObsvTriple) -> DualityReport:
    """Primal rank test and dual rank test; raises if primal holds and dual fails."""
    primal, dual, certs = _primal_dual(t)
    return DualityReport(primal.verdict, dual.verdict, certificates=certs,
                         warnings=list(t.warnings))


def _worst_pair(S1: la.Subspace, S2: la.Subspace) -> tuple[tuple, tuple]:
    U = la.orthonormalize(S1).basis
    V = la.orthonormalize(S2).basis
    G = np.abs(U.conj().T @ V)
    i, j = np.unravel_index(int(np.argmax(G)), G.shape)
    return la.vector_tuple(U[:, i]), la.vector_tuple(V[:, j])


def check_strong_duality(t: ObsvTriple, t1: float = 1.0) -> DualityReport:
    """Weak duality plus the orthogonality F Im(W) ⊥ F ker(W).

    W is the observability Gramian on [0, t1]. Im(W) and ker(W) come from
    an SVD of a square-root factor of W split at rank(O), the rank of W
    for every t1 > 0; splitting W itself would lose about half the digits
    when W is badly conditioned. The numerical rank of the block-exponential
    W is recorded in ``notes`` when it differs.
    """
    primal, dual, certs = _primal_dual(t)
    W = la.finite_horizon_gramian(t.A, t.C, t1, la.OBSERVABILITY)
    r = primal.ranks["O"]
    L = la.gramian_factor(t.A, t.C, t1, la.OBSERVABILITY)
    image, kernel, angle = la.factor_split(L, r)
    notes = []
    r_w = la.sym_psd_split(W)[0].dim
    if r_w != r:
        notes.append(f"numerical rank of W ({r_w}) differs from rank(O) ({r}); split at rank(O)")
    F = la.as_float(t.F)
    # F applied to a subspace known only up to `angle` is zero below that level
    tol = max(1e-10, 10 * angle) * max(1.0, np.linalg.norm(F, 2))
    FI, FK = la.image_of(F, image, tol), la.image_of(F, kernel, tol)
    ortho = la.subspaces_orthogonal(FI, FK)
    if not ortho:
        u, v = _worst_pair(FI, FK)
        certs += [Certificate("vector", vector=u), Certificate("vector", vector=v)]
    consistent = primal.verdict == (dual.verdict and ortho)
    return DualityReport(primal.verdict, dual.verdict, ortho, consistent, float(t1),
                         certificates=certs, warnings=list(t.warnings), notes=notes)


@dataclass(frozen=True)
class PsiCheck:
    """Both sides of the Psi rank implication at one spectrum point."""

    eigenvalue: object
    stacked_equal: bool
    dual_equal: bool

    @property
    def holds(self) -> bool:
        return self.dual_equal or not self.stacked_equal


def check_psi_rank_duality(t: ObsvTriple) -> list[PsiCheck]:
    """[rank [Psi; F] = rank Psi] => [rank F Psi^T = rank F], Psi = [lam I - A; C]."""
    out = []
    r_f = la.numerical_rank(t.F, t.field)
    for lam, _ in eigen_cluster(t.A, t.field):
        psi = la.stack(_shift(t.A, lam, t.exact), t.C)
        left = la.numerical_rank(la.stack(psi, t.F), t.field) == la.numerical_rank(psi, t.field)
        right = la.numerical_rank(t.F @ psi.T, t.field) == r_f
        out.append(PsiCheck(lam, left, right))
    return out


@dataclass
class StructuralCheck:
    normal_A: bool
    orthogonal_CU_columns: bool
    rowF_in_eigenspaces: bool
    primal_obsv: bool
    dual_ctrb: bool
    warnings: list[str] = field(default_factory=list)

    @property
    def applicable(self) -> bool:
        return self.normal_A and self.orthogonal_CU_columns and self.rowF_in_eigenspaces

    @property
    def consistent(self) -> bool:
        """False only when the conditions apply and the verdicts still differ."""
        return not self.applicable or self.primal_obsv == self.dual_ctrb


def _eigenspaces(A: np.ndarray, tol: float) -> list[np.ndarray]:
    # complex Schur form of a normal matrix is diagonal with unitary Z
    T, Z = scipy.linalg.schur(A.astype(complex), output="complex")
    d = np.diag(T)
    groups: list[list[int]] = []
    for i, lam in enumerate(d):
        for g in groups:
            if abs(d[g[0]] - lam) <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
    return [Z[:, g] for g in groups]


def check_structural_conditions(t: ObsvTriple) -> StructuralCheck:
    """Structural conditions under which primal and dual verdicts should coincide.

    ``orthogonal_CU_columns`` asks whether some unitary eigenbasis U of A
    makes the columns of C U pairwise orthogonal. Inside one eigenspace the
    basis can be rotated freely, so only the cross-eigenspace blocks of
    U^H C^T C U have to vanish.
    """
    A, C, F = la.as_float(t.A), la.as_float(t.C), la.as_float(t.F)
    scale = max(1.0, np.linalg.norm(A, "fro"))
    normal = np.linalg.norm(A @ A.T - A.T @ A, "fro") <= NORMALITY_TOL * scale ** 2
    primal = test_functional_obsv_kalman(t).verdict
    dual = test_output_ctrb_kalman(dualize(t)).verdict
    if not normal:
        return StructuralCheck(False, False, False, primal, dual)
    spaces = _eigenspaces(A, STRUCTURE_TOL * scale)
    G = C.T @ C
    c_scale = max(1.0, np.linalg.norm(G, 2))
    ortho = all(np.linalg.norm(Ui.conj().T @ G @ Uj) <= STRUCTURE_TOL * c_scale
                for i, Ui in enumerate(spaces) for Uj in spaces[i + 1:])
    in_space = True
    for f in F:
        nf = max(np.linalg.norm(f), 1.0)
        if not any(np.linalg.norm(f - U @ (U.conj().T @ f)) <= STRUCTURE_TOL * nf
                   for U in spaces):
            in_space = False
            break
    check = StructuralCheck(True, ortho, in_space, primal, dual)
    if not check.consistent:
        check.warnings.append(STRUCTURAL_GAP)
    return check
