"""Scalar fields, rank and subspace primitives, exponentials and Gramians.

Matrices are plain numpy arrays.  The scalar field is carried by the
dtype: ``object`` arrays hold :class:`fractions.Fraction` entries and are
handled with exact elimination, everything else is treated as binary
floating point (real or complex).  Integer arrays are promoted to exact
rationals on entry since that is lossless.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError

RATIONAL = "rational"
FLOAT64 = "float64"

DEFAULT_CLUSTER_TOL = 1e-8
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ScalarField:
    """Arithmetic backend plus the tolerances that go with it.

    ``rank_tolerance`` is an absolute singular-value threshold; ``None``
    (or 0) selects ``max(m, n) * eps * sigma_max`` per matrix.
    """

    kind: str = FLOAT64
    rank_tolerance: float | None = None
    eig_cluster_tolerance: float | None = None

    def __post_init__(self):
        if self.kind not in (RATIONAL, FLOAT64):
            raise ValueError(f"unknown scalar field {self.kind!r}")
        if self.kind == RATIONAL and (self.rank_tolerance or self.eig_cluster_tolerance):
            raise ValueError("exact rational arithmetic takes no tolerances")
        for tol in (self.rank_tolerance, self.eig_cluster_tolerance):
            if tol is not None and tol < 0:
                raise ValueError("tolerances must be nonnegative")

    @property
    def exact(self) -> bool:
        return self.kind == RATIONAL

    @property
    def cluster_tol(self) -> float:
        return self.eig_cluster_tolerance or DEFAULT_CLUSTER_TOL


EXACT = ScalarField(RATIONAL)
FLOAT = ScalarField(FLOAT64)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of K^n given by the columns of ``basis`` (n x k, k may be 0)."""

    ambient_dim: int
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def exact(self) -> bool:
        return is_exact(self.basis)

    @classmethod
    def trivial(cls, n: int, exact: bool = False) -> "Subspace":
        return cls(n, np.zeros((n, 0), dtype=object if exact else float))

    def __repr__(self):
        return f"Subspace(ambient_dim={self.ambient_dim}, dim={self.dim})"


# ---------------------------------------------------------------------------
# conversion helpers

def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(
        f"cannot lift {type(x).__name__} value {x!r} to an exact rational; "
        "pass integers, Fractions or 'p/q' strings"
    )


def is_exact(M) -> bool:
    return isinstance(M, np.ndarray) and M.dtype == object


def as_exact(M) -> np.ndarray:
    """Exact copy of ``M``.  Floats are rejected rather than guessed."""
    arr = np.asarray(M, dtype=object)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        out[idx] = _to_fraction(x)
    return out


def as_float(M) -> np.ndarray:
    arr = np.asarray(M)
    if arr.dtype == object:
        if any(isinstance(x, complex) for x in arr.flat):
            return arr.astype(complex)
        return arr.astype(float)
    if np.iscomplexobj(arr):
        return arr.astype(complex)
    return arr.astype(float)


def wants_exact(*mats) -> bool:
    """True when every input is losslessly representable as exact rationals."""
    for M in mats:
        if M is None:
            continue
        arr = np.asarray(M)
        if arr.dtype == object:
            if any(isinstance(x, (float, complex)) for x in arr.flat):
                return False
        elif arr.dtype.kind not in "iub":
            return False
    return True


def float_vector(v) -> np.ndarray:
    """1-D float array from numbers, Fractions or 'p/q' strings."""
    return np.array([float(_to_fraction(x)) if isinstance(x, str) else float(x)
                     for x in np.ravel(np.asarray(v, dtype=object))])


def as_field(M, exact: bool) -> np.ndarray:
    if exact:
        return as_exact(M)
    arr = as_float(M)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr


def eye(n: int, exact: bool = False) -> np.ndarray:
    if exact:
        out = np.full((n, n), Fraction(0), dtype=object)
        for i in range(n):
            out[i, i] = Fraction(1)
        return out
    return np.eye(n)


def zeros(shape, exact: bool = False) -> np.ndarray:
    if exact:
        return np.full(shape, Fraction(0), dtype=object)
    return np.zeros(shape)


def stack(*mats) -> np.ndarray:
    """Vertical stack; lifts to floating point if any block is inexact."""
    mats = [M for M in mats if M is not None]
    if all(is_exact(M) for M in mats):
        return np.vstack(mats)
    return np.vstack([as_float(M) for M in mats])


def hstack(*mats) -> np.ndarray:
    mats = [M for M in mats if M is not None]
    if all(is_exact(M) for M in mats):
        return np.hstack(mats)
    return np.hstack([as_float(M) for M in mats])


# ---------------------------------------------------------------------------
# exact elimination

def _integer_rows(M) -> list[list[int]]:
    rows = []
    for row in M:
        den = 1
        for x in row:
            den = math.lcm(den, x.denominator)
        rows.append([int(x * den) for x in row])
    return rows


def _bareiss_rank(rows: list[list[int]]) -> int:
    m = len(rows)
    n = len(rows[0]) if m else 0
    M = [r[:] for r in rows]
    rank, prev = 0, 1
    for col in range(n):
        piv = next((i for i in range(rank, m) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        p = M[rank][col]
        prow = M[rank]
        for i in range(rank + 1, m):
            row = M[i]
            a = row[col]
            for j in range(col + 1, n):
                row[j] = (row[j] * p - a * prow[j]) // prev
            row[col] = 0
        prev = p
        rank += 1
        if rank == m:
            break
    return rank


def rref(M) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over the rationals and the pivot columns."""
    m, n = M.shape
    R = [[_to_fraction(x) for x in row] for row in M]
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        piv = next((i for i in range(r, m) if R[i][c] != 0), None)
        if piv is None:
            continue
        R[r], R[piv] = R[piv], R[r]
        pv = R[r][c]
        if pv != 1:
            R[r] = [x / pv for x in R[r]]
        prow = R[r]
        for i in range(m):
            f = R[i][c]
            if i != r and f != 0:
                R[i] = [a - f * b for a, b in zip(R[i], prow)]
        pivots.append(c)
        r += 1
    out = np.empty((m, n), dtype=object)
    for i in range(m):
        for j in range(n):
            out[i, j] = R[i][j]
    return out, pivots


def exact_inverse(M) -> np.ndarray:
    n = M.shape[0]
    R, piv = rref(np.hstack([M, eye(n, exact=True)]))
    if piv[:n] != list(range(n)):
        raise np.linalg.LinAlgError("singular matrix")
    return R[:, n:]


def inverse(M) -> np.ndarray:
    return exact_inverse(M) if is_exact(M) else np.linalg.inv(M)


# ---------------------------------------------------------------------------
# rank and subspaces

def default_tolerance(s: np.ndarray, shape: tuple[int, int]) -> float:
    smax = s[0] if s.size else 0.0
    return max(shape) * EPS * smax


def krylov_tolerance(A, M) -> float:
    """Rounding bound for [M, A M, ..., A^(n-1) M] built by repeated products.

    Block k carries an error of about k n eps ||A||^k ||M||; the blocks are
    combined in the 2-norm.
    """
    A, M = as_float(A), as_float(M)
    n = A.shape[0]
    a, m = np.linalg.norm(A, 2), np.linalg.norm(M, 2)
    with np.errstate(over="ignore"):
        bound = np.sqrt(sum(((k + 1) * a ** k * m) ** 2 for k in range(n)))
    return n * EPS * float(bound)


def _tol_for(M, field: ScalarField | None, tol: float | None) -> float:
    if tol is not None:
        return tol
    if field is not None and field.rank_tolerance:
        return field.rank_tolerance
    s = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0)
    return default_tolerance(s, M.shape)


def numerical_rank(M, field: ScalarField | None = None, tol: float | None = None) -> int:
    """Rank of ``M``: exact elimination for rationals, SVD threshold otherwise."""
    M = np.asarray(M)
    if M.ndim != 2:
        M = np.atleast_2d(M)
    if M.size == 0:
        return 0
    if is_exact(M):
        return _bareiss_rank(_integer_rows(M))
    s = np.linalg.svd(M, compute_uv=False)
    if tol is None:
        tol = field.rank_tolerance if field is not None and field.rank_tolerance else None
    if tol is None:
        tol = default_tolerance(s, M.shape)
    return int(np.sum(s > tol))


def null_space(M, field: ScalarField | None = None, tol: float | None = None) -> Subspace:
    """Right null space {v : M v = 0}.

    Orthonormal basis in floating point, echelon-derived basis (one unit
    entry per free variable) in exact arithmetic.
    """
    M = np.asarray(M)
    m, n = M.shape
    if is_exact(M):
        if m == 0:
            return Subspace(n, eye(n, exact=True))
        R, pivots = rref(M)
        free = [j for j in range(n) if j not in pivots]
        basis = zeros((n, len(free)), exact=True)
        for k, f in enumerate(free):
            basis[f, k] = Fraction(1)
            for i, p in enumerate(pivots):
                basis[p, k] = -R[i, f]
        return Subspace(n, basis)
    if m == 0:
        return Subspace(n, np.eye(n, dtype=M.dtype if np.iscomplexobj(M) else float))
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    if tol is None:
        tol = field.rank_tolerance if field is not None and field.rank_tolerance else None
    if tol is None:
        tol = default_tolerance(s, M.shape)
    r = int(np.sum(s > tol))
    return Subspace(n, vh[r:].conj().T)


def column_space(M, field: ScalarField | None = None, tol: float | None = None) -> Subspace:
    M = np.asarray(M)
    n = M.shape[0]
    if M.shape[1] == 0 or M.size == 0:
        return Subspace.trivial(n, exact=is_exact(M))
    if is_exact(M):
        _, pivots = rref(M)
        return Subspace(n, M[:, pivots])
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    if tol is None:
        tol = field.rank_tolerance if field is not None and field.rank_tolerance else None
    if tol is None:
        tol = default_tolerance(s, M.shape)
    r = int(np.sum(s > tol))
    return Subspace(n, u[:, :r])


def row_space(M, field: ScalarField | None = None, tol: float | None = None) -> Subspace:
    return column_space(np.asarray(M).T, field, tol)


def row_space_inclusion(F, M, field: ScalarField | None = None) -> bool:
    """True iff every row of ``F`` lies in the row space of ``M``."""
    F, M = np.asarray(F), np.asarray(M)
    if F.shape[1] != M.shape[1]:
        raise DimensionError(f"F has {F.shape[1]} columns, M has {M.shape[1]}")
    S = stack(M, F)
    tol = None if is_exact(S) else _tol_for(S, field, None)
    return numerical_rank(S, field, tol) == numerical_rank(M, field, tol)


def subspace_intersect(S1: Subspace, S2: Subspace, field: ScalarField | None = None,
                       tol: float | None = None) -> Subspace:
    """Basis of S1 ∩ S2 from the null space of [B1 | -B2]."""
    if S1.ambient_dim != S2.ambient_dim:
        raise DimensionError(
            f"ambient dimensions differ: {S1.ambient_dim} vs {S2.ambient_dim}")
    n = S1.ambient_dim
    exact = S1.exact and S2.exact
    if S1.dim == 0 or S2.dim == 0:
        return Subspace.trivial(n, exact=exact)
    B1, B2 = S1.basis, S2.basis
    K = null_space(hstack(B1, -B2), field, tol)
    if K.dim == 0:
        return Subspace.trivial(n, exact=exact)
    if exact:
        V = B1 @ K.basis[: S1.dim]
        return column_space(V)
    V = as_float(B1) @ K.basis[: S1.dim]
    # K is orthonormal and B1 has unit columns, so an absolute threshold is safe
    return column_space(V, tol=max(n, V.shape[1]) * 1e3 * EPS if tol is None else tol)


def orthonormalize(S: Subspace) -> Subspace:
    if S.dim == 0:
        return Subspace.trivial(S.ambient_dim)
    return column_space(as_float(S.basis))


# ---------------------------------------------------------------------------
# structured matrices

def _check_square(A, name="A"):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def obsv_matrix(C, A) -> np.ndarray:
    """Observability matrix [C; CA; ...; CA^(n-1)]."""
    A = _check_square(A)
    C = np.atleast_2d(np.asarray(C))
    n = A.shape[0]
    if C.shape[1] != n:
        raise DimensionError(f"C has {C.shape[1]} columns but A is {n}x{n}")
    if is_exact(A) != is_exact(C):
        A, C = as_float(A), as_float(C)
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def ctrb_matrix(A, B) -> np.ndarray:
    """Controllability matrix [B, AB, ..., A^(n-1)B]."""
    A = _check_square(A)
    B = np.asarray(B)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    n = A.shape[0]
    if B.shape[0] != n:
        raise DimensionError(f"B has {B.shape[0]} rows but A is {n}x{n}")
    if is_exact(A) != is_exact(B):
        A, B = as_float(A), as_float(B)
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def matrix_exponential(A, t: float = 1.0) -> np.ndarray:
    """e^{At} by scaling and squaring with a Pade approximant."""
    A = _check_square(A)
    return scipy.linalg.expm(as_float(A) * t)


# ---------------------------------------------------------------------------
# finite-horizon Gramians

OBSERVABILITY = "observability"
CONTROLLABILITY = "controllability"


def _gramian_root(A, M, t1, side):
    # returns (K, R) with W = int_0^t1 e^{K^T s} R^T R e^{K s} ds
    A = as_float(_check_square(A))
    M = as_float(np.atleast_2d(np.asarray(M)))
    n = A.shape[0]
    if t1 <= 0:
        raise ValueError(f"horizon must be positive, got {t1}")
    side = side.lower()
    if side == OBSERVABILITY:
        if M.shape[1] != n:
            raise DimensionError(f"C has {M.shape[1]} columns but A is {n}x{n}")
        return A, M
    if side == CONTROLLABILITY:
        if M.shape[0] != n:
            raise DimensionError(f"B has {M.shape[0]} rows but A is {n}x{n}")
        return A.T, M.T
    raise ValueError(f"side must be {OBSERVABILITY!r} or {CONTROLLABILITY!r}")


def _gramian_args(A, M, t1, side):
    K, R = _gramian_root(A, M, t1, side)
    return K, R.T @ R


def _symmetrize(W):
    return 0.5 * (W + W.T)


def finite_horizon_gramian(A, M, t1: float, side: str = OBSERVABILITY) -> np.ndarray:
    """Finite-horizon observability (M = C) or controllability (M = B) Gramian.

    Uses Van Loan's block exponential: expm([[-K^T, Q], [0, K]] h) has
    (1,2) block e^{-K^T h} W(h) and (2,2) block e^{K h}, so W(h) = E22^T E12.
    The step h = t1 / 2^k keeps ||K|| h <= 1 so the e^{-K^T h} block stays
    tame; W(2h) = W(h) + e^{K^T h} W(h) e^{K h} then doubles back to t1.
    """
    K, Q = _gramian_args(A, M, t1, side)
    n = K.shape[0]
    norm = np.linalg.norm(K, 1) * t1
    k = max(0, int(np.ceil(np.log2(norm)))) if norm > 1 else 0
    h = t1 / 2 ** k
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = -K.T
    H[:n, n:] = Q
    H[n:, n:] = K
    E = scipy.linalg.expm(H * h)
    Ek = E[n:, n:]
    W = Ek.T @ E[:n, n:]
    for _ in range(k):
        W = W + Ek.T @ W @ Ek
        Ek = Ek @ Ek
    return _symmetrize(W)


def gramian_quadrature(A, M, t1: float, side: str = OBSERVABILITY, panels: int = 256,
                       order: int = 8) -> np.ndarray:
    """Composite Gauss-Legendre evaluation of the same integral (cross-check)."""
    K, Q = _gramian_args(A, M, t1, side)
    if panels < 1:
        raise ValueError("panels must be positive")
    h = t1 / panels
    nodes, weights = np.polynomial.legendre.leggauss(order)
    offsets = 0.5 * h * (nodes + 1.0)
    E_nodes = [scipy.linalg.expm(K * s) for s in offsets]
    E_step = scipy.linalg.expm(K * h)
    W = np.zeros_like(Q)
    start = np.eye(K.shape[0])
    for _ in range(panels):
        acc = np.zeros_like(Q)
        for w, En in zip(weights, E_nodes):
            E = En @ start
            acc += w * (E.T @ Q @ E)
        W += 0.5 * h * acc
        start = E_step @ start
    return _symmetrize(W)


def gramian_factor(A, M, t1: float, side: str = OBSERVABILITY, panels: int = 4,
                   order: int = 8) -> np.ndarray:
    """L with L^T L the Gauss-Legendre estimate of the Gramian integral.

    The rows of L are weighted samples of C e^{A s} (or B^T e^{A^T s}), so the row space
    of L equals the image of the Gramian as soon as there are at least n
    nodes, and an SVD of L resolves that image with the square root of the
    eigenvalue gap of W.
    """
    K, R = _gramian_root(A, M, t1, side)
    n = K.shape[0]
    if panels * order < n:
        panels = -(-n // order)
    h = t1 / panels
    nodes, weights = np.polynomial.legendre.leggauss(order)
    rows = []
    for p in range(panels):
        for x, w in zip(nodes, weights):
            s = h * (p + 0.5 * (x + 1.0))
            rows.append(np.sqrt(0.5 * h * w) * (R @ scipy.linalg.expm(K * s)))
    return np.vstack(rows)


def factor_split(L, rank: int) -> tuple[Subspace, Subspace, float]:
    """Row space and null space of L, split at ``rank``.

    The third value bounds the angle between the computed and the true
    subspaces, max(shape) eps sigma_1 / sigma_rank.
    """
    L = as_float(L)
    _, s, Vt = np.linalg.svd(L)
    V = Vt.conj().T
    n = L.shape[1]
    if 0 < rank <= s.size and s[rank - 1] > 0:
        angle = max(L.shape) * EPS * s[0] / s[rank - 1]
    else:
        angle = 0.0 if rank == 0 else 1.0
    return Subspace(n, V[:, :rank]), Subspace(n, V[:, rank:]), float(angle)


def sym_psd_split(W, tol: float | None = None,
                  rank: int | None = None) -> tuple[Subspace, Subspace]:
    """Image and kernel of a symmetric PSD matrix as orthonormal bases.

    ``rank`` fixes the split at a known rank instead of thresholding.
    """
    W = as_float(W)
    vals, vecs = np.linalg.eigh(_symmetrize(W))
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    if tol is None:
        tol = max(W.shape) * EPS * abs(vals[0]) if vals.size else 0.0
    r = int(np.sum(vals > tol)) if rank is None else rank
    n = W.shape[0]
    return Subspace(n, vecs[:, :r]), Subspace(n, vecs[:, r:])


def image_of(F, S: Subspace, tol: float | None = None) -> Subspace:
    """F applied to a subspace, orthonormalized.

    The threshold is taken relative to ||F|| (the basis of ``S`` is
    orthonormal), so a map that annihilates ``S`` up to round-off yields
    the zero subspace.
    """
    F = as_float(np.atleast_2d(F))
    r = F.shape[0]
    if S.dim == 0:
        return Subspace.trivial(r)
    Q = orthonormalize(S).basis
    X = F @ Q
    if tol is None:
        tol = 1e-10 * max(1.0, np.linalg.norm(F, 2))
    return column_space(X, tol=tol)


def subspaces_orthogonal(S1: Subspace, S2: Subspace, tol: float = 1e-8) -> bool:
    """max |<u_i, v_j>| <= tol over orthonormal bases; {0} is orthogonal to all."""
    if S1.dim == 0 or S2.dim == 0:
        return True
    U = orthonormalize(S1).basis
    V = orthonormalize(S2).basis
    return float(np.max(np.abs(U.conj().T @ V))) <= tol


def frac_str(x) -> str:
    """Compact text form of a scalar for labels and reports."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        if x.imag == 0:
            return repr(float(x.real))
        return f"{x.real:.12g}{x.imag:+.12g}j"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def vector_tuple(v: Sequence) -> tuple:
    """Python-native tuple of scalars (Fraction, float or complex)."""
    out = []
    for x in np.asarray(v).ravel():
        if isinstance(x, Fraction):
            out.append(x)
        elif isinstance(x, (complex, np.complexfloating)):
            x = complex(x)
            out.append(x.real if x.imag == 0 else x)
        else:
            out.append(float(x) if not isinstance(x, (int, np.integer)) else Fraction(int(x)))
    return tuple(out)
