"""Jordan decomposition and the lead-column machinery.

``J = P A P^{-1}``; the columns of ``P^{-1}`` are Jordan chains.  For a
block of size k with eigenvalue lam the chain is ``[M^{k-1} t, ..., M t, t]``
where ``M = A - lam I`` and ``t`` is the chain top, so the first column of
every block is an eigenvector.  Lead columns of a matrix ``Mbar = M P^{-1}``
are the columns aligned with those first columns.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import linalg as la
from .errors import DefectiveDecompositionError, DimensionError, NotSplittingError

COND_WARNING = 1e8


@dataclass(frozen=True)
class EigenGroup:
    eigenvalue: object  # Fraction (exact), float or complex
    algebraic_multiplicity: int
    geometric_multiplicity: int
    block_sizes: tuple[int, ...]
    column_range: tuple[int, int]  # half-open [start, stop) in J
    lead_column_indices: tuple[int, ...]

    @property
    def block_starts(self) -> tuple[int, ...]:
        starts, pos = [], self.column_range[0]
        for k in self.block_sizes:
            starts.append(pos)
            pos += k
        return tuple(starts)


@dataclass
class JordanForm:
    P: np.ndarray
    J: np.ndarray
    P_inv: np.ndarray
    groups: list[EigenGroup]
    condition_number: float = 1.0
    warnings: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    @property
    def exact(self) -> bool:
        return la.is_exact(self.J)

    def residual(self, A) -> float:
        """||P A P^{-1} - J||_F (0.0 in exact arithmetic when consistent)."""
        D = self.P @ A @ self.P_inv - self.J
        if la.is_exact(D):
            return 0.0 if all(x == 0 for x in D.flat) else float(np.linalg.norm(la.as_float(D)))
        return float(np.linalg.norm(D))


# ---------------------------------------------------------------------------
# spectrum

def charpoly(A) -> list[Fraction]:
    """Coefficients c_0..c_n of det(x I - A) (Faddeev-LeVerrier, exact).

    Runs on the integer matrix d A, d the common denominator, where every
    division by k is exact; the coefficients are rescaled afterwards.
    """
    A = la.as_exact(A)
    n = A.shape[0]
    d = math.lcm(*(x.denominator for x in A.flat)) if A.size else 1
    Ai = np.array([[int(x * d) for x in row] for row in A], dtype=object).reshape(n, n)
    I = np.eye(n, dtype=int).astype(object)
    c = [0] * (n + 1)
    c[n] = 1
    Mk = np.zeros((n, n), dtype=int).astype(object)
    for k in range(1, n + 1):
        Mk = Ai @ Mk + c[n - k + 1] * I
        tr = sum((Ai @ Mk)[i, i] for i in range(n))
        c[n - k] = -tr // k
    return [Fraction(cj, d ** (n - j)) for j, cj in enumerate(c)]


@lru_cache(maxsize=512)
def _exact_spectrum(shape: tuple[int, int], entries: tuple) -> tuple:
    A = np.array(entries, dtype=object).reshape(shape)
    return tuple(rational_roots(charpoly(A)))


def _divisors(m: int) -> list[int]:
    m = abs(m)
    small, large = [], []
    d = 1
    while d * d <= m:
        if m % d == 0:
            small.append(d)
            if d * d != m:
                large.append(m // d)
        d += 1
    return small + large[::-1]


def _horner(coeffs, x):
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _deflate(coeffs, r):
    # divide sum c_i x^i by (x - r); exact when r is a root
    n = len(coeffs) - 1
    out = [Fraction(0)] * n
    carry = Fraction(0)
    for i in range(n, 0, -1):
        carry = coeffs[i] + carry * r
        out[i - 1] = carry
    return out


def rational_roots(coeffs) -> list[tuple[Fraction, int]]:
    """All roots of a polynomial that splits over Q, with multiplicities.

    Raises :class:`NotSplittingError` if some root is not rational.
    """
    coeffs = [Fraction(c) for c in coeffs]
    roots: dict[Fraction, int] = {}
    while len(coeffs) > 1 and coeffs[0] == 0:
        roots[Fraction(0)] = roots.get(Fraction(0), 0) + 1
        coeffs = coeffs[1:]
    while len(coeffs) > 1:
        den = 1
        for c in coeffs:
            den = math.lcm(den, c.denominator)
        ints = [int(c * den) for c in coeffs]
        g = 0
        for c in ints:
            g = math.gcd(g, c)
        ints = [c // g for c in ints]
        found = None
        for q in _divisors(ints[-1]):
            for p in _divisors(ints[0]):
                for cand in (Fraction(p, q), Fraction(-p, q)):
                    if _horner(coeffs, cand) == 0:
                        found = cand
                        break
                if found is not None:
                    break
            if found is not None:
                break
        if found is None:
            raise NotSplittingError(
                f"characteristic polynomial does not split over the rationals "
                f"(degree-{len(coeffs) - 1} factor left); use the float64 field")
        roots[found] = roots.get(found, 0) + 1
        coeffs = _deflate(coeffs, found)
    return sorted(roots.items(), key=lambda kv: kv[0])


def _sort_key(lam):
    z = complex(lam)
    return (round(z.real, 12), round(z.imag, 12))


def eigen_cluster(A, field: la.ScalarField | None = None) -> list[tuple[object, int]]:
    """Distinct eigenvalues with algebraic multiplicities, ordered by (Re, Im).

    Float64: eigenvalues within ``tol * (1 + ||A||_2)`` of each other are
    merged (single linkage) and represented by their mean.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"A must be square, got shape {A.shape}")
    exact = la.is_exact(A) if field is None else field.exact
    if exact:
        A = la.as_exact(A)
        return list(_exact_spectrum(A.shape, tuple(A.flat)))
    field = field or la.FLOAT
    Af = la.as_float(A)
    if Af.size == 0:
        return []
    eigs = np.linalg.eigvals(Af)
    scale = field.cluster_tol * (1.0 + np.linalg.norm(Af, 2))
    parent = list(range(len(eigs)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(eigs)):
        for j in range(i + 1, len(eigs)):
            if abs(eigs[i] - eigs[j]) <= scale:
                parent[find(i)] = find(j)
    clusters: dict[int, list[complex]] = {}
    for i, lam in enumerate(eigs):
        clusters.setdefault(find(i), []).append(lam)
    out = []
    for members in clusters.values():
        mean = complex(np.mean(members))
        lam = mean.real if abs(mean.imag) <= scale else mean
        out.append((lam, len(members)))
    out.sort(key=lambda kv: _sort_key(kv[0]))
    return out


# ---------------------------------------------------------------------------
# decomposition

def _pick_tops(candidates: np.ndarray, base: np.ndarray | None, need: int, exact: bool,
               tol: float) -> list[np.ndarray]:
    """``need`` vectors from span(candidates) independent modulo span(base)."""
    n = candidates.shape[0]
    if exact:
        chosen = []
        cur = base if base is not None and base.shape[1] else la.zeros((n, 0), exact=True)
        r = la.numerical_rank(cur) if cur.shape[1] else 0
        for j in range(candidates.shape[1]):
            c = candidates[:, j:j + 1]
            trial = np.hstack([cur, c])
            rt = la.numerical_rank(trial)
            if rt > r:
                chosen.append(c[:, 0].copy())
                cur, r = trial, rt
                if len(chosen) == need:
                    break
        return chosen
    X = candidates
    if base is not None and base.shape[1]:
        Q = la.column_space(base, tol=tol).basis
        X = X - Q @ (Q.conj().T @ X)
    u, s, _ = np.linalg.svd(X, full_matrices=False)
    if len(s) < need or s[need - 1] <= tol:
        raise DefectiveDecompositionError(
            "could not find independent chain tops; try a larger eig_cluster_tolerance")
    chosen = []
    for k in range(need):
        v = u[:, k]
        i = int(np.argmax(np.abs(v)))
        phase = v[i] / abs(v[i])
        v = v / phase
        if not np.iscomplexobj(candidates):
            v = v.real
        chosen.append(v)
    return chosen


def _group_chains(A, lam, nk, exact, field):
    n = A.shape[0]
    if exact:
        M = A - lam * la.eye(n, exact=True)
    else:
        Af = la.as_float(A)
        M = Af - lam * np.eye(n)
    kernels = []
    dims = [0]
    power = None
    for j in range(1, nk + 1):
        power = M if power is None else power @ M
        if exact:
            K = la.null_space(power)
            tol = None
        else:
            tol = field.cluster_tol * max(1.0, np.linalg.norm(power, 2))
            K = la.null_space(power, tol=tol)
        kernels.append(K)
        dims.append(K.dim)
        if K.dim >= nk or dims[-1] == dims[-2]:
            break
    if dims[-1] != nk:
        raise DefectiveDecompositionError(
            f"eigenvalue {la.frac_str(lam)}: kernel dimensions {dims[1:]} do not reach the "
            f"algebraic multiplicity {nk}; try a larger eig_cluster_tolerance")
    s = len(kernels)
    at_least = [dims[j] - dims[j - 1] for j in range(1, s + 1)] + [0]
    if any(at_least[j] < at_least[j + 1] for j in range(s)):
        raise DefectiveDecompositionError(
            f"eigenvalue {la.frac_str(lam)}: inconsistent kernel sequence {dims[1:]}")
    chains: list[tuple[np.ndarray, int]] = []
    tol = None if exact else field.cluster_tol * max(1.0, np.linalg.norm(M, 2))
    for j in range(s, 0, -1):
        need = at_least[j - 1] - at_least[j]
        if need == 0:
            continue
        level = []
        for top, L in chains:
            v = top
            for _ in range(L - j):
                v = M @ v
            level.append(v.reshape(-1, 1))
        parts = []
        if j >= 2:
            parts.append(kernels[j - 2].basis)
        parts.extend(level)
        base = np.hstack(parts) if parts else None
        tops = _pick_tops(kernels[j - 1].basis, base, need, exact, tol if tol else 0.0)
        chains.extend((t, j) for t in tops)
    cols = []
    sizes = []
    for top, L in chains:
        vecs = [top]
        for _ in range(L - 1):
            vecs.append(M @ vecs[-1])
        cols.extend(reversed(vecs))
        sizes.append(L)
    return cols, sizes


def jordan_decompose(A, field: la.ScalarField | None = None) -> JordanForm:
    """Jordan form J = P A P^{-1} with deterministic chain selection."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"A must be square, got shape {A.shape}")
    exact = la.is_exact(A) if field is None else field.exact
    if exact:
        A = la.as_exact(A)
    field = field or (la.EXACT if exact else la.FLOAT)
    n = A.shape[0]
    spectrum = eigen_cluster(A, field)
    columns = []
    groups = []
    pos = 0
    for lam, nk in spectrum:
        cols, sizes = _group_chains(A, lam, nk, exact, field)
        leads = []
        p = pos
        for k in sizes:
            leads.append(p)
            p += k
        groups.append(EigenGroup(
            eigenvalue=lam,
            algebraic_multiplicity=nk,
            geometric_multiplicity=len(sizes),
            block_sizes=tuple(sizes),
            column_range=(pos, pos + nk),
            lead_column_indices=tuple(leads) if nk > 1 else (),
        ))
        columns.extend(cols)
        pos += nk

    complex_case = any(isinstance(g.eigenvalue, complex) for g in groups)
    if exact:
        V = la.zeros((n, n), exact=True)
        J = la.zeros((n, n), exact=True)
    else:
        dtype = complex if complex_case else float
        V = np.zeros((n, n), dtype=dtype)
        J = np.zeros((n, n), dtype=dtype)
    for j, c in enumerate(columns):
        V[:, j] = c
    for g in groups:
        for start, k in zip(g.block_starts, g.block_sizes):
            for i in range(start, start + k):
                J[i, i] = g.eigenvalue
                if i + 1 < start + k:
                    J[i, i + 1] = 1 if not exact else Fraction(1)

    warn = []
    if exact:
        try:
            P = la.exact_inverse(V)
        except np.linalg.LinAlgError:
            raise DefectiveDecompositionError("Jordan chains are linearly dependent")
        jf = JordanForm(P=P, J=J, P_inv=V, groups=groups, condition_number=float(
            np.linalg.cond(la.as_float(V))) if n else 1.0, warnings=warn)
        if jf.residual(A) != 0.0:
            raise DefectiveDecompositionError("exact reconstruction P A P^-1 = J failed")
        return jf

    cond = float(np.linalg.cond(V)) if n else 1.0
    if not np.isfinite(cond):
        raise DefectiveDecompositionError(
            "Jordan basis is singular; try a larger eig_cluster_tolerance")
    P = np.linalg.inv(V)
    if cond > COND_WARNING:
        warn.append(f"cond(P) = {cond:.3g} exceeds {COND_WARNING:g}; "
                    "eigenstructure conclusions are tolerance-sensitive")
    jf = JordanForm(P=P, J=J, P_inv=V, groups=groups, condition_number=cond, warnings=warn)
    Af = la.as_float(A)
    res = jf.residual(Af)
    if res > 1e-8 * (1.0 + np.linalg.norm(Af)):
        raise DefectiveDecompositionError(
            f"reconstruction residual {res:.3g} too large; "
            "try a larger eig_cluster_tolerance")
    return jf


# ---------------------------------------------------------------------------
# lead columns

def _check_cols(Mbar, jf):
    Mbar = np.atleast_2d(np.asarray(Mbar))
    if Mbar.shape[1] != jf.n:
        raise DimensionError(f"matrix has {Mbar.shape[1]} columns, Jordan form is {jf.n}x{jf.n}")
    return Mbar


def lead_columns(Mbar, jf: JordanForm) -> list[np.ndarray]:
    """Per eigenvalue group, the columns of ``Mbar`` at that group's lead indices."""
    Mbar = _check_cols(Mbar, jf)
    return [Mbar[:, list(g.lead_column_indices)] for g in jf.groups]


def lead_columns_independent(Mbar, jf: JordanForm,
                             groups: list[int] | None = None) -> tuple[list[bool], bool]:
    """Linear independence of lead columns, per group and overall.

    A group passes trivially when its eigenvalue is simple or when the
    group's block of ``Mbar`` vanishes.  ``groups`` restricts the overall
    verdict to the listed group indices.
    """
    Mbar = _check_cols(Mbar, jf)
    exact = la.is_exact(Mbar)
    tol = None if exact else 1e-10 * max(1.0, float(np.linalg.norm(la.as_float(Mbar), 2)))
    per_group = []
    for g, leads in zip(jf.groups, lead_columns(Mbar, jf)):
        start, stop = g.column_range
        block = Mbar[:, start:stop]
        if g.algebraic_multiplicity == 1 or la.numerical_rank(block, tol=tol) == 0:
            per_group.append(True)
            continue
        per_group.append(la.numerical_rank(leads, tol=tol) == leads.shape[1])
    selected = per_group if groups is None else [per_group[i] for i in groups]
    return per_group, all(selected)


def jordan_block_matrix(spec: list[tuple[object, list[int]]], exact: bool = True) -> np.ndarray:
    """Block-diagonal Jordan matrix from [(eigenvalue, [block sizes]), ...]."""
    n = sum(sum(sizes) for _, sizes in spec)
    J = la.zeros((n, n), exact=exact)
    pos = 0
    for lam, sizes in spec:
        for k in sizes:
            for i in range(pos, pos + k):
                J[i, i] = Fraction(lam) if exact else float(lam)
                if i + 1 < pos + k:
                    J[i, i + 1] = Fraction(1) if exact else 1.0
            pos += k
    return J


__all__ = [
    "EigenGroup", "JordanForm", "charpoly", "rational_roots", "eigen_cluster",
    "jordan_decompose", "lead_columns", "lead_columns_independent", "jordan_block_matrix",
]

warnings.filterwarnings("default", category=RuntimeWarning, module=__name__)
