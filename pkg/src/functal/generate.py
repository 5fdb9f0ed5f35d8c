"""Random systems with prescribed Jordan structure.

All matrices are exact integers: A = P^{-1} J P with P unimodular, so
P^{-1} is integral too and every test can run in rational arithmetic.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg as la
from .ctrb import CtrbTriple, test_output_ctrb_kalman
from .errors import FunctalError
from .jordan import jordan_block_matrix
from .obsv import ObsvTriple, test_functional_obsv_kalman, test_functional_obsv_pbh

ENSURE_CHOICES = ("obsv", "not-obsv", "ctrb", "not-ctrb", "assumption-fail")
MAX_ATTEMPTS = 1000
MAX_P_COND = 100.0

JordanSpec = list[tuple[Fraction, list[int]]]


class InfeasibleError(FunctalError):
    pass


def parse_jordan_spec(text: str) -> JordanSpec:
    """``"0:[3];1/2:[1,1]"`` -> [(0, [3]), (1/2, [1, 1])]."""
    spec = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        m = re.fullmatch(r"(-?\d+(?:/\d+)?)\s*:\s*\[\s*(\d+(?:\s*,\s*\d+)*)\s*\]", part)
        if m is None:
            raise ValueError(f"bad Jordan spec entry {part!r}; expected e.g. '0:[2,1]'")
        sizes = [int(s) for s in m.group(2).split(",")]
        if any(s < 1 for s in sizes):
            raise ValueError(f"block sizes must be positive in {part!r}")
        spec.append((Fraction(m.group(1)), sizes))
    lams = [lam for lam, _ in spec]
    if not spec:
        raise ValueError("empty Jordan spec")
    if len(set(lams)) != len(lams):
        raise ValueError("eigenvalues in a Jordan spec must be distinct")
    return spec


def format_jordan_spec(spec: JordanSpec) -> str:
    return ";".join(f"{lam}:[{','.join(map(str, sizes))}]" for lam, sizes in spec)


def spec_size(spec: JordanSpec) -> int:
    return sum(sum(sizes) for _, sizes in spec)


def _partition(rng: np.random.Generator, n: int) -> list[int]:
    parts = []
    while n:
        k = int(rng.integers(1, n + 1))
        parts.append(k)
        n -= k
    return sorted(parts, reverse=True)


def random_jordan_spec(rng: np.random.Generator, n: int, defective: bool | None = None) -> JordanSpec:
    """Random structure on small integer eigenvalues.

    ``defective`` forces (True) or forbids (False) a block of size > 1.
    """
    for _ in range(MAX_ATTEMPTS):
        mults = _partition(rng, n)
        if len(mults) > 7:
            continue
        lams = rng.choice(np.arange(-3, 4), size=len(mults), replace=False)
        spec = []
        for lam, m in zip(lams, mults):
            sizes = [1] * m if defective is False else _partition(rng, m)
            spec.append((Fraction(int(lam)), sizes))
        if defective is None or defective == any(max(s) > 1 for _, s in spec):
            return sorted(spec)
    raise InfeasibleError(f"no Jordan structure of size {n} with defective={defective}")


def random_unimodular(rng: np.random.Generator, n: int, max_cond: float = MAX_P_COND):
    """Integer P with det = ±1 and 2-norm condition number <= ``max_cond``."""
    for _ in range(MAX_ATTEMPTS):
        P = np.eye(n, dtype=np.int64)
        for _ in range(2 * n):
            i, j = rng.choice(n, size=2, replace=False) if n > 1 else (0, 0)
            if i != j:
                P[i] += int(rng.choice([-1, 1])) * P[j]
        P = P[rng.permutation(n)]
        if np.linalg.cond(P.astype(float)) <= max_cond:
            Pe = la.as_exact(P)
            return Pe, la.exact_inverse(Pe)
    raise InfeasibleError(f"no unimodular {n}x{n} matrix with condition <= {max_cond}")


def max_krylov_rank(spec: JordanSpec, q: int) -> int:
    """Largest rank of [B, AB, ...] (or of O(C, A)) with q columns (rows).

    Per eigenvalue, q vectors excite at most the q longest Jordan chains.
    """
    return sum(sum(sorted(sizes, reverse=True)[:q]) for _, sizes in spec)


def _ints(rng, shape, lo=-2, hi=2) -> np.ndarray:
    return la.as_exact(rng.integers(lo, hi + 1, size=shape))


def _full_row_rank(M) -> bool:
    return la.numerical_rank(M) == M.shape[0]


def _integer_basis_rows(S: la.Subspace) -> np.ndarray:
    # rescale each rational basis vector to integers
    rows = []
    for v in S.basis.T:
        den = np.lcm.reduce([x.denominator for x in v])
        rows.append([x * den for x in v])
    return la.as_exact(np.array(rows, dtype=object).reshape(len(rows), S.ambient_dim))


def _lead_positions(spec: JordanSpec) -> list[tuple[int, list[int], list[int]]]:
    # (group start, lead columns, last columns) per eigenvalue
    out, pos = [], 0
    for _, sizes in spec:
        leads, lasts, p = [], [], pos
        for k in sizes:
            leads.append(p)
            lasts.append(p + k - 1)
            p += k
        out.append((pos, leads, lasts))
        pos = p
    return out


@dataclass
class GeneratedSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    F: np.ndarray
    spec: JordanSpec
    P: np.ndarray
    notes: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def obsv_triple(self) -> ObsvTriple:
        return ObsvTriple(self.C, self.A, self.F, la.EXACT)

    def ctrb_triple(self) -> CtrbTriple:
        return CtrbTriple(self.A, self.B, self.F, la.EXACT)


def _draw(rng, spec, q, r, ensure):
    n = spec_size(spec)
    P, P_inv = random_unimodular(rng, n)
    J = jordan_block_matrix(spec, exact=True)
    A = P_inv @ J @ P
    Cbar, Bbar, Fbar = _ints(rng, (q, n)), _ints(rng, (n, q)), _ints(rng, (r, n))
    groups = _lead_positions(spec)
    g = int(rng.integers(len(groups)))
    _, leads, lasts = groups[g]
    if ensure == "not-obsv":
        # hide one Jordan chain from the output
        Cbar[:, leads[0]] = 0
    elif ensure == "not-ctrb":
        Bbar[lasts[0], :] = 0
    elif ensure == "assumption-fail":
        Fbar[:, leads[int(rng.integers(len(leads)))]] = 0
    C, B, F = Cbar @ P, P_inv @ Bbar, Fbar @ P
    if ensure == "obsv":
        O = la.obsv_matrix(C, A)
        F = _ints(rng, (r, O.shape[0]), -1, 1) @ O
    elif ensure == "not-ctrb":
        left = la.null_space(la.ctrb_matrix(A, B).T)
        if left.dim:
            w = _integer_basis_rows(left)[:1]
            F = la.stack(w, F[1:]) if r > 1 else w
    return A, B, C, F, P


def _satisfies(sys: GeneratedSystem, ensure: str | None) -> bool:
    if not _full_row_rank(sys.F):
        return False
    if ensure is None:
        return True
    if ensure in ("obsv", "not-obsv"):
        return test_functional_obsv_kalman(sys.obsv_triple()).verdict == (ensure == "obsv")
    if ensure in ("ctrb", "not-ctrb"):
        return test_output_ctrb_kalman(sys.ctrb_triple()).verdict == (ensure == "ctrb")
    if ensure == "assumption-fail":
        return test_functional_obsv_pbh(sys.obsv_triple()).assumption_ok is False
    raise ValueError(f"unknown ensure mode {ensure!r}; choose from {ENSURE_CHOICES}")


def generate_system(spec: JordanSpec, q: int = 1, r: int = 1, ensure: str | None = None,
                    seed: int | None = 0) -> GeneratedSystem:
    """Draw (A, B, C, F) with A similar to the Jordan matrix of ``spec``.

    Candidates are checked with the rank tests (or, for
    ``"assumption-fail"``, the lead-column check) and redrawn up to
    ``MAX_ATTEMPTS`` times.
    """
    if ensure is not None and ensure not in ENSURE_CHOICES:
        raise ValueError(f"unknown ensure mode {ensure!r}; choose from {ENSURE_CHOICES}")
    n = spec_size(spec)
    if q < 1 or r < 1:
        raise ValueError("q and r must be positive")
    if r > n:
        raise InfeasibleError(f"F cannot have full row rank {r} with n = {n}")
    if ensure in ("obsv", "ctrb") and r > max_krylov_rank(spec, q):
        raise InfeasibleError(
            f"rank {r} target exceeds the largest reachable rank {max_krylov_rank(spec, q)} "
            f"for {format_jordan_spec(spec)} with q = {q}")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_ATTEMPTS):
        A, B, C, F, P = _draw(rng, spec, q, r, ensure)
        sys = GeneratedSystem(A, B, C, F, spec, P)
        if _satisfies(sys, ensure):
            return sys
    raise InfeasibleError(
        f"no system with Jordan structure {format_jordan_spec(spec)}, q={q}, r={r} "
        f"satisfying {ensure!r} after {MAX_ATTEMPTS} attempts")


def random_system(rng: np.random.Generator, n_max: int = 8, q_max: int = 2,
                  r_max: int = 3, defective: bool | None = None) -> GeneratedSystem:
    """One sweep sample: random size, structure and a random ensure mode.

    Roughly a third of the draws are unconstrained; the rest are pushed
    towards the interesting corners (F inside the observable space, a
    hidden chain, an uncontrollable mode, a zero lead column).
    """
    n = int(rng.integers(1, n_max + 1))
    spec = random_jordan_spec(rng, n, defective)
    q = int(rng.integers(1, q_max + 1))
    r = int(rng.integers(1, min(r_max, n) + 1))
    modes = [None, None, None, "obsv", "not-obsv", "not-ctrb", "assumption-fail"]
    ensure = modes[int(rng.integers(len(modes)))]
    for attempt in range(MAX_ATTEMPTS):
        if attempt == 20:
            # the hint cannot give a full-rank F here (e.g. n = 1 with a zeroed lead column)
            ensure = None
        A, B, C, F, P = _draw(rng, spec, q, r, ensure)
        sys = GeneratedSystem(A, B, C, F, spec, P, notes=[f"ensure-hint={ensure}"])
        if _full_row_rank(F):
            return sys
    raise InfeasibleError(f"could not draw a full-row-rank F for {format_jordan_spec(spec)}")
