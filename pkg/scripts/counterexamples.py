"""Small systems where a rank-test shortcut and the rank test disagree.

    python scripts/counterexamples.py
"""
from __future__ import annotations

import numpy as np

from functal import linalg as la
from functal.ctrb import CtrbTriple, test_output_ctrb_kalman, test_output_ctrb_pbh
from functal.duality import check_structural_conditions
from functal.obsv import ObsvTriple


def _m(rows):
    return la.as_exact(rows)


def reachable_without_witness():
    # x1 is driven directly, so z = x1 is reachable; ker(C^T) ∩ row(F) = {0}
    A = _m([[0, 1, 0], [0, 0, 1], [0, 0, 0]])
    t = CtrbTriple(A, _m([[1], [0], [0]]), _m([[1, 0, 0]]))
    k, p = test_output_ctrb_kalman(t), test_output_ctrb_pbh(t)
    print("eigenspace test with an uncontrollable pair")
    print(f"  rank test {k.verdict} (F C rank {k.ranks['FC']} = rank F {k.ranks['F']})")
    print(f"  rank clause {p.rank_clause}, witness {p.intersection_nonempty}, "
          f"eigenspace verdict {p.verdict}")
    # smallest case: A = diag(1, 2), B = e1, F = e1
    t = CtrbTriple(_m([[1, 0], [0, 2]]), _m([[1], [0]]), _m([[1, 0]]))
    print(f"  diag(1, 2), B = e1, F = e1: rank test {test_output_ctrb_kalman(t).verdict}, "
          f"eigenspace verdict {test_output_ctrb_pbh(t).verdict}")


def rank_clause_too_weak():
    t = CtrbTriple(_m(np.diag([1, 2, 3])), _m([[0], [0], [1]]), _m([[1, 1, 0]]))
    k, p = test_output_ctrb_kalman(t), test_output_ctrb_pbh(t)
    print("rank clause alone, diagonal A with simple spectrum")
    print(f"  rank test {k.verdict} (F C = 0), rank clause {p.rank_clause} "
          f"at every eigenvalue: {p.ranks}")


def repeated_eigenvalue_structural():
    t = ObsvTriple(_m([[1, 0]]), _m([[1, 0], [0, 1]]), _m([[1, 1]]))
    chk = check_structural_conditions(t)
    print("structural duality conditions with A = I")
    print(f"  normal {chk.normal_A}, orthogonal C U columns {chk.orthogonal_CU_columns}, "
          f"row(F) in an eigenspace {chk.rowF_in_eigenspaces}")
    print(f"  primal {chk.primal_obsv}, dual {chk.dual_ctrb}, consistent {chk.consistent}")


if __name__ == "__main__":
    reachable_without_witness()
    rank_clause_too_weak()
    repeated_eigenvalue_structural()
