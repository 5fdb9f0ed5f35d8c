"""Functional observability and output controllability of LTI systems."""
from __future__ import annotations

from .ctrb import (CtrbReport, CtrbTriple, min_energy_steering, simulate_lti,
                   test_output_ctrb_kalman, test_output_ctrb_pbh)
from .duality import (DualityReport, check_psi_rank_duality, check_strong_duality,
                      check_structural_conditions, check_weak_duality, dualize, primalize)
from .jordan import jordan_decompose, lead_columns_independent
from .linalg import EXACT, FLOAT, ScalarField
from .obsv import (ObsvReport, ObsvTriple, Signal, canonical_obsv_decomposition,
                   reconstruct_target, test_functional_detectability,
                   test_functional_obsv_kalman, test_functional_obsv_pbh,
                   test_functional_obsv_rotella)

__version__ = "0.1.0"

__all__ = [
    "CtrbReport", "CtrbTriple", "DualityReport", "EXACT", "FLOAT", "ObsvReport",
    "ObsvTriple", "ScalarField", "Signal", "canonical_obsv_decomposition",
    "check_psi_rank_duality", "check_strong_duality", "check_structural_conditions",
    "check_weak_duality", "dualize", "jordan_decompose", "lead_columns_independent",
    "min_energy_steering", "primalize", "reconstruct_target", "simulate_lti",
    "test_functional_detectability", "test_functional_obsv_kalman",
    "test_functional_obsv_pbh", "test_functional_obsv_rotella",
    "test_output_ctrb_kalman", "test_output_ctrb_pbh",
]
