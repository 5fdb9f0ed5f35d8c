"""Analysis pipeline, JSON (de)serialization and text rendering of reports."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from fractions import Fraction

import jsonschema
import numpy as np

from . import linalg as la
from .ctrb import (CONDITION3_GAP, CtrbReport, CtrbTriple, test_output_ctrb_kalman,
                   test_output_ctrb_pbh)
from .duality import (DualityReport, PsiCheck, StructuralCheck, check_structural_conditions,
                      check_psi_rank_duality, check_strong_duality)
from .errors import ConsistencyError, InputError
from .obsv import (Certificate, ObsvReport, ObsvTriple, test_functional_detectability,
                   test_functional_obsv_kalman, test_functional_obsv_pbh,
                   test_functional_obsv_rotella)
from .sysfile import SystemFile, load_schema

SCHEMA_VERSION = 1


@dataclass
class DualitySection:
    strong: DualityReport
    psi: list[PsiCheck]
    structural: StructuralCheck


@dataclass
class AnalysisReport:
    system: str
    scalar: str
    n: int
    obsv: dict[str, ObsvReport] | None = None
    detectability: ObsvReport | None = None
    ctrb: dict[str, CtrbReport] | None = None
    duality: DualitySection | None = None
    agreement: dict[str, bool] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    gaps: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# pipeline

def _obsv_section(t: ObsvTriple, rep: AnalysisReport) -> None:
    k, r, p = (test_functional_obsv_kalman(t), test_functional_obsv_rotella(t),
               test_functional_obsv_pbh(t))
    rep.obsv = {"kalman": k, "rotella": r, "pbh": p}
    rep.agreement["obsv:kalman~rotella"] = k.verdict == r.verdict
    rep.agreement["obsv:kalman~pbh"] = k.verdict == p.verdict
    if k.verdict != r.verdict:
        rep.violations.append(f"obsv: Kalman ({k.verdict}) and Rotella ({r.verdict}) disagree")
    if k.verdict != p.verdict and (p.assumption_ok or k.verdict):
        rep.violations.append(f"obsv: Kalman ({k.verdict}) and PBH ({p.verdict}) disagree "
                              f"(assumption_ok={p.assumption_ok})")
    if p.necessary_only:
        pbh = ("rank equality holds; assumption violated; inconclusive (necessary-only)"
               if p.verdict else "rank equality fails")
    else:
        pbh = "agrees" if k.verdict == p.verdict else "disagrees"
    rep.summary.append(f"functional observability: {str(k.verdict).lower()} "
                       f"(Kalman {_tf(k.verdict)}, Rotella {_tf(r.verdict)}, PBH {pbh})")


def _ctrb_section(t: CtrbTriple, rep: AnalysisReport) -> None:
    k, p = test_output_ctrb_kalman(t), test_output_ctrb_pbh(t)
    rep.ctrb = {"kalman": k, "pbh": p}
    rep.agreement["ctrb:kalman~pbh"] = k.verdict == p.verdict
    rep.agreement["ctrb:kalman~rank_clause"] = k.verdict == p.rank_clause
    if k.verdict != p.verdict:
        if k.full_state_controllable:
            rep.violations.append(f"ctrb: condition 1 ({k.verdict}) and condition 2 "
                                  f"({p.verdict}) disagree on a controllable pair")
        else:
            rep.gaps.append(CONDITION3_GAP)
            p.warnings.append(CONDITION3_GAP)
    label = "condition 2" if k.full_state_controllable else "condition 3"
    witness = ("present" if p.intersection_nonempty else "none") \
        if p.intersection_nonempty is not None else "n/a"
    rep.summary.append(f"output controllability: {str(k.verdict).lower()} "
                       f"(rank test {_tf(k.verdict)}, {label} {_tf(p.verdict)}, "
                       f"rank clause {_tf(p.rank_clause)}, intersection witness {witness})")


def _duality_section(t: ObsvTriple, horizon: float, rep: AnalysisReport) -> None:
    try:
        strong = check_strong_duality(t, horizon)
    except ConsistencyError as e:
        rep.violations.append(f"duality: {e}")
        return
    psi = check_psi_rank_duality(t)
    structural = check_structural_conditions(t)
    rep.duality = DualitySection(strong, psi, structural)
    if not strong.strong_duality_consistent:
        rep.violations.append("duality: primal verdict differs from dual verdict combined "
                              "with the orthogonality condition")
    bad = [la.frac_str(c.eigenvalue) for c in psi if not c.holds]
    if bad:
        rep.violations.append(f"duality: Psi rank implication fails at lambda = {bad}")
    if not structural.consistent:
        rep.gaps.extend(structural.warnings)
    rep.summary.append(
        f"duality: primal {_tf(strong.primal_obsv)}, dual {_tf(strong.dual_ctrb)}, "
        f"orthogonality {_tf(strong.orthogonality_ok)}, "
        f"strong duality {'consistent' if strong.strong_duality_consistent else 'VIOLATED'} "
        f"(t1 = {horizon:g})")


def _detect_section(t: ObsvTriple, rep: AnalysisReport) -> None:
    d = test_functional_detectability(t)
    rep.detectability = d
    note = "; assumption violated (necessary-only)" if d.assumption_ok is False else ""
    rep.summary.append(f"functional detectability: {str(d.verdict).lower()}{note}")


def _tf(v) -> str:
    return "n/a" if v is None else str(bool(v)).lower()


def analyze(s: SystemFile, sections=None) -> AnalysisReport:
    """Run the requested sections (all applicable ones when ``sections`` is empty)."""
    requested = set(sections or ())
    if not requested:
        requested = {"ctrb"} if s.B is not None else set()
        if s.C is not None:
            requested |= {"obsv", "duality", "detectability"}
    need_c = requested & {"obsv", "duality", "detectability"}
    if need_c and s.C is None:
        raise InputError(f"{s.name}: --{sorted(need_c)[0]} needs C in the system file")
    if "ctrb" in requested and s.B is None:
        raise InputError(f"{s.name}: --ctrb needs B in the system file")
    if not requested:
        raise InputError(f"{s.name}: nothing to analyze (no B and no C)")
    rep = AnalysisReport(s.name, s.scalar, s.n)
    fld = s.field
    if need_c:
        ot = ObsvTriple(s.C, s.A, s.F, fld)
        if "obsv" in requested:
            _obsv_section(ot, rep)
        if "detectability" in requested:
            _detect_section(ot, rep)
        if "duality" in requested:
            _duality_section(ot, s.horizon, rep)
    if "ctrb" in requested:
        _ctrb_section(CtrbTriple(s.A, s.B, s.F, fld), rep)
    return rep


# ---------------------------------------------------------------------------
# JSON

_TYPES = {cls.__name__: cls for cls in (
    Certificate, ObsvReport, CtrbReport, DualityReport, PsiCheck, StructuralCheck,
    DualitySection, AnalysisReport)}
_SCALAR_FIELDS = {("Certificate", "eigenvalue"), ("Certificate", "vector"),
                  ("PsiCheck", "eigenvalue")}
_DERIVED = {"ObsvReport": ("necessary_only",), "CtrbReport": ("rank_clause",),
            "PsiCheck": ("holds",), "StructuralCheck": ("applicable", "consistent"),
            "AnalysisReport": ("consistent",)}


def encode_scalar(x):
    if x is None:
        return None
    if isinstance(x, (Fraction, int, np.integer)) and not isinstance(x, bool):
        return str(Fraction(x))
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    return float(x)


def decode_scalar(x):
    if x is None:
        return None
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, dict):
        return complex(x["re"], x["im"])
    return float(x)


def _encode(obj, owner=None, name=None):
    if (owner, name) in _SCALAR_FIELDS:
        if isinstance(obj, tuple):
            return [encode_scalar(v) for v in obj]
        return encode_scalar(obj)
    if dataclasses.is_dataclass(obj):
        cls = type(obj).__name__
        out = {"type": cls}
        for f in dataclasses.fields(obj):
            out[f.name] = _encode(getattr(obj, f.name), cls, f.name)
        for prop in _DERIVED.get(cls, ()):
            out[prop] = getattr(obj, prop)
        return out
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _decode(data, owner=None, name=None):
    if (owner, name) in _SCALAR_FIELDS:
        if isinstance(data, list):
            return tuple(decode_scalar(v) for v in data)
        return decode_scalar(data)
    if isinstance(data, dict) and data.get("type") in _TYPES:
        cls = _TYPES[data["type"]]
        kwargs = {f.name: _decode(data[f.name], cls.__name__, f.name)
                  for f in dataclasses.fields(cls) if f.name in data}
        return cls(**kwargs)
    if isinstance(data, dict):
        return {k: _decode(v) for k, v in data.items()}
    if isinstance(data, list):
        return [_decode(v) for v in data]
    return data


def report_to_dict(rep: AnalysisReport) -> dict:
    out = _encode(rep)
    out["schema_version"] = SCHEMA_VERSION
    return out


def report_from_dict(data: dict) -> AnalysisReport:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise InputError(f"unsupported report schema version {data.get('schema_version')!r}")
    return _decode(data)


def serialize(rep: AnalysisReport) -> str:
    return json.dumps(report_to_dict(rep), indent=2, sort_keys=True) + "\n"


def parse(text: str) -> AnalysisReport:
    return report_from_dict(json.loads(text))


def validate_report(data: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``data`` violates the report schema."""
    jsonschema.validate(data, load_schema("report"))


# ---------------------------------------------------------------------------
# text

def _fmt_cert(c: Certificate | None) -> str:
    if c is None:
        return "-"
    bits = [c.kind if c.index is None else f"{c.kind} {c.index}"]
    if c.eigenvalue is not None:
        bits.append(f"lambda={la.frac_str(c.eigenvalue)}")
    if c.vector is not None:
        bits.append("[" + ", ".join(la.frac_str(v) for v in c.vector) + "]")
    return " ".join(bits)


def _fmt_ranks(ranks: dict) -> str:
    return ", ".join(f"{k}={v}" for k, v in ranks.items())


def render_text(rep: AnalysisReport) -> str:
    lines = [f"system {rep.system} (n = {rep.n}, scalar = {rep.scalar})"]
    if rep.obsv:
        lines.append("functional observability")
        for key, r in rep.obsv.items():
            extra = "" if r.assumption_ok is None else f"  assumption_ok={_tf(r.assumption_ok)}"
            lines.append(f"  {r.method:<8} verdict={_tf(r.verdict)}  ranks: {_fmt_ranks(r.ranks)}"
                         f"{extra}  certificate: {_fmt_cert(r.certificate)}")
    if rep.detectability:
        d = rep.detectability
        lines.append("functional detectability")
        lines.append(f"  verdict={_tf(d.verdict)}  ranks: {_fmt_ranks(d.ranks) or '-'}  "
                     f"assumption_ok={_tf(d.assumption_ok)}")
    if rep.ctrb:
        lines.append("output controllability")
        k, p = rep.ctrb["kalman"], rep.ctrb["pbh"]
        lines.append(f"  rank test verdict={_tf(k.verdict)}  ranks: {_fmt_ranks(k.ranks)}  "
                     f"certificate: {_fmt_cert(k.certificate)}")
        lines.append(f"  PBH       verdict={_tf(p.verdict)}  ranks: {_fmt_ranks(p.ranks)}  "
                     f"full_state_controllable={_tf(p.full_state_controllable)}  "
                     f"intersection_nonempty={_tf(p.intersection_nonempty)}  "
                     f"certificate: {_fmt_cert(p.certificate)}")
    if rep.duality:
        s, st = rep.duality.strong, rep.duality.structural
        lines.append("duality")
        lines.append(f"  primal_obsv={_tf(s.primal_obsv)}  dual_ctrb={_tf(s.dual_ctrb)}  "
                     f"orthogonality_ok={_tf(s.orthogonality_ok)}  "
                     f"strong_duality_consistent={_tf(s.strong_duality_consistent)}  "
                     f"t1={s.gramian_horizon:g}")
        for c in rep.duality.psi:
            lines.append(f"  Psi at lambda={la.frac_str(c.eigenvalue)}: "
                         f"stacked_equal={_tf(c.stacked_equal)} dual_equal={_tf(c.dual_equal)}")
        lines.append(f"  structural: normal_A={_tf(st.normal_A)} "
                     f"orthogonal_CU_columns={_tf(st.orthogonal_CU_columns)} "
                     f"rowF_in_eigenspaces={_tf(st.rowF_in_eigenspaces)} "
                     f"applicable={_tf(st.applicable)}")
    warnings = []
    for r in [*(rep.obsv or {}).values(), *(rep.ctrb or {}).values(), rep.detectability]:
        if r is not None:
            warnings.extend(w for w in r.warnings if w not in warnings)
    for w in warnings:
        lines.append(f"warning: {w}")
    for g in rep.gaps:
        if g not in warnings:
            lines.append(f"gap: {g}")
    lines.append("summary")
    lines.extend(f"  {s}" for s in rep.summary)
    for v in rep.violations:
        lines.append(f"CONSISTENCY VIOLATION: {v}")
    return "\n".join(lines) + "\n"
