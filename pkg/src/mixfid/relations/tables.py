"""Known property status of each measure and reproduction of every cell.

Cell values are ``"holds"``, ``"violated"`` or ``"open"`` (status unknown).
For the multiplicativity table they are ``"="`` (multiplicative),
``"super"`` (super-multiplicative but not multiplicative) or ``"x"``
(not even super-multiplicative).

A ``holds`` cell is reproduced when random sampling finds no violation and
no registered counterexample contradicts it. A ``violated`` cell needs a
witness whose margin re-evaluates above the violation threshold: from the
registry, from the sample, or from :func:`falsify`. ``open`` cells are
searched and the outcome is recorded without being judged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ..ensembles import stream
from ..measures import AXIOM_MEASURES, CORE_MEASURES, MeasureId, evaluate
from .checks import PropertyReport, check_axioms, report_from_margins, sample_property
from .core import (
    AXIOMS,
    VIOLATION_MARGIN,
    MetricFunctional,
    Property,
    as_measure,
    sample_instances,
)
from .registry import load_registry
from .search import falsify
from .witness import Counterexample

HOLDS, VIOLATED, OPEN = "holds", "violated", "open"

_ALL_HOLD = {ax: HOLDS for ax in AXIOMS}


def _axioms(**violated) -> dict:
    row = dict(_ALL_HOLD)
    for name in violated:
        row[Property(name)] = VIOLATED
    return row


AXIOM_TABLE = {
    "F1": _axioms(),
    "FQ": _axioms(),
    "FN": _axioms(J1C=1),
    "FC": _axioms(J1C=1, J3=1),
    "FA": _axioms(J3=1),
    "FGM": _axioms(J3=1),
    "F2": _axioms(),
    "FAM": _axioms(J3=1),
    "FHM": _axioms(J1A=1, J1B=1, J3=1),
    "FMIN": _axioms(J1A=1, J1B=1, J3=1),
}

CONCAVITY_TABLE = {
    "F1": {Property.SEP_CONCAVE: HOLDS, Property.JOINT_CONCAVE: VIOLATED},
    "F2": {Property.SEP_CONCAVE: VIOLATED, Property.JOINT_CONCAVE: VIOLATED},
    "FQ": {Property.SEP_CONCAVE: HOLDS, Property.JOINT_CONCAVE: HOLDS},
    "FN": {Property.SEP_CONCAVE: HOLDS, Property.JOINT_CONCAVE: HOLDS},
    "FC": {Property.SEP_CONCAVE: OPEN, Property.JOINT_CONCAVE: OPEN},
    "FGM": {Property.SEP_CONCAVE: VIOLATED, Property.JOINT_CONCAVE: VIOLATED},
    "FAM": {Property.SEP_CONCAVE: VIOLATED, Property.JOINT_CONCAVE: VIOLATED},
    "FA": {Property.SEP_CONCAVE: OPEN, Property.JOINT_CONCAVE: VIOLATED},
}

MULT_TABLE = {
    "F1": {"ancilla": "=", "power": "=", "general": "="},
    "F2": {"ancilla": "=", "power": "=", "general": "super"},
    "FQ": {"ancilla": "=", "power": "=", "general": "super"},
    "FN": {"ancilla": "super", "power": "super", "general": "super"},
    "FC": {"ancilla": "super", "power": "super", "general": "super"},
    "FGM": {"ancilla": "=", "power": "=", "general": "="},
    "FAM": {"ancilla": "=", "power": "x", "general": "x"},
    "FA": {"ancilla": "=", "power": "=", "general": "="},
}

MONO_TABLE = {
    "F1": {Property.MONO_PTRACE: HOLDS, Property.MONO_PROJECTIVE: HOLDS, Property.MONO_GENERAL: HOLDS},
    "F2": {Property.MONO_PTRACE: VIOLATED, Property.MONO_PROJECTIVE: VIOLATED, Property.MONO_GENERAL: VIOLATED},
    "FQ": {Property.MONO_PTRACE: HOLDS, Property.MONO_PROJECTIVE: HOLDS, Property.MONO_GENERAL: HOLDS},
    "FN": {Property.MONO_PTRACE: VIOLATED, Property.MONO_PROJECTIVE: OPEN, Property.MONO_GENERAL: VIOLATED},
    "FC": {Property.MONO_PTRACE: VIOLATED, Property.MONO_PROJECTIVE: OPEN, Property.MONO_GENERAL: VIOLATED},
    "FGM": {Property.MONO_PTRACE: VIOLATED, Property.MONO_PROJECTIVE: VIOLATED, Property.MONO_GENERAL: VIOLATED},
    "FAM": {Property.MONO_PTRACE: VIOLATED, Property.MONO_PROJECTIVE: VIOLATED, Property.MONO_GENERAL: VIOLATED},
    "FA": {Property.MONO_PTRACE: HOLDS, Property.MONO_PROJECTIVE: HOLDS, Property.MONO_GENERAL: HOLDS},
}

_A, _B, _C = MetricFunctional.BURES_ANGLE, MetricFunctional.BURES_DISTANCE, MetricFunctional.SINE_DISTANCE
METRIC_TABLE = {
    "F1": {_A: HOLDS, _B: HOLDS, _C: HOLDS},
    "F2": {_A: VIOLATED, _B: VIOLATED, _C: HOLDS},
    "FQ": {_A: VIOLATED, _B: VIOLATED, _C: VIOLATED},
    "FN": {_A: VIOLATED, _B: VIOLATED, _C: HOLDS},
    "FC": {_A: OPEN, _B: OPEN, _C: HOLDS},
    "FGM": {_A: VIOLATED, _B: VIOLATED, _C: HOLDS},
    "FAM": {_A: VIOLATED, _B: VIOLATED, _C: OPEN},
    "FA": {_A: OPEN, _B: HOLDS, _C: HOLDS},
}

# a witness for a special case also refutes the general property
_IMPLIED_BY = {
    Property.JOINT_CONCAVE: (Property.SEP_CONCAVE,),
    Property.MONO_GENERAL: (Property.MONO_PTRACE, Property.MONO_PROJECTIVE),
    Property.MULT_GENERAL: (Property.MULT_ANCILLA, Property.MULT_TENSOR_POWER),
}
_SETTINGS_COVERED = {"ancilla": ("ancilla",), "power": ("power",), "general": ("ancilla", "power", "general")}


@dataclass
class CellResult:
    table: str
    measure: str
    column: str
    expected: str
    observed: str
    ok: bool
    margin: float
    n_checked: int
    witness: Optional[Counterexample] = None
    source: str = ""

    def line(self) -> str:
        status = "ok" if self.ok else "MISMATCH"
        src = f" via {self.source}" if self.source else ""
        return (
            f"[{self.table}] {self.measure:<6} {self.column:<18} expected={self.expected:<8} "
            f"observed={self.observed:<8} margin={self.margin:+.3e}{src} {status}"
        )

    def to_dict(self) -> dict:
        out = {
            "table": self.table,
            "measure": self.measure,
            "column": self.column,
            "expected": self.expected,
            "observed": self.observed,
            "ok": self.ok,
            "margin": self.margin,
            "n_checked": self.n_checked,
            "source": self.source,
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def _registry_witness(registry, prop: Property, m: MeasureId, functional=None, setting=None):
    """Best registered witness for ``prop`` (or a special case of it) and its margin."""
    props = (prop,) + _IMPLIED_BY.get(prop, ())
    best, best_mg = None, -np.inf
    for cx in registry:
        if cx.property not in props or m.label not in cx.measures:
            continue
        if setting is not None and prop is Property.SUPERMULT:
            if cx.params.get("setting", "general") not in _SETTINGS_COVERED[setting]:
                continue
        if functional is not None:
            fm = cx.functional_margins(m)
            if functional.value not in fm:
                continue
            mg = fm[functional.value]
        else:
            mg = cx.margin(m)
        if mg > best_mg:
            best, best_mg = cx, mg
    return best, best_mg


def _judge(table, m, column, expected, report: PropertyReport, reg_cx, reg_mg, search=None, implied=()) -> CellResult:
    candidates = [(report.margin, report.witness, "sample")] + list(implied)
    if reg_cx is not None:
        candidates.append((reg_mg, reg_cx, "registry"))
    if search is not None:
        candidates.append(search)
    margin, witness, source = max(candidates, key=lambda c: c[0])
    observed = VIOLATED if margin > VIOLATION_MARGIN else HOLDS
    if expected == OPEN:
        ok = True
    else:
        ok = observed == expected
    if observed == HOLDS:
        witness, source = None, ""
    return CellResult(table, m.label, column, expected, observed, ok, float(margin), report.n_checked, witness, source)


def _implied(found: dict, prop: Property, m: MeasureId) -> list:
    """Witnesses already found in this table for special cases of ``prop``."""
    out = []
    for special in _IMPLIED_BY.get(prop, ()):
        cell = found.get((m.label, special))
        if cell is not None and cell.witness is not None:
            out.append((cell.witness.margin(m), cell.witness, f"{special.value.lower()} witness"))
    return out


def _search_if_needed(prop, m, expected, report, reg_mg, dims, budget, seed, functional=None, setting="general", implied=()):
    best = max([report.margin, reg_mg] + [c[0] for c in implied])
    if expected == HOLDS or best > VIOLATION_MARGIN or budget <= 0:
        return None
    cx = falsify(prop, m, dims, budget, seed, functional=functional, setting=setting)
    if cx is None:
        return None
    return (cx.margin(m), cx, "search")


def reproduce_axiom_table(
    measures: Sequence = AXIOM_MEASURES,
    dims: Iterable[int] = (2, 3, 4),
    n_samples: int = 10000,
    seed: int = 0,
    registry=None,
) -> list:
    registry = load_registry() if registry is None else registry
    out = []
    for m in map(as_measure, measures):
        expected_row = AXIOM_TABLE.get(m.label, _ALL_HOLD)
        for rep in check_axioms(m, dims, n_samples, seed, registry=registry):
            out.append(_judge("axioms", m, rep.property.value, expected_row[rep.property], rep, None, -np.inf))
    return out


def reproduce_concavity_table(
    measures: Sequence = CORE_MEASURES, dims=(2, 3, 4), n_samples=10000, seed=0, search_budget=4000, registry=None
) -> list:
    registry = load_registry() if registry is None else registry
    out, cells = [], {}
    for m in map(as_measure, measures):
        for prop, expected in CONCAVITY_TABLE[m.label].items():
            rep = sample_property(prop, m, dims, n_samples, seed)
            reg_cx, reg_mg = _registry_witness(registry, prop, m)
            imp = _implied(cells, prop, m)
            found = _search_if_needed(prop, m, expected, rep, reg_mg, dims, search_budget, seed, implied=imp)
            cell = _judge("concavity", m, prop.value, expected, rep, reg_cx, reg_mg, found, imp)
            cells[(m.label, prop)] = cell
            out.append(cell)
    return out


def reproduce_multiplicativity_table(
    measures: Sequence = CORE_MEASURES, dims=(2, 3), n_samples=10000, seed=0, search_budget=4000, registry=None
) -> list:
    """Two checks per cell: equality and super-multiplicativity."""
    registry = load_registry() if registry is None else registry
    eq_prop = {"ancilla": Property.MULT_ANCILLA, "power": Property.MULT_TENSOR_POWER, "general": Property.MULT_GENERAL}
    out, cells = [], {}
    for m in map(as_measure, measures):
        for setting, cell in MULT_TABLE[m.label].items():
            prop = eq_prop[setting]
            want_eq = HOLDS if cell == "=" else VIOLATED
            want_super = VIOLATED if cell == "x" else HOLDS
            rep = sample_property(prop, m, dims, n_samples, seed, setting=setting)
            reg_cx, reg_mg = _registry_witness(registry, prop, m, setting=setting)
            imp = _implied(cells, prop, m)
            found = _search_if_needed(
                prop, m, want_eq, rep, reg_mg, dims, search_budget, seed, setting=setting, implied=imp
            )
            cell = _judge("multiplicativity", m, f"{setting}:equal", want_eq, rep, reg_cx, reg_mg, found, imp)
            cells[(m.label, prop)] = cell
            out.append(cell)
            rep = sample_property(Property.SUPERMULT, m, dims, n_samples, seed + 1, setting=setting)
            reg_cx, reg_mg = _registry_witness(registry, Property.SUPERMULT, m, setting=setting)
            imp = [
                (c.witness.margin(m), c.witness, f"{k}:super witness")
                for k in _SETTINGS_COVERED[setting]
                if k != setting and (c := cells.get((m.label, "super", k))) is not None and c.witness is not None
            ]
            found = _search_if_needed(
                Property.SUPERMULT, m, want_super, rep, reg_mg, dims, search_budget, seed, setting=setting, implied=imp
            )
            cell = _judge("multiplicativity", m, f"{setting}:super", want_super, rep, reg_cx, reg_mg, found, imp)
            cells[(m.label, "super", setting)] = cell
            out.append(cell)
    return out


def reproduce_monotonicity_table(
    measures: Sequence = CORE_MEASURES, dims=(2, 3), n_samples=10000, seed=0, search_budget=4000, registry=None
) -> list:
    registry = load_registry() if registry is None else registry
    out, cells = [], {}
    for m in map(as_measure, measures):
        for prop, expected in MONO_TABLE[m.label].items():
            rep = sample_property(prop, m, dims, n_samples, seed)
            reg_cx, reg_mg = _registry_witness(registry, prop, m)
            imp = _implied(cells, prop, m)
            found = _search_if_needed(prop, m, expected, rep, reg_mg, dims, search_budget, seed, implied=imp)
            cell = _judge("monotonicity", m, prop.value, expected, rep, reg_cx, reg_mg, found, imp)
            cells[(m.label, prop)] = cell
            out.append(cell)
    return out


def sample_triangle(
    measure, functionals: Sequence, dims=(2, 3, 4), n_samples=10000, seed=0, chunk=2000, opts=None
) -> dict:
    """Triangle-inequality reports for several functionals of one measure.

    The measure is evaluated once per random triple and shared between the
    functionals. All three choices of the long side are checked.
    """
    m = as_measure(measure)
    fns = [MetricFunctional.parse(f) for f in functionals]
    parts = {fn: [] for fn in fns}
    for j, d in enumerate(dims):
        for c, lo in enumerate(range(0, n_samples, chunk)):
            n = min(chunk, n_samples - lo)
            inst = sample_instances(Property.METRIC_M4, d, n, stream(seed, j, c), opts=opts)
            f_rs = np.clip(evaluate(m, inst["rho"], inst["sigma"]), 0, 1)
            f_rt = np.clip(evaluate(m, inst["rho"], inst["tau"]), 0, 1)
            f_ts = np.clip(evaluate(m, inst["tau"], inst["sigma"]), 0, 1)
            for fn in fns:
                a, b, c_ = fn(f_rs), fn(f_rt), fn(f_ts)
                mg = np.maximum.reduce([a - b - c_, b - a - c_, c_ - a - b])
                parts[fn].append(report_from_margins(Property.METRIC_M4, m, mg, inst, f"d={d}", functional=fn.value))
    out = {}
    for fn, reps in parts.items():
        best = max(reps, key=lambda r: r.margin)
        out[fn] = PropertyReport(
            best.property, m, best.verdict, best.margin, sum(r.n_checked for r in reps), best.witness,
            f"dims={list(dims)} functional={fn.value}",
        )
    return out


def reproduce_metric_table(
    measures: Sequence = CORE_MEASURES, dims=(2, 3, 4), n_samples=10000, seed=0, search_budget=4000, registry=None
) -> list:
    registry = load_registry() if registry is None else registry
    out = []
    for m in map(as_measure, measures):
        row = METRIC_TABLE[m.label]
        reports = sample_triangle(m, list(row), dims, n_samples, seed)
        for fn, expected in row.items():
            rep = reports[fn]
            reg_cx, reg_mg = _registry_witness(registry, Property.METRIC_M4, m, functional=fn)
            found = _search_if_needed(
                Property.METRIC_M4, m, expected, rep, reg_mg, dims, search_budget, seed, functional=fn
            )
            out.append(_judge("metric", m, f"triangle:{fn.value}", expected, rep, reg_cx, reg_mg, found))
    return out


TABLES = {
    "axioms": reproduce_axiom_table,
    "concavity": reproduce_concavity_table,
    "multiplicativity": reproduce_multiplicativity_table,
    "monotonicity": reproduce_monotonicity_table,
    "metric": reproduce_metric_table,
}
