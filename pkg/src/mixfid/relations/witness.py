"""Counterexamples: concrete states that break (or pin down) a property.

The same type serves the shipped registry of explicit examples and the
witnesses produced by sampling or search. ``states`` is laid out per
property:

* axioms, monotonicity, bounds, metric M1-M3: ``(rho, sigma)``
* triangle inequality: ``(rho, sigma, tau)``
* separate concavity: ``(rho_1, ..., rho_k, sigma)`` with ``k`` probabilities
* joint concavity: ``(rho_1, ..., rho_k, sigma_1, ..., sigma_k)``
* multiplicativity: ``(rho_1, sigma_1, rho_2, sigma_2)``

Matrices that are not states (a unitary, an isometry, a measurement basis
or an ancilla) go into ``params``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ParseError
from ..io import exact_value, jsonable, matrix_from_json, matrix_to_json
from ..measures import MeasureId
from .core import (
    Channel,
    ChannelKind,
    MetricFunctional,
    Property,
    _ev,
    as_measure,
    as_property,
    distance,
    kron_batch,
    margins,
)

_MATRIX_PARAMS = ("unitary", "basis", "ancilla", "isometry")
DEFAULT_EXPECT_TOL = 1e-12


@dataclass
class Counterexample:
    name: str
    property: Property
    measures: tuple
    states: tuple
    probabilities: Optional[tuple] = None
    params: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    found_by_search: bool = False
    note: str = ""

    def __post_init__(self):
        self.property = as_property(self.property)
        self.measures = tuple(as_measure(m).label for m in self.measures)
        self.states = tuple(np.asarray(s, dtype=complex) for s in self.states)
        if self.probabilities is not None:
            self.probabilities = tuple(float(exact_value(p)) for p in self.probabilities)

    # -- evaluation ----------------------------------------------------

    def channel(self) -> Optional[Channel]:
        if self.property not in (Property.MONO_PTRACE, Property.MONO_PROJECTIVE, Property.MONO_GENERAL):
            return None
        return Channel.from_params(self.params)

    def functionals(self) -> list:
        names = self.params.get("functionals") or [self.params.get("functional", "C")]
        return [MetricFunctional.parse(f) for f in names]

    def instance(self) -> dict:
        """The single-instance stacked dict understood by :func:`margins`."""
        s = [x[None] for x in self.states]
        prop = self.property
        if prop in (Property.SEP_CONCAVE, Property.JOINT_CONCAVE):
            k = len(self.probabilities)
            p = np.array(self.probabilities)[None]
            inst = {"rhos": np.stack(s[:k]), "p": p}
            if prop is Property.SEP_CONCAVE:
                inst["sigma"] = s[k]
            else:
                inst["sigmas"] = np.stack(s[k : 2 * k])
            return inst
        if prop in (Property.MULT_ANCILLA, Property.MULT_TENSOR_POWER, Property.MULT_GENERAL, Property.SUPERMULT):
            return {"rho": s[0], "sigma": s[1], "rho2": s[2], "sigma2": s[3]}
        inst = {"rho": s[0], "sigma": s[1]}
        if prop is Property.METRIC_M4:
            inst["tau"] = s[2]
            inst["ordered"] = bool(self.params.get("ordered", False))
        if prop is Property.J4:
            inst["u"] = np.asarray(self.params["unitary"], dtype=complex)[None]
        return inst

    def margin(self, measure=None) -> float:
        """Largest violation margin over the listed measures (and functionals)."""
        targets = [as_measure(measure)] if measure is not None else [MeasureId.parse(m) for m in self.measures]
        best = -np.inf
        for m in targets:
            if self.property is Property.BOUND:
                q = self.quantities(m)
                best = max(best, q[f"{m.label}.lhs"] - q[f"{m.label}.rhs"])
                continue
            if self.property is Property.METRIC_M4:
                for fn in self.functionals():
                    best = max(best, float(margins(self.property, m, self.instance(), functional=fn)[0]))
                continue
            best = max(best, float(margins(self.property, m, self.instance(), channel=self.channel())[0]))
        return best

    def functional_margins(self, measure) -> dict:
        m = as_measure(measure)
        return {
            fn.value: float(margins(Property.METRIC_M4, m, self.instance(), functional=fn)[0])
            for fn in self.functionals()
        }

    def quantities(self, measure) -> dict:
        """Named values behind the verdict, keyed ``"<measure>.<quantity>"``."""
        m = as_measure(measure)
        inst = self.instance()
        key = m.label
        prop = self.property
        out = {}
        if prop in (Property.SEP_CONCAVE, Property.JOINT_CONCAVE):
            rhos, p = inst["rhos"], inst["p"]
            sigmas = inst["sigmas"] if prop is Property.JOINT_CONCAVE else np.stack([inst["sigma"]] * len(rhos))
            mix_r = np.einsum("nk,knij->nij", p, rhos)
            mix_s = np.einsum("nk,knij->nij", p, sigmas)
            out[f"{key}.lhs"] = float(_ev(m, mix_r, mix_s)[0])
            out[f"{key}.rhs"] = float(sum(p[0, i] * _ev(m, rhos[i], sigmas[i])[0] for i in range(len(rhos))))
        elif prop in (Property.MULT_ANCILLA, Property.MULT_TENSOR_POWER, Property.MULT_GENERAL, Property.SUPERMULT):
            out[f"{key}.tensor"] = float(
                _ev(m, kron_batch(inst["rho"], inst["rho2"]), kron_batch(inst["sigma"], inst["sigma2"]))[0]
            )
            out[f"{key}.product"] = float(
                _ev(m, inst["rho"], inst["sigma"])[0] * _ev(m, inst["rho2"], inst["sigma2"])[0]
            )
        elif self.channel() is not None:
            ch = self.channel()
            out[f"{key}.before"] = float(_ev(m, inst["rho"], inst["sigma"])[0])
            out[f"{key}.after"] = float(_ev(m, ch(inst["rho"]), ch(inst["sigma"]))[0])
        elif prop is Property.METRIC_M4:
            for fn in self.functionals():
                out[f"{key}.{fn.value}.rs"] = float(distance(fn, m, inst["rho"], inst["sigma"])[0])
                out[f"{key}.{fn.value}.rt"] = float(distance(fn, m, inst["rho"], inst["tau"])[0])
                out[f"{key}.{fn.value}.ts"] = float(distance(fn, m, inst["tau"], inst["sigma"])[0])
        elif prop is Property.BOUND:
            lhs = MeasureId.parse(self.params.get("lhs", key))
            rhs = MeasureId.parse(self.params["rhs"])
            left = float(_ev(lhs, inst["rho"], inst["sigma"])[0])
            right = float(_ev(rhs, inst["rho"], inst["sigma"])[0])
            out[f"{key}.lhs"] = float(np.sqrt(max(left, 0.0))) if self.params.get("sqrt_lhs") else left
            out[f"{key}.rhs"] = float(np.sqrt(max(right, 0.0))) if self.params.get("sqrt_rhs") else right
        else:
            out[f"{key}.value"] = float(_ev(m, inst["rho"], inst["sigma"])[0])
        return out

    def all_quantities(self) -> dict:
        out = {}
        for m in self.measures:
            out.update(self.quantities(m))
        return out

    def check_expected(self) -> list:
        """Return ``(label, expected, got, tol)`` for every expected value that is off."""
        got = self.all_quantities()
        bad = []
        for label, want in self.expected.items():
            tol = self.tolerances.get(label, DEFAULT_EXPECT_TOL)
            if label not in got:
                bad.append((label, want, None, tol))
                continue
            if abs(got[label] - float(want)) > tol:
                bad.append((label, want, got[label], tol))
        return bad

    # -- serialization -------------------------------------------------

    def to_json(self) -> dict:
        params = {}
        for k, v in self.params.items():
            params[k] = matrix_to_json(v) if k in _MATRIX_PARAMS and v is not None else jsonable(v)
        out = {
            "name": self.name,
            "property": self.property.value,
            "measure": self.measures[0] if len(self.measures) == 1 else list(self.measures),
            "states": [matrix_to_json(s) for s in self.states],
        }
        if self.probabilities is not None:
            out["probabilities"] = list(self.probabilities)
        if params:
            out["params"] = params
        if self.expected:
            out["expected"] = {k: jsonable(v) for k, v in self.expected.items()}
        if self.tolerances:
            out["tolerances"] = dict(self.tolerances)
        if self.found_by_search:
            out["found_by_search"] = True
        if self.note:
            out["note"] = self.note
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Counterexample":
        try:
            params = dict(obj.get("params", {}))
            for k in _MATRIX_PARAMS:
                if params.get(k) is not None:
                    params[k] = matrix_from_json(params[k])
            expected = {k: exact_value(v) for k, v in obj.get("expected", {}).items()}
            measures = obj["measure"] if "measure" in obj else obj["measures"]
            if isinstance(measures, str):
                measures = [measures]
            return cls(
                name=obj["name"],
                property=obj["property"],
                measures=tuple(measures),
                states=tuple(matrix_from_json(s) for s in obj["states"]),
                probabilities=tuple(obj["probabilities"]) if obj.get("probabilities") is not None else None,
                params=params,
                expected=expected,
                tolerances={k: float(v) for k, v in obj.get("tolerances", {}).items()},
                found_by_search=bool(obj.get("found_by_search", False)),
                note=obj.get("note", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"bad counterexample entry: {exc}") from exc


def witness_from_instance(prop, inst: dict, i: int, measure, name: str = "", **params) -> Counterexample:
    """Package instance ``i`` of a stacked instance dict as a counterexample."""
    prop = as_property(prop)
    probs = None
    if prop in (Property.SEP_CONCAVE, Property.JOINT_CONCAVE):
        rhos = list(inst["rhos"][:, i])
        probs = tuple(float(x) for x in inst["p"][i])
        states = rhos + ([inst["sigma"][i]] if prop is Property.SEP_CONCAVE else list(inst["sigmas"][:, i]))
    elif prop in (Property.MULT_ANCILLA, Property.MULT_TENSOR_POWER, Property.MULT_GENERAL, Property.SUPERMULT):
        states = [inst["rho"][i], inst["sigma"][i], inst["rho2"][i], inst["sigma2"][i]]
        params.setdefault("setting", inst.get("setting", "general"))
    elif prop is Property.METRIC_M4:
        states = [inst["rho"][i], inst["sigma"][i], inst["tau"][i]]
    else:
        states = [inst["rho"][i], inst["sigma"][i]]
    if prop is Property.J4:
        params["unitary"] = inst["u"][i]
    if prop is Property.MONO_PTRACE:
        params.setdefault("channel", ChannelKind.PTRACE.value)
        if "dims" not in params:
            params["dims"] = list(inst["dims"])
            params["keep"] = int(inst.get("keep", 0))
    elif prop is Property.MONO_PROJECTIVE:
        params.setdefault("channel", ChannelKind.PROJECTIVE_MEAS.value)
    elif prop is Property.MONO_GENERAL:
        params.setdefault("channel", ChannelKind.RANDOM_CPTP.value)
        if "iso" in inst:
            params["isometry"] = inst["iso"][i]
    label = as_measure(measure).label
    return Counterexample(
        name=name or f"{prop.value.lower()}_{label.lower().replace(':', '_')}",
        property=prop,
        measures=(label,),
        states=tuple(states),
        probabilities=probs,
        params=params,
        found_by_search=True,
    )

