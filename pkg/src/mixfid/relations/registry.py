"""The shipped registry of explicit counterexamples and its evaluation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from ..errors import ParseError
from ..io import read_json
from .core import VIOLATION_MARGIN
from .witness import Counterexample

REGISTRY_RESOURCE = "counterexamples.json"


def load_registry(path=None) -> list:
    """Read a registry file; the shipped one when ``path`` is None."""
    if path is None:
        text = resources.files("mixfid").joinpath("data", REGISTRY_RESOURCE).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"shipped registry: {exc}") from exc
    else:
        data = read_json(path)
    if not isinstance(data, list):
        raise ParseError("registry must be a JSON array")
    return [Counterexample.from_json(obj) for obj in data]


def find(name: str, registry: Optional[list] = None) -> Counterexample:
    for cx in registry if registry is not None else load_registry():
        if cx.name == name:
            return cx
    raise KeyError(name)


@dataclass
class RegistryResult:
    name: str
    property: str
    margins: dict
    values: dict
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """Every expected value reproduced and, for violations, every margin above threshold."""
        return not self.mismatches and all(m > VIOLATION_MARGIN for m in self.margins.values())

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "property": self.property,
            "ok": self.ok,
            "margins": self.margins,
            "values": self.values,
            "mismatches": [
                {"label": lab, "expected": float(want), "got": got, "tol": tol} for lab, want, got, tol in self.mismatches
            ],
        }


def evaluate_registry(registry: Optional[list] = None) -> list:
    """Re-evaluate every entry: expected values and violation margins."""
    out = []
    for cx in registry if registry is not None else load_registry():
        margins = {m: cx.margin(m) for m in cx.measures}
        out.append(RegistryResult(cx.name, cx.property.value, margins, cx.all_quantities(), cx.check_expected()))
    return out
