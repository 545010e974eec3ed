"""Randomized counterexample search with local refinement."""

from __future__ import annotations

import json
import threading
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..ensembles import ginibre_batch, stream
from ..errors import OutOfRangeMeasure
from ..linalg import dagger
from .core import (
    VIOLATION_MARGIN,
    MetricFunctional,
    Property,
    SamplingOptions,
    as_measure,
    as_property,
    margins,
    sample_instances,
    take,
)
from .witness import Counterexample, witness_from_instance

SEARCH_CHUNK = 500
_TOP_K = 8


class WitnessStore:
    """Append-only JSON-lines file of counterexamples.

    Appends go through one lock, so concurrent callers in a process never
    interleave records.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, cx: Counterexample) -> None:
        line = json.dumps(cx.to_json(), sort_keys=True)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a") as fh:
                fh.write(line + "\n")

    def load(self) -> list:
        if not self.path.exists():
            return []
        with open(self.path) as fh:
            return [Counterexample.from_json(json.loads(line)) for line in fh if line.strip()]


def _near_identity(rng, shape, eps: float) -> np.ndarray:
    d = shape[-1]
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    q, r = np.linalg.qr(np.eye(d) + eps * z)
    ph = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (ph / np.abs(ph))[..., None, :]


def _jitter_states(states: np.ndarray, rng, eps: float, keep_pure: bool = False) -> np.ndarray:
    shape = states.shape
    flat = states.reshape((-1,) + shape[-2:])
    u = _near_identity(rng, flat.shape, eps)
    out = u @ flat @ dagger(u)
    if not keep_pure:
        t = eps * rng.random(flat.shape[0])[:, None, None]
        g = ginibre_batch(shape[-1], flat.shape[0], rng)
        out = (1 - t) * out + t * g
    out = 0.5 * (out + dagger(out))
    return out.reshape(shape)


def perturb(prop: Property, inst: dict, rng, eps: float) -> dict:
    """A nearby instance set: every state rotated slightly and mixed with a little noise."""
    new = dict(inst)
    for key in ("rho", "sigma", "tau", "rhos", "sigmas"):
        if key in inst:
            new[key] = _jitter_states(inst[key], rng, eps, keep_pure=(prop is Property.J3 and key == "rho"))
    setting = inst.get("setting")
    if "rho2" in inst:
        if setting == "power":
            new["rho2"], new["sigma2"] = new["rho"], new["sigma"]
        elif setting == "ancilla":
            new["rho2"] = _jitter_states(inst["rho2"], rng, eps)
            new["sigma2"] = new["rho2"]
        else:
            new["rho2"] = _jitter_states(inst["rho2"], rng, eps)
            new["sigma2"] = _jitter_states(inst["sigma2"], rng, eps)
    if "p" in inst:
        p = inst["p"] * np.exp(eps * rng.standard_normal(inst["p"].shape))
        new["p"] = p / p.sum(axis=1, keepdims=True)
    if "u" in inst:
        new["u"] = _near_identity(rng, inst["u"].shape, eps) @ inst["u"]
    if "iso" in inst:
        v = inst["iso"] + eps * (rng.standard_normal(inst["iso"].shape) + 1j * rng.standard_normal(inst["iso"].shape))
        q, r = np.linalg.qr(v)
        ph = np.diagonal(r, axis1=-2, axis2=-1)
        new["iso"] = q * (ph / np.abs(ph))[..., None, :]
    return new


def _select(mask: np.ndarray, new: dict, old: dict) -> dict:
    out = {}
    for key, val in old.items():
        if key in ("rhos", "sigmas"):
            out[key] = np.where(mask[None, :, None, None], new[key], val)
        elif key == "p":
            out[key] = np.where(mask[:, None], new[key], val)
        elif isinstance(val, np.ndarray) and val.ndim >= 1 and val.shape[0] == mask.size:
            out[key] = np.where(mask.reshape((-1,) + (1,) * (val.ndim - 1)), new[key], val)
        else:
            out[key] = val
    return out


def _safe_margins(prop, measure, inst, functional, setting):
    try:
        return margins(prop, measure, inst, functional=functional, setting=setting)
    except OutOfRangeMeasure:
        # the measure left [0, 1]; a distance is undefined there, so this is not a metric witness
        return np.full(inst["rho"].shape[0], -np.inf)


def _search_chunk(args):
    prop, label, d, seed, c, size, functional, setting = args
    prop = Property(prop)
    m = as_measure(label)
    fn = MetricFunctional(functional) if functional else None
    rng = stream(seed, c)
    n_rand = max(1, size // 2)
    inst = sample_instances(prop, d, n_rand, rng, setting=setting, opts=SamplingOptions())
    mg = _safe_margins(prop, m, inst, fn, setting)
    best = float(np.max(mg))
    if best > VIOLATION_MARGIN:
        return c, best, _package(prop, inst, int(np.argmax(mg)), m, fn)
    top = np.argsort(mg)[-_TOP_K:]
    cur = take(inst, top)
    cur_mg = mg[top]
    steps = max(0, (size - n_rand) // len(top))
    for step in range(steps):
        eps = 0.15 * 0.97**step
        cand = perturb(prop, cur, rng, eps)
        cand_mg = _safe_margins(prop, m, cand, fn, setting)
        better = cand_mg > cur_mg
        cur = _select(better, cand, cur)
        cur_mg = np.where(better, cand_mg, cur_mg)
        if np.max(cur_mg) > VIOLATION_MARGIN:
            i = int(np.argmax(cur_mg))
            return c, float(cur_mg[i]), _package(prop, cur, i, m, fn)
    return c, max(best, float(np.max(cur_mg))), None


def _package(prop, inst, i, m, fn):
    params = {"functional": fn.value} if fn is not None else {}
    cx = witness_from_instance(prop, inst, i, m, **params)
    # states came out of float arithmetic; keep them exactly Hermitian with unit trace
    fixed = []
    for s in cx.states:
        s = 0.5 * (s + s.conj().T)
        fixed.append(s / np.trace(s).real)
    cx.states = tuple(fixed)
    return cx.to_json()


def falsify(
    prop,
    measure,
    dims: Iterable[int] = (2, 3),
    budget: int = 10000,
    seed: int = 0,
    functional=None,
    setting: str = "general",
    workers: int = 1,
    store: Optional[WitnessStore] = None,
    chunk: int = SEARCH_CHUNK,
) -> Optional[Counterexample]:
    """Look for an instance violating ``prop`` within ``budget`` margin evaluations.

    The budget is cut into fixed chunks; chunk ``c`` works at dimension
    ``dims[c % len(dims)]`` with its own stream ``(seed, c)``, spending half
    on fresh random instances and half on hill-climbing the most promising
    ones. The witness from the earliest successful chunk is returned, so the
    answer does not depend on ``workers``. A returned witness is appended to
    ``store`` when one is given.
    """
    prop = as_property(prop)
    m = as_measure(measure)
    fn = MetricFunctional.parse(functional).value if functional is not None else None
    if prop is Property.METRIC_M4 and fn is None:
        fn = MetricFunctional.SINE_DISTANCE.value
    dims = list(dims)
    n_chunks = max(1, -(-budget // chunk))
    jobs = [
        (prop.value, m.label, dims[c % len(dims)], seed, c, min(chunk, budget - c * chunk), fn, setting)
        for c in range(n_chunks)
    ]

    def confirmed(result):
        # re-evaluate from the serialized form so the witness stands on its own
        if result[2] is None:
            return None
        cx = Counterexample.from_json(result[2])
        return cx if cx.margin(m) > VIOLATION_MARGIN else None

    cx = None
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for wave in range(0, len(jobs), workers):
                for result in pool.map(_search_chunk, jobs[wave : wave + workers]):
                    cx = confirmed(result)
                    if cx is not None:
                        break
                if cx is not None:
                    break
    else:
        for job in jobs:
            cx = confirmed(_search_chunk(job))
            if cx is not None:
                break
    if cx is None:
        return None
    cx.note = f"falsify seed={seed} budget={budget}"
    if store is not None:
        store.append(cx)
    return cx
