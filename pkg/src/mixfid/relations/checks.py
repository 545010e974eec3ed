"""Property checkers returning :class:`PropertyReport` verdicts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ..ensembles import ginibre_batch, stream
from ..errors import DimMismatch, OutOfRange
from ..linalg import as_matrix
from ..measures import CORE_MEASURES, MeasureId, evaluate
from .core import (
    AXIOMS,
    VIOLATION_MARGIN,
    Channel,
    ChannelKind,
    MetricFunctional,
    Property,
    SamplingOptions,
    _MULT_PROPERTY,
    _trace_distance,
    as_measure,
    as_property,
    fidelity_in_range,
    margins,
    sample_instances,
)
from .witness import Counterexample, witness_from_instance


@dataclass
class PropertyReport:
    """Verdict for one property of one measure.

    ``margin`` is the largest violation margin seen (positive means the
    property failed by that much). A ``VIOLATED`` report carries the
    instance that produced it as ``witness``.
    """

    property: Property
    measure: MeasureId
    verdict: str
    margin: float
    n_checked: int
    witness: Optional[Counterexample] = None
    context: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict == "HOLDS_ON_SAMPLE"

    def to_dict(self) -> dict:
        out = {
            "property": self.property.value,
            "measure": self.measure.label,
            "verdict": self.verdict,
            "margin": float(self.margin),
            "n_checked": int(self.n_checked),
        }
        if self.context:
            out["context"] = self.context
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def _verdict(margin: float) -> str:
    return "VIOLATED" if margin > VIOLATION_MARGIN else "HOLDS_ON_SAMPLE"


def report_from_margins(prop, measure, mg: np.ndarray, inst: dict, context: str = "", **wparams) -> PropertyReport:
    prop = as_property(prop)
    m = as_measure(measure)
    mg = np.asarray(mg, dtype=float)
    if np.any(np.isnan(mg)):
        raise ArithmeticError(f"NaN margin while checking {prop} for {m}")
    i = int(np.argmax(mg))
    worst = float(mg[i])
    witness = None
    if worst > VIOLATION_MARGIN:
        witness = witness_from_instance(prop, inst, i, m, **wparams)
    return PropertyReport(prop, m, _verdict(worst), worst, int(mg.size), witness, context)


def merge_reports(reports: Sequence[PropertyReport], context: str = "") -> PropertyReport:
    """Combine reports for the same property; the worst margin wins."""
    best = max(reports, key=lambda r: r.margin)
    total = sum(r.n_checked for r in reports)
    return PropertyReport(
        best.property, best.measure, best.verdict, best.margin, total, best.witness, context or best.context
    )


def sample_property(
    prop,
    measure,
    dims: Iterable[int] = (2, 3, 4),
    n_samples: int = 1000,
    seed: int = 0,
    functional: Optional[MetricFunctional] = None,
    setting: str = "general",
    opts: Optional[SamplingOptions] = None,
    chunk: int = 2000,
) -> PropertyReport:
    """Check ``prop`` on ``n_samples`` random instances for each dimension.

    Chunk ``c`` at dimension index ``j`` draws from stream ``(seed, j, c)``,
    so verdicts are reproducible and independent of chunk scheduling.
    """
    prop = as_property(prop)
    m = as_measure(measure)
    wparams = {}
    if functional is not None:
        wparams["functional"] = functional.value
    parts = []
    for j, d in enumerate(dims):
        for c, lo in enumerate(range(0, n_samples, chunk)):
            n = min(chunk, n_samples - lo)
            inst = sample_instances(prop, d, n, stream(seed, j, c), setting=setting, opts=opts)
            mg = margins(prop, m, inst, functional=functional, setting=setting)
            parts.append(report_from_margins(prop, m, mg, inst, f"d={d}", **wparams))
    ctx = f"dims={list(dims)}"
    if functional is not None:
        ctx += f" functional={functional.value}"
    if prop is Property.SUPERMULT:
        ctx += f" setting={setting}"
    return merge_reports(parts, ctx)


# ---------------------------------------------------------------- axioms


def _bisect_unit_fidelity(measure: MeasureId, rho, sigma_hi, sigma_lo, steps: int = 200):
    """Move along ``(1-t) sigma_hi + t sigma_lo`` to a point where ``F(rho, .) = 1``."""
    f = lambda t: float(evaluate(measure, rho, (1 - t) * sigma_hi + t * sigma_lo)) - 1.0
    lo, hi = 0.0, 1.0
    if f(lo) <= 0 or f(hi) >= 0:
        return None
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-17:
            break
    t = lo if abs(f(lo)) < abs(f(hi)) else hi
    return (1 - t) * sigma_hi + t * sigma_lo


def unit_fidelity_witness(measure, rho, sigma_hi, seed: int = 0) -> Optional[Counterexample]:
    """Turn a pair with ``F > 1`` into a pair of distinct states with ``F = 1``.

    The measure is continuous in its second argument, so somewhere between
    ``sigma_hi`` and any state with ``F < 1`` it takes the value 1 exactly;
    bisection finds that point. Returns ``None`` if no such state is found.
    """
    m = as_measure(measure)
    rho = as_matrix(rho)
    d = rho.shape[-1]
    candidates = [np.eye(d) / d] + list(ginibre_batch(d, 16, stream(seed, 0)))
    for lo_state in candidates:
        if float(evaluate(m, rho, lo_state)) >= 1.0:
            continue
        sigma = _bisect_unit_fidelity(m, rho, np.asarray(sigma_hi), lo_state)
        if sigma is None:
            continue
        cx = Counterexample(
            name=f"j1b_{m.label.lower()}",
            property=Property.J1B,
            measures=(m.label,),
            states=(rho, sigma),
            found_by_search=True,
        )
        if cx.margin(m) > VIOLATION_MARGIN:
            return cx
    return None


def check_axioms(
    measure,
    dims: Iterable[int] = (2, 3, 4),
    n_samples: int = 1000,
    seed: int = 0,
    registry: Optional[Sequence[Counterexample]] = None,
    opts: Optional[SamplingOptions] = None,
) -> list:
    """One report per axiom J1a, J1b, J1c, J2, J3, J4.

    Each axiom is sampled on ``n_samples`` random instances per dimension
    (J1c on orthogonal-support pairs plus generic ones, J3 with the first
    state pure, J4 with one Haar unitary per pair). Registered
    counterexamples for the measure are evaluated too, and a J1a violation
    is converted into a J1b witness by bisection.
    """
    m = as_measure(measure)
    dims = list(dims)
    reports = {}
    for k, ax in enumerate(AXIOMS):
        reports[ax] = sample_property(ax, m, dims, n_samples, seed + 7919 * k, opts=opts)
    if registry is None:
        from .registry import load_registry

        registry = load_registry()
    for cx in registry:
        if cx.property in reports and m.label in cx.measures:
            mg = cx.margin(m)
            if mg > reports[cx.property].margin:
                old = reports[cx.property]
                verdict = _verdict(mg)
                witness = cx if verdict == "VIOLATED" else old.witness
                reports[cx.property] = PropertyReport(old.property, m, verdict, mg, old.n_checked + 1, witness, old.context)
    j1a, j1b = reports[Property.J1A], reports[Property.J1B]
    if not j1a.holds and j1b.holds and j1a.witness is not None:
        rho, sigma = j1a.witness.states[:2]
        if float(evaluate(m, rho, sigma)) > 1.0:
            cx = unit_fidelity_witness(m, rho, sigma, seed)
        else:
            cx = None
        if cx is not None:
            mg = cx.margin(m)
            reports[Property.J1B] = PropertyReport(Property.J1B, m, _verdict(mg), mg, j1b.n_checked + 1, cx, j1b.context)
    return [reports[ax] for ax in AXIOMS]


# ---------------------------------------------------------------- single-instance checks


def _stack(states) -> np.ndarray:
    return np.stack([np.asarray(s, dtype=complex) for s in states])


def check_concavity(measure, probabilities, rhos, sigma_or_sigmas, joint: bool = False) -> PropertyReport:
    """Concavity in the first argument (``joint=False``) or jointly in both.

    The margin is ``sum_i p_i F(rho_i, sigma_i) - F(sum p_i rho_i, sum p_i sigma_i)``.
    """
    p = np.asarray(probabilities, dtype=float)
    if abs(p.sum() - 1.0) > 1e-12 or np.any(p < 0):
        raise OutOfRange("probabilities must be non-negative and sum to 1")
    rho_stack = _stack(rhos)[:, None]
    inst = {"rhos": rho_stack, "p": p[None]}
    if joint:
        sig = _stack(sigma_or_sigmas)
        if sig.shape[0] != rho_stack.shape[0]:
            raise DimMismatch("joint concavity needs one sigma per rho")
        inst["sigmas"] = sig[:, None]
        prop = Property.JOINT_CONCAVE
    else:
        inst["sigma"] = np.asarray(sigma_or_sigmas, dtype=complex)[None]
        prop = Property.SEP_CONCAVE
    return report_from_margins(prop, measure, margins(prop, measure, inst), inst)


def check_multiplicativity(
    measure, rho1, sigma1, rho2, sigma2, relation: str = "equal", setting: str = "general"
) -> PropertyReport:
    """``F(rho1 x rho2, sigma1 x sigma2)`` against ``F(rho1, sigma1) F(rho2, sigma2)``.

    ``relation="equal"`` tests multiplicativity, ``"super"`` tests
    super-multiplicativity (``>=``). ``setting`` only labels the report.
    """
    if relation == "super":
        prop = Property.SUPERMULT
    else:
        prop = _MULT_PROPERTY[setting]
    inst = {
        "rho": as_matrix(rho1)[None],
        "sigma": as_matrix(sigma1)[None],
        "rho2": as_matrix(rho2)[None],
        "sigma2": as_matrix(sigma2)[None],
        "setting": setting,
    }
    return report_from_margins(prop, measure, margins(prop, measure, inst), inst, f"setting={setting}")


def check_monotonicity(measure, channel, rho, sigma, channel_params: Optional[dict] = None) -> PropertyReport:
    """Non-contractivity ``F(E(rho), E(sigma)) >= F(rho, sigma)`` for one channel.

    ``channel`` is a :class:`Channel` or a kind name, in which case
    ``channel_params`` supplies its fields (``dims``, ``keep``, ``basis``,
    ``ancilla``, ``isometry``).
    """
    if not isinstance(channel, Channel):
        channel = Channel(ChannelKind(str(channel).upper()), **(channel_params or {}))
    inst = {"rho": as_matrix(rho)[None], "sigma": as_matrix(sigma)[None]}
    prop = channel.property
    mg = margins(prop, measure, inst, channel=channel)
    return report_from_margins(prop, measure, mg, inst, f"channel={channel.kind.value}", **channel.to_params())


def metric_value(functional, measure, rho, sigma):
    """Distance ``functional(F(rho, sigma))``; errors if the measure leaves ``[0, 1]``."""
    fn = MetricFunctional.parse(functional)
    out = fn(fidelity_in_range(as_measure(measure), rho, sigma))
    return float(out) if np.ndim(out) == 0 else out


def check_triangle(functional, measure, rho, sigma, tau, all_orderings: bool = False) -> PropertyReport:
    """Triangle inequality ``D(rho, sigma) <= D(rho, tau) + D(tau, sigma)``.

    With ``all_orderings`` the worst of the three ways of picking the long
    side is reported.
    """
    fn = MetricFunctional.parse(functional)
    inst = {
        "rho": as_matrix(rho)[None],
        "sigma": as_matrix(sigma)[None],
        "tau": as_matrix(tau)[None],
        "ordered": not all_orderings,
    }
    mg = margins(Property.METRIC_M4, measure, inst, functional=fn)
    return report_from_margins(
        Property.METRIC_M4, measure, mg, inst, f"functional={fn.value}", functional=fn.value, ordered=not all_orderings
    )


# ---------------------------------------------------------------- bound chains


@dataclass(frozen=True)
class Bound:
    """``lhs <= rhs`` where each side is a measure, optionally square-rooted."""

    lhs: str
    rhs: str
    sqrt_lhs: bool = False
    sqrt_rhs: bool = False
    qubit_only: bool = False

    @property
    def name(self) -> str:
        left = f"sqrt({self.lhs})" if self.sqrt_lhs else self.lhs
        right = f"sqrt({self.rhs})" if self.sqrt_rhs else self.rhs
        return f"{left}<={right}"


BOUND_CHAIN = (
    Bound("F1", "FQ"),
    Bound("FQ", "FA", sqrt_rhs=True),
    Bound("FA", "F1", sqrt_lhs=True, sqrt_rhs=True),
    Bound("F1", "FN"),
    Bound("F2", "FN"),
    Bound("F2", "FAM"),
    Bound("FAM", "FGM"),
    Bound("FN", "FC"),
    Bound("F2", "F1", qubit_only=True),
)


def bound_slacks(rho, sigma, values: Optional[dict] = None) -> dict:
    """``rhs - lhs`` for every applicable bound, on a pair or a stack of pairs."""
    rho = as_matrix(rho)
    sigma = as_matrix(sigma)
    if values is None:
        values = {m.label: np.asarray(evaluate(m, rho, sigma), dtype=float) for m in CORE_MEASURES}
    d = rho.shape[-1]
    out = {}
    for b in BOUND_CHAIN:
        if b.qubit_only and d != 2:
            continue
        lhs = np.sqrt(np.clip(values[b.lhs], 0, None)) if b.sqrt_lhs else values[b.lhs]
        rhs = np.sqrt(np.clip(values[b.rhs], 0, None)) if b.sqrt_rhs else values[b.rhs]
        out[b.name] = rhs - lhs
    return out


def check_bounds(rho, sigma) -> list:
    """One ``BOUND`` report per inequality in :data:`BOUND_CHAIN`.

    Accepts a single pair or stacks; the report keeps the tightest case.
    The qubit-only inequality is skipped unless ``d = 2``.
    """
    r = as_matrix(rho)
    s = as_matrix(sigma)
    single = r.ndim == 2
    if single:
        r, s = r[None], s[None]
    reports = []
    slacks = bound_slacks(r, s)
    inst = {"rho": r, "sigma": s}
    for b in BOUND_CHAIN:
        if b.name not in slacks:
            continue
        mg = -np.atleast_1d(slacks[b.name])
        rep = report_from_margins(
            Property.BOUND, MeasureId(b.lhs), mg, inst, b.name, lhs=b.lhs, rhs=b.rhs, sqrt_lhs=b.sqrt_lhs, sqrt_rhs=b.sqrt_rhs
        )
        if rep.witness is not None:
            rep.witness.name = f"bound_{b.name}"
        reports.append(rep)
    return reports


def sample_bounds(dims: Iterable[int] = (2, 3, 10), n_samples: int = 10000, seed: int = 0, chunk: int = 2000) -> dict:
    """Minimum slack of every bound over random pairs, per dimension."""
    from ..ensembles import random_pair_batch

    out = {}
    for j, d in enumerate(dims):
        worst = {}
        for c, lo in enumerate(range(0, n_samples, chunk)):
            n = min(chunk, n_samples - lo)
            r, s = random_pair_batch(d, n, stream(seed, j, c), pure_fraction=0.1, rank_mix=True)
            for name, sl in bound_slacks(r, s).items():
                worst[name] = min(worst.get(name, np.inf), float(np.min(sl)))
        out[d] = worst
    return out


def trace_distance(rho, sigma) -> float:
    return float(_trace_distance(as_matrix(rho), as_matrix(sigma)))
