"""Property margins, instance samplers and channels shared by the checkers.

Every property is phrased as a *margin*: a number that is positive exactly
when the property fails on an instance, and whose size says by how much.
Margins above :data:`VIOLATION_MARGIN` count as violations; anything smaller
is treated as rounding noise.

Instances are dicts of stacked arrays so that thousands of random cases are
evaluated in a few vectorized calls:

``rho``, ``sigma``, ``tau``
    ``(n, d, d)`` states.
``rhos``, ``sigmas``
    ``(k, n, d, d)`` ensembles for the concavity properties.
``p``
    ``(n, k)`` mixing probabilities.
``rho2``, ``sigma2``
    second factors for the tensor-product properties.
``u``
    ``(n, d, d)`` unitaries.
``iso``
    ``(n, d * e, d)`` isometries for random channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from ..ensembles import as_generator, ginibre_batch, haar_unitary_batch, pure_state_batch, random_pair_batch
from ..errors import DimMismatch, OutOfRange, OutOfRangeMeasure
from ..linalg import dagger, hermitian_part
from ..measures import MeasureId, evaluate

VIOLATION_MARGIN = 1e-9
# |F - 1| or |F| below this counts as an exact hit for the identity/orthogonality axioms
EXACT_TOL = 1e-12
# Frobenius norm of rho sigma below this counts as orthogonal supports
ORTHO_TOL = 1e-10


class Property(str, Enum):
    J1A = "J1A"
    J1B = "J1B"
    J1C = "J1C"
    J2 = "J2"
    J3 = "J3"
    J4 = "J4"
    SEP_CONCAVE = "SEP_CONCAVE"
    JOINT_CONCAVE = "JOINT_CONCAVE"
    MULT_ANCILLA = "MULT_ANCILLA"
    MULT_TENSOR_POWER = "MULT_TENSOR_POWER"
    MULT_GENERAL = "MULT_GENERAL"
    SUPERMULT = "SUPERMULT"
    MONO_PTRACE = "MONO_PTRACE"
    MONO_PROJECTIVE = "MONO_PROJECTIVE"
    MONO_GENERAL = "MONO_GENERAL"
    METRIC_M1 = "METRIC_M1"
    METRIC_M2 = "METRIC_M2"
    METRIC_M3 = "METRIC_M3"
    METRIC_M4 = "METRIC_M4"
    BOUND = "BOUND"

    def __str__(self) -> str:
        return self.value


AXIOMS = (Property.J1A, Property.J1B, Property.J1C, Property.J2, Property.J3, Property.J4)
MULT_SETTINGS = ("ancilla", "power", "general")
_MULT_PROPERTY = {
    "ancilla": Property.MULT_ANCILLA,
    "power": Property.MULT_TENSOR_POWER,
    "general": Property.MULT_GENERAL,
}


class Verdict(str, Enum):
    HOLDS_ON_SAMPLE = "HOLDS_ON_SAMPLE"
    VIOLATED = "VIOLATED"

    def __str__(self) -> str:
        return self.value


class MetricFunctional(str, Enum):
    """Distance-like functionals of a fidelity value ``F``.

    ``BURES_ANGLE`` is ``arccos sqrt(F)``, ``BURES_DISTANCE`` is
    ``sqrt(1 - sqrt(F))``, ``BURES_DISTANCE_SQRT2`` is the same scaled by
    ``sqrt(2)`` and ``SINE_DISTANCE`` is ``sqrt(1 - F)``.
    """

    BURES_ANGLE = "A"
    BURES_DISTANCE = "B"
    BURES_DISTANCE_SQRT2 = "B2"
    SINE_DISTANCE = "C"

    @classmethod
    def parse(cls, text) -> "MetricFunctional":
        if isinstance(text, cls):
            return text
        key = str(text).strip().upper()
        for f in cls:
            if key in (f.value, f.name):
                return f
        raise ValueError(f"unknown metric functional {text!r}")

    def __call__(self, fid):
        # F(rho, rho) comes out as 1 - 1e-16, and every functional here takes a
        # square root of 1 - F near that point, so snap values that close to 1
        fid = np.clip(fid, 0.0, 1.0)
        fid = np.where(fid > 1.0 - EXACT_TOL, 1.0, fid)
        if self is MetricFunctional.BURES_ANGLE:
            return np.arccos(np.sqrt(fid))
        if self is MetricFunctional.BURES_DISTANCE:
            return np.sqrt(np.clip(1.0 - np.sqrt(fid), 0.0, None))
        if self is MetricFunctional.BURES_DISTANCE_SQRT2:
            return np.sqrt(np.clip(2.0 - 2.0 * np.sqrt(fid), 0.0, None))
        return np.sqrt(np.clip(1.0 - fid, 0.0, None))


def as_measure(m) -> MeasureId:
    return m if isinstance(m, MeasureId) else MeasureId.parse(str(m))


def as_property(p) -> Property:
    return p if isinstance(p, Property) else Property(str(p).upper())


def fidelity_in_range(measure: MeasureId, rho, sigma, tol: float = VIOLATION_MARGIN):
    """Measure value for use inside a metric functional; errors if outside ``[0, 1]``."""
    fid = np.asarray(evaluate(measure, rho, sigma), dtype=float)
    if np.any(fid > 1.0 + tol) or np.any(fid < -tol):
        raise OutOfRangeMeasure(f"{measure} = {np.max(fid):.12g} lies outside [0, 1]")
    return np.clip(fid, 0.0, 1.0)


def distance(functional: MetricFunctional, measure: MeasureId, rho, sigma):
    return functional(fidelity_in_range(measure, rho, sigma))


# ---------------------------------------------------------------- channels


def kron_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product over the last two axes, broadcasting leading ones."""
    da, db = a.shape[-1], b.shape[-1]
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    return out.reshape(out.shape[:-4] + (da * db, da * db))


def ptrace_batch(rho: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Partial trace of a bipartite stack, keeping subsystem ``keep`` (0 or 1)."""
    da, db = dims
    if rho.shape[-1] != da * db:
        raise DimMismatch(f"dims {dims} do not match size {rho.shape[-1]}")
    t = rho.reshape(rho.shape[:-2] + (da, db, da, db))
    if keep == 0:
        return np.einsum("...ijkj->...ik", t)
    return np.einsum("...ijil->...jl", t)


class ChannelKind(str, Enum):
    PTRACE = "PTRACE"
    PROJECTIVE_MEAS = "PROJECTIVE_MEAS"
    APPEND_ANCILLA = "APPEND_ANCILLA"
    RANDOM_CPTP = "RANDOM_CPTP"


_MONO_PROPERTY = {
    ChannelKind.PTRACE: Property.MONO_PTRACE,
    ChannelKind.PROJECTIVE_MEAS: Property.MONO_PROJECTIVE,
    ChannelKind.RANDOM_CPTP: Property.MONO_GENERAL,
    ChannelKind.APPEND_ANCILLA: Property.MONO_GENERAL,
}


@dataclass
class Channel:
    """A quantum operation used by the monotonicity checks.

    ``PTRACE`` needs ``dims`` (two subsystem sizes) and ``keep``;
    ``PROJECTIVE_MEAS`` dephases in the columns of ``basis`` (computational
    basis when omitted); ``APPEND_ANCILLA`` tensors on ``ancilla``;
    ``RANDOM_CPTP`` applies the isometry ``V`` (shape ``(d*e, d)``, or a
    stack) and traces out the ``e``-dimensional environment.
    """

    kind: ChannelKind
    dims: Optional[tuple] = None
    keep: int = 0
    basis: Optional[np.ndarray] = None
    ancilla: Optional[np.ndarray] = None
    isometry: Optional[np.ndarray] = None

    def __post_init__(self):
        self.kind = ChannelKind(self.kind)

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if self.kind is ChannelKind.PTRACE:
            if self.dims is None or len(self.dims) != 2:
                raise DimMismatch("partial trace channel needs two subsystem dims")
            return ptrace_batch(rho, tuple(self.dims), self.keep)
        if self.kind is ChannelKind.PROJECTIVE_MEAS:
            if self.basis is None:
                d = rho.shape[-1]
                idx = np.arange(d)
                out = np.zeros_like(rho)
                out[..., idx, idx] = rho[..., idx, idx]
                return out
            u = np.asarray(self.basis, dtype=complex)
            diag = np.einsum("ki,...kl,li->...i", u.conj(), rho, u)
            return (u * diag[..., None, :]) @ dagger(u)
        if self.kind is ChannelKind.APPEND_ANCILLA:
            return kron_batch(rho, np.asarray(self.ancilla, dtype=complex))
        v = np.asarray(self.isometry, dtype=complex)
        d = rho.shape[-1]
        e = v.shape[-2] // d
        big = v @ rho @ dagger(v)
        return hermitian_part(ptrace_batch(big, (d, e), 0))

    @property
    def property(self) -> Property:
        return _MONO_PROPERTY[self.kind]

    def to_params(self) -> dict:
        out = {"channel": self.kind.value, "keep": self.keep}
        if self.dims is not None:
            out["dims"] = [int(x) for x in self.dims]
        for name in ("basis", "ancilla", "isometry"):
            val = getattr(self, name)
            if val is not None:
                out[name] = np.asarray(val)
        return out

    @classmethod
    def from_params(cls, params: dict) -> "Channel":
        return cls(
            ChannelKind(params.get("channel", "PTRACE")),
            dims=tuple(params["dims"]) if params.get("dims") is not None else None,
            keep=int(params.get("keep", 0)),
            basis=params.get("basis"),
            ancilla=params.get("ancilla"),
            isometry=params.get("isometry"),
        )


# ---------------------------------------------------------------- margins


def _ev(measure, a, b):
    return np.asarray(evaluate(measure, a, b), dtype=float)


def _tr(a, b):
    return np.einsum("...ij,...ji->...", a, b).real


def _trace_distance(a, b):
    return 0.5 * np.abs(np.linalg.eigvalsh(hermitian_part(a - b))).sum(axis=-1)


def _mix(p: np.ndarray, states: np.ndarray) -> np.ndarray:
    # p: (n, k), states: (k, n, d, d)
    return np.einsum("nk,knij->nij", p, states)


def margins(
    prop,
    measure,
    inst: dict,
    functional: Optional[MetricFunctional] = None,
    setting: str = "general",
    channel: Optional[Channel] = None,
) -> np.ndarray:
    """Violation margin of ``prop`` for ``measure`` on every instance in ``inst``."""
    prop = as_property(prop)
    m = as_measure(measure)
    if prop is Property.J1A:
        f = _ev(m, inst["rho"], inst["sigma"])
        return np.maximum(f - 1.0, -f)
    if prop is Property.J1B:
        rho, sigma = inst["rho"], inst["sigma"]
        same = np.maximum(np.abs(_ev(m, rho, rho) - 1.0), np.abs(_ev(m, sigma, sigma) - 1.0))
        f = _ev(m, rho, sigma)
        gap = np.abs(f - 1.0)
        hit = np.where(gap <= EXACT_TOL, _trace_distance(rho, sigma), -gap)
        return np.maximum(same, hit)
    if prop is Property.J1C:
        rho, sigma = inst["rho"], inst["sigma"]
        overlap = np.linalg.norm(rho @ sigma, axis=(-2, -1))
        f = _ev(m, rho, sigma)
        ortho = overlap <= ORTHO_TOL
        return np.where(ortho, np.abs(f), np.where(np.abs(f) <= EXACT_TOL, overlap, -np.abs(f)))
    if prop is Property.J2:
        return np.abs(_ev(m, inst["rho"], inst["sigma"]) - _ev(m, inst["sigma"], inst["rho"]))
    if prop is Property.J3:
        psi, sigma = inst["rho"], inst["sigma"]
        t = _tr(psi, sigma)
        return np.maximum(np.abs(_ev(m, psi, sigma) - t), np.abs(_ev(m, sigma, psi) - t))
    if prop is Property.J4:
        u = inst["u"]
        rot = lambda x: u @ x @ dagger(u)
        return np.abs(_ev(m, rot(inst["rho"]), rot(inst["sigma"])) - _ev(m, inst["rho"], inst["sigma"]))
    if prop is Property.SEP_CONCAVE:
        rhos, p, sigma = inst["rhos"], inst["p"], inst["sigma"]
        rhs = sum(p[:, i] * _ev(m, rhos[i], sigma) for i in range(rhos.shape[0]))
        return rhs - _ev(m, _mix(p, rhos), sigma)
    if prop is Property.JOINT_CONCAVE:
        rhos, sigmas, p = inst["rhos"], inst["sigmas"], inst["p"]
        rhs = sum(p[:, i] * _ev(m, rhos[i], sigmas[i]) for i in range(rhos.shape[0]))
        return rhs - _ev(m, _mix(p, rhos), _mix(p, sigmas))
    if prop in (Property.MULT_ANCILLA, Property.MULT_TENSOR_POWER, Property.MULT_GENERAL, Property.SUPERMULT):
        r1, s1, r2, s2 = inst["rho"], inst["sigma"], inst["rho2"], inst["sigma2"]
        joint = _ev(m, kron_batch(r1, r2), kron_batch(s1, s2))
        prod = _ev(m, r1, s1) * _ev(m, r2, s2)
        if prop is Property.SUPERMULT:
            return prod - joint
        return np.abs(joint - prod)
    if prop in (Property.MONO_PTRACE, Property.MONO_PROJECTIVE, Property.MONO_GENERAL):
        if channel is None:
            channel = default_channel(prop, inst)
        before = _ev(m, inst["rho"], inst["sigma"])
        after = _ev(m, channel(inst["rho"]), channel(inst["sigma"]))
        return before - after
    if prop in (Property.METRIC_M1, Property.METRIC_M2, Property.METRIC_M3, Property.METRIC_M4):
        fn = functional or MetricFunctional.SINE_DISTANCE
        rho, sigma = inst["rho"], inst["sigma"]
        if prop is Property.METRIC_M1:
            return -distance(fn, m, rho, sigma)
        if prop is Property.METRIC_M2:
            same = np.maximum(distance(fn, m, rho, rho), distance(fn, m, sigma, sigma))
            dist = distance(fn, m, rho, sigma)
            hit = np.where(dist <= EXACT_TOL, _trace_distance(rho, sigma), -dist)
            return np.maximum(same, hit)
        if prop is Property.METRIC_M3:
            return np.abs(distance(fn, m, rho, sigma) - distance(fn, m, sigma, rho))
        tau = inst["tau"]
        d_rs = distance(fn, m, rho, sigma)
        d_rt = distance(fn, m, rho, tau)
        d_ts = distance(fn, m, tau, sigma)
        if inst.get("ordered", False):
            return d_rs - d_rt - d_ts
        return np.maximum.reduce([d_rs - d_rt - d_ts, d_rt - d_rs - d_ts, d_ts - d_rs - d_rt])
    raise OutOfRange(f"no margin rule for {prop}")


def default_channel(prop: Property, inst: dict) -> Channel:
    if prop is Property.MONO_PTRACE:
        dims = inst.get("dims")
        if dims is None:
            raise DimMismatch("partial-trace instances need subsystem dims")
        return Channel(ChannelKind.PTRACE, dims=tuple(dims), keep=int(inst.get("keep", 0)))
    if prop is Property.MONO_PROJECTIVE:
        return Channel(ChannelKind.PROJECTIVE_MEAS)
    return Channel(ChannelKind.RANDOM_CPTP, isometry=inst["iso"])


# ---------------------------------------------------------------- sampling


@dataclass
class SamplingOptions:
    """How random instances are drawn.

    Pure states and low-rank states sit on the boundary of state space where
    most fidelity inequalities are tight, so a share of every sample is
    drawn there.
    """

    pure_fraction: float = 0.15
    rank_mix: bool = True
    extra: dict = field(default_factory=dict)


def _states(d, n, rng, opts: SamplingOptions):
    return random_pair_batch(d, n, rng, opts.pure_fraction, opts.rank_mix)[0]


def _orthogonal_pairs(d: int, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Pairs with orthogonal supports: split a random basis in two and fill each part."""
    u = haar_unitary_batch(d, n, rng)
    ks = rng.integers(1, d, size=n)
    rho = np.zeros((n, d, d), dtype=complex)
    sigma = np.zeros_like(rho)
    for k in range(1, d):
        sel = np.flatnonzero(ks == k)
        if sel.size == 0:
            continue
        a = ginibre_batch(k, sel.size, rng) if k > 1 else np.ones((sel.size, 1, 1), dtype=complex)
        b = ginibre_batch(d - k, sel.size, rng) if d - k > 1 else np.ones((sel.size, 1, 1), dtype=complex)
        rho[sel, :k, :k] = a
        sigma[sel, k:, k:] = b
    rot = lambda x: u @ x @ dagger(u)
    return rot(rho), rot(sigma)


def sample_instances(
    prop,
    d: int,
    n: int,
    rng,
    setting: str = "general",
    opts: Optional[SamplingOptions] = None,
) -> dict:
    """Draw ``n`` random instances for ``prop`` at dimension ``d``.

    For partial-trace monotonicity ``d`` is the size of each of the two
    subsystems, so states live in dimension ``d**2``. Random channels use an
    environment of dimension ``d``.
    """
    prop = as_property(prop)
    rng = as_generator(rng)
    opts = opts or SamplingOptions()
    if prop is Property.J1C:
        half = n // 2
        r1, s1 = _orthogonal_pairs(d, half, rng)
        r2, s2 = _states(d, n - half, rng, opts), _states(d, n - half, rng, opts)
        return {"rho": np.concatenate([r1, r2]), "sigma": np.concatenate([s1, s2])}
    if prop is Property.J3:
        return {"rho": pure_state_batch(d, n, rng), "sigma": _states(d, n, rng, opts)}
    if prop is Property.J4:
        return {
            "rho": _states(d, n, rng, opts),
            "sigma": _states(d, n, rng, opts),
            "u": haar_unitary_batch(d, n, rng),
        }
    if prop in (Property.SEP_CONCAVE, Property.JOINT_CONCAVE):
        k = int(opts.extra.get("n_terms", 2))
        rhos = np.stack([_states(d, n, rng, opts) for _ in range(k)])
        p = rng.dirichlet(np.ones(k), size=n)
        if prop is Property.SEP_CONCAVE:
            return {"rhos": rhos, "p": p, "sigma": _states(d, n, rng, opts)}
        return {"rhos": rhos, "p": p, "sigmas": np.stack([_states(d, n, rng, opts) for _ in range(k)])}
    if prop in (Property.MULT_ANCILLA, Property.MULT_TENSOR_POWER, Property.MULT_GENERAL, Property.SUPERMULT):
        if prop is Property.MULT_ANCILLA:
            setting = "ancilla"
        elif prop is Property.MULT_TENSOR_POWER:
            setting = "power"
        elif prop is Property.MULT_GENERAL:
            setting = "general"
        rho, sigma = _states(d, n, rng, opts), _states(d, n, rng, opts)
        if setting == "ancilla":
            tau = _states(d, n, rng, opts)
            rho2, sigma2 = tau, tau
        elif setting == "power":
            rho2, sigma2 = rho, sigma
        else:
            rho2, sigma2 = _states(d, n, rng, opts), _states(d, n, rng, opts)
        return {"rho": rho, "sigma": sigma, "rho2": rho2, "sigma2": sigma2, "setting": setting}
    if prop is Property.MONO_PTRACE:
        return {
            "rho": _states(d * d, n, rng, opts),
            "sigma": _states(d * d, n, rng, opts),
            "dims": (d, d),
            "keep": 0,
        }
    if prop is Property.MONO_GENERAL:
        z = rng.standard_normal((n, d * d, d)) + 1j * rng.standard_normal((n, d * d, d))
        q, r = np.linalg.qr(z)
        ph = np.diagonal(r, axis1=-2, axis2=-1)
        iso = q * (ph / np.abs(ph))[..., None, :]
        return {"rho": _states(d, n, rng, opts), "sigma": _states(d, n, rng, opts), "iso": iso}
    if prop is Property.METRIC_M4:
        return {
            "rho": _states(d, n, rng, opts),
            "sigma": _states(d, n, rng, opts),
            "tau": _states(d, n, rng, opts),
        }
    return {"rho": _states(d, n, rng, opts), "sigma": _states(d, n, rng, opts)}


_STACKED = ("rho", "sigma", "tau", "rho2", "sigma2", "u", "iso")


def take(inst: dict, idx) -> dict:
    """Sub-select instances; ``idx`` may be an index array or a boolean mask."""
    out = {}
    for key, val in inst.items():
        if key in _STACKED or key == "p":
            out[key] = val[idx]
        elif key in ("rhos", "sigmas"):
            out[key] = val[:, idx]
        else:
            out[key] = val
    return out


def count(inst: dict) -> int:
    for key in ("rho", "rhos"):
        if key in inst:
            return inst[key].shape[-3]
    raise KeyError("instance set has no states")


def concat(parts: list) -> dict:
    out = {}
    for key, val in parts[0].items():
        if key in _STACKED or key == "p":
            out[key] = np.concatenate([p[key] for p in parts])
        elif key in ("rhos", "sigmas"):
            out[key] = np.concatenate([p[key] for p in parts], axis=1)
        else:
            out[key] = val
    return out
