"""Fidelity measures between two density matrices.

Every measure takes ``rho`` and ``sigma`` either as single ``(d, d)``
matrices, which are validated, or as stacks ``(n, d, d)`` that are trusted
to hold density matrices (the random ensembles produce these). Stacked
inputs return arrays of shape ``(n,)``; single inputs return floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import BadDim, BadExponent, DimMismatch, ParseError, ZeroDenominator
from .linalg import (
    DensityMatrix,
    SUPPORT_TOL,
    PureState,
    as_matrix,
    dagger,
    eigen_power,
    hermitian_part,
    real_scalar,
    spectrum,
    validate_density,
)

# purities are compared after rounding to this many decimals when picking the larger one
_PURITY_DECIMALS = 12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _as_state(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.matrix
    m = as_matrix(x)
    if m.shape[-1] != m.shape[-2]:
        validate_density(m)  # raises NotSquare
    if m.ndim == 2:
        return validate_density(m).matrix
    return m


def _operands(rho, sigma) -> tuple[np.ndarray, np.ndarray]:
    r = _as_state(rho)
    s = _as_state(sigma)
    if r.shape[-1] != s.shape[-1]:
        raise DimMismatch(f"dimensions differ: {r.shape[-1]} vs {s.shape[-1]}")
    return r, s


def _tr_prod(a: np.ndarray, b: np.ndarray):
    return real_scalar(np.einsum("...ij,...ji->...", a, b))


def _purity(a: np.ndarray):
    return _tr_prod(a, a)


def _sqrt(a: np.ndarray) -> np.ndarray:
    w, v = spectrum(a)
    return (v * np.sqrt(w)[..., None, :]) @ dagger(v)


def overlap(rho, sigma):
    """Hilbert-Schmidt overlap ``tr(rho sigma)``."""
    r, s = _operands(rho, sigma)
    return _tr_prod(r, s)


def f_pure(psi, rho) -> float:
    """Schumacher fidelity ``<psi|rho|psi>`` of a pure state against a density matrix."""
    if not isinstance(psi, PureState):
        psi = PureState(psi)
    r = _as_state(rho)
    if psi.dim != r.shape[-1]:
        raise DimMismatch(f"state has dim {psi.dim}, matrix has dim {r.shape[-1]}")
    a = psi.amplitudes
    return real_scalar(np.einsum("i,...ij,j->...", a.conj(), r, a))


def f1(rho, sigma):
    """Uhlmann-Jozsa fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Computed as the squared trace norm of ``sqrt(rho) sqrt(sigma)``. Singular
    values carry absolute error near machine epsilon, whereas square roots of
    the eigenvalues of ``sqrt(rho) sigma sqrt(rho)`` turn round-off of 1e-16
    into errors of 1e-8.
    """
    r, s = _operands(rho, sigma)
    sv = np.linalg.svd(_sqrt(r) @ _sqrt(s), compute_uv=False)
    return real_scalar(np.sum(sv, axis=-1) ** 2)


def fp(rho, sigma, p: float):
    """Schatten p-fidelity.

    ``||sqrt(rho) sqrt(sigma)||_p**2 / max(||rho||_p**2, ||sigma||_p**2)``,
    with the numerator taken from singular values so that non-integer ``p``
    needs no fractional matrix power. ``p = inf`` uses the operator norm.
    """
    if not p >= 1:
        raise BadExponent(f"p-fidelity needs p >= 1, got {p}")
    r, s = _operands(rho, sigma)
    sv = np.linalg.svd(_sqrt(r) @ _sqrt(s), compute_uv=False)
    wr = np.linalg.eigvalsh(hermitian_part(r)).clip(0.0, None)
    ws = np.linalg.eigvalsh(hermitian_part(s)).clip(0.0, None)
    if np.isinf(p):
        num = sv.max(axis=-1) ** 2
        den = np.maximum(wr.max(axis=-1), ws.max(axis=-1)) ** 2
    else:
        num = np.sum(sv**p, axis=-1) ** (2.0 / p)
        den = np.maximum(np.sum(wr**p, axis=-1), np.sum(ws**p, axis=-1)) ** (2.0 / p)
    return real_scalar(num / den)


def _max_purity(pr, ps):
    return np.where(np.round(pr, _PURITY_DECIMALS) >= np.round(ps, _PURITY_DECIMALS), pr, ps)


def f2(rho, sigma):
    """Hilbert-Schmidt fidelity ``tr(rho sigma) / max(tr rho**2, tr sigma**2)``."""
    r, s = _operands(rho, sigma)
    return real_scalar(_tr_prod(r, s) / _max_purity(_purity(r), _purity(s)))


def f2p_even(rho, sigma, p: int):
    """The p-fidelity of even order ``2p`` through traces of integer powers.

    ``{tr[(rho sigma)**p]}**(1/p) / max{[tr rho**(2p)]**(1/p), [tr sigma**(2p)]**(1/p)}``
    """
    if int(p) != p or p < 1:
        raise BadExponent(f"order must be a positive integer, got {p}")
    p = int(p)
    r, s = _operands(rho, sigma)
    num = real_scalar(np.trace(np.linalg.matrix_power(r @ s, p), axis1=-2, axis2=-1))
    num = np.clip(num, 0.0, None) ** (1.0 / p)
    pr = _tr_prod(np.linalg.matrix_power(r, p), np.linalg.matrix_power(r, p)) ** (1.0 / p)
    ps = _tr_prod(np.linalg.matrix_power(s, p), np.linalg.matrix_power(s, p)) ** (1.0 / p)
    return real_scalar(num / np.maximum(pr, ps))


@dataclass(frozen=True)
class ChernoffResult:
    """Minimum of ``tr(rho**s sigma**(1-s))`` over ``s`` in ``[0, 1]``.

    ``objective_samples`` holds ``(s, f(s))`` pairs when requested.
    """

    value: float
    minimizer_s: float
    objective_samples: Optional[tuple] = None

    def __float__(self) -> float:
        return float(self.value)


class _ChernoffObjective:
    """``f(s) = sum_ij a_i**s b_j**(1-s) |<u_i|v_j>|**2`` for a stack of pairs."""

    def __init__(self, r: np.ndarray, s: np.ndarray):
        self.a, u = spectrum(r)
        self.b, v = spectrum(s)
        self.c = np.abs(dagger(u) @ v) ** 2

    def subset(self, mask) -> "_ChernoffObjective":
        out = object.__new__(_ChernoffObjective)
        out.a, out.b, out.c = self.a[mask], self.b[mask], self.c[mask]
        return out

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        pa = eigen_power(self.a, s[..., None])
        pb = eigen_power(self.b, 1.0 - s[..., None])
        return np.einsum("...i,...ij,...j->...", pa, self.c, pb)


def _golden_min(obj: "_ChernoffObjective", shape, tol: float):
    """Golden-section search on ``[0, 1]``, vectorized over a stack of objectives."""
    lo = np.zeros(shape)
    hi = np.ones(shape)
    n_iter = max(1, math.ceil(math.log(max(tol, 1e-16)) / math.log(_GOLDEN)))
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    v1, v2 = obj(x1), obj(x2)
    for _ in range(n_iter):
        left = v1 <= v2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        v1, v2 = obj(x1), obj(x2)
    return np.where(v1 <= v2, x1, x2), np.minimum(v1, v2)


def _chernoff(r: np.ndarray, s: np.ndarray, tol: float):
    obj = _ChernoffObjective(r, s)
    shape = r.shape[:-2]
    s_in, f_in = _golden_min(obj, shape, tol)
    f0 = obj(np.zeros(shape))
    f1_ = obj(np.ones(shape))
    # convexity makes the interior search exact; an endpoint well below it means
    # the search went wrong, so those pairs are redone on a grid
    bad = np.minimum(f0, f1_) < f_in - max(tol, 1e-12)
    if np.any(bad):
        s_in = np.array(s_in, copy=True)
        f_in = np.array(f_in, copy=True)
        grid = np.linspace(0.0, 1.0, 10001)
        sub = obj.subset(bad)
        vals = sub(np.broadcast_to(grid[:, None], (grid.size,) + sub.a.shape[:-1]))
        j = np.argmin(vals, axis=0)
        s_in[bad] = grid[j]
        f_in[bad] = np.take_along_axis(vals, j[None], axis=0)[0]
    best_s = np.where(f0 <= f_in, 0.0, s_in)
    best_f = np.minimum(f0, f_in)
    best_s = np.where(f1_ < best_f, 1.0, best_s)
    best_f = np.minimum(f1_, best_f)
    return best_f, best_s, obj


def fq(rho, sigma, solver_tol: float = 1e-10, n_samples: int = 0) -> ChernoffResult:
    """Non-logarithmic quantum Chernoff bound ``min_s tr(rho**s sigma**(1-s))``.

    The objective is convex in ``s`` so a golden-section search locates the
    minimum; both endpoints are evaluated explicitly as well, using the
    support-projector convention for ``rho**0``. Pass ``n_samples > 1`` to
    get the objective on a uniform grid in ``objective_samples``.
    """
    r, s = _operands(rho, sigma)
    if r.ndim != 2:
        raise DimMismatch("fq takes a single pair; use fq_value for stacks")
    value, s_star, obj = _chernoff(r, s, solver_tol)
    samples = None
    if n_samples > 1:
        grid = np.linspace(0.0, 1.0, n_samples)
        samples = tuple((float(g), float(obj(np.array(g)))) for g in grid)
    return ChernoffResult(real_scalar(value), float(s_star), samples)


def fq_value(rho, sigma, solver_tol: float = 1e-10):
    """Value of :func:`fq` only; accepts stacks of pairs."""
    r, s = _operands(rho, sigma)
    return real_scalar(_chernoff(r, s, solver_tol)[0])


def _mixedness(a):
    # a pure state's 1 - tr(a**2) comes out near 1e-16, and its square root near 1e-8
    m = 1.0 - _purity(a)
    return np.where(m > SUPPORT_TOL, m, 0.0)


def fn(rho, sigma):
    """Super-fidelity ``tr(rho sigma) + sqrt(1 - tr rho**2) sqrt(1 - tr sigma**2)``."""
    r, s = _operands(rho, sigma)
    mix_r = np.sqrt(_mixedness(r))
    mix_s = np.sqrt(_mixedness(s))
    return real_scalar(_tr_prod(r, s) + mix_r * mix_s)


def fc(rho, sigma):
    """``(1 - x)/2 + (1 + x)/2 * FN`` with ``x = 1/(d - 1)``."""
    r, s = _operands(rho, sigma)
    d = r.shape[-1]
    if d < 2:
        raise BadDim("fc needs d >= 2")
    x = 1.0 / (d - 1)
    return real_scalar((1.0 - x) / 2.0 + (1.0 + x) / 2.0 * fn(r, s))


def fa(rho, sigma):
    """A-fidelity ``[tr(sqrt(rho) sqrt(sigma))]**2``."""
    r, s = _operands(rho, sigma)
    return real_scalar(_tr_prod(_sqrt(r), _sqrt(s)) ** 2)


PURITY_FUNCTIONALS: dict[str, Callable] = {
    "GM": lambda x, y: np.sqrt(x * y),
    "AM": lambda x, y: (x + y) / 2.0,
    "HM": lambda x, y: 2.0 * x * y / (x + y),
    "MIN": np.minimum,
    "MAX": lambda x, y: _max_purity(x, y),
}


def ff(rho, sigma, f: Union[str, Callable] = "GM"):
    """``tr(rho sigma) / f(tr rho**2, tr sigma**2)`` for a symmetric purity functional ``f``.

    ``f`` is a name from :data:`PURITY_FUNCTIONALS` or any callable of two
    purities.
    """
    if isinstance(f, str):
        try:
            f = PURITY_FUNCTIONALS[f.upper()]
        except KeyError:
            raise ParseError(f"unknown purity functional {f!r}") from None
    r, s = _operands(rho, sigma)
    den = np.asarray(f(_purity(r), _purity(s)), dtype=float)
    if np.any(den == 0):
        raise ZeroDenominator("purity functional evaluated to zero")
    return real_scalar(_tr_prod(r, s) / den)


def fgm(rho, sigma):
    return ff(rho, sigma, "GM")


def fam(rho, sigma):
    return ff(rho, sigma, "AM")


def fhm(rho, sigma):
    """Harmonic-mean normalized overlap. Can exceed 1."""
    return ff(rho, sigma, "HM")


def fmin(rho, sigma):
    """Overlap normalized by the smaller purity. Can exceed 1."""
    return ff(rho, sigma, "MIN")


def renyi_entropy(rho, p: float) -> float:
    """Renyi entropy ``p/(1-p) ln ||rho||_p`` in nats."""
    if not p > 0 or p == 1:
        raise BadExponent(f"Renyi order must be positive and differ from 1, got {p}")
    w, _ = spectrum(_as_state(rho))
    w = w[w > 0]
    return float(math.log(np.sum(w**p)) / (1.0 - p))


def von_neumann_entropy(rho) -> float:
    w, _ = spectrum(_as_state(rho))
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


@dataclass(frozen=True)
class MeasureId:
    """Names one measure, with its parameter where it has one.

    ``kind`` is one of :data:`MEASURE_KINDS`. ``FP`` takes a real ``p >= 1``,
    ``F2P`` a positive integer, ``FF`` a purity functional name.
    """

    kind: str
    param: Union[float, int, str, None] = None

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in MEASURE_KINDS:
            raise ParseError(f"unknown measure {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        param = self.param
        if kind == "FP":
            if param is None or not float(param) >= 1:
                raise BadExponent(f"FP needs p >= 1, got {param}")
            param = float(param)
        elif kind == "F2P":
            if param is None or int(param) != float(param) or int(param) < 1:
                raise BadExponent(f"F2P needs a positive integer order, got {param}")
            param = int(param)
        elif kind == "FF":
            if str(param).upper() not in PURITY_FUNCTIONALS:
                raise ParseError(f"unknown purity functional {param!r}")
            param = str(param).upper()
        elif param is not None:
            raise ParseError(f"{kind} takes no parameter")
        object.__setattr__(self, "param", param)

    @classmethod
    def parse(cls, text: str) -> "MeasureId":
        """Parse ``"F1"``, ``"FP:1.5"``, ``"F2P:2"`` or ``"FF:HM"``."""
        name, _, arg = text.strip().partition(":")
        if not arg:
            return cls(name)
        if name.upper() in ("FP", "F2P"):
            try:
                value = float(arg)
            except ValueError:
                raise ParseError(f"bad parameter in {text!r}") from None
            return cls(name, value)
        return cls(name, arg)

    @property
    def label(self) -> str:
        if self.param is None:
            return self.kind
        param = self.param
        if isinstance(param, float) and param.is_integer():
            param = int(param)
        return f"{self.kind}:{param}"

    @property
    def bounded(self) -> bool:
        """Whether the measure is guaranteed to stay in ``[0, 1]``."""
        return not (self.kind in ("FHM", "FMIN") or (self.kind == "FF" and self.param in ("HM", "MIN")))

    def __str__(self) -> str:
        return self.label

    def __call__(self, rho, sigma):
        return evaluate(self, rho, sigma)


_SIMPLE = {
    "PURE_OVERLAP": overlap,
    "F1": f1,
    "F2": f2,
    "FQ": fq_value,
    "FN": fn,
    "FC": fc,
    "FA": fa,
    "FGM": fgm,
    "FAM": fam,
    "FHM": fhm,
    "FMIN": fmin,
}

MEASURE_KINDS = tuple(_SIMPLE) + ("FP", "F2P", "FF")

# the eight measures compared throughout the property tables
CORE_MEASURES = tuple(MeasureId(k) for k in ("F1", "F2", "FQ", "FN", "FC", "FA", "FGM", "FAM"))
# every parameter-free measure that appears in the axiom tables
AXIOM_MEASURES = CORE_MEASURES + (MeasureId("FHM"), MeasureId("FMIN"))


def evaluate(measure: Union[MeasureId, str], rho, sigma):
    """Evaluate ``measure`` on a pair (or a stack of pairs).

    ``PURE_OVERLAP`` is ``tr(rho sigma)``, which is the Schumacher fidelity
    whenever one argument is a pure state.
    """
    if isinstance(measure, str):
        measure = MeasureId.parse(measure)
    if measure.kind in _SIMPLE:
        return _SIMPLE[measure.kind](rho, sigma)
    if measure.kind == "FP":
        return fp(rho, sigma, measure.param)
    if measure.kind == "F2P":
        return f2p_even(rho, sigma, measure.param)
    return ff(rho, sigma, measure.param)
