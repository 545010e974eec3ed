"""Monte Carlo estimates of ``tr(rho sigma)`` and F2 from phase-space samples.

Conventions for ``M`` modes: ``d^2 alpha = d(Re alpha) d(Im alpha)`` per mode,
Wigner functions integrate to one, and overlaps follow
``tr(rho sigma) = pi**M * integral W_rho W_sigma``. With these, a coherent
state has ``W(alpha) = (2/pi) exp(-2 |alpha - alpha0|**2)``, i.e. variance
1/4 in each quadrature.

Gaussian states are given by a complex mean and a real ``2M x 2M`` covariance
over ``(Re alpha_1..M, Im alpha_1..M)``.

Two estimators are provided:

* Wigner: draw ``alpha_i`` from ``W_sigma`` and average ``pi**M W_rho(alpha_i)``.
* positive-P: draw independent pairs ``(alpha, alpha+)`` for both states and
  average the kernel ``exp(-sum (alpha - beta)(alpha+ - beta+))`` over all
  cross pairs.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import eval_laguerre

from .ensembles import stream
from .errors import NegativeDistribution, NumericalError, OutOfRange, UnknownPurity, UnsupportedState

SAMPLE_BLOCK = 4096
KERNEL_BLOCK = 1024
MAX_POSP_SAMPLES = 10_000
VACUUM_VARIANCE = 0.25


# ---------------------------------------------------------------- state specs


@dataclass(frozen=True)
class CoherentSpec:
    """Product of coherent states ``|alpha_1> ... |alpha_M>``."""

    amplitudes: tuple

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        if a.ndim != 1 or a.size == 0:
            raise UnsupportedState("coherent amplitudes must be a non-empty vector")
        if not np.all(np.isfinite(a)):
            raise UnsupportedState("coherent amplitudes must be finite")
        object.__setattr__(self, "amplitudes", tuple(complex(x) for x in a))

    @property
    def modes(self) -> int:
        return len(self.amplitudes)

    def gaussian(self) -> "GaussianSpec":
        m = self.modes
        return GaussianSpec(self.amplitudes, VACUUM_VARIANCE * np.eye(2 * m))


@dataclass(frozen=True)
class GaussianSpec:
    """Gaussian state with complex mean ``mean`` and quadrature covariance ``cov``.

    ``cov`` must satisfy the uncertainty relation ``cov + (i/4) J >= 0`` with
    ``J`` the symplectic form, which also makes it positive definite.
    """

    mean: tuple
    cov: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mean, dtype=complex))
        m = mu.size
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (2 * m, 2 * m):
            raise UnsupportedState(f"covariance for {m} modes must be {2 * m}x{2 * m}, got {cov.shape}")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(cov))):
            raise UnsupportedState("Gaussian parameters must be finite")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise UnsupportedState("covariance must be symmetric")
        j = np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), np.zeros((m, m))]])
        if np.linalg.eigvalsh(cov + 0.25j * j).min() < -1e-12:
            raise UnsupportedState("covariance violates the uncertainty relation")
        cov.setflags(write=False)
        object.__setattr__(self, "mean", tuple(complex(x) for x in mu))
        object.__setattr__(self, "cov", cov)

    @property
    def modes(self) -> int:
        return len(self.mean)

    def gaussian(self) -> "GaussianSpec":
        return self

    def __eq__(self, other):
        if not isinstance(other, GaussianSpec):
            return NotImplemented
        return self.mean == other.mean and np.array_equal(self.cov, other.cov)

    def __hash__(self):
        return hash((self.mean, self.cov.tobytes()))


@dataclass(frozen=True)
class FockSpec:
    """Single-mode number state ``|n>``; its Wigner function is negative for ``n >= 1``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise UnsupportedState(f"photon number must be a nonnegative integer, got {self.n}")

    @property
    def modes(self) -> int:
        return 1


StateSpec = Union[CoherentSpec, GaussianSpec, FockSpec]


def vacuum(modes: int = 1) -> CoherentSpec:
    return CoherentSpec((0j,) * modes)


def thermal(nbar: Union[float, Sequence[float]], displacement=None) -> GaussianSpec:
    """Thermal state(s) with mean occupation ``nbar`` per mode, optionally displaced."""
    nb = np.atleast_1d(np.asarray(nbar, dtype=float))
    if np.any(nb < 0):
        raise UnsupportedState("mean occupation must be nonnegative")
    var = (nb + 0.5) / 2.0
    mean = np.zeros(nb.size, dtype=complex) if displacement is None else np.atleast_1d(displacement)
    return GaussianSpec(tuple(mean), np.diag(np.concatenate([var, var])))


def squeezed(r: float, phi: float = 0.0, displacement: complex = 0j) -> GaussianSpec:
    """Single-mode squeezed state; ``phi`` rotates the squeezed quadrature."""
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    rot = np.array([[c, -s], [s, c]])
    cov = rot @ np.diag([VACUUM_VARIANCE * np.exp(-2 * r), VACUUM_VARIANCE * np.exp(2 * r)]) @ rot.T
    return GaussianSpec((displacement,), cov)


def _gaussian_or_none(spec) -> Optional[GaussianSpec]:
    if isinstance(spec, (CoherentSpec, GaussianSpec)):
        return spec.gaussian()
    if isinstance(spec, FockSpec):
        return None
    raise UnsupportedState(f"unsupported state spec {type(spec).__name__}")


def _quadratures(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=complex)
    return np.concatenate([points.real, points.imag], axis=-1)


def _gauss_pdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    diff = x - mean
    inv = np.linalg.inv(cov)
    q = np.einsum("...i,ij,...j->...", diff, inv, diff)
    n = cov.shape[0]
    return np.exp(-0.5 * q) / np.sqrt((2 * np.pi) ** n * np.linalg.det(cov))


def wigner_density(spec: StateSpec, point) -> np.ndarray:
    """Wigner function of ``spec`` at one point or a stack of points of shape ``(..., M)``."""
    pts = np.asarray(point, dtype=complex)
    if pts.ndim == 0:
        pts = pts[None]
    g = _gaussian_or_none(spec)
    if g is not None:
        if pts.shape[-1] != g.modes:
            raise OutOfRange(f"point has {pts.shape[-1]} modes, state has {g.modes}")
        return _gauss_pdf(_quadratures(pts), _quadratures(np.array(g.mean)), g.cov)
    if pts.shape[-1] != 1:
        raise OutOfRange("Fock states are single-mode")
    r2 = np.abs(pts[..., 0]) ** 2
    return (2 / np.pi) * (-1) ** spec.n * np.exp(-2 * r2) * eval_laguerre(spec.n, 4 * r2)


def purity(spec: StateSpec) -> float:
    """Analytic ``tr(rho**2)``: ``1 / (4**M sqrt(det cov))`` for Gaussians, 1 for Fock states."""
    g = _gaussian_or_none(spec)
    if g is None:
        return 1.0
    return float(1.0 / (4.0**g.modes * np.sqrt(np.linalg.det(g.cov))))


def analytic_overlap(rho: StateSpec, sigma: StateSpec) -> float:
    """Exact ``tr(rho sigma)`` for two Gaussian states, or a Fock state against a coherent one."""
    gr, gs = _gaussian_or_none(rho), _gaussian_or_none(sigma)
    if gr is not None and gs is not None:
        if gr.modes != gs.modes:
            raise OutOfRange("states have different mode counts")
        m = gr.modes
        mu = _quadratures(np.array(gr.mean)) - _quadratures(np.array(gs.mean))
        return float(np.pi**m * _gauss_pdf(mu, np.zeros_like(mu), gr.cov + gs.cov))
    fock, other = (rho, gs) if gr is None else (sigma, gr)
    if other is not None and isinstance(other, GaussianSpec) and np.allclose(other.cov, VACUUM_VARIANCE * np.eye(2)):
        a2 = abs(other.mean[0]) ** 2
        return float(np.exp(-a2) * a2**fock.n / np.prod(np.arange(1, fock.n + 1, dtype=float)))
    if isinstance(rho, FockSpec) and isinstance(sigma, FockSpec):
        return float(rho.n == sigma.n)
    raise UnsupportedState("no closed form for this pair")


# ---------------------------------------------------------------- Wigner sampling


@dataclass(frozen=True)
class WignerSampleBatch:
    """Points drawn from a Wigner distribution, each with weight ``1/n_samples``."""

    points: np.ndarray
    seed: int
    n_samples: int

    @property
    def modes(self) -> int:
        return self.points.shape[1]


def _block_sizes(n: int, block: int):
    return [min(block, n - lo) for lo in range(0, n, block)]


def sample_wigner(spec: StateSpec, n: int, seed: int, key: tuple = ()) -> WignerSampleBatch:
    """Draw ``n`` points from ``W_spec``; block ``b`` uses stream ``(seed, *key, b)``."""
    if n < 1:
        raise OutOfRange("need at least one sample")
    g = _gaussian_or_none(spec)
    if g is None:
        if spec.n > 0:
            raise NegativeDistribution(f"Wigner function of |{spec.n}> takes negative values")
        g = vacuum(1).gaussian()
    m = g.modes
    mean = _quadratures(np.array(g.mean))
    chol = np.linalg.cholesky(g.cov)
    parts = []
    for b, size in enumerate(_block_sizes(n, SAMPLE_BLOCK)):
        z = stream(seed, *key, b).standard_normal((size, 2 * m))
        parts.append(mean + z @ chol.T)
    x = np.concatenate(parts)
    return WignerSampleBatch(x[:, :m] + 1j * x[:, m:], seed, n)


def _mean_and_error(values: np.ndarray) -> tuple:
    n = values.size
    est = float(np.sum(values) / n)
    se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return est, se


def sampled_tr_wigner(rho: StateSpec, batch: WignerSampleBatch) -> tuple:
    """``(estimate, std_error)`` of ``tr(rho sigma)`` from a batch drawn from ``W_sigma``."""
    w = wigner_density(rho, batch.points)
    return _mean_and_error(np.pi**batch.modes * w)


# ---------------------------------------------------------------- positive-P


def coherent_overlap(gamma, delta) -> complex:
    """``<gamma|delta> = exp(-|gamma|^2/2 - |delta|^2/2 + conj(gamma) delta)``, multiplied over modes."""
    g = np.asarray(gamma, dtype=complex)
    d = np.asarray(delta, dtype=complex)
    return complex(np.prod(np.exp(-0.5 * np.abs(g) ** 2 - 0.5 * np.abs(d) ** 2 + g.conj() * d)))


def posp_kernel(alpha_pair, beta_pair) -> complex:
    """``tr(Lambda(alpha) Lambda(beta))`` for positive-P basis operators.

    ``Lambda(alpha) = |alpha><conj(alpha+)| / <conj(alpha+)|alpha>``, so the
    trace is ``<conj(beta+)|alpha> <conj(alpha+)|beta> / (<conj(alpha+)|alpha> <conj(beta+)|beta>)``.
    It reduces to ``exp(-sum (alpha - beta)(alpha+ - beta+))``.
    """
    a, ap = (np.atleast_1d(np.asarray(x, dtype=complex)) for x in alpha_pair)
    b, bp = (np.atleast_1d(np.asarray(x, dtype=complex)) for x in beta_pair)
    num = coherent_overlap(bp.conj(), a) * coherent_overlap(ap.conj(), b)
    den = coherent_overlap(ap.conj(), a) * coherent_overlap(bp.conj(), b)
    return num / den


@dataclass(frozen=True)
class PosPSampleBatch:
    """Pairs ``(alpha, alpha+)`` of complex ``M``-vectors drawn from a positive-P distribution."""

    alpha: np.ndarray
    alpha_plus: np.ndarray
    seed: int
    n_samples: int

    @property
    def modes(self) -> int:
        return self.alpha.shape[1]


def sample_posp_coherent(spec: CoherentSpec, n: int, seed: int = 0) -> PosPSampleBatch:
    """Delta distribution at ``(alpha0, conj(alpha0))``: exact for a coherent state."""
    if n < 1:
        raise OutOfRange("need at least one sample")
    a = np.tile(np.array(spec.amplitudes, dtype=complex), (n, 1))
    return PosPSampleBatch(a, a.conj(), seed, n)


def _complex_gaussian_draw(mean: np.ndarray, pcov: np.ndarray, n: int, seed: int, key: tuple) -> np.ndarray:
    m = mean.size
    w, v = np.linalg.eigh(pcov)
    root = v * np.sqrt(np.clip(w, 0.0, None))
    parts = []
    for b, size in enumerate(_block_sizes(n, SAMPLE_BLOCK)):
        z = stream(seed, *key, b).standard_normal((size, 2 * m))
        parts.append(_quadratures(mean) + z @ root.T)
    x = np.concatenate(parts)
    return x[:, :m] + 1j * x[:, m:]


def sample_posp_glauber(spec, n: int, seed: int = 0, key: tuple = ()) -> PosPSampleBatch:
    """Sample the Glauber P function with ``alpha+ = conj(alpha)``.

    Exists for Gaussian states with ``cov >= 1/4`` (thermal, coherent and
    their mixtures); the P covariance is ``cov - 1/4``.
    """
    g = _gaussian_or_none(spec)
    if g is None:
        raise UnsupportedState("number states have no regular Glauber P function")
    pcov = g.cov - VACUUM_VARIANCE * np.eye(2 * g.modes)
    if np.linalg.eigvalsh(pcov).min() < -1e-12:
        raise NegativeDistribution("state is nonclassical; its Glauber P is not a probability density")
    if n < 1:
        raise OutOfRange("need at least one sample")
    a = _complex_gaussian_draw(np.array(g.mean), pcov, n, seed, key)
    return PosPSampleBatch(a, a.conj(), seed, n)


def sample_posp_canonical(spec, n: int, seed: int = 0, key: tuple = ()) -> PosPSampleBatch:
    """Canonical positive-P sample: ``alpha = gamma + delta``, ``alpha+ = conj(gamma - delta)``.

    ``gamma`` follows the Husimi Q function (covariance ``cov + 1/4``) and
    ``delta`` is an independent complex normal with ``E|delta|^2 = 1``. It
    works for every Gaussian state including squeezed ones, but the kernel
    average over two such batches has heavy tails and is not a usable
    estimator; it is provided for completeness.
    """
    g = _gaussian_or_none(spec)
    if g is None:
        raise UnsupportedState("canonical sampler implemented for Gaussian states only")
    if n < 1:
        raise OutOfRange("need at least one sample")
    m = g.modes
    gamma = _complex_gaussian_draw(np.array(g.mean), g.cov + VACUUM_VARIANCE * np.eye(2 * m), n, seed, key + (0,))
    delta = _complex_gaussian_draw(np.zeros(m, dtype=complex), 0.5 * np.eye(2 * m), n, seed, key + (1,))
    return PosPSampleBatch(gamma + delta, (gamma - delta).conj(), seed, n)


def sample_posp(spec, n: int, seed: int = 0, key: tuple = ()) -> PosPSampleBatch:
    """Default positive-P sampler: delta for coherent states, Glauber P otherwise."""
    if isinstance(spec, CoherentSpec):
        return sample_posp_coherent(spec, n, seed)
    return sample_posp_glauber(spec, n, seed, key)


def _kernel_block(a, ap, b, bp) -> np.ndarray:
    e = np.einsum("im,im->i", a, ap)[:, None] + np.einsum("jm,jm->j", b, bp)[None, :]
    e = e - a @ bp.T - ap @ b.T
    return np.exp(-e)


def _compress(batch: PosPSampleBatch) -> tuple:
    """Distinct ``(alpha, alpha+)`` rows and their multiplicities."""
    stacked = np.concatenate([batch.alpha, batch.alpha_plus], axis=1)
    keys = np.ascontiguousarray(np.concatenate([stacked.real, stacked.imag], axis=1))
    _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
    order = np.argsort(first)
    idx = first[order]
    return batch.alpha[idx], batch.alpha_plus[idx], counts[order].astype(float)


def _weighted_var(values: np.ndarray, weights: np.ndarray) -> float:
    n = weights.sum()
    if n <= 1:
        return 0.0
    mean = np.sum(weights * values) / n
    return float(np.sum(weights * (values - mean) ** 2) / (n - 1))


def sampled_tr_posp(
    batch_rho: PosPSampleBatch,
    batch_sigma: PosPSampleBatch,
    max_samples: int = MAX_POSP_SAMPLES,
    workers: int = 1,
) -> tuple:
    """Double-sum estimate ``(1/(N_a N_b)) sum_ij D(alpha_i, beta_j)`` of ``tr(rho sigma)``.

    The standard error treats the double mean as a two-sample U-statistic:
    ``sqrt(var(row means)/N_a + var(column means)/N_b)``. Repeated sample
    points (a delta-distributed batch is one point N times) are summed once
    with their multiplicity. Blocks are reduced in a fixed order, so the
    result does not depend on ``workers``.
    """
    na, nb = batch_rho.n_samples, batch_sigma.n_samples
    if max(na, nb) > max_samples:
        raise OutOfRange(f"batch larger than {max_samples}; the double sum is O(N^2)")
    if batch_rho.modes != batch_sigma.modes:
        raise OutOfRange("batches have different mode counts")
    a, ap, wa = _compress(batch_rho)
    b, bp, wb = _compress(batch_sigma)
    row_blocks = [(lo, min(lo + KERNEL_BLOCK, a.shape[0])) for lo in range(0, a.shape[0], KERNEL_BLOCK)]

    def run(bounds):
        lo, hi = bounds
        k = _kernel_block(a[lo:hi], ap[lo:hi], b, bp)
        return k @ wb, wa[lo:hi] @ k

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, row_blocks))
    else:
        results = [run(bd) for bd in row_blocks]
    row_sums = np.concatenate([r for r, _ in results])
    col_sums = np.sum([c for _, c in results], axis=0)
    est = np.sum(wa * row_sums) / (na * nb)
    row_means, col_means = row_sums / nb, col_sums / na
    se = float(np.sqrt(_weighted_var(row_means.real, wa) / na + _weighted_var(col_means.real, wb) / nb))
    if abs(est.imag) > max(5 * se, 1e-12):
        raise NumericalError(f"imaginary part {est.imag:.3g} exceeds 5 standard errors ({se:.3g})")
    return float(est.real), se


# ---------------------------------------------------------------- F2 from samples


def f2_phasespace(
    rho: StateSpec,
    sigma,
    n_samples: int = 10_000,
    seed: int = 0,
    representation: str = "wigner",
    rho_purity: Optional[float] = None,
    assume_rho_purer: bool = True,
) -> tuple:
    """``(estimate, std_error)`` of ``F2 = tr(rho sigma) / tr(rho**2)``.

    The denominator is ``tr(rho**2)``, known analytically for ``rho``; this
    is the right normalization only when ``rho`` is at least as pure as
    ``sigma``. With ``assume_rho_purer`` unset that is checked, and
    :class:`UnknownPurity` is raised when ``sigma``'s purity is larger or
    cannot be determined (a bare sample batch). ``sigma`` may be a state
    spec (sampled here) or a ready batch matching ``representation``.
    """
    p_rho = purity(rho) if rho_purity is None else float(rho_purity)
    if not assume_rho_purer:
        if isinstance(sigma, (WignerSampleBatch, PosPSampleBatch)):
            raise UnknownPurity("purity of a sampled state is unknown; cannot normalize F2")
        if purity(sigma) > p_rho + 1e-12:
            raise UnknownPurity("sigma is purer than rho; tr(rho^2) is the wrong normalization")
    if representation == "wigner":
        batch = sigma if isinstance(sigma, WignerSampleBatch) else sample_wigner(sigma, n_samples, seed, key=(1,))
        est, se = sampled_tr_wigner(rho, batch)
    elif representation == "posp":
        n = min(n_samples, MAX_POSP_SAMPLES)
        b_sigma = sigma if isinstance(sigma, PosPSampleBatch) else sample_posp(sigma, n, seed, key=(1,))
        b_rho = sample_posp(rho, n, seed, key=(0,))
        est, se = sampled_tr_posp(b_rho, b_sigma)
    else:
        raise OutOfRange(f"unknown representation {representation!r}")
    return est / p_rho, se / p_rho


# ---------------------------------------------------------------- output


def write_batch_csv(batch, path) -> None:
    """One row per sample: ``mode_count,sample_index,re_alpha_k,im_alpha_k,...[,re_alphaplus_k,...]``."""
    if isinstance(batch, WignerSampleBatch):
        cols = [batch.points]
        names = ["alpha"]
    else:
        cols = [batch.alpha, batch.alpha_plus]
        names = ["alpha", "alphaplus"]
    m = cols[0].shape[1]
    header = ["mode_count", "sample_index"]
    for name in names:
        for k in range(1, m + 1):
            header += [f"re_{name}_{k}", f"im_{name}_{k}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(cols[0].shape[0]):
            row = [m, i]
            for c in cols:
                for k in range(m):
                    row += [repr(float(c[i, k].real)), repr(float(c[i, k].imag))]
            w.writerow(row)


def estimator_report(estimate: float, std_error: float, n_samples: int, seed: int, representation: str) -> dict:
    return {
        "estimate": float(estimate),
        "std_error": float(std_error),
        "n_samples": int(n_samples),
        "seed": int(seed),
        "representation": representation,
    }


def spec_from_json(obj: dict) -> StateSpec:
    """Parse ``{"type": "coherent"|"thermal"|"squeezed"|"gaussian"|"fock", ...}``."""

    def cplx(x):
        if isinstance(x, (list, tuple)):
            return complex(x[0], x[1])
        return complex(x)

    kind = obj.get("type")
    try:
        if kind == "coherent":
            return CoherentSpec(tuple(cplx(a) for a in obj["amplitudes"]))
        if kind == "vacuum":
            return vacuum(int(obj.get("modes", 1)))
        if kind == "thermal":
            disp = obj.get("displacement")
            if disp is not None and not isinstance(disp, list):
                disp = [disp]
            return thermal(obj["nbar"], None if disp is None else [cplx(a) for a in disp])
        if kind == "squeezed":
            return squeezed(float(obj["r"]), float(obj.get("phi", 0.0)), cplx(obj.get("displacement", 0)))
        if kind == "gaussian":
            return GaussianSpec(tuple(cplx(a) for a in obj["mean"]), np.array(obj["cov"], dtype=float))
        if kind == "fock":
            return FockSpec(int(obj["n"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise UnsupportedState(f"bad {kind} spec: {exc}") from exc
    raise UnsupportedState(f"unknown state type {kind!r}")


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True)
