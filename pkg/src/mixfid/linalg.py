"""Dense Hermitian linear algebra for density matrices.

Functions here take plain numpy arrays (anything ``np.asarray`` accepts,
including :class:`DensityMatrix`) and most of them broadcast over leading
batch axes, so ``rho`` may have shape ``(d, d)`` or ``(n, d, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BadExponent,
    BadTrace,
    ConvergenceFailure,
    DimMismatch,
    NegativeEigenvalue,
    NotHermitian,
    NotSquare,
    NumericalError,
    ValidationError,
)

DEFAULT_TOL = 1e-10
# eigenvalues at or below this are treated as exact zeros by matrix functions
SUPPORT_TOL = 1e-12


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a complex ndarray with at least two dimensions."""
    m = np.asarray(a, dtype=complex)
    if m.ndim < 2:
        raise NotSquare(f"expected a matrix, got shape {m.shape}")
    return m


def _check_square(m: np.ndarray) -> None:
    if m.shape[-1] != m.shape[-2]:
        raise NotSquare(f"matrix is not square: shape {m.shape}")


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a) -> np.ndarray:
    m = as_matrix(a)
    return 0.5 * (m + dagger(m))


def real_scalar(x, tol: float = DEFAULT_TOL):
    """Take the real part of ``x`` after checking that nothing went wrong.

    Raises :class:`NumericalError` if ``x`` contains NaN or an imaginary part
    larger than ``tol``; a silently dropped imaginary part usually means a
    non-Hermitian intermediate.
    """
    x = np.asarray(x)
    if np.iscomplexobj(x):
        if np.any(np.abs(x.imag) > tol):
            raise NumericalError(f"imaginary part {np.max(np.abs(x.imag)):.3e} exceeds {tol:g}")
        x = x.real
    if np.any(np.isnan(x)):
        raise NumericalError("NaN in a real-valued result")
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix.

    Construct through :func:`validate_density`; the stored array is
    read-only. Instances convert to ndarrays, so every function in the
    package accepts them wherever an array is expected.
    """

    matrix: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        return hs_inner(self.matrix, self.matrix)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim}, purity={self.purity:.6g})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and bool(np.all(self.matrix == other.matrix))

    __hash__ = None


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex, copy=True)
    m.setflags(write=False)
    return m


def validate_density(m, tol: float = DEFAULT_TOL) -> DensityMatrix:
    """Check that ``m`` is a density matrix and return it as one.

    The matrix is symmetrized; eigenvalues in ``[-tol, 0)`` are clamped to
    zero and a trace within ``tol`` of one is renormalized. Larger defects
    raise the matching :class:`ValidationError` subclass.
    """
    if isinstance(m, DensityMatrix):
        return m
    a = as_matrix(m)
    if a.ndim != 2:
        raise NotSquare(f"expected a single matrix, got shape {a.shape}")
    _check_square(a)
    asym = float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0
    if asym > tol:
        raise NotHermitian(f"max |M - M^dagger| = {asym:.3e} > {tol:g}")
    h = hermitian_part(a)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    if w[0] < -tol:
        raise NegativeEigenvalue(f"smallest eigenvalue {w[0]:.3e} < -{tol:g}")
    tr = float(np.sum(w))
    if abs(tr - 1.0) > tol:
        raise BadTrace(f"trace {tr:.12g} differs from 1 by more than {tol:g}")
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        h = (v * w) @ dagger(v)
        h = hermitian_part(h)
    h = h / np.trace(h).real
    return DensityMatrix(_frozen(h))


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        norm = float(np.vdot(amp, amp).real)
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"state norm^2 = {norm:.15g}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        amp = np.asarray(amplitudes, dtype=complex).ravel()
        return cls(amp / np.linalg.norm(amp))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> DensityMatrix:
        a = self.amplitudes
        return DensityMatrix(_frozen(np.outer(a, a.conj())))


@dataclass(frozen=True)
class HermitianEigensystem:
    """Eigenvalues in descending order and the matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def eig_hermitian(h, tol: float = DEFAULT_TOL) -> HermitianEigensystem:
    a = as_matrix(h)
    _check_square(a)
    asym = float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if asym > tol * scale:
        raise NotHermitian(f"max |H - H^dagger| = {asym:.3e}")
    try:
        w, v = np.linalg.eigh(hermitian_part(a))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return HermitianEigensystem(w[..., ::-1].copy(), v[..., ::-1].copy())


def spectrum(rho, zero_tol: float = SUPPORT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues (tiny ones set to exactly zero) and eigenvectors.

    Works on stacks of matrices.
    """
    h = hermitian_part(rho)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    w = np.where(w > zero_tol, w, 0.0)
    return w, v


def eigen_power(w: np.ndarray, s) -> np.ndarray:
    """Elementwise ``w**s`` with ``0**s = 0`` for every ``s``, including 0."""
    s = np.asarray(s, dtype=float)
    pos = w > 0
    safe = np.where(pos, w, 1.0)
    return np.where(pos, safe ** s, 0.0)


def matrix_power(rho, s: float, zero_tol: float = SUPPORT_TOL) -> np.ndarray:
    """Fractional power of a positive semidefinite matrix, ``0 <= s <= 1``.

    ``rho**0`` is the projector onto the support of ``rho``.
    """
    if not 0.0 <= s <= 1.0:
        raise BadExponent(f"exponent {s} outside [0, 1]")
    w, v = spectrum(rho, zero_tol)
    return (v * eigen_power(w, s)[..., None, :]) @ dagger(v)


def sqrt_psd(rho, zero_tol: float = SUPPORT_TOL) -> np.ndarray:
    w, v = spectrum(rho, zero_tol)
    return (v * np.sqrt(w)[..., None, :]) @ dagger(v)


def hs_inner(a, b):
    """``tr(A B)`` for Hermitian ``A`` and ``B``, returned as a real."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[-2:] != b.shape[-2:]:
        raise DimMismatch(f"shapes {a.shape} and {b.shape}")
    return real_scalar(np.einsum("...ij,...ji->...", a, b), tol=1e-12 * max(1.0, a.shape[-1]))


def purity(rho):
    return hs_inner(rho, rho)


def schatten_norm(a, p: float) -> float:
    """Schatten p-norm from the singular values; ``p = inf`` gives the operator norm."""
    if not p >= 1:
        raise BadExponent(f"Schatten norm needs p >= 1, got {p}")
    sv = np.linalg.svd(as_matrix(a), compute_uv=False)
    if np.isinf(p):
        return sv.max(axis=-1)
    out = np.sum(sv**p, axis=-1) ** (1.0 / p)
    return float(out) if np.ndim(out) == 0 else out


def tensor(*ops) -> np.ndarray:
    if not ops:
        raise ValueError("tensor() needs at least one operand")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int]):
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` gives the subsystem dimensions in tensor order. The kept
    subsystems stay in their original order. A :class:`DensityMatrix`
    input yields a :class:`DensityMatrix`.
    """
    m = as_matrix(rho)
    dims = [int(x) for x in dims]
    n = len(dims)
    if int(np.prod(dims)) != m.shape[-1] or m.ndim != 2:
        raise DimMismatch(f"subsystem dims {dims} do not match shape {m.shape}")
    keep = sorted({int(k) for k in keep})
    if any(k < 0 or k >= n for k in keep):
        raise DimMismatch(f"keep indices {keep} out of range for {n} subsystems")
    t = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # contract each traced axis with its partner, highest index first so positions stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    out = t.reshape(dk, dk)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(_frozen(hermitian_part(out)))
    return out


def basis_projector(i: int, d: int) -> np.ndarray:
    p = np.zeros((d, d), dtype=complex)
    p[i, i] = 1.0
    return p


def diag_state(probs) -> np.ndarray:
    return np.diag(np.asarray(probs, dtype=complex))


def dephase(rho, basis=None) -> np.ndarray:
    """Complete dephasing: a rank-1 projective measurement with the outcome forgotten.

    ``basis`` is a unitary whose columns are the measurement vectors; the
    computational basis by default.
    """
    m = as_matrix(rho)
    if basis is None:
        return np.diag(np.diagonal(m, axis1=-2, axis2=-1)) if m.ndim == 2 else _batched_diag(m)
    u = np.asarray(basis, dtype=complex)
    inner = dagger(u) @ m @ u
    diag = np.diagonal(inner, axis1=-2, axis2=-1)
    return (u * diag[..., None, :]) @ dagger(u)


def _batched_diag(m: np.ndarray) -> np.ndarray:
    d = m.shape[-1]
    out = np.zeros_like(m)
    idx = np.arange(d)
    out[..., idx, idx] = m[..., idx, idx]
    return out


def trace_distance(rho, sigma) -> float:
    diff = hermitian_part(as_matrix(rho) - as_matrix(sigma))
    w = np.linalg.eigvalsh(diff)
    out = 0.5 * np.sum(np.abs(w), axis=-1)
    return float(out) if np.ndim(out) == 0 else out
