"""Random and parametric state families, and the measure scatter studies.

Randomness comes from numpy's counter-based Philox generator. A stream is
identified by ``(seed, index)``: :func:`stream` derives an independent
generator for each index, so pair ``i`` of a study is the same whether the
study runs in one process or is split across workers.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .errors import BadDim, OutOfRange
from .io import fmt_number
from .linalg import DensityMatrix, dagger, validate_density
from .measures import MeasureId, evaluate

SeedLike = Union[int, np.random.Generator, None]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def stream(seed: int, *index: int) -> np.random.Generator:
    """Independent Philox generator for the sub-stream ``index`` of ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.Generator(np.random.Philox())
    return stream(seed)


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Entries with independent standard-normal real and imaginary parts."""
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _check_dim(d: int) -> None:
    if int(d) != d or d < 2:
        raise BadDim(f"dimension must be an integer >= 2, got {d}")


def ginibre_batch(d: int, n: int, rng: SeedLike, rank: Optional[int] = None) -> np.ndarray:
    """``n`` random density matrices ``g g^dagger / tr(g g^dagger)`` as an ``(n, d, d)`` stack.

    ``g`` is ``d x rank`` (square by default); a smaller rank gives
    rank-deficient states.
    """
    _check_dim(d)
    k = d if rank is None else int(rank)
    if not 1 <= k <= d:
        raise BadDim(f"rank must be in [1, {d}], got {rank}")
    g = complex_gaussian(as_generator(rng), (n, d, k))
    m = g @ dagger(g)
    m = 0.5 * (m + dagger(m))
    return m / np.trace(m, axis1=-2, axis2=-1).real[:, None, None]


def ginibre_density(d: int, seed: SeedLike, rank: Optional[int] = None) -> DensityMatrix:
    return validate_density(ginibre_batch(d, 1, seed, rank)[0])


def haar_unitary_batch(d: int, n: int, rng: SeedLike) -> np.ndarray:
    """Haar-random unitaries from the QR decomposition of Ginibre matrices."""
    z = complex_gaussian(as_generator(rng), (n, d, d)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r, axis1=-2, axis2=-1)
    ph = ph / np.abs(ph)
    return q * ph[..., None, :]


def haar_unitary(d: int, rng: SeedLike) -> np.ndarray:
    return haar_unitary_batch(d, 1, rng)[0]


def random_isometry(d_in: int, d_out: int, rng: SeedLike) -> np.ndarray:
    """A ``d_out x d_in`` isometry (``V^dagger V = 1``) from a QR factorization."""
    if d_out < d_in:
        raise BadDim("isometry needs d_out >= d_in")
    z = complex_gaussian(as_generator(rng), (d_out, d_in))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def pure_state_batch(d: int, n: int, rng: SeedLike) -> np.ndarray:
    """Projectors onto Haar-random pure states."""
    v = complex_gaussian(as_generator(rng), (n, d))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    return v[:, :, None] * v[:, None, :].conj()


def random_pair_batch(d: int, n: int, rng: SeedLike, pure_fraction: float = 0.0, rank_mix: bool = False):
    """Stacks ``(rho, sigma)`` of random states for property sampling.

    A fraction of the states is replaced by pure states and, with
    ``rank_mix``, the rest draw a random Ginibre rank. Extreme purities are
    where fidelity inequalities tend to be tight, so sampling them matters.
    """
    rng = as_generator(rng)
    out = []
    for _ in range(2):
        if rank_mix:
            ranks = rng.integers(1, d + 1, size=n)
            states = np.empty((n, d, d), dtype=complex)
            for k in range(1, d + 1):
                sel = ranks == k
                if sel.any():
                    states[sel] = ginibre_batch(d, int(sel.sum()), rng, rank=k)
        else:
            states = ginibre_batch(d, n, rng)
        if pure_fraction > 0:
            sel = rng.random(n) < pure_fraction
            if sel.any():
                states[sel] = pure_state_batch(d, int(sel.sum()), rng)
        out.append(states)
    return out[0], out[1]


def bloch_state(r) -> np.ndarray:
    """Qubit state ``(1 + r . pauli) / 2`` for a Bloch vector ``r``."""
    x, y, z = r
    return 0.5 * (np.eye(2) + x * PAULI_X + y * PAULI_Y + z * PAULI_Z)


def interpolated_qubit_pair(r: float) -> tuple[DensityMatrix, DensityMatrix]:
    """``rho = (1 + r X)/2`` and ``sigma = (1 + r Z)/2``.

    Both have purity ``(1 + r**2)/2``; ``r = 0`` gives two maximally mixed
    states and ``r = 1`` two pure states with overlap one half.
    """
    if not 0.0 <= r <= 1.0:
        raise OutOfRange(f"r must lie in [0, 1], got {r}")
    return validate_density(bloch_state((r, 0, 0))), validate_density(bloch_state((0, 0, r)))


def diagonal_qutrit_pair(p: float) -> tuple[DensityMatrix, DensityMatrix]:
    """``rho = (1-p) P1 + p P2``, ``sigma = (1-p) P0 + p P2`` with ``Pi`` basis projectors."""
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"p must lie in [0, 1], got {p}")
    rho = np.diag([0.0, 1.0 - p, p]).astype(complex)
    sigma = np.diag([1.0 - p, 0.0, p]).astype(complex)
    return validate_density(rho), validate_density(sigma)


@dataclass
class ScatterRecord:
    dim: int
    pair_index: int
    values: dict = field(default_factory=dict)
    max_purity: float = 1.0
    seed: int = 0


def _pair_states(d: int, seed: int, start: int, stop: int, rank: Optional[int]):
    rhos = np.empty((stop - start, d, d), dtype=complex)
    sigmas = np.empty_like(rhos)
    for k, i in enumerate(range(start, stop)):
        rng = stream(seed, i)
        rhos[k] = ginibre_batch(d, 1, rng, rank)[0]
        sigmas[k] = ginibre_batch(d, 1, rng, rank)[0]
    return rhos, sigmas


def _scatter_block(args) -> list[ScatterRecord]:
    d, seed, start, stop, labels, rank = args
    measures = [MeasureId.parse(m) for m in labels]
    rhos, sigmas = _pair_states(d, seed, start, stop, rank)
    cols = {m.label: np.atleast_1d(evaluate(m, rhos, sigmas)) for m in measures}
    pr = np.einsum("nij,nji->n", rhos, rhos).real
    ps = np.einsum("nij,nji->n", sigmas, sigmas).real
    maxp = np.maximum(pr, ps)
    return [
        ScatterRecord(d, start + k, {lab: float(col[k]) for lab, col in cols.items()}, float(maxp[k]), seed)
        for k in range(stop - start)
    ]


SCATTER_BLOCK = 512


def scatter_study(
    d: int,
    n_pairs: int,
    measures: Iterable = ("F1", "F2"),
    seed: int = 0,
    rank: Optional[int] = None,
    workers: int = 1,
) -> list[ScatterRecord]:
    """Evaluate ``measures`` on ``n_pairs`` independent Ginibre pairs.

    Pair ``i`` is drawn from stream ``(seed, i)``, so results do not depend
    on ``workers``. Records come back ordered by pair index.
    """
    _check_dim(d)
    labels = [MeasureId.parse(m).label if isinstance(m, str) else m.label for m in measures]
    blocks = [
        (d, seed, lo, min(lo + SCATTER_BLOCK, n_pairs), labels, rank) for lo in range(0, n_pairs, SCATTER_BLOCK)
    ]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_scatter_block, blocks))
    else:
        parts = [_scatter_block(b) for b in blocks]
    return [rec for part in parts for rec in part]


def write_scatter_csv(records: Sequence[ScatterRecord], fh: TextIO) -> None:
    """Write records as ``dim,pair,seed,max_purity,<measure columns>``."""
    labels = list(records[0].values) if records else []
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["dim", "pair", "seed", "max_purity"] + labels)
    for rec in records:
        writer.writerow(
            [rec.dim, rec.pair_index, rec.seed, fmt_number(rec.max_purity)] + [fmt_number(rec.values[k]) for k in labels]
        )
