"""Communication scenarios: noisy alphabets, teleportation benchmarks, process states.

A sender picks letter ``j`` with probability ``p_j`` and transmits the state
``rho_j``. With probability ``epsilon`` the channel replaces it by an error
state ``rho_0``, so the receiver holds ``sigma_j = epsilon rho_0 + (1 - epsilon) rho_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidAlphabet, InvalidProcess, OutOfRange, ValidationError
from .io import density_from_json, matrix_from_json, read_json
from .linalg import DensityMatrix, dagger, validate_density
from .measures import MeasureId, evaluate

ORTHO_TOL = 1e-10

# teleportation thresholds
CLASSICAL_QUBIT_TELEPORTATION = 2.0 / 3.0
NO_CLONING_QUBIT = 5.0 / 6.0
CLASSICAL_COHERENT_TELEPORTATION = 0.5
NO_CLONING_COHERENT = 2.0 / 3.0


def _as_density(x) -> DensityMatrix:
    return x if isinstance(x, DensityMatrix) else validate_density(x)


@dataclass(frozen=True)
class Alphabet:
    """Letters ``rho_j`` sent with probabilities ``p_j`` through an erasure-like channel.

    Args:
        probabilities: letter probabilities, summing to 1.
        signal_states: the states ``rho_j``.
        error_state: the state ``rho_0`` substituted on error.
        epsilon: error probability in ``[0, 1]``.
        orthogonal: if set, all letters and the error state must have
            pairwise orthogonal supports; this is checked.
    """

    probabilities: tuple
    signal_states: tuple
    error_state: DensityMatrix
    epsilon: float
    orthogonal: bool = False

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidAlphabet("need a non-empty probability vector")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise InvalidAlphabet(f"probabilities must be nonnegative and sum to 1, got sum {p.sum()}")
        if len(self.signal_states) != p.size:
            raise InvalidAlphabet(f"{p.size} probabilities for {len(self.signal_states)} signal states")
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidAlphabet(f"epsilon {self.epsilon} outside [0, 1]")
        try:
            signals = tuple(_as_density(s) for s in self.signal_states)
            err = _as_density(self.error_state)
        except ValidationError as exc:
            raise InvalidAlphabet(f"invalid state in alphabet: {exc}") from exc
        dims = {s.dim for s in signals} | {err.dim}
        if len(dims) != 1:
            raise InvalidAlphabet(f"states of different dimensions: {sorted(dims)}")
        object.__setattr__(self, "probabilities", tuple(float(x) for x in p))
        object.__setattr__(self, "signal_states", signals)
        object.__setattr__(self, "error_state", err)
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if self.orthogonal:
            states = signals + (err,)
            for i in range(len(states)):
                for j in range(i + 1, len(states)):
                    ov = np.linalg.norm(states[i].matrix @ states[j].matrix)
                    if ov > ORTHO_TOL:
                        raise InvalidAlphabet(f"states {i} and {j} are not orthogonal (|rho_i rho_j| = {ov:.3g})")

    @property
    def dim(self) -> int:
        return self.error_state.dim

    def average_signal(self) -> np.ndarray:
        return sum(p * s.matrix for p, s in zip(self.probabilities, self.signal_states))

    @classmethod
    def from_json(cls, obj: dict) -> "Alphabet":
        try:
            return cls(
                probabilities=tuple(obj["probabilities"]),
                signal_states=tuple(density_from_json(s) for s in obj["signals"]),
                error_state=density_from_json(obj["error_state"]),
                epsilon=float(obj["epsilon"]),
                orthogonal=bool(obj.get("orthogonal", False)),
            )
        except KeyError as exc:
            raise InvalidAlphabet(f"alphabet JSON lacks {exc}") from exc


def load_alphabet(path) -> Alphabet:
    return Alphabet.from_json(read_json(path))


def channel_outputs(a: Alphabet) -> tuple:
    """Per-letter outputs ``sigma_j`` and their mixture ``sigma``."""
    eps = a.epsilon
    rho0 = a.error_state.matrix
    outs = [validate_density(eps * rho0 + (1 - eps) * s.matrix) for s in a.signal_states]
    mixture = validate_density(eps * rho0 + (1 - eps) * a.average_signal())
    return outs, mixture


def average_fidelity(measure, a: Alphabet) -> float:
    """``sum_j p_j F(rho_j, sigma_j)``."""
    m = MeasureId.parse(measure) if isinstance(measure, str) else measure
    outs, _ = channel_outputs(a)
    return float(sum(p * float(evaluate(m, s, o)) for p, s, o in zip(a.probabilities, a.signal_states, outs)))


def mixed_vs_average(measure, a: Alphabet) -> tuple:
    """Average fidelity, fidelity of the averaged states, and their difference."""
    m = MeasureId.parse(measure) if isinstance(measure, str) else measure
    avg = average_fidelity(m, a)
    _, sigma = channel_outputs(a)
    mixed = float(evaluate(m, validate_density(a.average_signal()), sigma))
    return avg, mixed, avg - mixed


def tele_max_fidelity(f_max: float, d: int) -> float:
    """Best average teleportation fidelity ``(F_max d + 1) / (d + 1)`` for singlet fraction ``F_max``."""
    if not 0.0 <= f_max <= 1.0:
        raise OutOfRange(f"singlet fraction {f_max} outside [0, 1]")
    if int(d) != d or d < 2:
        raise OutOfRange(f"dimension must be an integer >= 2, got {d}")
    return (f_max * d + 1.0) / (d + 1.0)


@dataclass(frozen=True)
class ProcessMatrix:
    """Process matrix ``P`` of a channel on dimension ``d``: PSD, ``d**2 x d**2``, trace ``d``."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        p = np.array(self.entries, dtype=complex)
        d = int(self.dim)
        if p.shape != (d * d, d * d):
            raise InvalidProcess(f"process matrix for d={d} must be {d * d}x{d * d}, got {p.shape}")
        try:
            validate_density(p / d)
        except ValidationError as exc:
            raise InvalidProcess(f"P/d is not a density matrix: {exc}") from exc
        p.setflags(write=False)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "entries", p)

    @classmethod
    def from_json(cls, obj: dict) -> "ProcessMatrix":
        m = matrix_from_json(obj)
        d = int(round(np.sqrt(m.shape[0])))
        return cls(d, m)


def process_matrix_from_kraus(kraus: Sequence) -> ProcessMatrix:
    """``P = sum_k vec(K_k) vec(K_k)^dagger`` with row-major ``vec``.

    For a trace-preserving channel ``tr P = d``.
    """
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    if not ks:
        raise InvalidProcess("no Kraus operators")
    d = ks[0].shape[0]
    if any(k.shape != (d, d) for k in ks):
        raise InvalidProcess("Kraus operators must all be d x d")
    tp = sum(dagger(k) @ k for k in ks)
    if not np.allclose(tp, np.eye(d), atol=1e-10):
        raise InvalidProcess("Kraus operators are not trace preserving")
    p = sum(np.outer(k.reshape(-1), k.reshape(-1).conj()) for k in ks)
    return ProcessMatrix(d, p)


def choi_state(p: ProcessMatrix) -> DensityMatrix:
    """The normalized process state ``P / d``, a density matrix on ``d**2`` levels."""
    if not isinstance(p, ProcessMatrix):
        raise InvalidProcess("expected a ProcessMatrix")
    return validate_density(p.entries / p.dim)
