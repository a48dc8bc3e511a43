"""Quantum objects, validation and random sampling.

All objects are immutable after construction: the stored arrays are private
read-only copies. Matrices are ``complex128`` numpy arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TOL_HERM = 1e-9
TOL_TRACE = 1e-9
TOL_PSD = 1e-9

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class ValidationError(ValueError):
    """An object violates one of its defining invariants."""


class DimensionError(ValidationError):
    """Operands have incompatible or unsupported dimensions."""


class InvalidBlochError(ValidationError):
    pass


class InvalidWeightsError(ValidationError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _square(mat: np.ndarray, what: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
        raise DimensionError(f"{what} must be a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValidationError(f"{what} has non-finite entries")
    return mat


def is_hermitian(mat: np.ndarray, tol: float = TOL_HERM) -> bool:
    return bool(np.max(np.abs(mat - mat.conj().T), initial=0.0) <= tol)


def hermitian_part(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)


def min_eigenvalue(mat: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(mat))[0])


def as_generator(seed: int | np.random.Generator | np.random.SeedSequence | None) -> np.random.Generator:
    """Return a PCG64 generator; existing generators are passed through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace operator."""

    mat: np.ndarray

    def __post_init__(self) -> None:
        mat = _square(self.mat, "density matrix")
        if not is_hermitian(mat):
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > TOL_TRACE:
            raise ValidationError(f"density matrix trace is {np.trace(mat).real!r}, expected 1")
        if min_eigenvalue(mat) < -TOL_PSD:
            raise ValidationError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "mat", _frozen(mat))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def purity(self) -> float:
        return float(np.real(np.vdot(self.mat, self.mat)))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(self.purity - 1.0) <= tol

    def evolve(self, unitary: Unitary) -> DensityMatrix:
        if unitary.dim != self.dim:
            raise DimensionError(f"unitary dim {unitary.dim} != state dim {self.dim}")
        u = unitary.mat
        return DensityMatrix(hermitian_part(u @ self.mat @ u.conj().T))

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim}, purity={self.purity:.6g})"


@dataclass(frozen=True, eq=False)
class BlochVector:
    n: np.ndarray

    def __post_init__(self) -> None:
        n = np.array(self.n, dtype=float, copy=True).reshape(-1)
        if n.shape != (3,) or not np.all(np.isfinite(n)):
            raise InvalidBlochError(f"Bloch vector must be a finite real 3-vector, got {self.n!r}")
        if np.linalg.norm(n) > 1.0 + 1e-9:
            raise InvalidBlochError(f"Bloch vector norm {np.linalg.norm(n):.12g} exceeds 1")
        n.setflags(write=False)
        object.__setattr__(self, "n", n)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.n))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(self.norm - 1.0) <= tol


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive operators summing to the identity; ``effects[k]`` is outcome ``k``."""

    effects: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        effects = [_square(e, "POVM effect") for e in self.effects]
        if not effects:
            raise ValidationError("a POVM needs at least one effect")
        dim = effects[0].shape[0]
        if any(e.shape != (dim, dim) for e in effects):
            raise DimensionError("POVM effects have different dimensions")
        for k, e in enumerate(effects):
            if not is_hermitian(e):
                raise ValidationError(f"POVM effect {k} is not Hermitian")
            if min_eigenvalue(e) < -TOL_PSD:
                raise ValidationError(f"POVM effect {k} is not positive semidefinite")
        if np.max(np.abs(sum(effects) - np.eye(dim))) > TOL_TRACE:
            raise ValidationError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", tuple(_frozen(e) for e in effects))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)

    def probabilities(self, rho: DensityMatrix) -> np.ndarray:
        if rho.dim != self.dim:
            raise DimensionError(f"state dim {rho.dim} != POVM dim {self.dim}")
        return np.array([np.real(np.vdot(e, rho.mat)) for e in self.effects])

    def __repr__(self) -> str:
        return f"Povm(dim={self.dim}, outcomes={self.n_outcomes})"


@dataclass(frozen=True, eq=False)
class Unitary:
    mat: np.ndarray

    def __post_init__(self) -> None:
        mat = _square(self.mat, "unitary")
        if np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))) > TOL_HERM:
            raise ValidationError("matrix is not unitary")
        object.__setattr__(self, "mat", _frozen(mat))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __matmul__(self, other: Unitary) -> Unitary:
        return Unitary(self.mat @ other.mat)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """States with prior probabilities; priors default to uniform."""

    states: tuple[DensityMatrix, ...]
    priors: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        states = tuple(self.states)
        if not states:
            raise ValidationError("an ensemble needs at least one state")
        if any(s.dim != states[0].dim for s in states):
            raise DimensionError("ensemble states have different dimensions")
        priors = tuple(float(q) for q in self.priors) or (1.0 / len(states),) * len(states)
        if len(priors) != len(states):
            raise InvalidWeightsError(f"{len(priors)} priors for {len(states)} states")
        if min(priors) < 0 or abs(sum(priors) - 1.0) > TOL_TRACE:
            raise InvalidWeightsError(f"priors {priors} are not a probability distribution")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "priors", priors)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def __len__(self) -> int:
        return len(self.states)

    def weighted(self) -> np.ndarray:
        """Stack of prior-weighted density matrices, shape ``(n, d, d)``."""
        return np.array([q * s.mat for q, s in zip(self.priors, self.states)])


def density_from_bloch(n: BlochVector | Sequence[float]) -> DensityMatrix:
    if not isinstance(n, BlochVector):
        n = BlochVector(np.asarray(n, dtype=float))
    mat = 0.5 * (np.eye(2) + sum(c * p for c, p in zip(n.n, PAULIS)))
    return DensityMatrix(mat)


def bloch_matrices(n: np.ndarray) -> np.ndarray:
    """Unvalidated ``(I + n.sigma)/2`` for a stack of Bloch vectors, shape ``(P, 2, 2)``."""
    n = np.asarray(n, dtype=float).reshape(-1, 3)
    return 0.5 * (np.eye(2)[None] + np.einsum("pi,ijk->pjk", n, np.array(PAULIS)))


def bloch_from_density(rho: DensityMatrix) -> BlochVector:
    if rho.dim != 2:
        raise DimensionError(f"Bloch vectors exist for qubits only, got dim {rho.dim}")
    n = [float(np.real(np.vdot(p, rho.mat))) for p in PAULIS]
    norm = np.linalg.norm(n)
    if norm > 1.0:
        # numerical overshoot on pure states
        n = list(np.asarray(n) / norm)
    return BlochVector(np.array(n))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    # fixed operand order makes the result bit-for-bit symmetric
    if a.mat.tobytes() > b.mat.tobytes():
        a, b = b, a
    eig = np.linalg.eigvalsh(hermitian_part(a.mat - b.mat))
    return float(min(1.0, 0.5 * np.sum(np.abs(eig))))


def fidelity_pure(a: DensityMatrix, b: DensityMatrix) -> float:
    """|<a|b>|^2 for pure states, computed as Tr(ab)."""
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(np.real(np.vdot(a.mat, b.mat)))


def pure_state(vec: Sequence[complex]) -> DensityMatrix:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def haar_pure(dim: int, seed: int | np.random.Generator | None = None) -> DensityMatrix:
    """Haar-random pure state as a rank-one projector."""
    if dim < 2:
        raise DimensionError(f"dim must be >= 2, got {dim}")
    rng = as_generator(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def hs_mixed(dim: int, seed: int | np.random.Generator | None = None) -> DensityMatrix:
    """Mixed state from the Hilbert-Schmidt measure, G G^dagger / Tr(G G^dagger)."""
    if dim < 2:
        raise DimensionError(f"dim must be >= 2, got {dim}")
    rng = as_generator(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    w = g @ g.conj().T
    return DensityMatrix(hermitian_part(w / np.trace(w).real))


def haar_unitary(dim: int, seed: int | np.random.Generator | None = None) -> Unitary:
    rng = as_generator(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return Unitary(q * (d / np.abs(d)))


def rotation_xz(theta: float) -> Unitary:
    """Qubit unitary turning Bloch vectors by ``theta`` from +x towards +z."""
    if not np.isfinite(theta):
        raise ValidationError(f"rotation angle must be finite, got {theta!r}")
    # exp(+i theta sigma_y / 2)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return Unitary(np.array([[c, s], [-s, c]], dtype=complex))


def convex_mix(states: Sequence[DensityMatrix], weights: Sequence[float]) -> DensityMatrix:
    if len(states) != len(weights) or not states:
        raise InvalidWeightsError(f"{len(weights)} weights for {len(states)} states")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > TOL_TRACE:
        raise InvalidWeightsError(f"weights {list(weights)} are not a probability distribution")
    if any(s.dim != states[0].dim for s in states):
        raise DimensionError("cannot mix states of different dimensions")
    return DensityMatrix(sum(wi * s.mat for wi, s in zip(w, states)))


def qubit_projective(axis: Sequence[float]) -> Povm:
    """Two-outcome projective qubit measurement; outcome 0 is the +axis projector."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    plus = density_from_bloch(n).mat
    return Povm((plus, np.eye(2) - plus))


# --- JSON files -------------------------------------------------------------

def _encode_matrix(mat: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(mat).reshape(-1)]


def _decode_matrix(raw: object, dim: int) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape == (dim * dim, 2):
        arr = arr.reshape(dim, dim, 2)
    if arr.shape != (dim, dim, 2):
        raise DimensionError(f"matrix entries have shape {arr.shape}, expected {dim}x{dim} [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def matrices_to_json(matrices: Iterable[np.ndarray], key: str = "states") -> dict:
    mats = [np.asarray(m) for m in matrices]
    return {"dim": int(mats[0].shape[0]), key: [_encode_matrix(m) for m in mats]}


def _load_json(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _matrices_from_doc(doc: dict, key: str) -> list[np.ndarray]:
    try:
        dim = int(doc["dim"])
        raw = doc[key]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"missing field {exc} in {key!r} document") from None
    return [_decode_matrix(m, dim) for m in raw]


def states_from_json(doc: dict) -> list[DensityMatrix]:
    return [DensityMatrix(m) for m in _matrices_from_doc(doc, "states")]


def ensemble_from_json(doc: dict) -> Ensemble:
    return Ensemble(tuple(states_from_json(doc)), tuple(doc.get("priors", ())))


def povm_from_json(doc: dict) -> Povm:
    return Povm(tuple(_matrices_from_doc(doc, "effects")))


def unitaries_from_json(doc: dict) -> list[Unitary]:
    return [Unitary(m) for m in _matrices_from_doc(doc, "unitaries")]


def load_states(path: str | Path) -> list[DensityMatrix]:
    return states_from_json(_load_json(path))


def load_ensemble(path: str | Path) -> Ensemble:
    return ensemble_from_json(_load_json(path))


def load_povm(path: str | Path) -> Povm:
    return povm_from_json(_load_json(path))


def save_states(states: Sequence[DensityMatrix], path: str | Path, priors: Sequence[float] | None = None) -> None:
    doc = matrices_to_json([s.mat for s in states])
    if priors is not None:
        doc["priors"] = [float(q) for q in priors]
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")
