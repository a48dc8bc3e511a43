"""Kochen-Specker qubit model and the psi-complete reference model.

Ontic states are unit vectors on the sphere. A pure qubit with Bloch axis
``a`` has epistemic density ``(1/pi) H(a.l) a.l``; mixtures of preparations
map to the same mixtures of densities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .quantcore import (
    BlochVector,
    DensityMatrix,
    InvalidWeightsError,
    ValidationError,
    as_generator,
    bloch_from_density,
    fidelity_pure,
)

MIN_SAMPLES = 1000
DEFAULT_SAMPLES = 1_000_000
CHUNK = 1 << 16


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_err: float
    samples: int

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.mean - target) <= k * self.std_err


@dataclass(frozen=True, eq=False)
class OnticPoint:
    """A KS ontic state: a point on the unit sphere."""

    lam: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.lam, dtype=float, copy=True).reshape(-1)
        if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValidationError(f"ontic point must be a unit 3-vector, got {v!r}")
        v.setflags(write=False)
        object.__setattr__(self, "lam", v)


def _unit(v, what: str = "axis") -> np.ndarray:
    if isinstance(v, BlochVector):
        v = v.n
    elif isinstance(v, OnticPoint):
        v = v.lam
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,) or abs(np.linalg.norm(a) - 1.0) > 1e-9:
        raise ValidationError(f"{what} must be a unit 3-vector, got {a!r}")
    return a / np.linalg.norm(a)


@dataclass(frozen=True, eq=False)
class KsEnsemble:
    """Weighted mixture of pure-state KS densities."""

    weights: np.ndarray
    axes: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        axes = np.array([_unit(a) for a in np.asarray(self.axes, dtype=float).reshape(-1, 3)])
        if len(w) != len(axes) or len(w) == 0:
            raise InvalidWeightsError(f"{len(w)} weights for {len(axes)} axes")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise InvalidWeightsError(f"weights {w.tolist()} are not a probability distribution")
        w.setflags(write=False)
        axes.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "axes", axes)

    @classmethod
    def pure(cls, axis: Sequence[float] | BlochVector) -> KsEnsemble:
        return cls(np.ones(1), np.asarray([_unit(axis)]))

    @classmethod
    def from_state(cls, rho: DensityMatrix) -> KsEnsemble:
        if not rho.is_pure():
            raise ValidationError("the KS model assigns densities to pure qubits only")
        return cls.pure(bloch_from_density(rho).n)

    @classmethod
    def mixture(cls, parts: Sequence[KsEnsemble], weights: Sequence[float]) -> KsEnsemble:
        w = np.asarray(weights, dtype=float)
        if len(parts) != len(w):
            raise InvalidWeightsError(f"{len(w)} weights for {len(parts)} ensembles")
        return cls(
            np.concatenate([wi * p.weights for wi, p in zip(w, parts)]),
            np.concatenate([p.axes for p in parts]),
        )

    @property
    def components(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.weights.tolist(), self.axes))

    def rotated(self, rot: np.ndarray) -> KsEnsemble:
        return KsEnsemble(self.weights, self.axes @ np.asarray(rot).T)


def ks_density(ens: KsEnsemble, pt: Sequence[float]) -> float:
    lam = _unit(pt, "ontic point")
    dots = ens.axes @ lam
    # H(0) = 0
    return float(ens.weights @ np.where(dots > 0, dots, 0.0) / np.pi)


def sphere_points(n: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Uniform points on the unit sphere by Marsaglia's disc rejection method."""
    rng = as_generator(seed)
    out = np.empty((n, 3))
    filled = 0
    while filled < n:
        want = int((n - filled) * 1.3) + 16
        u = rng.uniform(-1.0, 1.0, size=(want, 2))
        s = np.einsum("ij,ij->i", u, u)
        u, s = u[s < 1.0], s[s < 1.0]
        take = min(len(s), n - filled)
        u, s = u[:take], s[:take]
        root = 2.0 * np.sqrt(1.0 - s)
        out[filled : filled + take, 0] = u[:, 0] * root
        out[filled : filled + take, 1] = u[:, 1] * root
        out[filled : filled + take, 2] = 1.0 - 2.0 * s
        filled += take
    return out


def _design(ensembles: Sequence[KsEnsemble], priors: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Stack every axis once with a weight column per ensemble (prior and 1/pi folded in)."""
    axes = np.concatenate([e.axes for e in ensembles])
    w = np.zeros((len(axes), len(ensembles)))
    row = 0
    for k, (e, q) in enumerate(zip(ensembles, priors)):
        w[row : row + len(e.weights), k] = q * e.weights / np.pi
        row += len(e.weights)
    return axes, w


def ks_distinctness(
    ensembles: Sequence[KsEnsemble],
    priors: Sequence[float] | None = None,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int | np.random.Generator | None = None,
) -> McEstimate:
    """Monte-Carlo estimate of ``integral max_x q_x mu_x(l) dl`` over the sphere.

    With uniform priors this is the ontological distinctness of the set.
    Samples are processed in chunks whose partial moments are merged, so
    memory stays bounded.
    """
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples={n_samples} is below the minimum {MIN_SAMPLES}")
    if not ensembles:
        raise ValidationError("need at least one ensemble")
    q = np.full(len(ensembles), 1.0 / len(ensembles)) if priors is None else np.asarray(priors, float)
    if len(q) != len(ensembles) or np.any(q < 0) or abs(q.sum() - 1.0) > 1e-9:
        raise InvalidWeightsError(f"priors {list(q)} are not a probability distribution")
    axes, w = _design(ensembles, q)
    kern = _backend.kernels()
    rng = as_generator(seed)
    count, mean, m2 = 0, 0.0, 0.0
    while count < n_samples:
        n = min(CHUNK, n_samples - count)
        s, s2 = kern.ks_max_sums(sphere_points(n, rng), axes, w)
        c_mean = s / n
        c_m2 = max(s2 - s * c_mean, 0.0)
        # Chan et al. pairwise merge
        delta = c_mean - mean
        total = count + n
        mean += delta * n / total
        m2 += c_m2 + delta * delta * count * n / total
        count = total
    var = m2 / (count - 1)
    area = 4.0 * np.pi
    return McEstimate(float(area * mean), float(area * np.sqrt(var / count)), count)


def ks_pair_distinctness_analytic(theta0: float) -> float:
    """Closed-form distinctness of two pure-qubit KS densities at Bloch angle ``theta0``."""
    if not 0.0 <= theta0 <= np.pi:
        raise ValueError(f"theta0 must lie in [0, pi], got {theta0}")
    return 0.5 * (1.0 + np.sin(theta0 / 2.0))


def ks_mixture_pair_distinctness(
    a: KsEnsemble,
    b: KsEnsemble,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int | np.random.Generator | None = None,
) -> McEstimate:
    return ks_distinctness([a, b], [0.5, 0.5], n_samples, seed)


def ks_response(basis_axis: Sequence[float] | BlochVector, pt: Sequence[float]) -> int:
    """Deterministic KS outcome: 1 on the open hemisphere around the axis, else 2."""
    return 1 if float(_unit(basis_axis) @ _unit(pt, "ontic point")) > 0.0 else 2


def fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def ks_measurement_distinctness(axes: Sequence[Sequence[float] | BlochVector], n_grid: int = 20_000) -> float:
    """Ontic distinctness of deterministic KS responses of projective qubit measurements.

    Maximises ``(1/n) sum_k max_y xi(k | l, M^y)`` over a Fibonacci grid of
    ontic points, augmented by the normalised differences of axis pairs (the
    points that separate two hemispheres best).
    """
    a = np.array([_unit(x) for x in axes])
    if len(a) < 2:
        raise ValidationError("need at least two measurement axes")
    pts = [fibonacci_sphere(n_grid)]
    for i in range(len(a)):
        for j in range(len(a)):
            diff = a[i] - a[j]
            if np.linalg.norm(diff) > 1e-12:
                pts.append((diff / np.linalg.norm(diff))[None])
    lam = np.concatenate(pts)
    first = (lam @ a.T) > 0.0  # xi(1 | l, M^y)
    per_point = first.any(axis=1).astype(float) + (~first).any(axis=1).astype(float)
    return float(per_point.max() / len(a))


def psi_complete_distinctness(states: Sequence[DensityMatrix], tol: float = 1e-9) -> float:
    """Distinctness in the psi-complete model: distinct pure states never share an ontic state.

    Identical states collapse to one ontic state; the result is the number
    of distinct states over ``n``.
    """
    if not states:
        raise ValidationError("need at least one state")
    if any(not s.is_pure() for s in states):
        raise ValidationError("the psi-complete model is defined here for pure states only")
    groups: list[DensityMatrix] = []
    for s in states:
        if not any(fidelity_pure(s, g) >= 1.0 - tol for g in groups):
            groups.append(s)
    return len(groups) / len(states)
