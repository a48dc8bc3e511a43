"""Checks of the bounded-ontological-distinctness propositions.

Each check computes an operational left-hand side, the bound that any model
obeying BOD must respect, and the ontological distinctness needed to
explain the observed value.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .discrim import discriminate, helstrom_pair, pairwise_avg
from .quantcore import (
    DensityMatrix,
    DimensionError,
    Ensemble,
    Unitary,
    ValidationError,
    as_generator,
    convex_mix,
    density_from_bloch,
    rotation_xz,
)

REPORT_TOL = 1e-9
DEFAULT_PROBE_GRID = (200, 100)


@dataclass(frozen=True)
class PropositionReport:
    """Outcome of one proposition check.

    ``margin = lhs - bound`` is signed; ``violated`` uses ``REPORT_TOL``.
    ``certified`` is False when any inner discrimination failed its
    optimality certificate, in which case ``p`` is only a lower estimate.
    """

    name: str
    lhs: float
    bound: float
    p: float
    violated: bool
    margin: float
    distinctness_lower_bound: float | None
    certified: bool
    inputs_digest: str

    def to_dict(self) -> dict:
        return asdict(self)


def inputs_digest(mats: Iterable[np.ndarray]) -> str:
    """Stable SHA-256 of the input matrices, rounded to 12 decimals."""
    h = hashlib.sha256()
    for m in mats:
        a = np.asarray(m, dtype=complex)
        # adding 0.0 folds -0.0 into 0.0 so the hash does not see the sign bit
        r = np.round(a.real, 12) + 0.0
        i = np.round(a.imag, 12) + 0.0
        h.update(str(a.shape).encode())
        h.update(np.ascontiguousarray(r).tobytes())
        h.update(np.ascontiguousarray(i).tobytes())
    return h.hexdigest()


def _report(name: str, lhs: float, p: float, bound: float, lower: float | None,
            certified: bool, mats: Iterable[np.ndarray]) -> PropositionReport:
    if lower is not None:
        lower = float(min(max(lower, 0.0), 1.0))
    return PropositionReport(
        name=name,
        lhs=float(lhs),
        bound=float(bound),
        p=float(p),
        violated=bool(lhs > bound + REPORT_TOL),
        margin=float(lhs - bound),
        distinctness_lower_bound=lower,
        certified=bool(certified),
        inputs_digest=inputs_digest(mats),
    )


def _same_dim(items: Sequence, n: int, what: str) -> None:
    if len(items) != n:
        raise ValidationError(f"expected {n} {what}, got {len(items)}")
    if any(s.dim != items[0].dim for s in items):
        raise DimensionError(f"{what} have different dimensions")


def check_prop1(states: Sequence[DensityMatrix]) -> PropositionReport:
    """Pairwise average of a triple against ``(1 + p)/2``, p the triple's distinguishability."""
    _same_dim(states, 3, "states")
    res = discriminate(Ensemble(tuple(states)))
    lhs = pairwise_avg(states)
    return _report("prop1", lhs, res.value, 0.5 * (1.0 + res.value), 2.0 * lhs - 1.0,
                   res.certified, (s.mat for s in states))


def _mix(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return convex_mix([a, b], [0.5, 0.5])


def check_prop2(states: Sequence[DensityMatrix]) -> PropositionReport:
    """Pairs of mixtures of a quadruple.

    ``p`` distinguishes ``rho_{1+2}`` from ``rho_{3+4}``; the left-hand side
    averages the two other pairings, whose mixtures must stay within
    ``(1 + p)/2`` under BOD and convexity.
    """
    _same_dim(states, 4, "states")
    r1, r2, r3, r4 = states
    p = helstrom_pair(_mix(r1, r2), _mix(r3, r4)).value
    lhs = 0.5 * (helstrom_pair(_mix(r1, r3), _mix(r2, r4)).value
                 + helstrom_pair(_mix(r1, r4), _mix(r2, r3)).value)
    return _report("prop2", lhs, p, 0.5 * (1.0 + p), 2.0 * lhs - 1.0, True, (s.mat for s in states))


def prop2_closed_form(theta: float) -> tuple[float, float]:
    """``(p, lhs)`` for the quadruple of :func:`quadruple_states` in closed form."""
    c, s = np.cos(theta), np.sin(theta)
    p = 0.5 * (1.0 + np.sqrt(1.0 - c) / (2.0 * np.sqrt(2.0)))
    lhs = 0.5 + (np.sqrt(3.0 + c + 2.0 * s) + np.sqrt(3.0 + c - 2.0 * s)) / (8.0 * np.sqrt(2.0))
    return float(p), float(lhs)


# --- transformations ---------------------------------------------------------

def _sphere_vectors(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Qubit state vectors for Bloch angles; shape ``(P, 2)``."""
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def _pairwise_pure(vecs: np.ndarray, unitaries: np.ndarray) -> np.ndarray:
    """Mean pairwise Helstrom value of ``U_x psi`` for every probe ``psi`` in ``vecs``."""
    out = np.einsum("xij,pj->pxi", unitaries, vecs)
    total = np.zeros(len(vecs))
    for a, b in ((0, 1), (1, 2), (2, 0)):
        ov = np.abs(np.einsum("pi,pi->p", out[:, a].conj(), out[:, b])) ** 2
        gap = 1.0 - ov
        # identical outputs leave ~1e-16 round-off that the square root would magnify
        gap[gap < 1e-14] = 0.0
        total += 0.5 * (1.0 + np.sqrt(np.minimum(gap, 1.0)))
    return total / 3.0


def _transformed_guess(vec: np.ndarray, unitaries: Sequence[Unitary]) -> tuple[float, bool]:
    vec = vec / np.linalg.norm(vec)
    states = []
    for u in unitaries:
        w = u.mat @ vec
        states.append(DensityMatrix(np.outer(w, w.conj())))
    res = discriminate(Ensemble(tuple(states)))
    return res.value, res.certified


def _haar_vectors(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def check_prop3(
    unitaries: Sequence[Unitary],
    probe_grid: tuple[int, int] | int = DEFAULT_PROBE_GRID,
    seed: int | np.random.Generator | None = 0,
) -> PropositionReport:
    """Three transformations probed by pure input states.

    The pairwise average (cheap, closed form for pure outputs) is maximised
    over the full ``(theta, phi)`` probe grid. ``t_O`` needs the n-state
    solver per probe, so it is searched on a grid ten times coarser in each
    direction and then refined locally from the best point. Both maxima are
    polished with Nelder-Mead. For ``d > 2`` probes are Haar-random vectors.
    """
    _same_dim(unitaries, 3, "unitaries")
    if isinstance(probe_grid, int):
        probe_grid = (probe_grid, max(probe_grid // 2, 1))
    n_theta, n_phi = (max(int(v), 2) for v in probe_grid)
    dim = unitaries[0].dim
    umats = np.array([u.mat for u in unitaries])
    certified = True

    def t_guess(vec: np.ndarray) -> float:
        nonlocal certified
        value, ok = _transformed_guess(vec, unitaries)
        certified = certified and ok
        return value

    if dim == 2:
        th = np.linspace(0.0, np.pi, n_theta)
        ph = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
        tt, pp = (g.reshape(-1) for g in np.meshgrid(th, ph, indexing="ij"))
        vals = _pairwise_pure(_sphere_vectors(tt, pp), umats)
        k = int(np.argmax(vals))
        lhs_res = minimize(lambda x: -_pairwise_pure(_sphere_vectors(x[:1], x[1:]), umats)[0],
                           [tt[k], pp[k]], method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-13})
        lhs = max(float(vals[k]), float(-lhs_res.fun))

        ct = np.linspace(0.0, np.pi, max(n_theta // 10, 3))
        cp = np.linspace(0.0, 2.0 * np.pi, max(n_phi // 10, 4), endpoint=False)
        coarse = [(a, b, t_guess(_sphere_vectors(np.array([a]), np.array([b]))[0]))
                  for a in ct for b in cp]
        a0, b0, t_best = max(coarse, key=lambda r: r[2])
        t_res = minimize(lambda x: -t_guess(_sphere_vectors(x[:1], x[1:])[0]),
                         [a0, b0], method="Nelder-Mead",
                         options={"xatol": 1e-8, "fatol": 1e-11, "maxiter": 400})
        t_o = max(t_best, float(-t_res.fun))
    else:
        rng = as_generator(seed)
        vecs = _haar_vectors(dim, n_theta * n_phi, rng)
        lhs = float(_pairwise_pure(vecs, umats).max())
        t_o = max(t_guess(v) for v in _haar_vectors(dim, max(n_theta * n_phi // 100, 20), rng))

    lhs, t_o = min(lhs, 1.0), min(t_o, 1.0)
    return _report("prop3", lhs, t_o, 0.5 * (1.0 + t_o), 2.0 * lhs - 1.0, certified, umats)


# --- standard constructions -------------------------------------------------------

def trine_states() -> list[DensityMatrix]:
    """Three pure qubits with coplanar Bloch vectors 120 degrees apart in the x-y plane."""
    angles = (0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0)
    return [density_from_bloch([np.cos(a), np.sin(a), 0.0]) for a in angles]


def quadruple_states(theta: float) -> list[DensityMatrix]:
    """``n1 = (cos t, sin t, 0)``, ``n2 = -x``, ``n3 = +y``, ``n4 = -y`` for ``t`` in ``[0, pi/2]``."""
    if not 0.0 <= theta <= np.pi / 2:
        raise ValidationError(f"theta must lie in [0, pi/2], got {theta}")
    axes = ([np.cos(theta), np.sin(theta), 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0])
    return [density_from_bloch(a) for a in axes]


def trine_unitaries() -> list[Unitary]:
    """Identity and rotations by 2pi/3 and 4pi/3 in the x-z plane of the Bloch sphere."""
    return [rotation_xz(0.0), rotation_xz(2.0 * np.pi / 3.0), rotation_xz(4.0 * np.pi / 3.0)]
