"""Minimum-error state discrimination and measurement distinguishability."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import _backend
from .quantcore import (
    DensityMatrix,
    DimensionError,
    Ensemble,
    InvalidWeightsError,
    Povm,
    ValidationError,
    bloch_from_density,
    bloch_matrices,
    hermitian_part,
)

CERT_TOL = 1e-7
TOL = 1e-10
MAX_ITER = 10_000
REG_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class DiscriminationResult:
    """Optimal success probability with the measurement that attains it.

    ``dual_gap`` is the largest violation of the optimality conditions
    ``Y - q_x rho_x >= 0``; ``value + dim * dual_gap`` is a rigorous upper
    bound on the true optimum.
    """

    value: float
    povm: Povm
    iterations: int
    certified: bool
    dual_gap: float
    diagnostics: dict = field(default_factory=dict)

    def upper_bound(self) -> float:
        return self.value + self.povm.dim * self.dual_gap

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "dual_gap": self.dual_gap,
            "certified": self.certified,
            "iterations": self.iterations,
            "povm": [
                [[float(z.real), float(z.imag)] for z in e.reshape(-1)] for e in self.povm.effects
            ],
            "diagnostics": dict(self.diagnostics),
        }


def _check_priors(qa: float, qb: float) -> None:
    if qa < 0 or qb < 0 or abs(qa + qb - 1.0) > 1e-9:
        raise InvalidWeightsError(f"priors ({qa}, {qb}) must be non-negative and sum to 1")


def helstrom_pair(a: DensityMatrix, b: DensityMatrix, qa: float = 0.5, qb: float = 0.5) -> DiscriminationResult:
    """Optimal two-state discrimination, ``(1 + ||qa a - qb b||_1) / 2``.

    Outcome 0 projects onto the non-negative eigenspace of ``qa a - qb b``.
    """
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    _check_priors(qa, qb)
    w, v = np.linalg.eigh(hermitian_part(qa * a.mat - qb * b.mat))
    value = 0.5 * (1.0 + float(np.sum(np.abs(w))))
    # ties (zero eigenvalues) go to outcome 0
    first = w >= -1e-14
    m0 = (v * first) @ v.conj().T
    m1 = (v * ~first) @ v.conj().T
    return DiscriminationResult(min(value, 1.0), Povm((m0, m1)), 0, True, 0.0, {"method": "helstrom"})


def _pretty_good_measurement(r: np.ndarray, eps: float) -> tuple[np.ndarray, bool]:
    kern_mod = _backend.kernels(r.shape[1])
    si, kern = kern_mod.inv_sqrt(r.sum(axis=0), eps)
    m = hermitian_part_stack(si[None] @ r @ si[None])
    singular = bool(np.trace(kern).real > 0.5)
    if singular:
        m[0] += kern
    return m, singular


def hermitian_part_stack(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def discriminate(
    ens: Ensemble,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    cert_tol: float = CERT_TOL,
) -> DiscriminationResult:
    """Optimal minimum-error discrimination of an ensemble by fixed-point iteration.

    Starts from the pretty-good measurement and iterates
    ``M_x <- G^-1/2 R_x M_x R_x G^-1/2`` (``R_x = q_x rho_x``,
    ``G = sum_y R_y M_y R_y``) until the value settles and the optimality
    certificate holds to ``cert_tol``. Results that run out of iterations are
    returned with ``certified=False``.
    """
    if len(ens) < 2:
        raise ValidationError("discrimination needs at least two states")
    r = ens.weighted()
    m0, singular = _pretty_good_measurement(r, REG_EPS)
    kern_mod = _backend.kernels(ens.dim)
    m, value, iters, gap, converged, regularized, max_dec = kern_mod.fixed_point(
        r, m0, tol, cert_tol, max_iter, REG_EPS
    )
    diagnostics = {
        "backend": "compiled" if kern_mod is not _backend._fallback else "python",
        "regularized": bool(singular or regularized),
        "max_decrease": float(max_dec),
        "converged": bool(converged),
    }
    m, repaired = _project_to_povm(m)
    if repaired:
        # certify what is returned, not the pre-repair iterate
        value = float(np.einsum("xij,xji->", r, m).real)
        gap = kern_mod.certificate(r, m)
    diagnostics["renormalized"] = repaired
    povm = Povm(tuple(m))
    certified = bool(converged and gap <= cert_tol)
    return DiscriminationResult(float(value), povm, int(iters), certified, float(gap), diagnostics)


def _project_to_povm(m: np.ndarray) -> tuple[np.ndarray, bool]:
    """Restore completeness lost to round-off.

    Small deviations go into the first effect. Larger ones, which arise when
    ``G`` is badly conditioned, are removed by the congruence
    ``M_x <- S^-1/2 M_x S^-1/2`` with ``S = sum M_x``, which keeps every
    effect positive. Returns the effects and whether the congruence was used.
    """
    m = hermitian_part_stack(m)
    dim = m.shape[1]
    err = np.eye(dim) - m.sum(axis=0)
    if np.max(np.abs(err)) <= 1e-12:
        m = m.copy()
        m[0] += err
        return m, False
    w, v = np.linalg.eigh(m.sum(axis=0))
    if w.min() <= 0.5:
        return m, False  # far from complete: let the validator report it
    s = (v / np.sqrt(w)) @ v.conj().T
    m = hermitian_part_stack(s[None] @ m @ s[None])
    m[0] += np.eye(dim) - m.sum(axis=0)
    return m, True


def success_probability(ens: Ensemble, povm: Povm) -> float:
    """Success probability of a fixed measurement, outcome ``k`` guessing state ``k``."""
    if povm.dim != ens.dim:
        raise DimensionError(f"state dim {ens.dim} != POVM dim {povm.dim}")
    return float(sum(q * np.real(np.vdot(povm.effects[k], s.mat)) if k < povm.n_outcomes else 0.0
                     for k, (q, s) in enumerate(zip(ens.priors, ens.states))))


def pairwise_avg(states: Sequence[DensityMatrix]) -> float:
    """Mean uniform-prior Helstrom probability over the pairs (1,2), (2,3), (3,1)."""
    if len(states) != 3:
        raise ValidationError(f"pairwise average is defined for three states, got {len(states)}")
    s1, s2, s3 = states
    return (helstrom_pair(s1, s2).value + helstrom_pair(s2, s3).value + helstrom_pair(s3, s1).value) / 3.0


# --- measurement distinguishability ---------------------------------------

def _effect_stack(povms: Sequence[Povm]) -> np.ndarray:
    """Effects as an array ``(n_povms, n_outcomes, d, d)``, padded with zeros."""
    k = max(p.n_outcomes for p in povms)
    d = povms[0].dim
    out = np.zeros((len(povms), k, d, d), dtype=complex)
    for y, p in enumerate(povms):
        out[y, : p.n_outcomes] = p.effects
    return out


def _guess_value(effects: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    """(1/n) sum_k max_y Tr(rho M^y_k) for each probe in ``rhos`` (shape (P, d, d))."""
    probs = np.einsum("ykab,pba->pyk", effects, rhos).real
    return probs.max(axis=1).sum(axis=1) / effects.shape[0]


def _default_probes(povms: Sequence[Povm]) -> list[DensityMatrix]:
    probes = []
    for p in povms:
        for e in p.effects:
            w, v = np.linalg.eigh(hermitian_part(e))
            for k in range(len(w)):
                probes.append(DensityMatrix(np.outer(v[:, k], v[:, k].conj())))
    return probes


def _projective_qubit_axis(p: Povm) -> np.ndarray | None:
    if p.dim != 2 or p.n_outcomes != 2:
        return None
    e = p.effects[0]
    if abs(np.trace(e).real - 1.0) > 1e-9 or np.max(np.abs(e @ e - e)) > 1e-9:
        return None
    return bloch_from_density(DensityMatrix(e)).n.copy()


def _plane_basis(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    e1 = a / np.linalg.norm(a)
    rest = b - (b @ e1) * e1
    if np.linalg.norm(rest) < 1e-12:
        helper = np.eye(3)[np.argmin(np.abs(e1))]
        rest = helper - (helper @ e1) * e1
    return e1, rest / np.linalg.norm(rest)


def measurement_distinguishability(
    povms: Sequence[Povm],
    states: Sequence[DensityMatrix] | None = None,
    grid_step: float = 1e-3,
) -> float:
    """Best probe-state guess of which measurement was performed.

    Maximises ``(1/n) sum_k max_y p(k | M^y, P)`` over the candidate probes
    (default: eigenstates of all effects). For a pair of projective qubit
    measurements the probe is also scanned over the plane of their Bloch
    axes and refined by bounded scalar minimisation.
    """
    if len(povms) < 1:
        raise ValidationError("need at least one measurement")
    if any(p.dim != povms[0].dim for p in povms):
        raise DimensionError("measurements have different dimensions")
    probes = list(states) if states else _default_probes(povms)
    if not probes:
        raise ValidationError("candidate probe list is empty")
    if any(s.dim != povms[0].dim for s in probes):
        raise DimensionError("probe states do not match measurement dimension")
    effects = _effect_stack(povms)
    best = float(_guess_value(effects, np.array([s.mat for s in probes])).max())

    axes = [_projective_qubit_axis(p) for p in povms]
    if len(povms) == 2 and all(a is not None for a in axes):
        e1, e2 = _plane_basis(axes[0], axes[1])

        def rho_at(t: np.ndarray) -> np.ndarray:
            return bloch_matrices(np.outer(np.cos(t), e1) + np.outer(np.sin(t), e2))

        grid = np.arange(0.0, 2 * np.pi, grid_step)
        vals = _guess_value(effects, rho_at(grid))
        t0 = grid[int(np.argmax(vals))]
        res = minimize_scalar(
            lambda t: -_guess_value(effects, rho_at(np.array([t])))[0],
            bounds=(t0 - grid_step, t0 + grid_step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, float(vals.max()), float(-res.fun))
    return min(best, 1.0)
