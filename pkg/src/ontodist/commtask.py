"""Prepare-and-measure communication tasks.

A task is a coefficient tensor ``c(x, y, z) >= 0`` scored as
``sum c(x,y,z) p(z|x,y)``. The sender's encoding is restricted either by
how distinguishable the prepared messages may be, or by how much they may
leak about a function ``f(x)`` of the input. Quantum protocols are
evaluated directly; classical d-level protocols are optimised by
alternating between the decoder (closed form) and the encoder (a linear
program).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .bodcheck import PropositionReport, _report
from .discrim import discriminate
from .quantcore import (
    DensityMatrix,
    DimensionError,
    Ensemble,
    Povm,
    ValidationError,
    _decode_matrix,
    _encode_matrix,
    convex_mix,
    density_from_bloch,
    qubit_projective,
)
from .simplex import LpError, linprog_max

STOCH_TOL = 1e-9
BOUND_SLACK = 1e-6
IMPROVE_TOL = 1e-9


class InfeasibleConstraintError(ValidationError):
    """No encoding can meet the constraint (e.g. ``p < 1/nx``)."""


class BoundExceededError(RuntimeError):
    """An optimiser result beat a proven bound; indicates a bug, never expected."""


@dataclass(frozen=True)
class Distinguishability:
    """Messages may be at most ``p``-distinguishable under a uniform prior."""

    p: float

    def __post_init__(self) -> None:
        if not -1e-12 <= self.p <= 1.0 + 1e-12:
            raise ValidationError(f"p must lie in [0, 1], got {self.p}")
        # absorb summation round-off at the ends of the range
        object.__setattr__(self, "p", float(min(max(self.p, 0.0), 1.0)))


@dataclass(frozen=True)
class Leakage:
    """Messages may reveal ``f(x)`` with success at most ``1/d_f + epsilon``.

    ``epsilon = 0`` (no leakage at all) is accepted as well as the open
    interval up to ``(d_f - 1)/d_f``.
    """

    f: tuple[int, ...]
    epsilon: float

    def __post_init__(self) -> None:
        f = tuple(int(v) for v in self.f)
        object.__setattr__(self, "f", f)
        if not f or min(f) < 0:
            raise ValidationError(f"f must map inputs to non-negative labels, got {f}")
        top = (self.d_f - 1) / self.d_f
        if not 0.0 <= self.epsilon <= top + 1e-12:
            raise ValidationError(f"epsilon must lie in [0, {top:g}], got {self.epsilon}")

    @property
    def d_f(self) -> int:
        return len(set(self.f))

    def conditional(self) -> np.ndarray:
        """``p(x | w)`` as a ``(d_f, nx)`` array for uniform inputs."""
        labels = sorted(set(self.f))
        f = np.array(self.f)
        rows = np.array([(f == w).astype(float) for w in labels])
        return rows / rows.sum(axis=1, keepdims=True)


Constraint = Union[Distinguishability, Leakage]


@dataclass(frozen=True, eq=False)
class CommTask:
    nx: int
    ny: int
    nz: int
    coeffs: np.ndarray
    constraint: Constraint
    name: str = ""

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=float, copy=True)
        if c.shape != (self.nx, self.ny, self.nz):
            raise DimensionError(f"coeffs shape {c.shape} != ({self.nx}, {self.ny}, {self.nz})")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValidationError("coefficients must be finite and non-negative")
        if isinstance(self.constraint, Leakage) and len(self.constraint.f) != self.nx:
            raise DimensionError(f"f has {len(self.constraint.f)} entries for nx={self.nx}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def with_constraint(self, constraint: Constraint) -> CommTask:
        return CommTask(self.nx, self.ny, self.nz, self.coeffs, constraint, self.name)


@dataclass(frozen=True, eq=False)
class ClassicalStrategy:
    """``enc[x, w] = p(w|x)`` and ``dec[w, y, z] = p(z|w, y)``."""

    enc: np.ndarray
    dec: np.ndarray

    def __post_init__(self) -> None:
        enc = np.array(self.enc, dtype=float, copy=True)
        dec = np.array(self.dec, dtype=float, copy=True)
        if enc.ndim != 2 or dec.ndim != 3 or enc.shape[1] != dec.shape[0]:
            raise DimensionError(f"enc {enc.shape} and dec {dec.shape} do not share a message alphabet")
        for what, a, axis in (("enc", enc, 1), ("dec", dec, 2)):
            if np.any(a < -STOCH_TOL) or np.max(np.abs(a.sum(axis=axis) - 1.0)) > STOCH_TOL:
                raise ValidationError(f"{what} is not a stochastic map")
        enc.setflags(write=False)
        dec.setflags(write=False)
        object.__setattr__(self, "enc", enc)
        object.__setattr__(self, "dec", dec)

    @property
    def d(self) -> int:
        return self.enc.shape[1]


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    states: tuple[DensityMatrix, ...]
    povms: tuple[Povm, ...]

    def __post_init__(self) -> None:
        states, povms = tuple(self.states), tuple(self.povms)
        if not states or not povms:
            raise ValidationError("a quantum strategy needs states and measurements")
        dim = states[0].dim
        if any(s.dim != dim for s in states) or any(m.dim != dim for m in povms):
            raise DimensionError("states and measurements have different dimensions")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "povms", povms)


# --- evaluation ----------------------------------------------------------------

def _check_shapes(task: CommTask, nx: int, ny: int, nz: int) -> None:
    if (nx, ny, nz) != (task.nx, task.ny, task.nz):
        raise DimensionError(f"strategy shape {(nx, ny, nz)} != task shape {(task.nx, task.ny, task.nz)}")


def quantum_probabilities(strat: QuantumStrategy) -> np.ndarray:
    """``p(z | x, y)`` as an ``(nx, ny, nz)`` array."""
    nz = strat.povms[0].n_outcomes
    if any(m.n_outcomes != nz for m in strat.povms):
        raise ValidationError("measurements have different outcome counts")
    effects = np.array([m.effects for m in strat.povms])
    rhos = np.array([s.mat for s in strat.states])
    return np.einsum("yzab,xba->xyz", effects, rhos).real


def eval_quantum(task: CommTask, strat: QuantumStrategy) -> float:
    probs = quantum_probabilities(strat)
    _check_shapes(task, *probs.shape)
    return float(np.sum(task.coeffs * probs))


def eval_classical(task: CommTask, strat: ClassicalStrategy) -> float:
    _check_shapes(task, strat.enc.shape[0], strat.dec.shape[1], strat.dec.shape[2])
    return float(np.einsum("xyz,xw,wyz->", task.coeffs, strat.enc, strat.dec))


def constraint_value_classical(strat: ClassicalStrategy, constraint: Constraint) -> float:
    enc = strat.enc
    if isinstance(constraint, Distinguishability):
        return float(enc.max(axis=0).sum() / enc.shape[0])
    if len(constraint.f) != enc.shape[0]:
        raise DimensionError(f"f has {len(constraint.f)} entries for nx={enc.shape[0]}")
    mixed = constraint.conditional() @ enc  # (d_f, d)
    return float(mixed.max(axis=0).sum() / constraint.d_f)


def _quantum_constraint(states: Sequence[DensityMatrix], constraint: Constraint) -> tuple[float, bool]:
    if isinstance(constraint, Distinguishability):
        res = discriminate(Ensemble(tuple(states)))
        return res.value, res.certified
    if len(constraint.f) != len(states):
        raise DimensionError(f"f has {len(constraint.f)} entries for {len(states)} states")
    cond = constraint.conditional()
    mixtures = tuple(convex_mix(states, row) for row in cond)
    if len(mixtures) == 1:
        return 1.0, True
    res = discriminate(Ensemble(mixtures))
    return res.value, res.certified


def constraint_value_quantum(strat: QuantumStrategy, constraint: Constraint) -> float:
    """Distinguishability of the states, or of the ``f``-class mixtures for leakage."""
    return _quantum_constraint(strat.states, constraint)[0]


# --- built-in tasks -----------------------------------------------------------------

def task1(p: float = 2.0 / 3.0) -> CommTask:
    """Three inputs, two binary questions; scored on five winning cells."""
    c = np.zeros((3, 2, 2))
    for x, y, z in ((0, 0, 0), (1, 0, 0), (2, 0, 1), (0, 1, 0), (1, 1, 1)):
        c[x, y, z] = 1.0
    return CommTask(3, 2, 2, c, Distinguishability(p), "task1")


def task2(p: float = 2.0 / 3.0) -> CommTask:
    """Pairwise identification: question ``y`` names a pair and the receiver outputs ``x``."""
    c = np.zeros((3, 3, 3))
    for y, pair in enumerate(((0, 1), (1, 2), (2, 0))):
        for x in pair:
            c[x, y, x] = 1.0 / 6.0
    return CommTask(3, 3, 3, c, Distinguishability(p), "task2")


# input index -> (a1, a2)
PARITY_INPUTS = ((0, 0), (1, 1), (0, 1), (1, 0))


def parity_task(epsilon: float = 0.0) -> CommTask:
    """Two-bit multiplexing: output bit ``a_y`` while leaking little about ``a1 xor a2``."""
    c = np.zeros((4, 2, 2))
    for x, bits in enumerate(PARITY_INPUTS):
        for y in range(2):
            c[x, y, bits[y]] = 1.0 / 8.0
    f = tuple(a ^ b for a, b in PARITY_INPUTS)
    return CommTask(4, 2, 2, c, Leakage(f, epsilon), "parity")


def _same_coeffs(a: CommTask, b: CommTask) -> bool:
    return a.coeffs.shape == b.coeffs.shape and np.array_equal(a.coeffs, b.coeffs)


def theory_bound(task: CommTask) -> float | None:
    """Proven BOD bound for the three built-in tasks; ``None`` for any other task."""
    con = task.constraint
    if isinstance(con, Distinguishability):
        if _same_coeffs(task, task1()):
            return 2.0 + 3.0 * con.p
        if _same_coeffs(task, task2()):
            return 0.5 * (1.0 + con.p)
    elif _same_coeffs(task, parity_task()) and con.f == parity_task().constraint.f:
        return 0.75 + 0.5 * con.epsilon
    return None


def fig4_protocol() -> QuantumStrategy:
    """Qubit protocol for task1 with 2/3-distinguishable states and value ``3 + sqrt 2``."""
    n1 = np.array([1.0, 0.0, 0.0])
    n2 = np.array([0.0, 1.0, 0.0])
    n3 = -(n1 + n2) / np.sqrt(2.0)
    s1 = (n1 + n2) / np.sqrt(2.0)
    s2 = (n1 - n2) / np.sqrt(2.0)
    states = tuple(density_from_bloch(n) for n in (n1, n2, n3))
    return QuantumStrategy(states, (qubit_projective(s1), qubit_projective(s2)))


def parity_protocol() -> QuantumStrategy:
    """Zero-leakage qubit protocol for the parity task with value ``(2 + sqrt 2)/4``."""
    axes = ([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0])
    states = tuple(density_from_bloch(a) for a in axes)
    r = 1.0 / np.sqrt(2.0)
    return QuantumStrategy(states, (qubit_projective([r, r, 0.0]), qubit_projective([r, -r, 0.0])))


def check_prop4(strat: QuantumStrategy) -> PropositionReport:
    """Task1 value of a quantum protocol against ``2 + 3p``."""
    if len(strat.states) != 3 or len(strat.povms) != 2 or any(m.n_outcomes != 2 for m in strat.povms):
        raise ValidationError("Prop. 4 needs three states and two binary measurements")
    p, certified = _quantum_constraint(strat.states, Distinguishability(1.0))
    lhs = eval_quantum(task1(), strat)
    mats = [s.mat for s in strat.states] + [e for m in strat.povms for e in m.effects]
    return _report("prop4", lhs, p, 2.0 + 3.0 * p, (lhs - 2.0) / 3.0, certified, mats)


# --- classical optimisation --------------------------------------------------------

def _best_decoder(task: CommTask, enc: np.ndarray) -> np.ndarray:
    score = np.einsum("xyz,xw->wyz", task.coeffs, enc)
    dec = np.zeros_like(score)
    w, y = np.meshgrid(np.arange(score.shape[0]), np.arange(score.shape[1]), indexing="ij")
    dec[w, y, score.argmax(axis=2)] = 1.0
    return dec


def _encoder_lp(task: CommTask, dec: np.ndarray) -> np.ndarray:
    """Optimal encoder for a fixed decoder.

    Variables are ``enc[x, w]`` followed by one auxiliary ``t[w]`` per
    message; ``t[w]`` dominates the per-message maximum that enters the
    constraint, which keeps the program linear.
    """
    nx, d = task.nx, dec.shape[0]
    gain = np.einsum("xyz,wyz->xw", task.coeffs, dec)
    n_enc = nx * d
    c = np.concatenate([gain.reshape(-1), np.zeros(d)])
    a_eq = np.zeros((nx, n_enc + d))
    for x in range(nx):
        a_eq[x, x * d : (x + 1) * d] = 1.0
    b_eq = np.ones(nx)

    con = task.constraint
    if isinstance(con, Distinguishability):
        weights, budget = np.eye(nx), nx * con.p
    else:
        weights, budget = con.conditional(), 1.0 + con.d_f * con.epsilon
    rows = []
    for row in weights:
        for w in range(d):
            r = np.zeros(n_enc + d)
            r[np.arange(nx) * d + w] = row
            r[n_enc + w] = -1.0
            rows.append(r)
    total = np.zeros(n_enc + d)
    total[n_enc:] = 1.0
    rows.append(total)
    a_ub = np.array(rows)
    b_ub = np.zeros(len(rows))
    b_ub[-1] = budget
    res = linprog_max(c, a_ub, b_ub, a_eq, b_eq)
    enc = np.clip(res.x[:n_enc].reshape(nx, d), 0.0, None)
    return enc / enc.sum(axis=1, keepdims=True)


def _check_feasible(task: CommTask) -> None:
    con = task.constraint
    if isinstance(con, Distinguishability) and con.p < 1.0 / task.nx - 1e-12:
        raise InfeasibleConstraintError(f"p={con.p} is below 1/nx = {1.0 / task.nx:g}; no encoding satisfies it")


def _one_restart(task: CommTask, d: int, rng: np.random.Generator, max_rounds: int) -> tuple[ClassicalStrategy, float]:
    dec = np.zeros((d, task.ny, task.nz))
    w, y = np.meshgrid(np.arange(d), np.arange(task.ny), indexing="ij")
    dec[w, y, rng.integers(0, task.nz, size=(d, task.ny))] = 1.0
    value = -np.inf
    enc = None
    for _ in range(max_rounds):
        new_enc = _encoder_lp(task, dec)
        new_dec = _best_decoder(task, new_enc)
        new_value = float(np.einsum("xyz,xw,wyz->", task.coeffs, new_enc, new_dec))
        if enc is not None and new_value < value + IMPROVE_TOL:
            break
        enc, dec, value = new_enc, new_dec, new_value
    return ClassicalStrategy(enc, dec), value


def classical_optimize(
    task: CommTask,
    d: int | None = None,
    restarts: int = 20,
    seed: int | np.random.SeedSequence | None = 0,
    threads: int = 1,
    max_rounds: int = 200,
) -> tuple[ClassicalStrategy, float]:
    """Best classical d-level strategy found by alternating optimisation.

    Each restart draws a random deterministic decoder, then alternates an
    exact encoder LP with the exact (argmax) decoder until the value stops
    improving. Restart seeds are spawned from ``seed`` so results do not
    depend on ``threads``. For the built-in tasks the result is checked against
    the proven bound and :class:`BoundExceededError` is raised if it beats it.
    """
    d = task.nx * task.nz if d is None else int(d)
    if d < 1:
        raise ValidationError(f"message alphabet size must be >= 1, got {d}")
    if restarts < 1:
        raise ValidationError(f"restarts must be >= 1, got {restarts}")
    _check_feasible(task)
    seeds = (seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)).spawn(restarts)

    def run(ss: np.random.SeedSequence) -> tuple[ClassicalStrategy, float]:
        return _one_restart(task, d, np.random.default_rng(ss), max_rounds)

    try:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(run, seeds))
        else:
            results = [run(ss) for ss in seeds]
    except LpError as exc:
        raise InfeasibleConstraintError(f"encoder program failed: {exc}") from exc
    # first maximum wins, so the choice is independent of scheduling
    best = max(range(len(results)), key=lambda i: (results[i][1], -i))
    strat, value = results[best]
    bound = theory_bound(task)
    if bound is not None and value > bound + BOUND_SLACK:
        raise BoundExceededError(f"classical value {value} exceeds proven bound {bound}")
    return strat, value


# --- JSON ------------------------------------------------------------------------------

def constraint_to_json(con: Constraint) -> dict:
    if isinstance(con, Distinguishability):
        return {"kind": "distinguishability", "p": con.p}
    return {"kind": "leakage", "f": list(con.f), "epsilon": con.epsilon}


def constraint_from_json(doc: dict) -> Constraint:
    kind = doc.get("kind")
    if kind == "distinguishability":
        return Distinguishability(float(doc["p"]))
    if kind == "leakage":
        return Leakage(tuple(doc["f"]), float(doc["epsilon"]))
    raise ValidationError(f"unknown constraint kind {kind!r}")


def task_to_json(task: CommTask) -> dict:
    entries = [[int(x), int(y), int(z), float(task.coeffs[x, y, z])] for x, y, z in zip(*np.nonzero(task.coeffs))]
    doc = {"nx": task.nx, "ny": task.ny, "nz": task.nz, "coeffs": entries,
           "constraint": constraint_to_json(task.constraint)}
    if task.name:
        doc["name"] = task.name
    return doc


def task_from_json(doc: dict) -> CommTask:
    try:
        nx, ny, nz = int(doc["nx"]), int(doc["ny"]), int(doc["nz"])
        c = np.zeros((nx, ny, nz))
        for x, y, z, v in doc["coeffs"]:
            if not (0 <= x < nx and 0 <= y < ny and 0 <= z < nz):
                raise ValidationError(f"coefficient index {(x, y, z)} out of range")
            c[int(x), int(y), int(z)] += float(v)
        return CommTask(nx, ny, nz, c, constraint_from_json(doc["constraint"]), str(doc.get("name", "")))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed task document: {exc}") from None


def strategy_to_json(strat: ClassicalStrategy | QuantumStrategy) -> dict:
    if isinstance(strat, ClassicalStrategy):
        return {"kind": "classical", "d": strat.d, "enc": strat.enc.tolist(), "dec": strat.dec.tolist()}
    return {
        "kind": "quantum",
        "dim": strat.states[0].dim,
        "states": [_encode_matrix(s.mat) for s in strat.states],
        "povms": [[_encode_matrix(e) for e in m.effects] for m in strat.povms],
    }


def strategy_from_json(doc: dict) -> ClassicalStrategy | QuantumStrategy:
    try:
        kind = doc["kind"]
        if kind == "classical":
            return ClassicalStrategy(np.array(doc["enc"], float), np.array(doc["dec"], float))
        if kind == "quantum":
            dim = int(doc["dim"])
            states = tuple(DensityMatrix(_decode_matrix(m, dim)) for m in doc["states"])
            povms = tuple(Povm(tuple(_decode_matrix(e, dim) for e in effs)) for effs in doc["povms"])
            return QuantumStrategy(states, povms)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed strategy document: {exc}") from None
    raise ValidationError(f"unknown strategy kind {doc.get('kind')!r}")


def load_task(path: str | Path) -> CommTask:
    return task_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def load_strategy(path: str | Path) -> ClassicalStrategy | QuantumStrategy:
    return strategy_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
