"""Batch campaigns over random preparations, the quadruple angle sweep, and persistence."""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import bisect

from .bodcheck import PropositionReport, check_prop1, check_prop2, quadruple_states
from .quantcore import DensityMatrix, ValidationError, haar_pure, hs_mixed

KINDS = ("triplet-pure", "triplet-mixed", "quadruplet-pure")
CSV_HEADER = ("index", "p", "lhs", "bound", "violated", "margin")

SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["config", "count", "certified", "excluded", "violation_fraction", "std_err", "timings"],
    "properties": {
        "config": {
            "type": "object",
            "required": ["kind", "dim", "count", "seed"],
            "properties": {
                "kind": {"enum": list(KINDS)},
                "dim": {"type": "integer", "minimum": 2, "maximum": 5},
                "count": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "out_path": {"type": ["string", "null"]},
                "threads": {"type": ["integer", "null"]},
            },
        },
        "count": {"type": "integer", "minimum": 0},
        "certified": {"type": "integer", "minimum": 0},
        "excluded": {"type": "integer", "minimum": 0},
        "excluded_indices": {"type": "array", "items": {"type": "integer"}},
        "violation_fraction": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "std_err": {"type": ["number", "null"], "minimum": 0},
        "timings": {
            "type": "object",
            "required": ["wall_seconds"],
            "properties": {"wall_seconds": {"type": "number", "minimum": 0}},
        },
    },
}


@dataclass(frozen=True)
class CampaignConfig:
    kind: str
    dim: int = 2
    count: int = 10_000
    seed: int = 0
    out_path: str | None = None
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown campaign kind {self.kind!r}; expected one of {KINDS}")
        if not 2 <= self.dim <= 5:
            raise ValidationError(f"dim must lie in 2..5, got {self.dim}")
        if self.count < 1:
            raise ValidationError(f"count must be >= 1, got {self.count}")


@dataclass(frozen=True)
class CampaignRecord:
    index: int
    p: float
    lhs: float
    bound: float
    violated: bool
    margin: float
    certified: bool = True

    @classmethod
    def from_report(cls, index: int, rep: PropositionReport) -> CampaignRecord:
        return cls(index, rep.p, rep.lhs, rep.bound, rep.violated, rep.margin, rep.certified)


@dataclass
class CampaignResult:
    config: CampaignConfig
    records: list[CampaignRecord]
    violation_fraction: float | None
    std_err: float | None
    excluded: list[int]
    wall_seconds: float = 0.0

    @property
    def scatter(self) -> np.ndarray:
        """``(p, lhs)`` pairs of the certified records, shape ``(n, 2)``."""
        return np.array([(r.p, r.lhs) for r in self.records if r.certified]).reshape(-1, 2)

    def summary(self) -> dict:
        certified = len(self.records) - len(self.excluded)
        return {
            "config": asdict(self.config),
            "count": len(self.records),
            "certified": certified,
            "excluded": len(self.excluded),
            "excluded_indices": list(self.excluded),
            "violation_fraction": self.violation_fraction,
            "std_err": self.std_err,
            "timings": {"wall_seconds": self.wall_seconds},
        }


def _sampler(kind: str) -> Callable[[int, np.random.Generator], DensityMatrix]:
    return hs_mixed if kind == "triplet-mixed" else haar_pure


def _run(cfg: CampaignConfig, n_states: int, check: Callable[[list[DensityMatrix]], PropositionReport]) -> CampaignResult:
    start = time.perf_counter()
    sample = _sampler(cfg.kind)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.count)

    def one(i: int) -> CampaignRecord:
        rng = np.random.default_rng(seeds[i])
        return CampaignRecord.from_report(i, check([sample(cfg.dim, rng) for _ in range(n_states)]))

    def shard(lo: int, hi: int) -> list[CampaignRecord]:
        return [one(i) for i in range(lo, hi)]

    threads = cfg.threads or os.cpu_count() or 1
    if threads > 1 and cfg.count > 1:
        edges = np.linspace(0, cfg.count, min(threads, cfg.count) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(shard, edges[:-1], edges[1:]))
        records = [r for part in parts for r in part]
    else:
        records = shard(0, cfg.count)

    ok = [r for r in records if r.certified]
    excluded = [r.index for r in records if not r.certified]
    if ok:
        f = sum(r.violated for r in ok) / len(ok)
        se = float(np.sqrt(f * (1.0 - f) / len(ok)))
    else:
        f, se = None, None
    result = CampaignResult(cfg, records, f, se, excluded, time.perf_counter() - start)
    if cfg.out_path:
        write_csv(records, cfg.out_path)
    return result


def run_triplet_campaign(cfg: CampaignConfig) -> CampaignResult:
    """Fraction of random triples violating the pairwise bound.

    Each record uses its own generator spawned from ``cfg.seed``, so results
    are identical for any thread count. Records whose inner solve was not
    certified are kept but excluded from the fraction.
    """
    if not cfg.kind.startswith("triplet"):
        raise ValidationError(f"run_triplet_campaign needs a triplet kind, got {cfg.kind!r}")
    return _run(cfg, 3, check_prop1)


def run_quadruplet_campaign(cfg: CampaignConfig) -> CampaignResult:
    """Random pure quadruples checked against the pairs-of-mixtures bound."""
    if cfg.kind != "quadruplet-pure":
        raise ValidationError(f"run_quadruplet_campaign needs kind 'quadruplet-pure', got {cfg.kind!r}")
    return _run(cfg, 4, check_prop2)


def run_campaign(cfg: CampaignConfig) -> CampaignResult:
    return run_quadruplet_campaign(cfg) if cfg.kind == "quadruplet-pure" else run_triplet_campaign(cfg)


# --- angle sweep -------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    theta: float
    p: float
    lhs: float
    bound: float
    margin: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    endpoint: float


def _margin(theta: float) -> float:
    return check_prop2(quadruple_states(theta)).margin


def violation_endpoint(xtol: float = 1e-10) -> float:
    """Angle where the quadruple family stops violating, located by bisection."""
    return float(bisect(_margin, 0.0, np.pi / 2, xtol=xtol))


def theta_sweep(n_points: int = 50) -> SweepResult:
    if n_points < 2:
        raise ValidationError(f"n_points must be >= 2, got {n_points}")
    rows = []
    for theta in np.linspace(0.0, np.pi / 2, n_points):
        rep = check_prop2(quadruple_states(float(theta)))
        rows.append(SweepRow(float(theta), rep.p, rep.lhs, rep.bound, rep.margin))
    return SweepResult(tuple(rows), violation_endpoint())


# --- persistence ----------------------------------------------------------------------

def write_csv(records: Sequence[CampaignRecord], path: str | Path) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for r in records:
                w.writerow([r.index, f"{r.p:.17g}", f"{r.lhs:.17g}", f"{r.bound:.17g}",
                            "true" if r.violated else "false", f"{r.margin:.17g}"])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc.strerror}") from exc


def read_csv(path: str | Path) -> list[CampaignRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValidationError(f"{path}: unexpected CSV header {reader.fieldnames}")
        return [
            CampaignRecord(int(row["index"]), float(row["p"]), float(row["lhs"]), float(row["bound"]),
                           row["violated"] == "true", float(row["margin"]))
            for row in reader
        ]


def write_json(summary: dict, path: str | Path) -> None:
    try:
        Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write JSON to {path}: {exc.strerror}") from exc
