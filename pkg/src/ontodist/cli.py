"""``ontodist`` command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 a numerical result could
not be certified optimal. Machine formats (json, csv) print numbers with 10
significant digits and never include timings, so identical arguments give
byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import bodcheck, commtask, discrim, expharness, ksmodel, quantcore
from .quantcore import ValidationError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit 2, which we reserve
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --- output ---------------------------------------------------------------------

def _round(obj: Any) -> Any:
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.10g}")
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _cell(v: Any, text: bool) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.4f}" if text else f"{float(v):.10g}"
    if v is None:
        return ""
    return str(v)


def _emit(fmt: str, payload: dict, rows: list[dict] | None = None) -> str:
    """Render a result; ``rows`` (if given) is the tabular part for csv/text."""
    if fmt == "json":
        return json.dumps(_round(payload), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        table = rows if rows is not None else [{k: v for k, v in payload.items() if not isinstance(v, (dict, list))}]
        buf = io.StringIO()
        if table:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(list(table[0]))
            for row in table:
                w.writerow([_cell(v, False) for v in row.values()])
        return buf.getvalue()
    lines = [f"{k}: {_cell(v, True)}" for k, v in payload.items() if not isinstance(v, (dict, list))]
    if rows:
        lines.append("  ".join(rows[0]))
        lines.extend("  ".join(_cell(v, True) for v in row.values()) for row in rows)
    return "\n".join(lines) + "\n"


# --- input --------------------------------------------------------------------------

def _read_json(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _default_seed() -> int:
    raw = os.environ.get("ONTODIST_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"ONTODIST_SEED must be an integer, got {raw!r}") from None


def _ks_ensembles(doc: dict) -> tuple[list[ksmodel.KsEnsemble], list[float] | None]:
    try:
        ens = [ksmodel.KsEnsemble(np.array(e.get("weights", [1.0] * len(e["axes"])), float),
                                  np.array(e["axes"], float)) for e in doc["ensembles"]]
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValidationError(f"malformed ensembles document: {exc}") from None
    priors = doc.get("priors")
    return ens, (None if priors is None else [float(q) for q in priors])


# --- commands -----------------------------------------------------------------------

def _report_out(args, rep: bodcheck.PropositionReport) -> tuple[str, int]:
    code = 0 if rep.certified else 2
    return _emit(args.format, rep.to_dict()), code


def cmd_discriminate(args) -> tuple[str, int]:
    ens = quantcore.ensemble_from_json(_read_json(args.ensemble))
    res = discrim.discriminate(ens, tol=args.tol, cert_tol=args.cert_tol, max_iter=args.max_iter)
    payload = res.to_json()
    payload["diagnostics"] = {k: v for k, v in payload["diagnostics"].items() if k != "backend"}
    if args.format != "json":
        payload = {k: v for k, v in payload.items() if k not in ("povm", "diagnostics")}
    return _emit(args.format, payload), 0 if res.certified else 2


def cmd_prop1(args) -> tuple[str, int]:
    states = bodcheck.trine_states() if args.states == "trine" else quantcore.states_from_json(_read_json(args.states))
    return _report_out(args, bodcheck.check_prop1(states))


def cmd_prop2(args) -> tuple[str, int]:
    if args.states is not None and args.theta is not None:
        raise UsageError("give either --theta or a states file, not both")
    if args.states is not None:
        states = quantcore.states_from_json(_read_json(args.states))
    else:
        states = bodcheck.quadruple_states(0.0 if args.theta is None else args.theta)
    return _report_out(args, bodcheck.check_prop2(states))


def cmd_prop3(args) -> tuple[str, int]:
    if args.unitaries:
        us = quantcore.unitaries_from_json(_read_json(args.unitaries))
    else:
        us = bodcheck.trine_unitaries()
    return _report_out(args, bodcheck.check_prop3(us, (args.grid_theta, args.grid_phi), seed=args.seed))


def cmd_prop4(args) -> tuple[str, int]:
    if args.strategy:
        strat = commtask.strategy_from_json(_read_json(args.strategy))
        if not isinstance(strat, commtask.QuantumStrategy):
            raise UsageError("prop4 needs a quantum strategy file")
    else:
        strat = commtask.fig4_protocol()
    return _report_out(args, commtask.check_prop4(strat))


def cmd_ks(args) -> tuple[str, int]:
    if args.ensembles:
        ens, priors = _ks_ensembles(_read_json(args.ensembles))
    else:
        ens = [ksmodel.KsEnsemble.from_state(s) for s in bodcheck.trine_states()]
        priors = None
    est = ksmodel.ks_distinctness(ens, priors, args.samples, args.seed)
    return _emit(args.format, {"mean": est.mean, "std_err": est.std_err, "samples": est.samples}), 0


_BUILTIN_TASKS = {"task1": commtask.task1, "task2": commtask.task2}


def cmd_classical(args) -> tuple[str, int]:
    if args.task:
        task = commtask.task_from_json(_read_json(args.task))
    elif args.builtin == "parity":
        task = commtask.parity_task(args.epsilon)
    else:
        task = _BUILTIN_TASKS[args.builtin](args.p)
    strat, value = commtask.classical_optimize(task, args.d, args.restarts, args.seed, threads=args.threads)
    payload = {
        "task": task.name or "custom",
        "d": strat.d,
        "value": value,
        "theory_bound": commtask.theory_bound(task),
        "constraint_value": commtask.constraint_value_classical(strat, task.constraint),
    }
    if args.format == "json":
        payload["strategy"] = commtask.strategy_to_json(strat)
    return _emit(args.format, payload), 0


def cmd_campaign(args) -> tuple[str, int]:
    cfg = expharness.CampaignConfig(args.kind, args.dim, args.count, args.seed, args.out, args.threads)
    res = expharness.run_campaign(cfg)
    summary = res.summary()
    if args.summary:
        expharness.write_json(summary, args.summary)
    shown = {k: v for k, v in summary.items() if k not in ("timings", "config", "excluded_indices")}
    shown = {"kind": cfg.kind, "dim": cfg.dim, "seed": cfg.seed, **shown}
    rows = [{"index": r.index, "p": r.p, "lhs": r.lhs, "bound": r.bound, "violated": r.violated,
             "margin": r.margin} for r in res.records]
    if args.format == "csv":
        return _emit("csv", shown, rows), 0
    return _emit(args.format, shown), 0


def cmd_sweep(args) -> tuple[str, int]:
    res = expharness.theta_sweep(args.points)
    rows = [{"theta": r.theta, "p": r.p, "lhs": r.lhs, "bound": r.bound, "margin": r.margin} for r in res.rows]
    payload: dict = {"endpoint": res.endpoint}
    if args.format == "json":
        payload["rows"] = rows
        return _emit("json", payload), 0
    return _emit(args.format, payload, rows), 0


# --- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("text", "json", "csv"), default="text", help="output format")
    common.add_argument("--seed", type=int, default=None,
                        help="random seed; falls back to $ONTODIST_SEED, else 0")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads for campaigns")

    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="ontodist", description="Operational distinguishability versus ontological distinctness.",
                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("discriminate", parents=[common], formatter_class=fmt,
                       help="optimal minimum-error discrimination of an ensemble file")
    p.add_argument("ensemble", help="ensemble JSON file")
    p.add_argument("--tol", type=float, default=discrim.TOL, help="value-change stopping tolerance")
    p.add_argument("--cert-tol", type=float, default=discrim.CERT_TOL, help="optimality certificate tolerance")
    p.add_argument("--max-iter", type=int, default=discrim.MAX_ITER, help="iteration limit")
    p.set_defaults(func=cmd_discriminate)

    p = sub.add_parser("prop1", parents=[common], formatter_class=fmt, help="pairwise bound for three states")
    p.add_argument("--states", default="trine", help="'trine' or a states JSON file")
    p.set_defaults(func=cmd_prop1)

    p = sub.add_parser("prop2", parents=[common], formatter_class=fmt, help="pairs-of-mixtures bound for four states")
    p.add_argument("states", nargs="?", default=None, help="states JSON file (default: built-in quadruple)")
    p.add_argument("--theta", type=float, default=None, help="angle of the built-in quadruple in [0, pi/2] (default 0)")
    p.set_defaults(func=cmd_prop2)

    p = sub.add_parser("prop3", parents=[common], formatter_class=fmt, help="transformation bound for three unitaries")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--builtin", choices=("trine-rotations",), default="trine-rotations", help="built-in unitaries")
    g.add_argument("--unitaries", default=None, help="unitaries JSON file")
    p.add_argument("--grid-theta", type=int, default=bodcheck.DEFAULT_PROBE_GRID[0], help="probe grid polar points")
    p.add_argument("--grid-phi", type=int, default=bodcheck.DEFAULT_PROBE_GRID[1], help="probe grid azimuth points")
    p.set_defaults(func=cmd_prop3)

    p = sub.add_parser("prop4", parents=[common], formatter_class=fmt, help="task1 bound for a quantum protocol")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--builtin", choices=("fig4",), default="fig4", help="built-in protocol")
    g.add_argument("--strategy", default=None, help="quantum strategy JSON file")
    p.set_defaults(func=cmd_prop4)

    p = sub.add_parser("ks-distinctness", parents=[common], formatter_class=fmt,
                       help="Monte-Carlo distinctness in the Kochen-Specker model")
    p.add_argument("ensembles", nargs="?", default=None, help="KS ensembles JSON file (default: trine)")
    p.add_argument("--samples", type=int, default=ksmodel.DEFAULT_SAMPLES, help="number of sphere samples")
    p.set_defaults(func=cmd_ks)

    p = sub.add_parser("classical-opt", parents=[common], formatter_class=fmt,
                       help="optimise classical d-level strategies for a task")
    p.add_argument("task", nargs="?", default=None, help="task JSON file (default: --builtin)")
    p.add_argument("--builtin", choices=("task1", "task2", "parity"), default="task1", help="built-in task")
    p.add_argument("--p", type=float, default=2.0 / 3.0, help="distinguishability for task1/task2")
    p.add_argument("--epsilon", type=float, default=0.0, help="leakage for the parity task")
    p.add_argument("--d", type=int, default=None, help="message alphabet size (default nx*nz)")
    p.add_argument("--restarts", type=int, default=20, help="random restarts")
    p.set_defaults(func=cmd_classical)

    p = sub.add_parser("campaign", parents=[common], formatter_class=fmt, help="random-state violation campaign")
    p.add_argument("--kind", choices=expharness.KINDS, default="triplet-pure", help="campaign kind")
    p.add_argument("--dim", type=int, default=2, help="Hilbert space dimension (2..5)")
    p.add_argument("--count", type=int, default=10_000, help="number of random samples")
    p.add_argument("--out", default=None, help="write per-record CSV here")
    p.add_argument("--summary", default=None, help="write JSON summary (with timings) here")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("theta-sweep", parents=[common], formatter_class=fmt,
                       help="sweep the quadruple family and locate the violation endpoint")
    p.add_argument("--points", type=int, default=50, help="grid points on [0, pi/2]")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        out, code = args.func(args)
    except (UsageError, ValidationError, ValueError, OSError) as exc:
        print(f"ontodist {args.command}: error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(out)
    if code == 2:
        print(f"ontodist {args.command}: result not certified optimal (see certified/dual_gap)", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
