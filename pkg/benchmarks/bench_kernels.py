"""Compare the compiled kernels with the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed on the same inputs under both backends (best of
``--repeat`` runs) and the outputs are checked to agree.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from ontodist import _fallback
from ontodist.ksmodel import KsEnsemble, _design, sphere_points
from ontodist.quantcore import haar_pure, hs_mixed

try:
    from ontodist import _kernels
except ImportError:  # extension not built
    _kernels = None


def _inputs(rng: np.random.Generator) -> dict:
    states = [haar_pure(3, rng), hs_mixed(3, rng), haar_pure(3, rng)]
    r = np.array([s.mat / 3 for s in states])
    m0 = np.array([np.eye(3, dtype=complex) / 3] * 3)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    trine = [[0.0, 0.0, 1.0], [np.sqrt(3) / 2, 0.0, -0.5], [-np.sqrt(3) / 2, 0.0, -0.5]]
    axes, weights = _design([KsEnsemble.pure(a) for a in trine], np.full(3, 1 / 3))
    return {
        "r": r,
        "m0": m0,
        "h": g @ g.conj().T,
        "points": sphere_points(100_000, rng),
        "axes": axes,
        "weights": weights,
    }


def _cases(mod, data: dict) -> dict:
    return {
        "fixed_point (qutrit, 3 states)": lambda: mod.fixed_point(
            data["r"], data["m0"], 1e-10, 1e-7, 10_000, 1e-12)[1],
        "inv_sqrt (4x4)": lambda: mod.inv_sqrt(data["h"])[0],
        "ks_max_sums (1e5 points)": lambda: mod.ks_max_sums(data["points"], data["axes"], data["weights"])[0],
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions (default: %(default)s)")
    args = parser.parse_args()

    data = _inputs(np.random.default_rng(0))
    backends = {"python": _fallback}
    if _kernels is not None:
        backends["compiled"] = _kernels
    else:
        print("compiled extension not available; timing the fallback only")

    print(f"{'kernel':34s} " + " ".join(f"{name:>12s}" for name in backends) + "   speedup")
    for label in _cases(_fallback, data):
        times, outputs = {}, {}
        for name, mod in backends.items():
            fn = _cases(mod, data)[label]
            outputs[name] = np.asarray(fn())
            number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
            times[name] = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
        cols = " ".join(f"{times[n] * 1e3:10.3f}ms" for n in backends)
        speed = f"{times['python'] / times['compiled']:8.1f}x" if "compiled" in times else ""
        if "compiled" in outputs and not np.allclose(outputs["python"], outputs["compiled"], atol=1e-8):
            speed += "  (outputs differ!)"
        print(f"{label:34s} {cols} {speed}")


if __name__ == "__main__":
    main()
