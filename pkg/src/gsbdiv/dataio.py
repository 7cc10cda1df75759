"""File ingestion and output formatting for the command-line surface.

Raw samples are one integer per line; frequency files are CSV rows of
``value,count`` with an optional header. Both describe the same multiset and
produce identical results everywhere.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .errors import InputError
from .estimation import EmpiricalDensity


def read_sample(path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                v = int(s)
            except ValueError:
                raise InputError(f"{path}:{lineno}: expected an integer, got {s!r}")
            if v < 0:
                raise InputError(f"{path}:{lineno}: negative value {v}")
            values.append(v)
    if not values:
        raise InputError(f"{path}: no sample values found")
    return np.asarray(values, dtype=np.int64)


def read_frequency(path) -> EmpiricalDensity:
    counts = {}
    with open(path) as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise InputError(f"{path}:{lineno}: expected 'value,count', got {row!r}")
            a, b = row[0].strip(), row[1].strip()
            if lineno == 1 and not (a.lstrip("-").isdigit() and b.lstrip("-").isdigit()):
                continue  # header row
            try:
                value, count = int(a), int(b)
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-integer row {row!r}")
            if value < 0 or count < 0:
                raise InputError(f"{path}:{lineno}: negative value or count")
            if value in counts:
                raise InputError(f"{path}:{lineno}: duplicate value {value}")
            if count:
                counts[value] = count
    if not counts:
        raise InputError(f"{path}: no positive counts found")
    return EmpiricalDensity(counts)


def fmt_float(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return repr(float(x))


def to_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if hasattr(x, "astuple"):
        return list(x.astuple())
    raise TypeError(f"not JSON serializable: {type(x)!r}")


def grid_csv(grid) -> str:
    """CSV export: alpha, lambda, beta, epsilon, mse, mc_se, failures."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "lambda", "beta", "epsilon", "mse", "mc_se", "failures"])
    for t in grid.triplets:
        for eps in grid.epsilons:
            key = grid.cell_key(t, eps)
            w.writerow([fmt_float(t.alpha), fmt_float(t.lam), fmt_float(t.beta),
                        fmt_float(eps), fmt_float(grid.mse[key]),
                        fmt_float(grid.mc_se[key]), grid.failures[key]])
    return buf.getvalue()


def grid_table(grid) -> str:
    """Text table mirroring the four-MSE-rows-then-label cell layout."""
    lambdas = sorted({t.lam for t in grid.triplets})
    alphas = sorted({t.alpha for t in grid.triplets})
    by_key = {(t.alpha, t.lam, t.beta): t for t in grid.triplets}
    betas = sorted({t.beta for t in grid.triplets})
    lines = []
    eps_sorted = sorted(grid.epsilons)
    full_cross = len(grid.triplets) == len(lambdas) * len(alphas) * len(betas)
    if full_cross:
        groups = [[by_key[(a, l, b)] for a in alphas]
                  for b in betas for l in lambdas]
    else:
        groups = [grid.triplets[i:i + 7] for i in range(0, len(grid.triplets), 7)]
    width = 18
    for row in groups:
        for eps in eps_sorted:
            lines.append("".join(
                f"{grid.mse[grid.cell_key(t, eps)]:.4f}".rjust(width) for t in row))
        lines.append("".join(t.label().rjust(width) for t in row))
        lines.append("-" * (width * len(row)))
    return "\n".join(lines) + "\n"


def curve_csv(ys, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["y", "IF"])
    for y, v in zip(ys, values):
        w.writerow([int(y), fmt_float(v)])
    return buf.getvalue()
