"""Stable CSV/JSON layouts for experiment outputs.

Column layouts are fixed so downstream plotting scripts can rely on them:

* dataset CSV: x0..x{d-1}, t, y [, e_nominal, w_star, y_cf0..y_cf{m-1}]
* regret curves CSV: method, gamma, rep, true_regret
* calibration CSV: first column train_gamma, then eval_<gamma> per grid point
* audit CSV: one covariate column per audited feature, one row per unit
* summary JSON: list of {method, gamma, mean_regret, stderr, n_reps}
"""

from __future__ import annotations

import csv
import json
from typing import Optional, Sequence

import numpy as np

from ..data import Dataset
from .calibration import CalibrationMatrix

__all__ = [
    "dataset_rows",
    "write_dataset_csv",
    "write_regret_curves_csv",
    "write_calibration_csv",
    "write_audit_csv",
    "summarize_curves",
    "write_summary_json",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def dataset_rows(data: Dataset, w_star: Optional[np.ndarray] = None):
    header = [f"x{j}" for j in range(data.d)] + ["t", "y"]
    if data.e_hat is not None:
        header.append("e_nominal")
    if w_star is not None:
        header.append("w_star")
    if data.potential_Y is not None:
        header.extend(f"y_cf{t}" for t in range(data.m))
    yield header
    for i in range(data.n):
        row = [_fmt(v) for v in data.X[i]] + [str(int(data.T[i])), _fmt(data.Y[i])]
        if data.e_hat is not None:
            row.append(_fmt(data.e_hat[i]))
        if w_star is not None:
            row.append(_fmt(w_star[i]))
        if data.potential_Y is not None:
            row.extend(_fmt(v) for v in data.potential_Y[i])
        yield row


def write_dataset_csv(path, data: Dataset, w_star: Optional[np.ndarray] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh).writerows(dataset_rows(data, w_star))


def write_regret_curves_csv(path, records: Sequence[dict]) -> None:
    """records: dicts with keys method, gamma, rep, true_regret."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "gamma", "rep", "true_regret"])
        for rec in records:
            w.writerow([rec["method"], _fmt(rec["gamma"]), str(int(rec["rep"])), _fmt(rec["true_regret"])])


def write_calibration_csv(path, matrix: CalibrationMatrix) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["train_gamma"] + [f"eval_{g:g}" for g in matrix.gammas])
        for g, row in zip(matrix.gammas, matrix.values):
            w.writerow([_fmt(g)] + [_fmt(v) for v in row])


def write_audit_csv(path, ratios: np.ndarray, names: Optional[Sequence[str]] = None) -> None:
    d, n = ratios.shape
    names = list(names) if names is not None else [f"x{j}" for j in range(d)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(n):
            w.writerow([_fmt(ratios[j, i]) for j in range(d)])


def summarize_curves(records: Sequence[dict]):
    """Aggregate per-replication regrets into {method, gamma, mean, stderr, n}."""
    keys = sorted({(rec["method"], float(rec["gamma"])) for rec in records})
    out = []
    for method, gamma in keys:
        vals = np.array(
            [rec["true_regret"] for rec in records if rec["method"] == method and float(rec["gamma"]) == gamma]
        )
        stderr = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
        out.append(
            {
                "method": method,
                "gamma": gamma,
                "mean_regret": float(vals.mean()),
                "stderr": stderr,
                "n_reps": int(vals.size),
            }
        )
    return out


def write_summary_json(path, summary) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
