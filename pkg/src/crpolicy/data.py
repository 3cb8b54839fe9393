"""Dataset container, CSV ingestion, arm partitioning, and nominal propensity estimation.

Outcomes are losses: lower is better. Treatment labels must be dense
integers 0..m-1; remapping arbitrary labels is the caller's job.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConvergenceError, DatasetError, DatasetWarning, EmptyArmError

__all__ = [
    "Dataset",
    "ArmIndex",
    "ColumnSchema",
    "load_dataset",
    "estimate_propensities",
    "softmax",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


def softmax(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; safe for scores up to +-700."""
    s = scores - scores.max(axis=-1, keepdims=True)
    np.exp(s, out=s)
    s /= s.sum(axis=-1, keepdims=True)
    return s


@dataclass(frozen=True)
class Dataset:
    """Observational sample (X, T, Y) with optional propensities and counterfactuals.

    Attributes
    ----------
    X : (n, d) float array of covariates.
    T : (n,) integer treatment labels in {0, ..., m-1}.
    Y : (n,) float outcomes, interpreted as losses.
    m : number of treatment arms, at least 2.
    e_hat : optional (n,) nominal propensity of the *observed* arm,
        each value in (0, 1].
    potential_Y : optional (n, m) matrix of counterfactual outcomes
        (simulation only); must satisfy Y[i] == potential_Y[i, T[i]] exactly.
    """

    X: np.ndarray
    T: np.ndarray
    Y: np.ndarray
    m: int
    e_hat: Optional[np.ndarray] = None
    potential_Y: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        T = np.asarray(self.T, dtype=np.int64).reshape(-1)
        Y = np.asarray(self.Y, dtype=float).reshape(-1)
        n = T.shape[0]
        if X.shape[0] != n and not (n == 0 and X.size == 0):
            raise DatasetError(f"X has {X.shape[0]} rows but T has {n}")
        if X.shape[0] != n:
            X = X.reshape(n, -1)
        if Y.shape[0] != n:
            raise DatasetError(f"Y has {Y.shape[0]} entries but T has {n}")
        if self.m < 2:
            raise DatasetError(f"treatment arity m={self.m} must be >= 2")
        if not np.all(np.isfinite(X)):
            raise DatasetError("X contains non-finite values")
        if not np.all(np.isfinite(Y)):
            raise DatasetError("Y contains non-finite values")
        if n and (T.min() < 0 or T.max() >= self.m):
            raise DatasetError("treatment labels must lie in {0, ..., m-1}")

        e_hat = self.e_hat
        if e_hat is not None:
            e_hat = np.asarray(e_hat, dtype=float).reshape(-1)
            if e_hat.shape[0] != n:
                raise DatasetError("e_hat length does not match n")
            if n and (not np.all(np.isfinite(e_hat)) or e_hat.min() <= 0.0 or e_hat.max() > 1.0):
                raise DatasetError("e_hat values must lie in (0, 1]")
            e_hat = _frozen(e_hat)

        pY = self.potential_Y
        if pY is not None:
            pY = np.asarray(pY, dtype=float)
            if pY.shape != (n, self.m):
                raise DatasetError(f"potential_Y must have shape ({n}, {self.m})")
            if n and not np.array_equal(Y, pY[np.arange(n), T]):
                raise DatasetError("Y must equal potential_Y[i, T[i]] exactly")
            pY = _frozen(pY)

        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "T", _frozen(T))
        object.__setattr__(self, "Y", _frozen(Y))
        object.__setattr__(self, "e_hat", e_hat)
        object.__setattr__(self, "potential_Y", pY)

    @property
    def n(self) -> int:
        return self.T.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def with_propensities(self, e_hat: np.ndarray) -> "Dataset":
        return Dataset(self.X, self.T, self.Y, self.m, e_hat=e_hat, potential_Y=self.potential_Y)

    def arms(self) -> "ArmIndex":
        return ArmIndex.from_labels(self.T, self.m)


@dataclass(frozen=True)
class ArmIndex:
    """Per-arm index sets I_t = {i : T_i = t}; disjoint with union {0, ..., n-1}."""

    indices: tuple

    @classmethod
    def from_labels(cls, T: Sequence[int], m: int) -> "ArmIndex":
        T = np.asarray(T, dtype=np.int64)
        return cls(tuple(_frozen(np.flatnonzero(T == t)) for t in range(m)))

    @property
    def m(self) -> int:
        return len(self.indices)

    def __getitem__(self, t: int) -> np.ndarray:
        return self.indices[t]

    def sizes(self) -> np.ndarray:
        return np.array([idx.size for idx in self.indices])

    def require_nonempty(self, context: str = "") -> None:
        for t, idx in enumerate(self.indices):
            if idx.size == 0:
                raise EmptyArmError(t, context)


@dataclass(frozen=True)
class ColumnSchema:
    """Column-name configuration for CSV ingestion."""

    covariates: Sequence[str]
    treatment: str
    outcome: str
    propensity: Optional[str] = None
    potential_outcomes: Optional[Sequence[str]] = field(default=None)


def _parse_cell(raw: str, column: str, row: int) -> float:
    raw = raw.strip()
    if raw == "":
        raise DatasetError(f"missing value in column '{column}' at data row {row}")
    try:
        value = float(raw)
    except ValueError:
        raise DatasetError(f"non-numeric value {raw!r} in column '{column}' at data row {row}") from None
    if not np.isfinite(value):
        raise DatasetError(f"non-finite value in column '{column}' at data row {row}")
    return value


def load_dataset(path, schema: ColumnSchema) -> Dataset:
    """Read a UTF-8 CSV with a header row into a Dataset.

    The number of arms is inferred as 1 + max(T) (at least 2). A treatment
    label in {0, ..., m-1} that never occurs in the file triggers a
    DatasetWarning rather than an error; fitting on that arm later fails.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: file is empty (no header row)") from None
        header = [h.strip() for h in header]
        col_pos = {name: i for i, name in enumerate(header)}

        wanted = list(schema.covariates) + [schema.treatment, schema.outcome]
        if schema.propensity:
            wanted.append(schema.propensity)
        if schema.potential_outcomes:
            wanted.extend(schema.potential_outcomes)
        for name in wanted:
            if name not in col_pos:
                raise DatasetError(f"{path}: column '{name}' not found in header {header}")

        rows_X, rows_T, rows_Y, rows_e, rows_p = [], [], [], [], []
        for row_num, row in enumerate(reader, start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}: data row {row_num} has {len(row)} cells, expected {len(header)}"
                )
            rows_X.append([_parse_cell(row[col_pos[c]], c, row_num) for c in schema.covariates])
            t_val = _parse_cell(row[col_pos[schema.treatment]], schema.treatment, row_num)
            if t_val != int(t_val) or t_val < 0:
                raise DatasetError(
                    f"{path}: treatment value {t_val!r} at data row {row_num} "
                    "is not a non-negative integer"
                )
            rows_T.append(int(t_val))
            rows_Y.append(_parse_cell(row[col_pos[schema.outcome]], schema.outcome, row_num))
            if schema.propensity:
                rows_e.append(_parse_cell(row[col_pos[schema.propensity]], schema.propensity, row_num))
            if schema.potential_outcomes:
                rows_p.append(
                    [_parse_cell(row[col_pos[c]], c, row_num) for c in schema.potential_outcomes]
                )

    n = len(rows_T)
    d = len(schema.covariates)
    T = np.array(rows_T, dtype=np.int64)
    m = max(2, int(T.max()) + 1) if n else 2
    if schema.potential_outcomes and len(schema.potential_outcomes) != m:
        raise DatasetError(
            f"{path}: {len(schema.potential_outcomes)} counterfactual columns given "
            f"but data implies m={m}"
        )
    if n:
        seen = np.bincount(T, minlength=m) > 0
        missing = [t for t in range(m) if not seen[t]]
        if missing:
            warnings.warn(
                f"{path}: treatment labels {missing} never occur; "
                "solvers invoked on those arms will fail",
                DatasetWarning,
                stacklevel=2,
            )
    return Dataset(
        X=np.array(rows_X, dtype=float).reshape(n, d),
        T=T,
        Y=np.array(rows_Y, dtype=float),
        m=m,
        e_hat=np.array(rows_e, dtype=float) if schema.propensity else None,
        potential_Y=np.array(rows_p, dtype=float).reshape(n, m) if schema.potential_outcomes else None,
    )


def _design_matrix(X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    return np.hstack([np.ones((n, 1)), X])


def fit_multinomial_logit(
    X: np.ndarray,
    T: np.ndarray,
    m: int,
    max_iter: int = 100,
    grad_tol: float = 1e-8,
) -> np.ndarray:
    """Maximum-likelihood multinomial logistic regression of T on [1, X].

    Arm 0 is the reference class. Returns theta with shape (m-1, d+1).
    Deterministic: Newton iterations from a zero initialization, with step
    halving; the Newton system is solved by least squares so collinear
    designs (e.g. duplicated columns) still yield the unique fitted
    probabilities.
    """
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=np.int64)
    n = T.shape[0]
    if n < m:
        raise DatasetError(f"need at least m={m} observations to fit propensities, got {n}")
    counts = np.bincount(T, minlength=m)
    if np.count_nonzero(counts) < 2:
        raise DatasetError("treatment column is single-class; propensity model is degenerate")
    Z = _design_matrix(X)
    p = Z.shape[1]
    theta = np.zeros((m - 1, p))
    onehot = np.zeros((n, m))
    onehot[np.arange(n), T] = 1.0

    def nll(th: np.ndarray) -> float:
        scores = np.hstack([np.zeros((n, 1)), Z @ th.T])
        logz = np.log(np.exp(scores - scores.max(axis=1, keepdims=True)).sum(axis=1))
        logz += scores.max(axis=1)
        return float(np.sum(logz - scores[np.arange(n), T]))

    scale = max(1.0, float(n))
    current = nll(theta)
    grad_norm = np.inf
    for _ in range(max_iter):
        probs = softmax(np.hstack([np.zeros((n, 1)), Z @ theta.T]))
        grad = Z.T @ (probs[:, 1:] - onehot[:, 1:])  # (p, m-1)
        grad_norm = float(np.abs(grad).max())
        if grad_norm <= grad_tol * scale:
            return theta
        # Full Newton system over the (m-1) blocks.
        k = (m - 1) * p
        H = np.empty((k, k))
        for u in range(1, m):
            for v in range(1, m):
                w = probs[:, u] * ((u == v) - probs[:, v])
                H[(u - 1) * p : u * p, (v - 1) * p : v * p] = Z.T @ (Z * w[:, None])
        g = grad.T.reshape(-1)  # (m-1, p) flattened row-major
        step, *_ = np.linalg.lstsq(H, g, rcond=None)
        step = step.reshape(m - 1, p)
        # Backtracking keeps the NLL monotone even far from the optimum.
        alpha = 1.0
        for _ in range(60):
            cand = theta - alpha * step
            cand_nll = nll(cand)
            if cand_nll <= current + 1e-12:
                theta, current = cand, cand_nll
                break
            alpha *= 0.5
        else:
            raise ConvergenceError("propensity Newton step failed to reduce the loss", grad_norm)
    raise ConvergenceError(
        f"propensity fit did not converge in {max_iter} iterations", grad_norm
    )


def propensity_matrix(X: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Fitted arm probabilities, one row per unit; rows sum to 1."""
    n = X.shape[0]
    Z = _design_matrix(np.asarray(X, dtype=float))
    return softmax(np.hstack([np.zeros((n, 1)), Z @ theta.T]))


def estimate_propensities(data: Dataset, clip_eps: float = 1e-3, max_iter: int = 100) -> np.ndarray:
    """Estimate nominal propensities of the observed arms by multinomial logit.

    Fits an intercept-plus-linear multinomial logistic regression of T on X
    and returns e_hat[i] = P(T = T_i | X_i), clipped into
    [clip_eps, 1 - clip_eps] when clip_eps > 0. Clipping keeps the inverse
    weights 1/e_hat finite; pass clip_eps=0 to disable it.
    """
    if not 0.0 <= clip_eps < 0.5:
        raise ValueError(f"clip_eps must lie in [0, 0.5), got {clip_eps}")
    theta = fit_multinomial_logit(data.X, data.T, data.m, max_iter=max_iter)
    probs = propensity_matrix(data.X, theta)
    e = probs[np.arange(data.n), data.T]
    if clip_eps > 0.0:
        e = np.clip(e, clip_eps, 1.0 - clip_eps)
    return e
