"""Dropped-covariate odds-ratio audit for calibrating the sensitivity level.

Refitting the propensity model without one covariate and comparing the
per-unit odds of treatment against the full model shows how strongly each
observed variable drives selection. An unobserved confounder judged "no
stronger than covariate j" motivates picking a gamma that covers the
spread of the j-th ratio distribution.
"""

from __future__ import annotations

import numpy as np

from ..data import Dataset, fit_multinomial_logit, propensity_matrix
from ..exceptions import DatasetError

__all__ = ["odds_ratio_audit"]


def odds_ratio_audit(data: Dataset, clip_eps: float = 1e-6) -> np.ndarray:
    """Per-covariate odds ratios between full and drop-one propensity fits.

    Binary treatment only. Returns a (d, n) array whose j-th row holds
    [(1 - e) e_drop] / [e (1 - e_drop)] per unit, where e is the full-model
    treatment propensity and e_drop the one refit without covariate j.
    What to do with the rows (histograms, quantiles) is up to the caller.
    """
    if data.m != 2:
        raise ValueError("odds_ratio_audit is defined for binary treatments")
    if data.d < 1:
        raise ValueError("need at least one covariate to drop")
    theta_full = fit_multinomial_logit(data.X, data.T, 2)
    e_full = np.clip(propensity_matrix(data.X, theta_full)[:, 1], clip_eps, 1 - clip_eps)
    ratios = np.empty((data.d, data.n))
    for j in range(data.d):
        X_drop = np.delete(data.X, j, axis=1)
        try:
            theta = fit_multinomial_logit(X_drop, data.T, 2)
        except Exception as exc:
            raise DatasetError(f"propensity refit without covariate {j} failed: {exc}") from exc
        e_drop = np.clip(propensity_matrix(X_drop, theta)[:, 1], clip_eps, 1 - clip_eps)
        ratios[j] = ((1.0 - e_full) * e_drop) / (e_full * (1.0 - e_drop))
    return ratios
