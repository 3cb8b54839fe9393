"""Cross-gamma calibration: train at gamma_k, stress-test at gamma_k'."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..data import Dataset
from ..policy import Policy
from .estimators import worst_case_regret

__all__ = ["CalibrationMatrix", "calibration_matrix"]


@dataclass(frozen=True)
class CalibrationMatrix:
    """values[k][k'] = worst-case regret of the gamma_k policy under gamma_k'.

    Uncertainty sets are nested in gamma, so every row is nondecreasing,
    and the diagonal coincides with the fits' reported objectives.
    """

    gammas: np.ndarray
    values: np.ndarray
    policies: tuple = ()

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (g.size, g.size):
            raise ValueError(f"values must be {g.size}x{g.size}")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "values", v)


def calibration_matrix(
    data: Dataset,
    gammas: Sequence[float],
    pi0: Policy,
    opts=None,
    rho: Optional[float] = None,
) -> CalibrationMatrix:
    """Fit the gamma path, then cross-evaluate every policy at every gamma."""
    from ..optimize import FitOptions, gamma_path_fit
    from ..uncertainty import UncertaintySpec, budget_from_fraction

    opts = opts if opts is not None else FitOptions()
    fits = gamma_path_fit(data, gammas, pi0, opts, rho=rho)
    K = len(fits)
    values = np.empty((K, K))
    arms = data.arms()
    for kp, gamma_eval in enumerate(gammas):
        spec = UncertaintySpec.from_dataset(data, float(gamma_eval))
        if rho is not None:
            spec = spec.with_budget(budget_from_fraction(spec, arms, rho))
        for k, fit in enumerate(fits):
            if k == kp:
                values[k, kp] = fit.objective
            else:
                values[k, kp] = worst_case_regret(fit.policy, pi0, data, spec, arms=arms)
    return CalibrationMatrix(
        gammas=np.asarray(list(gammas), dtype=float),
        values=values,
        policies=tuple(fit.policy for fit in fits),
    )
