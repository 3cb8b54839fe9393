"""Regret and value estimators: Hajek, worst-case, IPW, Horvitz-Thompson, oracle.

The Hajek regret of pi against pi0 under weights W sums, over arms t,

    sum_{i in I_t} (pi(t|X_i) - pi0(t|X_i)) Y_i W_i  /  sum_{i in I_t} W_i

so rescaling the weights within an arm changes nothing. The worst case
maximizes each arm's ratio over the uncertainty set, which decouples into
one fractional subproblem per arm with r_i = (pi(T_i|X_i) - pi0(T_i|X_i)) Y_i.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..data import ArmIndex, Dataset
from ..exceptions import EmptyArmError
from ..policy import Policy
from ..subproblem import solve_box, solve_budgeted
from ..uncertainty import UncertaintySpec

__all__ = [
    "hajek_regret",
    "worst_case_regret",
    "worst_case_weights",
    "ipw_value",
    "ht_test_regret",
    "true_regret",
]


def _contrast(pol: Policy, pi0: Policy, data: Dataset) -> np.ndarray:
    """r_i = (pi(T_i | X_i) - pi0(T_i | X_i)) * Y_i."""
    return (pol.observed_prob(data.X, data.T) - pi0.observed_prob(data.X, data.T)) * data.Y


def hajek_regret(pol: Policy, pi0: Policy, data: Dataset, W: np.ndarray) -> float:
    """Self-normalized regret estimate at a fixed weight vector W > 0."""
    W = np.asarray(W, dtype=float).reshape(-1)
    if W.shape[0] != data.n:
        raise ValueError("weight vector length must equal n")
    if data.n == 0 or W.min() <= 0:
        raise ValueError("weights must be positive (and the sample non-empty)")
    r = _contrast(pol, pi0, data)
    arms = data.arms()
    total = 0.0
    for t in range(data.m):
        idx = arms[t]
        if idx.size == 0:
            raise EmptyArmError(t, "hajek_regret")
        total += float(np.dot(r[idx], W[idx]) / W[idx].sum())
    return total


def worst_case_regret(
    pol: Policy,
    pi0: Policy,
    data: Dataset,
    spec: UncertaintySpec,
    arms: Optional[ArmIndex] = None,
) -> float:
    """Supremum of the Hajek regret over the uncertainty set (sum of arm values)."""
    if spec.n != data.n:
        raise ValueError("uncertainty spec does not match the dataset")
    r = _contrast(pol, pi0, data)
    arms = arms if arms is not None else data.arms()
    total = 0.0
    for t in range(data.m):
        idx = arms[t]
        if idx.size == 0:
            raise EmptyArmError(t, "worst_case_regret")
        w, a, b = spec.restrict(idx)
        if spec.budgeted:
            total += solve_budgeted(r[idx], a, b, w, float(spec.lam[t])).value
        else:
            total += solve_box(r[idx], a, b).value
    return total


def worst_case_weights(
    pol: Policy,
    pi0: Policy,
    data: Dataset,
    spec: UncertaintySpec,
    arms: Optional[ArmIndex] = None,
):
    """Attaining weights W and the total worst-case regret, as (W, value)."""
    r = _contrast(pol, pi0, data)
    arms = arms if arms is not None else data.arms()
    W = np.empty(data.n)
    total = 0.0
    for t in range(data.m):
        idx = arms[t]
        if idx.size == 0:
            raise EmptyArmError(t, "worst_case_weights")
        w, a, b = spec.restrict(idx)
        if spec.budgeted:
            sol = solve_budgeted(r[idx], a, b, w, float(spec.lam[t]))
        else:
            sol = solve_box(r[idx], a, b)
        W[idx] = sol.weights
        total += sol.value
    return W, total


def ipw_value(pol: Policy, data: Dataset) -> float:
    """Plain inverse-propensity-weighted value estimate (1/n) sum pi(T_i|X_i) Y_i / e_i."""
    if data.e_hat is None:
        raise ValueError("ipw_value needs nominal propensities on the dataset")
    p_obs = pol.observed_prob(data.X, data.T)
    return float(np.mean(p_obs * data.Y / data.e_hat))


def ht_test_regret(pol: Policy, pi0: Policy, test: Dataset, p) -> float:
    """Unnormalized Horvitz-Thompson regret on randomized test data.

    (1/n) sum_i (Y_i / p_{T_i}) (pi(T_i|X_i) - pi0(T_i|X_i)), where p is the
    length-m vector of randomization probabilities.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] != test.m:
        raise ValueError(f"need {test.m} randomization probabilities, got {p.shape[0]}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-8:
        raise ValueError("randomization probabilities must be non-negative and sum to 1")
    observed = np.unique(test.T)
    if np.any(p[observed] <= 0.0):
        bad = int(observed[np.argmax(p[observed] <= 0.0)])
        raise ValueError(f"arm {bad} appears in the data but has randomization probability 0")
    contrast = pol.observed_prob(test.X, test.T) - pi0.observed_prob(test.X, test.T)
    return float(np.mean(test.Y / p[test.T] * contrast))


def true_regret(pol: Policy, pi0: Policy, data: Dataset) -> float:
    """Oracle regret from stored counterfactuals: (1/n) sum_i sum_t (pi - pi0)(t|X_i) Y_i(t)."""
    if data.potential_Y is None:
        raise ValueError("true_regret needs counterfactual outcomes (simulation data only)")
    diff = pol.prob_matrix(data.X) - pi0.prob_matrix(data.X)
    return float(np.mean(np.sum(diff * data.potential_Y, axis=1)))
