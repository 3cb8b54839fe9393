"""Minimax policy learners.

`subgradient_fit` runs the projected subgradient method with random
restarts over logistic policies: each iteration solves the worst-case
weight subproblem exactly, then steps against the resulting subgradient of
the worst-case regret. `gamma_path_fit` chains fits over an ascending
sensitivity grid with warm starts and cross-gamma objective checks.
`tree_partition_fit` greedily grows an axis-aligned decision tree by
re-evaluating the full-tree robust objective for every candidate split.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .data import Dataset
from .exceptions import SolverError
from .policy import (
    LogisticPolicy,
    Policy,
    TreeLeaf,
    TreeNode,
    TreePolicy,
    policy_from_json,
    policy_to_json,
)
from .subproblem import solve_box, solve_budgeted
from .uncertainty import UncertaintySpec, budget_from_fraction
from .evaluation.estimators import worst_case_regret

__all__ = ["FitOptions", "FitResult", "subgradient_fit", "gamma_path_fit", "tree_partition_fit"]


@dataclass(frozen=True)
class FitOptions:
    """Knobs for the subgradient method.

    eta0 and kappa set the step schedule eta_k = eta0 * (k+1)^(-kappa);
    restart 0 always starts from theta = 0 and the remaining restarts draw
    theta ~ Normal(0, init_scale^2) from a per-restart stream derived from
    (seed, restart index). `radius` optionally projects theta onto a
    Euclidean ball for conditioning; by default the parameter space is
    unconstrained and the projection is the identity.
    """

    eta0: float = 1.0
    kappa: float = 0.5
    iters: int = 500
    restarts: int = 5
    seed: int = 0
    init_scale: float = 1.0
    fallback_to_baseline: bool = True
    radius: Optional[float] = None

    def __post_init__(self):
        if self.eta0 <= 0:
            raise ValueError("eta0 must be positive")
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        if self.iters < 1 or self.restarts < 1:
            raise ValueError("iters and restarts must be >= 1")
        if self.init_scale < 0:
            raise ValueError("init_scale must be >= 0")


@dataclass(frozen=True)
class FitResult:
    """A fitted policy with its recomputed worst-case objective.

    per_restart records (objective, averaged theta) for each restart of the
    subgradient method; tree fits leave it empty. When the best achievable
    objective is positive and fallback is enabled, the baseline policy is
    returned instead with objective 0 and fell_back=True.
    """

    policy: Policy
    objective: float
    per_restart: Tuple = ()
    fell_back: bool = False
    gamma: Optional[float] = None
    options: Optional[FitOptions] = None

    def to_json(self) -> str:
        doc = {
            "policy": json.loads(policy_to_json(self.policy)),
            "objective": self.objective,
            "fell_back": self.fell_back,
            "gamma": self.gamma,
            "options": None if self.options is None else asdict(self.options),
            "per_restart": [obj for obj, _ in self.per_restart],
        }
        return json.dumps(doc, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FitResult":
        doc = json.loads(text)
        opts = doc.get("options")
        return cls(
            policy=policy_from_json(json.dumps(doc["policy"])),
            objective=float(doc["objective"]),
            per_restart=tuple((obj, None) for obj in doc.get("per_restart", [])),
            fell_back=bool(doc.get("fell_back", False)),
            gamma=doc.get("gamma"),
            options=None if opts is None else FitOptions(**opts),
        )


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(restart,)))


class _SubgradientProblem:
    """Precomputed quantities shared by every restart on one dataset/spec."""

    def __init__(self, data: Dataset, spec: UncertaintySpec, pi0: Policy):
        if spec.n != data.n:
            raise ValueError("uncertainty spec does not match the dataset")
        self.data = data
        self.spec = spec
        self.pi0 = pi0
        self.arms = data.arms()
        self.arms.require_nonempty("subgradient_fit")
        self.p0_obs = pi0.observed_prob(data.X, data.T)
        self.Z = np.hstack([np.ones((data.n, 1)), data.X])
        self.shape = (data.m - 1, data.d + 1)

    def worst_weights(self, r: np.ndarray) -> np.ndarray:
        W = np.empty(self.data.n)
        for t in range(self.data.m):
            idx = self.arms[t]
            w, a, b = self.spec.restrict(idx)
            if self.spec.budgeted:
                W[idx] = solve_budgeted(r[idx], a, b, w, float(self.spec.lam[t])).weights
            else:
                W[idx] = solve_box(r[idx], a, b).weights
        return W

    def subgradient(self, pol: LogisticPolicy) -> np.ndarray:
        """g = sum_i (W_i / sum_{j in arm} W_j) Y_i grad pi(T_i | X_i) at the pessimal W."""
        data = self.data
        probs = pol.prob_matrix(data.X)
        p_obs = probs[np.arange(data.n), data.T]
        r = (p_obs - self.p0_obs) * data.Y
        W = self.worst_weights(r)
        norm = np.empty(data.n)
        for t in range(data.m):
            idx = self.arms[t]
            norm[idx] = W[idx].sum()
        c = (W / norm) * data.Y
        pT = p_obs
        delta = (data.T[:, None] == np.arange(1, data.m)[None, :]).astype(float)
        coef = c[:, None] * pT[:, None] * (delta - probs[:, 1:])
        g = coef.T @ self.Z
        if not np.all(np.isfinite(g)):
            raise SolverError("non-finite subgradient")
        return g

    def objective(self, pol: Policy) -> float:
        return worst_case_regret(pol, self.pi0, self.data, self.spec, arms=self.arms)


def _project(theta: np.ndarray, radius: Optional[float]) -> np.ndarray:
    if radius is None:
        return theta
    norm = float(np.linalg.norm(theta))
    if norm <= radius:
        return theta
    return theta * (radius / norm)


def _run_restart(problem: _SubgradientProblem, theta0: np.ndarray, opts: FitOptions) -> np.ndarray:
    theta = theta0.copy()
    avg = np.zeros_like(theta)
    for k in range(opts.iters):
        eta_k = opts.eta0 * (k + 1) ** (-opts.kappa)
        g = problem.subgradient(LogisticPolicy(theta))
        if not np.all(np.isfinite(g)):
            raise SolverError(f"non-finite subgradient at iteration {k}")
        theta = _project(theta - eta_k * g, opts.radius)
        avg += theta
    return avg / opts.iters


def subgradient_fit(
    data: Dataset,
    spec: UncertaintySpec,
    pi0: Policy,
    opts: FitOptions = FitOptions(),
    extra_inits: Sequence[np.ndarray] = (),
) -> FitResult:
    """Learn a logistic policy minimizing the worst-case Hajek regret.

    Each restart returns its iterate average; the restart whose average
    attains the smallest recomputed objective wins. With fallback enabled a
    positive best objective is replaced by the baseline policy (objective 0),
    since the baseline is always feasible.

    extra_inits prepends additional warm-start parameter blocks (used by the
    gamma path); they run after restart 0 and before the random restarts.
    """
    problem = _SubgradientProblem(data, spec, pi0)
    shape = problem.shape
    inits = [np.zeros(shape)]
    for th in extra_inits:
        th = np.asarray(th, dtype=float)
        if th.shape != shape:
            raise ValueError(f"warm start has shape {th.shape}, expected {shape}")
        inits.append(th)
    for j in range(1, opts.restarts):
        rng = _restart_rng(opts.seed, j)
        inits.append(rng.normal(0.0, opts.init_scale, size=shape))

    per_restart = []
    best_idx = 0
    for j, theta0 in enumerate(inits):
        theta_bar = _run_restart(problem, theta0, opts)
        obj = problem.objective(LogisticPolicy(theta_bar))
        per_restart.append((obj, theta_bar))
        if obj < per_restart[best_idx][0]:
            best_idx = j

    best_obj, best_theta = per_restart[best_idx]
    if opts.fallback_to_baseline and best_obj > 0.0:
        return FitResult(
            policy=pi0,
            objective=0.0,
            per_restart=tuple(per_restart),
            fell_back=True,
            gamma=spec.gamma,
            options=opts,
        )
    return FitResult(
        policy=LogisticPolicy(best_theta),
        objective=best_obj,
        per_restart=tuple(per_restart),
        fell_back=False,
        gamma=spec.gamma,
        options=opts,
    )


def _spec_for_gamma(data: Dataset, gamma: float, rho: Optional[float]) -> UncertaintySpec:
    spec = UncertaintySpec.from_dataset(data, gamma)
    if rho is not None:
        spec = spec.with_budget(budget_from_fraction(spec, data.arms(), rho))
    return spec


def gamma_path_fit(
    data: Dataset,
    gammas: Sequence[float],
    pi0: Policy,
    opts: FitOptions = FitOptions(),
    rho: Optional[float] = None,
) -> List[FitResult]:
    """Fit one policy per gamma along an ascending grid, with refinements.

    Two stabilizers exploit the nesting of the uncertainty sets: each fit
    after the first is warm-started from the previous gamma's solution, and
    every fitted policy is cross-evaluated at every other gamma so each grid
    entry keeps the best policy seen for that gamma. The returned objectives
    are therefore nondecreasing in gamma.
    """
    gammas = [float(g) for g in gammas]
    if any(g < 1.0 for g in gammas):
        raise ValueError("every gamma must be >= 1")
    if any(g2 <= g1 for g1, g2 in zip(gammas, gammas[1:])):
        raise ValueError("gammas must be strictly ascending")

    specs = [_spec_for_gamma(data, g, rho) for g in gammas]
    fits: List[FitResult] = []
    candidates: List[LogisticPolicy] = []
    # cross[c][i] = objective of candidate c evaluated under gamma_i.
    cross: List[List[float]] = []
    for k, (gamma, spec) in enumerate(zip(gammas, specs)):
        warm = []
        if k and candidates:
            prev_best = min(range(len(candidates)), key=lambda c: cross[c][k - 1])
            warm.append(candidates[prev_best].theta)
        try:
            res = subgradient_fit(data, spec, pi0, opts, extra_inits=warm)
        except Exception as exc:
            raise SolverError(f"gamma path failed at gamma={gamma}: {exc}") from exc
        fits.append(res)
        # Even a fit that fell back contributes its best iterate as a candidate.
        if isinstance(res.policy, LogisticPolicy):
            new = res.policy
        else:
            _, theta = min(res.per_restart, key=lambda pr: pr[0])
            new = LogisticPolicy(theta)
        candidates.append(new)
        cross.append([worst_case_regret(new, pi0, data, specs[i]) for i in range(len(specs))])

    # Cross-gamma check: each grid entry keeps the best candidate for its own
    # gamma (the appendix's replace-by-previous rule, applied symmetrically so
    # the reported objectives are nondecreasing), with fallback on top.
    results: List[FitResult] = []
    for i, (gamma, spec) in enumerate(zip(gammas, specs)):
        best_c = min(range(len(candidates)), key=lambda c: cross[c][i])
        obj = cross[best_c][i]
        if opts.fallback_to_baseline and obj > 0.0:
            results.append(
                replace(fits[i], policy=pi0, objective=0.0, fell_back=True)
            )
        else:
            results.append(
                replace(fits[i], policy=candidates[best_c], objective=obj, fell_back=False)
            )
    return results


class _TreeBuilder:
    """Greedy recursive partitioning against the whole-tree robust objective.

    Candidate splits reassign one side of a leaf to a new arm while every
    other leaf keeps its current assignment; the winning (feature,
    threshold, sense, arm) is the one minimizing the full worst-case regret.
    """

    def __init__(self, data: Dataset, spec: UncertaintySpec, pi0: Policy, min_leaf: int):
        if spec.budgeted:
            raise ValueError(
                "tree_partition_fit supports only the box uncertainty set; "
                "the budget couples the objective across leaves"
            )
        self.data = data
        self.spec = spec
        self.pi0 = pi0
        self.min_leaf = int(min_leaf)
        self.arms = data.arms()
        self.arms.require_nonempty("tree_partition_fit")
        self.p0_obs = pi0.observed_prob(data.X, data.T)
        # assignment[i] = arm currently prescribed to unit i by the tree
        self.assignment = np.zeros(data.n, dtype=np.int64)

    def objective_for(self, assignment: np.ndarray) -> float:
        r = ((assignment == self.data.T).astype(float) - self.p0_obs) * self.data.Y
        total = 0.0
        for t in range(self.data.m):
            idx = self.arms[t]
            w, a, b = self.spec.restrict(idx)
            total += solve_box(r[idx], a, b).value
        return total

    def best_constant(self):
        best_arm, best_obj = 0, np.inf
        for arm in range(self.data.m):
            obj = self.objective_for(np.full(self.data.n, arm, dtype=np.int64))
            if obj < best_obj:
                best_arm, best_obj = arm, obj
        return best_arm, best_obj

    def best_split(self, node_idx: np.ndarray, current_obj: float):
        """Scan (feature, midpoint threshold, sense, arm) over one leaf's units.

        Returns (obj, feature, threshold, left_arm, right_arm) or None when
        nothing strictly improves within the min_leaf constraint.
        """
        data = self.data
        base_arm = int(self.assignment[node_idx[0]])
        best = None
        for j in range(data.d):
            xj = data.X[node_idx, j]
            order = np.argsort(xj, kind="stable")
            xs = xj[order]
            distinct = np.flatnonzero(np.diff(xs) > 0)
            for cut in distinct:
                thr = 0.5 * (xs[cut] + xs[cut + 1])
                left = node_idx[xj <= thr]
                right = node_idx[xj > thr]
                if left.size < self.min_leaf or right.size < self.min_leaf:
                    continue
                for side_idx in (left, right):
                    for arm in range(data.m):
                        if arm == base_arm:
                            continue
                        cand = self.assignment.copy()
                        cand[side_idx] = arm
                        obj = self.objective_for(cand)
                        if obj < current_obj and (best is None or obj < best[0]):
                            left_arm = arm if side_idx is left else base_arm
                            right_arm = arm if side_idx is right else base_arm
                            best = (obj, j, float(thr), left_arm, right_arm)
        return best

    def grow(self, node_idx: np.ndarray, depth_left: int, current_obj: float):
        base_arm = int(self.assignment[node_idx[0]])
        if depth_left == 0 or node_idx.size < 2 * self.min_leaf:
            return self._leaf(base_arm), current_obj
        found = self.best_split(node_idx, current_obj)
        if found is None:
            return self._leaf(base_arm), current_obj
        obj, feature, thr, left_arm, right_arm = found
        left_idx = node_idx[self.data.X[node_idx, feature] <= thr]
        right_idx = node_idx[self.data.X[node_idx, feature] > thr]
        self.assignment[left_idx] = left_arm
        self.assignment[right_idx] = right_arm
        left_node, obj = self.grow(left_idx, depth_left - 1, obj)
        right_node, obj = self.grow(right_idx, depth_left - 1, obj)
        return TreeNode(feature=feature, threshold=thr, left=left_node, right=right_node), obj

    def _leaf(self, arm: int) -> TreeLeaf:
        p = np.zeros(self.data.m)
        p[arm] = 1.0
        return TreeLeaf(p)


def tree_partition_fit(
    data: Dataset,
    spec: UncertaintySpec,
    pi0: Policy,
    depth: int,
    min_leaf: int = 1,
    fallback_to_baseline: bool = True,
) -> FitResult:
    """Greedy recursive partitioning over depth-limited axis-aligned trees.

    Starts from the best constant arm; each accepted split strictly lowers
    the worst-case regret of the whole tree, so the objective is
    non-increasing along the construction. Box uncertainty sets only.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    builder = _TreeBuilder(data, spec, pi0, min_leaf)
    arm0, obj = builder.best_constant()
    builder.assignment[:] = arm0
    if depth == 0 or data.n == 0:
        root = builder._leaf(arm0)
    else:
        root, obj = builder.grow(np.arange(data.n), depth, obj)
    policy = TreePolicy(root=root, m=data.m, d=data.d)
    objective = worst_case_regret(policy, pi0, data, spec)
    if fallback_to_baseline and objective > 0.0:
        return FitResult(policy=pi0, objective=0.0, fell_back=True, gamma=spec.gamma)
    return FitResult(policy=policy, objective=objective, fell_back=False, gamma=spec.gamma)
