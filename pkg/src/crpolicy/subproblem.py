"""Exact worst-case solvers for the weighted-fractional inner problem.

Both solvers maximize the self-normalized objective

    Q(W) = sum_i r_i W_i / sum_i W_i

over per-unit weight boxes a_i <= W_i <= b_i, optionally intersected with a
mean absolute-deviation budget around the nominal weights. The box case has
a closed-form threshold solution: sort the units by r (ties broken on
b - a), and the optimum assigns a below some cut index and b at or above
it, with the cut found by scanning a discrete concave unimodal sequence.

All functions operate on one treatment arm at a time; callers slice their
data per arm and sum the arm values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import SolverError
from .simplex import simplex_solve

__all__ = ["SubproblemSolution", "solve_box", "solve_budgeted", "oracle_box", "threshold_values"]


@dataclass(frozen=True)
class SubproblemSolution:
    """Worst-case value, the weights attaining it, and solver diagnostics.

    `threshold` is the 1-based cut index k* in [1, k+1] for the box set; in
    the sorted order the first k*-1 units sit at their lower bounds.
    `multiplier` is the Lagrange multiplier of the budget constraint and is
    set only by the budgeted solver.
    """

    value: float
    weights: np.ndarray
    threshold: Optional[int] = None
    multiplier: Optional[float] = None


def _validated(r, a, b) -> tuple:
    r = np.asarray(r, dtype=float).reshape(-1)
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if r.size == 0:
        raise ValueError("subproblem needs at least one unit")
    if not (r.shape == a.shape == b.shape):
        raise ValueError("r, a, b must have equal length")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("r, a, b must be finite")
    if a.min() <= 0.0:
        raise ValueError("lower weight bounds must be strictly positive")
    if np.any(a > b):
        raise ValueError("need a_i <= b_i for every unit")
    return r, a, b


def threshold_values(r: np.ndarray, a: np.ndarray, b: np.ndarray):
    """The candidate objective values lambda(k), k = 1..n+1, in sorted order.

    lambda(k) puts the first k-1 sorted units at a and the rest at b.
    Returns (lams, order) where order is the lexicographic sort permutation
    on (r_i, b_i - a_i) ascending.
    """
    order = np.lexsort((b - a, r))
    rs, as_, bs = r[order], a[order], b[order]
    pre_ar = np.concatenate([[0.0], np.cumsum(as_ * rs)])
    pre_a = np.concatenate([[0.0], np.cumsum(as_)])
    pre_br = np.concatenate([[0.0], np.cumsum(bs * rs)])
    pre_b = np.concatenate([[0.0], np.cumsum(bs)])
    tot_br, tot_b = pre_br[-1], pre_b[-1]
    num = pre_ar + (tot_br - pre_br)
    den = pre_a + (tot_b - pre_b)
    return num / den, order


def solve_box(r, a, b) -> SubproblemSolution:
    """Maximize sum(r W) / sum(W) over the box prod_i [a_i, b_i], exactly.

    O(k log k): sort once, then evaluate every threshold via prefix sums and
    take the argmax of the unimodal candidate sequence.
    """
    r, a, b = _validated(r, a, b)
    lams, order = threshold_values(r, a, b)
    k_star = int(np.argmax(lams))  # 0-based count of units at the lower bound
    weights_sorted = np.concatenate([a[order][:k_star], b[order][k_star:]])
    weights = np.empty_like(weights_sorted)
    weights[order] = weights_sorted
    return SubproblemSolution(
        value=float(lams[k_star]),
        weights=weights,
        threshold=k_star + 1,
    )


_MASK_CACHE: dict = {}


def _corner_masks(k: int) -> np.ndarray:
    masks = _MASK_CACHE.get(k)
    if masks is None:
        ints = np.arange(2**k, dtype=np.uint32)
        masks = (ints[:, None] >> np.arange(k)) & 1
        masks = masks.astype(float)
        _MASK_CACHE[k] = masks
    return masks


def oracle_box(r, a, b) -> float:
    """Brute-force reference for solve_box: enumerate all 2^k box corners.

    The objective is linear-fractional, so its maximum over a box is
    attained at a vertex. Refuses k > 20.
    """
    r, a, b = _validated(r, a, b)
    k = r.size
    if k > 20:
        raise ValueError(f"oracle_box enumerates 2^k corners; k={k} is too large (max 20)")
    best = -np.inf
    chunk = 1 << min(k, 14)
    masks_full = _corner_masks(min(k, 14))
    for start in range(0, 2**k, chunk):
        if k <= 14:
            masks = masks_full
        else:
            ints = np.arange(start, start + chunk, dtype=np.uint32)
            masks = ((ints[:, None] >> np.arange(k)) & 1).astype(float)
        W = a + masks * (b - a)
        vals = (W @ r) / W.sum(axis=1)
        best = max(best, float(vals.max()))
        if k <= 14:
            break
    return best


def _nominal_solution(r, w_tilde, multiplier=None) -> SubproblemSolution:
    value = float(np.dot(r, w_tilde) / w_tilde.sum())
    return SubproblemSolution(value=value, weights=w_tilde.copy(), multiplier=multiplier)


def solve_budgeted(r, a, b, w_tilde, lam: float, route: str = "simplex") -> SubproblemSolution:
    """Maximize sum(r W) / sum(W) over the box intersected with the budget
    (1/k) sum_i |W_i - W_tilde_i| <= lam.

    The default route linearizes the fractional program by the
    Charnes-Cooper change of variables (w = psi W, psi = 1 / sum W) and
    solves the resulting LP with a dense simplex. `route="eta"` instead
    bisects the budget's Lagrange multiplier, solving each relaxed inner
    problem exactly by a threshold scan over per-unit up/down deviations;
    both routes agree to high precision and the second serves as a
    cross-check on the first.
    """
    r, a, b = _validated(r, a, b)
    w_tilde = np.asarray(w_tilde, dtype=float).reshape(-1)
    if w_tilde.shape != r.shape:
        raise ValueError("w_tilde must match r in length")
    if np.any(w_tilde < a - 1e-12) or np.any(w_tilde > b + 1e-12):
        raise ValueError("nominal weights must lie inside [a, b]")
    if not np.isfinite(lam) or lam < 0.0:
        raise ValueError(f"budget must be a finite real >= 0, got {lam}")
    if lam == 0.0:
        return _nominal_solution(r, w_tilde)
    total = lam * r.size
    # A slack budget cannot bind: fall back to the plain box solution.
    box = solve_box(r, a, b)
    if np.abs(box.weights - w_tilde).sum() <= total + 1e-12:
        return SubproblemSolution(box.value, box.weights, multiplier=0.0)
    if route == "simplex":
        return _budgeted_simplex(r, a, b, w_tilde, total)
    if route == "eta":
        return _budgeted_eta(r, a, b, w_tilde, total)
    raise ValueError(f"unknown route {route!r}; use 'simplex' or 'eta'")


def _budgeted_simplex(r, a, b, w_tilde, total) -> SubproblemSolution:
    """Charnes-Cooper LP: variables (w_1..w_k, d_1..d_k, psi), all >= 0.

        max  r' w
        s.t. sum w = 1
             a_i psi - w_i <= 0,   w_i - b_i psi <= 0
             w_i - W~_i psi - d_i <= 0,   W~_i psi - w_i - d_i <= 0
             sum d - total * psi <= 0
    """
    k = r.size
    nvar = 2 * k + 1
    c = np.zeros(nvar)
    c[:k] = -r  # simplex minimizes
    rows = 4 * k + 1
    A_ub = np.zeros((rows, nvar))
    b_ub = np.zeros(rows)
    eye = np.eye(k)
    A_ub[0:k, :k] = -eye
    A_ub[0:k, -1] = a
    A_ub[k : 2 * k, :k] = eye
    A_ub[k : 2 * k, -1] = -b
    A_ub[2 * k : 3 * k, :k] = eye
    A_ub[2 * k : 3 * k, k : 2 * k] = -eye
    A_ub[2 * k : 3 * k, -1] = -w_tilde
    A_ub[3 * k : 4 * k, :k] = -eye
    A_ub[3 * k : 4 * k, k : 2 * k] = -eye
    A_ub[3 * k : 4 * k, -1] = w_tilde
    A_ub[4 * k, k : 2 * k] = 1.0
    A_ub[4 * k, -1] = -total
    A_eq = np.zeros((1, nvar))
    A_eq[0, :k] = 1.0
    res = simplex_solve(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.ones(1))
    psi = res.x[-1]
    if psi <= 0.0:
        raise SolverError(f"degenerate Charnes-Cooper scale psi={psi:.3e}")
    weights = np.clip(res.x[:k] / psi, a, b)
    value = float(np.dot(r, weights) / weights.sum())
    # The min-form dual of the budget row is <= 0; the reported multiplier is its negation.
    eta = float(max(0.0, -res.dual_ub[4 * k]))
    return SubproblemSolution(value=value, weights=weights, multiplier=eta)


def _deviation_directions(r, a, b, w_tilde, eta):
    """Per-direction numerator slopes, denominator slopes, and capacities.

    Direction 2i   raises W_i toward b_i (slope r_i - eta, denominator +1).
    Direction 2i+1 lowers W_i toward a_i (slope -r_i - eta, denominator -1).
    """
    k = r.size
    alpha = np.empty(2 * k)
    beta = np.empty(2 * k)
    cap = np.empty(2 * k)
    alpha[0::2] = r - eta
    alpha[1::2] = -r - eta
    beta[0::2] = 1.0
    beta[1::2] = -1.0
    cap[0::2] = b - w_tilde
    cap[1::2] = w_tilde - a
    return alpha, beta, cap


def _relaxed_value(r, a, b, w_tilde, eta, bonus):
    """Exact max of [sum r W - eta sum|W - W~| + bonus] / sum W over the box.

    Piecewise-linear parametric root-find: F(lam) = max_W {num - lam * den}
    is strictly decreasing with slope -sum(W) < 0, so its root equals the
    optimum. Breakpoints occur where a direction's reduced slope changes
    sign; between breakpoints F is linear.
    """
    alpha, beta, cap = _deviation_directions(r, a, b, w_tilde, eta)
    c0 = float(np.dot(r, w_tilde)) + bonus
    d0 = float(w_tilde.sum())
    # Breakpoints lam where alpha_j - lam * beta_j changes sign (beta = +-1).
    bp = np.unique(alpha * beta)

    def F(lam):
        act = (alpha - lam * beta) > 0.0
        num = c0 + float(np.dot(cap[act], alpha[act]))
        den = d0 + float(np.dot(cap[act], beta[act]))
        return num - lam * den, num, den, act

    # F is continuous, piecewise linear, strictly decreasing (slope -sum W).
    # Binary search for the first breakpoint with F <= 0, then solve the
    # linear piece just below it exactly.
    lo, hi = 0, bp.size
    while lo < hi:
        mid = (lo + hi) // 2
        val, *_ = F(bp[mid])
        if val > 0:
            lo = mid + 1
        else:
            hi = mid
    if lo == 0:
        probe = bp[0] - 1.0
    elif lo == bp.size:
        probe = bp[-1] + 1.0
    else:
        probe = 0.5 * (bp[lo - 1] + bp[lo])
    _, num, den, act = F(probe)
    lam_star = num / den
    # Recover the attaining deviations on that piece.
    z = np.where(act, cap, 0.0)
    dev = z[0::2] - z[1::2]
    W = w_tilde + dev
    return lam_star, W


def _budgeted_eta(r, a, b, w_tilde, total) -> SubproblemSolution:
    """Outer bisection on the budget multiplier eta >= 0.

    g(eta) = max over the box of the budget-relaxed objective is convex
    with subgradient sign given by (total - deviation at the argmax); the
    minimizing eta is bracketed by doubling and then bisected. Feasible
    attaining weights are recovered by a final Dinkelbach polish of the
    budget-constrained knapsack at the converged value.
    """

    def slack(eta):
        _, W = _relaxed_value(r, a, b, w_tilde, eta, bonus=eta * total)
        return total - np.abs(W - w_tilde).sum()

    lo = 0.0
    hi = 1.0
    for _ in range(100):
        if slack(hi) >= 0:
            break
        hi *= 2.0
    else:
        raise SolverError("budget multiplier bracket did not close")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if slack(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    eta = hi
    value, _ = _relaxed_value(r, a, b, w_tilde, eta, bonus=eta * total)
    # Dinkelbach polish on the primal problem for exact feasible weights.
    lam = value
    W = w_tilde
    for _ in range(100):
        W = _knapsack_argmax(r - lam, a, b, w_tilde, total)
        new_lam = float(np.dot(r, W) / W.sum())
        if abs(new_lam - lam) <= 1e-15 * max(1.0, abs(lam)):
            lam = new_lam
            break
        lam = new_lam
    return SubproblemSolution(value=float(lam), weights=W, multiplier=float(eta))


def _knapsack_argmax(score, a, b, w_tilde, total):
    """Maximize score' W over the box subject to sum |W - W~| <= total.

    Fractional-knapsack greedy: each unit's beneficial direction earns
    |score_i| per unit of budget; spend the budget on the largest gains.
    """
    gain = np.abs(score)
    cap = np.where(score > 0, b - w_tilde, w_tilde - a)
    order = np.argsort(-gain, kind="stable")
    W = w_tilde.astype(float).copy()
    remaining = total
    for j in order:
        if remaining <= 0 or gain[j] <= 0:
            break
        move = min(cap[j], remaining)
        if move <= 0:
            continue
        W[j] += move if score[j] > 0 else -move
        remaining -= move
    return W
