"""Policy classes: constant, multinomial logistic, and axis-aligned trees.

A policy maps covariates x to a probability vector over the m arms.
Logistic policies use arm 0 as the softmax reference class, so their
parameter block has shape (m-1, d+1) with the intercept first in each row.
Tree splits follow the fixed convention "x[feature] <= threshold goes to
the left child"; a reversed split sense is expressed by swapping children.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

from .data import softmax
from .exceptions import UnsupportedPolicyError

__all__ = [
    "Policy",
    "ConstantPolicy",
    "LogisticPolicy",
    "HardenedLogisticPolicy",
    "TreeLeaf",
    "TreeNode",
    "TreePolicy",
    "policy_probability",
    "policy_gradient",
    "control_baseline",
    "uniform_baseline",
    "harden",
    "policy_to_json",
    "policy_from_json",
]


class Policy:
    """Base interface: prob_matrix(X) returns an (n, m) row-stochastic matrix."""

    m: int
    d: int

    def prob_matrix(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def prob(self, t: int, x: np.ndarray) -> float:
        if not 0 <= t < self.m:
            raise IndexError(f"arm {t} out of range for m={self.m}")
        return float(self.prob_matrix(np.atleast_2d(np.asarray(x, dtype=float)))[0, t])

    def observed_prob(self, X: np.ndarray, T: np.ndarray) -> np.ndarray:
        """pi(T_i | X_i) for each row."""
        probs = self.prob_matrix(X)
        return probs[np.arange(len(T)), np.asarray(T, dtype=np.int64)]


def _check_simplex(p: np.ndarray, m: int) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] != m:
        raise ValueError(f"probability vector has length {p.shape[0]}, expected {m}")
    if p.min() < 0 or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"not a probability vector: {p}")
    return p


@dataclass(frozen=True)
class ConstantPolicy(Policy):
    """Assigns the same arm probabilities to every unit."""

    p: np.ndarray
    d: int = 0

    def __post_init__(self):
        object.__setattr__(self, "p", _check_simplex(self.p, len(np.atleast_1d(self.p))))

    @property
    def m(self) -> int:
        return self.p.shape[0]

    def prob_matrix(self, X: np.ndarray) -> np.ndarray:
        n = np.atleast_2d(X).shape[0]
        return np.tile(self.p, (n, 1))


@dataclass(frozen=True)
class LogisticPolicy(Policy):
    """Multinomial logistic policy pi(t | x) proportional to exp(alpha_t + beta_t' x).

    theta has shape (m-1, d+1): row t-1 holds (alpha_t, beta_t) for arm t,
    and arm 0 is the zero-score reference.
    """

    theta: np.ndarray

    def __post_init__(self):
        th = np.atleast_2d(np.asarray(self.theta, dtype=float))
        if not np.all(np.isfinite(th)):
            raise ValueError("theta must be finite")
        object.__setattr__(self, "theta", th)

    @property
    def m(self) -> int:
        return self.theta.shape[0] + 1

    @property
    def d(self) -> int:
        return self.theta.shape[1] - 1

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        s = np.zeros((n, self.m))
        s[:, 1:] = self.theta[:, 0] + X @ self.theta[:, 1:].T
        return s

    def prob_matrix(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.scores(X))

    def grad_matrix(self, X: np.ndarray, T: np.ndarray) -> np.ndarray:
        """Gradients d pi(T_i | X_i) / d theta stacked as (n, m-1, d+1)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        probs = self.prob_matrix(X)
        T = np.asarray(T, dtype=np.int64)
        pT = probs[np.arange(n), T]
        # d pi_t / d s_u = pi_t (1[t=u] - pi_u) for the non-reference scores u >= 1.
        delta = (T[:, None] == np.arange(1, self.m)[None, :]).astype(float)
        coef = pT[:, None] * (delta - probs[:, 1:])  # (n, m-1)
        Z = np.hstack([np.ones((n, 1)), X])
        return coef[:, :, None] * Z[:, None, :]


@dataclass(frozen=True)
class HardenedLogisticPolicy(Policy):
    """Deterministic argmax version of a logistic policy (evaluation-time only)."""

    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", np.atleast_2d(np.asarray(self.theta, dtype=float)))

    @property
    def m(self) -> int:
        return self.theta.shape[0] + 1

    @property
    def d(self) -> int:
        return self.theta.shape[1] - 1

    def prob_matrix(self, X: np.ndarray) -> np.ndarray:
        scores = LogisticPolicy(self.theta).scores(X)
        out = np.zeros_like(scores)
        out[np.arange(scores.shape[0]), np.argmax(scores, axis=1)] = 1.0
        return out


def harden(pol: "LogisticPolicy") -> HardenedLogisticPolicy:
    """Map a logistic policy to its deterministic argmax limit."""
    if not isinstance(pol, LogisticPolicy):
        raise UnsupportedPolicyError(f"harden expects a LogisticPolicy, got {type(pol).__name__}")
    return HardenedLogisticPolicy(pol.theta)


@dataclass(frozen=True)
class TreeLeaf:
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _check_simplex(self.probs, len(np.atleast_1d(self.probs))))


@dataclass(frozen=True)
class TreeNode:
    feature: int
    threshold: float
    left: Union["TreeNode", TreeLeaf]
    right: Union["TreeNode", TreeLeaf]

    def __post_init__(self):
        if not np.isfinite(self.threshold):
            raise ValueError("tree threshold must be finite")


@dataclass(frozen=True)
class TreePolicy(Policy):
    """Axis-aligned decision tree with a probability vector at each leaf."""

    root: Union[TreeNode, TreeLeaf]
    m: int
    d: int

    def depth(self) -> int:
        def walk(node):
            if isinstance(node, TreeLeaf):
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def leaf_assignment(self, X: np.ndarray) -> np.ndarray:
        """Index of the leaf reached by each row, in left-to-right order."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0], dtype=np.int64)
        counter = [0]

        def walk(node, mask):
            if isinstance(node, TreeLeaf):
                out[mask] = counter[0]
                counter[0] += 1
                return
            go_left = X[mask, node.feature] <= node.threshold
            idx = np.flatnonzero(mask)
            left_mask = np.zeros_like(mask)
            left_mask[idx[go_left]] = True
            right_mask = np.zeros_like(mask)
            right_mask[idx[~go_left]] = True
            walk(node.left, left_mask)
            walk(node.right, right_mask)

        walk(self.root, np.ones(X.shape[0], dtype=bool))
        return out

    def prob_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((X.shape[0], self.m))

        def walk(node, mask):
            if isinstance(node, TreeLeaf):
                out[mask] = node.probs
                return
            go_left = X[:, node.feature] <= node.threshold
            walk(node.left, mask & go_left)
            walk(node.right, mask & ~go_left)

        walk(self.root, np.ones(X.shape[0], dtype=bool))
        return out


def policy_probability(pol: Policy, t: int, x) -> float:
    """pi(t | x); raises IndexError when t >= m."""
    return pol.prob(t, x)


def policy_gradient(pol: Policy, t: int, x) -> np.ndarray:
    """Gradient of pi(t | x) in the logistic parameters, shape (m-1, d+1)."""
    if not isinstance(pol, LogisticPolicy):
        raise UnsupportedPolicyError(
            f"policy_gradient supports only logistic policies, got {type(pol).__name__}"
        )
    if not 0 <= t < pol.m:
        raise IndexError(f"arm {t} out of range for m={pol.m}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return pol.grad_matrix(x, np.array([t]))[0]


def control_baseline(m: int) -> ConstantPolicy:
    """The always-assign-arm-0 baseline."""
    p = np.zeros(m)
    p[0] = 1.0
    return ConstantPolicy(p)


def uniform_baseline(m: int) -> ConstantPolicy:
    return ConstantPolicy(np.full(m, 1.0 / m))


def _node_to_obj(node):
    if isinstance(node, TreeLeaf):
        return {"leaf": list(map(float, node.probs))}
    return {
        "feature": int(node.feature),
        "threshold": float(node.threshold),
        "left": _node_to_obj(node.left),
        "right": _node_to_obj(node.right),
    }


def _node_from_obj(obj):
    if "leaf" in obj:
        return TreeLeaf(np.array(obj["leaf"], dtype=float))
    return TreeNode(
        feature=int(obj["feature"]),
        threshold=float(obj["threshold"]),
        left=_node_from_obj(obj["left"]),
        right=_node_from_obj(obj["right"]),
    )


def policy_to_json(pol: Policy) -> str:
    """Serialize to a JSON document {variant, m, d, payload}.

    Parameter round-trips are bit-faithful: floats are emitted via repr,
    which json restores exactly.
    """
    if isinstance(pol, ConstantPolicy):
        doc = {"variant": "constant", "m": pol.m, "d": pol.d, "payload": {"p": list(map(float, pol.p))}}
    elif isinstance(pol, LogisticPolicy):
        doc = {
            "variant": "logistic",
            "m": pol.m,
            "d": pol.d,
            "payload": {"theta": [list(map(float, row)) for row in pol.theta]},
        }
    elif isinstance(pol, HardenedLogisticPolicy):
        doc = {
            "variant": "hardened_logistic",
            "m": pol.m,
            "d": pol.d,
            "payload": {"theta": [list(map(float, row)) for row in pol.theta]},
        }
    elif isinstance(pol, TreePolicy):
        doc = {"variant": "tree", "m": pol.m, "d": pol.d, "payload": {"root": _node_to_obj(pol.root)}}
    else:
        raise UnsupportedPolicyError(f"cannot serialize {type(pol).__name__}")
    return json.dumps(doc, sort_keys=True)


def policy_from_json(text: str) -> Policy:
    doc = json.loads(text)
    variant = doc.get("variant")
    payload = doc.get("payload", {})
    if variant == "constant":
        return ConstantPolicy(np.array(payload["p"], dtype=float), d=int(doc.get("d", 0)))
    if variant == "logistic":
        return LogisticPolicy(np.array(payload["theta"], dtype=float))
    if variant == "hardened_logistic":
        return HardenedLogisticPolicy(np.array(payload["theta"], dtype=float))
    if variant == "tree":
        return TreePolicy(root=_node_from_obj(payload["root"]), m=int(doc["m"]), d=int(doc["d"]))
    raise UnsupportedPolicyError(f"unknown policy variant {variant!r}")
