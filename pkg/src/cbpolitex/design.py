"""Greedy G-optimal design for choosing the state-action coreset."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .features import FeatureMap

log = logging.getLogger(__name__)


@dataclass
class Coreset:
    """Selected points with uniform weights.

    ``ginv`` is the ridge inverse ``(nu I + sum_{z in C} phi phi^T)^{-1}``
    maintained by rank-one updates; ``gram`` is the weighted Gram matrix
    ``sum_z omega(z) phi(z) phi(z)^T``.
    """

    points: list
    omega: np.ndarray
    gram: np.ndarray
    ginv: np.ndarray
    nu: float
    eps_prime: float
    phi: np.ndarray = field(repr=False)
    gains: list = field(default_factory=list)
    sup_leverage: float = float("nan")
    capped: bool = False

    def __len__(self):
        return len(self.points)

    @property
    def d(self) -> int:
        return self.ginv.shape[0]

    def kw_size_check(self) -> bool:
        """Whether ``|C| <= d(d+1)/2`` (informational only)."""
        return len(self.points) <= self.d * (self.d + 1) // 2

    def to_json(self) -> dict:
        return {
            "points": [[int(s), int(a)] for s, a in self.points],
            "omega": [float(w) for w in self.omega],
            "sup_leverage": float(self.sup_leverage),
            "eps_prime": float(self.eps_prime),
            "nu": float(self.nu),
            "d": int(self.d),
            "size": len(self.points),
            "capped": bool(self.capped),
        }


def _leverages(Phi: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    quad = np.einsum("nd,de,ne->n", Phi, ginv, Phi)
    return np.sqrt(np.clip(quad, 0.0, None))


def _finish(points, phi_rows, ginv, nu, eps_prime, gains, Phi_all, capped=False):
    n = len(points)
    omega = np.full(n, 1.0 / n) if n else np.zeros(0)
    phi = np.asarray(phi_rows, dtype=float).reshape(n, ginv.shape[0])
    gram = (phi * omega[:, None]).T @ phi if n else np.zeros_like(ginv)
    sup = float(_leverages(Phi_all, ginv).max())
    return Coreset(list(points), omega, gram, ginv, nu, eps_prime, phi, gains, sup, capped)


def build_coreset(features: FeatureMap, eps_prime: float, nu: float = 1.0,
                  pairs: Sequence[tuple[int, int]] | None = None,
                  on_insert: Callable[[int, tuple, np.ndarray], None] | None = None) -> Coreset:
    """Add the pair of largest leverage until every leverage is ``<= eps_prime``.

    ``pairs`` defaults to all of ``S x A`` in row-major order; ties go to the
    earliest pair.  A pair may be chosen more than once, in which case it is
    listed (and weighted) once per selection.
    """
    if eps_prime <= 0:
        raise ValueError("eps_prime must be positive")
    if nu <= 0:
        raise ValueError("nu must be positive")
    if pairs is None:
        pairs = [(s, a) for s in range(features.n_states) for a in range(features.n_actions)]
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty enumeration")
    Phi = np.vstack([features.featurize(s, a) for s, a in pairs])
    d = Phi.shape[1]
    ginv = np.eye(d) / nu
    points, rows, gains = [], [], []
    cap = features.n_states * features.n_actions
    capped = False
    while True:
        lev = _leverages(Phi, ginv)
        best = int(np.argmax(lev))
        g_max = float(lev[best])
        if g_max <= eps_prime:
            break
        if len(points) >= cap:
            log.warning("coreset hit the %d-insertion cap with max gain %.4g > %.4g",
                        cap, g_max, eps_prime)
            capped = True
            break
        x = Phi[best]
        gx = ginv @ x
        ginv = ginv - np.outer(gx, gx) / (1.0 + x @ gx)
        ginv = 0.5 * (ginv + ginv.T)
        points.append(pairs[best])
        rows.append(x)
        gains.append(g_max)
        if on_insert is not None:
            on_insert(len(points), pairs[best], ginv.copy())
    return _finish(points, rows, ginv, nu, eps_prime, gains, Phi, capped)


def full_enumeration_coreset(features: FeatureMap) -> Coreset:
    """Every pair once with uniform weight (the tabular / no-design setting)."""
    pairs = [(s, a) for s in range(features.n_states) for a in range(features.n_actions)]
    Phi = features.matrix()
    ginv = np.linalg.inv(np.eye(Phi.shape[1]) + Phi.T @ Phi)
    return _finish(pairs, Phi, ginv, 1.0, float("inf"), [], Phi)


def leverage(coreset: Coreset, phi: np.ndarray) -> float:
    """``sqrt(phi^T ginv phi)`` under the coreset's ridge inverse."""
    phi = np.asarray(phi, dtype=float)
    return float(np.sqrt(max(phi @ coreset.ginv @ phi, 0.0)))


def weighted_leverage(coreset: Coreset, phi: np.ndarray) -> float:
    """``||phi||`` in the pseudo-inverse of the weighted Gram ``G_omega``.

    This is the extrapolation factor of an unregularized weighted
    least-squares fit on the coreset.
    """
    phi = np.asarray(phi, dtype=float)
    return float(np.sqrt(max(phi @ np.linalg.pinv(coreset.gram) @ phi, 0.0)))
