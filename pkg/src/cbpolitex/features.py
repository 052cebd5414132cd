"""State-action feature maps for linear action-value approximation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class FeatureMap:
    """Dense feature map ``phi(s, a)`` on a finite state-action space.

    The full ``(S*A, d)`` matrix is precomputed, rows ordered ``s * A + a``.
    """

    kind: str
    n_states: int
    n_actions: int
    table: np.ndarray = field(repr=False)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        tab = np.array(self.table, dtype=float)
        if tab.shape[0] != self.n_states * self.n_actions:
            raise ValueError("feature table must have S*A rows")
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)

    @property
    def d(self) -> int:
        return self.table.shape[1]

    def featurize(self, s: int, a: int) -> np.ndarray:
        return self.table[s * self.n_actions + a].copy()

    def matrix(self) -> np.ndarray:
        return self.table

    def predict(self, theta: np.ndarray) -> np.ndarray:
        """``<theta, phi(s, a)>`` for every pair, shaped ``(S, A)``."""
        return (self.table @ np.asarray(theta, dtype=float)).reshape(self.n_states, self.n_actions)


def from_function(n_states: int, n_actions: int, fn: Callable[[int, int], np.ndarray],
                  kind: str = "custom") -> FeatureMap:
    rows = [np.asarray(fn(s, a), dtype=float) for s in range(n_states) for a in range(n_actions)]
    return FeatureMap(kind, n_states, n_actions, np.vstack(rows))


def build_one_hot(n_states: int, n_actions: int) -> FeatureMap:
    return FeatureMap("one_hot", n_states, n_actions, np.eye(n_states * n_actions))


def _tiles_along(n_cells: int, size: int, offset: int) -> int:
    return (n_cells - 1 + offset) // size - offset // size + 1


def build_tile_coding(grid_shape: Sequence[int], n_actions: int, tile_size,
                      n_tilings: int = 1, offsets=None) -> FeatureMap:
    """Binary tile coding of grid cells with a separate block per action.

    ``tile_size`` is an int, a ``(rows, cols)`` pair, or a list with one
    size per tiling.  Tiling ``k`` is shifted by ``floor(k * size / n_tilings)``
    cells along each axis unless explicit integer ``offsets`` are given.
    States are indexed row-major over ``grid_shape``.
    """
    n_rows, n_cols = (int(x) for x in grid_shape)
    if n_tilings < 1:
        raise ValueError("n_tilings must be >= 1")
    sizes = _per_tiling_sizes(tile_size, n_tilings)
    if offsets is None:
        offsets = [(k * h // n_tilings, k * w // n_tilings) for k, (h, w) in enumerate(sizes)]
    offsets = [tuple(int(v) for v in o) for o in offsets]
    if len(offsets) != n_tilings:
        raise ValueError("need one offset per tiling")

    layouts = []
    for (h, w), (oy, ox) in zip(sizes, offsets):
        ny, nx = _tiles_along(n_rows, h, oy), _tiles_along(n_cols, w, ox)
        layouts.append((h, w, oy, ox, ny, nx))
    tiles_per_action = sum(ny * nx for *_, ny, nx in layouts)
    d = tiles_per_action * n_actions
    n_states = n_rows * n_cols

    table = np.zeros((n_states * n_actions, d))
    for s in range(n_states):
        row, col = divmod(s, n_cols)
        for a in range(n_actions):
            base = a * tiles_per_action
            for h, w, oy, ox, ny, nx in layouts:
                ty = (row + oy) // h - oy // h
                tx = (col + ox) // w - ox // w
                table[s * n_actions + a, base + ty * nx + tx] = 1.0
                base += ny * nx
    params = {"grid_shape": [n_rows, n_cols], "tile_size": [list(sz) for sz in sizes],
              "n_tilings": n_tilings, "offsets": [list(o) for o in offsets]}
    return FeatureMap("tile_coding", n_states, n_actions, table, params)


def _per_tiling_sizes(tile_size, n_tilings):
    def pair(ts):
        if isinstance(ts, (int, np.integer)):
            h = w = int(ts)
        else:
            h, w = (int(v) for v in ts)
        if h <= 0 or w <= 0:
            raise ValueError("tile sizes must be positive")
        return h, w

    if isinstance(tile_size, (list, tuple)) and tile_size and isinstance(
            tile_size[0], (list, tuple)):
        if len(tile_size) != n_tilings:
            raise ValueError("need one tile size per tiling")
        return [pair(ts) for ts in tile_size]
    return [pair(tile_size)] * n_tilings
