"""Per-player Broyden approximations of D(grad_{x_i} f_i)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .game import Game, game_hessian
from .numerics import BlockLayout, block_get, spectral_norm

INIT_STRATEGIES = ("zero", "finite-difference", "analytic", "random")
DEFAULT_RANDOM_SCALE = 0.1


@dataclass(frozen=True)
class SecantState:
    """Matrices ``M_i`` of shape ``(d_i, d)``, one per player."""

    layout: BlockLayout
    matrices: tuple
    last_update_skipped: bool = False
    # per-player relative secant residual of the last update; empty if skipped
    secant_residuals: tuple = field(default=(), compare=False)

    def __post_init__(self):
        mats = tuple(np.array(m, dtype=float) for m in self.matrices)
        if len(mats) != self.layout.n_players:
            raise ValueError(f"expected {self.layout.n_players} matrices, got {len(mats)}")
        for i, m in enumerate(mats):
            shape = (self.layout.dims[i], self.layout.total)
            if m.shape != shape:
                raise ValueError(f"M_{i} has shape {m.shape}, expected {shape}")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"M_{i} has non-finite entries")
            m.setflags(write=False)
        object.__setattr__(self, "matrices", mats)

    @classmethod
    def _trusted(cls, layout, matrices, residuals):
        # shapes already known to be valid; skip the per-iteration checks
        obj = object.__new__(cls)
        object.__setattr__(obj, "layout", layout)
        object.__setattr__(obj, "matrices", matrices)
        object.__setattr__(obj, "last_update_skipped", False)
        object.__setattr__(obj, "secant_residuals", residuals)
        return obj

    def block(self, i: int, j: int) -> np.ndarray:
        """Block column ``[M_i]_j`` of shape ``(d_i, d_j)``."""
        return block_get(self.matrices[i], self.layout, None, j)

    def to_json(self) -> str:
        return json.dumps({
            "dims": list(self.layout.dims),
            "last_update_skipped": self.last_update_skipped,
            "matrices": [{"shape": list(m.shape), "entries": m.tolist()} for m in self.matrices],
        }, indent=2)


def init_secant(g: Game, w0, strategy: str = "random", seed: int = 0,
                scale: float = DEFAULT_RANDOM_SCALE) -> SecantState:
    """Initial secant matrices.

    ``random`` keeps the own-player diagonal blocks at their finite-difference
    values and draws every mixed block i.i.d. uniform on ``[-scale, scale]``.
    ``analytic`` uses the game's Jacobian evaluators (falling back to finite
    differences when there are none).
    """
    layout = g.layout
    w0 = layout.check_vector(w0, "w0")
    if strategy == "zero":
        mats = [np.zeros((d, layout.total)) for d in layout.dims]
    elif strategy == "finite-difference":
        mats = [g.player_jacobian(i, w0, mode="finite-difference") for i in range(layout.n_players)]
    elif strategy == "analytic":
        H = game_hessian(g, w0, mode="auto")
        mats = [H.row(i).copy() for i in range(layout.n_players)]
    elif strategy == "random":
        if not scale > 0:
            raise ValueError(f"random init scale must be positive, got {scale}")
        rng = np.random.default_rng(seed)
        mats = []
        for i in range(layout.n_players):
            m = rng.uniform(-scale, scale, size=(layout.dims[i], layout.total))
            own = layout.slice(i)
            m[:, own] = g.player_jacobian(i, w0, mode="finite-difference")[:, own]
            mats.append(m)
    else:
        raise ValueError(f"unknown secant init strategy {strategy!r}; choose from {INIT_STRATEGIES}")
    return SecantState(layout, tuple(mats))


def default_skip_tol(w_old: np.ndarray) -> float:
    return 1e-14 * (1.0 + float(np.linalg.norm(w_old)))


def broyden_increment(m: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """The rank-one correction ``(y - M s) s^T / ||s||^2`` added to ``M``."""
    return np.outer((y - m @ s) / float(s @ s), s)


def broyden_step(state: SecantState, s: np.ndarray, grad_change: Sequence[np.ndarray],
                 skip_tol: float) -> SecantState:
    """Rank-one update of every M_i from step ``s`` and gradient changes ``y_i``."""
    ss = float(s @ s)
    if np.sqrt(ss) <= skip_tol:
        return replace(state, last_update_skipped=True, secant_residuals=())
    mats = []
    residuals = []
    for m, y in zip(state.matrices, grad_change):
        m_new = m + broyden_increment(m, s, y)
        m_new.setflags(write=False)
        mats.append(m_new)
        r = m_new @ s - y
        residuals.append(np.sqrt(r @ r) / max(1.0, np.sqrt(y @ y)))
    if not all(np.isfinite(m).all() for m in mats):
        raise FloatingPointError("Broyden update produced non-finite entries")
    return SecantState._trusted(state.layout, tuple(mats), tuple(residuals))


def broyden_update(state: SecantState, g: Game, w_old, w_new,
                   skip_tol: Optional[float] = None) -> SecantState:
    layout = g.layout
    w_old = layout.check_vector(w_old, "w_old")
    w_new = layout.check_vector(w_new, "w_new")
    if skip_tol is None:
        skip_tol = default_skip_tol(w_old)
    if skip_tol < 0:
        raise ValueError("skip_tol must be nonnegative")
    s = w_new - w_old
    if np.linalg.norm(s) <= skip_tol:
        return replace(state, last_update_skipped=True, secant_residuals=())
    ys = [g.player_gradient(i, w_new) - g.player_gradient(i, w_old) for i in range(layout.n_players)]
    return broyden_step(state, s, ys, skip_tol)


def secant_error(state: SecantState, g: Game, w_ref, jacobians=None) -> List[float]:
    """Spectral-norm distance of each M_i from ``D(grad_{x_i} f_i)(w_ref)``.

    Reference Jacobians can be passed in to avoid recomputing them.
    """
    if jacobians is None:
        H = game_hessian(g, w_ref)
        jacobians = [H.row(i) for i in range(g.n_players)]
    return [spectral_norm(m - j) for m, j in zip(state.matrices, jacobians)]
