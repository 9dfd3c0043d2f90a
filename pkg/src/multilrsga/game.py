"""h-player differentiable games: game gradient, game Hessian, S/A split."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .numerics import BlockLayout, as_layout, block_get

Objective = Callable[[np.ndarray], float]
PlayerGradient = Callable[[np.ndarray], np.ndarray]
# w -> D(grad_{x_i} f_i)(w), shape (d_i, d)
PlayerJacobian = Callable[[np.ndarray], np.ndarray]

FD_REL_STEP = np.cbrt(np.finfo(float).eps)
DEFAULT_HESSIAN_FD_STEP = 1e-4


class GameEvaluationError(ValueError):
    """An evaluator returned a malformed or non-finite value."""

    def __init__(self, message: str, player: int):
        super().__init__(message)
        self.player = player


def _fd_partial_gradient(objective: Objective, layout: BlockLayout, i: int,
                         w: np.ndarray) -> np.ndarray:
    sl = layout.slice(i)
    out = np.empty(layout.dims[i])
    for p, idx in enumerate(range(sl.start, sl.stop)):
        step = FD_REL_STEP * max(1.0, abs(w[idx]))
        wp = w.copy()
        wm = w.copy()
        wp[idx] += step
        wm[idx] -= step
        out[p] = (objective(wp) - objective(wm)) / (wp[idx] - wm[idx])
    return out


class Game:
    """An h-player game ``min_{x_i} f_i(x_1, ..., x_h)``.

    ``gradients[i]`` returns the partial gradient of ``f_i`` w.r.t. the
    player's own block. Missing entries (``None``) are synthesized from the
    objective by central differences. ``jacobians[i]``, if given, returns the
    full row block ``D(grad_{x_i} f_i)(w)`` of shape ``(d_i, d)``.
    """

    def __init__(self, dims: Sequence[int] | BlockLayout,
                 objectives: Sequence[Objective],
                 gradients: Optional[Sequence[Optional[PlayerGradient]]] = None,
                 jacobians: Optional[Sequence[PlayerJacobian]] = None):
        self.layout = as_layout(dims)
        h = self.layout.n_players
        if len(objectives) != h:
            raise ValueError(f"expected {h} objectives, got {len(objectives)}")
        if gradients is None:
            gradients = [None] * h
        if len(gradients) != h:
            raise ValueError(f"expected {h} gradient evaluators, got {len(gradients)}")
        if jacobians is not None and len(jacobians) != h:
            raise ValueError(f"expected {h} Jacobian evaluators, got {len(jacobians)}")
        self.objectives = list(objectives)
        self._gradients = list(gradients)
        self.jacobians = None if jacobians is None else list(jacobians)

    @property
    def n_players(self) -> int:
        return self.layout.n_players

    @property
    def has_analytic_jacobians(self) -> bool:
        return self.jacobians is not None

    def player_gradient(self, i: int, w: np.ndarray) -> np.ndarray:
        fn = self._gradients[i]
        if fn is None:
            g = _fd_partial_gradient(self.objectives[i], self.layout, i, w)
        else:
            g = np.asarray(fn(w), dtype=float).reshape(-1)
        if g.shape != (self.layout.dims[i],):
            raise GameEvaluationError(
                f"gradient of player {i} has shape {g.shape}, expected ({self.layout.dims[i]},)", i
            )
        if not np.all(np.isfinite(g)):
            raise GameEvaluationError(f"gradient of player {i} is not finite at w={w}", i)
        return g

    def player_jacobian(self, i: int, w: np.ndarray,
                        fd_step: float = DEFAULT_HESSIAN_FD_STEP,
                        mode: str = "auto") -> np.ndarray:
        """``D(grad_{x_i} f_i)(w)``; ``mode`` is analytic, finite-difference or auto."""
        if mode == "auto":
            mode = "analytic" if self.has_analytic_jacobians else "finite-difference"
        shape = (self.layout.dims[i], self.layout.total)
        if mode == "analytic":
            if self.jacobians is None:
                raise ValueError("analytic Hessian requested but the game has no Jacobian evaluators")
            jac = np.asarray(self.jacobians[i](w), dtype=float)
            if jac.shape != shape:
                raise GameEvaluationError(
                    f"Jacobian of player {i} has shape {jac.shape}, expected {shape}", i
                )
        elif mode == "finite-difference":
            if fd_step <= 0:
                raise ValueError("fd_step must be positive")
            jac = np.empty(shape)
            for q in range(self.layout.total):
                step = fd_step * max(1.0, abs(w[q]))
                wp = w.copy()
                wm = w.copy()
                wp[q] += step
                wm[q] -= step
                jac[:, q] = (self.player_gradient(i, wp) - self.player_gradient(i, wm)) / (wp[q] - wm[q])
        else:
            raise ValueError(f"unknown Hessian mode {mode!r}")
        if not np.all(np.isfinite(jac)):
            raise GameEvaluationError(f"Jacobian of player {i} is not finite", i)
        return jac


def game_gradient(g: Game, w) -> np.ndarray:
    """Stacked vector of per-player partial gradients F(w)."""
    w = g.layout.check_vector(w)
    return np.concatenate([g.player_gradient(i, w) for i in range(g.n_players)])


@dataclass(frozen=True)
class GameHessian:
    layout: BlockLayout
    full: np.ndarray

    def block(self, i: int, j: int) -> np.ndarray:
        return block_get(self.full, self.layout, i, j)

    def row(self, i: int) -> np.ndarray:
        return self.full[self.layout.slice(i), :]


def game_hessian(g: Game, w, mode: str = "auto",
                 fd_step: float = DEFAULT_HESSIAN_FD_STEP) -> GameHessian:
    """Jacobian of the game gradient; block (i, j) is the mixed Hessian of f_i."""
    w = g.layout.check_vector(w)
    rows = [g.player_jacobian(i, w, fd_step=fd_step, mode=mode) for i in range(g.n_players)]
    return GameHessian(g.layout, np.vstack(rows))


def sa_decompose(h_mat: GameHessian) -> Tuple[np.ndarray, np.ndarray]:
    """Split H into its symmetric and antisymmetric parts.

    Each entry pair is averaged once and written to both positions, so the
    results are exactly symmetric / antisymmetric in floating point.
    """
    H = np.asarray(h_mat.full if isinstance(h_mat, GameHessian) else h_mat, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"game Hessian must be square, got shape {H.shape}")
    upper = np.triu_indices(H.shape[0], k=1)
    S = np.diag(np.diag(H)).astype(float)
    A = np.zeros_like(H)
    sym = 0.5 * (H[upper] + H.T[upper])
    skew = 0.5 * (H[upper] - H.T[upper])
    S[upper] = sym
    S[upper[1], upper[0]] = sym
    A[upper] = skew
    A[upper[1], upper[0]] = -skew
    return S, A


@dataclass(frozen=True)
class FirstOrderCheck:
    stationary: bool
    residual: float
    # smallest eigenvalue of each player's own-block Hessian (second-order test)
    min_eigenvalues: Optional[List[float]] = None

    def __bool__(self):
        return self.stationary


def check_first_order(g: Game, w, tol: float, second_order: bool = False) -> FirstOrderCheck:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    w = g.layout.check_vector(w)
    residual = float(np.linalg.norm(game_gradient(g, w)))
    eigs = None
    if second_order:
        H = game_hessian(g, w)
        eigs = []
        for i in range(g.n_players):
            Hii = H.block(i, i)
            eigs.append(float(np.min(np.linalg.eigvalsh(0.5 * (Hii + Hii.T)))))
    return FirstOrderCheck(residual <= tol, residual, eigs)
