"""Block antisymmetric corrections: the secant-based estimate and the exact one."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .game import Game, game_hessian
from .numerics import BlockLayout, spectral_norm
from .secant import SecantState


@dataclass(frozen=True)
class SkewCorrection:
    layout: BlockLayout
    full: np.ndarray

    def block(self, i: int, j: int) -> np.ndarray:
        return self.full[self.layout.slice(i), self.layout.slice(j)]


def skew_from_rows(layout: BlockLayout, rows: Sequence[np.ndarray]) -> SkewCorrection:
    """Assemble ``C_ij = (R_i[:, j] - R_j[:, i].T) / 2`` for i < j and mirror it.

    ``rows[i]`` is a ``(d_i, d)`` matrix (a secant matrix or an exact Jacobian
    row block). Diagonal blocks stay zero and the lower triangle is the exact
    negated transpose of the upper one.
    """
    slices = [layout.slice(i) for i in range(layout.n_players)]
    full = np.zeros((layout.total, layout.total))
    for i, si in enumerate(slices):
        for j in range(i + 1, len(slices)):
            sj = slices[j]
            c = 0.5 * (rows[i][:, sj] - rows[j][:, si].T)
            full[si, sj] = c
            full[sj, si] = -c.T
    return SkewCorrection(layout, full)


def build_skew_correction(state: SecantState) -> SkewCorrection:
    return skew_from_rows(state.layout, state.matrices)


def exact_skew(g: Game, w, mode: str = "auto") -> SkewCorrection:
    """Exact A(w) from the game Hessian, with zero diagonal blocks."""
    H = game_hessian(g, w, mode=mode)
    return skew_from_rows(g.layout, [H.row(i) for i in range(g.n_players)])


def skew_error(approx: SkewCorrection, exact: SkewCorrection) -> float:
    if approx.layout != exact.layout:
        raise ValueError(f"layout mismatch: {approx.layout.dims} vs {exact.layout.dims}")
    return spectral_norm(approx.full - exact.full)


@dataclass(frozen=True)
class SkewTrial:
    n_players: int
    dims: tuple
    delta: float  # max_i ||M_i - J_i||_2
    error: float  # ||A_hat - A||_2
    bound: float  # (h - 1) * delta

    @property
    def passed(self) -> bool:
        ok = self.error <= self.bound + 1e-12
        if self.n_players == 2:
            ok = ok and self.error <= self.delta + 1e-12
        return ok


def skew_error_trials(n_trials: int = 1000, seed: int = 0,
                      players=(2, 3, 4, 5), dims=(1, 2, 3),
                      deltas=(0.01, 0.1, 1.0)) -> list:
    """Randomized check of ``||A_hat - A||_2 <= (h - 1) * delta``.

    Each trial draws exact Jacobian rows ``J_i`` and perturbations of norm at
    most ``delta``, builds both corrections, and measures the gap. The
    reference ``delta`` and the gap use numpy's SVD-based 2-norm so the check
    does not depend on the power iteration under test elsewhere.
    """
    rng = np.random.default_rng(seed)
    trials = []
    for t in range(n_trials):
        h = int(players[t % len(players)])
        layout = BlockLayout(tuple(int(rng.choice(dims)) for _ in range(h)))
        delta = float(deltas[(t // len(players)) % len(deltas)])
        d = layout.total
        exact_rows = [rng.standard_normal((di, d)) for di in layout.dims]
        approx_rows = []
        for J in exact_rows:
            pert = rng.standard_normal(J.shape)
            pert *= delta * rng.uniform(0.5, 1.0) / np.linalg.norm(pert, 2)
            approx_rows.append(J + pert)
        achieved = max(np.linalg.norm(M - J, 2) for M, J in zip(approx_rows, exact_rows))
        A_hat = skew_from_rows(layout, approx_rows)
        A = skew_from_rows(layout, exact_rows)
        err = float(np.linalg.norm(A_hat.full - A.full, 2))
        trials.append(SkewTrial(h, layout.dims, float(achieved), err, (h - 1) * float(achieved)))
    return trials
