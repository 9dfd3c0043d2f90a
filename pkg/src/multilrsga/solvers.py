"""MultiLRSGA, the two baselines, and local-convergence diagnostics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .correction import build_skew_correction, exact_skew, skew_from_rows
from .game import Game, GameEvaluationError, game_gradient, game_hessian
from .numerics import spectral_norm, spectral_radius
from .secant import SecantState, broyden_step, default_skip_tol, init_secant

log = logging.getLogger(__name__)

DIVERGENCE_THRESHOLD = 1e12
STATUSES = ("converged", "max_iter", "diverged")


class SolverError(RuntimeError):
    """Evaluator failure inside a run; ``iteration`` says where."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


@dataclass
class SolverConfig:
    eta: float
    tau: float = 1.0
    max_iter: int = 50_000
    residual_tol: float = 1e-6
    secant_init: str = "random"
    seed: int = 0
    init_scale: float = 0.1
    skip_tol: Optional[float] = None  # None: 1e-14 * (1 + ||w_k||)
    record_every: int = 1

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not self.tau >= 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if not self.residual_tol > 0:
            raise ValueError(f"residual_tol must be > 0, got {self.residual_tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if self.skip_tol is not None and self.skip_tol < 0:
            raise ValueError("skip_tol must be >= 0")


@dataclass
class SolverTrace:
    solver: str
    k: np.ndarray
    residual: np.ndarray
    block_norms: np.ndarray  # (records, h)
    status: str
    iterations: int
    final_point: np.ndarray
    skew_err: Optional[np.ndarray] = None
    sec_err: Optional[np.ndarray] = None  # (records, h)
    final_state: Optional[SecantState] = None

    @property
    def final_residual(self) -> float:
        return float(self.residual[-1])

    @property
    def converged(self) -> bool:
        return self.status == "converged"


class _Recorder:
    def __init__(self, solver, g, every, w_star=None, lazy_skew=None):
        self.solver = solver
        self.layout = g.layout
        self.every = every
        self.rows = []
        self.skew = []
        self.sec = []
        self.diagnose = w_star is not None and lazy_skew is not None
        if self.diagnose:
            H = game_hessian(g, w_star)
            self.ref_rows = [H.row(i) for i in range(g.n_players)]
            self.ref_skew = skew_from_rows(g.layout, self.ref_rows).full
            self.lazy_skew = lazy_skew

    def maybe(self, k, w, res, force=False, state=None):
        if not force and k % self.every:
            return
        if self.rows and self.rows[-1][0] == k:
            return
        norms = [float(np.sqrt(b @ b)) for b in self.layout.split(w)]
        self.rows.append((k, res, norms))
        if self.diagnose:
            self.skew.append(spectral_norm(self.lazy_skew(state) - self.ref_skew))
            self.sec.append([spectral_norm(m - r) for m, r in zip(state.matrices, self.ref_rows)])

    def finish(self, status, k, w, state=None) -> SolverTrace:
        ks = np.array([r[0] for r in self.rows], dtype=int)
        res = np.array([r[1] for r in self.rows])
        norms = np.array([r[2] for r in self.rows]).reshape(len(self.rows), self.layout.n_players)
        return SolverTrace(
            solver=self.solver, k=ks, residual=res, block_norms=norms, status=status,
            iterations=k, final_point=w.copy(),
            skew_err=np.array(self.skew) if self.diagnose else None,
            sec_err=np.array(self.sec) if self.diagnose else None,
            final_state=state,
        )


def _gradient(g, w, k):
    try:
        return game_gradient(g, w)
    except GameEvaluationError as e:
        raise SolverError(f"iteration {k}: {e}", k) from e


def multilrsga_direction(A_full: np.ndarray, F: np.ndarray, tau: float) -> np.ndarray:
    """``(I - tau * A) F`` without forming the identity."""
    if tau == 0:
        return F
    return F - tau * (A_full @ F)


def component_step(state: SecantState, w: np.ndarray, F: np.ndarray,
                   eta: float, tau: float) -> np.ndarray:
    """One MultiLRSGA step written player by player.

    ``x_i + eta*tau/2 * sum_{j != i} ([M_i]_j - [M_j]_i^T) F_j - eta*F_i``.
    Mathematically identical to the assembled-matrix step.
    """
    layout = state.layout
    Fb = layout.split(F)
    out = np.empty_like(w)
    for i in range(layout.n_players):
        si = layout.slice(i)
        corr = np.zeros(layout.dims[i])
        for j in range(layout.n_players):
            if j == i:
                continue
            corr += (state.block(i, j) - state.block(j, i).T) @ Fb[j]
        out[si] = w[si] - eta * Fb[i] + 0.5 * eta * tau * corr
    return out


def matrix_step(state: SecantState, w: np.ndarray, F: np.ndarray,
                eta: float, tau: float) -> np.ndarray:
    A_hat = build_skew_correction(state)
    return w - eta * multilrsga_direction(A_hat.full, F, tau)


def _run(solver: str, g: Game, w0, cfg: SolverConfig, direction: Callable,
         state: Optional[SecantState] = None, w_star=None,
         callback: Optional[Callable] = None) -> SolverTrace:
    w = g.layout.check_vector(w0, "w0").copy()
    lazy = (lambda st: build_skew_correction(st).full) if state is not None else None
    rec = _Recorder(solver, g, cfg.record_every, w_star, lazy)
    F = _gradient(g, w, 0)
    k = 0
    while True:
        res = float(np.sqrt(F @ F))
        if res <= cfg.residual_tol:
            status = "converged"
        elif not np.isfinite(res) or res > DIVERGENCE_THRESHOLD:
            status = "diverged"
        elif k >= cfg.max_iter:
            status = "max_iter"
        else:
            status = None
        rec.maybe(k, w, res, force=status is not None, state=state)
        if status is not None:
            break

        w_new = w - cfg.eta * direction(k, w, F, state)
        if not np.all(np.isfinite(w_new)):
            rec.maybe(k, w, res, force=True, state=state)
            status = "diverged"
            break
        F_new = _gradient(g, w_new, k + 1)
        if state is not None:
            s = w_new - w
            skip = cfg.skip_tol if cfg.skip_tol is not None else default_skip_tol(w)
            ys = [b_new - b_old for b_new, b_old in zip(g.layout.split(F_new), g.layout.split(F))]
            state = broyden_step(state, s, ys, skip)
        if callback is not None:
            callback(k, w, w_new, F, F_new, state)
        w, F = w_new, F_new
        k += 1

    log.debug("%s finished: status=%s k=%d residual=%.3e", solver, status, k, res)
    return rec.finish(status, k, w, state)


def run_gradient_descent(g: Game, w0, cfg: SolverConfig, callback=None) -> SolverTrace:
    """Simultaneous game-gradient descent ``w <- w - eta * F(w)``."""
    return _run("gd", g, w0, cfg, lambda k, w, F, st: F, callback=callback)


def run_multilrsga(g: Game, w0, cfg: SolverConfig, state: Optional[SecantState] = None,
                   w_star=None, callback=None) -> SolverTrace:
    """MultiLRSGA: ``w <- w - eta * (I - tau * A_hat_k) F(w)``.

    ``A_hat_k`` is assembled from the per-player Broyden matrices, which are
    updated after every step from the gradients already computed for the
    next iteration. Pass ``state`` to override the configured secant init,
    and ``w_star`` to record skew/secant errors against the equilibrium.
    ``callback(k, w, w_new, F, F_new, state)`` sees each step after the
    Broyden update.
    """
    if state is None:
        state = init_secant(g, w0, cfg.secant_init, seed=cfg.seed, scale=cfg.init_scale)

    def direction(k, w, F, st):
        if cfg.tau == 0:
            return F
        return multilrsga_direction(build_skew_correction(st).full, F, cfg.tau)

    return _run("multilrsga", g, w0, cfg, direction, state=state, w_star=w_star,
                callback=callback)


def run_exact_sga(g: Game, w0, cfg: SolverConfig, callback=None) -> SolverTrace:
    """SGA with the exact antisymmetric part ``A(w_k)`` recomputed every step."""

    def direction(k, w, F, st):
        if cfg.tau == 0:
            return F
        try:
            A = exact_skew(g, w).full
        except GameEvaluationError as e:
            raise SolverError(f"iteration {k}: {e}", k) from e
        return multilrsga_direction(A, F, cfg.tau)

    return _run("sga", g, w0, cfg, direction, callback=callback)


@dataclass(frozen=True)
class FrozenMapReport:
    jacobian_norm: float
    spectral_radius: float
    lf_estimate: float
    step_condition_lhs: float
    eta: float
    tau: float
    n_players: int

    @property
    def contractive(self) -> bool:
        return self.jacobian_norm < 1.0

    @property
    def step_condition_ok(self) -> bool:
        return self.step_condition_lhs < 1.0

    def as_dict(self) -> dict:
        return {
            "eta": self.eta, "tau": self.tau, "n_players": self.n_players,
            "jacobian_norm": self.jacobian_norm, "spectral_radius": self.spectral_radius,
            "lf_estimate": self.lf_estimate, "step_condition_lhs": self.step_condition_lhs,
            "contractive": self.contractive, "step_condition_ok": self.step_condition_ok,
        }


def sample_ball(center: np.ndarray, radius: float, n: int, rng) -> np.ndarray:
    """``n`` points uniform in the Euclidean ball around ``center``."""
    d = center.shape[0]
    dirs = rng.standard_normal((n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=n) ** (1.0 / d)
    return center + dirs * radii[:, None]


def estimate_gradient_lipschitz(g: Game, center, radius: float = 1.0,
                                n_samples: int = 100, seed: int = 0) -> float:
    """Max of ``||H(w)||_2`` over a seeded cloud in the ball (center included)."""
    center = g.layout.check_vector(center, "center")
    rng = np.random.default_rng(seed)
    pts = np.vstack([center, sample_ball(center, radius, n_samples, rng)])
    return max(spectral_norm(game_hessian(g, p).full) for p in pts)


def estimate_jacobian_lipschitz(g: Game, center, radius: float = 1.0,
                                n_pairs: int = 200, seed: int = 0) -> List[float]:
    """Per-player sampled Lipschitz constants of ``w -> D(grad_{x_i} f_i)(w)``."""
    center = g.layout.check_vector(center, "center")
    rng = np.random.default_rng(seed)
    a = sample_ball(center, radius, n_pairs, rng)
    b = sample_ball(center, radius, n_pairs, rng)
    out = [0.0] * g.n_players
    for p, q in zip(a, b):
        Hp, Hq = game_hessian(g, p), game_hessian(g, q)
        dist = np.linalg.norm(p - q)
        for i in range(g.n_players):
            out[i] = max(out[i], float(np.linalg.norm(Hp.row(i) - Hq.row(i), 2)) / dist)
    return out


def frozen_map_analysis(g: Game, w_star, eta: float, tau: float,
                        lf_estimate: Optional[float] = None, radius: float = 1.0,
                        n_samples: int = 100, seed: int = 0) -> FrozenMapReport:
    """Jacobian of ``w -> w - eta (I - tau A(w*)) F(w)`` at the equilibrium.

    ``lf_estimate`` defaults to the largest sampled ``||H||_2`` in a ball of
    ``radius`` around ``w_star``.
    """
    w_star = g.layout.check_vector(w_star, "w_star")
    res = float(np.linalg.norm(game_gradient(g, w_star)))
    if res > 1e-8:
        raise ValueError(f"w_star is not stationary: ||F(w_star)|| = {res:.3e}")
    H = game_hessian(g, w_star)
    A = skew_from_rows(g.layout, [H.row(i) for i in range(g.n_players)]).full
    d = g.layout.total
    DT = np.eye(d) - eta * (np.eye(d) - tau * A) @ H.full
    if lf_estimate is None:
        lf_estimate = estimate_gradient_lipschitz(g, w_star, radius, n_samples, seed)
    h = g.n_players
    return FrozenMapReport(
        jacobian_norm=spectral_norm(DT),
        spectral_radius=spectral_radius(DT),
        lf_estimate=float(lf_estimate),
        step_condition_lhs=eta * tau * (h - 1) * float(lf_estimate),
        eta=eta, tau=tau, n_players=h,
    )


def estimate_linear_rate(trace: SolverTrace, burn_in: int = 0) -> Tuple[float, float]:
    """Fit ``log residual ~ a + k log q`` on records with ``k >= burn_in``.

    Returns ``(q_hat, r_squared)``.
    """
    mask = (trace.k >= burn_in) & (trace.residual > 0)
    ks = trace.k[mask].astype(float)
    logs = np.log(trace.residual[mask])
    if ks.size < 10:
        raise ValueError(f"need at least 10 positive residuals after burn-in {burn_in}, got {ks.size}")
    slope, intercept = np.polyfit(ks, logs, 1)
    fitted = intercept + slope * ks
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(np.exp(slope)), r2


def oscillation_count(residuals, burn_in: int = 100) -> int:
    """Sign changes between successive residual differences after ``burn_in``."""
    diffs = np.diff(np.asarray(residuals, dtype=float)[burn_in:])
    signs = np.sign(diffs)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))
