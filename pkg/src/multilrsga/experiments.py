"""Benchmark games and solver comparisons."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .game import Game, game_gradient
from .solvers import (
    SolverConfig,
    SolverTrace,
    estimate_linear_rate,
    oscillation_count,
    run_exact_sga,
    run_gradient_descent,
    run_multilrsga,
)

log = logging.getLogger(__name__)

OSCILLATION_BURN_IN = 100
RATE_BURN_IN = 100


@dataclass
class BenchmarkGame:
    name: str
    game: Game
    known_equilibrium: Optional[np.ndarray] = None
    default_start: Optional[np.ndarray] = None
    note: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.known_equilibrium is not None:
            res = np.linalg.norm(game_gradient(self.game, self.known_equilibrium))
            if res > 1e-10:
                raise ValueError(f"{self.name}: known equilibrium has residual {res:.3e}")


def _sech2(t):
    return 1.0 - np.tanh(t) ** 2


def paper_game() -> BenchmarkGame:
    """Three tanh-coupled players; player 1 owns (x1, x2), players 2 and 3 own y and z."""

    def f1(w):
        x1, x2, y, z = w
        return 0.5 * (x1 ** 2 + x2 ** 2) + x1 * np.tanh(y) + 0.9 * x2 * np.tanh(z)

    def f2(w):
        x1, x2, y, z = w
        return 0.5 * y ** 2 - y * np.tanh(x1) + 0.8 * y * np.tanh(z)

    def f3(w):
        x1, x2, y, z = w
        return 0.5 * z ** 2 - 0.9 * z * np.tanh(x2) - 0.8 * z * np.tanh(y)

    def g1(w):
        x1, x2, y, z = w
        return np.array([x1 + np.tanh(y), x2 + 0.9 * np.tanh(z)])

    def g2(w):
        x1, x2, y, z = w
        return np.array([y - np.tanh(x1) + 0.8 * np.tanh(z)])

    def g3(w):
        x1, x2, y, z = w
        return np.array([z - 0.9 * np.tanh(x2) - 0.8 * np.tanh(y)])

    def j1(w):
        x1, x2, y, z = w
        return np.array([[1.0, 0.0, _sech2(y), 0.0],
                         [0.0, 1.0, 0.0, 0.9 * _sech2(z)]])

    def j2(w):
        x1, x2, y, z = w
        return np.array([[-_sech2(x1), 0.0, 1.0, 0.8 * _sech2(z)]])

    def j3(w):
        x1, x2, y, z = w
        return np.array([[0.0, -0.9 * _sech2(x2), -0.8 * _sech2(y), 1.0]])

    game = Game((2, 1, 1), [f1, f2, f3], [g1, g2, g3], [j1, j2, j3])
    return BenchmarkGame(
        name="paper3",
        game=game,
        known_equilibrium=np.zeros(4),
        default_start=np.array([1.0, -0.8, 0.9, -0.7]),
        note="three-player tanh-coupled game; equilibrium at the origin",
    )


def bilinear_game(coupling: float = 1.0) -> BenchmarkGame:
    """``f_1 = c x y``, ``f_2 = -c x y``: pure rotation, GD spirals outwards."""
    c = float(coupling)
    game = Game(
        (1, 1),
        [lambda w: c * w[0] * w[1], lambda w: -c * w[0] * w[1]],
        [lambda w: np.array([c * w[1]]), lambda w: np.array([-c * w[0]])],
        [lambda w: np.array([[0.0, c]]), lambda w: np.array([[-c, 0.0]])],
    )
    return BenchmarkGame(
        name="bilinear",
        game=game,
        known_equilibrium=np.zeros(2),
        default_start=np.array([1.0, 0.0]),
        note="zero-sum bilinear game; H is purely antisymmetric",
        params={"coupling": c},
    )


def _quadratic_blocks(dims, rng, stability_margin, coupling):
    d = sum(dims)
    h = len(dims)
    P = []
    for di in dims:
        Q = rng.standard_normal((di, di))
        P.append(Q @ Q.T / di + stability_margin * np.eye(di))
    B = {}
    for i in range(h):
        for j in range(h):
            if i != j:
                B[i, j] = coupling * rng.standard_normal((dims[i], dims[j])) / np.sqrt(d)
    return P, B


def random_quadratic_game(h: int = 3, dims=None, seed: int = 0,
                          stability_margin: float = 0.5, coupling: float = 1.0,
                          max_retries: int = 100) -> BenchmarkGame:
    """``f_i = 1/2 x_i^T P_i x_i + x_i^T sum_{j != i} B_ij x_j`` with seeded P_i, B_ij.

    If the generated game Hessian is numerically singular the next seed is
    tried; ``params['seed_used']`` records which one was kept.
    """
    if dims is None:
        dims = [1] * h
    dims = tuple(int(x) for x in dims)
    if len(dims) != h:
        raise ValueError(f"dims has {len(dims)} entries for {h} players")
    if not stability_margin > 0:
        raise ValueError("stability_margin must be positive")

    for attempt in range(max_retries):
        used = seed + attempt
        P, B = _quadratic_blocks(dims, np.random.default_rng(used), stability_margin, coupling)
        rows = []
        for i in range(h):
            rows.append(np.hstack([P[i] if j == i else B[i, j] for j in range(h)]))
        J = np.vstack(rows)
        if np.linalg.cond(J) < 1e12:
            break
        log.warning("random_quadratic_game: seed %d gave a singular Hessian, retrying", used)
    else:
        raise RuntimeError(f"no nonsingular quadratic game after {max_retries} seeds")

    offsets = np.concatenate([[0], np.cumsum(dims)])
    slices = [slice(offsets[i], offsets[i + 1]) for i in range(h)]

    def make(i):
        Ji = rows[i].copy()
        Pi = P[i]
        si = slices[i]

        def grad(w):
            return Ji @ w

        def obj(w):
            xi = w[si]
            cross = Ji @ w - Pi @ xi
            return 0.5 * xi @ Pi @ xi + xi @ cross

        return obj, grad, (lambda w: Ji)

    parts = [make(i) for i in range(h)]
    game = Game(dims, [p[0] for p in parts], [p[1] for p in parts], [p[2] for p in parts])
    start = np.random.default_rng(used + 10_000).standard_normal(sum(dims))
    return BenchmarkGame(
        name="randquad",
        game=game,
        known_equilibrium=np.zeros(sum(dims)),
        default_start=start,
        note="seeded random quadratic game with constant Hessian",
        params={"h": h, "dims": list(dims), "seed": seed, "seed_used": used,
                "stability_margin": stability_margin, "coupling": coupling},
    )


GAMES = {
    "paper3": paper_game,
    "bilinear": bilinear_game,
    "randquad": random_quadratic_game,
}


def make_game(name: str, **params) -> BenchmarkGame:
    try:
        factory = GAMES[name]
    except KeyError:
        raise KeyError(f"unknown game {name!r}; available: {', '.join(GAMES)}") from None
    return factory(**params)


@dataclass
class ComparisonReport:
    game: str
    w0: np.ndarray
    traces: Dict[str, SolverTrace]
    rates: Dict[str, Optional[tuple]]
    iterations_to_tol: Dict[str, Optional[int]]
    oscillations: Dict[str, int]
    configs: Dict[str, SolverConfig]


def compare_solvers(bg: BenchmarkGame, cfg_multi: Optional[SolverConfig],
                    cfg_gd: Optional[SolverConfig], cfg_sga: Optional[SolverConfig] = None,
                    w0=None, rate_burn_in: int = RATE_BURN_IN,
                    oscillation_burn_in: int = OSCILLATION_BURN_IN,
                    diagnostics: bool = False) -> ComparisonReport:
    """Run the selected solvers from the same start and summarize them.

    With ``diagnostics`` the MultiLRSGA leg also records skew and secant
    errors against the game's known equilibrium.
    """
    w0 = bg.default_start if w0 is None else np.asarray(w0, dtype=float)
    if w0 is None:
        raise ValueError(f"game {bg.name} has no default start; pass w0")
    legs = {"multilrsga": cfg_multi, "gd": cfg_gd, "sga": cfg_sga}
    legs = {k: v for k, v in legs.items() if v is not None}
    if not legs:
        raise ValueError("no solver selected")
    tols = {(c.residual_tol, c.max_iter) for c in legs.values()}
    if len(tols) > 1:
        raise ValueError("all solver configs must share residual_tol and max_iter")

    if diagnostics and bg.known_equilibrium is None:
        raise ValueError(f"game {bg.name} has no known equilibrium for diagnostics")
    runners = {"multilrsga": run_multilrsga, "gd": run_gradient_descent, "sga": run_exact_sga}
    traces, rates, iters, osc = {}, {}, {}, {}
    for name, cfg in legs.items():
        if name == "multilrsga" and diagnostics:
            trace = run_multilrsga(bg.game, w0, cfg, w_star=bg.known_equilibrium)
        else:
            trace = runners[name](bg.game, w0, cfg)
        traces[name] = trace
        try:
            rates[name] = estimate_linear_rate(trace, rate_burn_in)
        except ValueError:
            rates[name] = None
        iters[name] = trace.iterations if trace.converged else None
        osc[name] = oscillation_count(trace.residual, oscillation_burn_in)
        log.info("%s on %s: %s after %d iterations", name, bg.name, trace.status, trace.iterations)
    return ComparisonReport(bg.name, w0, traces, rates, iters, osc, dict(legs))
