"""Dense linear algebra helpers shared by the rest of the package.

Matrices are plain float64 numpy arrays. Player structure is described by a
:class:`BlockLayout`, which maps player indices (0-based) to column/row
slices of the joint vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple

import numpy as np

DEFAULT_SPECTRAL_TOL = 1e-10
DEFAULT_SPECTRAL_MAX_ITER = 10_000
# Seed of the power-iteration start vector. Changing it changes every
# spectral estimate in the last few digits, so keep it fixed.
POWER_ITERATION_SEED = 20240917
SQUARINGS = 60


class SpectralNormError(RuntimeError):
    """Power iteration did not settle within the iteration budget."""

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class BlockLayout:
    """Player dimensions ``(d_1, ..., d_h)`` of a joint strategy vector."""

    dims: Tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("layout needs at least one player")
        if any(d < 1 for d in dims):
            raise ValueError(f"player dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)
        off = [0]
        for d in dims:
            off.append(off[-1] + d)
        object.__setattr__(self, "_offsets", tuple(off))
        object.__setattr__(self, "_slices", tuple(slice(a, b) for a, b in zip(off, off[1:])))

    @property
    def n_players(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return sum(self.dims)

    @property
    def offsets(self) -> Tuple[int, ...]:
        return self._offsets

    def slice(self, i: int) -> slice:
        self._check_index(i)
        return self._slices[i]

    def split(self, w: np.ndarray) -> list:
        """Views of the per-player blocks of a joint vector."""
        return [w[sl] for sl in self._slices]

    def check_vector(self, w, name: str = "w") -> np.ndarray:
        """Validate and return ``w`` as a finite float vector of length d."""
        arr = np.asarray(w, dtype=float)
        if arr.ndim != 1 or arr.shape[0] != self.total:
            raise ValueError(
                f"{name} must be a vector of length {self.total}, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} has non-finite entries")
        return arr

    def _check_index(self, i: int):
        if not 0 <= i < self.n_players:
            raise IndexError(f"player index {i} out of range for {self.n_players} players")


def spectral_norm(m, tol: float = DEFAULT_SPECTRAL_TOL,
                  max_iter: int = DEFAULT_SPECTRAL_MAX_ITER) -> float:
    """Largest singular value of ``m`` by power iteration on the Gram matrix.

    The smaller of ``m.T @ m`` and ``m @ m.T`` is first raised to a high
    power by repeated squaring (so clustered top singular values still
    separate), applied to a seeded random start vector, and then refined by
    plain power iteration until the square root of the Rayleigh quotient
    moves by less than ``tol * max(1, sigma) / 10``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"spectral_norm needs a nonempty 2-D matrix, got shape {m.shape}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")

    gram = m.T @ m if m.shape[1] <= m.shape[0] else m @ m.T
    n = gram.shape[0]
    scale = np.linalg.norm(gram)
    if scale == 0.0:
        return 0.0

    rng = np.random.default_rng(POWER_ITERATION_SEED)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)

    # gram^(2^s), renormalized; converges to a multiple of the top eigenprojector
    p = gram / scale
    for _ in range(SQUARINGS):
        q = p @ p
        q /= np.linalg.norm(q)
        done = np.linalg.norm(q - p) <= 1e-15 * n
        p = q
        if done:
            break
    u = p @ v
    if np.linalg.norm(u) > 0:
        v = u / np.linalg.norm(u)

    sigma = -1.0
    for _ in range(max_iter):
        u = gram @ v
        lam = float(v @ u)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            # start vector fell into the null space; nudge it
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            continue
        new_sigma = np.sqrt(max(lam, 0.0))
        if abs(new_sigma - sigma) <= 0.1 * tol * max(1.0, new_sigma):
            return float(new_sigma)
        sigma = new_sigma
        v = u / nu
    raise SpectralNormError(
        f"power iteration did not converge in {max_iter} iterations", float(sigma)
    )


def spectral_radius(m) -> float:
    """Largest eigenvalue modulus of a small dense square matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("spectral_radius needs a square matrix")
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def block_get(m, layout: BlockLayout, i, j: int) -> np.ndarray:
    """Block ``(i, j)`` of ``m``.

    Pass ``i=None`` for a rectangular per-player matrix (``d_i x d``) whose
    rows are not partitioned; then only the block column ``j`` is taken.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[1] != layout.total:
        raise ValueError(f"matrix must have {layout.total} columns, got shape {m.shape}")
    cols = layout.slice(j)
    if i is None:
        return m[:, cols]
    if m.shape[0] != layout.total:
        raise ValueError(f"matrix must have {layout.total} rows for a block row index")
    return m[layout.slice(i), cols]


def assemble_block_matrix(layout: BlockLayout,
                          blocks: Mapping[Tuple[int, int], np.ndarray]) -> np.ndarray:
    """Place ``blocks[(i, j)]`` into a zero d x d matrix."""
    out = np.zeros((layout.total, layout.total))
    for (i, j), block in blocks.items():
        block = np.asarray(block, dtype=float)
        if not (0 <= i < layout.n_players and 0 <= j < layout.n_players):
            raise IndexError(f"block index ({i}, {j}) out of range")
        expected = (layout.dims[i], layout.dims[j])
        if block.shape != expected:
            raise ValueError(
                f"block ({i}, {j}) has shape {block.shape}, expected {expected}"
            )
        out[layout.slice(i), layout.slice(j)] = block
    return out


def as_layout(dims: Sequence[int] | BlockLayout) -> BlockLayout:
    return dims if isinstance(dims, BlockLayout) else BlockLayout(tuple(dims))
