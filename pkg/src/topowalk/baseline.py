"""Non-topological comparison walk on the square lattice, plus the
repeated-classical-search curve.

One step is coin-x, spin-dependent x shift, coin-y, spin-dependent y shift
with balanced coins whose off-diagonal entries carry per-site phases (the
quenched-disorder channel); the marked site uses the negated coins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolution import METRIC_DENSITY, ProbabilitySeries

try:
    from . import _fast
except ImportError:  # pragma: no cover
    _fast = None

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class SquareWalkConfig:
    """L x L periodic square lattice with an optional marked site and
    per-site coin phase offsets (zero when clean)."""

    L: int
    marked_site: tuple[int, int] | None = None
    phase_offsets: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("lattice size must be at least 2")
        if self.phase_offsets is not None and self.phase_offsets.shape != (self.L, self.L):
            raise ValueError("phase_offsets must have shape (L, L)")

    @property
    def n_sites(self) -> int:
        return self.L * self.L


def uniform_square_state(config: SquareWalkConfig) -> np.ndarray:
    state = np.empty((config.L, config.L, 2), dtype=np.complex128)
    state[...] = 1.0 / np.sqrt(2 * config.n_sites)
    return state


def _coin_tables(config: SquareWalkConfig):
    """Per-site upper off-diagonal coin entries for the x and y coins
    (already divided by sqrt 2) and the marked-site sign map.

    The marked site carries the clean (undisordered) negated coin.
    """
    delta = config.phase_offsets
    if delta is None:
        delta = np.zeros((config.L, config.L))
    else:
        delta = delta.copy()
    sign = np.ones((config.L, config.L))
    if config.marked_site is not None:
        sign[config.marked_site] = -1.0
        delta[config.marked_site] = 0.0
    phase = np.exp(1j * delta)
    ax = 1j * phase * _INV_SQRT2
    ay = -1j * phase * _INV_SQRT2
    return ax, ay, sign


def coin_matrices(delta: float, sign: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """The 2x2 x- and y-coins for a single site (reference form)."""
    cx = sign * _INV_SQRT2 * np.array(
        [[1.0, 1j * np.exp(1j * delta)], [1j * np.exp(-1j * delta), 1.0]]
    )
    cy = sign * _INV_SQRT2 * np.array(
        [[1.0, -1j * np.exp(1j * delta)], [-1j * np.exp(-1j * delta), 1.0]]
    )
    return cx, cy


def square_step(state: np.ndarray, config: SquareWalkConfig) -> np.ndarray:
    """Reference implementation of one step (numpy, layer by layer)."""
    ax, ay, sign = _coin_tables(config)
    up, down = state[..., 0], state[..., 1]
    mid = np.empty_like(state)
    mid[..., 0] = sign * (_INV_SQRT2 * up + ax * down)
    mid[..., 1] = sign * (-np.conj(ax) * up + _INV_SQRT2 * down)
    mid[..., 0] = np.roll(mid[..., 0], 1, axis=0)
    mid[..., 1] = np.roll(mid[..., 1], -1, axis=0)
    up, down = mid[..., 0], mid[..., 1]
    out = np.empty_like(state)
    out[..., 0] = sign * (_INV_SQRT2 * up + ay * down)
    out[..., 1] = sign * (-np.conj(ay) * up + _INV_SQRT2 * down)
    out[..., 0] = np.roll(out[..., 0], 1, axis=1)
    out[..., 1] = np.roll(out[..., 1], -1, axis=1)
    return out


def square_evolve_record(
    state0: np.ndarray,
    n_steps: int,
    config: SquareWalkConfig,
    site: tuple[int, int],
    use_fast: bool | None = None,
) -> ProbabilitySeries:
    """Site-density series at ``site`` over n_steps of the square walk."""
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if use_fast is None:
        use_fast = _fast is not None
    if use_fast:
        ax, ay, sign = _coin_tables(config)
        values, _ = _fast.evolve_series_square(
            state0.copy(), ax, ay, sign, n_steps, site[0], site[1]
        )
        return ProbabilitySeries(values=values, metric=METRIC_DENSITY)
    def density(state):
        up = state[site[0], site[1], 0]
        down = state[site[0], site[1], 1]
        return float(up.real**2 + up.imag**2 + down.real**2 + down.imag**2)

    values = np.empty(n_steps + 1)
    values[0] = density(state0)
    state = state0
    for t in range(1, n_steps + 1):
        state = square_step(state, config)
        values[t] = density(state)
    return ProbabilitySeries(values=values, metric=METRIC_DENSITY)


def classical_curve(n_sites: int, n_steps: int) -> ProbabilitySeries:
    """Repeated classical search: probability t / N after t node checks."""
    if n_steps > n_sites:
        raise ValueError(f"classical probability would exceed 1: T={n_steps} > N={n_sites}")
    values = np.arange(n_steps + 1, dtype=float) / n_sites
    return ProbabilitySeries(values=values, metric="classical")
