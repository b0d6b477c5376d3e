"""Matrix-free single-step evolution of the split-step walk.

One step applies, in order, R(theta1), T_v1, R(theta2), T_v2, R(theta1),
T_v3, where R is the real spin rotation

    R(theta) = [[cos(theta/2), -sin(theta/2)],
                [sin(theta/2),  cos(theta/2)]]

and T_v shifts spin-up amplitudes by +v and spin-down by -v with periodic
wrap.  All operations act on (L, L, 2) arrays and broadcast over leading
batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import SHIFT_VECTORS, LatticeConfig

try:
    from . import _fast
except ImportError:  # pragma: no cover - numba is a declared dependency
    _fast = None


@dataclass(frozen=True)
class AngleField:
    """Per-site rotation angles: uniform bulk values, an optional defect
    override, and optional quenched disorder offsets.

    The defect site keeps exactly (defect_theta1, defect_theta2); disorder
    never applies there.
    """

    config: LatticeConfig
    theta1: float
    theta2: float
    defect_site: tuple[int, int] | None = None
    defect_theta1: float = 0.0
    defect_theta2: float = 0.0
    disorder1: np.ndarray | None = field(default=None, repr=False)
    disorder2: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        L = self.config.L
        for name, d in (("disorder1", self.disorder1), ("disorder2", self.disorder2)):
            if d is not None and d.shape != (L, L):
                raise ValueError(f"{name} must have shape ({L}, {L}), got {d.shape}")
        if self.defect_site is not None:
            m, n = self.defect_site
            if not (0 <= m < L and 0 <= n < L):
                raise ValueError(f"defect site {self.defect_site} outside lattice of size {L}")

    def effective_theta(self, which: int) -> np.ndarray:
        """Effective per-site angle map for rotation layer 1 or 2."""
        if which not in (1, 2):
            raise ValueError("rotation layer must be 1 or 2")
        bulk = self.theta1 if which == 1 else self.theta2
        disorder = self.disorder1 if which == 1 else self.disorder2
        L = self.config.L
        theta = np.full((L, L), float(bulk))
        if disorder is not None:
            theta = theta + disorder
        if self.defect_site is not None:
            theta[self.defect_site] = self.defect_theta1 if which == 1 else self.defect_theta2
        return theta


class StepKernel:
    """Precomputed rotation coefficients for repeated application of the
    step with a fixed angle field."""

    def __init__(self, angles: AngleField):
        self.config = angles.config
        half1 = 0.5 * angles.effective_theta(1)
        half2 = 0.5 * angles.effective_theta(2)
        self.c1, self.s1 = np.cos(half1), np.sin(half1)
        self.c2, self.s2 = np.cos(half2), np.sin(half2)

    def apply(self, state: np.ndarray) -> np.ndarray:
        out = rotate(state, self.c1, self.s1)
        translate_inplace(out, 1)
        out = rotate(out, self.c2, self.s2)
        translate_inplace(out, 2)
        out = rotate(out, self.c1, self.s1)
        translate_inplace(out, 3)
        return out


def rotate(state: np.ndarray, c: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Apply the per-site spin rotation with coefficients c = cos(theta/2),
    s = sin(theta/2); broadcasts over leading batch axes."""
    up = state[..., 0]
    down = state[..., 1]
    out = np.empty_like(state)
    out[..., 0] = c * up - s * down
    out[..., 1] = s * up + c * down
    return out


def apply_rotation_layer(state: np.ndarray, which: int, angles: AngleField) -> np.ndarray:
    half = 0.5 * angles.effective_theta(which)
    return rotate(state, np.cos(half), np.sin(half))


def translate_inplace(state: np.ndarray, direction: int) -> None:
    """Shift spin-up by +v_direction and spin-down by -v_direction.

    Pure permutation of amplitudes; norm is preserved exactly.
    """
    dm, dn = SHIFT_VECTORS[direction]
    axes = (state.ndim - 3, state.ndim - 2)
    state[..., 0] = np.roll(state[..., 0], shift=(dm, dn), axis=axes)
    state[..., 1] = np.roll(state[..., 1], shift=(-dm, -dn), axis=axes)


def apply_translation(state: np.ndarray, direction: int) -> np.ndarray:
    out = state.copy()
    translate_inplace(out, direction)
    return out


def step(state: np.ndarray, angles: AngleField) -> np.ndarray:
    """One full step of the walk; pure function, O(N) work."""
    return StepKernel(angles).apply(state)


@dataclass(frozen=True)
class ProbabilitySeries:
    """Defect-probability time series; values[t] for t = 0..T."""

    values: np.ndarray
    metric: str

    def __len__(self) -> int:
        return len(self.values)


METRIC_DENSITY = "site-density"
METRIC_COHERENT = "coherent-sum"


def _measure(state: np.ndarray, site: tuple[int, int], metric: str) -> float:
    m, n = site
    up = state[m, n, 0]
    down = state[m, n, 1]
    if metric == METRIC_DENSITY:
        return float(up.real**2 + up.imag**2 + down.real**2 + down.imag**2)
    if metric == METRIC_COHERENT:
        total = up + down
        return float(total.real**2 + total.imag**2)
    raise ValueError(f"unknown metric {metric!r}")


def evolve_record(
    state0: np.ndarray,
    n_steps: int,
    angles: AngleField,
    defect_site: tuple[int, int],
    metric: str = METRIC_DENSITY,
    use_fast: bool | None = None,
) -> ProbabilitySeries:
    """Evolve for n_steps and record the defect probability at every time,
    including t = 0.

    The fused kernel and the layered reference path produce bitwise
    identical amplitudes; ``use_fast`` forces one of them (None = auto).
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if metric not in (METRIC_DENSITY, METRIC_COHERENT):
        raise ValueError(f"unknown metric {metric!r}")
    if use_fast is None:
        use_fast = _fast is not None
    if use_fast:
        kernel = StepKernel(angles)
        values, _ = _fast.evolve_series_triangular(
            state0.copy(), kernel.c1, kernel.s1, kernel.c2, kernel.s2,
            n_steps, defect_site[0], defect_site[1], metric == METRIC_COHERENT,
        )
        return ProbabilitySeries(values=values, metric=metric)
    kernel = StepKernel(angles)
    values = np.empty(n_steps + 1)
    values[0] = _measure(state0, defect_site, metric)
    state = state0
    for t in range(1, n_steps + 1):
        state = kernel.apply(state)
        values[t] = _measure(state, defect_site, metric)
    return ProbabilitySeries(values=values, metric=metric)


def evolve(state0: np.ndarray, n_steps: int, angles: AngleField) -> np.ndarray:
    """Final state after n_steps."""
    kernel = StepKernel(angles)
    if _fast is not None and n_steps > 0:
        state = state0.copy()
        tmp = np.empty_like(state)
        dst = np.empty_like(state)
        for _ in range(n_steps):
            _fast.step_triangular(state, kernel.c1, kernel.s1, kernel.c2, kernel.s2, tmp, dst)
            state, dst = dst, state
        return state
    state = state0
    for _ in range(n_steps):
        state = kernel.apply(state)
    return state


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with an odd window; window 1 is a no-op.
    Used to suppress fast intra-beat ripple before peak detection."""
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and positive")
    values = np.asarray(values, dtype=float)
    if window == 1:
        return values
    return np.convolve(values, np.ones(window) / window, mode="same")


def search_time(
    series: ProbabilitySeries,
    n_sites: int,
    window: int = 5,
    threshold_factor: float = 10.0,
) -> int | None:
    """First interior local maximum of the series that exceeds
    threshold_factor / n_sites; None when no step qualifies.

    A time t qualifies when values[t] >= values[t'] for every t' within
    ``window`` steps (window clipped at the series ends); the endpoints
    themselves are not eligible peaks.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    if threshold_factor <= 0:
        raise ValueError("threshold_factor must be positive")
    v = series.values
    threshold = threshold_factor / n_sites
    for t in range(1, len(v) - 1):
        if v[t] < threshold:
            continue
        lo = max(0, t - window)
        hi = min(len(v), t + window + 1)
        if v[t] >= v[lo:hi].max():
            return t
    return None
