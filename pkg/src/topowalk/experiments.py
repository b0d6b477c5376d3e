"""Orchestration of the numerical studies: walker-parameter sweeps,
defect-angle scans with overlap criteria, size scaling, and quenched
disorder ensembles.

Every run is deterministic: RNG streams are keyed by (seed, job index) and
results are reduced in index order, so output bytes never depend on
scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import bloch, spectral
from .baseline import SquareWalkConfig, square_evolve_record, uniform_square_state
from .errors import CapacityError
from .evolution import (
    METRIC_COHERENT,
    METRIC_DENSITY,
    AngleField,
    ProbabilitySeries,
    evolve_record,
    moving_average,
    search_time,
)
from .io import job_rng
from .lattice import LatticeConfig, uniform_state

# Window of the centered moving average used to suppress intra-beat ripple
# before peak detection in scaling studies (odd, in steps).
ENVELOPE_WINDOW = 31

# Phase classification thresholds for walker location.
GAPPED_MIN_GAP = 0.2
BOUNDARY_MAX_GAP0 = 0.12


@dataclass(frozen=True)
class SweepConfig:
    """Bulk-angle grid scan at fixed defect angles."""

    L: int
    n_steps: int
    defect_theta1: float
    defect_theta2: float
    theta1_range: tuple[float, float] = (-np.pi, np.pi)
    theta2_range: tuple[float, float] = (-np.pi, np.pi)
    resolution: int = 64
    metric: str = METRIC_COHERENT
    seed: int = 0

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")
        if self.n_steps < 1:
            raise ValueError("need at least one step")

    def theta1_values(self) -> np.ndarray:
        return np.linspace(*self.theta1_range, self.resolution)

    def theta2_values(self) -> np.ndarray:
        return np.linspace(*self.theta2_range, self.resolution)


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    max_prob: np.ndarray
    argmax_t: np.ndarray
    search_times: np.ndarray  # -1 encodes "none"

    def rows(self):
        """CSV rows (theta1, theta2, max_prob, argmax_t, search_time, job)."""
        t1 = self.config.theta1_values()
        t2 = self.config.theta2_values()
        for i in range(len(t1)):
            for j in range(len(t2)):
                st = int(self.search_times[i, j])
                yield (
                    t1[i],
                    t2[j],
                    self.max_prob[i, j],
                    int(self.argmax_t[i, j]),
                    st if st >= 0 else None,
                    i * len(t2) + j,
                )


def _sweep_cell(config: SweepConfig, theta1: float, theta2: float):
    lat = LatticeConfig(config.L)
    defect = lat.center_site()
    angles = AngleField(
        lat,
        theta1,
        theta2,
        defect_site=defect,
        defect_theta1=config.defect_theta1,
        defect_theta2=config.defect_theta2,
    )
    series = evolve_record(uniform_state(lat), config.n_steps, angles, defect, metric=config.metric)
    st = search_time(series, lat.n_sites)
    return (
        float(series.values.max()),
        int(series.values.argmax()),
        -1 if st is None else st,
    )


def sweep_walker_grid(config: SweepConfig) -> SweepResult:
    """One evolution from the uniform state per grid cell; cells are
    independent jobs reduced in index order."""
    t1 = config.theta1_values()
    t2 = config.theta2_values()
    shape = (len(t1), len(t2))
    max_prob = np.empty(shape)
    argmax_t = np.empty(shape, dtype=np.intp)
    search_times = np.empty(shape, dtype=np.intp)
    for i in range(shape[0]):
        for j in range(shape[1]):
            mx, am, st = _sweep_cell(config, t1[i], t2[j])
            max_prob[i, j] = mx
            argmax_t[i, j] = am
            search_times[i, j] = st
    return SweepResult(config=config, max_prob=max_prob, argmax_t=argmax_t, search_times=search_times)


@dataclass(frozen=True)
class WalkerLocation:
    """Walker parameters recovered from a sweep: the best point inside a
    gapped region (hill-climb refined) and the best cell hugging a
    phase-separation line (snapped to the gap minimum)."""

    in_phase: tuple[float, float]
    on_boundary: tuple[float, float]
    in_phase_peak: float
    on_boundary_peak: float


def _refine_peak(config: SweepConfig, theta1: float, theta2: float, initial_step: float) -> tuple[float, float, float]:
    """Deterministic first-improvement coordinate descent on the cell peak
    probability."""
    best = _sweep_cell(config, theta1, theta2)[0]
    step = initial_step
    moves = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))
    while step > 0.005:
        for dm, dn in moves:
            cand = (theta1 + dm * step, theta2 + dn * step)
            value = _sweep_cell(config, *cand)[0]
            if value > best:
                best = value
                theta1, theta2 = cand
                break
        else:
            step *= 0.5
    return theta1, theta2, best


def locate_walkers(result: SweepResult, refine: bool = True) -> WalkerLocation:
    """Classify sweep cells by band gaps and pick the two walker types.

    The gapped-region walker is refined by hill-climbing the peak
    probability; the boundary walker keeps the cell's theta1 and snaps
    theta2 to the nearby gap minimum so the point sits on the
    phase-separation line.
    """
    config = result.config
    t1 = config.theta1_values()
    t2 = config.theta2_values()
    gap0 = np.empty(result.max_prob.shape)
    gap_pi = np.empty(result.max_prob.shape)
    for i in range(len(t1)):
        for j in range(len(t2)):
            gap0[i, j], gap_pi[i, j] = bloch.band_gaps(t1[i], t2[j], 96)
    gapped = np.minimum(gap0, gap_pi) >= GAPPED_MIN_GAP
    boundary = (gap0 <= BOUNDARY_MAX_GAP0) & (gap_pi >= GAPPED_MIN_GAP)
    if not gapped.any() or not boundary.any():
        raise ValueError("sweep grid contains no cells of the required phase classes")

    masked = np.where(gapped, result.max_prob, -np.inf)
    i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
    in_phase = (float(t1[i]), float(t2[j]))
    in_phase_peak = float(result.max_prob[i, j])
    if refine:
        cell = float(t1[1] - t1[0])
        a, b, in_phase_peak = _refine_peak(config, *in_phase, initial_step=cell / 2)
        in_phase = (a, b)

    masked = np.where(boundary, result.max_prob, -np.inf)
    i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
    theta1_b = float(t1[i])
    theta2_b = float(t2[j])
    if refine:
        cell = float(t2[1] - t2[0])
        grid = np.linspace(theta2_b - cell, theta2_b + cell, 81)
        gaps = [bloch.band_gaps(theta1_b, v, 96)[0] for v in grid]
        theta2_b = float(grid[int(np.argmin(gaps))])
    return WalkerLocation(
        in_phase=in_phase,
        on_boundary=(theta1_b, theta2_b),
        in_phase_peak=in_phase_peak,
        on_boundary_peak=float(result.max_prob[i, j]),
    )


@dataclass(frozen=True)
class DefectScanResult:
    """Defect-angle scan: localization peak per defect point, optionally
    paired with the one- and two-pair overlap criteria."""

    def_theta1: np.ndarray
    def_theta2: np.ndarray
    max_prob: np.ndarray
    argmax_t: np.ndarray
    search_times: np.ndarray
    overlap_one: np.ndarray | None
    overlap_two: np.ndarray | None

    def rows(self):
        for i in range(len(self.def_theta1)):
            for j in range(len(self.def_theta2)):
                st = int(self.search_times[i, j])
                yield (
                    self.def_theta1[i],
                    self.def_theta2[j],
                    self.max_prob[i, j],
                    int(self.argmax_t[i, j]),
                    st if st >= 0 else None,
                    None if self.overlap_one is None else self.overlap_one[i, j],
                    None if self.overlap_two is None else self.overlap_two[i, j],
                )


def sweep_defect_line(
    theta1: float,
    theta2: float,
    def_theta1_values: np.ndarray,
    def_theta2_values: np.ndarray,
    L: int,
    n_steps: int,
    metric: str = METRIC_COHERENT,
    with_overlaps: bool = True,
) -> DefectScanResult:
    """Scan defect angles at fixed walker angles.  With overlaps enabled
    each point also gets W over the top-1 and top-2 overlap pairs of the
    defected step operator (dense eigensystem; respects the dense cap)."""
    if with_overlaps and L > spectral.DENSE_CAP_L:
        raise CapacityError(
            f"overlap curves need the dense eigensystem: L <= {spectral.DENSE_CAP_L}, got {L}"
        )
    lat = LatticeConfig(L)
    defect = lat.center_site()
    psi0 = uniform_state(lat)
    shape = (len(def_theta1_values), len(def_theta2_values))
    max_prob = np.empty(shape)
    argmax_t = np.empty(shape, dtype=np.intp)
    search_times = np.empty(shape, dtype=np.intp)
    w_one = np.empty(shape) if with_overlaps else None
    w_two = np.empty(shape) if with_overlaps else None
    for i, dt1 in enumerate(def_theta1_values):
        for j, dt2 in enumerate(def_theta2_values):
            angles = AngleField(
                lat, theta1, theta2,
                defect_site=defect, defect_theta1=float(dt1), defect_theta2=float(dt2),
            )
            series = evolve_record(psi0, n_steps, angles, defect, metric=metric)
            max_prob[i, j] = series.values.max()
            argmax_t[i, j] = series.values.argmax()
            st = search_time(series, lat.n_sites)
            search_times[i, j] = -1 if st is None else st
            if with_overlaps:
                decomp = spectral.eigendecompose(spectral.build_step_matrix(angles))
                table = spectral.overlap_products(decomp, lat, defect, psi0)
                reps = decomp.positive_pair_representatives()
                order = np.argsort(-table.s[reps])
                top = [table.pair_id(int(reps[k])) for k in order[:2]]
                w_one[i, j] = spectral.overlap_sum(table, [top[0]])
                w_two[i, j] = spectral.overlap_sum(table, top) if top[1] != top[0] else w_one[i, j]
    return DefectScanResult(
        def_theta1=np.asarray(def_theta1_values, dtype=float),
        def_theta2=np.asarray(def_theta2_values, dtype=float),
        max_prob=max_prob,
        argmax_t=argmax_t,
        search_times=search_times,
        overlap_one=w_one,
        overlap_two=w_two,
    )


def envelope_smooth(values: np.ndarray, window: int = ENVELOPE_WINDOW) -> np.ndarray:
    """Moving average that suppresses the fast intra-beat ripple so peak
    detection locks onto the beat crest."""
    return moving_average(values, window)


@dataclass(frozen=True)
class ScalingRow:
    L: int
    n_sites: int
    search_time: int | None
    argmax_t: int
    max_prob: float


def size_scaling_study(
    theta1: float,
    theta2: float,
    defect_theta1: float,
    defect_theta2: float,
    sizes: list[int],
    n_steps,
    metric: str = METRIC_COHERENT,
    smooth_window: int = ENVELOPE_WINDOW,
) -> list[ScalingRow]:
    """Search time and peak probability per system size.  ``n_steps`` is a
    single horizon or one per size; sizes must be ascending."""
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    steps = [int(n_steps)] * len(sizes) if np.isscalar(n_steps) else [int(t) for t in n_steps]
    if len(steps) != len(sizes):
        raise ValueError("one step horizon needed per size")
    out = []
    for L, T in zip(sizes, steps):
        lat = LatticeConfig(L)
        defect = lat.center_site()
        angles = AngleField(
            lat, theta1, theta2,
            defect_site=defect, defect_theta1=defect_theta1, defect_theta2=defect_theta2,
        )
        series = evolve_record(uniform_state(lat), T, angles, defect, metric=metric)
        smoothed = ProbabilitySeries(envelope_smooth(series.values, smooth_window), series.metric)
        st = search_time(smoothed, lat.n_sites, window=max(smooth_window // 2, 1))
        out.append(
            ScalingRow(
                L=L,
                n_sites=lat.n_sites,
                search_time=st,
                argmax_t=int(series.values.argmax()),
                max_prob=float(series.values.max()),
            )
        )
    return out


@dataclass(frozen=True)
class DisorderConfig:
    """Quenched-disorder ensemble: offsets drawn uniformly from
    [-theta_dis, theta_dis], one fixed draw per realization."""

    theta_dis: float
    n_configs: int
    seed: int = 0
    target: str = "topological"

    def __post_init__(self):
        if self.theta_dis < 0:
            raise ValueError("theta_dis must be non-negative")
        if self.n_configs < 1:
            raise ValueError("need at least one realization")
        if self.target not in ("topological", "non-topological"):
            raise ValueError(f"unknown target walk {self.target!r}")


@dataclass(frozen=True)
class DisorderEnsembleResult:
    config: DisorderConfig
    series: np.ndarray  # (n_configs, T+1)
    mean: np.ndarray

    def rows(self):
        for t in range(self.series.shape[1]):
            yield (t, self.mean[t], *self.series[:, t])


def disorder_ensemble(
    config: DisorderConfig,
    theta1: float,
    theta2: float,
    defect_theta1: float,
    defect_theta2: float,
    L: int,
    n_steps: int,
    metric: str = METRIC_COHERENT,
) -> DisorderEnsembleResult:
    """Independent quenched realizations (defect node exempt) plus their
    mean.  With theta_dis = 0 every realization equals the clean run."""
    lat = LatticeConfig(L)
    defect = lat.center_site()
    all_series = np.empty((config.n_configs, n_steps + 1))
    for r in range(config.n_configs):
        rng = job_rng(config.seed, r)
        if config.target == "topological":
            if config.theta_dis > 0:
                d1 = rng.uniform(-config.theta_dis, config.theta_dis, (L, L))
                d2 = rng.uniform(-config.theta_dis, config.theta_dis, (L, L))
            else:
                d1 = d2 = None
            angles = AngleField(
                lat, theta1, theta2,
                defect_site=defect, defect_theta1=defect_theta1, defect_theta2=defect_theta2,
                disorder1=d1, disorder2=d2,
            )
            series = evolve_record(uniform_state(lat), n_steps, angles, defect, metric=metric)
        else:
            offsets = (
                rng.uniform(-config.theta_dis, config.theta_dis, (L, L))
                if config.theta_dis > 0
                else None
            )
            square = SquareWalkConfig(L, marked_site=(L // 2, L // 2), phase_offsets=offsets)
            series = square_evolve_record(uniform_square_state(square), n_steps, square, (L // 2, L // 2))
        all_series[r] = series.values
    return DisorderEnsembleResult(config=config, series=all_series, mean=all_series.mean(axis=0))


def clean_reference(
    config: DisorderConfig,
    theta1: float,
    theta2: float,
    defect_theta1: float,
    defect_theta2: float,
    L: int,
    n_steps: int,
    metric: str = METRIC_COHERENT,
) -> ProbabilitySeries:
    """Zero-disorder counterpart of one ensemble member."""
    clean = replace(config, theta_dis=0.0, n_configs=1)
    result = disorder_ensemble(clean, theta1, theta2, defect_theta1, defect_theta2, L, n_steps, metric)
    return ProbabilitySeries(values=result.series[0], metric=metric)
