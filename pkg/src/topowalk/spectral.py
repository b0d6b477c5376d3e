"""Dense one-step operator, its eigensystem, and trapped-state analysis.

The step operator with a defect is a real orthogonal matrix, so its
eigenvalues exp(i*E) come in conjugate pairs (+E, -E) with conjugate
eigenvectors.  The decomposition here goes through the real Schur form,
which for a normal matrix is block diagonal: each 2x2 rotation block yields
an exact conjugate pair of orthonormal eigenvectors, each 1x1 block a real
self-paired eigenvector at E = 0 or E = pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import CapacityError, DegenerateTrappedPairsError, NumericalError, SeriesTooShortError
from .evolution import AngleField, ProbabilitySeries, StepKernel
from .lattice import LatticeConfig, distance_map, flat_index

# Dense-matrix work is capped; beyond this the full spectrum is out of scope.
DENSE_CAP_L = 48

# A state pairs with itself when |sin E| is below this (E at 0 or pi).
SELF_PAIR_TOL = 1e-9


def build_step_matrix(angles: AngleField) -> np.ndarray:
    """Dense step matrix (2N x 2N, real): column j is the step applied to
    basis state j of the site-major layout."""
    config = angles.config
    L = config.L
    if L > DENSE_CAP_L:
        raise CapacityError(
            f"dense step matrix needs L <= {DENSE_CAP_L}, got L={L} "
            f"({2 * L * L}x{2 * L * L} entries)"
        )
    n = config.n_amplitudes
    kernel = StepKernel(angles)
    matrix = np.empty((n, n))
    # Batch basis vectors through the kernel in blocks to bound temporaries.
    block = 512
    for start in range(0, n, block):
        stop = min(start + block, n)
        basis = np.zeros((stop - start, n))
        basis[np.arange(stop - start), np.arange(start, stop)] = 1.0
        out = kernel.apply(basis.reshape(stop - start, L, L, 2))
        matrix[:, start:stop] = out.reshape(stop - start, n).T
    return matrix


@dataclass(frozen=True)
class SpectralDecomposition:
    """Complete orthonormal eigensystem of a real orthogonal step matrix.

    eigenphases: E_n in (-pi, pi], ascending; eigenvectors: columns of
    ``vectors``; pair_index[n] is the particle-hole partner (n itself for
    self-paired states at E = 0 or pi), with vectors[:, pair] the exact
    conjugate of vectors[:, n].
    """

    eigenphases: np.ndarray
    vectors: np.ndarray
    pair_index: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.eigenphases)

    def positive_pair_representatives(self) -> np.ndarray:
        """Indices with E > 0 whose partner is a distinct state."""
        return np.nonzero((self.eigenphases > 0) & (self.pair_index != np.arange(self.n_states)))[0]


def eigendecompose(matrix: np.ndarray, orthogonality_tol: float = 1e-9) -> SpectralDecomposition:
    """Eigendecompose a real orthogonal matrix via its real Schur form."""
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError("matrix must be square")
    if np.iscomplexobj(matrix):
        raise ValueError("step matrix must be real")
    gram_err = np.abs(matrix.T @ matrix - np.eye(n)).max()
    if gram_err > orthogonality_tol:
        raise ValueError(f"input is not orthogonal: max |U^T U - I| = {gram_err:.3e}")

    try:
        T, Z = sla.schur(matrix, output="real")
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"Schur decomposition failed: {exc}") from exc
    # Normality makes the Schur form block diagonal; verify before reading
    # eigenpairs off the blocks.
    stray = np.abs(np.triu(T, 2)).max() if n > 2 else 0.0
    if stray > 1e-8:
        raise NumericalError(f"Schur form not block diagonal (max stray entry {stray:.3e})")

    phases = np.empty(n)
    vectors = np.empty((n, n), dtype=np.complex128)
    partner = np.empty(n, dtype=np.intp)
    i = 0
    while i < n:
        if i + 1 < n and abs(T[i + 1, i]) > SELF_PAIR_TOL:
            a, b = T[i, i], T[i, i + 1]
            c, d = T[i + 1, i], T[i + 1, i + 1]
            # Nearest rotation angle to the 2x2 block.
            phi = np.arctan2(0.5 * (c - b), 0.5 * (a + d))
            q1 = Z[:, i]
            q2 = Z[:, i + 1]
            # U (q1 -/+ i q2) = exp(+/- i phi) (q1 -/+ i q2)
            plus = (q1 - 1j * q2) / np.sqrt(2.0) if phi > 0 else (q1 + 1j * q2) / np.sqrt(2.0)
            phases[i] = abs(phi)
            phases[i + 1] = -abs(phi)
            vectors[:, i] = plus
            vectors[:, i + 1] = np.conjugate(plus)
            partner[i] = i + 1
            partner[i + 1] = i
            i += 2
        else:
            phases[i] = 0.0 if T[i, i] > 0 else np.pi
            vectors[:, i] = Z[:, i]
            partner[i] = i
            i += 1

    order = np.argsort(phases, kind="stable")
    inverse = np.empty(n, dtype=np.intp)
    inverse[order] = np.arange(n)
    return SpectralDecomposition(
        eigenphases=phases[order],
        vectors=vectors[:, order],
        pair_index=inverse[partner[order]],
    )


def reconstruct_matrix(decomp: SpectralDecomposition) -> np.ndarray:
    """Sum_n exp(i E_n) |n><n|; equals the input matrix for a complete
    decomposition."""
    lam = np.exp(1j * decomp.eigenphases)
    return (decomp.vectors * lam) @ decomp.vectors.conj().T


@dataclass(frozen=True)
class OverlapTable:
    """Defect and initial-state overlaps per eigenstate.

    d[n] = <d|n> with <d| = <d,up| + <d,down|; i[n] = <n|i>;
    s[n] = |d[n] * i[n]|; w_up/w_down are the per-spin products
    <d,sigma|n><n|i>.
    """

    eigenphases: np.ndarray
    pair_index: np.ndarray
    d: np.ndarray
    i: np.ndarray
    s: np.ndarray
    w_up: np.ndarray
    w_down: np.ndarray

    def pair_id(self, n: int) -> int:
        return int(min(n, self.pair_index[n]))

    def completeness_sum(self) -> complex:
        """Sum_n d_n i_n; equals <d|i> by completeness."""
        return complex(np.sum(self.d * self.i))


def overlap_products(
    decomp: SpectralDecomposition,
    config: LatticeConfig,
    defect_site: tuple[int, int],
    initial_state: np.ndarray,
) -> OverlapTable:
    up = flat_index(config, defect_site[0], defect_site[1], 0)
    down = flat_index(config, defect_site[0], defect_site[1], 1)
    i_vec = initial_state.reshape(-1)
    i_n = decomp.vectors.conj().T @ i_vec
    d_up = decomp.vectors[up, :]
    d_down = decomp.vectors[down, :]
    d_n = d_up + d_down
    return OverlapTable(
        eigenphases=decomp.eigenphases,
        pair_index=decomp.pair_index,
        d=d_n,
        i=i_n,
        s=np.abs(d_n * i_n),
        w_up=d_up * i_n,
        w_down=d_down * i_n,
    )


def overlap_sum(table: OverlapTable, pairs) -> float:
    """W over a set of particle-hole pairs: |sum over both partners of
    <d|n><n|i>|^2.  ``pairs`` holds canonical pair ids (min of the two
    partner indices); duplicates are rejected."""
    pair_list = list(pairs)
    if not pair_list:
        raise ValueError("pair set must be non-empty")
    if len(set(pair_list)) != len(pair_list):
        raise ValueError("duplicate pair indices")
    total = 0.0 + 0.0j
    for n in pair_list:
        if table.pair_id(n) != n:
            raise ValueError(f"{n} is not a canonical pair index (use min of the pair)")
        total += table.d[n] * table.i[n]
        m = int(table.pair_index[n])
        if m != n:
            total += table.d[m] * table.i[m]
    return float(np.abs(total) ** 2)


def all_pair_ids(table: OverlapTable) -> list[int]:
    n = len(table.eigenphases)
    return sorted({min(k, int(table.pair_index[k])) for k in range(n)})


@dataclass(frozen=True)
class TrappedStateSet:
    """The two dominant particle-hole pairs: positive-energy indices,
    energies E_j > 0, per-spin overlap products at the defect, and the
    residual of the spin phase relation w_down = i * w_up."""

    indices: np.ndarray
    energies: np.ndarray
    w_up: np.ndarray
    w_down: np.ndarray
    phase_residuals: np.ndarray

    def beat_frequency(self) -> float:
        """Cycles per step of the slow two-pair oscillation."""
        return float(abs(self.energies[0] - self.energies[1]) / (2 * np.pi))


def select_trapped_states(
    table: OverlapTable,
    decomp: SpectralDecomposition,
    degeneracy_rtol: float = 1e-3,
    isolation_tol: float = 1e-9,
) -> TrappedStateSet:
    """Pick the two distinct particle-hole pairs with the largest overlap
    product s.

    Refuses with a degeneracy report when the second pair is not separated
    from the third, or when a selected level is numerically degenerate with
    another state: inside a degenerate eigenspace the individual overlap
    products are gauge dependent (the clean lattice is the extreme case).
    """
    reps = decomp.positive_pair_representatives()
    if len(reps) < 3:
        raise DegenerateTrappedPairsError("fewer than three particle-hole pairs available")
    s = table.s[reps]
    # Largest s first; ties by smaller energy.
    order = np.lexsort((decomp.eigenphases[reps], -s))
    ranked = reps[order]
    s_sorted = table.s[ranked]
    if s_sorted[1] - s_sorted[2] <= degeneracy_rtol * max(s_sorted[1], 1e-300):
        raise DegenerateTrappedPairsError(
            "top overlap pairs are degenerate: "
            f"s2={s_sorted[1]:.6e} vs s3={s_sorted[2]:.6e} (rtol {degeneracy_rtol})",
            ranked_overlaps=s_sorted[:8].copy(),
        )
    chosen = ranked[:2]
    for n in chosen:
        others = np.delete(decomp.eigenphases, [int(n), int(decomp.pair_index[n])])
        gap = np.abs(others - decomp.eigenphases[n]).min()
        if gap < isolation_tol:
            raise DegenerateTrappedPairsError(
                f"selected level E={decomp.eigenphases[n]:.9f} is degenerate with another "
                f"state (separation {gap:.3e}); overlap products are gauge dependent",
                ranked_overlaps=s_sorted[:8].copy(),
            )
    w_up = table.w_up[chosen]
    w_down = table.w_down[chosen]
    residuals = np.abs(w_down - 1j * w_up) / np.abs(w_down)
    return TrappedStateSet(
        indices=chosen,
        energies=decomp.eigenphases[chosen],
        w_up=w_up,
        w_down=w_down,
        phase_residuals=residuals,
    )


def approx_defect_density(trapped: TrappedStateSet, t) -> np.ndarray:
    """Closed-form defect density carried by the two dominant pairs:

        4(|w1|^2 + |w2|^2) + 8|w1||w2| cos((E1 - E2) t + arg w1 - arg w2)

    with w_j the spin-up overlap product of pair j.  Constant in t when one
    pair is switched off.
    """
    t = np.asarray(t, dtype=float)
    w1, w2 = trapped.w_up
    e1, e2 = trapped.energies
    const = 4.0 * (abs(w1) ** 2 + abs(w2) ** 2)
    beat = 8.0 * abs(w1) * abs(w2) * np.cos((e1 - e2) * t + np.angle(w1) - np.angle(w2))
    return const + beat


def dominant_frequency(values: np.ndarray) -> float:
    """Frequency (cycles per step) of the dominant nonzero peak of the
    mean-removed spectrum, refined by parabolic interpolation."""
    y = np.asarray(values, dtype=float)
    y = y - y.mean()
    amp = np.abs(np.fft.rfft(y))
    if len(amp) < 2:
        raise SeriesTooShortError("series too short for a frequency estimate")
    k = int(np.argmax(amp[1:])) + 1
    if amp[k] == 0.0:
        raise NumericalError("series has no nonzero-frequency component")
    # Parabolic refinement on the magnitude spectrum (exact at bin centers).
    if 1 <= k < len(amp) - 1:
        a, b, c = amp[k - 1], amp[k], amp[k + 1]
        denom = a - 2 * b + c
        if denom != 0.0:
            k = k + 0.5 * (a - c) / denom
    return float(k / len(y))


def beat_fft_check(series: ProbabilitySeries, trapped: TrappedStateSet) -> float:
    """Relative error between the dominant FFT frequency of the series and
    the predicted two-pair beat frequency."""
    f_pred = trapped.beat_frequency()
    if f_pred <= 0:
        raise NumericalError("predicted beat frequency is zero")
    if len(series.values) < 2.0 / f_pred:
        raise SeriesTooShortError(
            f"need at least two beat periods ({2.0 / f_pred:.0f} steps), got {len(series.values)}"
        )
    f_peak = dominant_frequency(series.values)
    return abs(f_peak - f_pred) / f_pred


def state_radius(
    vector: np.ndarray,
    config: LatticeConfig,
    center: tuple[int, int],
    fraction: float,
) -> float:
    """Smallest torus radius around ``center`` containing at least
    ``fraction`` of the state's site density."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    amp = vector.reshape(config.L, config.L, 2)
    density = np.abs(amp[..., 0]) ** 2 + np.abs(amp[..., 1]) ** 2
    dist = distance_map(config, center).reshape(-1)
    density = density.reshape(-1) / density.sum()
    order = np.argsort(dist, kind="stable")
    cumulative = np.cumsum(density[order])
    hit = int(np.searchsorted(cumulative, fraction - 1e-12))
    return float(dist[order][min(hit, len(order) - 1)])


def eigenbasis_series(
    table: OverlapTable,
    n_steps: int,
    metric: str = "site-density",
) -> ProbabilitySeries:
    """Defect-probability series reconstructed from the full eigensystem;
    an independent cross-check of the direct evolution."""
    t = np.arange(n_steps + 1)
    phases = np.exp(1j * np.outer(table.eigenphases, t))
    psi_up = table.w_up @ phases
    psi_down = table.w_down @ phases
    if metric == "site-density":
        values = np.abs(psi_up) ** 2 + np.abs(psi_down) ** 2
    elif metric == "coherent-sum":
        values = np.abs(psi_up + psi_down) ** 2
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return ProbabilitySeries(values=values, metric=metric)
