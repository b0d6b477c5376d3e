import numpy as np
import pytest

from topowalk import evolution, lattice, spectral
from topowalk.errors import (
    CapacityError,
    DegenerateTrappedPairsError,
    NumericalError,
    SeriesTooShortError,
)
from topowalk.evolution import AngleField, ProbabilitySeries

WALKER = (0.2541 * np.pi, -0.7442 * np.pi)
DEFECT_ANGLES = (5 * np.pi / 8, np.pi / 2)


def defected_field(cfg):
    return AngleField(
        cfg, WALKER[0], WALKER[1],
        defect_site=cfg.center_site(),
        defect_theta1=DEFECT_ANGLES[0], defect_theta2=DEFECT_ANGLES[1],
    )


@pytest.fixture(scope="module")
def decomposition_16():
    cfg = lattice.LatticeConfig(16)
    angles = defected_field(cfg)
    matrix = spectral.build_step_matrix(angles)
    decomp = spectral.eigendecompose(matrix)
    table = spectral.overlap_products(decomp, cfg, cfg.center_site(), lattice.uniform_state(cfg))
    return cfg, matrix, decomp, table


def test_step_matrix_is_real_and_orthogonal():
    cfg = lattice.LatticeConfig(6)
    matrix = spectral.build_step_matrix(defected_field(cfg))
    assert not np.iscomplexobj(matrix)
    n = matrix.shape[0]
    assert np.abs(matrix.T @ matrix - np.eye(n)).max() < 1e-12


def test_step_matrix_capacity_cap():
    cfg = lattice.LatticeConfig(50)
    with pytest.raises(CapacityError):
        spectral.build_step_matrix(AngleField(cfg, 0.1, 0.2))


def test_step_matrix_zero_angles_is_signed_permutation():
    cfg = lattice.LatticeConfig(4)
    matrix = spectral.build_step_matrix(AngleField(cfg, 0.0, 0.0))
    assert np.all(np.isin(matrix, (-1.0, 0.0, 1.0)))
    assert np.all(np.sum(np.abs(matrix), axis=0) == 1)
    assert np.all(np.sum(np.abs(matrix), axis=1) == 1)


def _layer_matrix_oracle(angles):
    """Independent dense construction: explicit rotation and permutation
    matrices multiplied in operator order."""
    cfg = angles.config
    L = cfg.L
    n = cfg.n_amplitudes

    def rotation_matrix(which):
        theta = angles.effective_theta(which)
        R = np.zeros((n, n))
        for m in range(L):
            for k in range(L):
                c, s = np.cos(theta[m, k] / 2), np.sin(theta[m, k] / 2)
                up = lattice.flat_index(cfg, m, k, 0)
                dn = lattice.flat_index(cfg, m, k, 1)
                R[up, up] = c
                R[up, dn] = -s
                R[dn, up] = s
                R[dn, dn] = c
        return R

    def translation_matrix(direction):
        dm, dn = lattice.SHIFT_VECTORS[direction]
        T = np.zeros((n, n))
        for m in range(L):
            for k in range(L):
                T[lattice.flat_index(cfg, m + dm, k + dn, 0), lattice.flat_index(cfg, m, k, 0)] = 1
                T[lattice.flat_index(cfg, m - dm, k - dn, 1), lattice.flat_index(cfg, m, k, 1)] = 1
        return T

    R1 = rotation_matrix(1)
    return translation_matrix(3) @ R1 @ translation_matrix(2) @ rotation_matrix(2) @ translation_matrix(1) @ R1


def test_step_matrix_against_independent_layer_construction():
    cfg = lattice.LatticeConfig(4)
    angles = AngleField(
        cfg, 0.7, -1.2, defect_site=(2, 1), defect_theta1=0.3, defect_theta2=2.0
    )
    assert np.abs(spectral.build_step_matrix(angles) - _layer_matrix_oracle(angles)).max() < 1e-14


def test_matrix_free_step_matches_dense_product():
    cfg = lattice.LatticeConfig(6)
    angles = defected_field(cfg)
    matrix = spectral.build_step_matrix(angles)
    rng = np.random.default_rng(8)
    for _ in range(20):
        psi = rng.standard_normal((6, 6, 2)) + 1j * rng.standard_normal((6, 6, 2))
        psi /= lattice.norm(psi)
        direct = evolution.step(psi, angles).reshape(-1)
        assert np.abs(matrix @ psi.reshape(-1) - direct).max() < 1e-12


def test_evolve_record_matches_repeated_dense_matvec():
    cfg = lattice.LatticeConfig(6)
    angles = defected_field(cfg)
    matrix = spectral.build_step_matrix(angles)
    psi0 = lattice.uniform_state(cfg)
    series = evolution.evolve_record(psi0, 100, angles, cfg.center_site(), metric="site-density")
    vec = psi0.reshape(-1).copy()
    up = lattice.flat_index(cfg, *cfg.center_site(), 0)
    down = lattice.flat_index(cfg, *cfg.center_site(), 1)
    expected = np.empty(101)
    expected[0] = abs(vec[up]) ** 2 + abs(vec[down]) ** 2
    for t in range(1, 101):
        vec = matrix @ vec
        expected[t] = abs(vec[up]) ** 2 + abs(vec[down]) ** 2
    assert np.abs(series.values - expected).max() < 1e-10


def test_eigendecompose_identity():
    decomp = spectral.eigendecompose(np.eye(10))
    assert np.all(decomp.eigenphases == 0)
    grams = decomp.vectors.conj().T @ decomp.vectors
    assert np.abs(grams - np.eye(10)).max() < 1e-12


def test_eigendecompose_rejects_non_orthogonal():
    with pytest.raises(ValueError, match="not orthogonal"):
        spectral.eigendecompose(np.eye(4) * 1.5)


def test_eigendecomposition_invariants(decomposition_16):
    _, matrix, decomp, _ = decomposition_16
    n = decomp.n_states
    # completeness: reconstruction of the step matrix
    assert np.abs(spectral.reconstruct_matrix(decomp) - matrix).max() < 1e-8
    # orthonormal eigenbasis
    gram = decomp.vectors.conj().T @ decomp.vectors
    assert np.abs(gram - np.eye(n)).max() < 1e-9
    # particle-hole pairing with conjugate partners
    partner = decomp.pair_index
    wrapped = np.abs(np.mod(decomp.eigenphases + decomp.eigenphases[partner] + np.pi, 2 * np.pi) - np.pi)
    assert wrapped.max() < 1e-6
    assert np.abs(decomp.vectors[:, partner] - np.conjugate(decomp.vectors)).max() < 1e-9
    assert np.all(partner[partner] == np.arange(n))


def test_overlap_completeness_sum(decomposition_16):
    cfg, _, _, table = decomposition_16
    expected = np.sqrt(2 / cfg.n_sites)
    assert abs(table.completeness_sum() - expected) < 1e-10


def test_overlap_pairing_symmetry(decomposition_16):
    _, _, decomp, table = decomposition_16
    assert np.abs(table.s - table.s[decomp.pair_index]).max() < 1e-9


def test_trapped_pairs_dominate_and_satisfy_spin_phase_relation(decomposition_16):
    _, _, decomp, table = decomposition_16
    tset = spectral.select_trapped_states(table, decomp)
    reps = decomp.positive_pair_representatives()
    ranked = np.sort(table.s[reps])[::-1]
    assert ranked[1] >= 10 * np.median(table.s[reps])
    # w_down = i * w_up at the defect for both pairs
    assert tset.phase_residuals.max() < 1e-6
    assert tset.energies[0] != tset.energies[1]
    assert np.all(tset.energies > 0)


def test_overlap_sum_all_pairs_reaches_completeness(decomposition_16):
    cfg, _, decomp, table = decomposition_16
    w_all = spectral.overlap_sum(table, spectral.all_pair_ids(table))
    assert abs(w_all - 2 / cfg.n_sites) < 1e-10


def test_overlap_sum_rejects_duplicates_and_non_canonical(decomposition_16):
    _, _, decomp, table = decomposition_16
    ids = spectral.all_pair_ids(table)
    with pytest.raises(ValueError, match="duplicate"):
        spectral.overlap_sum(table, [ids[0], ids[0]])
    non_canonical = int(decomp.pair_index[ids[0]])
    if non_canonical != ids[0]:
        with pytest.raises(ValueError, match="canonical"):
            spectral.overlap_sum(table, [non_canonical])
    with pytest.raises(ValueError, match="non-empty"):
        spectral.overlap_sum(table, [])


def test_clean_lattice_has_degenerate_overlap_spread():
    cfg = lattice.LatticeConfig(8)
    angles = AngleField(cfg, 0.9, -1.3)  # no defect
    decomp = spectral.eigendecompose(spectral.build_step_matrix(angles))
    table = spectral.overlap_products(decomp, cfg, cfg.center_site(), lattice.uniform_state(cfg))
    with pytest.raises(DegenerateTrappedPairsError):
        spectral.select_trapped_states(table, decomp)


def test_approx_density_single_pair_is_constant(decomposition_16):
    _, _, decomp, table = decomposition_16
    tset = spectral.select_trapped_states(table, decomp)
    single = spectral.TrappedStateSet(
        indices=tset.indices,
        energies=tset.energies,
        w_up=np.array([tset.w_up[0], 0.0]),
        w_down=np.array([tset.w_down[0], 0.0]),
        phase_residuals=tset.phase_residuals,
    )
    t = np.arange(200)
    values = spectral.approx_defect_density(single, t)
    assert np.ptp(values) < 1e-15


def test_approx_density_value_at_time_zero(decomposition_16):
    _, _, decomp, table = decomposition_16
    tset = spectral.select_trapped_states(table, decomp)
    w1, w2 = tset.w_up
    expected = 4 * (abs(w1) ** 2 + abs(w2) ** 2) + 8 * abs(w1) * abs(w2) * np.cos(
        np.angle(w1) - np.angle(w2)
    )
    assert abs(spectral.approx_defect_density(tset, 0.0) - expected) < 1e-15


def test_eigenbasis_series_matches_direct_evolution(decomposition_16):
    cfg, _, decomp, table = decomposition_16
    angles = defected_field(cfg)
    psi0 = lattice.uniform_state(cfg)
    for metric in ("site-density", "coherent-sum"):
        direct = evolution.evolve_record(psi0, 100, angles, cfg.center_site(), metric=metric)
        reconstructed = spectral.eigenbasis_series(table, 100, metric=metric)
        assert np.abs(direct.values - reconstructed.values).max() < 1e-8


def test_dominant_frequency_exact_at_bin():
    t = np.arange(256)
    series = 0.3 + 0.1 * np.cos(2 * np.pi * 8 * t / 256 + 0.4)
    assert abs(spectral.dominant_frequency(series) - 8 / 256) < 1e-10


def test_dominant_frequency_rejects_constant():
    with pytest.raises(NumericalError):
        spectral.dominant_frequency(np.full(64, 0.25))


def test_beat_fft_check_needs_two_periods(decomposition_16):
    _, _, decomp, table = decomposition_16
    tset = spectral.select_trapped_states(table, decomp)
    short = ProbabilitySeries(values=np.ones(8), metric="site-density")
    with pytest.raises(SeriesTooShortError):
        spectral.beat_fft_check(short, tset)


def test_beat_frequency_matches_fft_at_small_size(decomposition_16):
    cfg, _, decomp, table = decomposition_16
    tset = spectral.select_trapped_states(table, decomp)
    angles = defected_field(cfg)
    n_steps = int(np.ceil(3 / tset.beat_frequency()))
    series = evolution.evolve_record(lattice.uniform_state(cfg), n_steps, angles, cfg.center_site())
    assert spectral.beat_fft_check(series, tset) < 0.05


def test_state_radius_delta_is_zero():
    cfg = lattice.LatticeConfig(9)
    delta = lattice.delta_state(cfg, (4, 4), 0)
    for fraction in (0.8, 0.95):
        assert spectral.state_radius(delta.reshape(-1), cfg, (4, 4), fraction) == 0.0


def _radius_oracle(density, cfg, center, fraction):
    """Plain-python cumulative sort over all sites."""
    cells = []
    for m in range(cfg.L):
        for n in range(cfg.L):
            cells.append((lattice.torus_distance((m, n), center, cfg), density[m, n]))
    cells.sort(key=lambda item: item[0])
    acc = 0.0
    for dist, rho in cells:
        acc += rho
        if acc >= fraction - 1e-12:
            return dist
    return cells[-1][0]


def test_state_radius_uniform_matches_bruteforce_oracle():
    cfg = lattice.LatticeConfig(11)
    psi = lattice.uniform_state(cfg)
    density = lattice.site_densities(psi)
    center = (5, 5)
    for fraction in (0.8, 0.95):
        oracle = _radius_oracle(density, cfg, center, fraction)
        value = spectral.state_radius(psi.reshape(-1), cfg, center, fraction)
        assert abs(value - oracle) <= 0.05 * oracle


def test_state_radius_of_trapped_state_is_compact(decomposition_16):
    cfg, _, decomp, table = decomposition_16
    tset = spectral.select_trapped_states(table, decomp)
    radius = spectral.state_radius(decomp.vectors[:, tset.indices[0]], cfg, cfg.center_site(), 0.8)
    # well inside the torus: localized around the defect
    assert radius < 0.45 * cfg.L
