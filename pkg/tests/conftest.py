"""Shared fixtures for the heavy acceptance runs plus a per-criterion
PASS/FAIL summary printed at the end of the session."""

import numpy as np
import pytest

from topowalk import experiments, lattice, spectral
from topowalk.evolution import AngleField

DEFECT_THETA1 = 5 * np.pi / 8
DEFECT_THETA2 = np.pi / 2

_criterion_results: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion label")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        _criterion_results[marker.args[0]] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, verdict in _criterion_results.items():
        terminalreporter.write_line(f"ACCEPTANCE {name}: {verdict}")


@pytest.fixture(scope="session")
def full_sweep():
    """The production localization map: L=40, T=1000, defect (5pi/8, pi/2),
    64x64 bulk-angle grid."""
    config = experiments.SweepConfig(
        L=40,
        n_steps=1000,
        defect_theta1=DEFECT_THETA1,
        defect_theta2=DEFECT_THETA2,
        resolution=64,
        seed=0,
    )
    return experiments.sweep_walker_grid(config)


@pytest.fixture(scope="session")
def walkers(full_sweep):
    return experiments.locate_walkers(full_sweep)


@pytest.fixture(scope="session")
def walker1_spectrum(walkers):
    """Dense eigensystem and overlap table at the located gapped-region
    walker, L=40."""
    cfg = lattice.LatticeConfig(40)
    angles = AngleField(
        cfg,
        walkers.in_phase[0],
        walkers.in_phase[1],
        defect_site=cfg.center_site(),
        defect_theta1=DEFECT_THETA1,
        defect_theta2=DEFECT_THETA2,
    )
    decomp = spectral.eigendecompose(spectral.build_step_matrix(angles))
    table = spectral.overlap_products(decomp, cfg, cfg.center_site(), lattice.uniform_state(cfg))
    return cfg, angles, decomp, table
