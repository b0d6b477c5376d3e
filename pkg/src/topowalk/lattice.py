"""Triangular-lattice geometry and walker state vectors.

The lattice is an L x L torus spanned by the unit vectors a1 = (1, 0) and
a2 = (1/2, sqrt(3)/2); a site is addressed by integer coefficients (m, n)
reduced mod L.  A walker state carries one complex amplitude per
(site, spin) and is stored as a C-contiguous array of shape (L, L, 2) with
spin as the last axis, so that ``state.reshape(-1)`` enumerates the basis
in the same site-major order the dense operator builder uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPIN_UP = 0
SPIN_DOWN = 1

# Physical embedding of the lattice basis (|a1| = |a2| = |a3| = 1).
A1 = np.array([1.0, 0.0])
A2 = np.array([0.5, np.sqrt(3.0) / 2.0])
A3 = A1 - A2

# Spin-dependent shift directions in lattice coordinates: moving by a3
# decreases the a2 coefficient by one.
SHIFT_VECTORS = {1: (1, 0), 2: (0, 1), 3: (1, -1)}


@dataclass(frozen=True)
class LatticeConfig:
    """Periodic L x L lattice; N = L**2 sites, 2N amplitudes."""

    L: int

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"lattice size must be at least 2, got L={self.L}")

    @property
    def n_sites(self) -> int:
        return self.L * self.L

    @property
    def n_amplitudes(self) -> int:
        return 2 * self.n_sites

    def center_site(self) -> tuple[int, int]:
        return self.L // 2, self.L // 2


def flat_index(config: LatticeConfig, m: int, n: int, spin: int) -> int:
    """Linear basis index of (m, n, spin) in the site-major layout."""
    L = config.L
    return ((m % L) * L + (n % L)) * 2 + spin


def site_of_flat_index(config: LatticeConfig, idx: int) -> tuple[int, int, int]:
    spin = idx % 2
    site = idx // 2
    return site // config.L, site % config.L, spin


def zero_state(config: LatticeConfig) -> np.ndarray:
    return np.zeros((config.L, config.L, 2), dtype=np.complex128)


def uniform_state(config: LatticeConfig) -> np.ndarray:
    """Equal-amplitude state 1/sqrt(2N) on every (site, spin)."""
    state = np.empty((config.L, config.L, 2), dtype=np.complex128)
    state[...] = 1.0 / np.sqrt(config.n_amplitudes)
    return state


def delta_state(config: LatticeConfig, site: tuple[int, int], spin: int) -> np.ndarray:
    state = zero_state(config)
    state[site[0] % config.L, site[1] % config.L, spin] = 1.0
    return state


def norm(state: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(state) ** 2)))


def site_density(state: np.ndarray, site: tuple[int, int]) -> float:
    """|psi_up|^2 + |psi_down|^2 at one site."""
    m, n = site
    return float(np.abs(state[m, n, 0]) ** 2 + np.abs(state[m, n, 1]) ** 2)


def site_densities(state: np.ndarray) -> np.ndarray:
    """Per-site density map, shape (L, L); sums to the squared norm."""
    return np.abs(state[..., 0]) ** 2 + np.abs(state[..., 1]) ** 2


def positions(config: LatticeConfig) -> np.ndarray:
    """Physical (x, y) of every site, shape (L, L, 2)."""
    m = np.arange(config.L)[:, None, None]
    n = np.arange(config.L)[None, :, None]
    return m * A1[None, None, :] + n * A2[None, None, :]


def torus_distance(a: tuple[int, int], b: tuple[int, int], config: LatticeConfig) -> float:
    """Euclidean distance between the closest periodic images of a and b."""
    return float(torus_distances(np.array([a[0]]), np.array([a[1]]), b, config)[0])


def torus_distances(m: np.ndarray, n: np.ndarray, ref: tuple[int, int], config: LatticeConfig) -> np.ndarray:
    """Minimum-image distances from sites (m, n) to a reference site.

    The minimum is taken over the nine periodic copies of the displacement;
    with |a_i| = 1 the nearest image always lies among them.
    """
    L = config.L
    dm = (np.asarray(m) - ref[0]) % L
    dn = (np.asarray(n) - ref[1]) % L
    best = None
    for sm in (-L, 0, L):
        for sn in (-L, 0, L):
            x = (dm + sm) * A1[0] + (dn + sn) * A2[0]
            y = (dm + sm) * A1[1] + (dn + sn) * A2[1]
            d2 = x * x + y * y
            best = d2 if best is None else np.minimum(best, d2)
    return np.sqrt(best)


def distance_map(config: LatticeConfig, center: tuple[int, int]) -> np.ndarray:
    """Torus distance from every site to ``center``, shape (L, L)."""
    m, n = np.meshgrid(np.arange(config.L), np.arange(config.L), indexing="ij")
    return torus_distances(m, n, center, config)
