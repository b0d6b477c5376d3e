"""Momentum-space analysis of the defect-free walk.

In the Bloch basis the three spin-dependent translations become
diag(exp(i k_j), exp(-i k_j)) with reduced momenta k1, k2 and k3 = k1 - k2,
and the step matrix is the same six-factor product as in position space.
The two quasi-energy bands are +/-E(k) with 2 cos E = Tr U(k); the closed
form of the trace is kept alongside as an independent cross-check
(mapping: first reduced momentum doubled, second as is).

Shifting either momentum by pi flips the sign of exactly two translation
factors, so the Bloch matrix is pi-periodic in both momenta; band
invariants integrate over one period cell [0, pi)^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError


def _rotation(theta: float) -> np.ndarray:
    h = 0.5 * theta
    return np.array([[np.cos(h), -np.sin(h)], [np.sin(h), np.cos(h)]])


def bloch_matrix(kappa1, kappa2, theta1: float, theta2: float) -> np.ndarray:
    """2x2 Bloch matrix of one step; broadcasts over momentum arrays,
    returning shape (..., 2, 2).  Unitary with determinant 1."""
    k1 = np.asarray(kappa1, dtype=float)
    k2 = np.asarray(kappa2, dtype=float)
    k3 = k1 - k2
    r1 = _rotation(theta1)
    r2 = _rotation(theta2)
    shape = np.broadcast_shapes(k1.shape, k2.shape)
    u = np.zeros(shape + (2, 2), dtype=np.complex128)
    # Accumulate the product right to left: R(t1), T1, R(t2), T2, R(t1), T3.
    u[..., :, :] = r1
    u[..., 0, :] *= np.exp(1j * k1)[..., None]
    u[..., 1, :] *= np.exp(-1j * k1)[..., None]
    u = r2 @ u
    u[..., 0, :] *= np.exp(1j * k2)[..., None]
    u[..., 1, :] *= np.exp(-1j * k2)[..., None]
    u = r1 @ u
    u[..., 0, :] *= np.exp(1j * k3)[..., None]
    u[..., 1, :] *= np.exp(-1j * k3)[..., None]
    return u


def bloch_trace(kappa1, kappa2, theta1: float, theta2: float) -> np.ndarray:
    u = bloch_matrix(kappa1, kappa2, theta1, theta2)
    return u[..., 0, 0] + u[..., 1, 1]


def closed_form_trace(kappa1, kappa2, theta1: float, theta2: float) -> np.ndarray:
    """Trace of the Bloch matrix from the characteristic quadratic
    lambda^2 + b lambda + 1 = 0 (trace = -b); independent of the matrix
    product route."""
    kx = 2.0 * np.asarray(kappa1, dtype=float)
    ky = np.asarray(kappa2, dtype=float)
    b = 2.0 * np.cos(theta2 / 2.0) * (
        np.sin(theta1 / 2.0) ** 2 * np.cos(2.0 * ky)
        - np.cos(theta1 / 2.0) ** 2 * np.cos(kx)
    ) + np.sin(theta1) * np.sin(theta2 / 2.0) * (np.cos(kx - 2.0 * ky) + 1.0)
    return -b


def quasi_energies(kappa1, kappa2, theta1: float, theta2: float):
    """Quasi-energy magnitude E(k) in [0, pi] and its negative partner.

    E = arccos(Tr U(k) / 2); the trace of a det-1 unitary is real.
    """
    tr = bloch_trace(kappa1, kappa2, theta1, theta2)
    half = np.real(tr) / 2.0
    if np.any(np.abs(half) > 1.0 + 1e-9):
        raise NumericalError(f"|trace|/2 exceeds 1: max {np.abs(half).max():.12f}")
    e = np.arccos(np.clip(half, -1.0, 1.0))
    return e, -e


@dataclass(frozen=True)
class GapMap:
    """Quasi-energy gaps at E = 0 and E = +/-pi over a (theta1, theta2)
    grid: per cell the minimal and maximal band separation at each energy."""

    theta1: np.ndarray
    theta2: np.ndarray
    gap0_min: np.ndarray
    gap0_max: np.ndarray
    gap_pi_min: np.ndarray
    gap_pi_max: np.ndarray


def band_gaps(theta1: float, theta2: float, k_resolution: int = 256) -> tuple[float, float]:
    """(gap at 0, gap at pi) for one parameter point."""
    e = _energies_on_grid(theta1, theta2, k_resolution)
    return float(2.0 * e.min()), float(2.0 * (np.pi - e.max()))


def _energies_on_grid(theta1: float, theta2: float, k_resolution: int) -> np.ndarray:
    # One period cell of the Bloch matrix covers the whole band range.
    k = np.pi * np.arange(k_resolution) / k_resolution
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    e, _ = quasi_energies(k1, k2, theta1, theta2)
    return e


def gap_map(theta1_values: np.ndarray, theta2_values: np.ndarray, k_resolution: int = 256) -> GapMap:
    if k_resolution < 64:
        raise ValueError("k_resolution must be at least 64")
    shape = (len(theta1_values), len(theta2_values))
    g0min = np.empty(shape)
    g0max = np.empty(shape)
    gpmin = np.empty(shape)
    gpmax = np.empty(shape)
    for i, t1 in enumerate(theta1_values):
        for j, t2 in enumerate(theta2_values):
            e = _energies_on_grid(t1, t2, k_resolution)
            g0min[i, j] = 2.0 * e.min()
            g0max[i, j] = 2.0 * e.max()
            gpmin[i, j] = 2.0 * (np.pi - e.max())
            gpmax[i, j] = 2.0 * (np.pi - e.min())
    return GapMap(
        theta1=np.asarray(theta1_values, dtype=float),
        theta2=np.asarray(theta2_values, dtype=float),
        gap0_min=g0min,
        gap0_max=g0max,
        gap_pi_min=gpmin,
        gap_pi_max=gpmax,
    )


def chern_number(
    theta1: float,
    theta2: float,
    band: str = "+",
    k_resolution: int = 64,
    gap_threshold: float = 1e-3,
) -> int:
    """Chern number of one quasi-energy band by the discrete plaquette
    field-strength method over the Bloch matrix's period cell [0, pi)^2;
    gauge independent and integer once the grid resolves the Berry
    curvature.

    Refuses when either gap is below ``gap_threshold``: the band invariant
    is undefined across a gap closing.
    """
    if band not in ("+", "-"):
        raise ValueError("band must be '+' (E in (0, pi)) or '-'")
    gap0, gap_pi = band_gaps(theta1, theta2, max(k_resolution, 64))
    if min(gap0, gap_pi) < gap_threshold:
        raise NumericalError(
            "Chern number undefined: gap below threshold "
            f"(gap0={gap0:.3e}, gap_pi={gap_pi:.3e}, threshold={gap_threshold:.1e})"
        )
    k = np.pi * np.arange(k_resolution) / k_resolution
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    u = bloch_matrix(k1, k2, theta1, theta2)
    lam, vecs = np.linalg.eig(u)
    pick = np.argmax(np.imag(lam), axis=-1) if band == "+" else np.argmin(np.imag(lam), axis=-1)
    idx = np.indices(pick.shape)
    states = vecs[idx[0], idx[1], :, pick]
    states /= np.linalg.norm(states, axis=-1, keepdims=True)

    def link(a, b):
        overlap = np.sum(np.conjugate(a) * b, axis=-1)
        mags = np.abs(overlap)
        if np.any(mags < 1e-12):
            raise NumericalError("vanishing link overlap; k-grid too coarse for this band")
        return overlap / mags

    right = np.roll(states, -1, axis=0)
    up = np.roll(states, -1, axis=1)
    diag = np.roll(right, -1, axis=1)
    u1 = link(states, right)
    u2 = link(right, diag)
    u3 = link(diag, up)
    u4 = link(up, states)
    flux = np.angle(u1 * u2 * u3 * u4)
    total = flux.sum() / (2.0 * np.pi)
    nearest = round(float(total))
    if abs(total - nearest) > 0.01:
        raise NumericalError(f"plaquette sum {total:.6f} is not an integer; refine the k-grid")
    return int(nearest)
