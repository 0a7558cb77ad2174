"""State diagnostics: Wigner functions, photon statistics, entanglement entropy.

The Wigner function is evaluated through the displaced-parity trace
    W(x, p) = (1/pi) Tr[ rho D(x,p) (-1)^n D^dag(x,p) ] = (1/pi) Tr[ rho D(2 alpha) (-1)^n ],
with alpha = (x + i p)/sqrt(2), reusing the same truncated-generator
exponential that backs ``displacement_matrix``. At the origin this reduces to
(1/pi) sum_n (-1)^n rho_nn exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError
from .fock import DensityOperator, StateVector, _displacement_eigensystem

#: Hard cap on the internally padded dimension for grid evaluation.
_MAX_PADDED_DIM = 4096


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """W(x, p) sampled on a rectangular grid (values[i, j] = W(xs[i], ps[j]))."""

    xs: np.ndarray
    ps: np.ndarray
    values: np.ndarray

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.ps, axis=1), self.xs))

    def at_origin(self) -> float:
        i = int(np.argmin(np.abs(self.xs)))
        j = int(np.argmin(np.abs(self.ps)))
        return float(self.values[i, j])


def wigner_origin(rho: DensityOperator) -> float:
    """(1/pi) sum_n (-1)^n rho_nn, the parity expectation over pi."""
    if rho.n_modes != 1:
        raise ValueError("single-mode states only")
    diag = np.diag(np.asarray(rho.matrix)).real
    signs = (-1.0) ** np.arange(rho.dim)
    return float(np.dot(signs, diag) / math.pi)


def _support_top(rho: DensityOperator, tol: float = 1e-13) -> int:
    mags = np.abs(np.asarray(rho.matrix))
    occupied = np.nonzero(mags.max(axis=1) > tol)[0]
    return int(occupied[-1]) if occupied.size else 0


def wigner_grid(rho: DensityOperator, xs, ps, pad: bool = True) -> WignerGrid:
    """Displaced-parity Wigner function on the Cartesian grid xs x ps.

    Grid points must satisfy the validity rule x^2 + p^2 <= N/4 for the
    working cutoff N; with ``pad=True`` (default) the state is zero-padded to
    a large enough cutoff automatically (exact), while ``pad=False`` raises
    an AccuracyError when the caller's own cutoff is insufficient.
    """
    if rho.n_modes != 1:
        raise ValueError("single-mode states only")
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    r2 = xs[:, None] ** 2 + ps[None, :] ** 2
    r2_max = float(r2.max())
    if not pad:
        if r2_max > rho.dim / 4.0:
            raise AccuracyError(
                f"grid radius^2 {r2_max:.2f} exceeds validity bound dim/4 = {rho.dim / 4:.2f}"
            )
        d_eff = rho.dim
    else:
        b = math.sqrt(2.0 * r2_max) + math.sqrt(_support_top(rho, 1e-13) + 1.0)
        d_eff = max(rho.dim, int(math.ceil(4.0 * r2_max)) + 8, int(math.ceil(b * b + 12.0 * b)) + 16)
        if d_eff > _MAX_PADDED_DIM:
            raise AccuracyError(
                f"grid needs padded dimension {d_eff} > cap {_MAX_PADDED_DIM}; shrink the grid"
            )

    d_state = rho.dim
    # parity-weighted coefficient matrix: W = (1/pi) sum_{m,n} C[m,n] D(2 alpha)[m,n]
    signs = (-1.0) ** np.arange(d_state)
    coeff = np.asarray(rho.matrix).T * signs[None, :]

    evals, evecs = _displacement_eigensystem(d_eff)
    u_top = evecs[:d_state, :]

    # D(2 alpha) = e^{i theta n} exp(2 s K) e^{-i theta n}: radius-grouped evaluation
    s = np.sqrt(r2 / 2.0)
    theta = np.arctan2(ps[None, :], xs[:, None]) * np.ones_like(r2)
    s_flat = s.ravel()
    keys = np.round(2.0 * s_flat, 12)
    uniq, inverse = np.unique(keys, return_inverse=True)

    offsets = np.arange(-(d_state - 1), d_state)
    diag_sums = np.empty((uniq.size, offsets.size), dtype=complex)
    for i, t in enumerate(uniq):
        radial = (u_top * np.exp(-1j * t * evals)[None, :]) @ u_top.conj().T
        g = coeff * radial
        for j, off in enumerate(offsets):
            diag_sums[i, j] = np.trace(g, offset=off)

    th_flat = theta.ravel()
    values = np.empty(th_flat.size, dtype=float)
    chunk = max(1, 2_000_000 // (2 * d_state))
    for start in range(0, th_flat.size, chunk):
        sl = slice(start, min(start + chunk, th_flat.size))
        phases = np.exp(-1j * np.outer(th_flat[sl], offsets))
        values[sl] = np.einsum("pl,pl->p", phases, diag_sums[inverse[sl]]).real
    values /= math.pi
    return WignerGrid(xs=xs, ps=ps, values=values.reshape(r2.shape))


@dataclass(frozen=True, eq=False)
class PhotonNumberDistribution:
    """Diagonal photon statistics plus the odd-sum negativity witness."""

    probs: np.ndarray
    odd_sum: float
    negative_at_origin: bool


def photon_number_distribution(rho: DensityOperator) -> PhotonNumberDistribution:
    """Photon-number probabilities; odd_sum > 0.5 flags W(0,0) < 0."""
    if rho.n_modes != 1:
        raise ValueError("single-mode states only")
    probs = np.diag(np.asarray(rho.matrix)).real.copy()
    odd = float(probs[1::2].sum())
    probs.setflags(write=False)
    return PhotonNumberDistribution(probs=probs, odd_sum=odd, negative_at_origin=odd > 0.5)


def entanglement_entropy(psi_ab: StateVector | DensityOperator) -> float:
    """Entropy of entanglement (base 2) of a pure two-mode state, in ebits."""
    if isinstance(psi_ab, DensityOperator):
        if psi_ab.n_modes != 2:
            raise ValueError("two-mode states only")
        pur = psi_ab.purity()
        if pur < 1.0 - 1e-6:
            raise ValueError(f"not a pure state: purity = {pur:.6f}")
        evals, evecs = np.linalg.eigh(np.asarray(psi_ab.matrix))
        psi_ab = StateVector(evecs[:, -1] * math.sqrt(evals[-1]), psi_ab.dims).normalize()
    if psi_ab.n_modes != 2:
        raise ValueError("two-mode states only")
    if abs(psi_ab.norm() - 1.0) > 1e-6:
        raise ValueError("state must be normalized")
    da, db = psi_ab.dims
    schmidt = np.linalg.svd(np.asarray(psi_ab.amps).reshape(da, db), compute_uv=False)
    lam = schmidt**2
    lam = lam[lam > 1e-16]
    return float(-(lam * np.log2(lam)).sum())
