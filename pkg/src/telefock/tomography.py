"""Simulated homodyne records and maximum-likelihood state reconstruction.

Homodyne at local-oscillator phase theta samples the rotated quadrature
x cos(theta) + p sin(theta), whose density is
    p_theta(x) = sum_{m,n} rho_mn e^{i theta (n - m)} psi_m(x) psi_n(x)
with psi_n the harmonic-oscillator eigenfunctions (vacuum variance 1/2).
Reconstruction is the standard iterative R rho R fixed point over binned
quadrature projectors, with bootstrap resampling for error bars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .errors import AccuracyError
from .fock import DensityOperator

#: relative log-likelihood gain below which iteration stops
_DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class QuadratureRecord:
    """One homodyne event: LO phase in [0, pi) and the measured quadrature."""

    theta: float
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.value)):
            raise ValueError("record fields must be finite")
        if not 0.0 <= self.theta < math.pi:
            raise ValueError(f"theta {self.theta} outside [0, pi)")


@dataclass(frozen=True)
class TomographyOptions:
    dim: int = 8
    bin_width: float = 0.05
    max_iters: int = 500
    tol: float = _DEFAULT_TOL
    n_bootstrap: int = 100
    grid_halfwidth: float = 6.0

    def __post_init__(self):
        if self.bin_width <= 0:
            raise ValueError("bin_width must be > 0")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")


def hermite_functions(xs: np.ndarray, nmax: int) -> np.ndarray:
    """psi_n(x) for n < nmax, shape (nmax, len(xs)); hbar = 1 convention."""
    xs = np.asarray(xs, dtype=float)
    out = np.empty((nmax, xs.size))
    out[0] = math.pi ** (-0.25) * np.exp(-0.5 * xs**2)
    if nmax > 1:
        out[1] = math.sqrt(2.0) * xs * out[0]
    for n in range(1, nmax - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * xs * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def quadrature_pdf(rho: DensityOperator, theta: float):
    """Vectorized callable x -> p_theta(x) for a single-mode state."""
    if rho.n_modes != 1:
        raise ValueError("single-mode states only")
    d = rho.dim
    phases = np.exp(-1j * theta * np.arange(d))
    rotated = phases[:, None] * np.asarray(rho.matrix) * phases.conj()[None, :]

    def pdf(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        psi = hermite_functions(x, d)
        vals = np.einsum("mx,mn,nx->x", psi, rotated, psi, optimize=True).real
        return vals

    return pdf


def _records_to_arrays(records) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(records, np.ndarray):
        return records[:, 0].astype(float), records[:, 1].astype(float)
    thetas = np.array([rec.theta for rec in records], dtype=float)
    values = np.array([rec.value for rec in records], dtype=float)
    return thetas, values


def sample_homodyne(
    rho: DensityOperator, thetas, n_per_theta: int, rng, halfwidth: float | None = None
) -> list[QuadratureRecord]:
    """i.i.d. draws from each phase's quadrature density via inverse CDF.

    The CDF is tabulated on a dense grid sized from the state's energy unless
    ``halfwidth`` overrides it; if more than 1e-6 of the density mass falls
    outside the grid, an AccuracyError is raised.
    """
    if halfwidth is None:
        halfwidth = 6.0 + math.sqrt(2.0 * max(1.0, _mean_photon(rho)))
    grid = np.arange(-halfwidth, halfwidth + 5e-4, 1e-3)
    records: list[QuadratureRecord] = []
    for theta in thetas:
        pdf = quadrature_pdf(rho, float(theta))(grid)
        pdf = np.clip(pdf, 0.0, None)
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid))))
        if abs(cdf[-1] - 1.0) > 1e-6:
            raise AccuracyError(
                f"quadrature grid covers only {cdf[-1]:.8f} of the density at theta={theta}"
            )
        u = rng.random(n_per_theta) * cdf[-1]
        samples = np.interp(u, cdf, grid)
        records.extend(QuadratureRecord(float(theta), float(v)) for v in samples)
    return records


def _mean_photon(rho: DensityOperator) -> float:
    return float(np.real(np.diag(rho.matrix) @ np.arange(rho.dim)))


def binned_projectors(thetas: np.ndarray, opts: TomographyOptions):
    """Midpoint-rule binned POVM elements for each distinct phase.

    Returns (distinct_thetas, centers, stack) where stack[t, j] is the
    projector of bin j at phase t, already divided by the number of phases so
    the whole collection sums to the identity.
    """
    distinct = np.unique(thetas)
    if distinct.size < 8:
        raise ValueError(
            f"need records at >= 8 distinct phases for off-diagonal recovery, got {distinct.size}"
        )
    w = opts.bin_width
    edges = np.arange(-opts.grid_halfwidth, opts.grid_halfwidth + 0.5 * w, w)
    centers = 0.5 * (edges[:-1] + edges[1:])
    psi = hermite_functions(centers, opts.dim) * math.sqrt(w)
    stack = np.empty((distinct.size, centers.size, opts.dim, opts.dim), dtype=complex)
    for t, theta in enumerate(distinct):
        phases = np.exp(1j * theta * np.arange(opts.dim))
        u = phases[None, :] * psi.T  # (bins, dim)
        stack[t] = u[:, :, None] * u.conj()[:, None, :] / distinct.size
    return distinct, edges, stack


@dataclass(frozen=True, eq=False)
class MLEResult:
    state: DensityOperator
    iterations: int
    log_likelihood: float
    likelihood_trace: np.ndarray
    options: TomographyOptions


def mle_reconstruct(records, opts: TomographyOptions | None = None) -> MLEResult:
    """Iterative R rho R maximum-likelihood reconstruction of binned records.

    R = sum_j (f_j / p_j(rho)) Pi_j over occupied bins; the log-likelihood is
    nondecreasing along the iteration (a decrease beyond 1e-10 aborts, since
    it would indicate an implementation bug, not data trouble).
    """
    opts = opts or TomographyOptions()
    thetas, values = _records_to_arrays(records)
    if thetas.size == 0:
        raise ValueError("no records to reconstruct from")
    distinct, edges, stack = binned_projectors(thetas, opts)
    t_idx = np.searchsorted(distinct, thetas)
    b_idx = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, edges.size - 2)
    flat = t_idx * (edges.size - 1) + b_idx
    counts = np.bincount(flat, minlength=distinct.size * (edges.size - 1)).astype(float)
    occupied = np.nonzero(counts)[0]
    freqs = counts[occupied] / counts.sum()
    povm = stack.reshape(-1, opts.dim, opts.dim)[occupied]

    rho = np.eye(opts.dim, dtype=complex) / opts.dim
    loglik = []
    for it in range(opts.max_iters):
        probs = np.einsum("jmn,nm->j", povm, rho, optimize=True).real
        probs = np.clip(probs, 1e-300, None)
        ll = float(np.dot(freqs, np.log(probs)))
        if loglik and ll < loglik[-1] - 1e-10:
            raise RuntimeError(f"likelihood decreased at iteration {it}: {loglik[-1]} -> {ll}")
        converged = len(loglik) > 0 and abs(ll - loglik[-1]) <= opts.tol * abs(loglik[-1])
        loglik.append(ll)
        if converged:
            break
        r_op = np.einsum("j,jmn->mn", freqs / probs, povm, optimize=True)
        rho = r_op @ rho @ r_op
        rho = 0.5 * (rho + rho.conj().T)
        rho /= np.trace(rho).real
    state = DensityOperator(rho, (opts.dim,))
    return MLEResult(
        state=state,
        iterations=len(loglik),
        log_likelihood=loglik[-1],
        likelihood_trace=np.array(loglik),
        options=opts,
    )


@dataclass(frozen=True)
class BootstrapResult:
    mean: float
    stddev: float
    n_replicas: int


def bootstrap_errors(
    records, statistic, n_replicas: int, rng, opts: TomographyOptions | None = None, workers: int = 1
) -> BootstrapResult:
    """Nonparametric bootstrap of ``statistic(state)`` over record resamples.

    All resampling indices are drawn up front from the caller's generator, so
    the result is reproducible for a fixed seed and independent of the worker
    count used for the replica reconstructions.
    """
    if n_replicas < 2:
        raise ValueError("need at least 2 bootstrap replicas")
    thetas, values = _records_to_arrays(records)
    data = np.stack([thetas, values], axis=1)
    draws = [rng.integers(0, data.shape[0], size=data.shape[0]) for _ in range(n_replicas)]

    def _replica(idx):
        return float(statistic(mle_reconstruct(data[idx], opts).state))

    stats = np.array(parallel_map(_replica, draws, workers))
    return BootstrapResult(mean=float(stats.mean()), stddev=float(stats.std(ddof=1)), n_replicas=n_replicas)
