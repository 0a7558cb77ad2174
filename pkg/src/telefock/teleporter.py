"""Conditional CV teleportation engine.

The CV Bell measurement on the input mode V and resource mode A is the
projector family
    Pi(x_u, p_v) = D_V(sqrt(2) x_u, sqrt(2) p_v) |EPR><EPR| D_V^dag,
    |EPR> = sum_k |k,k>_{VA}  (unnormalized),
with outcome density q(x_u, p_v) = (1/pi) Tr[(rho_in x rho_AB) Pi x 1_B],
normalized so that q integrates to one over the plane. Conditioning keeps
outcomes inside the disk x_u^2 + p_v^2 <= L^2; the kept events are corrected
by the displacement D(sqrt(2) g x_u, sqrt(2) g p_v) on mode B.

Displacements inside the measurement contraction use exact infinite-space
matrix-element blocks (fock.displacement_block_batch): the truncated-generator
exponential is unitary on the cut space and would fabricate spurious density
at large outcome radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .errors import AccuracyError, ConfigError, HeraldImpossibleError, SamplingError
from .fock import (
    BellOutcome,
    DensityOperator,
    StateVector,
    damping_kraus_operators,
    displacement_block_batch,
    loss_channel,
    quadrature_moments,
    two_mode_squeezed_vacuum,
)

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GridSpec:
    """Polar quadrature controls for the conditioning-disk integral.

    ``range`` caps the radial extent of the open (L = inf) integral, ``step``
    sets the initial radial node spacing, and ``p_tol`` is the doubling-test
    tolerance on P(L).
    """

    range: float = 10.0
    step: float = 0.25
    n_theta: int = 64
    p_tol: float = 1e-3

    def __post_init__(self):
        if self.range <= 0 or self.step <= 0:
            raise ConfigError("grid range and step must be positive")
        if self.n_theta < 8:
            raise ConfigError("need at least 8 angular nodes")

    def n_radial(self, radius: float) -> int:
        return max(8, int(math.ceil(radius / self.step)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Physical and numerical parameters of one teleportation experiment."""

    r: float
    loss_l: float = 0.0
    gain_g: float | None = None
    radius_L: float = math.inf
    cutoff_N: int = 30
    shots: int = 10_000
    seed: int = 0
    grid: GridSpec = field(default_factory=GridSpec)
    loss_placement: str = "symmetric"
    max_deficit: float | None = None

    def __post_init__(self):
        if self.r < 0:
            raise ConfigError(f"squeezing r must be >= 0, got {self.r}")
        if not 0.0 <= self.loss_l <= 1.0:
            raise ConfigError(f"loss must lie in [0, 1], got {self.loss_l}")
        if self.gain_g is not None and self.gain_g < 0:
            raise ConfigError(f"gain must be >= 0, got {self.gain_g}")
        if self.radius_L < 0:
            raise ConfigError(f"conditioning radius must be >= 0, got {self.radius_L}")
        if self.cutoff_N < 1:
            raise ConfigError(f"cutoff must be >= 1, got {self.cutoff_N}")
        if self.loss_placement not in ("symmetric", "mode_a", "mode_b"):
            raise ConfigError(f"unknown loss placement {self.loss_placement!r}")

    @property
    def gain(self) -> float:
        """Feed-forward gain; defaults to the optimal tanh(r)."""
        return math.tanh(self.r) if self.gain_g is None else self.gain_g

    @property
    def dim(self) -> int:
        return self.cutoff_N + 1


@dataclass(frozen=True, eq=False)
class ConditionalResult:
    """Normalized conditional output state with its success probability."""

    state: DensityOperator
    probability: float
    density_at: dict | None = None
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Resource preparation
# ---------------------------------------------------------------------------


def lossy_tmsv_kraus_vectors(
    r: float, loss_l: float, dim: int, placement: str = "symmetric", tol: float = 1e-10
) -> np.ndarray:
    """Pure-state Kraus-mixture decomposition of the lossy TMSV resource.

    Returns an array of shape (n_vectors, dim*dim); the resource density
    matrix is sum_i |v_i><v_i|. This is the low-memory representation; the
    dense matrix is assembled from it by ``build_resource``.
    """
    tm = two_mode_squeezed_vacuum(r, dim)
    coeff = np.asarray(tm.amps).reshape(dim, dim)
    la = loss_l if placement in ("symmetric", "mode_a") else 0.0
    lb = loss_l if placement in ("symmetric", "mode_b") else 0.0
    kraus_a = damping_kraus_operators(la, dim) if la > 0 else [np.eye(dim, dtype=complex)]
    kraus_b = damping_kraus_operators(lb, dim) if lb > 0 else [np.eye(dim, dtype=complex)]
    vecs = []
    for ak in kraus_a:
        left = ak @ coeff
        if np.abs(left).max() < tol:
            continue
        for bl in kraus_b:
            v = left @ bl.T
            if np.abs(v).max() >= tol:
                vecs.append(v.ravel())
    return np.array(vecs)


def build_resource(
    r: float,
    loss_l: float,
    dim: int,
    placement: str = "symmetric",
    max_deficit: float | None = None,
) -> DensityOperator:
    """TMSV(r) resource with photon loss applied per mode before teleportation.

    The default placement applies independent loss ``loss_l`` to each mode;
    where the experimental loss budget actually sits is not knowable from the
    reported effective value, so it is exposed as a choice.
    """
    if r < 0:
        raise ConfigError(f"squeezing r must be >= 0, got {r}")
    if not 0.0 <= loss_l <= 1.0:
        raise ValueError(f"loss must lie in [0, 1], got {loss_l}")
    two_mode_squeezed_vacuum(r, dim, max_deficit)  # truncation policy check
    if loss_l == 0.0:
        return two_mode_squeezed_vacuum(r, dim).to_density()
    if loss_l == 1.0 and placement == "symmetric":
        mat = np.zeros((dim * dim, dim * dim), dtype=complex)
        mat[0, 0] = 1.0
        return DensityOperator(mat, (dim, dim))
    vecs = lossy_tmsv_kraus_vectors(r, loss_l, dim, placement)
    rho = vecs.T @ vecs.conj()
    return DensityOperator(rho, (dim, dim))


# ---------------------------------------------------------------------------
# Per-outcome conditional kernels
# ---------------------------------------------------------------------------


class _DenseKernel:
    """Conditional map from an explicit two-mode resource density matrix."""

    def __init__(self, rho_in: DensityOperator, rho_ab: DensityOperator):
        if rho_in.n_modes != 1:
            raise ValueError("input state must be single-mode")
        if rho_ab.n_modes != 2:
            raise ValueError("resource must be two-mode")
        self.d_in = rho_in.dim
        self.d_a, self.d_b = rho_ab.dims
        self.d_out = self.d_b
        self.rho_in = np.asarray(rho_in.matrix)
        t4 = np.asarray(rho_ab.matrix).reshape(self.d_a, self.d_b, self.d_a, self.d_b)
        self.z = np.ascontiguousarray(t4.transpose(0, 2, 1, 3)).reshape(
            self.d_a * self.d_a, self.d_b * self.d_b
        )
        self.red_a = np.einsum("abAb->aA", t4)
        mom_a = quadrature_moments(DensityOperator(self.red_a, (self.d_a,)))
        mom_in = quadrature_moments(DensityOperator(self.rho_in, (self.d_in,)))
        self.marginal_mean = (
            (mom_in["mean_x"] - mom_a["mean_x"]) / _SQRT2,
            (mom_in["mean_p"] + mom_a["mean_p"]) / _SQRT2,
        )
        self.marginal_var = (
            (mom_in["var_x"] + mom_a["var_x"]) / 2.0,
            (mom_in["var_p"] + mom_a["var_p"]) / 2.0,
        )

    def _displaced_input(self, alphas: np.ndarray) -> np.ndarray:
        # rho~ = D^dag(sqrt2 x, sqrt2 p) rho_in D(...) on the resource-A space;
        # the block argument alpha equals the outcome coordinate x + i p.
        blocks = displacement_block_batch(alphas, self.d_in, self.d_a)
        return np.einsum("xmk,mn,xnl->xkl", blocks.conj(), self.rho_in, blocks, optimize=True)

    def density(self, alphas: np.ndarray) -> np.ndarray:
        disp = self._displaced_input(alphas).reshape(len(alphas), -1)
        return np.real(disp @ self.red_a.ravel()) / math.pi

    def conditional(self, alphas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Unnormalized conditional operators on B and their traces (densities)."""
        disp = self._displaced_input(alphas).reshape(len(alphas), -1)
        m = (disp @ self.z).reshape(len(alphas), self.d_b, self.d_b) / math.pi
        dens = np.real(np.trace(m, axis1=1, axis2=2))
        return m, dens


class _IdealKernel:
    """Closed-form conditional map for the pure untruncated TMSV resource.

    Folding the feed-forward into the projection gives the corrected output
        Omega(alpha) rho_in Omega(alpha)^dag * sech^2(r)/pi,
        Omega(alpha) = e^{-(1 - 2 g g0 + g^2)|alpha|^2 / 2}
                       exp(u a^dag) exp(v a) g0^n,
    with g0 = tanh r, u = (g - g0) alpha, v = (1/g0 - g) conj(alpha). The
    ladder exponentials are evaluated by their exact (nilpotent) series.
    """

    def __init__(self, rho_in: DensityOperator, r: float, gain: float, d_out: int | None = None, r_max: float = 10.0):
        if rho_in.n_modes != 1:
            raise ValueError("input state must be single-mode")
        if r <= 0:
            raise ValueError("ideal resource requires r > 0")
        self.d_in = rho_in.dim
        self.rho_in = np.asarray(rho_in.matrix)
        self.g0 = math.tanh(r)
        self.g = gain
        self.prefactor = 1.0 / (math.cosh(r) ** 2 * math.pi)
        u_max = abs(self.g - self.g0) * r_max
        if d_out is None:
            spread = u_max * u_max + 4.0 * u_max + 6.0
            d_out = self.d_in + int(math.ceil(spread))
        self.d_out = d_out
        mom_in = quadrature_moments(rho_in)
        var_a = math.cosh(2 * r) / 2.0
        self.marginal_mean = (mom_in["mean_x"] / _SQRT2, mom_in["mean_p"] / _SQRT2)
        self.marginal_var = (
            (mom_in["var_x"] + var_a) / 2.0,
            (mom_in["var_p"] + var_a) / 2.0,
        )
        lf = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1.0, max(self.d_out, self.d_in))))))
        j_up = np.arange(self.d_out)[:, None]
        i_up = np.arange(self.d_in)[None, :]
        k_up = j_up - i_up
        with np.errstate(invalid="ignore"):
            self._c_up = np.where(
                k_up >= 0, np.exp(0.5 * (lf[j_up] - lf[np.maximum(i_up, 0)]) - lf[np.maximum(k_up, 0)]), 0.0
            )
        self._k_up = np.maximum(k_up, 0)
        i_lo = np.arange(self.d_in)[:, None]
        j_lo = np.arange(self.d_in)[None, :]
        k_lo = j_lo - i_lo
        self._c_lo = np.where(k_lo >= 0, np.exp(0.5 * (lf[j_lo] - lf[np.maximum(i_lo, 0)]) - lf[np.maximum(k_lo, 0)]), 0.0)
        self._k_lo = np.maximum(k_lo, 0)
        self._g0n = self.g0 ** np.arange(self.d_in)

    def _omega(self, alphas: np.ndarray) -> np.ndarray:
        n = len(alphas)
        u = (self.g - self.g0) * alphas
        v = (1.0 / self.g0 - self.g) * alphas.conj()
        scale = np.exp(-0.5 * (1.0 - 2.0 * self.g * self.g0 + self.g**2) * np.abs(alphas) ** 2)
        up = self._c_up[None, :, :] * u[:, None, None] ** self._k_up[None, :, :]
        lo = self._c_lo[None, :, :] * v[:, None, None] ** self._k_lo[None, :, :]
        omega = np.einsum("xji,xik->xjk", up, lo * self._g0n[None, None, :], optimize=True)
        return omega * scale[:, None, None]

    def density(self, alphas: np.ndarray) -> np.ndarray:
        omega = self._omega(alphas)
        dens = np.einsum("xji,ik,xjk->x", omega, self.rho_in, omega.conj(), optimize=True)
        return np.real(dens) * self.prefactor

    def conditional(self, alphas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Feed-forward-corrected conditional operators and their densities."""
        omega = self._omega(alphas)
        m = np.einsum("xji,ik,xlk->xjl", omega, self.rho_in, omega.conj(), optimize=True)
        m *= self.prefactor
        dens = np.real(np.trace(m, axis1=1, axis2=2))
        return m, dens

    corrected = True  # feed-forward already folded into the kernel


# ---------------------------------------------------------------------------
# Public per-outcome operations
# ---------------------------------------------------------------------------


def bsm_conditional(
    rho_in: DensityOperator, rho_ab: DensityOperator, outcome: BellOutcome
) -> tuple[DensityOperator, float]:
    """Unnormalized conditional operator on mode B for one CV-BSM outcome.

    The trace of the returned operator is the joint outcome density; the
    normalization is fixed so integrating that density over the outcome plane
    gives one.
    """
    kernel = _DenseKernel(rho_in, rho_ab)
    m, dens = kernel.conditional(np.array([outcome.alpha]))
    return DensityOperator(m[0], (kernel.d_b,)), float(dens[0])


def feed_forward(rho_b: DensityOperator, outcome: BellOutcome, g: float) -> DensityOperator:
    """Corrective displacement D(sqrt(2) g x_u, sqrt(2) g p_v) applied to mode B.

    Matrix elements of the exact (untruncated) displacement are used, so the
    kept block is exact; weight displaced past the cutoff is dropped.
    """
    if rho_b.n_modes != 1:
        raise ValueError("single-mode states only")
    alpha = g * outcome.alpha
    if alpha == 0:
        return rho_b
    block = displacement_block_batch(np.array([alpha]), rho_b.dim, rho_b.dim)[0]
    return DensityOperator(block @ np.asarray(rho_b.matrix) @ block.conj().T, rho_b.dims)


# ---------------------------------------------------------------------------
# Disk integration
# ---------------------------------------------------------------------------


def _make_kernel(rho_in: DensityOperator, config: ExperimentConfig, kernel: str):
    if kernel == "auto":
        kernel = "ideal" if (config.loss_l == 0.0 and config.r > 0.0) else "dense"
    if kernel == "ideal":
        if config.r <= 0:
            raise ConfigError("ideal-resource teleportation requires r > 0")
        return _IdealKernel(rho_in, config.r, config.gain, r_max=config.grid.range)
    if kernel == "dense":
        rho_ab = build_resource(
            config.r, config.loss_l, config.dim, config.loss_placement, config.max_deficit
        )
        return _DenseKernel(rho_in, rho_ab)
    raise ConfigError(f"unknown kernel {kernel!r}")


def _check_range(config: ExperimentConfig, kern) -> None:
    sigma = math.sqrt(max(max(kern.marginal_var), 0.25))
    reach = math.hypot(*kern.marginal_mean) + 5.0 * sigma
    if config.grid.range < reach:
        raise ConfigError(
            f"grid range {config.grid.range} is below 5 BSM standard deviations"
            f" ({reach:.2f}); increase ExperimentConfig.grid.range"
        )


def _polar_nodes(radius: float, n_r: int, n_theta: int):
    x_gl, w_gl = np.polynomial.legendre.leggauss(n_r)
    s = 0.5 * radius * (x_gl + 1.0)
    w_s = 0.5 * radius * w_gl * s
    theta = 2.0 * math.pi * np.arange(n_theta) / n_theta
    alphas = np.outer(s, np.exp(1j * theta)).ravel()
    weights = np.repeat(w_s, n_theta) * (2.0 * math.pi / n_theta)
    return alphas, weights


def _integrate_disk(kern, gain: float, radius: float, n_r: int, n_theta: int, workers: int = 1):
    alphas, weights = _polar_nodes(radius, n_r, n_theta)
    corrected = getattr(kern, "corrected", False)
    d_out = kern.d_out
    chunk = max(32, 4_000_000 // (d_out * d_out))
    slices = [slice(s, min(s + chunk, alphas.size)) for s in range(0, alphas.size, chunk)]

    def _piece(sl):
        m, dens = kern.conditional(alphas[sl])
        if not corrected:
            ff = displacement_block_batch(gain * alphas[sl], d_out, m.shape[1])
            m = ff @ m @ ff.conj().transpose(0, 2, 1)
        return np.einsum("x,xjl->jl", weights[sl], m, optimize=True), float(np.dot(weights[sl], dens))

    acc = np.zeros((d_out, d_out), dtype=complex)
    mass = 0.0
    for part, part_mass in parallel_map(_piece, slices, workers):
        acc += part
        mass += part_mass
    return acc, mass


def teleport(
    rho_in: DensityOperator,
    config: ExperimentConfig,
    kernel: str = "auto",
    workers: int = 1,
    report_density_at: list[BellOutcome] | None = None,
) -> ConditionalResult:
    """Conditional teleportation through the acceptance disk of radius L.

    Integrates the feed-forward-corrected conditional states over outcomes
    with x_u^2 + p_v^2 <= L^2 by polar quadrature (Gauss-Legendre radius,
    uniform angle), doubling the grid once as a convergence control.
    L = inf returns the deterministic output with probability 1. Outcomes in
    ``report_density_at`` get their joint density recorded in the result.
    """
    if rho_in.n_modes != 1:
        raise ValueError("input state must be single-mode")
    L = config.radius_L
    if L == 0:
        raise HeraldImpossibleError("conditioning disk of radius 0 accepts nothing")
    kern = _make_kernel(rho_in, config, kernel)
    open_disk = math.isinf(L)
    if open_disk:
        _check_range(config, kern)
        radius = config.grid.range
    else:
        radius = L
    n_r = config.grid.n_radial(radius)
    n_theta = config.grid.n_theta
    acc1, mass1 = _integrate_disk(kern, config.gain, radius, n_r, n_theta, workers)
    acc2, mass2 = _integrate_disk(kern, config.gain, radius, 2 * n_r, 2 * n_theta, workers)
    delta_p = abs(mass2 - mass1)
    state_delta = float(np.abs(acc2 / max(mass2, 1e-300) - acc1 / max(mass1, 1e-300)).max())
    diagnostics = {
        "mass": mass2,
        "delta_p": delta_p,
        "state_delta": state_delta,
        "n_r": 2 * n_r,
        "n_theta": 2 * n_theta,
        "kernel": type(kern).__name__.strip("_"),
    }
    if delta_p > config.grid.p_tol:
        raise AccuracyError(
            f"disk quadrature not converged: doubling changed P by {delta_p:.2e}"
            f" (> {config.grid.p_tol:.1e}); diagnostics: {diagnostics}"
        )
    if mass2 <= 1e-300:
        raise HeraldImpossibleError(
            f"success probability vanished inside L = {L} (mass {mass2:.3e})"
        )
    if open_disk and abs(mass2 - 1.0) > 0.02:
        raise AccuracyError(
            f"open-disk density integrates to {mass2:.4f}, not 1; grid range or"
            f" cutoff is insufficient; diagnostics: {diagnostics}"
        )
    mat = 0.5 * (acc2 + acc2.conj().T)
    state = DensityOperator(mat / np.trace(mat).real, (kern.d_out,))
    probability = 1.0 if open_disk else min(mass2, 1.0)
    density_at = None
    if report_density_at:
        values = kern.density(np.array([o.alpha for o in report_density_at]))
        density_at = {o: float(v) for o, v in zip(report_density_at, values)}
    return ConditionalResult(
        state=state, probability=probability, density_at=density_at, diagnostics=diagnostics
    )


def success_probability(
    rho_in: DensityOperator, config: ExperimentConfig, L_values
) -> list[tuple[float, float]]:
    """P(L) for each conditioning radius, by radial quadrature of the density."""
    kern = _make_kernel(rho_in, config, "auto")
    ls = [float(v) for v in L_values]
    if any(v < 0 for v in ls):
        raise ValueError("conditioning radii must be >= 0")
    if any(math.isinf(v) for v in ls):
        _check_range(config, kern)
    cap = config.grid.range
    edges = sorted({0.0} | {min(v, cap) for v in ls})
    n_theta = config.grid.n_theta

    def _cumulative(factor: int) -> dict[float, float]:
        theta = 2.0 * math.pi * np.arange(factor * n_theta) / (factor * n_theta)
        phases = np.exp(1j * theta)
        out, total = {0.0: 0.0}, 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            n_seg = factor * max(8, int(math.ceil((b - a) / config.grid.step)))
            x_gl, w_gl = np.polynomial.legendre.leggauss(n_seg)
            s = 0.5 * (b - a) * (x_gl + 1.0) + a
            w_s = 0.5 * (b - a) * w_gl * s
            alphas = np.outer(s, phases).ravel()
            dens = kern.density(alphas).reshape(n_seg, -1).mean(axis=1) * 2.0 * math.pi
            total += float(np.dot(w_s, dens))
            out[b] = total
        return out

    coarse = _cumulative(1)
    fine = _cumulative(2)
    worst = max(abs(fine[e] - coarse[e]) for e in fine)
    if worst > config.grid.p_tol:
        raise AccuracyError(f"P(L) quadrature not converged: doubling moved P by {worst:.2e}")
    return [(v, 1.0 if math.isinf(v) else min(fine[min(v, cap)], 1.0)) for v in ls]


# ---------------------------------------------------------------------------
# Monte Carlo realization
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleRun:
    outcome: BellOutcome
    accepted: bool
    out_state: DensityOperator | None


class _OutcomeSampler:
    """Rejection sampler for the joint BSM density with a Gaussian proposal."""

    def __init__(self, kern, config: ExperimentConfig, cap: int = 100_000):
        self.kern = kern
        self.cap = cap
        mx, mp = kern.marginal_mean
        vx, vp = kern.marginal_var
        self.mean = np.array([mx, mp])
        self.std = np.sqrt(np.array([max(vx, 0.25), max(vp, 0.25)]) * 1.5)
        # bound the density/proposal ratio on a radial scan
        scan_r = np.linspace(0.0, 5.0 * float(self.std.max()), 48)
        scan_t = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
        pts = (self.mean[0] + np.outer(scan_r, np.cos(scan_t))).ravel() + 1j * (
            self.mean[1] + np.outer(scan_r, np.sin(scan_t))
        ).ravel()
        q = kern.density(pts)
        ratio = q / self._proposal_pdf(pts)
        self.bound = 1.5 * float(ratio.max())
        if not math.isfinite(self.bound) or self.bound <= 0:
            raise SamplingError("could not bound the outcome density for sampling")

    def _proposal_pdf(self, alphas: np.ndarray) -> np.ndarray:
        dx = (alphas.real - self.mean[0]) / self.std[0]
        dp = (alphas.imag - self.mean[1]) / self.std[1]
        return np.exp(-0.5 * (dx**2 + dp**2)) / (2.0 * math.pi * self.std[0] * self.std[1])

    def draw(self, rng: np.random.Generator) -> complex:
        for _ in range(self.cap):
            x, p = rng.normal(self.mean, self.std)
            alpha = complex(x, p)
            u = rng.random()
            if u * self.bound * self._proposal_pdf(np.array([alpha]))[0] <= self.kern.density(np.array([alpha]))[0]:
                return alpha
        raise SamplingError(f"rejection cap {self.cap} exceeded")


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    """Deterministic per-shot stream; independent of worker scheduling."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(shot,)))


def sample_run(
    rho_in: DensityOperator,
    config: ExperimentConfig,
    rng: np.random.Generator,
    _sampler: _OutcomeSampler | None = None,
) -> SampleRun:
    """One Monte Carlo shot: sample an outcome, test the disk, correct if kept."""
    sampler = _sampler or _OutcomeSampler(_make_kernel(rho_in, config, "auto"), config)
    alpha = sampler.draw(rng)
    outcome = BellOutcome(alpha.real, alpha.imag)
    accepted = outcome.radius() <= config.radius_L
    out_state = None
    if accepted:
        kern = sampler.kern
        m, dens = kern.conditional(np.array([alpha]))
        mat = m[0]
        if not getattr(kern, "corrected", False):
            ff = displacement_block_batch(
                np.array([config.gain * alpha]), kern.d_out, mat.shape[0]
            )[0]
            mat = ff @ mat @ ff.conj().T
        out_state = DensityOperator(mat / np.trace(mat), (kern.d_out,))
    return SampleRun(outcome=outcome, accepted=accepted, out_state=out_state)


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    outcomes: np.ndarray
    accepted: np.ndarray
    acceptance_rate: float
    mean_state: DensityOperator | None


def mc_ensemble(rho_in: DensityOperator, config: ExperimentConfig, shots: int | None = None) -> EnsembleResult:
    """Batch of sample_run shots with per-shot RNG streams from (seed, index).

    Each shot consumes its own stream exactly as ``sample_run`` would, but the
    density evaluations of one rejection round are batched across shots. The
    accepted conditional states are averaged with equal weights, the Monte
    Carlo estimate of the quadrature-integrated conditional output.
    """
    shots = config.shots if shots is None else shots
    kern = _make_kernel(rho_in, config, "auto")
    sampler = _OutcomeSampler(kern, config)
    rngs = [shot_rng(config.seed, i) for i in range(shots)]
    outcomes = np.empty(shots, dtype=complex)
    pending = np.arange(shots)
    for _ in range(sampler.cap):
        if pending.size == 0:
            break
        props = np.empty(pending.size, dtype=complex)
        us = np.empty(pending.size)
        for j, i in enumerate(pending):
            x, p = rngs[i].normal(sampler.mean, sampler.std)
            props[j] = complex(x, p)
            us[j] = rngs[i].random()
        q = sampler.kern.density(props)
        keep = us * sampler.bound * sampler._proposal_pdf(props) <= q
        outcomes[pending[keep]] = props[keep]
        pending = pending[~keep]
    if pending.size:
        raise SamplingError(f"rejection cap {sampler.cap} exceeded for {pending.size} shots")
    accepted = np.abs(outcomes) <= config.radius_L
    mean_state = None
    idx = np.nonzero(accepted)[0]
    if idx.size:
        acc = np.zeros((kern.d_out, kern.d_out), dtype=complex)
        corrected = getattr(kern, "corrected", False)
        chunk = 512
        for start in range(0, idx.size, chunk):
            sel = idx[start : start + chunk]
            m, dens = kern.conditional(outcomes[sel])
            if not corrected:
                ff = displacement_block_batch(config.gain * outcomes[sel], kern.d_out, m.shape[1])
                m = ff @ m @ ff.conj().transpose(0, 2, 1)
            tr = np.trace(m, axis1=1, axis2=2).real
            acc += np.einsum("x,xjl->jl", 1.0 / tr, m, optimize=True)
        mean_state = DensityOperator(acc / np.trace(acc), (kern.d_out,))
    return EnsembleResult(
        outcomes=np.stack([outcomes.real, outcomes.imag], axis=1),
        accepted=accepted,
        acceptance_rate=float(accepted.mean()),
        mean_state=mean_state,
    )


# ---------------------------------------------------------------------------
# Independent small-L oracle for lossy resources
# ---------------------------------------------------------------------------


def lossy_noiseless_oracle(
    psi_in: StateVector, r: float, loss_l: float, out_dim: int | None = None
) -> DensityOperator:
    """L -> 0 limit with a symmetric-loss resource, built channel by channel.

    The resource noise commutes out of the projection as: transposed loss on
    the measured leg, noiseless attenuation tanh(r)^n from the finite
    entanglement, then loss on the output leg. Implemented for loss channels
    only (their Kraus operators are real, so no basis ambiguity).
    """
    if psi_in.n_modes != 1:
        raise ValueError("pure single-mode input required")
    d_in = psi_in.dim
    work = d_in + 48
    amps = np.zeros(work, dtype=complex)
    amps[:d_in] = np.asarray(psi_in.amps)
    rho = np.outer(amps, amps.conj())
    if loss_l > 0:
        transposed = np.zeros_like(rho)
        for op in damping_kraus_operators(loss_l, work):
            at = op.T
            transposed += at @ rho @ at.conj().T
        rho = transposed
    g0n = math.tanh(r) ** np.arange(work)
    rho = g0n[:, None] * rho * g0n[None, :]
    out = DensityOperator(rho, (work,))
    if loss_l > 0:
        out = loss_channel(out, loss_l)
    mat = np.asarray(out.matrix)
    if out_dim is not None:
        mat = mat[:out_dim, :out_dim]
    return DensityOperator(mat / np.trace(mat), (mat.shape[0],))
