"""Truncated-Fock-space linear algebra: states, mode operators, elementary channels.

Conventions used throughout the package (hbar = 1):
    x = (a + a^dag) / sqrt(2),   p = (a - a^dag) / (i sqrt(2))
so the vacuum has quadrature variance 1/2, and the displacement operator is
    D(x0, p0) = exp(-i (x0 p - p0 x)) = exp(alpha a^dag - alpha* a),
    alpha = (x0 + i p0) / sqrt(2).
D(x0, p0)|0> is the coherent state with mean quadratures (x0, p0).

All values are immutable after construction and all operations are pure
functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import TruncationError

#: Max elementwise |rho - rho^dag| accepted by DensityOperator.validate().
HERMITICITY_TOL = 1e-10
#: Eigenvalues below this are treated as genuine negativity, not float drift.
EIGENVALUE_TOL = -1e-9
#: Slack allowed on the trace upper bound.
TRACE_TOL = 1e-9


def _frozen_array(values, dtype=complex) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state over one or two truncated Fock modes.

    ``amps[k]`` is the amplitude of the joint Fock ket with flat index k;
    for two modes the flat index is ``n_A * dims[1] + n_B``.
    """

    amps: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, amps, dims=None):
        amps = _frozen_array(amps)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be a 1-D array")
        if dims is None:
            dims = (amps.size,)
        dims = tuple(int(d) for d in dims)
        if any(d < 2 for d in dims):
            raise ValueError(f"every mode dimension must be >= 2, got {dims}")
        if len(dims) not in (1, 2):
            raise ValueError("only single- and two-mode states are supported")
        if math.prod(dims) != amps.size:
            raise ValueError(f"dims {dims} inconsistent with {amps.size} amplitudes")
        nrm = float(np.linalg.norm(amps))
        if not 0.0 < nrm <= 1.0 + 1e-9:
            raise ValueError(f"squared norm must lie in (0, 1], got {nrm**2:.3e}")
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        """Total (joint) dimension."""
        return self.amps.size

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalize(self) -> "StateVector":
        return StateVector(self.amps / self.norm(), self.dims)

    def to_density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amps, self.amps.conj()), self.dims)

    def overlap(self, other: "StateVector") -> complex:
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        return complex(np.vdot(self.amps, other.amps))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Density matrix over a single- or two-mode truncated Fock basis.

    Validation (Hermiticity, trace bounds, positivity) is opt-in through
    :meth:`validate` because the O(dim^3) eigenvalue check would dominate the
    runtime of channel chains if performed on every construction.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, matrix, dims=None):
        matrix = _frozen_array(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("density matrix must be square")
        if dims is None:
            dims = (matrix.shape[0],)
        dims = tuple(int(d) for d in dims)
        if len(dims) not in (1, 2):
            raise ValueError("only single- and two-mode operators are supported")
        if math.prod(dims) != matrix.shape[0]:
            raise ValueError(f"dims {dims} inconsistent with shape {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityOperator":
        tr = np.trace(self.matrix)
        if abs(tr) < 1e-300:
            raise ValueError("cannot normalize a zero-trace operator")
        return DensityOperator(self.matrix / tr, self.dims)

    def validate(self, check_psd: bool = True) -> "DensityOperator":
        """Assert the DensityOperator invariants; returns self for chaining."""
        herm = float(np.abs(self.matrix - self.matrix.conj().T).max())
        if herm > HERMITICITY_TOL:
            raise ValueError(f"not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        tr = complex(np.trace(self.matrix))
        if abs(tr.imag) > HERMITICITY_TOL:
            raise ValueError(f"trace has imaginary part {tr.imag:.3e}")
        if not 0.0 < tr.real <= 1.0 + TRACE_TOL:
            raise ValueError(f"trace {tr.real:.6f} outside (0, 1]")
        if check_psd:
            lo = float(np.linalg.eigvalsh(self.matrix).min())
            if lo < EIGENVALUE_TOL:
                raise ValueError(f"negative eigenvalue {lo:.3e} below tolerance")
        return self

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """A dense single-mode operator on the truncated Fock space."""

    matrix: np.ndarray
    dim: int = 0

    def __init__(self, matrix, dim=None):
        matrix = _frozen_array(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("mode operator must be a square matrix")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "dim", matrix.shape[0] if dim is None else int(dim))

    def dagger(self) -> "ModeOperator":
        return ModeOperator(self.matrix.conj().T)

    def __matmul__(self, other):
        if isinstance(other, ModeOperator):
            return ModeOperator(self.matrix @ other.matrix)
        return self.matrix @ other


@dataclass(frozen=True)
class BellOutcome:
    """A CV Bell-measurement result (x_u, p_v) in hbar = 1 units."""

    x_u: float
    p_v: float

    def __post_init__(self):
        if not (math.isfinite(self.x_u) and math.isfinite(self.p_v)):
            raise ValueError("Bell outcome quadratures must be finite")

    @property
    def alpha(self) -> complex:
        """Phase-space point x_u + i p_v (the natural BSM coordinate)."""
        return complex(self.x_u, self.p_v)

    def radius(self) -> float:
        return math.hypot(self.x_u, self.p_v)


# ---------------------------------------------------------------------------
# Elementary operators
# ---------------------------------------------------------------------------


def annihilation_matrix(dim: int) -> ModeOperator:
    """Annihilation operator with <n-1| a |n> = sqrt(n)."""
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    mat = np.zeros((dim, dim), dtype=complex)
    ns = np.arange(1, dim)
    mat[ns - 1, ns] = np.sqrt(ns)
    return ModeOperator(mat)


def number_matrix(dim: int) -> ModeOperator:
    return ModeOperator(np.diag(np.arange(dim, dtype=float)).astype(complex))


def quadrature_matrices(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """(x, p) operator matrices in the vacuum-variance-1/2 convention."""
    a = annihilation_matrix(dim).matrix
    x = (a + a.conj().T) / math.sqrt(2.0)
    p = (a - a.conj().T) / (1j * math.sqrt(2.0))
    return x, p


@lru_cache(maxsize=32)
def _displacement_eigensystem(dim: int):
    # K = a^dag - a is real antisymmetric, so iK is Hermitian and exp(sK)
    # is an exact unitary for every real s once iK is diagonalized.
    a = annihilation_matrix(dim).matrix
    herm = 1j * (a.conj().T - a)
    evals, evecs = np.linalg.eigh(herm)
    evals.setflags(write=False)
    evecs.setflags(write=False)
    return evals, evecs


def displacement_matrix(x0: float, p0: float, dim: int) -> ModeOperator:
    """Displacement operator from exponentiating the truncated generator.

    Exact unitary on the truncated space; it approximates the true matrix
    elements only while the displaced support stays below the cutoff, so the
    unitarity of the top-left block degrades for amplitudes with
    (x0^2 + p0^2)/2 approaching dim. Use :func:`displacement_block` where
    exact infinite-space matrix elements are required.
    """
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    alpha = complex(x0, p0) / math.sqrt(2.0)
    s = abs(alpha)
    evals, evecs = _displacement_eigensystem(dim)
    radial = (evecs * np.exp(-1j * s * evals)) @ evecs.conj().T
    if s > 0.0:
        phase = np.exp(1j * np.angle(alpha) * np.arange(dim))
        radial = phase[:, None] * radial * phase.conj()[None, :]
    return ModeOperator(radial)


def displacement_block(x0: float, p0: float, n_rows: int, n_cols: int) -> np.ndarray:
    """Exact matrix elements <m|D(x0, p0)|n> for m < n_rows, n < n_cols.

    Filled from the coherent column <m|D|0> = e^{-|alpha|^2/2} alpha^m/sqrt(m!)
    by the ladder recurrences of D, which stay accurate (absolutely) for
    amplitudes far beyond what the truncated-generator exponential supports.
    """
    alphas = np.array([complex(x0, p0) / math.sqrt(2.0)])
    return displacement_block_batch(alphas, n_rows, n_cols)[0]


def _laguerre_radial_block(s: float, n_rows: int, n_cols: int) -> np.ndarray:
    """Real displacement block <m|D(s)|n> for s >= 0 along the positive x axis.

    Uses the associated-Laguerre closed form with log-domain prefactors, which
    stays absolutely accurate where ladder recurrences cancel catastrophically.
    """
    from scipy.special import eval_genlaguerre, gammaln

    if s == 0.0:
        out = np.zeros((n_rows, n_cols))
        np.fill_diagonal(out, 1.0)
        return out
    m = np.arange(n_rows)[:, None]
    n = np.arange(n_cols)[None, :]
    low = np.minimum(m, n)
    k = np.abs(m - n)
    x = s * s
    lag = eval_genlaguerre(low, k, x)
    sign = np.where((m < n) & (k % 2 == 1), -1.0, 1.0) * np.sign(lag)
    with np.errstate(divide="ignore"):
        logmag = (
            -0.5 * x
            + 0.5 * (gammaln(low + 1.0) - gammaln(np.maximum(m, n) + 1.0))
            + k * math.log(s)
            + np.log(np.abs(lag))
        )
    return sign * np.exp(logmag)


def displacement_block_batch(alphas: np.ndarray, n_rows: int, n_cols: int) -> np.ndarray:
    """Stacked exact displacement blocks for an array of alpha values.

    Each block is assembled from the radial block of its amplitude (grouped
    over equal radii, which makes polar outcome grids cheap) and the phase
    identity D(s e^{i theta}) = e^{i theta n_hat} D(s) e^{-i theta n_hat}.
    """
    alphas = np.asarray(alphas, dtype=complex).ravel()
    s = np.abs(alphas)
    theta = np.angle(alphas)
    keys = np.round(s, 12)
    uniq, inverse = np.unique(keys, return_inverse=True)
    radial = np.empty((uniq.size, n_rows, n_cols))
    for i, si in enumerate(uniq):
        radial[i] = _laguerre_radial_block(float(si), n_rows, n_cols)
    rows = np.arange(n_rows)
    cols = np.arange(n_cols)
    ph_r = np.exp(1j * np.outer(theta, rows))
    ph_c = np.exp(-1j * np.outer(theta, cols))
    return radial[inverse] * ph_r[:, :, None] * ph_c[:, None, :]


def fock_state(n: int, dim: int) -> StateVector:
    if not 0 <= n < dim:
        raise ValueError(f"Fock index {n} outside [0, {dim})")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return StateVector(amps)


def coherent_state(x0: float, p0: float, dim: int) -> StateVector:
    """Coherent state with mean quadratures (x0, p0), renormalized on truncation."""
    alpha = complex(x0, p0) / math.sqrt(2.0)
    ns = np.arange(dim)
    log_fact = np.cumsum(np.log(np.maximum(ns, 1)))
    amps = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * log_fact) * alpha**ns
    return StateVector(amps).normalize()


def tmsv_truncation_deficit(r: float, dim: int) -> float:
    """Weight of the untruncated two-mode squeezed vacuum beyond cutoff N = dim-1.

    The Schmidt weights form a geometric series, so the deficit is exactly
    tanh(r)^(2 dim).
    """
    return float(np.tanh(r) ** (2 * dim))


def two_mode_squeezed_vacuum(r: float, dim: int, max_deficit: float | None = None) -> StateVector:
    """Two-mode squeezed vacuum sum_n tanh^n(r)/cosh(r) |n, n>, renormalized.

    Raises TruncationError when the discarded weight exceeds ``max_deficit``.
    """
    if r < 0:
        raise ValueError(f"squeezing parameter must be >= 0, got {r}")
    deficit = tmsv_truncation_deficit(r, dim)
    if max_deficit is not None and deficit > max_deficit:
        raise TruncationError(
            f"TMSV truncation deficit {deficit:.3e} exceeds allowed {max_deficit:.3e}"
            f" (r={r}, dim={dim})"
        )
    lam = math.tanh(r)
    coeffs = lam ** np.arange(dim) / math.cosh(r)
    amps = np.zeros((dim, dim), dtype=complex)
    np.fill_diagonal(amps, coeffs)
    return StateVector(amps.ravel() / np.linalg.norm(coeffs), dims=(dim, dim))


# ---------------------------------------------------------------------------
# Channels and reductions
# ---------------------------------------------------------------------------


def damping_kraus_operators(gamma: float, dim: int, k_max: int | None = None) -> list[np.ndarray]:
    """Kraus ladder of the photon-loss (amplitude damping) channel.

    A_k maps |l> -> sqrt(C(l, k) (1-gamma)^(l-k) gamma^k) |l-k>.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"loss probability must lie in [0, 1], got {gamma}")
    if k_max is None:
        k_max = dim - 1
    if k_max > dim - 1:
        raise ValueError(f"k_max {k_max} exceeds dim-1 = {dim - 1}")
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1.0, dim)))))
    ops = []
    for k in range(k_max + 1):
        mat = np.zeros((dim, dim), dtype=complex)
        src = np.arange(k, dim)
        if gamma == 0.0:
            amp = np.ones_like(src, dtype=float) if k == 0 else np.zeros_like(src, dtype=float)
        elif gamma == 1.0:
            amp = (src == k).astype(float)
        else:
            log_binom = log_fact[src] - log_fact[src - k] - log_fact[k]
            amp = np.exp(0.5 * (log_binom + (src - k) * math.log1p(-gamma) + k * math.log(gamma)))
        mat[src - k, src] = amp
        ops.append(mat)
    return ops


def loss_channel(rho: DensityOperator, l: float, mode: int = 0) -> DensityOperator:
    """Binomial-Kraus photon loss with probability ``l`` on the chosen mode."""
    if not 0.0 <= l <= 1.0:
        raise ValueError(f"loss must lie in [0, 1], got {l}")
    if not 0 <= mode < rho.n_modes:
        raise ValueError(f"mode index {mode} invalid for {rho.n_modes}-mode state")
    if l == 0.0:
        return rho
    dim = rho.dims[mode]
    kraus = damping_kraus_operators(l, dim)
    if rho.n_modes == 1:
        out = np.zeros_like(np.asarray(rho.matrix))
        for op in kraus:
            out += op @ rho.matrix @ op.conj().T
        return DensityOperator(out, rho.dims)
    da, db = rho.dims
    t = np.asarray(rho.matrix).reshape(da, db, da, db)
    out = np.zeros_like(t)
    for op in kraus:
        if mode == 0:
            out += np.einsum("ka,abAB,KA->kbKB", op, t, op.conj(), optimize=True)
        else:
            out += np.einsum("kb,abAB,KB->akAK", op, t, op.conj(), optimize=True)
    return DensityOperator(out.reshape(da * db, da * db), rho.dims)


def partial_trace(rho: DensityOperator, keep: int) -> DensityOperator:
    """Reduced state of a two-mode operator, keeping mode 0 or 1."""
    if rho.n_modes != 2:
        raise ValueError("partial trace requires a two-mode input")
    if keep not in (0, 1):
        raise ValueError(f"keep must be 0 or 1, got {keep}")
    da, db = rho.dims
    t = np.asarray(rho.matrix).reshape(da, db, da, db)
    if keep == 0:
        red = np.einsum("abAb->aA", t)
        return DensityOperator(red, (da,))
    red = np.einsum("abaB->bB", t)
    return DensityOperator(red, (db,))


def fidelity(a: DensityOperator, b: DensityOperator) -> float:
    """Uhlmann fidelity F = (Tr sqrt(sqrt(a) b sqrt(a)))^2 in [0, 1].

    With this (squared) convention F(|psi>, rho) = <psi|rho|psi>, e.g.
    F(|0>, |alpha>) = exp(-|alpha|^2).
    """
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")
    evals, evecs = np.linalg.eigh(np.asarray(a.matrix))
    evals = np.clip(evals, 0.0, None)
    sqrt_a = (evecs * np.sqrt(evals)) @ evecs.conj().T
    inner = sqrt_a @ np.asarray(b.matrix) @ sqrt_a
    lam = np.linalg.eigvalsh(inner)
    root = np.sqrt(np.clip(lam, 0.0, None)).sum()
    return float(min(max(root**2, 0.0), 1.0))


def state_fidelity(psi: StateVector, rho: DensityOperator | StateVector) -> float:
    """Overlap fidelity <psi|rho|psi> for a pure reference state."""
    if isinstance(rho, StateVector):
        return float(abs(np.vdot(psi.amps, rho.amps)) ** 2)
    if psi.dims != rho.dims:
        raise ValueError("dimension mismatch")
    return float(np.real(np.vdot(psi.amps, np.asarray(rho.matrix) @ psi.amps)))


def quadrature_moments(rho: DensityOperator) -> dict[str, float]:
    """First and second quadrature moments of a single-mode state."""
    if rho.n_modes != 1:
        raise ValueError("quadrature moments defined for single-mode states")
    x, p = quadrature_matrices(rho.dim)
    m = np.asarray(rho.matrix)
    mx = float(np.trace(m @ x).real)
    mp = float(np.trace(m @ p).real)
    vx = float(np.trace(m @ x @ x).real) - mx**2
    vp = float(np.trace(m @ p @ p).real) - mp**2
    return {"mean_x": mx, "mean_p": mp, "var_x": vx, "var_p": vp}


def mean_photon_number(rho: DensityOperator) -> float:
    if rho.n_modes != 1:
        raise ValueError("single-mode states only")
    return float(np.real(np.diag(rho.matrix) @ np.arange(rho.dim)))
