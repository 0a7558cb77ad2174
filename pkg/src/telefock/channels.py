"""Attenuation-channel algebra of gain-tuned teleportation.

The deterministic gain-tuned teleporter acts as
    rho -> sum_k 1/(k! sinh^{2k} r) a^k [ g^n rho g^n ] a^dag^k,   g = tanh r,
which is the same map as amplitude damping with loss gamma = 1 - tanh^2 r.
The heralded small-radius limit keeps only the noiseless attenuation g^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    DensityOperator,
    ModeOperator,
    StateVector,
    annihilation_matrix,
    damping_kraus_operators,
)


@dataclass(frozen=True, eq=False)
class KrausSet:
    """An ordered Kraus decomposition of a completely positive map."""

    dim: int
    operators: tuple[ModeOperator, ...]
    gamma: float

    def completeness_defect(self, guard: int = 0) -> float:
        """Max elementwise |sum_k A_k^dag A_k - 1| on the subspace n <= dim-1-guard.

        The guard excludes the top levels, where a k_max below dim-1 makes the
        truncated sum fall short of the identity.
        """
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for op in self.operators:
            total += op.matrix.conj().T @ op.matrix
        sub = slice(0, self.dim - guard)
        return float(np.abs(total[sub, sub] - np.eye(self.dim)[sub, sub]).max())

    def apply(self, rho: DensityOperator) -> DensityOperator:
        if rho.n_modes != 1 or rho.dim != self.dim:
            raise ValueError("Kraus set dimension does not match the state")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for op in self.operators:
            out += op.matrix @ rho.matrix @ op.matrix.conj().T
        return DensityOperator(out, rho.dims)


def amplitude_damping_kraus(gamma: float, dim: int, k_max: int | None = None) -> KrausSet:
    """Kraus operators A_k = sum_l sqrt(C(l,k)) sqrt((1-gamma)^(l-k) gamma^k) |l-k><l|."""
    if k_max is not None and k_max > dim - 1:
        raise ValueError(f"k_max {k_max} exceeds dim-1 = {dim - 1}")
    mats = damping_kraus_operators(gamma, dim, k_max)
    return KrausSet(dim=dim, operators=tuple(ModeOperator(m) for m in mats), gamma=float(gamma))


def gain_tuned_channel(rho: DensityOperator, r: float) -> DensityOperator:
    """Deterministic gain-tuned teleportation channel at squeezing r.

    Evaluated term by term: T_0 = g^n rho g^n with g = tanh r, then
    T_{k+1} = a T_k a^dag / ((k+1) sinh^2 r), summed up to k = dim-1, beyond
    which every term vanishes identically on the truncated space.
    """
    if rho.n_modes != 1:
        raise ValueError("single-mode states only")
    if r <= 0:
        raise ValueError(f"squeezing parameter must be > 0, got {r}")
    dim = rho.dim
    g = math.tanh(r)
    gn = g ** np.arange(dim)
    a = annihilation_matrix(dim).matrix
    term = gn[:, None] * np.asarray(rho.matrix) * gn[None, :]
    out = term.copy()
    s2 = math.sinh(r) ** 2
    for k in range(1, dim):
        term = a @ term @ a.conj().T / (k * s2)
        if not term.any():
            break
        out += term
    return DensityOperator(out, rho.dims)


def noiseless_attenuation(psi: StateVector, g: float) -> tuple[StateVector, float]:
    """Heralded noiseless attenuation a_n -> g^n a_n on a pure state.

    Returns the renormalized state and the heralding weight
    sum_n g^{2n} |a_n|^2 (the relative acceptance probability).
    """
    if psi.n_modes != 1:
        raise ValueError("single-mode states only")
    if g <= 0:
        raise ValueError(f"attenuation factor must be > 0, got {g}")
    amps = np.asarray(psi.amps) * g ** np.arange(psi.dim)
    weight = float(np.linalg.norm(amps) ** 2)
    if weight < 1e-300:
        raise ValueError("attenuated state has vanishing norm")
    return StateVector(amps / math.sqrt(weight)), weight


def noiseless_attenuation_mixed(rho: DensityOperator, g: float) -> tuple[DensityOperator, float]:
    """g^n rho g^n / Tr[...] together with the heralding weight Tr[g^n rho g^n]."""
    if rho.n_modes != 1:
        raise ValueError("single-mode states only")
    if g <= 0:
        raise ValueError(f"attenuation factor must be > 0, got {g}")
    gn = g ** np.arange(rho.dim)
    mat = gn[:, None] * np.asarray(rho.matrix) * gn[None, :]
    weight = float(np.trace(mat).real)
    if weight < 1e-300:
        raise ValueError("attenuated state has vanishing trace")
    return DensityOperator(mat / weight, rho.dims), weight


@dataclass(frozen=True)
class NegativityThresholds:
    """Minimal squeezing for Wigner negativity of a teleported attenuated photon.

    ``None`` marks an unattainable regime (the bound would need tanh^2 r > 1).
    """

    conditional_r_min: float | None
    deterministic_r_min: float | None


def negativity_threshold(eta: float) -> NegativityThresholds:
    """Squeezing thresholds for the input eta|1><1| + (1-eta)|0><0|.

    Conditional (small-radius) teleportation keeps negativity iff
    tanh^2 r > (1-eta)/eta; the deterministic channel needs tanh^2 r > 1/(2 eta).
    """
    if eta <= 0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if eta > 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")

    def _r_min(t2: float) -> float | None:
        if t2 >= 1.0:
            return None
        return float(math.atanh(math.sqrt(t2)))

    return NegativityThresholds(
        conditional_r_min=_r_min((1.0 - eta) / eta),
        deterministic_r_min=_r_min(1.0 / (2.0 * eta)),
    )


# ---------------------------------------------------------------------------
# Superoperator / Choi helpers (used by the equivalence and CP checks)
# ---------------------------------------------------------------------------


def channel_superoperator(channel, dim: int) -> np.ndarray:
    """Dense dim^2 x dim^2 superoperator matrix of ``channel`` (column stacking)."""
    sup = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            basis = np.zeros((dim, dim), dtype=complex)
            basis[i, j] = 1.0
            out = channel(DensityOperator(basis, (dim,)))
            sup[:, j * dim + i] = np.asarray(out.matrix).T.ravel()
    return sup


def kraus_superoperator(kraus: KrausSet) -> np.ndarray:
    sup = np.zeros((kraus.dim**2, kraus.dim**2), dtype=complex)
    for op in kraus.operators:
        sup += np.kron(op.matrix.conj(), op.matrix)
    return sup


def choi_matrix(channel, dim: int) -> np.ndarray:
    """Choi matrix (id x channel) acting on the unnormalized maximally entangled ket."""
    choi = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            basis = np.zeros((dim, dim), dtype=complex)
            basis[i, j] = 1.0
            out = np.asarray(channel(DensityOperator(basis, (dim,))).matrix)
            choi[i * dim : (i + 1) * dim, j * dim : (j + 1) * dim] = out
    return choi
