"""Programmable conditional filters and noiseless teleportation of entanglement.

Replacing the teleporter's two-mode squeezed resource with a program state
|f> ~ sum_{k,l} f_kl |k>_A |l>_B turns the small-radius conditional
teleporter into the filter F = sum_{k,l} f_kl |k><l| acting as
F rho F^dag / Tr[F rho F^dag]. The diagonal TMSV program recovers the basic
g^n attenuation filter; a two-qubit program implements quantum scissors; the
truncated sum_k gamma^k |kk> program approximates the noiseless amplifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HeraldImpossibleError
from .fock import DensityOperator, StateVector
from .teleporter import ConditionalResult, ExperimentConfig, _DenseKernel, _integrate_disk


@dataclass(frozen=True, eq=False)
class ProgramState:
    """Coefficient matrix f_kl of a teleporter program |f> (not necessarily normalized)."""

    coeffs: np.ndarray

    def __init__(self, coeffs):
        coeffs = np.array(coeffs, dtype=complex)
        if coeffs.ndim != 2:
            raise ValueError("program coefficients must form a matrix")
        if np.linalg.norm(coeffs) < 1e-12:
            raise ValueError("program state has zero norm")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def filter_matrix(self) -> np.ndarray:
        """The implemented filter F = sum f_kl |k><l| (unnormalized)."""
        return self.coeffs

    def resource_state(self) -> StateVector:
        """Two-mode resource ket realizing this filter through the teleporter.

        The projection <EPR| (psi x f) contracts the program's first index
        with the input, producing sum f_kl psi_k |l>; loading the transposed
        coefficients therefore realizes F itself rather than F^T. A dedicated
        convention test with an asymmetric program pins this down.
        """
        ft = self.coeffs.T
        da, db = (max(n, 2) for n in ft.shape)
        padded = np.zeros((da, db), dtype=complex)
        padded[: ft.shape[0], : ft.shape[1]] = ft
        return StateVector(padded.ravel() / np.linalg.norm(ft), dims=(da, db))

    @classmethod
    def attenuator(cls, g: float, dim: int) -> "ProgramState":
        """Diagonal TMSV-type program for the basic filter F = g^n."""
        if not 0 < g <= 1:
            raise ValueError("attenuation program needs g in (0, 1]")
        return cls(np.diag(g ** np.arange(dim)))

    @classmethod
    def scissors(cls) -> "ProgramState":
        """Two-qubit program |00> + |11>: truncation onto span{|0>, |1>}."""
        return cls(np.eye(2))

    @classmethod
    def amplifier(cls, gamma: float, n_max: int) -> "ProgramState":
        """Truncated noiseless-amplifier program sum_{k<=n_max} gamma^k |kk>."""
        if gamma < 1.0:
            raise ValueError("amplifier program needs gamma >= 1")
        return cls(np.diag(gamma ** np.arange(n_max + 1)))


def apply_filter_matrix(f: ProgramState, rho: DensityOperator) -> tuple[DensityOperator, float]:
    """Direct oracle F rho F^dag / Tr with the heralding weight Tr[F rho F^dag]."""
    if rho.n_modes != 1:
        raise ValueError("single-mode states only")
    fm = f.filter_matrix / np.linalg.norm(f.coeffs)
    d_out, d_in = fm.shape
    mat = np.asarray(rho.matrix)
    if d_in < rho.dim:
        mat = mat[:d_in, :d_in]
    elif d_in > rho.dim:
        fm = fm[:, : rho.dim]
    out = fm @ mat @ fm.conj().T
    weight = float(np.trace(out).real)
    if weight < 1e-12:
        raise HeraldImpossibleError("filter is orthogonal to the input support")
    return DensityOperator(out / weight, (d_out,)), weight


def apply_program_filter(
    f: ProgramState, rho_in: DensityOperator, L: float, config: ExperimentConfig
) -> ConditionalResult:
    """Run the conditional teleporter with |f> as the entangled resource.

    As L -> 0 the normalized output converges to F rho F^dag / Tr[...]; the
    convergence is monotone in L, so callers choose L small enough for their
    tolerance. Raises HeraldImpossibleError when the program cannot herald on
    the given input at all.
    """
    if L <= 0:
        raise HeraldImpossibleError("conditioning disk of radius 0 accepts nothing")
    resource = f.resource_state().to_density()
    apply_filter_matrix(f, rho_in)  # reachability check; raises if unheraldable
    kern = _DenseKernel(rho_in, resource)
    n_r = config.grid.n_radial(L)
    acc1, mass1 = _integrate_disk(kern, config.gain, L, n_r, config.grid.n_theta)
    acc2, mass2 = _integrate_disk(kern, config.gain, L, 2 * n_r, 2 * config.grid.n_theta)
    if mass2 <= 1e-300:
        raise HeraldImpossibleError(f"success probability vanished inside L = {L}")
    mat = 0.5 * (acc2 + acc2.conj().T)
    state = DensityOperator(mat / np.trace(mat).real, (kern.d_out,))
    return ConditionalResult(
        state=state,
        probability=min(mass2, 1.0),
        diagnostics={"mass": mass2, "delta_p": abs(mass2 - mass1), "n_r": 2 * n_r},
    )


@dataclass(frozen=True, eq=False)
class HybridPair:
    """Two distinct single-mode states |Psi>, |Phi> defining a hybrid qubit."""

    psi_coeffs: np.ndarray
    phi_coeffs: np.ndarray

    def __init__(self, psi_coeffs, phi_coeffs):
        psi = np.array(psi_coeffs, dtype=complex)
        phi = np.array(phi_coeffs, dtype=complex)
        if psi.ndim != 1 or phi.ndim != 1 or psi.size != phi.size:
            raise ValueError("pair members must be equal-length amplitude vectors")
        if np.linalg.norm(psi) < 1e-12 or np.linalg.norm(phi) < 1e-12:
            raise ValueError("pair members must be normalizable")
        psi = psi / np.linalg.norm(psi)
        phi = phi / np.linalg.norm(phi)
        if abs(abs(np.vdot(psi, phi)) - 1.0) < 1e-9:
            raise ValueError("pair members are identical up to a phase")
        psi.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "psi_coeffs", psi)
        object.__setattr__(self, "phi_coeffs", phi)


def hybrid_entangled_state(pair: HybridPair, dim: int) -> StateVector:
    """(|Psi>|Phi> - |Phi>|Psi>) / sqrt(2 - 2 |<Psi|Phi>|^2): exactly 1 ebit.

    The antisymmetric combination of any two distinct states is a singlet in
    the 2-d subspace they span, so its entanglement entropy is exactly 1 ebit
    regardless of the overlap.
    """
    psi = np.zeros(dim, dtype=complex)
    phi = np.zeros(dim, dtype=complex)
    n = pair.psi_coeffs.size
    if n > dim:
        raise ValueError(f"pair support {n} exceeds requested dimension {dim}")
    psi[:n] = pair.psi_coeffs
    phi[:n] = pair.phi_coeffs
    overlap = np.vdot(psi, phi)
    denom = math.sqrt(2.0 - 2.0 * abs(overlap) ** 2)
    if denom < 1e-9:
        raise ValueError("degenerate pair: |<Psi|Phi>| = 1")
    amps = (np.kron(psi, phi) - np.kron(phi, psi)) / denom
    return StateVector(amps, dims=(dim, dim))


def attenuate_hybrid_both(state: StateVector, g: float) -> tuple[StateVector, float]:
    """g^n x g^n on both modes, renormalized; also returns the heralding weight."""
    if state.n_modes != 2:
        raise ValueError("two-mode states only")
    if not 0 < g <= 1:
        raise ValueError(f"attenuation factor must lie in (0, 1], got {g}")
    da, db = state.dims
    gna = g ** np.arange(da)
    gnb = g ** np.arange(db)
    amps = np.asarray(state.amps).reshape(da, db) * gna[:, None] * gnb[None, :]
    weight = float(np.linalg.norm(amps) ** 2)
    if weight < 1e-300:
        raise HeraldImpossibleError("attenuated state has vanishing norm")
    return StateVector(amps.ravel() / math.sqrt(weight), dims=(da, db)), weight
