import math

import numpy as np
import pytest

from telefock import analysis, channels, filters, fock, teleporter as tp
from telefock.errors import HeraldImpossibleError


def small_config(r=1.0, cutoff=8):
    return tp.ExperimentConfig(r=r, cutoff_N=cutoff, grid=tp.GridSpec(range=8.0, step=0.2))


class TestProgramState:
    def test_zero_program_rejected(self):
        with pytest.raises(ValueError):
            filters.ProgramState(np.zeros((3, 3)))

    def test_attenuator_coefficients(self):
        prog = filters.ProgramState.attenuator(0.7, 4)
        assert np.allclose(prog.coeffs, np.diag(0.7 ** np.arange(4)))

    def test_amplifier_requires_gain(self):
        with pytest.raises(ValueError):
            filters.ProgramState.amplifier(0.9, 4)

    def test_resource_state_normalized(self):
        prog = filters.ProgramState(np.array([[1.0, 2.0], [0.5, 0.0]]))
        assert prog.resource_state().norm() == pytest.approx(1.0)


class TestFilterAction:
    def test_transpose_convention(self):
        # f = |0><1| must send |1> to |0>: distinguishes F from F^T
        prog = filters.ProgramState(np.array([[0, 1], [0, 0]], dtype=complex))
        res = filters.apply_program_filter(prog, fock.fock_state(1, 4).to_density(), 0.05, small_config())
        assert np.diag(res.state.matrix).real[0] >= 0.999

    def test_attenuator_program_reduces_to_gn(self):
        g = math.tanh(1.0)
        prog = filters.ProgramState.attenuator(g, 8)
        psi = fock.coherent_state(0.9, 0.2, 8)
        res = filters.apply_program_filter(prog, psi.to_density(), 0.05, small_config())
        target, _ = channels.noiseless_attenuation(psi, g)
        assert fock.state_fidelity(target, res.state) >= 0.999

    def test_scissors(self):
        prog = filters.ProgramState.scissors()
        coh = fock.coherent_state(0.5, 0.0, 8).to_density()
        res = filters.apply_program_filter(prog, coh, 0.05, small_config())
        oracle, _ = filters.apply_filter_matrix(prog, coh)
        assert fock.fidelity(res.state, oracle) >= 0.999
        probs = np.diag(res.state.matrix).real
        assert probs[:2].sum() == pytest.approx(1.0, abs=1e-9)
        # populations renormalized from the input 0/1 block
        in_diag = np.diag(coh.matrix).real
        assert probs[1] / probs[0] == pytest.approx(in_diag[1] / in_diag[0], rel=1e-2)

    def test_amplifier_undoes_attenuation(self):
        r = 1.0
        gamma = 1.0 / math.tanh(r)
        prog = filters.ProgramState.amplifier(gamma, 7)
        psi = fock.coherent_state(0.7, -0.3, 8)
        attenuated, _ = channels.noiseless_attenuation(psi, math.tanh(r))
        res = filters.apply_program_filter(prog, attenuated.to_density(), 0.05, small_config())
        assert fock.state_fidelity(psi, res.state) >= 0.999

    def test_small_l_ladder_monotone(self):
        rng = np.random.default_rng(17)
        cfg = small_config()
        for trial in range(5):
            coeffs = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            prog = filters.ProgramState(coeffs)
            m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            m = m @ m.conj().T
            rho = fock.DensityOperator(m / np.trace(m).real, (5,))
            oracle, _ = filters.apply_filter_matrix(prog, rho)
            dists = []
            for L in (1.0, 0.5, 0.2, 0.1, 0.05):
                out = filters.apply_program_filter(prog, rho, L, cfg)
                dists.append(np.abs(np.asarray(out.state.matrix) - np.asarray(oracle.matrix)).max())
            assert all(b < a for a, b in zip(dists, dists[1:]))

    def test_success_probability_calibration(self):
        # P(L->0) = Tr[F rho F^dag] * C(L), with C fixed by the g^n case
        cfg = small_config()
        L = 0.05
        g = 0.6
        prog_ref = filters.ProgramState.attenuator(g, 6)
        rho_ref = fock.coherent_state(0.8, 0.0, 6).to_density()
        _, w_ref = filters.apply_filter_matrix(prog_ref, rho_ref)
        p_ref = filters.apply_program_filter(prog_ref, rho_ref, L, cfg).probability
        calibration = p_ref / w_ref
        rng = np.random.default_rng(23)
        for _ in range(3):
            coeffs = rng.normal(size=(4, 4))
            prog = filters.ProgramState(coeffs)
            m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            m = m @ m.conj().T
            rho = fock.DensityOperator(m / np.trace(m).real, (4,))
            _, w = filters.apply_filter_matrix(prog, rho)
            p = filters.apply_program_filter(prog, rho, L, cfg).probability
            assert p / w == pytest.approx(calibration, rel=0.05)

    def test_program_smaller_than_input_support(self):
        # F = |0><2| on a dim-6 input: the kernel contracts rectangular blocks
        coeffs = np.zeros((1, 3), dtype=complex)
        coeffs[0, 2] = 1.0
        prog = filters.ProgramState(coeffs)
        psi = fock.coherent_state(1.2, 0.0, 6).to_density()
        res = filters.apply_program_filter(prog, psi, 0.05, small_config())
        assert np.diag(res.state.matrix).real[0] >= 0.999

    def test_orthogonal_program_heralds_nothing(self):
        prog = filters.ProgramState(np.array([[0, 0], [0, 1]], dtype=complex))
        with pytest.raises(HeraldImpossibleError):
            filters.apply_program_filter(prog, fock.fock_state(0, 4).to_density(), 0.05, small_config())


class TestHybridEntanglement:
    def test_fock_pair_singlet(self):
        pair = filters.HybridPair(np.array([1, 0]), np.array([0, 1]))
        state = filters.hybrid_entangled_state(pair, 4)
        assert analysis.entanglement_entropy(state) == pytest.approx(1.0, abs=1e-12)

    def test_nonorthogonal_pair_still_one_ebit(self):
        pair = filters.HybridPair(np.array([1.0, 0.0, 0.0]), np.array([0.6, 0.8, 0.0]))
        state = filters.hybrid_entangled_state(pair, 6)
        assert analysis.entanglement_entropy(state) == pytest.approx(1.0, abs=1e-9)

    def test_swap_antisymmetry(self):
        a = np.array([1.0, 0.2, 0.0])
        b = np.array([0.1, 0.9, 0.3])
        s1 = filters.hybrid_entangled_state(filters.HybridPair(a, b), 5)
        s2 = filters.hybrid_entangled_state(filters.HybridPair(b, a), 5)
        assert np.abs(np.asarray(s1.amps) + np.asarray(s2.amps)).max() < 1e-12

    def test_identical_pair_rejected(self):
        with pytest.raises(ValueError, match="identical"):
            filters.HybridPair(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))

    def test_attenuation_preserves_one_ebit(self):
        rng = np.random.default_rng(31)
        for _ in range(5):
            a = rng.normal(size=4) + 1j * rng.normal(size=4)
            b = rng.normal(size=4) + 1j * rng.normal(size=4)
            pair = filters.HybridPair(a, b)
            state = filters.hybrid_entangled_state(pair, 8)
            for g in (0.9, 0.5, 0.2):
                out, weight = filters.attenuate_hybrid_both(state, g)
                assert analysis.entanglement_entropy(out) == pytest.approx(1.0, abs=1e-9)
                assert 0 < weight <= 1

    def test_attenuated_equals_attenuated_pair(self):
        # output is the antisymmetric combination of the attenuated pair
        pair = filters.HybridPair(np.array([0.8, 0.6, 0.0]), np.array([0.0, 0.6, 0.8]))
        state = filters.hybrid_entangled_state(pair, 6)
        g = 0.5
        out, _ = filters.attenuate_hybrid_both(state, g)
        gn = g ** np.arange(3)
        pair2 = filters.HybridPair(pair.psi_coeffs * gn, pair.phi_coeffs * gn)
        ref = filters.hybrid_entangled_state(pair2, 6)
        phase = np.vdot(ref.amps, out.amps)
        assert abs(abs(phase) - 1.0) < 1e-12

    def test_g_one_identity(self):
        pair = filters.HybridPair(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        state = filters.hybrid_entangled_state(pair, 4)
        out, weight = filters.attenuate_hybrid_both(state, 1.0)
        assert np.allclose(np.asarray(out.amps), np.asarray(state.amps), atol=1e-15)
        assert weight == pytest.approx(1.0)

    def test_fock_pair_2_5(self):
        pair = filters.HybridPair(
            np.eye(6)[2].astype(complex), np.eye(6)[5].astype(complex)
        )
        state = filters.hybrid_entangled_state(pair, 7)
        out, _ = filters.attenuate_hybrid_both(state, 0.3)
        assert analysis.entanglement_entropy(out) == pytest.approx(1.0, abs=1e-12)
