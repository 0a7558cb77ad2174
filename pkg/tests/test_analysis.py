import math

import numpy as np
import pytest
from scipy.optimize import brentq

from telefock import analysis, fock
from telefock.errors import AccuracyError


class TestWignerOrigin:
    def test_single_photon(self):
        assert analysis.wigner_origin(fock.fock_state(1, 5).to_density()) == pytest.approx(-1 / math.pi)

    def test_vacuum(self):
        assert analysis.wigner_origin(fock.fock_state(0, 5).to_density()) == pytest.approx(1 / math.pi)

    def test_fig3a_mixture(self):
        probs = np.zeros(5)
        probs[:3] = [0.195, 0.772, 0.033]
        rho = fock.DensityOperator(np.diag(probs).astype(complex), (5,))
        assert analysis.wigner_origin(rho) == pytest.approx(-0.1731605780839821, abs=1e-12)

    def test_parity_identity(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
        m = m @ m.conj().T
        rho = fock.DensityOperator(m / np.trace(m).real, (7,))
        parity = np.diag((-1.0) ** np.arange(7))
        direct = float(np.trace(np.asarray(rho.matrix) @ parity).real) / math.pi
        assert analysis.wigner_origin(rho) == pytest.approx(direct, abs=1e-14)

    def test_two_mode_rejected(self):
        tm = fock.two_mode_squeezed_vacuum(0.5, 4).to_density()
        with pytest.raises(ValueError):
            analysis.wigner_origin(tm)


class TestWignerGrid:
    def test_vacuum_gaussian(self):
        xs = np.arange(-3.0, 3.0001, 0.05)
        grid = analysis.wigner_grid(fock.fock_state(0, 2).to_density(), xs, xs)
        ref = np.exp(-(xs[:, None] ** 2 + xs[None, :] ** 2)) / math.pi
        assert np.abs(grid.values - ref).max() < 1e-6

    def test_coherent_translation(self):
        x0, p0 = 1.0, -0.6
        xs = np.arange(-2.5, 3.5001, 0.1)
        ps = np.arange(-3.0, 2.0001, 0.1)
        grid = analysis.wigner_grid(fock.coherent_state(x0, p0, 30).to_density(), xs, ps)
        ref = np.exp(-((xs[:, None] - x0) ** 2 + (ps[None, :] - p0) ** 2)) / math.pi
        assert np.abs(grid.values - ref).max() < 1e-6

    def test_single_photon_node(self):
        rho = fock.fock_state(1, 6).to_density()

        def slice_w(x):
            return analysis.wigner_grid(rho, np.array([x]), np.array([0.0])).values[0, 0]

        root = brentq(slice_w, 0.4, 1.0, xtol=1e-6)
        assert root**2 == pytest.approx(0.5, abs=1e-3)

    def test_matches_origin(self):
        rng = np.random.default_rng(5)
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        m = m @ m.conj().T
        rho = fock.DensityOperator(m / np.trace(m).real, (6,))
        grid = analysis.wigner_grid(rho, np.array([-0.3, 0.0, 0.4]), np.array([0.0, 0.2]))
        assert grid.values[1, 0] == pytest.approx(analysis.wigner_origin(rho), abs=1e-10)

    def test_normalization_default_grid(self):
        # <n> ~ 5 state on the +-5, 0.05-step grid integrates to 1 within 2e-3
        probs = np.array([0.1, 0.1, 0.1, 0.2, 0.2, 0.1, 0.2])
        rho = fock.DensityOperator(np.diag(probs).astype(complex), (7,))
        xs = np.arange(-5.0, 5.0001, 0.05)
        grid = analysis.wigner_grid(rho, xs, xs)
        assert grid.integral() == pytest.approx(1.0, abs=2e-3)
        assert grid.values.min() >= -1 / math.pi - 1e-6

    def test_validity_guard_strict_mode(self):
        rho = fock.fock_state(0, 8).to_density()
        xs = np.array([0.0, 3.0])
        with pytest.raises(AccuracyError):
            analysis.wigner_grid(rho, xs, xs, pad=False)
        analysis.wigner_grid(rho, np.array([0.0, 1.0]), np.array([0.0]), pad=False)


class TestPhotonDistribution:
    def test_vacuum(self):
        pn = analysis.photon_number_distribution(fock.fock_state(0, 6).to_density())
        assert pn.probs[0] == pytest.approx(1.0)
        assert pn.odd_sum == pytest.approx(0.0)
        assert not pn.negative_at_origin

    def test_sums_to_one(self):
        rng = np.random.default_rng(11)
        m = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
        m = m @ m.conj().T
        pn = analysis.photon_number_distribution(fock.DensityOperator(m / np.trace(m).real, (9,)))
        assert pn.probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_odd_sum_witnesses_negativity(self):
        # odd-sum > 1/2 iff W(0,0) < 0 on random diagonal states
        rng = np.random.default_rng(3)
        for _ in range(50):
            probs = rng.dirichlet(np.ones(8))
            rho = fock.DensityOperator(np.diag(probs).astype(complex), (8,))
            pn = analysis.photon_number_distribution(rho)
            w = analysis.wigner_origin(rho)
            assert pn.negative_at_origin == (w < 0)


class TestEntanglementEntropy:
    def test_bell_state(self):
        bell = fock.StateVector(np.array([0, 1, -1, 0]) / math.sqrt(2), dims=(2, 2))
        assert analysis.entanglement_entropy(bell) == pytest.approx(1.0, abs=1e-12)

    def test_product_state(self):
        prod = fock.StateVector(np.kron([1, 0, 0], [0, 1, 0]).astype(complex), dims=(3, 3))
        assert analysis.entanglement_entropy(prod) == pytest.approx(0.0, abs=1e-12)

    def test_tmsv_schmidt_oracle(self):
        # geometric Schmidt spectrum: S = -sum lam_n log2 lam_n,
        # lam_n = (1 - tanh^2 r) tanh^(2n) r
        value = analysis.entanglement_entropy(fock.two_mode_squeezed_vacuum(1.0, 40))
        assert value == pytest.approx(2.3369093005458965, abs=1e-6)

    def test_symmetry_under_swap(self):
        rng = np.random.default_rng(8)
        amps = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
        amps /= np.linalg.norm(amps)
        s_ab = analysis.entanglement_entropy(fock.StateVector(amps.ravel(), dims=(3, 4)))
        s_ba = analysis.entanglement_entropy(fock.StateVector(amps.T.ravel(), dims=(4, 3)))
        assert s_ab == pytest.approx(s_ba, abs=1e-12)

    def test_mixed_rejected(self):
        mixed = fock.DensityOperator(np.eye(4, dtype=complex) / 4.0, (2, 2))
        with pytest.raises(ValueError, match="pur"):
            analysis.entanglement_entropy(mixed)
