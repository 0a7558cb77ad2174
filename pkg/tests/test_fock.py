import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from telefock import fock
from telefock.errors import TruncationError


def random_density(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = m @ m.conj().T
    return fock.DensityOperator(m / np.trace(m).real, (dim,))


class TestStateTypes:
    def test_state_vector_norm_bounds(self):
        with pytest.raises(ValueError):
            fock.StateVector(np.zeros(4))
        with pytest.raises(ValueError):
            fock.StateVector(np.array([2.0, 0.0]))
        st_ = fock.StateVector(np.array([0.6, 0.0]))
        assert st_.norm() == pytest.approx(0.6)
        assert st_.normalize().norm() == pytest.approx(1.0)

    def test_state_vector_min_dim(self):
        with pytest.raises(ValueError):
            fock.StateVector(np.array([1.0]))

    def test_density_validate(self):
        rho = fock.fock_state(1, 4).to_density()
        rho.validate()
        bad = fock.DensityOperator(np.diag([1.5, 0.0]).astype(complex), (2,))
        with pytest.raises(ValueError, match="trace"):
            bad.validate()
        nonherm = fock.DensityOperator(np.array([[0.5, 0.1], [0.3, 0.5]], dtype=complex), (2,))
        with pytest.raises(ValueError, match="Hermitian"):
            nonherm.validate()

    def test_bell_outcome_finite(self):
        with pytest.raises(ValueError):
            fock.BellOutcome(math.nan, 0.0)
        o = fock.BellOutcome(0.3, -0.4)
        assert o.radius() == pytest.approx(0.5)

    def test_immutability(self):
        rho = fock.fock_state(0, 3).to_density()
        with pytest.raises(ValueError):
            np.asarray(rho.matrix)[0, 0] = 2.0


class TestAnnihilation:
    def test_dim2(self):
        a = fock.annihilation_matrix(2).matrix
        assert np.array_equal(a, np.array([[0, 1], [0, 0]], dtype=complex))

    def test_sqrt2_entry(self):
        a = fock.annihilation_matrix(3).matrix
        assert a[1, 2] == pytest.approx(math.sqrt(2))

    def test_number_identity(self):
        dim = 9
        a = fock.annihilation_matrix(dim).matrix
        n_op = a.conj().T @ a
        assert np.allclose(np.diag(n_op).real, np.arange(dim))

    def test_min_dim(self):
        with pytest.raises(ValueError):
            fock.annihilation_matrix(1)


class TestDisplacement:
    def test_zero_is_identity(self):
        d = fock.displacement_matrix(0.0, 0.0, 12).matrix
        assert np.allclose(d, np.eye(12), atol=1e-14)

    def test_coherent_photon_number(self):
        # Poisson statistics oracle: D(x0,p0)|0> has <n> = (x0^2+p0^2)/2
        for x0, p0 in [(1.0, 0.0), (0.8, -1.2), (1.5, 1.0)]:
            d = fock.displacement_matrix(x0, p0, 40).matrix
            v = d[:, 0]
            nbar = float((np.abs(v) ** 2 @ np.arange(40)).real)
            assert nbar == pytest.approx((x0**2 + p0**2) / 2, abs=1e-6)
            # full Poisson profile
            mean = (x0**2 + p0**2) / 2
            pois = np.exp(-mean) * mean ** np.arange(40) / [math.factorial(k) for k in range(40)]
            assert np.abs(np.abs(v) ** 2 - pois).max() < 1e-6

    def test_inverse(self):
        d = fock.displacement_matrix(0.9, 0.5, 30).matrix
        dinv = fock.displacement_matrix(-0.9, -0.5, 30).matrix
        assert np.abs(d @ dinv - np.eye(30)).max() < 1e-8

    def test_unitarity_on_guard_band(self):
        # truncated-generator exponential must match the exact elements to
        # 1e-6 on the subspace n <= N-10 for the amplitudes in use
        dim = 30
        d = fock.displacement_matrix(1.2, -0.7, dim).matrix
        exact = fock.displacement_block(1.2, -0.7, dim - 10, dim - 10)
        assert np.abs(d[: dim - 10, : dim - 10] - exact).max() < 1e-6

    def test_composition_phase(self):
        dim = 34
        guard = dim - 12
        a, b = (0.5, 0.3), (-0.2, 0.6)
        dab = fock.displacement_matrix(*a, dim).matrix @ fock.displacement_matrix(*b, dim).matrix
        dsum = fock.displacement_matrix(a[0] + b[0], a[1] + b[1], dim).matrix
        ratio = dab[0, 0] / dsum[0, 0]
        assert abs(abs(ratio) - 1.0) < 1e-6
        assert np.abs(dab[:guard, :guard] - ratio * dsum[:guard, :guard]).max() < 1e-6


class TestDisplacementBlock:
    def test_against_laguerre_oracle(self):
        # independent closed-form evaluation, element by element
        from scipy.special import eval_genlaguerre, gammaln

        rng = np.random.default_rng(9)
        for _ in range(4):
            alpha = complex(rng.uniform(-9, 9), rng.uniform(-9, 9))
            blk = fock.displacement_block(alpha.real * math.sqrt(2), alpha.imag * math.sqrt(2), 25, 25)
            x = abs(alpha) ** 2
            for m, n in [(0, 0), (3, 17), (17, 3), (24, 24), (10, 11)]:
                lo, k = min(m, n), abs(m - n)
                lag = eval_genlaguerre(lo, k, x)
                pre = math.exp(-0.5 * x + 0.5 * (gammaln(lo + 1) - gammaln(max(m, n) + 1)))
                base = alpha**k if m >= n else (-alpha.conjugate()) ** k
                assert blk[m, n] == pytest.approx(pre * base * lag, abs=1e-12)

    def test_large_amplitude_identities(self):
        alpha = 9.0 + 6.0j
        tall = fock.displacement_block_batch(np.array([alpha]), 500, 40)[0]
        norms = (np.abs(tall) ** 2).sum(axis=0)
        assert np.abs(norms - 1.0).max() < 1e-12
        left = fock.displacement_block_batch(np.array([alpha]), 40, 500)[0]
        right = fock.displacement_block_batch(np.array([-alpha]), 500, 40)[0]
        assert np.abs(left @ right - np.eye(40)).max() < 1e-11


class TestTMSV:
    def test_r_zero(self):
        tm = fock.two_mode_squeezed_vacuum(0.0, 5)
        amps = np.asarray(tm.amps).reshape(5, 5)
        assert amps[0, 0] == pytest.approx(1.0)
        assert np.abs(amps).sum() == pytest.approx(1.0)

    def test_ground_weight(self):
        tm = fock.two_mode_squeezed_vacuum(1.62, 45)
        c0 = np.asarray(tm.amps).reshape(45, 45)[0, 0].real
        # sech^2(1.62) = 0.14507..., slightly scaled up by renormalization
        assert c0**2 == pytest.approx(0.1450700536704691, rel=1e-3)

    def test_truncation_deficit_geometric(self):
        assert fock.tmsv_truncation_deficit(1.62, 45) == pytest.approx(8.647166833479666e-4, rel=1e-12)
        full = np.tanh(1.62) ** (2 * np.arange(45)) / math.cosh(1.62) ** 2
        assert 1.0 - full.sum() == pytest.approx(fock.tmsv_truncation_deficit(1.62, 45), rel=1e-9)

    def test_deficit_policy(self):
        with pytest.raises(TruncationError):
            fock.two_mode_squeezed_vacuum(1.62, 10, max_deficit=1e-3)
        fock.two_mode_squeezed_vacuum(1.62, 45, max_deficit=1e-3)

    def test_photon_number_correlation_exact(self):
        tm = fock.two_mode_squeezed_vacuum(0.8, 12)
        joint = np.abs(np.asarray(tm.amps).reshape(12, 12)) ** 2
        off = joint - np.diag(np.diag(joint))
        assert off.max() == 0.0

    def test_negative_r_rejected(self):
        with pytest.raises(ValueError):
            fock.two_mode_squeezed_vacuum(-0.1, 5)


class TestLossChannel:
    def test_identity(self):
        rho = fock.fock_state(2, 5).to_density()
        out = fock.loss_channel(rho, 0.0)
        assert np.array_equal(np.asarray(out.matrix), np.asarray(rho.matrix))

    def test_single_photon(self):
        out = fock.loss_channel(fock.fock_state(1, 4).to_density(), 0.2)
        diag = np.diag(out.matrix).real
        assert diag[0] == pytest.approx(0.2)
        assert diag[1] == pytest.approx(0.8)

    def test_coherent_maps_to_coherent(self):
        # Gaussian loss oracle: |alpha> -> |sqrt(1-l) alpha|
        l = 0.35
        x0, p0 = 1.1, -0.6
        rho = fock.coherent_state(x0, p0, 35).to_density()
        out = fock.loss_channel(rho, l)
        target = fock.coherent_state(math.sqrt(1 - l) * x0, math.sqrt(1 - l) * p0, 35).to_density()
        assert fock.fidelity(out, target) == pytest.approx(1.0, abs=1e-8)

    def test_domain(self):
        rho = fock.fock_state(0, 3).to_density()
        with pytest.raises(ValueError):
            fock.loss_channel(rho, 1.2)
        with pytest.raises(ValueError):
            fock.loss_channel(rho, 0.1, mode=1)

    def test_trace_preserved_two_mode(self):
        tm = fock.two_mode_squeezed_vacuum(0.9, 8).to_density()
        out = fock.loss_channel(fock.loss_channel(tm, 0.3, 0), 0.3, 1)
        assert out.trace() == pytest.approx(1.0, abs=1e-10)
        out.validate()

    @settings(max_examples=15, deadline=None)
    @given(
        l1=st.floats(min_value=0.0, max_value=1.0),
        l2=st.floats(min_value=0.0, max_value=1.0),
        seed=st.integers(min_value=0, max_value=2**16),
    )
    def test_composition_law(self, l1, l2, seed):
        rho = random_density(np.random.default_rng(seed), 8)
        two_step = fock.loss_channel(fock.loss_channel(rho, l1), l2)
        one_step = fock.loss_channel(rho, 1.0 - (1.0 - l1) * (1.0 - l2))
        assert np.abs(np.asarray(two_step.matrix) - np.asarray(one_step.matrix)).max() < 1e-9


class TestPartialTraceFidelity:
    def test_product_state(self):
        rng = np.random.default_rng(0)
        a = random_density(rng, 3)
        b = random_density(rng, 4)
        joint = fock.DensityOperator(np.kron(a.matrix, b.matrix), (3, 4))
        assert np.allclose(fock.partial_trace(joint, 0).matrix, a.matrix, atol=1e-12)
        assert np.allclose(fock.partial_trace(joint, 1).matrix, b.matrix, atol=1e-12)

    def test_tmsv_reduction_is_thermal(self):
        r = 1.1
        tm = fock.two_mode_squeezed_vacuum(r, 25).to_density()
        for keep in (0, 1):
            red = fock.partial_trace(tm, keep)
            diag = np.diag(red.matrix).real
            lam = math.tanh(r) ** 2
            geometric = (1 - lam) * lam ** np.arange(25)
            geometric /= geometric.sum()
            assert np.abs(diag - geometric).max() < 1e-12

    def test_bell_reduction_maximally_mixed(self):
        bell = fock.StateVector(np.array([1, 0, 0, 1]) / math.sqrt(2), dims=(2, 2))
        red = fock.partial_trace(bell.to_density(), 0)
        assert np.allclose(red.matrix, np.eye(2) / 2)

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            fock.partial_trace(fock.fock_state(0, 3).to_density(), 0)

    def test_fidelity_basics(self):
        rho = random_density(np.random.default_rng(3), 5)
        assert fock.fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
        zero = fock.fock_state(0, 5).to_density()
        one = fock.fock_state(1, 5).to_density()
        assert fock.fidelity(zero, one) == pytest.approx(0.0, abs=1e-12)

    def test_fidelity_vacuum_coherent(self):
        # overlap integral oracle: F = exp(-|alpha|^2)
        x0, p0 = 1.3, -0.4
        alpha2 = (x0**2 + p0**2) / 2
        coh = fock.coherent_state(x0, p0, 40).to_density()
        vac = fock.fock_state(0, 40).to_density()
        assert fock.fidelity(vac, coh) == pytest.approx(math.exp(-alpha2), rel=1e-8)

    def test_fidelity_symmetry_and_mismatch(self):
        rng = np.random.default_rng(4)
        a, b = random_density(rng, 6), random_density(rng, 6)
        assert fock.fidelity(a, b) == pytest.approx(fock.fidelity(b, a), abs=1e-10)
        with pytest.raises(ValueError):
            fock.fidelity(a, random_density(rng, 5))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**16), l=st.floats(min_value=0.0, max_value=1.0))
def test_channel_outputs_stay_physical(seed, l):
    rho = random_density(np.random.default_rng(seed), 7)
    fock.loss_channel(rho, l).validate()
