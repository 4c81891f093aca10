import math

import numpy as np
import pytest

from tsui.fock import (
    FockEnsemble,
    TruncationError,
    _loss_kraus,
    apply_loss_fock,
    build_seeded_tmss_fock,
    oracle_mode_quadrature,
    oracle_moment_bundle,
    oracle_photon_moments,
    oracle_photon_variance,
    oracle_quadrature_stats,
    oracle_quadrature_variance,
)
from tsui.gaussian import (
    InterferometerParams,
    apply_loss,
    joint_quadrature_stats,
    photon_moments,
    seeded_tmss,
)


class TestBuild:
    def test_unseeded_photon_pair_ladder(self):
        # Diagonal amplitudes tanh(r)^n / cosh(r), everything else zero.
        state, report = build_seeded_tmss_fock(2.0, 0.0, cutoff=40)
        r = math.acosh(math.sqrt(2.0))
        n = np.arange(41)
        expected = np.tanh(r) ** n / math.cosh(r)
        assert np.abs(np.diag(state.amplitudes) - expected).max() < 1e-10
        off = state.amplitudes - np.diag(np.diag(state.amplitudes))
        assert np.abs(off).max() < 1e-12
        assert report.norm_deficit < 1e-10
        # At G = 2 the vacuum amplitude is 1/sqrt(2).
        assert math.isclose(state.amplitudes[0, 0], 1.0 / math.sqrt(2.0), rel_tol=1e-10)

    def test_gain_one_is_coherent(self):
        state, report = build_seeded_tmss_fock(1.0, 0.5, cutoff=20)
        c = np.exp(-0.125) * 0.5 ** np.arange(21) / np.sqrt(
            [math.factorial(k) for k in range(21)]
        )
        assert np.abs(state.amplitudes[:, 0] - c).max() < 1e-12
        assert np.abs(state.amplitudes[:, 1:]).max() == 0.0
        assert report.norm_deficit < 1e-12

    def test_truncation_error_raised(self):
        # Unseeded tail mass beyond the cutoff is tanh(r)^(2(N+1)) = 2^-13.
        with pytest.raises(TruncationError) as err:
            build_seeded_tmss_fock(2.0, 0.0, cutoff=12)
        assert err.value.report.norm_deficit > 1e-4

    def test_deficit_decreases_with_cutoff(self):
        deficits = []
        for cutoff in (14, 20, 30):
            _, report = build_seeded_tmss_fock(2.0, 0.0, cutoff=cutoff)
            deficits.append(report.norm_deficit)
        assert deficits[0] > deficits[1] > deficits[2]

    def test_input_validation(self):
        with pytest.raises(ValueError):
            build_seeded_tmss_fock(0.5, 0.0)
        with pytest.raises(ValueError):
            build_seeded_tmss_fock(2.0, -1.0)
        with pytest.raises(ValueError):
            build_seeded_tmss_fock(2.0, 0.0, cutoff=0)


class TestLossChannel:
    def test_kraus_completeness(self):
        for eta in (0.0, 0.37, 0.76, 1.0):
            kraus = _loss_kraus(eta, 12)
            total = np.einsum("kij,kil->jl", kraus, kraus)
            assert np.allclose(total, np.eye(12), atol=1e-12)

    def test_identity_at_full_transmission(self):
        state, _ = build_seeded_tmss_fock(1.5, 0.5, cutoff=15)
        ens = apply_loss_fock(state, 1.0, "probe")
        assert ens.branches.shape[0] == 1
        assert np.allclose(ens.branches[0], state.amplitudes, atol=1e-14)

    def test_total_weight_preserved(self):
        state, _ = build_seeded_tmss_fock(1.8, 0.3, cutoff=25)
        before = state.norm_squared()
        ens = apply_loss_fock(state, 0.6, "probe")
        ens = apply_loss_fock(ens, 0.8, "conjugate")
        assert math.isclose(ens.total_weight(), before, rel_tol=1e-12)

    def test_full_loss_empties_mode(self):
        state, _ = build_seeded_tmss_fock(1.5, 1.0, cutoff=20)
        ens = apply_loss_fock(state, 0.0, "probe")
        mean_n, var_n = oracle_photon_moments(ens, "probe")
        assert abs(mean_n) < 1e-12
        assert abs(var_n) < 1e-12

    def test_density_matrix_positive(self):
        # Assemble rho from the branches at a small cutoff and check it
        # is a valid state.
        state, _ = build_seeded_tmss_fock(1.3, 0.3, cutoff=10)
        ens = apply_loss_fock(state, 0.7, "probe")
        flat = ens.branches.reshape(ens.branches.shape[0], -1)
        rho = flat.T @ flat.conj()
        assert np.allclose(rho, rho.conj().T, atol=1e-14)
        eigs = np.linalg.eigvalsh(rho)
        assert eigs.min() > -1e-12
        assert math.isclose(np.trace(rho).real, state.norm_squared(), rel_tol=1e-12)

    def test_validation(self):
        state, _ = build_seeded_tmss_fock(1.5, 0.0, cutoff=10)
        with pytest.raises(ValueError):
            apply_loss_fock(state, 1.2, "probe")
        with pytest.raises(ValueError):
            apply_loss_fock(state, 0.5, "signal")


class TestOracleMoments:
    def test_matches_gaussian_lossless(self):
        for gain, alpha in ((1.2, 0.0), (1.5, 0.5), (2.0, 1.0)):
            state, _ = build_seeded_tmss_fock(gain, alpha, cutoff=40)
            gauss = seeded_tmss(InterferometerParams(gain=gain, alpha=alpha))
            for lam in (0.0, 0.5, 1.0):
                fm, fv = oracle_quadrature_stats(state, lam)
                gm, gv = joint_quadrature_stats(gauss, lam)
                assert abs(fm - gm) < 1e-7
                assert abs(fv - gv) < 1e-6

    def test_matches_gaussian_lossy(self):
        gain, alpha = 1.67, 0.5
        state, _ = build_seeded_tmss_fock(gain, alpha, cutoff=40)
        ens = apply_loss_fock(apply_loss_fock(state, 0.76, "probe"), 0.79, "conjugate")
        gauss = apply_loss(
            seeded_tmss(InterferometerParams(gain=gain, alpha=alpha)), 0.76, 0.79
        )
        for lam in (0.0, 0.5, 1.0):
            assert abs(
                oracle_quadrature_variance(ens, lam)
                - joint_quadrature_stats(gauss, lam)[1]
            ) < 1e-6
        for mode in ("probe", "conjugate"):
            fn, fvar = oracle_photon_moments(ens, mode)
            gm = photon_moments(gauss, mode)
            assert abs(fn - gm.mean_n) < 1e-6
            assert abs(fvar - gm.var_n) < 1e-6

    def test_mode_quadratures_bright(self):
        state, _ = build_seeded_tmss_fock(2.0, 1.0, cutoff=40)
        gauss = seeded_tmss(InterferometerParams(gain=2.0, alpha=1.0))
        for mode, base in (("probe", 0), ("conjugate", 2)):
            for quad, idx in (("x", 0), ("y", 1)):
                m, v = oracle_mode_quadrature(state, mode, quad)
                assert abs(m - gauss.mean[base + idx]) < 1e-7
                assert abs(v - gauss.cov[base + idx, base + idx]) < 1e-6

    def test_bundle_matches_individual_calls(self):
        state, _ = build_seeded_tmss_fock(1.5, 0.7, cutoff=30)
        ens = apply_loss_fock(state, 0.8, "probe")
        bundle = oracle_moment_bundle(ens, [0.0, 0.6, 1.0])
        for lam, mean, var in bundle["joint"]:
            im, iv = oracle_quadrature_stats(ens, lam)
            assert abs(mean - im) < 1e-12
            assert abs(var - iv) < 1e-10
        for mode in ("probe", "conjugate"):
            for quad in ("x", "y"):
                im, iv = oracle_mode_quadrature(ens, mode, quad)
                bm, bv = bundle[mode][quad]
                assert abs(bm - im) < 1e-12
                assert abs(bv - iv) < 1e-10
            inm, invar = oracle_photon_moments(ens, mode)
            assert abs(bundle[mode]["n"][0] - inm) < 1e-12
            assert abs(bundle[mode]["n"][1] - invar) < 1e-10

    def test_photon_variance_helper(self):
        state, _ = build_seeded_tmss_fock(1.6, 0.0, cutoff=35)
        assert math.isclose(
            oracle_photon_variance(state, "probe"),
            oracle_photon_moments(state, "probe")[1],
            rel_tol=1e-14,
        )

    def test_lambda_validation(self):
        state, _ = build_seeded_tmss_fock(1.5, 0.0, cutoff=15)
        with pytest.raises(ValueError):
            oracle_quadrature_stats(state, -0.1)
        with pytest.raises(ValueError):
            oracle_moment_bundle(state, [0.5, 1.2])

    def test_zero_state_rejected(self):
        ens = FockEnsemble(branches=np.zeros((1, 5, 5)), cutoff=4)
        with pytest.raises(ValueError):
            oracle_quadrature_stats(ens, 0.5)
