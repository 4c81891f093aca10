import math

import numpy as np
import pytest

from tsui.gaussian import InterferometerParams
from tsui.metrology import joint_noise_power, joint_variance_quadratic, lambda_opt
from tsui.simulate import (
    MeasurementRecord,
    SimConfig,
    combine_weighted,
    load_sim_config,
    measure_noise_vs_lambda,
    simulate_records,
    spectrum_power,
)

FS = 8e6
SHORT = 0.004
MEDIUM = 0.016


def config(gain=2.0, eta_p=1.0, eta_c=1.0, alpha=0.0, **kwargs):
    params = InterferometerParams(gain=gain, eta_p=eta_p, eta_c=eta_c, alpha=alpha)
    kwargs.setdefault("duration", SHORT)
    return SimConfig(params=params, **kwargs)


class TestSimConfig:
    def test_n_samples(self):
        assert config(duration=SHORT).n_samples == 32000

    def test_validation(self):
        with pytest.raises(ValueError, match="record too short"):
            config(duration=1e-3)
        with pytest.raises(ValueError, match="tone_freq"):
            config(tone_freq=5e6)
        with pytest.raises(ValueError, match="tone_depth"):
            config(tone_depth=1.5)
        with pytest.raises(ValueError, match="lock_jitter_rms"):
            config(lock_jitter_rms=-0.1)
        with pytest.raises(ValueError, match="electronic_noise_var"):
            config(electronic_noise_var=-1.0)
        with pytest.raises(ValueError, match="rng_seed"):
            config(rng_seed=1.5)
        with pytest.raises(ValueError, match="jitter_block"):
            config(jitter_block=0.0)
        with pytest.raises(ValueError, match="params"):
            SimConfig(params=2.0)


class TestSimulateRecords:
    def test_deterministic(self):
        cfg = config(gain=1.67, eta_p=0.76, eta_c=0.79, rng_seed=7)
        a = simulate_records(cfg, trial=3)
        b = simulate_records(cfg, trial=3)
        assert np.array_equal(a.probe, b.probe)
        assert np.array_equal(a.conjugate, b.conjugate)

    def test_trials_independent(self):
        cfg = config(rng_seed=7)
        a = simulate_records(cfg, trial=0)
        b = simulate_records(cfg, trial=1)
        assert not np.array_equal(a.probe, b.probe)

    def test_outputs_read_only(self):
        rec = simulate_records(config())
        with pytest.raises(ValueError):
            rec.probe[0] = 0.0

    def test_vacuum_statistics(self):
        rec = simulate_records(config(gain=1.0, rng_seed=1))
        assert abs(rec.probe.var() - 1.0) < 0.05
        assert abs(rec.conjugate.var() - 1.0) < 0.05
        assert abs(np.cov(rec.probe, rec.conjugate)[0, 1]) < 0.05

    def test_lossy_covariance_matches_theory(self):
        gain, ep, ec = 2.0, 0.76, 0.79
        rec = simulate_records(config(gain=gain, eta_p=ep, eta_c=ec, rng_seed=2))
        vp, vc, cr = joint_variance_quadratic(gain, ep, ec)
        emp = np.cov(rec.probe, rec.conjugate)
        # 32000 samples: relative scatter of a variance is ~0.8%.
        assert abs(emp[0, 0] - vp) < 0.05 * vp
        assert abs(emp[1, 1] - vc) < 0.05 * vc
        assert abs(emp[0, 1] - cr) < 0.05 * abs(cr)

    def test_bright_mean_offsets(self):
        gain, alpha = 2.0, 30.0
        rec = simulate_records(config(gain=gain, alpha=alpha, rng_seed=3))
        # Phase quadratures carry no displacement; the seed lives in the
        # amplitude quadratures, so both records average to zero.
        assert abs(rec.probe.mean()) < 0.05
        assert abs(rec.conjugate.mean()) < 0.05

    def test_validation(self):
        with pytest.raises(ValueError):
            simulate_records(config(), trial=-1)


class TestCombineWeighted:
    def test_linear_combination(self):
        rec = simulate_records(config(rng_seed=4))
        lam = 0.6
        assert np.allclose(combine_weighted(rec, lam), rec.probe + lam * rec.conjugate)

    def test_weight_validation(self):
        rec = simulate_records(config())
        with pytest.raises(ValueError):
            combine_weighted(rec, -0.1)
        with pytest.raises(ValueError):
            combine_weighted(rec, 1.0 + 1e-9)


class TestSpectrumPower:
    def test_white_noise_is_zero_db(self):
        rng = np.random.default_rng(11)
        series = rng.standard_normal(2**17)
        res = spectrum_power(series, 2e6, 1e5, FS)
        assert abs(res.power_db) < 0.2
        assert not res.is_peak

    def test_scaled_noise_tracks_variance(self):
        rng = np.random.default_rng(12)
        series = 2.0 * rng.standard_normal(2**17)
        res = spectrum_power(series, 2e6, 1e5, FS)
        assert abs(res.power_db - 10.0 * math.log10(4.0)) < 0.2

    def test_tone_band_power(self):
        # A pure tone at the analysis frequency integrates to A^2 / 2
        # in linear units before normalization; check against the
        # white-noise reference of the estimator.
        n = 2**17
        t = np.arange(n) / FS
        amp = 3.0
        series = amp * np.sin(2.0 * math.pi * 1e6 * t)
        res = spectrum_power(series, 1e6, 1e5, FS, tone_freq=1e6)
        assert res.is_peak
        nperseg = int(round(8 * FS / 1e5))
        df = FS / nperseg
        n_bins = np.count_nonzero(
            np.abs(np.fft.rfftfreq(nperseg, 1.0 / FS) - 1e6) <= 5e4
        )
        reference = 2.0 * n_bins * df / FS
        expected_db = 10.0 * math.log10((amp**2 / 2.0) / reference)
        assert abs(res.power_db - expected_db) < 0.01

    def test_peak_flag_needs_tone_in_band(self):
        rng = np.random.default_rng(13)
        series = rng.standard_normal(2**15)
        assert spectrum_power(series, 1.5e6, 1e5, FS, tone_freq=1e6).is_peak is False
        assert spectrum_power(series, 1.04e6, 1e5, FS, tone_freq=1e6).is_peak is True

    def test_band_validation(self):
        series = np.zeros(2**15)
        with pytest.raises(ValueError, match="inside"):
            spectrum_power(series, 3.99e6, 1e5, FS)
        with pytest.raises(ValueError, match="inside"):
            spectrum_power(series, 2e4, 1e5, FS)
        with pytest.raises(ValueError, match="too short"):
            spectrum_power(np.zeros(100), 1e6, 1e5, FS)
        with pytest.raises(ValueError, match="1-D"):
            spectrum_power(np.zeros((2, 2**15)), 1e6, 1e5, FS)


class TestMeasuredScan:
    def test_matches_analytic_noise_curve(self):
        gain, ep, ec = 1.67, 0.76, 0.79
        cfg = config(gain=gain, eta_p=ep, eta_c=ec, duration=MEDIUM, rng_seed=5)
        params = cfg.params
        grid = [0.0, 0.25, 0.5, lambda_opt(params), 1.0]
        data = measure_noise_vs_lambda(cfg, grid, trials=2)
        assert data.source == "simulated"
        assert data.meta["gain"] == gain
        for lam, db, sigma in zip(data.lam, data.noise_db, data.sigma_db):
            theory = joint_noise_power(params, lam).variance_db
            assert abs(db - theory) < 5.0 * sigma
            assert sigma > 0.0

    def test_vacuum_scan_flat_at_zero_db(self):
        cfg = config(gain=1.0, duration=MEDIUM, rng_seed=6)
        data = measure_noise_vs_lambda(cfg, [0.0, 0.25, 0.5, 0.75, 1.0], trials=2)
        for lam, db in zip(data.lam, data.noise_db):
            assert abs(db - 10.0 * math.log10(1.0 + lam**2)) < 0.3

    def test_jitter_raises_squeezed_floor(self):
        # Lock error rotates anti-squeezed quadrature noise into the
        # readout, lifting the optimally weighted floor monotonically.
        lam = lambda_opt(InterferometerParams(gain=2.0))
        grid = [0.0, 0.25, 0.5, lam, 1.0]
        floors = []
        for jit in (0.0, 0.1, 0.3):
            cfg = config(
                gain=2.0, duration=MEDIUM, rng_seed=8, lock_jitter_rms=jit
            )
            data = measure_noise_vs_lambda(cfg, grid, trials=2)
            floors.append(data.noise_db[3])
        assert floors[0] < floors[1] < floors[2]

    def test_electronic_noise_raises_floor(self):
        quiet = config(gain=2.0, duration=MEDIUM, rng_seed=9)
        noisy = config(
            gain=2.0, duration=MEDIUM, rng_seed=9, electronic_noise_var=0.5
        )
        grid = [0.0, 0.25, 0.5, 0.75, 1.0]
        db_quiet = measure_noise_vs_lambda(quiet, grid, trials=1).noise_db[-1]
        db_noisy = measure_noise_vs_lambda(noisy, grid, trials=1).noise_db[-1]
        var = joint_noise_power(quiet.params, 1.0).variance
        expected_jump = 10.0 * math.log10((var + 0.5 * 2.0) / var)
        assert abs((db_noisy - db_quiet) - expected_jump) < 0.35

    def test_grid_validation(self):
        cfg = config()
        full = [0.0, 0.25, 0.5, 0.75, 1.0]
        with pytest.raises(ValueError):
            measure_noise_vs_lambda(cfg, [], trials=1)
        with pytest.raises(ValueError):
            measure_noise_vs_lambda(cfg, [0.0, 0.25, 0.5, 0.75, 2.0], trials=1)
        with pytest.raises(ValueError):
            measure_noise_vs_lambda(cfg, full, trials=0)
        with pytest.raises(ValueError):
            measure_noise_vs_lambda(cfg, [0.0, 1.0], trials=1)


class TestRecordIo:
    def test_times_and_csv(self, tmp_path):
        cfg = config(rng_seed=10)
        rec = simulate_records(cfg, trial=1)
        t = rec.times()
        assert t.size == rec.probe.size
        assert math.isclose(t[1] - t[0], 1.0 / FS, rel_tol=1e-12)
        path = tmp_path / "rec.csv"
        rec.to_csv(str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "# gain = 2.0"
        assert "time,probe,conjugate" in lines[:9]
        body = [l for l in lines if not l.startswith("#")]
        first = body[1].split(",")
        assert float(first[1]) == pytest.approx(rec.probe[0], rel=1e-12)


class TestLoadSimConfig:
    def write(self, tmp_path, text):
        path = tmp_path / "sim.cfg"
        path.write_text(text)
        return str(path)

    def test_full_file(self, tmp_path):
        path = self.write(
            tmp_path,
            "# comment line\n"
            "gain = 1.67\n"
            "eta_p = 0.76  # inline comment\n"
            "eta_c = 0.79\n"
            "alpha = 50\n"
            "sample_rate = 8e6\n"
            "duration = 0.004\n"
            "tone_freq = 1e6\n"
            "tone_depth = 0.02\n"
            "lock_jitter_rms = 0.05\n"
            "electronic_noise_var = 0.1\n"
            "rng_seed = 42\n"
            "jitter_block = 0.001\n",
        )
        cfg = load_sim_config(path)
        assert cfg.params.gain == 1.67
        assert cfg.params.eta_p == 0.76
        assert cfg.params.alpha == 50.0
        assert cfg.rng_seed == 42
        assert cfg.n_samples == 32000

    def test_defaults_fill_in(self, tmp_path):
        cfg = load_sim_config(self.write(tmp_path, "gain = 2.0\n"))
        assert cfg.params.eta_p == 1.0
        assert cfg.sample_rate == FS
        assert cfg.rng_seed == 0

    def test_unknown_key_names_line(self, tmp_path):
        path = self.write(tmp_path, "gain = 2.0\nbogus = 1\n")
        with pytest.raises(ValueError, match=r":2: unknown key 'bogus'"):
            load_sim_config(path)

    def test_duplicate_key(self, tmp_path):
        path = self.write(tmp_path, "gain = 2.0\ngain = 3.0\n")
        with pytest.raises(ValueError, match=r":2: duplicate key"):
            load_sim_config(path)

    def test_missing_gain(self, tmp_path):
        path = self.write(tmp_path, "eta_p = 0.8\n")
        with pytest.raises(ValueError, match="missing required key 'gain'"):
            load_sim_config(path)

    def test_bad_value(self, tmp_path):
        path = self.write(tmp_path, "gain = huge\n")
        with pytest.raises(ValueError, match=r":1: could not parse"):
            load_sim_config(path)

    def test_missing_equals(self, tmp_path):
        path = self.write(tmp_path, "gain 2.0\n")
        with pytest.raises(ValueError, match=r":1: expected 'key = value'"):
            load_sim_config(path)

    def test_fractional_seed_rejected(self, tmp_path):
        path = self.write(tmp_path, "gain = 2.0\nrng_seed = 1.5\n")
        with pytest.raises(ValueError, match="rng_seed must be an integer"):
            load_sim_config(path)
