"""Feature extraction: per-breath values, trailing windows, streaming parity."""
import numpy as np
import pytest

from conftest import breath_from
from ventclass.core import SamplingSpec, VentMode
from ventclass.errors import ConfigError
from ventclass.features import (FeatureConfig, FeatureStream, block_slopes,
                                detect_plateau, extract_features,
                                feature_matrix, insp_flow_slope_variance,
                                pressure_itime, pressure_itime_from_arrays,
                                pressure_variance)
from ventclass.synth import SynthConfig, generate_patient

SPEC = SamplingSpec(rate_hz=50.0)
CFG = FeatureConfig()


class TestBlockSlopes:
    def test_linear_ramp_constant_slope(self):
        t = np.arange(40) / 50.0
        slopes = block_slopes(100.0 * t, SPEC, CFG)
        assert slopes.size == 10
        np.testing.assert_allclose(slopes, 100.0, rtol=1e-12)

    def test_short_tail_discarded(self):
        slopes = block_slopes(np.arange(7, dtype=float), SPEC, CFG)
        assert slopes.size == 1

    def test_piecewise_ramp(self):
        # 4 samples rising at 50 L/min/s, 4 falling at -50 (dt = 0.02 s)
        y = np.array([0.0, 1.0, 2.0, 3.0, 3.0, 2.0, 1.0, 0.0])
        slopes = block_slopes(y, SPEC, CFG)
        np.testing.assert_allclose(slopes, [50.0, -50.0], rtol=1e-12)

    def test_fractional_block_rejected(self):
        with pytest.raises(ConfigError):
            FeatureConfig(slope_window_s=0.05).slope_block(
                SamplingSpec(rate_hz=30.0))


class TestPerBreathFeatures:
    def test_linear_inspiration_zero_slope_variance(self):
        flow = np.concatenate((np.linspace(40, 10, 40), np.full(20, -10.0)))
        b = breath_from(flow, np.full(60, 8.0))
        assert insp_flow_slope_variance(b, CFG) == pytest.approx(0.0, abs=1e-18)

    def test_alternating_slopes_variance_2500(self):
        # slopes [50, -50]: mean 0, population variance 2500
        insp = 10.0 + np.array([0.0, 1, 2, 3, 3, 2, 1, 0])
        flow = np.concatenate((insp, np.full(10, -5.0)))
        b = breath_from(flow, np.full(flow.size, 8.0))
        assert b.x0_index == 8
        assert insp_flow_slope_variance(b, CFG) == pytest.approx(2500.0)

    def test_single_block_inspiration_zero(self):
        flow = np.concatenate((np.array([10.0, 11, 12, 13]), np.full(6, -5.0)))
        b = breath_from(flow, np.full(10, 8.0))
        assert insp_flow_slope_variance(b, CFG) == 0.0

    def test_pressure_variance_example(self):
        b = breath_from([10.0, 10, -5, -5], [5.0, 5, 25, 25])
        assert pressure_variance(b) == pytest.approx(100.0)

    def test_pressure_variance_shift_invariant(self):
        rng = np.random.default_rng(5)
        p = rng.uniform(5, 25, 50)
        f = np.concatenate((np.full(25, 10.0), np.full(25, -10.0)))
        assert pressure_variance(breath_from(f, p + 7.0)) == \
            pytest.approx(pressure_variance(breath_from(f, p)), rel=1e-9)

    def test_pressure_itime_hand_count(self):
        # peep 5, pip 25 -> threshold 13; exactly 30 samples above
        pressure = np.concatenate((np.full(30, 25.0), np.full(40, 5.0)))
        flow = np.concatenate((np.full(30, 20.0), np.full(40, -10.0)))
        b = breath_from(flow, pressure)
        assert b.meta.peep == 5.0 and b.meta.pip == 25.0
        assert pressure_itime(b, b.meta, CFG) == pytest.approx(0.6)

    def test_pressure_itime_flat_pressure_zero(self):
        b = breath_from(np.concatenate((np.full(5, 10.0), np.full(5, -5.0))),
                        np.full(10, 7.0))
        assert pressure_itime(b, b.meta, CFG) == 0.0

    def test_pressure_itime_all_above_full_duration(self):
        assert pressure_itime_from_arrays(np.full(100, 9.0), peep=0.0,
                                          pip=10.0, fraction=0.4,
                                          dt=SPEC.dt_s) == pytest.approx(2.0)


class TestDetectPlateau:
    @staticmethod
    def _hold_breath(hold_s: float, hold_pressure: float, hold_flow: float = 0.0):
        insp = np.full(20, 40.0)
        hold = np.full(int(hold_s * 50), hold_flow)
        exp = np.full(30, -20.0)
        flow = np.concatenate((insp, hold, exp))
        pressure = np.concatenate((np.full(20, 20.0),
                                   np.full(hold.size, hold_pressure),
                                   np.full(30, 5.0)))
        return breath_from(flow, pressure)

    def test_hold_at_elevated_pressure_detected(self):
        b = self._hold_breath(0.4, hold_pressure=18.0)
        assert detect_plateau(b, b.meta, CFG)

    def test_ordinary_ps_breath_no_hold(self):
        cfg = SynthConfig(mode=VentMode.PS, n_breaths=30, seed=2)
        wf, _ = generate_patient(cfg, heterogeneous=False)
        for rec in wf.breaths:
            b = breath_from(rec.flow, rec.pressure)
            assert not detect_plateau(b, b.meta, CFG)

    def test_zero_flow_at_peep_not_a_plateau(self):
        b = self._hold_breath(0.4, hold_pressure=5.0)  # pressure back at PEEP
        assert not detect_plateau(b, b.meta, CFG)

    def test_short_hold_rejected(self):
        b = self._hold_breath(0.1, hold_pressure=18.0)
        assert not detect_plateau(b, b.meta, CFG)


def _identical_breaths(n):
    flow = np.concatenate((np.linspace(40, 10, 40), np.full(20, -10.0)))
    pressure = np.concatenate((np.full(40, 18.0), np.full(20, 5.0)))
    return [breath_from(flow, pressure) for _ in range(n)]


class TestWindowedFeatures:
    def test_identical_breaths_zero_window_variances(self):
        vecs = extract_features(_identical_breaths(5), CFG)
        for v in vecs:
            assert v.f3_var_of_slope_var_w10 == pytest.approx(0.0, abs=1e-18)
            assert v.f4_itime_var_w10 == pytest.approx(0.0, abs=1e-18)
            assert v.f5_pressure_itime_var_w10 == pytest.approx(0.0, abs=1e-18)
            assert v.f7_pressure_itime_var_w100 == pytest.approx(0.0,
                                                                 abs=1e-18)
            assert 0 <= v.f6_n_plateaus_w20 <= 5

    def test_first_breath_degenerate_windows_zero(self):
        rng = np.random.default_rng(9)
        flow = np.concatenate((rng.uniform(10, 40, 30), rng.uniform(-30, -5, 20)))
        pressure = rng.uniform(5, 25, 50)
        v = extract_features([breath_from(flow, pressure)], CFG)[0]
        assert v.f3_var_of_slope_var_w10 == 0.0
        assert v.f4_itime_var_w10 == 0.0
        assert v.f5_pressure_itime_var_w10 == 0.0
        assert v.f7_pressure_itime_var_w100 == 0.0

    def test_alternating_itime_trailing_variance(self):
        # itimes alternate 1.0/1.2 s -> any 10-window holds five of each:
        # population variance = 0.01
        breaths = []
        for i in range(120):
            n_insp = 50 if i % 2 == 0 else 60
            flow = np.concatenate((np.full(n_insp, 20.0), np.full(20, -10.0)))
            breaths.append(breath_from(flow, np.full(flow.size, 8.0)))
        mat = feature_matrix(breaths, CFG)
        np.testing.assert_allclose(mat[9:, 3], 0.01, rtol=1e-9)

    def test_windows_vs_brute_force_oracle(self):
        cfg = SynthConfig(mode=VentMode.PS, n_breaths=150, artifact_rate=0.1,
                          seed=31)
        wf, _ = generate_patient(cfg)
        from ventclass.breath import make_breath
        breaths = [make_breath(r, wf.spec) for r in wf.breaths]
        mat = feature_matrix(breaths, CFG)
        f1 = mat[:, 0]
        itime = np.array([b.meta.itime_s for b in breaths])
        pit = np.array([pressure_itime(b, b.meta, CFG) for b in breaths])
        plat = np.array([detect_plateau(b, b.meta, CFG) for b in breaths],
                        dtype=float)

        def brute_var(vals, i, w):
            window = vals[max(0, i - w + 1):i + 1]
            return np.var(window) if window.size >= 2 else 0.0

        for i in range(len(breaths)):
            assert mat[i, 2] == pytest.approx(brute_var(f1, i, 10),
                                              rel=1e-9, abs=1e-12)
            assert mat[i, 3] == pytest.approx(brute_var(itime, i, 10),
                                              rel=1e-9, abs=1e-12)
            assert mat[i, 4] == pytest.approx(brute_var(pit, i, 10),
                                              rel=1e-9, abs=1e-12)
            assert mat[i, 5] == plat[max(0, i - 19):i + 1].sum()
            assert mat[i, 6] == pytest.approx(brute_var(pit, i, 100),
                                              rel=1e-9, abs=1e-12)

    def test_streaming_equals_batch(self):
        cfg = SynthConfig(mode=VentMode.PAV, n_breaths=130, artifact_rate=0.05,
                          seed=13)
        wf, _ = generate_patient(cfg)
        from ventclass.breath import make_breath
        breaths = [make_breath(r, wf.spec) for r in wf.breaths]
        mat = feature_matrix(breaths, CFG)
        stream = FeatureStream(CFG)
        for i, b in enumerate(breaths):
            np.testing.assert_array_equal(stream.push(b).as_array(), mat[i])

    def test_all_values_finite(self):
        cfg = SynthConfig(mode=VentMode.CPAP, n_breaths=80, artifact_rate=0.3,
                          seed=41)
        wf, _ = generate_patient(cfg)
        from ventclass.breath import make_breath
        mat = feature_matrix([make_breath(r, wf.spec) for r in wf.breaths], CFG)
        assert np.isfinite(mat).all()

    def test_f6_monotone_in_plateau_breaths(self):
        pav = SynthConfig(mode=VentMode.PAV, n_breaths=40, plateau_every=4,
                          seed=3)
        sparser = SynthConfig(mode=VentMode.PAV, n_breaths=40, plateau_every=10,
                              seed=3)
        from ventclass.breath import make_breath
        for dense_cfg, sparse_cfg in [(pav, sparser)]:
            mats = []
            for cfg in (dense_cfg, sparse_cfg):
                wf, _ = generate_patient(cfg, heterogeneous=False)
                mats.append(feature_matrix(
                    [make_breath(r, wf.spec) for r in wf.breaths], CFG))
            assert mats[0][-1, 5] >= mats[1][-1, 5]

    def test_empty_input(self):
        assert extract_features([], CFG) == []
        assert feature_matrix([], CFG).shape == (0, 7)
