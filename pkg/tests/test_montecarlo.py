import math
from dataclasses import replace

import numpy as np
import pytest

from momentsense.detectors import Detector
from momentsense.montecarlo import (
    CurvePoint,
    EnergyCalibration,
    SweepAxis,
    TrialConfig,
    cell_seed,
    moment_theory,
    run_cell,
    simulate_statistics,
    sweep,
)
from momentsense.stats_core import SignalModel, q_inverse, theoretical_pd, threshold_for_pf
from momentsense.waveform import ChannelKind, Hypothesis, SyncMode, UncertaintyModel

H0 = TrialConfig(hypothesis=Hypothesis.H0, model=SignalModel.NOISE_ONLY, n=2**12, trials=2000, seed=11)


def within(point: CurvePoint, target: float, k: float = 3.0) -> bool:
    se = math.sqrt(target * (1 - target) / point.trials)
    return abs(point.p_hat - target) <= k * se


class TestConfig:
    def test_async_requires_shaping(self):
        with pytest.raises(ValueError):
            TrialConfig(sync=SyncMode.ASYNCHRONOUS)

    @pytest.mark.parametrize("kw", [dict(n=1), dict(trials=0), dict(target_pf=1.0),
                                    dict(sigma2=0.0), dict(seed=-1), dict(seed=2**64),
                                    dict(hypothesis=Hypothesis.H1, model=SignalModel.NOISE_ONLY)])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            TrialConfig(**kw)

    def test_energy_design_variance(self):
        cfg = TrialConfig(uncertainty=UncertaintyModel(1.0), sigma2=2.0)
        assert cfg.energy_sigma2 == pytest.approx(2.0 * 10**0.1)
        nominal = replace(cfg, energy_calibration=EnergyCalibration.NOMINAL)
        assert nominal.energy_sigma2 == 2.0


class TestRunCell:
    def test_h0_false_alarm(self):
        moment, energy = run_cell(replace(H0, trials=10**4))
        assert moment.detector is Detector.MOMENT and energy.detector is Detector.ENERGY
        assert within(moment, 0.1)
        assert within(energy, 0.1)
        assert moment.theoretical == 0.1
        assert energy.theoretical is None

    def test_std_error_formula(self):
        moment, _ = run_cell(replace(H0, trials=500))
        assert moment.std_error == pytest.approx(math.sqrt(moment.p_hat * (1 - moment.p_hat) / 500))
        assert moment.failures == 0

    def test_qpsk_pd_matches_theory(self):
        cfg = TrialConfig(model=SignalModel.QPSK, snr_db=-10.0, n=2**14, trials=2000, seed=5)
        moment, _ = run_cell(cfg)
        pd = theoretical_pd(SignalModel.QPSK, 0.1, 2**14, threshold_for_pf(0.1))
        assert moment.theoretical == pytest.approx(pd)
        assert abs(moment.p_hat - pd) <= 3 * math.sqrt(pd * (1 - pd) / cfg.trials)

    def test_theory_only_for_awgn_unshaped(self):
        base = TrialConfig(model=SignalModel.QPSK, snr_db=-5.0)
        assert moment_theory(base) is not None
        assert moment_theory(replace(base, channel=ChannelKind.RAYLEIGH_BLOCK)) is None
        assert moment_theory(replace(base, pulse_shaping=True)) is None

    def test_theory_averages_over_uncertainty(self):
        cfg = TrialConfig(model=SignalModel.QPSK, snr_db=-8.0, n=2**12, trials=3000, seed=8,
                          uncertainty=UncertaintyModel(3.0))
        theory = moment_theory(cfg)
        at_nominal = theoretical_pd(SignalModel.QPSK, cfg.beta, cfg.n, threshold_for_pf(0.1))
        assert theory != pytest.approx(at_nominal, rel=1e-3)
        moment, _ = run_cell(cfg)
        assert abs(moment.p_hat - theory) <= 3 * math.sqrt(theory * (1 - theory) / cfg.trials)

    def test_moment_beats_energy_under_uncertainty(self):
        cfg = TrialConfig(model=SignalModel.QPSK, snr_db=-10.0, n=2**16, trials=800, seed=3,
                          uncertainty=UncertaintyModel(1.0))
        moment, energy = run_cell(cfg)
        # worst-case energy threshold: P(sigma2 (1 + beta) > eps (1 + z/sqrt(N))) ~ 0.23
        assert 0.1 < energy.p_hat < 0.35
        assert moment.p_hat - energy.p_hat > 3 * math.hypot(moment.std_error, energy.std_error)


    def test_moment_beats_energy_from_energy_midpoint(self):
        n = 2**12
        beta = float(q_inverse(0.1)) / math.sqrt(n)
        cfg = TrialConfig(model=SignalModel.QPSK, snr_db=10 * math.log10(beta), n=n, trials=2000, seed=21)
        _, energy0 = run_cell(cfg)
        assert abs(energy0.p_hat - 0.5) < 3 * math.sqrt(0.25 / cfg.trials)
        moment, energy = run_cell(replace(cfg, uncertainty=UncertaintyModel(1.0)))
        assert moment.p_hat - energy.p_hat > 3 * math.hypot(moment.std_error, energy.std_error)

    def test_nominal_energy_threshold_inflates_pf(self):
        cfg = replace(H0, uncertainty=UncertaintyModel(1.0), energy_calibration=EnergyCalibration.NOMINAL)
        _, energy = run_cell(cfg)
        # P(sigma2 > 1 + z/sqrt(N)) for sigma2 ~ U[10^-0.1, 10^0.1]
        eps = 10**0.1
        expect = (eps - (1 + float(q_inverse(0.1)) / 64)) / (eps - 1 / eps)
        assert abs(energy.p_hat - expect) < 0.05


class TestDeterminism:
    def test_thread_count_does_not_matter(self):
        cfg = TrialConfig(model=SignalModel.QAM16, snr_db=-6.0, n=1024, trials=37, seed=99,
                          pulse_shaping=True, sync=SyncMode.ASYNCHRONOUS,
                          channel=ChannelKind.RAYLEIGH_BLOCK, uncertainty=UncertaintyModel(1.0))
        one = simulate_statistics(cfg, threads=1)
        many = simulate_statistics(cfg, threads=3)
        np.testing.assert_array_equal(one.moment, many.moment)
        np.testing.assert_array_equal(one.energy, many.energy)

    def test_cell_seed_stable(self):
        assert cell_seed(1, SweepAxis.SNR_DB, -10) == cell_seed(1, "snr_db", -10.0)
        assert cell_seed(1, SweepAxis.SNR_DB, -10) != cell_seed(2, SweepAxis.SNR_DB, -10)
        assert cell_seed(1, SweepAxis.SNR_DB, -10) != cell_seed(1, SweepAxis.DELTA_DB, -10)
        assert 0 <= cell_seed(123, SweepAxis.N, 4096) < 2**64

    def test_adding_values_keeps_existing_cells(self):
        base = TrialConfig(model=SignalModel.QPSK, n=512, trials=50, seed=4)
        short = sweep(base, SweepAxis.SNR_DB, [-6.0, -3.0])
        long = sweep(base, SweepAxis.SNR_DB, [-9.0, -6.0, 0.0, -3.0])
        by_value = {(p.sweep_value, p.detector): p for p in long}
        for p in short:
            assert by_value[(p.sweep_value, p.detector)] == p


class TestSweep:
    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            sweep(H0, SweepAxis.SNR_DB, [])

    def test_snr_axis_monotone(self):
        base = TrialConfig(model=SignalModel.QPSK, n=2**12, trials=800, seed=1)
        pts = [p for p in sweep(base, SweepAxis.SNR_DB, [-14, -10, -7, -4]) if p.detector is Detector.MOMENT]
        for a, b in zip(pts, pts[1:]):
            assert b.p_hat >= a.p_hat - 3 * math.hypot(a.std_error, b.std_error)
        assert pts[-1].p_hat > pts[0].p_hat + 0.5

    def test_n_axis_monotone(self):
        base = TrialConfig(model=SignalModel.QPSK, snr_db=-10.0, trials=800, seed=2)
        pts = [p for p in sweep(base, SweepAxis.N, [2**10, 2**12, 2**14]) if p.detector is Detector.MOMENT]
        assert [p.sweep_value for p in pts] == [1024.0, 4096.0, 16384.0]
        for a, b in zip(pts, pts[1:]):
            assert b.p_hat >= a.p_hat - 3 * math.hypot(a.std_error, b.std_error)
        assert pts[-1].p_hat > pts[0].p_hat

    def test_n_axis_rejects_fraction(self):
        with pytest.raises(ValueError):
            sweep(H0, SweepAxis.N, [100.5])

    def test_delta_axis_energy_drift(self):
        pts = sweep(H0, SweepAxis.DELTA_DB, [0.0, 1.0, 2.0])
        moment = [p for p in pts if p.detector is Detector.MOMENT]
        energy = [p for p in pts if p.detector is Detector.ENERGY]
        assert all(within(p, 0.1) for p in moment)
        assert within(energy[0], 0.1)
        assert not within(energy[2], 0.1)

    def test_modulation_ordering(self):
        base = TrialConfig(snr_db=-6.0, n=2**12, trials=2000, seed=6)
        pd = {}
        for model in (SignalModel.QPSK, SignalModel.QAM16, SignalModel.QAM64, SignalModel.CONTINUOUS_UNIFORM):
            pd[model], _ = run_cell(replace(base, model=model))
        order = list(pd.values())
        for a, b in zip(order, order[1:]):
            assert a.p_hat >= b.p_hat - 3 * math.hypot(a.std_error, b.std_error)
        # QPSK vs 16-QAM is resolved beyond 3 s.e. at this SNR.
        q, q16 = order[0], order[1]
        assert q.p_hat - q16.p_hat > 3 * math.hypot(q.std_error, q16.std_error)


def test_sync_vs_async_shaped():
    base = TrialConfig(model=SignalModel.QPSK, snr_db=-6.0, n=2**12, trials=600, seed=12,
                       pulse_shaping=True)
    ms, es = run_cell(base)
    ma, ea = run_cell(replace(base, sync=SyncMode.ASYNCHRONOUS))
    assert ms.p_hat > ma.p_hat
    assert abs(es.p_hat - ea.p_hat) <= 3 * math.hypot(es.std_error, ea.std_error)
