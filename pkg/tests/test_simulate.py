import math

import numpy as np
import pytest

from noma_pep import (
    ChannelModel,
    SystemConfig,
    average_pep,
    bit_error_rate,
    empirical_detection_prob,
    empirical_pep,
    pep_quadrature,
    qpsk_constellation,
    sic_delta_weights,
    sic_detect,
    simulate,
    stats_rows,
    superposed_signal,
    upsilon_factor,
)

QPSK = qpsk_constellation(1.0)


def make_cfg(alpha, sigma_h_sq=0.5, **kw):
    ch = ChannelModel(num_users=len(alpha), sigma_h_sq=sigma_h_sq)
    return SystemConfig(alpha=tuple(alpha), P=1.0, channel=ch,
                        constellation=QPSK, **kw)


class TestConfigValidation:
    def test_alpha_must_sum_to_one(self):
        with pytest.raises(ValueError):
            make_cfg((0.7, 0.2))

    def test_alpha_must_descend(self):
        with pytest.raises(ValueError):
            make_cfg((0.5, 0.5))
        with pytest.raises(ValueError):
            make_cfg((0.2, 0.8))

    def test_alpha_positive(self):
        with pytest.raises(ValueError):
            make_cfg((1.2, -0.2))

    def test_channel_user_count(self):
        ch = ChannelModel(num_users=3, sigma_h_sq=0.5)
        with pytest.raises(ValueError):
            SystemConfig(alpha=(0.8, 0.2), P=1.0, channel=ch,
                         constellation=QPSK)

    def test_fixed_mode_needs_symbols(self):
        with pytest.raises(ValueError):
            make_cfg((0.8, 0.2), symbol_mode="fixed")
        with pytest.raises(ValueError):
            make_cfg((0.8, 0.2), symbol_mode="fixed", fixed_symbols=(0, 9))

    def test_validation_happens_before_trials(self):
        cfg = make_cfg((0.8, 0.2))
        with pytest.raises(ValueError):
            simulate(cfg, 10.0, 0, seed=1)


def test_superposed_signal_energy():
    cfg = make_cfg((0.7, 0.2, 0.1))
    rng = np.random.default_rng(0)
    idx = rng.integers(0, 4, size=(1_000_000, 3))
    s = superposed_signal(cfg, idx)
    # cross-user terms average out for uniform symbols
    assert abs(float(np.mean(np.abs(s) ** 2)) - 1.0) < 0.01


def test_seed_determinism():
    cfg = make_cfg((0.7, 0.2, 0.1))
    a = simulate(cfg, 10.0, 50_000, seed=42)
    b = simulate(cfg, 10.0, 50_000, seed=42)
    assert np.array_equal(a.pairwise_counts, b.pairwise_counts)
    assert np.array_equal(a.detected_counts, b.detected_counts)
    assert a.delta_pattern_counts == b.delta_pattern_counts
    c = simulate(cfg, 10.0, 50_000, seed=43)
    assert not np.array_equal(a.detected_counts, c.detected_counts)


def test_worker_count_invariance():
    cfg = make_cfg((0.8, 0.2))
    a = simulate(cfg, 10.0, 300_000, seed=9, workers=1, batch_size=100_000)
    b = simulate(cfg, 10.0, 300_000, seed=9, workers=2, batch_size=100_000)
    assert np.array_equal(a.pairwise_counts, b.pairwise_counts)
    assert np.array_equal(a.detected_counts, b.detected_counts)
    assert np.array_equal(a.bit_errors, b.bit_errors)
    assert a.delta_pattern_counts == b.delta_pattern_counts


def test_detected_rows_partition_trials():
    cfg = make_cfg((0.7, 0.2, 0.1))
    stats = simulate(cfg, 5.0, 200_000, seed=3)
    for u in range(3):
        np.testing.assert_array_equal(
            stats.detected_counts[u].sum(axis=1), stats.tx_counts[u]
        )
        assert stats.tx_counts[u].sum() == stats.trials
    # detection probabilities for one tx symbol partition to 1
    for l in (1, 2, 3):
        total = sum(empirical_detection_prob(stats, l, 0, rx) for rx in range(4))
        assert abs(total - 1.0) < 1e-12


def test_noiseless_sic_all_correct():
    # With well-separated power coefficients and no noise, the
    # minimum-distance chain decodes every user exactly.
    cfg = make_cfg((0.7, 0.2, 0.1))
    stats = simulate(cfg, 300.0, 1_000, seed=5)
    assert int(stats.symbol_errors.sum()) == 0
    assert int(stats.bit_errors.sum()) == 0
    for u in range(3):
        weights = sic_delta_weights(
            simulate(cfg, 300.0, 100_000, seed=5), u + 1, QPSK
        )
        zero_pattern = tuple(0j for _ in range(u))
        assert weights[zero_pattern] > 0.999999


def test_sic_detect_noiseless_scalar():
    cfg = make_cfg((0.7, 0.2, 0.1))
    pts = QPSK.points_array()
    coeff = np.sqrt(np.array(cfg.alpha))
    rng = np.random.default_rng(8)
    for _ in range(200):
        idx = rng.integers(0, 4, size=3)
        h = complex(rng.normal(), rng.normal())
        r = h * complex(pts[idx] @ coeff)
        for l in (1, 2, 3):
            det, priors = sic_detect(r, h, cfg, l)
            assert det == idx[l - 1]
            assert priors == tuple(idx[: l - 1])


def test_sic_detect_user_one_no_cancellation():
    cfg = make_cfg((0.7, 0.2, 0.1))
    det, priors = sic_detect(0.3 + 0.1j, 0.5 + 0.2j, cfg, 1)
    assert priors == ()


def test_forced_wrong_decision_leaves_residual():
    # Subtracting a wrong first-user decision leaves the power-scaled
    # difference term in the post-cancellation signal.
    cfg = make_cfg((0.8, 0.2))
    pts = QPSK.points_array()
    h = 0.9 - 0.4j
    x1, x2 = pts[0], pts[3]
    r = h * (math.sqrt(0.8) * x1 + math.sqrt(0.2) * x2)  # noiseless
    wrong = pts[1]
    after = r - math.sqrt(0.8) * h * wrong
    expected = math.sqrt(0.2) * h * x2 + math.sqrt(0.8) * h * (x1 - wrong)
    assert abs(after - expected) < 1e-14


def test_single_user_ber_matches_rayleigh_oracle():
    # Exact Gray-QPSK bit error rate over Rayleigh fading:
    # 0.5 * (1 - sqrt(g/(2+g))) with g = P * E[|h|^2] / sigma_n^2.
    cfg = make_cfg((1.0,))
    snr_db = 40.0
    g = 10 ** (snr_db / 10)  # E[|h|^2] = 1 at sigma_h_sq = 0.5
    exact = 0.5 * (1 - math.sqrt(g / (2 + g)))
    trials = 2_000_000
    stats = simulate(cfg, snr_db, trials, seed=21)
    ber = bit_error_rate(stats, 1, QPSK.bits_per_symbol)
    se = math.sqrt(exact / (trials * 2))
    assert abs(ber - exact) < 4 * se


def test_single_user_pairwise_matches_quadrature():
    cfg = make_cfg((1.0,))
    snr_db = 10.0
    stats = simulate(cfg, snr_db, 1_000_000, seed=2)
    model = cfg.channel.with_noise(cfg.noise_var_for_snr(snr_db))
    est = empirical_pep(stats, 1, 0, 1)
    beta = abs(QPSK.points[0] - QPSK.points[1]) ** 2
    ups = upsilon_factor(QPSK.points[0] - QPSK.points[1], model.noise_var)
    analytic = pep_quadrature(1, 1, beta, ups, model)
    assert abs(est.pep - analytic) < 3 * est.ci_half_width


def test_empirical_pep_zero_events():
    cfg = make_cfg((1.0,))
    stats = simulate(cfg, 300.0, 200_000, seed=1)
    est = empirical_pep(stats, 1, 0, 2)
    assert est.pep == 0.0
    assert est.low_confidence
    assert est.ci_half_width == 3.0 / est.conditioning_trials
    with pytest.raises(ValueError):
        empirical_pep(stats, 1, 0, 0)


def test_delta_weights_basics():
    cfg = make_cfg((0.7, 0.2, 0.1))
    stats = simulate(cfg, 40.0, 200_000, seed=4)
    w1 = sic_delta_weights(stats, 1, QPSK)
    assert w1 == {(): 1.0}
    for l in (2, 3):
        w = sic_delta_weights(stats, l, QPSK)
        assert abs(sum(w.values()) - 1.0) < 1e-12
        assert w[tuple(0j for _ in range(l - 1))] > 0.99
        for tx in range(4):
            wt = sic_delta_weights(stats, l, QPSK, tx=tx)
            assert abs(sum(wt.values()) - 1.0) < 1e-12


def test_delta_weights_need_enough_trials():
    cfg = make_cfg((0.8, 0.2))
    stats = simulate(cfg, 10.0, 1_000, seed=4)
    with pytest.raises(ValueError):
        sic_delta_weights(stats, 2, QPSK)


def test_weighted_average_pep_tracks_simulation():
    # End-to-end: conditioned weight tables make the hypothesis-averaged
    # quadrature PEP follow the live SIC chain.
    cfg = make_cfg((0.7, 0.2, 0.1))
    snr_db = 20.0
    stats = simulate(cfg, snr_db, 1_000_000, seed=6)
    model = cfg.channel.with_noise(cfg.noise_var_for_snr(snr_db))
    for l in (2, 3):
        w = sic_delta_weights(stats, l, QPSK, tx=0)
        analytic = average_pep(l, 3, 0, 1, cfg.alpha, 1.0, model, QPSK,
                               sic_mode="weighted", delta_weights=w)
        est = empirical_pep(stats, l, 0, 1)
        assert abs(analytic - est.pep) / est.pep < 0.10


def test_ber_non_increasing_in_snr():
    cfg = make_cfg((0.7, 0.2, 0.1))
    trials = 1_000_000
    bers = {}
    for snr in (5.0, 15.0, 25.0):
        stats = simulate(cfg, snr, trials, seed=12)
        bers[snr] = [bit_error_rate(stats, l, 2) for l in (1, 2, 3)]
    for l in range(3):
        seq = [bers[s][l] for s in (5.0, 15.0, 25.0)]
        slack = 2 * 1.96 * math.sqrt(max(seq) / (trials * 2))
        assert seq[0] >= seq[1] - slack >= seq[2] - 2 * slack


def test_more_power_helps_user_one():
    snr = 15.0
    bers = []
    for a1 in (0.6, 0.75, 0.9):
        cfg = make_cfg((a1, round(1 - a1, 6)))
        stats = simulate(cfg, snr, 300_000, seed=13)
        bers.append(bit_error_rate(stats, 1, 2))
    assert bers[0] > bers[1] > bers[2]


def test_merge_rejects_mismatched_runs():
    cfg = make_cfg((0.8, 0.2))
    a = simulate(cfg, 10.0, 10_000, seed=1)
    b = simulate(cfg, 20.0, 10_000, seed=1)
    with pytest.raises(ValueError):
        a.merge(b)


def test_stats_rows_schema():
    cfg = make_cfg((0.8, 0.2))
    stats = simulate(cfg, 10.0, 100_000, seed=1)
    rows = stats_rows(stats, QPSK.bits_per_symbol)
    metrics = {r["metric"] for r in rows if r["user"] == 1}
    assert "ber" in metrics and "ser" in metrics
    assert "pep_0to1" in metrics
    for r in rows:
        assert set(r) == {"snr_db", "user", "metric", "value",
                          "ci_half_width", "trials"}
        assert 0.0 <= r["value"] <= 1.0
