"""Tests for the key-rate pipeline: channel, detector, MI, Holevo, bounds."""

import math

import numpy as np
import oracles
import pytest

from satqkd import specfun
from satqkd.errors import DomainError, UnphysicalStateError
from satqkd.keyrate import (
    KeyRateResult,
    NoiseParams,
    ProtocolParams,
    average_key_rate,
    detector_cm,
    evolve_channel,
    holevo_bound,
    key_rate,
    mutual_information,
    rates_batch,
    repeaterless_bound,
    repeaterless_bound_ensemble,
    source_cm,
)
from satqkd.channel import TransmissivityEnsemble
from satqkd.states import SourceParams, pss_cm, tmsv_cm

# reference value frozen from the implementation at these exact settings
TMSV20_RATE_AT_10DB = 0.017885056926256415


def make_ensemble(samples):
    samples = np.asarray(samples, dtype=float)
    return TransmissivityEnsemble(
        samples=samples,
        seed=0,
        n_samples=samples.size,
        mean_T=float(samples.mean()),
        mean_attenuation_db=-10.0 * math.log10(samples.mean()),
    )


def test_noise_params_validation():
    n = NoiseParams()
    assert (n.epsilon, n.nu, n.eta_d, n.eta_r) == (0.1, 1.1, 0.68, 0.95)
    with pytest.raises(DomainError):
        NoiseParams(epsilon=-0.01)
    with pytest.raises(DomainError):
        NoiseParams(nu=0.99)
    with pytest.raises(DomainError):
        NoiseParams(eta_d=0.0)
    with pytest.raises(DomainError):
        NoiseParams(eta_d=1.01)
    with pytest.raises(DomainError):
        NoiseParams(eta_r=0.0)


def test_protocol_params_roundtrip():
    src = SourceParams("tps", 5.0, 0.7, 1)
    noise = NoiseParams(0.05, 1.2, 0.9, 0.99)
    p = ProtocolParams.from_noise(src, noise)
    assert p.noise == noise
    assert p.source == src
    with pytest.raises(DomainError):
        ProtocolParams(src, epsilon=-1.0)


def test_evolve_channel_values():
    cm = tmsv_cm(20.0)
    out = evolve_channel(cm, 0.5, 0.1)
    assert out.x_var == 41.0
    assert math.isclose(out.y_var, 21.05, rel_tol=1e-14)
    assert math.isclose(out.z_corr, math.sqrt(0.5) * 2.0 * math.sqrt(420.0), rel_tol=1e-14)
    ident = evolve_channel(cm, 1.0, 0.0)
    assert (ident.x_var, ident.y_var, ident.z_corr) == (cm.x_var, cm.y_var, cm.z_corr)
    dark = evolve_channel(cm, 0.0, 0.3)
    assert (dark.y_var, dark.z_corr) == (1.0, 0.0)
    with pytest.raises(DomainError):
        evolve_channel(cm, 1.5, 0.0)
    with pytest.raises(DomainError):
        evolve_channel(cm, 0.5, -0.1)


def test_detector_cm_decouples_at_ideal_settings():
    evolved = evolve_channel(tmsv_cm(4.0), 0.3, 0.05)
    full = detector_cm(evolved, 1.0, 1.3)
    # eta_d = 1: (A, B3) block is the evolved pair, (G, H) a separate TMSV
    np.testing.assert_allclose(full[0:2, 0:2], evolved.x_var * np.eye(2), atol=1e-15)
    np.testing.assert_allclose(full[6:8, 6:8], evolved.y_var * np.eye(2), atol=1e-15)
    np.testing.assert_allclose(full[0:2, 6:8], evolved.z_corr * np.diag([1.0, -1.0]), atol=1e-15)
    np.testing.assert_allclose(full[0:2, 2:4], 0.0, atol=1e-15)
    np.testing.assert_allclose(full[2:4, 6:8], 0.0, atol=1e-15)
    assert math.isclose(full[2, 2], 1.3, rel_tol=1e-15)
    assert math.isclose(full[2, 4], math.sqrt(1.3**2 - 1.0), rel_tol=1e-14)

    vac = detector_cm(evolved, 0.68, 1.0)
    # nu = 1: H stays vacuum and uncorrelated
    np.testing.assert_allclose(vac[4:6, 4:6], np.eye(2), atol=1e-15)
    np.testing.assert_allclose(vac[4:6, 6:8], 0.0, atol=1e-15)
    np.testing.assert_allclose(vac[2:4, 4:6], 0.0, atol=1e-15)


def test_detector_cm_matches_symplectic_oracle():
    # independent construction: explicit beam-splitter symplectic acting on
    # (A, B2) + TMSV(nu), then a mode permutation
    evolved = evolve_channel(tmsv_cm(20.0), 0.1, 0.1)
    got = detector_cm(evolved, 0.68, 1.1)
    want = oracles.bs_symplectic_detector(evolved.as_matrix(), 0.68, 1.1)
    np.testing.assert_allclose(got, want, rtol=0.0, atol=1e-12)

    rng = np.random.default_rng(31)
    for _ in range(25):
        alpha2 = float(rng.uniform(0.2, 30.0))
        ts = float(rng.uniform(0.3, 1.0))
        n = int(rng.integers(0, 4))
        cm = pss_cm(alpha2, ts, n)
        ev = evolve_channel(cm, float(rng.uniform(0.01, 1.0)), float(rng.uniform(0.0, 0.5)))
        eta_d = float(rng.uniform(0.3, 1.0))
        nu = float(rng.uniform(1.0, 2.0))
        got = detector_cm(ev, eta_d, nu)
        want = oracles.bs_symplectic_detector(ev.as_matrix(), eta_d, nu)
        np.testing.assert_allclose(got, want, rtol=0.0, atol=1e-12)
        np.testing.assert_array_equal(got, got.T)


def test_detector_cm_validation_and_unphysical_input():
    evolved = evolve_channel(tmsv_cm(4.0), 0.3, 0.0)
    with pytest.raises(DomainError):
        detector_cm(evolved, 0.0, 1.1)
    with pytest.raises(DomainError):
        detector_cm(evolved, 0.5, 0.9)
    bad = oracles.unsafe_two_mode_cm(1.0, 1.0, 0.9)
    with pytest.raises(UnphysicalStateError):
        detector_cm(bad, 0.68, 1.1)


def test_mutual_information_basics():
    uncorr = oracles.unsafe_two_mode_cm(3.0, 3.0, 0.0)
    assert mutual_information(uncorr, 0.5, 0.1, 0.68, 1.1) == 0.0
    # lossless noiseless ideal detection on a TMSV: I = log2(1 + 2 alpha2)
    cm = tmsv_cm(4.0)
    assert math.isclose(mutual_information(cm, 1.0, 0.0, 1.0, 1.0), math.log2(9.0), rel_tol=1e-12)
    with pytest.raises(DomainError):
        mutual_information(cm, 1.5, 0.0, 1.0, 1.0)
    bad = oracles.unsafe_two_mode_cm(1.0, 1.0, 1.2)
    with pytest.raises(UnphysicalStateError):
        mutual_information(bad, 1.0, 0.0, 1.0, 1.0)


def _mi_dense_route(cm, t_channel, epsilon, eta_d, nu):
    """I(A:B3) via the 8x8 detector CM and homodyne conditioning on A."""
    evolved = evolve_channel(cm, t_channel, epsilon)
    full = detector_cm(evolved, eta_d, nu)
    v_b3 = full[6, 6]
    cond = specfun.condition_on_homodyne(full, measured_mode=0, quadrature="x")
    v_b3_given_a = cond[4, 4]
    return 0.5 * math.log2(v_b3 / v_b3_given_a)


def test_mutual_information_dense_route_agrees():
    cm = pss_cm(20.0, 0.7, 1)
    closed = mutual_information(cm, 0.1, 0.1, 0.68, 1.1)
    dense = _mi_dense_route(cm, 0.1, 0.1, 0.68, 1.1)
    assert abs(closed - dense) <= 1e-10

    rng = np.random.default_rng(97)
    for _ in range(1000):
        alpha2 = float(rng.uniform(0.1, 40.0))
        scheme = ("tmsv", "tps", "tpa")[int(rng.integers(0, 3))]
        if scheme == "tmsv":
            cm = tmsv_cm(alpha2)
        else:
            build = pss_cm if scheme == "tps" else lambda a, t, n: pss_cm(a, t, n)
            cm = build(alpha2, float(rng.uniform(0.3, 1.0)), int(rng.integers(0, 4)))
        t = float(rng.uniform(0.005, 1.0))
        eps = float(rng.uniform(0.0, 0.4))
        eta_d = float(rng.uniform(0.3, 1.0))
        nu = float(rng.uniform(1.0, 2.0))
        closed = mutual_information(cm, t, eps, eta_d, nu)
        dense = _mi_dense_route(cm, t, eps, eta_d, nu)
        assert abs(closed - dense) <= 1e-10


def test_holevo_bound_properties():
    cm = tmsv_cm(4.0)
    assert holevo_bound(cm, 1.0, 0.0, 1.0, 1.0) <= 1e-9

    # closed-form lambda_1,2 and the conditioned spectrum both match the
    # dense symplectic oracle
    cm = pss_cm(20.0, 0.7, 1)
    res = key_rate(ProtocolParams(SourceParams("tps", 20.0, 0.7, 1)), 0.1)
    evolved = evolve_channel(cm, 0.1, 0.1)
    pair = oracles.dense_symplectic_eigs(evolved.as_matrix())
    assert abs(sorted(res.sympl_eigs[:2], reverse=True)[0] - pair[0]) <= 1e-10
    assert abs(sorted(res.sympl_eigs[:2], reverse=True)[1] - pair[1]) <= 1e-10
    full = detector_cm(evolved, 0.68, 1.1)
    cond = oracles.dense_condition(full, 3, "x")
    rest = oracles.dense_symplectic_eigs(cond)
    got = np.sort(np.array(res.sympl_eigs[2:]))[::-1]
    np.testing.assert_allclose(got, rest, rtol=0.0, atol=1e-10)

    # both homodyne quadratures give the same bound for these CM structures
    for t in (0.05, 0.3, 0.8):
        bx = holevo_bound(cm, t, 0.1, 0.68, 1.1, quadrature="x")
        bp = holevo_bound(cm, t, 0.1, 0.68, 1.1, quadrature="p")
        assert abs(bx - bp) <= 1e-12
        assert bx >= 0.0

    chi_tps = holevo_bound(pss_cm(20.0, 0.7, 1), 0.1, 0.1, 0.68, 1.1)
    from satqkd.states import pas_cm

    chi_tpa = holevo_bound(pas_cm(20.0, 0.7, 1), 0.1, 0.1, 0.68, 1.1)
    assert chi_tpa > chi_tps


def test_key_rate_lossless_ideal_reaches_mutual_information():
    params = ProtocolParams(
        SourceParams("tmsv", 4.0), epsilon=0.0, nu=1.0, eta_d=1.0, eta_r=1.0
    )
    res = key_rate(params, 1.0)
    assert abs(res.rate - math.log2(9.0)) <= 1e-9
    assert res.success_prob == 1.0
    # the transmitted pair stays pure, so its symplectic pair sits at 1
    assert abs(res.sympl_eigs[0] - 1.0) <= 1e-10
    assert abs(res.sympl_eigs[1] - 1.0) <= 1e-10

    # the conditioned source has Gaussian determinant 2N + 1, which the
    # lossless noiseless channel preserves
    cond = ProtocolParams(
        SourceParams("tps", 3.0, 0.7, 2), epsilon=0.0, nu=1.0, eta_d=1.0, eta_r=1.0
    )
    res = key_rate(cond, 1.0)
    assert abs(res.sympl_eigs[0] * res.sympl_eigs[1] - 5.0) <= 1e-10
    assert res.success_prob < 1.0


def test_key_rate_dark_channel_is_zero():
    res = key_rate(ProtocolParams(SourceParams("tmsv", 20.0)), 0.0)
    assert res.rate == 0.0
    assert res.mutual_info == 0.0


def test_key_rate_frozen_reference_point():
    res = key_rate(ProtocolParams(SourceParams("tmsv", 20.0)), 0.1)
    assert res.rate > 0.0
    assert TMSV20_RATE_AT_10DB / 2.0 < res.rate < TMSV20_RATE_AT_10DB * 2.0
    assert math.isclose(res.raw_rate, res.rate, rel_tol=1e-12)
    assert math.isclose(
        res.raw_rate, 0.95 * res.mutual_info - res.holevo, rel_tol=1e-12
    )


def test_key_rate_monotonicity():
    params = ProtocolParams(SourceParams("tmsv", 20.0))
    rates = [key_rate(params, t).rate for t in (0.05, 0.1, 0.2, 0.4, 0.7, 0.9)]
    assert all(a <= b + 1e-12 for a, b in zip(rates, rates[1:]))

    by_eps = [
        key_rate(ProtocolParams(SourceParams("tmsv", 20.0), epsilon=e), 0.1).rate
        for e in (0.0, 0.05, 0.1, 0.2)
    ]
    assert all(a >= b - 1e-12 for a, b in zip(by_eps, by_eps[1:]))

    by_eta = [
        key_rate(ProtocolParams(SourceParams("tmsv", 20.0), eta_d=eta), 0.1).rate
        for eta in (1.0, 0.9, 0.68, 0.5)
    ]
    assert all(a >= b - 1e-12 for a, b in zip(by_eta, by_eta[1:]))


def test_rates_batch_matches_scalar_path():
    rng = np.random.default_rng(12)
    noise = NoiseParams()
    for scheme in ("tmsv", "tps", "tpa"):
        for _ in range(10):
            alpha2 = float(rng.uniform(0.3, 30.0))
            if scheme == "tmsv":
                src = SourceParams("tmsv", alpha2)
            else:
                src = SourceParams(scheme, alpha2, float(rng.uniform(0.3, 0.99)), int(rng.integers(1, 4)))
            cm, prob = source_cm(src)
            ts = rng.uniform(0.01, 0.99, size=7)
            raw, clamped, mi, chi = rates_batch(
                cm.x_var, cm.y_var, cm.z_corr, prob, ts, noise
            )
            for i, t in enumerate(ts):
                ref = key_rate(ProtocolParams.from_noise(src, noise), float(t))
                assert abs(raw[i] - ref.raw_rate) <= 1e-10 * max(1.0, abs(ref.raw_rate))
                assert abs(clamped[i] - ref.rate) <= 1e-10 * max(1.0, ref.rate)
                assert abs(mi[i] - ref.mutual_info) <= 1e-10
                assert abs(chi[i] - ref.holevo) <= 1e-10


def test_average_key_rate_reductions():
    params = ProtocolParams(SourceParams("tmsv", 20.0))
    point = key_rate(params, 0.1)
    # the batch path and the scalar path agree to the shared route tolerance
    degenerate = average_key_rate(params, make_ensemble(np.full(500, 0.1)))
    assert abs(degenerate.rate - point.rate) <= 1e-10
    assert abs(degenerate.raw_rate - point.raw_rate) <= 1e-10
    assert degenerate.sympl_eigs is None

    two = average_key_rate(params, make_ensemble([0.1, 0.4]))
    mean_rate = 0.5 * (key_rate(params, 0.1).rate + key_rate(params, 0.4).rate)
    assert abs(two.rate - mean_rate) <= 1e-10

    low = average_key_rate(params, make_ensemble(np.full(100, 0.05)))
    high = average_key_rate(params, make_ensemble(np.full(100, 0.2)))
    assert high.rate > low.rate


def test_repeaterless_bound_values():
    assert repeaterless_bound(0.0) == 0.0
    assert math.isclose(repeaterless_bound(0.5), 1.0, rel_tol=1e-15)
    assert math.isclose(repeaterless_bound(0.99), -math.log2(0.01), rel_tol=1e-12)
    arr = repeaterless_bound(np.array([0.0, 0.5]))
    np.testing.assert_allclose(arr, [0.0, 1.0], rtol=1e-15)
    for bad in (1.0, 1.2, -0.1):
        with pytest.raises(DomainError):
            repeaterless_bound(bad)


def test_repeaterless_bound_ensemble_skips_saturated_samples():
    mean, skipped = repeaterless_bound_ensemble(make_ensemble([0.5, 1.0]))
    assert skipped == 1
    assert math.isclose(mean, 1.0, rel_tol=1e-15)
    mean, skipped = repeaterless_bound_ensemble(make_ensemble([0.25, 0.5]))
    assert skipped == 0
    assert math.isclose(mean, 0.5 * (2.0 - math.log2(3.0) + 1.0), rel_tol=1e-12)
    with pytest.raises(DomainError):
        repeaterless_bound_ensemble(make_ensemble([1.0, 1.0]))


def test_key_rate_never_exceeds_repeaterless_bound():
    rng = np.random.default_rng(3)
    noise = NoiseParams()
    for _ in range(60):
        scheme = ("tmsv", "tps", "tpa")[int(rng.integers(0, 3))]
        alpha2 = float(rng.uniform(0.2, 40.0))
        if scheme == "tmsv":
            src = SourceParams("tmsv", alpha2)
        else:
            src = SourceParams(scheme, alpha2, float(rng.uniform(0.3, 0.99)), int(rng.integers(1, 4)))
        t = float(rng.uniform(0.01, 0.99))
        res = key_rate(ProtocolParams.from_noise(src, noise), t)
        assert res.rate <= repeaterless_bound(t) + 1e-9
