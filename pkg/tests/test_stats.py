import math

import numpy as np
import pytest

import oracles
from vlcsim import (
    Cir,
    ClusterDistribution,
    ConfigMismatchError,
    DegenerateFitError,
    EmptyCirError,
    EvolutionParams,
    LedArray,
    NonPositivePowerError,
    Receiver,
    TooFewSamplesError,
    ZeroGainError,
    acf,
    bandwidth_3db,
    ccf,
    channel_over_time,
    cir_snapshot,
    ctf,
    dc_gain,
    default_config,
    fcf,
    fit_ci,
    los_tap,
    path_loss,
    received_power,
    rms_delay_spread,
    shadowing_stats,
    stfcf,
    transfer,
)
from vlcsim.scene import Scene, survival_probability
from vlcsim.stats import _complex_sem, _normalized_influence

SEED = 20220101
SMALL = {
    "array": {"rows": 2, "cols": 2},
    "evolution": {"birth_rate_per_m": 8.0},
    "clusters": {"scatterers_per_cluster": 4, "sb_ratio": 0.5},
}


def make_cir(powers, delays, element=(1, 1), pd=1, time=0.0):
    powers = np.asarray(powers, dtype=float)
    delays = np.asarray(delays, dtype=float)
    order = np.argsort(delays)
    return Cir(
        powers[order],
        delays[order],
        np.ones(powers.size, dtype=np.int8),
        np.zeros(powers.size, dtype=int),
        np.arange(powers.size),
        element,
        pd,
        time,
    )


def test_rms_delay_spread_matches_moment_reference():
    rng = np.random.default_rng(SEED)
    for _ in range(100):
        n = 10
        powers = rng.uniform(1e-9, 1.0, size=n)
        delays = rng.uniform(1e-9, 1e-7, size=n)
        cir = make_cir(powers, delays)
        want = oracles.moment_rms(powers, delays)
        assert rms_delay_spread(cir) == pytest.approx(want, rel=1e-12)


def test_rms_delay_spread_two_taps():
    cir = make_cir([0.5, 0.5], [10e-9, 30e-9])
    assert rms_delay_spread(cir) == pytest.approx(10e-9, rel=1e-12)
    with pytest.raises(EmptyCirError):
        rms_delay_spread(make_cir([], []))


def test_ctf_single_tap_phasor():
    p, tau = 2.5e-6, 8e-9
    cir = make_cir([p], [tau])
    freqs = np.array([0.0, 1e7, 5e7])
    h = ctf(cir, freqs)
    want = p * np.exp(-2j * math.pi * freqs * tau)
    assert np.allclose(h.values, want, rtol=1e-12)
    assert np.allclose(h.magnitude, p, rtol=1e-12)
    assert h.value_at(3.3e7) == pytest.approx(
        p * np.exp(-2j * math.pi * 3.3e7 * tau), rel=1e-12
    )
    with pytest.raises(EmptyCirError):
        ctf(make_cir([], []), freqs)


def test_dc_gain_matches_power_sum():
    cir = make_cir([1e-6, 2e-6, 3e-6], [1e-9, 2e-9, 3e-9])
    assert dc_gain(cir) == pytest.approx(6e-6, rel=1e-12)
    assert ctf(cir, [0.0]).values[0] == pytest.approx(6e-6, rel=1e-12)
    with pytest.raises(EmptyCirError):
        dc_gain(make_cir([], []))


def test_bandwidth_two_tap_analytic():
    # |H|^2 of two equal taps halves where the phases open to 90 degrees
    tau = 5e-9
    cir = make_cir([1e-6, 1e-6], [0.0 + 1e-12, tau])
    freqs = np.linspace(0.0, 2e8, 4096)
    bw = bandwidth_3db(ctf(cir, freqs))
    assert bw == pytest.approx(1.0 / (4.0 * tau), rel=2e-3)


def test_bandwidth_flat_response_is_none():
    cir = make_cir([1e-6], [1e-9])
    assert bandwidth_3db(ctf(cir, np.linspace(0.0, 2e8, 64))) is None


def test_bandwidth_needs_dc_power():
    cir = make_cir([0.0], [1e-9])
    with pytest.raises(ZeroGainError):
        bandwidth_3db(ctf(cir, np.linspace(0.0, 1e8, 16)))


def test_transfer_consistency_and_empty():
    cfg = default_config().merged(SMALL)
    scene = cfg.build_scene(SEED)
    freqs = np.array([0.0, 2e7, 9e7])
    full = transfer(scene, (1, 1, 1), 0.0, freqs)
    nlos = transfer(scene, (1, 1, 1), 0.0, freqs, nlos_only=True)
    tap = los_tap(1, 1, 1, scene, 0.0)
    los = tap.power * np.exp(-2j * math.pi * freqs * tap.delay)
    assert np.allclose(full - nlos, los, rtol=1e-12, atol=1e-20)

    # all rays pruned -> exact zeros
    lonely = Scene(
        array=LedArray(),
        receiver=Receiver(azimuth=0.0),
        evolution=EvolutionParams(),
        distribution=ClusterDistribution(),
        clusters=(),
        rx_clusters=(),
        visibility=np.zeros((4, 4, 0), dtype=bool),
        is_db=np.zeros(0, dtype=bool),
        partner=np.zeros(0, dtype=int),
        seed=0,
    )
    assert np.array_equal(transfer(lonely, (1, 1, 1), 0.0, freqs), np.zeros(3))


def test_received_power_matches_manual_sum():
    cfg = default_config().merged(SMALL)
    scene = cfg.build_scene(9)
    matrix = channel_over_time(scene, [0.0])[0]
    per_element, totals = received_power(matrix, 0.25)
    assert per_element.shape == (2, 2, 1)
    manual = 0.0
    for (i, j, p), cir in matrix.cirs.items():
        assert per_element[i - 1, j - 1, p - 1] == pytest.approx(
            0.25 * cir.dc_gain, rel=1e-12
        )
        manual += 0.25 * cir.dc_gain
    assert totals[0] == pytest.approx(manual, rel=1e-12)

    weights = np.array([[1.0, 0.0], [0.0, 0.0]])
    only_first, totals_first = received_power(matrix, weights)
    assert totals_first[0] == pytest.approx(
        matrix.cir(1, 1, 1).dc_gain, rel=1e-12
    )
    assert only_first[1, 1, 0] == 0.0


def test_path_loss_frozen():
    assert path_loss(2.0, 1.0) == pytest.approx(10.0 * math.log10(2.0), rel=1e-12)
    assert path_loss(1.0, 1.0) == 0.0
    with pytest.raises(NonPositivePowerError):
        path_loss(0.0, 1.0)
    with pytest.raises(NonPositivePowerError):
        path_loss(1.0, -2.0)


def test_fit_ci_recovers_exact_power_law():
    d = np.logspace(0.0, 0.8, 30)
    pl = 40.0 + 10.0 * 2.0 * np.log10(d)
    fit = fit_ci(d, pl, d0=1.0)
    assert fit.exponent == pytest.approx(2.0, abs=1e-9)
    assert fit.pl_d0 == pytest.approx(40.0, abs=1e-9)
    assert np.all(np.abs(fit.residuals) < 1e-9)
    assert np.allclose(fit.predict(d), pl, atol=1e-9)


def test_fit_ci_reference_distance_shift():
    d = np.array([1.0, 2.0, 4.0, 8.0])
    pl = 37.0 + 10.0 * 1.7 * np.log10(d)
    fit = fit_ci(d, pl, d0=2.0)
    assert fit.exponent == pytest.approx(1.7, abs=1e-9)
    assert fit.pl_d0 == pytest.approx(37.0 + 17.0 * math.log10(2.0), abs=1e-9)


def test_fit_ci_degenerate_inputs():
    with pytest.raises(DegenerateFitError):
        fit_ci([1.0], [40.0])
    with pytest.raises(DegenerateFitError):
        fit_ci([2.0, 2.0, 2.0], [40.0, 41.0, 39.0])
    with pytest.raises(ValueError):
        fit_ci([1.0, -2.0], [40.0, 41.0])


def test_shadowing_stats_gaussian_passes():
    rng = np.random.default_rng(SEED)
    r = rng.normal(0.0, 2.0, size=200)
    out = shadowing_stats(r)
    assert out.passes_normality
    assert out.ks_distance < out.ks_critical
    assert out.mean == pytest.approx(float(r.mean()), rel=1e-12)
    assert out.std == pytest.approx(float(r.std(ddof=1)), rel=1e-12)
    assert out.ks_critical == pytest.approx(1.358 / math.sqrt(200.0), rel=1e-12)


def test_shadowing_stats_skewed_fails():
    rng = np.random.default_rng(SEED + 1)
    r = rng.exponential(2.0, size=200)
    assert not shadowing_stats(r).passes_normality


def test_shadowing_stats_guards():
    with pytest.raises(TooFewSamplesError):
        shadowing_stats(np.zeros(29))
    with pytest.raises(ValueError):
        shadowing_stats(np.random.default_rng(0).normal(size=40), alpha=0.1)


def test_complex_sem_real_samples():
    rng = np.random.default_rng(SEED + 2)
    x = rng.normal(size=(64, 3))
    got = _complex_sem(x.astype(complex))
    want = x.std(axis=0, ddof=1) / math.sqrt(64)
    assert np.allclose(got, want, rtol=1e-12)


def test_normalized_influence_is_centered():
    rng = np.random.default_rng(SEED + 3)
    products = rng.normal(size=(40, 5)) + 1j * rng.normal(size=(40, 5))
    zero = rng.uniform(0.5, 2.0, size=40) + 0j
    infl = _normalized_influence(products, zero)
    assert np.allclose(infl.mean(axis=0), 0.0, atol=1e-14)


def _ensemble(n, overrides=None, start=100):
    cfg = default_config().merged(SMALL)
    if overrides:
        cfg = cfg.merged(overrides)
    return cfg, [cfg.build_scene(s) for s in range(start, start + n)]


def test_stfcf_zero_lag_is_exactly_one():
    _, scenes = _ensemble(4)
    series = acf(scenes, (1, 1, 1), 0.0, 1e8, [0.0])
    assert series.normalized[0] == pytest.approx(1.0, rel=1e-14)
    assert series.normalized_standard_error[0] == pytest.approx(0.0, abs=1e-16)
    assert series.n_runs == 4


def test_stfcf_static_scene_never_decorrelates():
    # nothing moves, so the temporal correlation stays pinned at one
    _, scenes = _ensemble(4)
    series = acf(scenes, (1, 1, 1), 0.0, 1e8, [0.0, 0.05, 0.1])
    assert np.allclose(np.abs(series.normalized), 1.0, rtol=1e-12)


def test_stfcf_analytical_split_two_routes():
    cfg, scenes = _ensemble(5)
    link, t, f, dt = (1, 1, 1), 0.2, 5e7, 0.05
    series = acf(scenes, link, t, f, [dt], analytical=True)
    assert series.survival == pytest.approx(1.0, abs=1e-12)

    # direct-path product, identical in every run of the ensemble
    tap = los_tap(1, 1, 1, scenes[0], t)
    h_l1 = tap.power * np.exp(-2j * math.pi * f * tap.delay)
    tap2 = los_tap(1, 1, 1, scenes[0], t + dt)
    h_l2 = tap2.power * np.exp(-2j * math.pi * f * tap2.delay)
    assert series.analytical_los[0] == pytest.approx(
        h_l1 * np.conj(h_l2), rel=1e-12
    )

    # scattered product recomputed through the transfer helper
    prods = [
        transfer(s, link, t, [f], nlos_only=True)[0]
        * np.conj(transfer(s, link, t + dt, [f], nlos_only=True)[0])
        for s in scenes
    ]
    assert series.analytical_nlos[0] == pytest.approx(
        np.mean(prods), rel=1e-12
    )
    assert series.analytical[0] == pytest.approx(
        series.analytical_los[0] + series.analytical_nlos[0], rel=1e-12
    )


def test_ccf_carries_survival_factor():
    cfg, scenes = _ensemble(3)
    series = ccf(scenes, (1, 1, 1), (2, 2, 1), 0.0, 0.0)
    want = survival_probability(
        scenes[0].evolution, scenes[0].array.orientation, 1.0, 1.0, 1, 1
    )
    assert series.survival == pytest.approx(want, rel=1e-12)
    assert series.link == (1, 1, 1) and series.other_link == (2, 2, 1)


def test_fcf_lag_axis_broadcast():
    _, scenes = _ensemble(3)
    lags = np.array([0.0, 1e7, 2e7])
    series = fcf(scenes, (1, 1, 1), 0.0, 0.0, lags)
    assert np.array_equal(series.df, lags)
    assert np.array_equal(series.dt, np.zeros(3))
    assert series.values.shape == (3,)
    assert series.products.shape == (3, 3)

    both = stfcf(scenes, (1, 1, 1), (1, 1, 1), 0.0, 0.0, [0.0, 0.1], 0.0)
    assert np.array_equal(both.dt, [0.0, 0.1])


def test_stfcf_rejects_mixed_ensembles():
    _, scenes_a = _ensemble(2)
    _, scenes_b = _ensemble(2, overrides={"receiver": {"distance_m": 3.0}})
    with pytest.raises(ConfigMismatchError):
        acf(scenes_a + scenes_b, (1, 1, 1), 0.0, 0.0, [0.0])
    with pytest.raises(ValueError):
        acf(scenes_a[:1], (1, 1, 1), 0.0, 0.0, [0.0])


def test_stfcf_values_are_product_means():
    _, scenes = _ensemble(4)
    series = acf(scenes, (1, 1, 1), 0.0, 1e8, [0.0, 0.02])
    assert np.allclose(series.values, series.products.mean(axis=0), rtol=1e-14)
    assert series.zero_lag == pytest.approx(
        float(series.zero_lag_products.mean().real), rel=1e-14
    )
