"""Solenoid embedding: semiconjugacy, injectivity, cones, splitting."""

import numpy as np
import pytest

from attractorlab.errors import ConfigError, FiberEscape
from attractorlab.solenoid import (ConeParams, FiberPlacement, SkewProductModel,
                                   attractor_sample, cone_image_aperture,
                                   dF_blocks, eval_F, h_placement,
                                   injectivity_margin, orbit_batch,
                                   splitting_estimate)
from attractorlab.torus import eval_f, tdist, wrap


@pytest.fixture(scope="module")
def default_skew(default_endo):
    return SkewProductModel(default_endo, lambda_f=0.05,
                            placement=FiberPlacement(0.3, 0.15))


@pytest.fixture(scope="module")
def decoupled_skew(pure_endo):
    return SkewProductModel(pure_endo, lambda_f=0.05,
                            placement=FiberPlacement(0.0, 0.0))


def test_eval_decoupled(decoupled_skew):
    z = np.array([0.0, 0.0, 0.4, 0.0])
    out = eval_F(decoupled_skew, z)
    assert np.allclose(out, [0.0, 0.0, 0.02, 0.0])


def test_placement_evaluation(default_skew):
    z = np.array([0.25, 0.0, 0.0, 0.0])
    out = eval_F(default_skew, z)
    # h((0.25,0)) = c1*(0,1) + c2*(1,0)
    assert np.allclose(out[2:], [0.15, 0.3], atol=1e-15)


def test_semiconjugacy_exact(default_skew):
    rng = np.random.default_rng(1)
    Z = np.concatenate([rng.random((100_000, 2)),
                        0.5 * (rng.random((100_000, 2)) - 0.5)], axis=-1)
    out = eval_F(default_skew, Z)
    fx = eval_f(default_skew.endo, Z[:, :2])
    assert np.max(tdist(out[:, :2], fx)) < 1e-15


def test_fiber_escape_guard(default_endo):
    with pytest.raises(ConfigError):
        SkewProductModel(default_endo, lambda_f=0.6, placement=FiberPlacement(0.3, 0.15))
    m = SkewProductModel(default_endo, lambda_f=0.05, placement=FiberPlacement(0.3, 0.15))
    bad = np.array([0.0, 0.0, 20.0, 0.0])  # far outside D: image escapes
    with pytest.raises(FiberEscape):
        eval_F(m, bad)


def test_vertical_contraction_exact(default_skew):
    rng = np.random.default_rng(2)
    z = np.concatenate([rng.random((50, 2)), 0.4 * rng.random((50, 2))], axis=-1)
    _, J, Dh = dF_blocks(default_skew, z)
    # vertical vectors map to vertical vectors scaled exactly by lambda_f
    w = rng.normal(size=(50, 2))
    img_vert = default_skew.lambda_f * w
    assert np.allclose(np.linalg.norm(img_vert, axis=-1),
                       default_skew.lambda_f * np.linalg.norm(w, axis=-1))


def test_base_block_independent_of_fiber(default_skew):
    rng = np.random.default_rng(3)
    x = rng.random((20, 2))
    za = np.concatenate([x, 0.1 * rng.random((20, 2))], axis=-1)
    zb = np.concatenate([x, 0.3 * rng.random((20, 2))], axis=-1)
    _, Ja, _ = dF_blocks(default_skew, za)
    _, Jb, _ = dF_blocks(default_skew, zb)
    assert np.allclose(Ja, Jb, atol=0.0)


def test_attractor_sample_bounds(default_skew):
    z = attractor_sample(default_skew, burn_in=30, count=20_000,
                         rng=np.random.default_rng(4))
    norms = np.linalg.norm(z[:, 2:], axis=-1)
    # one-step image bound: lam*1 + |c1| + |c2| = 0.5
    assert norms.max() <= 0.5 + 1e-12
    # base projection dense
    from attractorlab.torus import covering_radius
    assert covering_radius(z[:, :2], probe_resolution=128) < 0.02


def test_fiber_history_contraction(default_skew):
    rng = np.random.default_rng(5)
    x0 = rng.random((100, 2))
    ya = 0.8 * (rng.random((100, 2)) - 0.5)
    yb = 0.8 * (rng.random((100, 2)) - 0.5)
    za = np.concatenate([x0, ya], axis=-1)
    zb = np.concatenate([x0, yb], axis=-1)
    k = 12
    oa = orbit_batch(default_skew, za, k)
    ob = orbit_batch(default_skew, zb, k)
    gap = np.linalg.norm(oa[-1][:, 2:] - ob[-1][:, 2:], axis=-1)
    assert np.all(gap <= 2.0 * default_skew.lambda_f ** k + 1e-15)


def test_injectivity_margin_separating(default_skew):
    margin = injectivity_margin(default_skew, samples=10_000,
                                rng=np.random.default_rng(6))
    assert margin > 0.05


def test_injectivity_fails_single_harmonic(default_endo):
    m = SkewProductModel(default_endo, lambda_f=0.05,
                         placement=FiberPlacement(0.3, 0.0))
    margin = injectivity_margin(m, samples=2_000, rng=np.random.default_rng(7))
    assert margin < 0.0  # c2=0 cannot separate the x2 sheets


def test_injectivity_margin_lambda_zero_limit(default_endo):
    m = SkewProductModel(default_endo, lambda_f=1e-9,
                         placement=FiberPlacement(0.3, 0.15))
    margin = injectivity_margin(m, samples=2_000, rng=np.random.default_rng(8))
    assert margin > 0.0


def test_cone_invariance_on_attractor(default_skew):
    cone = ConeParams(kappa=1.0, vertical_weight=20.0)
    z = attractor_sample(default_skew, burn_in=30, count=100_000,
                         rng=np.random.default_rng(9))
    kap = cone_image_aperture(default_skew, z, cone)
    assert kap.max() <= 0.5
    assert np.sum(kap > 0.5) == 0


def test_splitting_decoupled_exact(decoupled_skew):
    cone = ConeParams(kappa=1.0, vertical_weight=20.0)
    ests = splitting_estimate(decoupled_skew,
                              np.array([[0.123, 0.456, 0.1, 0.05]]),
                              cone, n=30, rng=np.random.default_rng(0))
    est = ests[0]
    # E^c is exactly the horizontal plane; volume exponent log 6
    assert abs(est.volume_exponent - np.log(6.0)) < 1e-12
    assert abs(est.domination_ratio - (0.05 / 2.0) ** 30) < 1e-20
    assert np.allclose(np.abs(est.Ec_frame[:2, :]), np.eye(2), atol=1e-12)
    assert np.allclose(est.Ec_frame[2:, :], 0.0, atol=1e-12)


def test_splitting_default_volume_and_domination(default_skew):
    cone = ConeParams(kappa=1.0, vertical_weight=20.0)
    rng = np.random.default_rng(10)
    seeds = attractor_sample(default_skew, burn_in=25, count=200, rng=rng)
    ests = splitting_estimate(default_skew, seeds, cone, n=40, burn_in=10)
    vols = np.array([e.volume_exponent for e in ests])
    doms = np.array([e.domination_ratio for e in ests])
    assert vols.min() >= np.log(3.0) - 0.1
    assert doms.max() < np.exp(-1.0)


def test_splitting_frame_stabilizes_under_n_doubling(default_skew):
    cone = ConeParams(kappa=1.0, vertical_weight=20.0)
    seed = np.array([[0.271, 0.618, 0.0, 0.0]])
    a = splitting_estimate(default_skew, seed, cone, n=30, burn_in=60)[0]
    b = splitting_estimate(default_skew, seed, cone, n=60, burn_in=30)[0]
    # same endpoint (90 steps total); compare the center planes
    Pa = a.Ec_frame @ a.Ec_frame.T
    Pb = b.Ec_frame @ b.Ec_frame.T
    assert tdist(a.at[:2], b.at[:2]) < 1e-9
    assert np.max(np.abs(Pa - Pb)) < 1e-6
