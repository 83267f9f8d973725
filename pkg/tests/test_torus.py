"""Torus endomorphism: evaluation, lifts, preimages, (LP) and (H6)."""

import numpy as np
import pytest

from attractorlab.errors import ConfigError
from attractorlab.torus import (EndomorphismModel, LinearPart, RegionGeometry,
                                SaddleDeformation, certify_h6, certify_lp,
                                det_jacobian, eval_and_jacobian, eval_f,
                                fixed_points, lift_orbit, preimages,
                                preimages_batch, sigma_min, tdelta, tdist, wrap)
from conftest import fd_jacobian


def test_linear_fixed_point_values(pure_endo):
    fx, J = eval_and_jacobian(pure_endo, np.array([0.0, 0.0]))
    assert np.allclose(fx, [0.0, 0.0])
    assert np.allclose(J, [[3.0, 0.0], [0.0, 2.0]])


def test_saddle_center_multipliers(default_endo):
    fx, J = eval_and_jacobian(default_endo, np.array([0.5, 0.0]))
    assert np.allclose(tdelta(fx, [0.5, 0.0]), 0.0, atol=1e-15)
    # weak direction on axis 0: multiplier set {6, 0.5} as required by (H6)
    assert np.allclose(J, [[0.5, 0.0], [0.0, 6.0]], atol=1e-12)


def test_jacobian_matches_finite_differences(default_endo):
    rng = np.random.default_rng(7)
    # random points plus points straddling the deformation ball
    pts = list(rng.random((40, 2)))
    for ang in np.linspace(0.0, 2 * np.pi, 25):
        pts.append(wrap(np.array([0.5, 0.0])
                        + 0.12 * np.array([np.cos(ang), np.sin(ang)])))
        pts.append(wrap(np.array([0.5, 0.0])
                        + 0.06 * np.array([np.cos(ang), np.sin(ang)])))
    for x in pts:
        _, J = eval_and_jacobian(default_endo, x)
        # h=1e-6 balances truncation at the C1 boundary kink vs roundoff
        J_fd = fd_jacobian(lambda z: eval_f(default_endo, z), x, h=1e-6)
        assert np.allclose(J, J_fd, atol=2e-5), x


def test_c1_matching_on_boundary(default_endo):
    # Df at the boundary of U0 equals A: sampled at many boundary angles
    angs = np.linspace(0.0, 2 * np.pi, 10000, endpoint=False)
    X = wrap(np.array([0.5, 0.0])[None, :]
             + 0.12 * np.stack([np.cos(angs), np.sin(angs)], axis=-1) * (1 - 1e-12))
    _, J = eval_and_jacobian(default_endo, X)
    assert np.max(np.abs(J - np.array([[3.0, 0.0], [0.0, 2.0]]))) < 1e-9


def test_determinant_floor_and_volume_expansion(default_endo):
    # oracle sweep at double resolution confirms the blend keeps |det| > Delta
    g = (np.arange(2048) + 0.5) / 2048
    X = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
    _, J = eval_and_jacobian(default_endo, X)
    dets = np.abs(det_jacobian(J))
    assert dets.min() > 2.5
    assert dets.max() < 12.0


def test_lift_orbit_linear_and_projection(default_endo, pure_endo):
    orb = lift_orbit(pure_endo, np.array([0.1, 0.1]), 1)
    assert np.allclose(orb[1], [0.3, 0.2])
    rng = np.random.default_rng(3)
    for x0 in rng.random((100, 2)):
        lifted = lift_orbit(default_endo, x0, 50)
        # short horizon: projection equals direct iteration outright
        x = wrap(x0)
        for k in range(1, 9):
            x = eval_f(default_endo, x)
            mag = max(1.0, float(np.max(np.abs(lifted[k]))))
            assert tdist(wrap(lifted[k]), x) < 1e-12 * (1.0 + mag)
        # full horizon: stepwise consistency, with a rounding floor set by
        # the ulp of the lift magnitude (absolute comparison at n=50 would
        # chase rounding amplified by ||Df||^n)
        for k in range(1, 51):
            mag = max(1.0, float(np.max(np.abs(lifted[k]))))
            tol = 1e-12 + 16 * np.finfo(float).eps * mag
            step = eval_f(default_endo, wrap(lifted[k - 1]))
            assert tdist(wrap(lifted[k]), step) < tol


def test_lift_segment_min_expansion(pure_endo):
    # segment of length 0.01 expands at least like the weak eigenvalue 2^n
    t = np.linspace(0.0, 0.01, 50)
    ends = []
    for tau in (0.0, 0.01):
        pt = np.array([0.2 + tau, 0.33])
        ends.append(lift_orbit(pure_endo, pt, 10)[-1])
    assert np.linalg.norm(ends[1] - ends[0]) >= 0.01 * 2 ** 10 * (1 - 1e-9)


def test_preimages_of_origin_linear(pure_endo):
    pts = preimages(pure_endo, np.array([0.0, 0.0]))
    expect = np.array([[i / 3, j / 2] for i in range(3) for j in range(2)])
    expect = expect[np.lexsort((expect[:, 1], expect[:, 0]))]
    assert np.allclose(pts, expect, atol=1e-12)


def test_preimage_count_random_targets(default_endo):
    rng = np.random.default_rng(11)
    for y in rng.random((300, 2)):
        assert len(preimages(default_endo, y)) == 6


def test_preimage_count_against_grid_scan_oracle(default_endo):
    # brute-force oracle: cluster grid points mapping near y
    y = np.array([0.52, 0.03])
    n = 2048
    g = (np.arange(n) + 0.5) / n
    X = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    fx = eval_f(default_endo, X)
    close = X[tdist(fx, y) < 2.0 / n]
    # cluster by rounding to coarse cells
    cells = set(map(tuple, np.round(close * 64).astype(int) % 64))
    clusters = len(cells)
    assert clusters == 6
    assert len(preimages(default_endo, y)) == 6


def test_preimages_batch_matches_pointwise(default_endo):
    rng = np.random.default_rng(5)
    Y = rng.random((50, 2))
    branches = preimages_batch(default_endo, Y)
    for i, y in enumerate(Y):
        got = branches[:, i, :]
        got = got[np.lexsort((got[:, 1], got[:, 0]))]
        want = preimages(default_endo, y)
        assert np.allclose(tdist(got, want), 0.0, atol=1e-8)


def test_degree_invariant_rejects_det_one():
    with pytest.raises(ConfigError):
        LinearPart(1, 0, 0, 1)
    with pytest.raises(ConfigError):
        LinearPart(2, 1, 1, 1)  # det 1


def test_fixed_points_pure_map(pure_endo):
    fps = fixed_points(pure_endo, 256)
    locs = sorted(tuple(np.round(f.location, 9)) for f in fps)
    assert locs == [(0.0, 0.0), (0.5, 0.0)]
    assert all(f.kind == "repelling" for f in fps)


def test_certify_h6_default(default_endo):
    recs, report = certify_h6(default_endo)
    assert report.passed
    kinds = sorted(f.kind for f in recs)
    assert kinds.count("saddle") == 1
    assert kinds.count("repelling") == 3  # (0,0) plus the two axis auxiliaries
    saddle = [f for f in recs if f.kind == "saddle"][0]
    assert sorted(abs(m) for m in saddle.multipliers) == pytest.approx([0.5, 6.0], abs=1e-8)


def test_certify_h6_fails_without_deformation(pure_endo):
    recs, report = certify_h6(pure_endo)
    assert not report.passed
    assert "saddle" in report.reason


def test_lp1_lp3_pure_map(pure_endo):
    r1 = certify_lp(pure_endo, "LP1", resolution=256)
    assert r1.passed and r1.margin == pytest.approx(4.5, abs=1e-9)
    r3 = certify_lp(pure_endo, "LP3", resolution=256)
    assert r3.passed and r3.margin == pytest.approx(0.5, abs=1e-9)


def test_lp_suite_default(default_endo):
    rng = np.random.default_rng(0)
    r1 = certify_lp(default_endo, "LP1", resolution=1024)
    assert r1.passed and r1.margin >= 1.0
    r2 = certify_lp(default_endo, "LP2", resolution=256, horizon=6, rng=rng)
    assert r2.passed and r2.details["covering_radius"] <= 0.01
    r3 = certify_lp(default_endo, "LP3", resolution=1024)
    assert r3.passed and r3.margin >= 0.3
    r4 = certify_lp(default_endo, "LP4", resolution=256, horizon=25, rng=rng)
    assert r4.passed
    r5 = certify_lp(default_endo, "LP5", resolution=256)
    assert r5.passed


def test_lp1_monotone_under_refinement(default_endo):
    r_lo = certify_lp(default_endo, "LP1", resolution=512)
    r_hi = certify_lp(default_endo, "LP1", resolution=1024)
    assert abs(r_lo.margin - r_hi.margin) < r_lo.slack + r_hi.slack + 1e-6


def test_sigma_min_closed_form():
    rng = np.random.default_rng(2)
    M = rng.normal(size=(100, 2, 2))
    want = np.linalg.svd(M, compute_uv=False)[..., -1]
    assert np.allclose(sigma_min(M), want, atol=1e-12)
