"""Punctured base return map: blow-up of the deleted point onto a circle.

The post-insertion base map is realized as f* = T o f on the blow-up ball
B(q, rho) (and = f outside), where T is a radial push in the image plane
around q: T(z) = q + Rb(|z-q|) unit(z-q).  The radius profile Rb is built
from a prescribed determinant profile (profiles.RadialPushProfile), so

    det Df*(x) = g(|f(x)-q|) det Df(x)

exactly, with g = a_inner * s_radius / zeta on the inner zone: the
determinant blows up like 1/zeta ~ 1/r, i.e. log-log slope 2*kappa - 2
with the stored exponent kappa = 1/2, while images of small circles around
q limit onto the circle S_sigma of radius s_radius.  Monotonicity of Rb
makes T injective, so no blend direction can degenerate.

The construction needs q to be mapped close to itself (the default q is an
auxiliary fixed point of f), so that f's local images wind once around q
and the push meets the identity C1-smoothly on |z-q| = zeta_id inside
f(B(q, rho)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import AtPuncture, ConfigError, CoverFailure, EmptyCore, \
    NonhyperbolicOrbit
from .profiles import RadialPushProfile
from .reports import CertificateReport, conclude
from .solenoid import FiberPlacement, h_placement, dh_placement
from .torus import (EndomorphismModel, certify_lp, det_jacobian,
                    eval_and_jacobian, preimages_batch, sigma_min, tdelta,
                    tdist, wrap, _newton_preimage, _grid)

PUNCTURE_GUARD = 1e-12


@dataclass(frozen=True)
class BlowUpModel:
    """Geometry and profile of the singular blow-up at q."""

    q: tuple
    rho: float
    s_radius: float
    kappa: float = 0.5
    a_inner: float = 0.35
    zeta_c: float = 0.0024
    zeta_id: float = 0.0104
    g_min: float = 0.3
    push: RadialPushProfile = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise ConfigError("blow-up exponent needs 0 < kappa < 1")
        if self.rho <= 0.0:
            raise ConfigError("blow-up radius must be positive")
        object.__setattr__(self, "push", RadialPushProfile(
            self.s_radius, self.a_inner, self.zeta_c, self.zeta_id,
            g_min=self.g_min))


@dataclass(frozen=True)
class PuncturedMapModel:
    endo: EndomorphismModel
    blowup: BlowUpModel

    def __post_init__(self):
        reg = self.endo.regions
        b = self.blowup
        q = np.asarray(b.q, dtype=float)
        if tdist(q, np.asarray(reg.center)) + b.rho > reg.r_u0:
            raise ConfigError("blow-up ball must satisfy B(q, rho) inside U_0")
        if self.endo.deformation is not None:
            p = np.asarray(self.endo.deformation.center)
            if tdist(q, p) <= b.rho:
                raise ConfigError("blow-up ball must not contain the saddle")
        # the push must meet the identity inside f(B(q, rho)): the image of
        # the ball boundary has to clear the zeta_id circle
        ang = np.linspace(0.0, 2.0 * math.pi, 2048, endpoint=False)
        ring = wrap(q[None, :] + b.rho
                    * np.stack([np.cos(ang), np.sin(ang)], axis=-1))
        fring, _ = eval_and_jacobian(self.endo, ring)
        clearance = float(np.min(tdist(fring, q)))
        if clearance <= b.zeta_id:
            raise ConfigError(
                "blow-up zone does not close: min |f(dB(q,rho)) - q| = %.4g "
                "<= zeta_id = %.4g" % (clearance, b.zeta_id))

    @property
    def q(self):
        return np.asarray(self.blowup.q, dtype=float)


@dataclass(frozen=True)
class ReturnMapModel:
    """Full section return map F*(x,y) = (f*(x), lambda_f y + h(x))."""

    base: PuncturedMapModel
    lambda_f: float
    placement: FiberPlacement

    def __post_init__(self):
        if not 0.0 < self.lambda_f < 1.0:
            raise ConfigError("fiber contraction needs 0 < lambda_f < 1")


@dataclass
class ExpandingCore:
    """Finite-horizon approximation of the expanding set in U_1^c."""

    points: np.ndarray
    horizon: int
    R0: float


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def eval_fstar(m: PuncturedMapModel, x, guard=True):
    """f*(x) and its Jacobian for x of shape (..., 2); x == q is an error."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        fx, J = eval_fstar(m, x[None, :], guard=guard)
        return fx[0], J[0]
    q = m.q
    b = m.blowup
    dq = tdist(x, q)
    if guard and np.any(dq < PUNCTURE_GUARD):
        raise AtPuncture("f* evaluated at the deleted point q")
    fx, J = eval_and_jacobian(m.endo, x)
    inball = dq < b.rho
    if not np.any(inball):
        return fx, J
    zv = tdelta(fx[inball], q)
    zeta = np.linalg.norm(zv, axis=-1)
    act = zeta < b.zeta_id
    if np.any(act):
        sel = np.where(inball)
        idx = tuple(s[act] for s in sel)
        zva = zv[act]
        za = zeta[act]
        uh = zva / za[..., None]
        rb = b.push.rb(za)
        rbd = b.push.rb_d(za)
        fx[idx] = wrap(q + rb[..., None] * uh)
        # DT = Rb' uu^T + (Rb/zeta)(I - uu^T), applied on the image side
        P = uh[..., :, None] * uh[..., None, :]
        eye = np.broadcast_to(np.eye(2), P.shape)
        DT = rbd[..., None, None] * P + (rb / za)[..., None, None] * (eye - P)
        J[idx] = np.einsum("...ij,...jk->...ik", DT, J[idx])
    return fx, J


def eval_fstar_map(m, x):
    return eval_fstar(m, x)[0]


def det_fstar(m: PuncturedMapModel, x):
    """|det Df*| via the exact product form g(zeta) * det Df."""
    x = np.asarray(x, dtype=float)
    q = m.q
    b = m.blowup
    fx, J = eval_and_jacobian(m.endo, x)
    det = np.abs(det_jacobian(J))
    inball = tdist(x, q) < b.rho
    if np.any(inball):
        zeta = tdist(fx[inball], q)
        det[inball] = det[inball] * b.push.g(zeta)
    return det


def eval_return_map(rm: ReturnMapModel, z):
    """F* on section states z of shape (..., 4)."""
    z = np.asarray(z, dtype=float)
    x, y = z[..., :2], z[..., 2:]
    fx, _ = eval_fstar(rm.base, x)
    ynew = rm.lambda_f * y + h_placement(rm.placement, x)
    return np.concatenate([fx, ynew], axis=-1)


def preimages_fstar(m: PuncturedMapModel, Z, tol=1e-10):
    """All f*-preimages of targets Z, shape (branches, N, 2) nan-padded.

    Plain f-branches are kept unless they land inside the push-active zone;
    targets in the annulus [s_radius, zeta_id) around q gain the blown-up
    branch through T^{-1}.  Branch counts vary between 5 and 7.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    q = m.q
    b = m.blowup
    outer = preimages_batch(m.endo, Z, tol=tol)        # (deg, N, 2)
    dq_x = tdist(outer, q)
    fx, _ = eval_and_jacobian(m.endo, outer.reshape(-1, 2))
    zeta_x = tdist(fx.reshape(outer.shape), q)
    invalid = (dq_x < b.rho) & (zeta_x < b.zeta_id)
    outer = np.where(invalid[..., None], np.nan, outer)

    dz = tdist(Z, q)
    ann = (dz >= b.s_radius) & (dz < b.zeta_id)
    extra = np.full((1, len(Z), 2), np.nan)
    if np.any(ann):
        zeta_t = b.push.rb_inverse(dz[ann])
        uh = tdelta(Z[ann], q) / dz[ann][..., None]
        targets = wrap(q + zeta_t[..., None] * uh)
        cand = preimages_batch(m.endo, targets, tol=tol)   # (deg, M, 2)
        din = tdist(cand, q)
        good = (din < b.rho) & ~np.any(np.isnan(cand), axis=-1)
        pick = np.full((len(targets), 2), np.nan)
        for bi in range(cand.shape[0]):
            sel = good[bi] & np.any(np.isnan(pick), axis=-1)
            pick[sel] = cand[bi][sel]
        extra[0, np.where(ann)[0]] = pick
    return np.concatenate([outer, extra], axis=0)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def determinant_law_fit(m: PuncturedMapModel, r_lo=1e-8, n_radii=25,
                        n_angles=8):
    """Log-log slope of |det Df*| vs r on the analytic inner zone.

    The fit window is capped at the radius where the pure law holds for
    every angle (zeta <= zeta_c); the expected slope is 2 kappa - 2.
    """
    b = m.blowup
    q = m.q
    # realized direction stretches of f at q bound the window
    ang = np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)
    u = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    probe = wrap(q[None, :] + 1e-6 * u)
    fpr, _ = eval_and_jacobian(m.endo, probe)
    c_max = float(np.max(tdist(fpr, q))) / 1e-6
    r_hi = 0.9 * b.zeta_c / c_max
    radii = np.exp(np.linspace(math.log(r_lo), math.log(r_hi), n_radii))
    slopes = []
    for k in range(n_angles):
        th = 2.0 * math.pi * k / n_angles
        pts = wrap(q[None, :] + radii[:, None]
                   * np.array([math.cos(th), math.sin(th)])[None, :])
        dets = det_fstar(m, pts)
        A = np.stack([np.log(radii), np.ones_like(radii)], axis=-1)
        slope = np.linalg.lstsq(A, np.log(dets), rcond=None)[0][0]
        slopes.append(float(slope))
    expected = 2.0 * b.kappa - 2.0
    return np.array(slopes), expected


def certify_lpstar(m: PuncturedMapModel, resolution=1024, horizon=25,
                   rng=None, density_tol=0.01, **kw):
    """Run the five LP checks against f*, blow-up zone included.

    LP1 combines a uniform grid with a geometric polar refinement toward q
    (the analytic determinant law makes the innermost annulus exact).
    """
    rng = rng or np.random.default_rng(0)
    b = m.blowup
    q = m.q
    jac = lambda X: eval_fstar(m, X, guard=False)
    det = lambda X: det_fstar(m, X)
    preim = lambda Z: preimages_fstar(m, Z)
    reports = []
    for prop in ("LP1", "LP2", "LP3", "LP4", "LP5"):
        rep = certify_lp(m.endo, prop, resolution=resolution, horizon=horizon,
                         rng=rng, density_tol=density_tol,
                         jac_fn=jac, det_fn=det, preim_fn=preim, **kw)
        if prop == "LP1":
            # polar refinement toward the puncture
            radii = np.exp(np.linspace(math.log(1e-9), math.log(b.rho), 160))
            angs = np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)
            pts = wrap(q[None, None, :]
                       + radii[:, None, None]
                       * np.stack([np.cos(angs), np.sin(angs)], axis=-1)[None])
            dets_polar = det_fstar(m, pts.reshape(-1, 2))
            inner_min = float(dets_polar.min())
            margin = min(rep.margin, inner_min - m.endo.regions.Delta)
            rep = CertificateReport(
                prop="LP1", passed=margin > rep.slack, margin=margin,
                params=rep.params, slack=rep.slack,
                provenance=rep.provenance + [
                    "inner annulus via analytic law det = g(zeta) det Df"],
                reason=None if margin > rep.slack else "margin within slack",
                details=dict(rep.details, blowup_zone_min_det=inner_min))
        rep.prop = rep.prop + "*"
        reports.append(rep)
    return reports


def local_diffeo_cover(m: PuncturedMapModel, n_side=8, ball_radius=0.1,
                       samples=1000, rng=None):
    """Finite ball cover of T^2 with per-element injectivity certificates.

    On each element (minus q) injectivity is checked by pairwise sample
    separation plus a Jacobian lower bound; the element containing q relies
    on the monotone radial push (verified at profile construction) for the
    punctured part.  Raises CoverFailure if an element cannot be certified.
    """
    rng = rng or np.random.default_rng(0)
    q = m.q
    elements = []
    for i in range(n_side):
        for j in range(n_side):
            center = np.array([(i + 0.5) / n_side, (j + 0.5) / n_side])
            phi = rng.random(samples) * 2.0 * math.pi
            rad = ball_radius * np.sqrt(rng.random(samples))
            pts = wrap(center[None, :]
                       + np.stack([rad * np.cos(phi), rad * np.sin(phi)],
                                  axis=-1))
            pts = pts[tdist(pts, q) > 10 * PUNCTURE_GUARD]
            fx, J = eval_fstar(m, pts, guard=False)
            sig = sigma_min(J)
            d_dom = tdist(pts[:, None, :], pts[None, :, :])
            d_img = tdist(fx[:, None, :], fx[None, :, :])
            iu = np.triu_indices(len(pts), k=1)
            ratios = d_img[iu] / np.maximum(d_dom[iu], 1e-15)
            margin = float(ratios.min())
            if margin <= 0.0 or sig.min() <= 0.0:
                raise CoverFailure(
                    "injectivity not certified on ball at %s" % (center,))
            elements.append({
                "center": center.tolist(), "radius": ball_radius,
                "min_pair_stretch": margin,
                "min_sigma": float(sig.min()),
                "contains_puncture": bool(tdist(center, q) < ball_radius),
            })
    return elements


def lambda1_and_R0(m: PuncturedMapModel, horizon=25, resolution=512):
    """Grid points of U_1^c surviving `horizon` iterates, and R0.

    R0 is the distance from the surviving cloud to U_0; by construction it
    is at least dist(U_1^c, U_0) = r_u1 - r_u0.
    """
    if horizon < 20:
        raise ConfigError("lambda1_and_R0 needs horizon >= 20")
    reg = m.endo.regions
    center = np.asarray(reg.center)
    # irrational grid offsets: an exactly dyadic grid collapses onto the
    # doubling direction's fixed circle after log2(resolution) steps and
    # fakes an empty core
    g1 = (np.arange(resolution) + 0.7182818284590452) / resolution
    g2 = (np.arange(resolution) + 0.5772156649015329) / resolution
    X = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1).reshape(-1, 2)
    from .torus import fixed_points
    fps = np.array([f.location for f in fixed_points(m.endo, 256)])
    X = np.concatenate([X, fps], axis=0)
    pts = X[~reg.in_u1(X)]
    alive = np.ones(len(pts), dtype=bool)
    cur = pts.copy()
    for _ in range(horizon):
        cur[alive], _ = eval_fstar(m, cur[alive], guard=False)
        alive &= tdist(cur, center) >= reg.r_u1
        if not alive.any():
            raise EmptyCore("no grid point survived the expanding-core horizon")
    cloud = pts[alive]
    R0 = float(np.min(tdist(cloud, center)) - reg.r_u0)
    return ExpandingCore(points=cloud, horizon=horizon, R0=R0)


# ---------------------------------------------------------------------------
# periodic orbits and indices
# ---------------------------------------------------------------------------

@dataclass
class PeriodicOrbitRecord:
    points: np.ndarray          # (p, 2) base orbit
    period: int
    multipliers: np.ndarray     # 4 Floquet multipliers of DF*^p (complex)
    index: int
    fiber_point: np.ndarray     # fiber coordinate of the F*-lift at points[0]

    def as_dict(self):
        return {
            "points": self.points.tolist(),
            "period": self.period,
            "multiplier_moduli": sorted(np.abs(self.multipliers).tolist()),
            "index": self.index,
        }


def _fstar_power(m, x, p):
    """(f*)^p(x) and the chain-rule Jacobian, vectorized."""
    x = np.asarray(x, dtype=float)
    J = np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2)).copy()
    cur = x
    orbit = [cur]
    for _ in range(p):
        cur, Jk = eval_fstar(m, cur, guard=False)
        J = np.einsum("...ij,...jk->...ik", Jk, J)
        orbit.append(cur)
    return cur, J, orbit


def periodic_indices(rm: ReturnMapModel, max_period=3, scan_resolution=512,
                     hyp_tol=1e-6):
    """Periodic orbits of f* up to max_period, lifted to F*, with indices.

    Index = number of Floquet multipliers of DF*^p with modulus < 1; the
    fiber always contributes two (lambda_f^p each), the base zero or one.
    Raises NonhyperbolicOrbit when a multiplier modulus is within hyp_tol
    of 1.
    """
    if max_period < 1:
        raise ConfigError("periodic_indices needs max_period >= 1")
    m = rm.base
    q = m.q
    g = (np.arange(scan_resolution) + 0.5) / scan_resolution
    X = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    X = X[tdist(X, q) > 1e-6]
    records: List[PeriodicOrbitRecord] = []
    seen = []
    for p in range(1, max_period + 1):
        fp, _, _ = _fstar_power(m, X, p)
        cand = X[np.linalg.norm(tdelta(fp, X), axis=-1) < 3.0 / scan_resolution]
        for x in cand:
            x = x.copy()
            ok = False
            for _ in range(80):
                fx, J, _ = _fstar_power(m, x, p)
                res = tdelta(fx, x)
                if np.linalg.norm(res) < 1e-13:
                    ok = True
                    break
                try:
                    step = np.linalg.solve(J - np.eye(2), res)
                except np.linalg.LinAlgError:
                    break
                x = wrap(x - np.clip(step, -0.05, 0.05))
            if not ok or tdist(x, q) < 1e-9:
                continue
            _, J, orbit = _fstar_power(m, x, p)
            pts = np.array(orbit[:-1])
            # minimal period only, one representative per orbit
            if p > 1:
                minimal = all(
                    np.linalg.norm(tdelta(orbit[k], x)) > 1e-9
                    for k in range(1, p))
                if not minimal:
                    continue
            if any(np.min(tdist(pts[:, None, :], s[None, :, :])) < 1e-7
                   for s in seen):
                continue
            seen.append(pts)
            base_mults = np.linalg.eigvals(J)
            mults = np.concatenate([base_mults,
                                    [rm.lambda_f ** p, rm.lambda_f ** p]])
            moduli = np.abs(mults)
            if np.any(np.abs(moduli - 1.0) < hyp_tol):
                raise NonhyperbolicOrbit(
                    "orbit through %s has a multiplier of modulus ~1" % (x,))
            index = int(np.sum(moduli < 1.0))
            fiber = _fiber_fixed_point(rm, pts)
            records.append(PeriodicOrbitRecord(
                points=pts, period=p, multipliers=mults, index=index,
                fiber_point=fiber))
    records.sort(key=lambda r: (r.period, round(r.points[0][0], 8),
                                round(r.points[0][1], 8)))
    return records


def _fiber_fixed_point(rm: ReturnMapModel, pts):
    """Unique fixed fiber point of the contracting composition along the orbit."""
    y = np.zeros(2)
    for _ in range(200):
        y_new = y
        for x in pts:
            y_new = rm.lambda_f * y_new + h_placement(rm.placement, x)
        if np.linalg.norm(y_new - y) < 1e-15:
            y = y_new
            break
        y = y_new
    return y
