"""Volume-expanding torus endomorphism with a local saddle deformation.

The map is the integer-matrix action A = diag(3,2) outside a ball U0 around
the fixed point p = (1/2, 0); inside U0 the differential is blended in
log-eigenvalue coordinates from diag(mu_u, mu_s) at p to A at the boundary,
through a plateau profile chosen so the blend's radial-derivative term never
drags |det Df| below the volume-expansion constant.

Coordinates are always reduced mod 1; distances use the wrap-around metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, NonhyperbolicFixedPoint, SeedFailure
from .profiles import PlateauRamp
from .reports import CertificateReport, conclude

HYPERBOLICITY_TOL = 1e-6


# ---------------------------------------------------------------------------
# torus geometry helpers
# ---------------------------------------------------------------------------

def wrap(x):
    """Reduce coordinates mod 1 into [0, 1)."""
    return np.mod(np.asarray(x, dtype=float), 1.0)


def tdelta(a, b):
    """Wrapped difference a - b, componentwise in (-1/2, 1/2]."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return d - np.round(d)


def tdist(a, b):
    """Wrap-around distance on the torus."""
    return np.linalg.norm(tdelta(a, b), axis=-1)


# ---------------------------------------------------------------------------
# model types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearPart:
    """Integer matrix acting on the torus; must be expanding with |det| >= 2."""

    a11: int
    a12: int
    a21: int
    a22: int

    def __post_init__(self):
        m = self.matrix
        det = int(round(np.linalg.det(m)))
        if abs(det) < 2:
            raise ConfigError("linear part must have |det A| >= 2 (degree >= 2)")
        if np.min(np.abs(np.linalg.eigvals(m))) <= 1.0:
            raise ConfigError("linear part must be expanding (eigenvalue moduli > 1)")

    @property
    def matrix(self):
        return np.array([[self.a11, self.a12], [self.a21, self.a22]], dtype=float)

    @property
    def degree(self):
        return abs(int(round(np.linalg.det(self.matrix))))


@dataclass(frozen=True)
class SaddleDeformation:
    """Local blend turning the fixed point p into a saddle with (mu_u, mu_s).

    ``weak_axis`` selects which coordinate axis carries the contracting
    multiplier mu_s; putting it on the finer preimage-lattice direction
    (axis 0 for A = diag(3,2)) keeps depth-limited preorbit trees dense
    near the saddle.
    """

    center: tuple
    r_out: float
    mu_u: float
    mu_s: float
    weak_axis: int = 0
    ramp_eps: float = 0.05

    def __post_init__(self):
        if not (self.mu_u > 1.0 and 0.0 < self.mu_s < 1.0):
            raise ConfigError("saddle multipliers need mu_u > 1 and 0 < mu_s < 1")
        if self.r_out <= 0.0:
            raise ConfigError("deformation radius must be positive")
        if self.weak_axis not in (0, 1):
            raise ConfigError("weak_axis must be 0 or 1")

    def mu_by_axis(self):
        mu = [self.mu_u, self.mu_u]
        mu[self.weak_axis] = self.mu_s
        return np.array(mu)


@dataclass(frozen=True)
class RegionGeometry:
    """U0 (deformation ball), U1 (its neighborhood), delta0 and Delta."""

    center: tuple
    r_u0: float
    r_u1: float
    delta0: float
    Delta: float

    def __post_init__(self):
        if 2.0 * self.r_u0 >= 1.0:
            raise ConfigError("region invariant violated: diam(U_0) < 1")
        if self.r_u1 <= self.r_u0:
            raise ConfigError("region invariant violated: closure(U_0) inside U_1")
        if self.Delta <= 1.0:
            raise ConfigError("expansion constant Delta must exceed 1")
        if self.delta0 <= 0.0:
            raise ConfigError("arc-diameter threshold delta0 must be positive")

    def in_u0(self, x):
        return tdist(x, np.asarray(self.center)) < self.r_u0

    def in_u1(self, x):
        return tdist(x, np.asarray(self.center)) < self.r_u1


@dataclass(frozen=True)
class EndomorphismModel:
    """Concrete torus endomorphism: linear action plus optional saddle blend."""

    linear: LinearPart
    regions: RegionGeometry
    deformation: Optional[SaddleDeformation] = None
    blend: Optional[PlateauRamp] = field(init=False, repr=False, compare=False,
                                         default=None)
    mu_axes: Optional[np.ndarray] = field(init=False, repr=False, compare=False,
                                          default=None)
    w_axes: Optional[np.ndarray] = field(init=False, repr=False, compare=False,
                                         default=None)

    def __post_init__(self):
        if self.deformation is None:
            return
        A = self.linear.matrix
        if self.a_offdiag != 0:
            raise ConfigError("saddle blend requires a diagonal linear part")
        p = np.asarray(self.deformation.center, dtype=float)
        if np.max(np.abs(tdelta(wrap(A @ p), p))) > 1e-12:
            raise ConfigError("deformation center must be fixed by the linear part")
        if self.deformation.mu_u * self.deformation.mu_s <= self.regions.Delta:
            raise ConfigError("saddle multipliers must keep mu_u*mu_s > Delta")
        if tdist(self.deformation.center, self.regions.center) > 1e-12:
            raise ConfigError("U_0 must be centered at the deformation point")
        if abs(self.deformation.r_out - self.regions.r_u0) > 1e-12:
            raise ConfigError("U_0 radius must equal the deformation radius")
        lam = np.diag(A)
        mu = self.deformation.mu_by_axis()
        w = np.log(mu / lam)
        # the worst-direction determinant factor is 1 - beta*ln2*s*eta'(s);
        # weighting the profile by 1/beta keeps it near the optimal bound
        beta = max(float(np.max(w)) / math.log(2.0), 1e-9)
        c = min(1.0 / beta, 1.0)
        object.__setattr__(self, "blend",
                           PlateauRamp(self.deformation.ramp_eps, c))
        object.__setattr__(self, "mu_axes", mu)
        object.__setattr__(self, "w_axes", w)

    @property
    def a_offdiag(self):
        return abs(self.linear.a12) + abs(self.linear.a21)

    @property
    def degree(self):
        return self.linear.degree

    def multiplier_paths(self, s):
        """Blend multipliers (m1, m2) and d(t)/ds at relative radius s."""
        W = self.blend(s)
        Wd = self.blend.deriv(s)
        v = 1.0 + W
        t = np.log2(v)
        dt_ds = Wd / (v * math.log(2.0))
        lam = np.diag(self.linear.matrix)
        m = [lam[i] * np.exp((1.0 - t) * self.w_axes[i]) for i in (0, 1)]
        return m[0], m[1], t, dt_ds

    def axis_fixed_radius(self):
        """Radius r* on the weak axis through p where the blend multiplier
        path crosses 1, creating auxiliary repelling fixed points at
        p +- r* e_weak (exists whenever mu_s < 1 < the weak-axis eigenvalue)."""
        if self.deformation is None:
            return None
        ax = self.deformation.weak_axis
        lam_w = float(np.diag(self.linear.matrix)[ax])
        w_w = float(self.w_axes[ax])
        # m(t) = lam * exp((1-t) w) = 1  =>  (1-t) = -ln(lam)/w
        one_minus_t = -math.log(lam_w) / w_w
        t_star = 1.0 - one_minus_t
        if not 0.0 < t_star < 1.0:
            return None
        v_star = 2.0 ** t_star
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if 1.0 + float(self.blend(mid)) < v_star:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi) * self.deformation.r_out


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def eval_and_jacobian(model: EndomorphismModel, x):
    """Evaluate f(x) mod 1 and Df(x) for x of shape (..., 2).

    Outside U0 the Jacobian is exactly A; inside it is the blended matrix
    plus the rank-one radial-derivative correction.
    """
    x = np.asarray(x, dtype=float)
    A = model.linear.matrix
    fx = wrap(np.einsum("ij,...j->...i", A, x))
    J = np.broadcast_to(A, x.shape[:-1] + (2, 2)).copy()
    d = model.deformation
    if d is None:
        return fx, J

    p = np.asarray(d.center, dtype=float)
    u = tdelta(x, p)
    r = np.linalg.norm(u, axis=-1)
    s = r / d.r_out
    inside = s < 1.0
    if not np.any(inside):
        return fx, J

    ui = u[inside]
    si = s[inside]
    ri = r[inside]
    w1, w2 = float(model.w_axes[0]), float(model.w_axes[1])
    m1, m2, _, dt_ds = model.multiplier_paths(si)

    fin = np.empty_like(ui)
    fin[..., 0] = m1 * ui[..., 0]
    fin[..., 1] = m2 * ui[..., 1]
    fx[inside] = wrap(p + fin)

    # J = diag(m1,m2) + (dm_i/ds * u_i) outer (u_hat / r_out)
    dm1 = -w1 * m1 * dt_ds
    dm2 = -w2 * m2 * dt_ds
    safe_r = np.where(ri > 1e-300, ri, 1.0)
    uh = ui / safe_r[..., None]
    Ji = np.zeros(ui.shape[:-1] + (2, 2))
    Ji[..., 0, 0] = m1
    Ji[..., 1, 1] = m2
    col = np.stack([dm1 * ui[..., 0], dm2 * ui[..., 1]], axis=-1)
    Ji += col[..., :, None] * (uh / d.r_out)[..., None, :]
    J[inside] = Ji
    return fx, J


def eval_f(model, x):
    """Map evaluation only (shares the full computation; Jacobian discarded)."""
    return eval_and_jacobian(model, x)[0]


def det_jacobian(J):
    """Determinant of a stacked (..., 2, 2) Jacobian."""
    return J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]


def sigma_min(J):
    """Smallest singular value of stacked 2x2 matrices (closed form)."""
    a, b = J[..., 0, 0], J[..., 0, 1]
    c, d = J[..., 1, 0], J[..., 1, 1]
    E = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = np.sqrt(np.maximum(E * E - 4.0 * det * det, 0.0))
    smax = np.sqrt(np.maximum((E + disc) / 2.0, 1e-300))
    return np.abs(det) / smax


# ---------------------------------------------------------------------------
# lifts and preimages
# ---------------------------------------------------------------------------

def lift_orbit(model: EndomorphismModel, x0, n):
    """Orbit of the lift to the universal cover R^2 (winding tracked).

    The lift is F(x) = A x + d(x mod 1), where d is the (periodic, bounded)
    deformation displacement; projecting mod 1 reproduces the torus orbit.
    """
    if n < 0:
        raise ConfigError("lift_orbit needs n >= 0")
    A = model.linear.matrix
    out = np.empty((n + 1, 2))
    out[0] = np.asarray(x0, dtype=float)
    cur = out[0].copy()
    for k in range(n):
        base = A @ cur
        disp = tdelta(eval_f(model, wrap(cur)), wrap(base))
        cur = base + disp
        out[k + 1] = cur
    return out


def _lattice_seeds(model, y):
    """Approximate preimages of y under the linear part, one per sheet."""
    A = model.linear.matrix
    Ainv = np.linalg.inv(A)
    # integer offsets k with A^{-1}(y + k) in [0,1): k ranges over A[0,1)^2 - y
    corners = A @ np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float).T
    k1 = np.arange(math.floor(corners[0].min()) - 1, math.ceil(corners[0].max()) + 1)
    k2 = np.arange(math.floor(corners[1].min()) - 1, math.ceil(corners[1].max()) + 1)
    K = np.array([(i, j) for i in k1 for j in k2], dtype=float)
    X = (Ainv @ (np.asarray(y, dtype=float) + K).T).T
    keep = np.all((X >= -1e-12) & (X < 1.0 - 1e-12), axis=1)
    seeds = wrap(X[keep])
    return seeds


def preimages(model: EndomorphismModel, y, tol=1e-10):
    """All deg(f) preimages of y, refined by Newton from lattice seeds.

    Returns the points sorted lexicographically.  Raises SeedFailure when a
    refinement fails to converge or the preimage count is wrong.
    """
    y = np.asarray(y, dtype=float)
    seeds = _lattice_seeds(model, y)
    pts = _newton_preimage(model, seeds, np.broadcast_to(y, seeds.shape), tol)
    bad = np.any(np.isnan(pts), axis=-1)
    if np.any(bad):
        fixed = [_grid_rescue(model, y, s, tol) for s in seeds[bad]]
        pts[bad] = np.array(fixed)
    pts = wrap(pts)
    # dedupe (wrap-aware)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    dedup = [pts[0]]
    for q in pts[1:]:
        if tdist(q, dedup[-1]) > 1e-8:
            dedup.append(q)
    pts = np.array(dedup)
    if len(pts) != model.degree:
        raise SeedFailure(
            "expected %d preimages, found %d" % (model.degree, len(pts)))
    return pts


def _newton_preimage(model, x0, y, tol, max_iter=40):
    """Vectorized Newton solve f(x) = y from seeds x0 (shape (...,2))."""
    x = np.array(x0, dtype=float)
    y = np.asarray(y, dtype=float)
    done = np.zeros(x.shape[:-1], dtype=bool)
    for _ in range(max_iter):
        fx, J = eval_and_jacobian(model, x)
        res = tdelta(fx, y)
        rn = np.linalg.norm(res, axis=-1)
        done = rn < tol * 0.1
        if np.all(done):
            break
        det = det_jacobian(J)
        inv = np.empty_like(J)
        inv[..., 0, 0] = J[..., 1, 1]
        inv[..., 0, 1] = -J[..., 0, 1]
        inv[..., 1, 0] = -J[..., 1, 0]
        inv[..., 1, 1] = J[..., 0, 0]
        step = np.einsum("...ij,...j->...i", inv, res) / np.maximum(
            np.abs(det), 1e-300)[..., None] * np.sign(det)[..., None]
        step = np.clip(step, -0.2, 0.2)
        x = np.where(done[..., None], x, wrap(x - step))
    fx, _ = eval_and_jacobian(model, x)
    ok = np.linalg.norm(tdelta(fx, y), axis=-1) < tol
    x[~ok] = np.nan
    return x


def _grid_rescue(model, y, seed, tol):
    """Local fine-grid search around a failed seed, then Newton."""
    for half in (0.08, 0.16):
        g = np.linspace(-half, half, 41)
        gx, gy = np.meshgrid(g, g, indexing="ij")
        cand = wrap(np.stack([seed[0] + gx.ravel(), seed[1] + gy.ravel()], axis=-1))
        fx = eval_f(model, cand)
        d = np.linalg.norm(tdelta(fx, y), axis=-1)
        best = cand[np.argmin(d)]
        ref = _newton_preimage(model, best[None, :], y[None, :], tol)
        if not np.any(np.isnan(ref)):
            return ref[0]
    raise SeedFailure("preimage refinement failed near seed %s" % (seed,))


def preimages_batch(model: EndomorphismModel, Y, tol=1e-10):
    """Preimages of many targets at once: returns (deg, N, 2) array.

    Branch b of the output holds, for every target, the preimage continued
    from the b-th lattice sheet.  Entries are nan where a branch failed;
    callers needing certified counts go through :func:`preimages`.
    """
    Y = np.asarray(Y, dtype=float)
    A = model.linear.matrix
    Ainv = np.linalg.inv(A)
    seeds0 = _lattice_seeds(model, np.zeros(2))
    out = np.empty((len(seeds0), len(Y), 2))
    for b, k in enumerate(seeds0):
        seed = wrap((Ainv @ Y.T).T + k)
        out[b] = _newton_preimage(model, seed, Y, tol)
    return out


# ---------------------------------------------------------------------------
# fixed points / (H6)
# ---------------------------------------------------------------------------

@dataclass
class FixedPointRecord:
    location: np.ndarray
    multipliers: tuple
    kind: str

    def as_dict(self):
        return {
            "location": [float(self.location[0]), float(self.location[1])],
            "multipliers": [[m.real, m.imag] for m in self.multipliers],
            "moduli": [abs(m) for m in self.multipliers],
            "kind": self.kind,
        }


def classify_multipliers(mults, tol=HYPERBOLICITY_TOL):
    moduli = np.abs(np.asarray(mults))
    if np.any(np.abs(moduli - 1.0) < tol):
        return "nonhyperbolic"
    n_out = int(np.sum(moduli > 1.0))
    return {2: "repelling", 1: "saddle", 0: "attracting"}[n_out]


def fixed_points(model: EndomorphismModel, scan_resolution=512):
    """All fixed points of f, by grid scan plus Newton on f(x) - x."""
    g = (np.arange(scan_resolution) + 0.5) / scan_resolution
    gx, gy = np.meshgrid(g, g, indexing="ij")
    X = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    fx, _ = eval_and_jacobian(model, X)
    d = np.linalg.norm(tdelta(fx, X), axis=-1)
    cand = X[d < 3.0 / scan_resolution]
    found = []
    for x in cand:
        x = x.copy()
        ok = False
        for _ in range(60):
            fx, J = eval_and_jacobian(model, x)
            res = tdelta(fx, x)
            if np.linalg.norm(res) < 1e-13:
                ok = True
                break
            M = J - np.eye(2)
            try:
                step = np.linalg.solve(M, res)
            except np.linalg.LinAlgError:
                break
            x = wrap(x - np.clip(step, -0.1, 0.1))
        if not ok:
            continue
        x = np.where(np.abs(x - 1.0) < 1e-9, 0.0, x)
        x = np.where(np.abs(x) < 1e-15, 0.0, x)
        if all(tdist(x, f.location) > 1e-7 for f in found):
            _, J = eval_and_jacobian(model, x)
            mults = tuple(np.linalg.eigvals(J))
            found.append(FixedPointRecord(x, mults, classify_multipliers(mults)))
    found.sort(key=lambda f: (round(f.location[0], 9), round(f.location[1], 9)))
    return found


def certify_h6(model: EndomorphismModel, scan_resolution=512):
    """(H6) certificate: fixed-point inventory and the repeller/saddle check.

    Returns (records, report).  Raises NonhyperbolicFixedPoint when any
    multiplier modulus is within tolerance of 1.
    """
    recs = fixed_points(model, scan_resolution)
    for f in recs:
        if f.kind == "nonhyperbolic":
            raise NonhyperbolicFixedPoint(
                "fixed point at %s has a multiplier of modulus ~1" % (f.location,))
    reg = model.regions
    rep_out = [f for f in recs if f.kind == "repelling" and not reg.in_u1(f.location)]
    saddles_in = [f for f in recs if f.kind == "saddle" and reg.in_u0(f.location)]
    passed = len(rep_out) >= 1 and len(saddles_in) >= 1
    margin = min(
        [abs(abs(m) - 1.0) for f in recs for m in f.multipliers], default=0.0)
    report = CertificateReport(
        prop="H6", passed=passed, margin=float(margin),
        params={"scan_resolution": scan_resolution},
        slack=0.0,
        provenance=["regions: U0/U1 radii from config"],
        reason=None if passed else (
            "missing repelling fixed point in U1^c" if not rep_out
            else "missing saddle in U0"),
        details={
            "fixed_points": [f.as_dict() for f in recs],
            "repelling_in_u1c": len(rep_out),
            "saddles_in_u0": len(saddles_in),
        })
    return recs, report


# ---------------------------------------------------------------------------
# (LP) certificates
# ---------------------------------------------------------------------------

def _grid(resolution):
    g = (np.arange(resolution) + 0.5) / resolution
    gx, gy = np.meshgrid(g, g, indexing="ij")
    return np.stack([gx, gy], axis=-1)


def _neighbor_slack(field, window=6):
    """Discretization slack for the grid minimum of a smooth field.

    Half the largest neighbor difference inside a window around the argmin:
    a local Lipschitz bound on how far the true minimum can sit below the
    sampled one.  Wrap-aware via np.roll.
    """
    field = np.asarray(field)
    i, j = np.unravel_index(np.nanargmin(field), field.shape)
    n0, n1 = field.shape
    ii = (np.arange(i - window, i + window + 1)) % n0
    jj = (np.arange(j - window, j + window + 1)) % n1
    local = field[np.ix_(ii, jj)]
    dx = np.abs(np.diff(local, axis=0))
    dy = np.abs(np.diff(local, axis=1))
    mx = max(np.nanmax(dx) if dx.size else 0.0, np.nanmax(dy) if dy.size else 0.0)
    return 0.5 * float(mx)


def covering_radius(points, probe_resolution=256):
    """Max distance from a probe grid to the nearest of the given points."""
    pts = wrap(np.asarray(points, dtype=float))
    pts = np.clip(pts, 0.0, np.nextafter(1.0, 0.0))
    tree = cKDTree(pts, boxsize=1.0)
    probe = _grid(probe_resolution).reshape(-1, 2)
    dist, _ = tree.query(probe, k=1)
    return float(dist.max())


def preimage_tree(model, root, depth, jac_eval=None, preim=None):
    """All preimages of root up to the given depth (root included)."""
    preim = preim or (lambda Y: preimages_batch(model, Y))
    levels = [np.asarray(root, dtype=float).reshape(1, 2)]
    for _ in range(depth):
        branches = preim(levels[-1])
        nxt = branches.reshape(-1, 2)
        nxt = nxt[~np.any(np.isnan(nxt), axis=1)]
        levels.append(nxt)
    return np.concatenate(levels, axis=0)


def certify_lp(model: EndomorphismModel, which, resolution=1024, horizon=25,
               rng=None, density_tol=0.01, n_roots=4, n_arcs=100,
               arc_samples=400, jac_fn=None, det_fn=None, preim_fn=None):
    """Certify one of LP1..LP5 for the model at the given grid/horizon.

    The ``*_fn`` hooks let the punctured-map module reuse these checks with
    its own evaluator; by default the plain endomorphism is used.
    """
    which = which.upper()
    if resolution < 256:
        raise ConfigError("certify_lp needs resolution >= 256")
    if which in ("LP2", "LP4") and horizon < 1:
        raise ConfigError("LP2/LP4 need horizon >= 1")
    rng = rng or np.random.default_rng(0)
    reg = model.regions
    Delta = reg.Delta
    jac_fn = jac_fn or (lambda X: eval_and_jacobian(model, X))
    params = {"resolution": resolution, "horizon": horizon, "Delta": Delta}

    if which == "LP1":
        X = _grid(resolution)
        if det_fn is not None:
            dets = np.abs(det_fn(X))
        else:
            _, J = jac_fn(X)
            dets = np.abs(det_jacobian(J))
        slack = _neighbor_slack(dets)
        return conclude("LP1", dets.min() - Delta, slack, params,
                        ["Delta from config"],
                        details={"min_abs_det": float(dets.min()),
                                 "max_abs_det": float(dets.max())})

    if which == "LP2":
        roots = rng.random((n_roots, 2))
        trees = [preimage_tree(model, root, horizon, preim=preim_fn)
                 for root in roots]
        per_root = [covering_radius(t, probe_resolution=512) for t in trees]
        joint = covering_radius(np.concatenate(trees, axis=0),
                                probe_resolution=512)
        slack = math.sqrt(2.0) / (2 * 512)
        params = dict(params, depth=horizon, density_tol=density_tol,
                      n_roots=n_roots)
        return conclude("LP2", density_tol - joint, slack, params,
                        ["density_tol from config"],
                        details={"covering_radius": joint,
                                 "per_root_covering_radius": per_root,
                                 "semantics":
                                 "joint covering radius of the sampled roots' "
                                 "depth-%d preimage trees" % horizon})

    if which == "LP3":
        X = _grid(resolution).reshape(-1, 2)
        outside = ~reg.in_u0(X)
        _, J = jac_fn(X[outside])
        sig = sigma_min(J)
        field = np.full(len(X), np.nan)
        field[outside] = sig
        slack = _neighbor_slack(field.reshape(resolution, resolution))
        return conclude("LP3", sig.min() - Delta, slack, params,
                        ["Delta from config"],
                        details={"min_sigma_min": float(sig.min())})

    if which == "LP4":
        segs = _sample_arc_segments(reg, rng, n_arcs, arc_samples)
        eval_fn = (lambda X: jac_fn(X)[0])
        clearances = []
        for seg in segs:
            clearances.append(_arc_survivor_clearance(
                eval_fn, reg, seg, horizon, arc_samples))
        margin = float(np.min(clearances))
        params = dict(params, n_arcs=n_arcs, arc_samples=arc_samples,
                      delta0=reg.delta0)
        return conclude("LP4", margin, 0.0, params,
                        ["delta0, U1 from config"],
                        details={"worst_arc_clearance": margin,
                                 "note": "finite-horizon proxy, horizon=%d" % horizon})

    if which == "LP5":
        X = _grid(resolution).reshape(-1, 2)
        pts = X[~reg.in_u1(X)]
        if preim_fn is not None:
            branches = preim_fn(pts)
        else:
            branches = preimages_batch(model, pts)
        d_out = tdist(branches, np.asarray(reg.center)) - reg.r_u1
        d_out = np.where(np.isnan(d_out), -np.inf, d_out)
        best = d_out.max(axis=0)
        margin = float(best.min())
        return conclude("LP5", margin, 0.0, params,
                        ["U1 from config"],
                        details={"grid_points_checked": int(len(pts))})

    raise ConfigError("unknown LP property %r" % which)


def _sample_arc_segments(reg, rng, n_arcs, arc_samples):
    """Random straight arcs of diameter > delta0 lying in U0^c.

    Returned as (base point, direction, length) triples; points on the arc
    are base + t*length*direction for t in [0, 1].
    """
    segs = []
    length = 1.3 * reg.delta0
    center = np.asarray(reg.center)
    tries = 0
    while len(segs) < n_arcs:
        tries += 1
        if tries > 100 * n_arcs:
            raise ConfigError("failed to sample arcs in U0^c; geometry too tight")
        a = rng.random(2)
        ang = rng.random() * 2.0 * math.pi
        direction = np.array([math.cos(ang), math.sin(ang)])
        ts = np.linspace(0.0, length, arc_samples)
        pts = wrap(a[None, :] + ts[:, None] * direction[None, :])
        if np.all(tdist(pts, center) >= reg.r_u0):
            segs.append((a, direction, length))
    return segs


def _arc_survivor_clearance(eval_fn, reg, seg, horizon, n_samples,
                            max_rounds=12):
    """Find a point on the arc whose first `horizon` iterates stay in U1^c.

    Uniform sampling alone can miss the (Cantor-thin) survivor subset of an
    arc, so the parameter window is refined around the longest-surviving
    sample until a full-horizon survivor appears.  Returns the survivor's
    worst U1-clearance (or the best failing value, negative, if the budget
    runs out).
    """
    base, direction, length = seg
    center = np.asarray(reg.center)
    lo, hi = 0.0, 1.0
    best_clearance = -np.inf
    for _ in range(max_rounds):
        ts = np.linspace(lo, hi, n_samples)
        X = wrap(base[None, :] + (ts * length)[:, None] * direction[None, :])
        alive = np.ones(n_samples, dtype=bool)
        survival = np.zeros(n_samples, dtype=int)
        clear = np.full(n_samples, np.inf)
        for k in range(horizon):
            X = eval_fn(X)
            du1 = tdist(X, center) - reg.r_u1
            clear = np.where(alive, np.minimum(clear, du1), clear)
            alive &= du1 > 0.0
            survival[alive] = k + 1
            if not alive.any():
                break
        if alive.any():
            return float(np.max(np.where(alive, clear, -np.inf)))
        i = int(np.argmax(survival + np.where(np.isfinite(clear), 0.0, 0.0)))
        best_clearance = max(best_clearance, float(clear[i]))
        span = (hi - lo) / (n_samples - 1)
        lo_new = max(lo, ts[i] - 2.0 * span)
        hi_new = min(hi, ts[i] + 2.0 * span)
        if hi_new - lo_new <= 1e-15:
            break
        lo, hi = lo_new, hi_new
    return best_clearance


def certify_lp_suite(model, resolution=1024, horizon=25, rng=None, **kw):
    """Run LP1..LP5 and return the reports in order."""
    rng = rng or np.random.default_rng(0)
    return [certify_lp(model, p, resolution=resolution, horizon=horizon,
                       rng=rng, **kw)
            for p in ("LP1", "LP2", "LP3", "LP4", "LP5")]
