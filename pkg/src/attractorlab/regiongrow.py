"""Internal radius growth: iterate open disks under f* until they contain
a certified ball of radius R0.

A seed disk is represented two ways across its life:

* polygon phase (region still small): the boundary circle is tracked as
  exact forward images of parameter points on the seed circle, with
  edge-length-capped refinement (midpoint parameters are re-iterated from
  the seed, so vertices are always true orbit points, never interpolants)
  and a winding-number test detecting when the puncture is enclosed;
* witness phase (region large or punctured): interior sample orbits carry
  Jacobian products whose smallest singular value gives a first-order
  inscribed-radius estimate around each candidate witness.

Neither phase is the certificate.  A claimed (K, witness) is accepted only
after independent verification: probe points filling the ball of radius R0
around (f*)^K(witness) are pulled back K steps along the witness branch by
Newton's method; if every probe lands in the seed disk, the ball is
genuinely contained in the image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .blowup import PuncturedMapModel, eval_fstar
from .errors import NotReached
from .torus import sigma_min, tdelta, tdist, wrap


@dataclass
class IRGTraceRow:
    iterate: int
    inscribed_radius: float
    witness: np.ndarray
    refined: bool = False


@dataclass
class IRGResult:
    K: int
    witness_seed: np.ndarray       # witness position inside the seed disk
    witness_image: np.ndarray      # (f*)^K(witness)
    inscribed_radius: float        # certified radius (= R0 requested)
    probes_checked: int
    trace: List[IRGTraceRow] = field(default_factory=list)


# ---------------------------------------------------------------------------
# membership verification
# ---------------------------------------------------------------------------

def pullback_probes(m: PuncturedMapModel, orbit, targets, tol=1e-9,
                    basin=0.2):
    """Pull probe targets back along the orbit's inverse branch.

    ``orbit`` is the witness orbit x_0..x_K; ``targets`` (N,2) live near
    x_K.  Returns (points at level 0, ok mask): ok=False where Newton left
    the branch neighborhood or failed to converge.
    """
    z = np.atleast_2d(np.asarray(targets, dtype=float)).copy()
    ok = np.ones(len(z), dtype=bool)
    for j in range(len(orbit) - 2, -1, -1):
        xj, xj1 = orbit[j], orbit[j + 1]
        _, Jj = eval_fstar(m, xj, guard=False)
        try:
            Jinv = np.linalg.inv(Jj)
        except np.linalg.LinAlgError:
            ok[:] = False
            return z, ok
        w = wrap(xj[None, :] + tdelta(z, xj1) @ Jinv.T)
        for _ in range(30):
            fw, Jw = eval_fstar(m, w, guard=False)
            res = tdelta(fw, z)
            rn = np.linalg.norm(res, axis=-1)
            if rn.max() < tol:
                break
            det = Jw[..., 0, 0] * Jw[..., 1, 1] - Jw[..., 0, 1] * Jw[..., 1, 0]
            inv = np.empty_like(Jw)
            inv[..., 0, 0] = Jw[..., 1, 1]
            inv[..., 0, 1] = -Jw[..., 0, 1]
            inv[..., 1, 0] = -Jw[..., 1, 0]
            inv[..., 1, 1] = Jw[..., 0, 0]
            step = np.einsum("nij,nj->ni", inv, res) / det[..., None]
            w = wrap(w - np.clip(step, -0.1, 0.1))
        fw, _ = eval_fstar(m, w, guard=False)
        ok &= np.linalg.norm(tdelta(fw, z), axis=-1) < 10 * tol
        ok &= tdist(w, xj) < basin
        z = w
    return z, ok


def verify_inscribed_ball(m: PuncturedMapModel, orbit, radius, seed_center,
                          seed_radius, n_probes=10_000, rng=None):
    """Check that B((f*)^K(witness), radius) lies in (f*)^K(seed disk).

    Probes fill the ball (deterministic sunflower layout plus the center);
    each must pull back into the seed disk.  Returns (verified, n_checked).
    """
    rng = rng or np.random.default_rng(0)
    k = np.arange(1, n_probes + 1)
    rr = radius * np.sqrt(k / n_probes)
    th = k * (math.pi * (3.0 - math.sqrt(5.0)))
    probes = wrap(orbit[-1][None, :]
                  + np.stack([rr * np.cos(th), rr * np.sin(th)], axis=-1))
    back, ok = pullback_probes(m, orbit, probes)
    if not np.all(ok):
        return False, int(np.sum(~ok))
    inside = tdist(back, seed_center) <= seed_radius * (1.0 + 1e-9)
    return bool(np.all(inside)), int(np.sum(~inside))


# ---------------------------------------------------------------------------
# polygon phase
# ---------------------------------------------------------------------------

def _winding_number(verts, q):
    d = tdelta(verts, q)
    ang = np.arctan2(d[:, 1], d[:, 0])
    dang = np.diff(np.concatenate([ang, ang[:1]]))
    dang = (dang + math.pi) % (2.0 * math.pi) - math.pi
    return int(round(float(np.sum(dang)) / (2.0 * math.pi)))


def _polygon_inscribed(verts, w):
    """Distance from w to the polygon boundary, in w's local chart."""
    a = tdelta(verts, w)
    b = np.roll(a, -1, axis=0)
    ab = b - a
    tt = np.clip(-np.einsum("ij,ij->i", a, ab)
                 / np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300), 0.0, 1.0)
    closest = a + tt[:, None] * ab
    return float(np.min(np.linalg.norm(closest, axis=-1)))


class _SeedDiskTracker:
    """Forward images of a seed circle, refined by parameter midpoints."""

    def __init__(self, m, center, radius, n0=64, edge_cap=0.01,
                 max_vertices=4096):
        self.m = m
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.edge_cap = edge_cap
        self.max_vertices = max_vertices
        self.params = np.linspace(0.0, 2.0 * math.pi, n0, endpoint=False)
        self.k = 0
        self.verts = self._iterate(self.params, 0)
        self.refined_last = False

    def _iterate(self, params, k):
        pts = wrap(self.center[None, :]
                   + self.radius * np.stack([np.cos(params), np.sin(params)],
                                            axis=-1))
        for _ in range(k):
            pts, _ = eval_fstar(self.m, pts, guard=False)
        return pts

    def step(self):
        self.k += 1
        self.verts, _ = eval_fstar(self.m, self.verts, guard=False)
        self.refined_last = False
        for _ in range(8):
            gaps = np.linalg.norm(
                tdelta(np.roll(self.verts, -1, axis=0), self.verts), axis=-1)
            bad = gaps > self.edge_cap
            if not bad.any() or len(self.params) >= self.max_vertices:
                break
            nxt = np.roll(self.params, -1)
            nxt[-1] += 2.0 * math.pi
            mids = 0.5 * (self.params + nxt)[bad]
            mid_pts = self._iterate(mids % (2.0 * math.pi), self.k)
            order = np.argsort(np.concatenate([self.params,
                                               mids % (2.0 * math.pi)]))
            self.params = np.concatenate([self.params,
                                          mids % (2.0 * math.pi)])[order]
            self.verts = np.concatenate([self.verts, mid_pts], axis=0)[order]
            self.refined_last = True

    def diameter(self):
        ref = self.verts[0]
        d = tdelta(self.verts, ref)
        return float(np.max(np.linalg.norm(d, axis=-1))) * 2.0 ** 0.0

    def encloses(self, q):
        return _winding_number(self.verts, q) != 0


# ---------------------------------------------------------------------------
# the growth check
# ---------------------------------------------------------------------------

def irg_check(m: PuncturedMapModel, seeds, R0, cap=60, n_interior=300,
              n_probes=10_000, rng=None, polygon_diameter_switch=0.15,
              first_order_safety=2.0):
    """Per-seed internal radius growth to R0, with verified witnesses.

    ``seeds`` is a list of (center, radius).  Returns a list of IRGResult;
    raises NotReached if a seed fails to fatten within the cap.
    """
    rng = rng or np.random.default_rng(0)
    out = []
    for center, radius in seeds:
        out.append(_irg_single(m, np.asarray(center, dtype=float),
                               float(radius), R0, cap, n_interior, n_probes,
                               rng, polygon_diameter_switch,
                               first_order_safety))
    return out


def _irg_single(m, center, radius, R0, cap, n_interior, n_probes, rng,
                poly_switch, safety):
    q = m.q
    # interior samples (sunflower fill; keep clear of the exact puncture)
    k = np.arange(1, n_interior + 1)
    rr = radius * np.sqrt(k / (n_interior + 1.0))
    th = k * (math.pi * (3.0 - math.sqrt(5.0)))
    pts0 = wrap(center[None, :]
                + np.stack([rr * np.cos(th), rr * np.sin(th)], axis=-1))
    pts0 = pts0[tdist(pts0, q) > 1e-9]
    orbits = [pts0]
    Jacc = np.broadcast_to(np.eye(2), (len(pts0), 2, 2)).copy()
    mins = np.ones(len(pts0))

    poly = _SeedDiskTracker(m, center, radius)
    use_poly = True
    trace: List[IRGTraceRow] = []
    best = (0.0, pts0[0])

    for k_it in range(1, cap + 1):
        cur, Jk = eval_fstar(m, orbits[-1], guard=False)
        orbits.append(cur)
        Jacc = np.einsum("nij,njk->nik", Jk, Jacc)
        mins = sigma_min(Jacc)
        refined = False
        if use_poly:
            poly.step()
            refined = poly.refined_last
            if poly.encloses(q) or poly.diameter() > poly_switch \
                    or len(poly.params) >= poly.max_vertices:
                use_poly = False
        i_best = int(np.argmax(mins))
        est = float(radius * mins[i_best])
        if use_poly:
            est = min(est, _polygon_inscribed(poly.verts, cur[i_best]))
        best = (est, cur[i_best])
        trace.append(IRGTraceRow(k_it, est, cur[i_best], refined))
        if radius * mins[i_best] >= safety * R0:
            orbit = np.array([orb[i_best] for orb in orbits])
            verified, bad = verify_inscribed_ball(
                m, orbit, R0, center, radius, n_probes=n_probes, rng=rng)
            if verified:
                return IRGResult(K=k_it, witness_seed=pts0[i_best],
                                 witness_image=cur[i_best],
                                 inscribed_radius=R0,
                                 probes_checked=n_probes, trace=trace)
    raise NotReached("seed disk failed to reach radius %.3g within %d iterates"
                     % (R0, cap), cap=cap)
