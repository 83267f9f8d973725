"""Solenoid skew product over the torus endomorphism.

F(x, y) = (f(x), lambda_f * y + h(x)) on T^2 x D, with h a two-harmonic
placement map separating the preimage sheets of f.  The fiber map is affine
in y, so the vertical bundle is exactly DF-invariant with contraction
rate lambda_f, and the derivative is block triangular:

    DF = [[Df, 0], [Dh, lambda_f I]].

Cone-field and splitting estimates measure the complementary center plane.
The cone is taken in a vertical-weighted metric (weight recorded in
ConeParams): with the placement derivative ||Dh|| ~ 2 pi c1 and the saddle's
weak stretch 0.5, an unweighted unit cone cannot be halved in one step, so
the weight plays the role of choosing the vertical contraction strong.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConeViolation, ConfigError, FiberEscape
from .torus import (EndomorphismModel, eval_and_jacobian, preimages_batch,
                    tdist, wrap)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FiberPlacement:
    """Amplitudes of the two angular harmonics of h: T^2 -> D."""

    c1: float
    c2: float


@dataclass(frozen=True)
class SkewProductModel:
    endo: EndomorphismModel
    lambda_f: float
    placement: FiberPlacement

    def __post_init__(self):
        if not 0.0 < self.lambda_f < 1.0:
            raise ConfigError("fiber contraction needs 0 < lambda_f < 1")
        reach = abs(self.placement.c1) + abs(self.placement.c2) + self.lambda_f
        if reach > 1.0:
            raise ConfigError(
                "fiber image leaves the disk: |c1|+|c2|+lambda_f = %.3f > 1"
                % reach)


@dataclass(frozen=True)
class ConeParams:
    """Center cone ||w|| <= kappa * weight * ||u|| (u horizontal, w vertical)."""

    kappa: float = 1.0
    vertical_weight: float = 20.0

    def __post_init__(self):
        if self.kappa <= 0.0 or self.vertical_weight <= 0.0:
            raise ConfigError("cone parameters must be positive")


@dataclass
class SplittingEstimate:
    at: np.ndarray                 # 4-vector (x1, x2, y1, y2)
    Ec_frame: np.ndarray           # (4, 2) orthonormal center frame
    domination_ratio: float        # lambda_f^n / m(DF^n | Ec)
    volume_exponent: float         # per-step log 2-plane volume growth
    cone_kappa_out: float          # worst one-step cone image aperture seen
    steps: int


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def h_placement(pl: FiberPlacement, x):
    x = np.asarray(x, dtype=float)
    a1 = TWO_PI * x[..., 0]
    a2 = TWO_PI * x[..., 1]
    out = np.empty_like(x)
    out[..., 0] = pl.c1 * np.cos(a1) + pl.c2 * np.cos(a2)
    out[..., 1] = pl.c1 * np.sin(a1) + pl.c2 * np.sin(a2)
    return out


def dh_placement(pl: FiberPlacement, x):
    x = np.asarray(x, dtype=float)
    a1 = TWO_PI * x[..., 0]
    a2 = TWO_PI * x[..., 1]
    J = np.empty(x.shape[:-1] + (2, 2))
    J[..., 0, 0] = -TWO_PI * pl.c1 * np.sin(a1)
    J[..., 1, 0] = TWO_PI * pl.c1 * np.cos(a1)
    J[..., 0, 1] = -TWO_PI * pl.c2 * np.sin(a2)
    J[..., 1, 1] = TWO_PI * pl.c2 * np.cos(a2)
    return J


def eval_F(m: SkewProductModel, z, base_eval=None):
    """One step of the skew product on states z of shape (..., 4)."""
    z = np.asarray(z, dtype=float)
    x, y = z[..., :2], z[..., 2:]
    if base_eval is None:
        fx, _ = eval_and_jacobian(m.endo, x)
    else:
        fx = base_eval(x)
    ynew = m.lambda_f * y + h_placement(m.placement, x)
    if np.any(np.linalg.norm(ynew, axis=-1) > 1.0 + 1e-12):
        raise FiberEscape("fiber image left the unit disk")
    return np.concatenate([fx, ynew], axis=-1)


def dF_blocks(m: SkewProductModel, z, base_jac=None):
    """(F(z), Df, Dh) stacks; the full derivative is [[Df,0],[Dh,lam I]]."""
    z = np.asarray(z, dtype=float)
    x, y = z[..., :2], z[..., 2:]
    if base_jac is None:
        fx, J = eval_and_jacobian(m.endo, x)
    else:
        fx, J = base_jac(x)
    Dh = dh_placement(m.placement, x)
    ynew = m.lambda_f * y + h_placement(m.placement, x)
    Fz = np.concatenate([fx, ynew], axis=-1)
    return Fz, J, Dh


def orbit_batch(m: SkewProductModel, z0, steps, base_eval=None):
    """Forward orbit array of shape (steps+1, N, 4)."""
    z0 = np.atleast_2d(np.asarray(z0, dtype=float))
    out = np.empty((steps + 1,) + z0.shape)
    out[0] = z0
    for k in range(steps):
        out[k + 1] = eval_F(m, out[k], base_eval=base_eval)
    return out


def attractor_sample(m: SkewProductModel, burn_in=30, count=1000, rng=None,
                     base_eval=None):
    """Points within lambda_f^burn_in of the attractor, from spread seeds."""
    if burn_in < 20:
        raise ConfigError("attractor_sample needs burn_in >= 20")
    rng = rng or np.random.default_rng(0)
    x = rng.random((count, 2))
    phi = rng.random(count) * TWO_PI
    rad = np.sqrt(rng.random(count))
    y = np.stack([rad * np.cos(phi), rad * np.sin(phi)], axis=-1)
    z = np.concatenate([x, y], axis=-1)
    for _ in range(burn_in):
        z = eval_F(m, z, base_eval=base_eval)
    return z


# ---------------------------------------------------------------------------
# injectivity
# ---------------------------------------------------------------------------

def injectivity_margin(m: SkewProductModel, samples=10_000, rng=None):
    """min over base points y and preimage pairs of ||h(x)-h(x')|| - 2 lambda_f.

    Positive margin certifies injectivity of F on T x D: the lambda_f-disks
    around the sheet placements are pairwise disjoint.
    """
    if samples < 1000:
        raise ConfigError("injectivity_margin needs samples >= 10^3")
    rng = rng or np.random.default_rng(0)
    Y = rng.random((samples, 2))
    branches = preimages_batch(m.endo, Y)          # (deg, N, 2)
    ok = ~np.any(np.isnan(branches), axis=(0, 2))
    branches = branches[:, ok, :]
    hv = h_placement(m.placement, branches)        # (deg, N, 2)
    deg = hv.shape[0]
    worst = np.inf
    for i in range(deg):
        for j in range(i + 1, deg):
            d = np.linalg.norm(hv[i] - hv[j], axis=-1)
            worst = min(worst, float(d.min()))
    return worst - 2.0 * m.lambda_f


# ---------------------------------------------------------------------------
# cones and splitting
# ---------------------------------------------------------------------------

_CONE_ANGLES = np.linspace(0.0, math.pi, 181)[:-1]
_CONE_U = np.stack([np.cos(_CONE_ANGLES), np.sin(_CONE_ANGLES)], axis=-1)


def cone_image_aperture(m: SkewProductModel, z, cone: ConeParams,
                        base_jac=None):
    """Worst one-step image aperture kappa' of the weighted kappa-cone.

    For each sample, maximizes (||Dh u|| + lam*kappa*w*||u||)/(w*||Df u||)
    over horizontal directions u; DF maps the kappa-cone into the
    kappa'-cone.  Vectorized over z of shape (N, 4).
    """
    _, J, Dh = dF_blocks(m, z, base_jac=base_jac)
    Ju = np.einsum("nij,aj->nai", J, _CONE_U)
    Dhu = np.einsum("nij,aj->nai", Dh, _CONE_U)
    nJ = np.linalg.norm(Ju, axis=-1)
    nD = np.linalg.norm(Dhu, axis=-1)
    w = cone.vertical_weight
    ratio = (nD + m.lambda_f * cone.kappa * w) / (w * nJ)
    return ratio.max(axis=-1)


def splitting_estimate(m: SkewProductModel, z0, cone: ConeParams, n=40,
                       burn_in=30, rng=None, base_eval=None, base_jac=None):
    """Center-plane estimate at the endpoint of the orbit of z0.

    Pushes the horizontal 2-plane from the n-step-earlier orbit point
    forward with re-orthonormalization; checks cone invariance (aperture
    halving) at every visited point and raises ConeViolation on failure.
    """
    if n < 10:
        raise ConfigError("splitting_estimate needs n >= 10")
    z = np.atleast_2d(np.asarray(z0, dtype=float))
    for _ in range(burn_in):
        z = eval_F(m, z, base_eval=base_eval)
    N = z.shape[0]
    V = np.zeros((N, 4, 2))
    V[:, 0, 0] = 1.0
    V[:, 1, 1] = 1.0
    R_acc = np.broadcast_to(np.eye(2), (N, 2, 2)).copy()
    log_det = np.zeros(N)
    kappa_out_worst = np.zeros(N)
    half = 0.5 * cone.kappa
    for _ in range(n):
        kap = cone_image_aperture(m, z, cone, base_jac=base_jac)
        kappa_out_worst = np.maximum(kappa_out_worst, kap)
        if np.any(kap > half):
            i = int(np.argmax(kap))
            raise ConeViolation(
                "cone aperture %.3f > kappa/2 at sample %d" % (kap[i], i),
                at=z[i])
        Fz, J, Dh = dF_blocks(m, z, base_jac=base_jac)
        top = np.einsum("nij,njk->nik", J, V[:, :2, :])
        bot = np.einsum("nij,njk->nik", Dh, V[:, :2, :]) \
            + m.lambda_f * V[:, 2:, :]
        W = np.concatenate([top, bot], axis=1)
        Q, R = np.linalg.qr(W)
        # fix QR sign so R has positive diagonal (determinism)
        sgn = np.sign(np.einsum("nii->ni", R))
        sgn[sgn == 0.0] = 1.0
        Q = Q * sgn[:, None, :]
        R = R * sgn[:, :, None]
        V = Q
        R_acc = np.einsum("nij,njk->nik", R, R_acc)
        log_det += np.log(np.abs(R[:, 0, 0] * R[:, 1, 1]))
        z = Fz
    svals = np.linalg.svd(R_acc, compute_uv=False)
    m_min = svals[:, -1]
    out = []
    for i in range(N):
        out.append(SplittingEstimate(
            at=z[i], Ec_frame=V[i],
            domination_ratio=float(m.lambda_f ** n / m_min[i]),
            volume_exponent=float(log_det[i] / n),
            cone_kappa_out=float(kappa_out_worst[i]),
            steps=n))
    return out
