"""C1 profile toolkit: smoothsteps, gates, and the radial blow-up profile.

All profiles are piecewise cubic (or derived from cubics), vectorized over
numpy arrays, and each comes with its exact derivative so Jacobians of the
maps built from them are analytic, not finite-differenced.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def smoothstep(u):
    """Clamped cubic step: 0 for u<=0, 3u^2-2u^3 on [0,1], 1 for u>=1."""
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def smoothstep_d(u):
    """Derivative of :func:`smoothstep` (0 outside [0,1])."""
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    uu = np.clip(u, 0.0, 1.0)
    return np.where(inside, 6.0 * uu * (1.0 - uu), 0.0)


def gate_up(x, x0, x1):
    """0 before x0, rises C1-smoothly to 1 at x1."""
    return smoothstep((np.asarray(x, dtype=float) - x0) / (x1 - x0))


def gate_up_d(x, x0, x1):
    return smoothstep_d((np.asarray(x, dtype=float) - x0) / (x1 - x0)) / (x1 - x0)


def gate_down(x, x0, x1):
    """1 before x0, falls C1-smoothly to 0 at x1."""
    return 1.0 - gate_up(x, x0, x1)


def gate_down_d(x, x0, x1):
    return -gate_up_d(x, x0, x1)


def trapezoid_gate(x, x0, x1, x2, x3):
    """C1 plateau: 0 outside (x0,x3), 1 on [x1,x2], smooth ramps between."""
    return gate_up(x, x0, x1) * gate_down(x, x2, x3)


def trapezoid_gate_d(x, x0, x1, x2, x3):
    return (gate_up_d(x, x0, x1) * gate_down(x, x2, x3)
            + gate_up(x, x0, x1) * gate_down_d(x, x2, x3))


class PlateauRamp:
    """Normalized C1 ramp W:[0,1]->[0,1] with derivative ~ gated s^(c-1).

    W(0)=0, W(1)=1, W'(0)=W'(1)=0.  The derivative is
    phi(s) = T(s/eps) T((1-s)/eps) s^(c-1) (T the clamped smoothstep),
    integrated in closed form piecewise and normalized.

    With c = 1 this is a flat slope plateau; it drives the saddle blend,
    where the worst-direction determinant factor is (v - beta s v'),
    v = 1 + W, and the margin-optimal unconstrained profile is
    v = 1 + s^(1/beta).  Choosing c = 1/beta reproduces that law away
    from the C1 ramps, so min det stays within a few percent of the
    ideal bound 1.
    """

    def __init__(self, eps=0.05, c=1.0):
        if not 0.0 < eps < 0.5:
            raise ConfigError("plateau ramp fraction must lie in (0, 0.5)")
        if c <= 0.0:
            raise ConfigError("plateau exponent must be positive")
        self.eps = float(eps)
        self.c = float(c)
        e, c_ = self.eps, self.c
        # piece 3 polynomial coefficients: T((1-s)/eps) expanded in powers of s
        self._b = np.array([
            3.0 / e ** 2 - 2.0 / e ** 3,
            -6.0 / e ** 2 + 6.0 / e ** 3,
            3.0 / e ** 2 - 6.0 / e ** 3,
            2.0 / e ** 3,
        ])
        self._I_eps = self._int1(e)
        self._I_mid_end = self._I_eps + ((1 - e) ** c_ - e ** c_) / c_
        self._norm = self._I_mid_end + self._int3(1.0) - self._int3(1.0 - e)

    def _int1(self, s):
        e, c = self.eps, self.c
        s = np.asarray(s, dtype=float)
        return (3.0 / e ** 2) * s ** (c + 2) / (c + 2) \
            - (2.0 / e ** 3) * s ** (c + 3) / (c + 3)

    def _int3(self, s):
        c = self.c
        s = np.asarray(s, dtype=float)
        out = 0.0
        for k, bk in enumerate(self._b):
            out = out + bk * s ** (k + c) / (k + c)
        return out

    def __call__(self, s):
        s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
        e, c = self.eps, self.c
        low = self._int1(s)
        mid = self._I_eps + (np.maximum(s, e) ** c - e ** c) / c
        top = self._I_mid_end + self._int3(np.maximum(s, 1 - e)) - self._int3(1.0 - e)
        out = np.where(s <= e, low, np.where(s <= 1.0 - e, mid, top))
        return np.clip(out / self._norm, 0.0, 1.0)

    def deriv(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s > 0.0) & (s < 1.0)
        sc = np.where(inside, s, 0.5)  # avoid 0^(c-1) warnings
        val = smoothstep(sc / self.eps) * smoothstep((1.0 - sc) / self.eps) \
            * sc ** (self.c - 1.0)
        return np.where(inside, val / self._norm, 0.0)


class RadialPushProfile:
    """Radius remap Rb for the image-side blow-up push.

    Rb maps image-side radius zeta in (0, zeta_id] to [s_radius, zeta_id],
    equals the identity for zeta >= zeta_id, and is built so that the
    determinant of the induced planar push T(z) = q + Rb(|z-q|) unit(z-q) is
    the prescribed profile g(zeta) = Rb'(zeta) Rb(zeta) / zeta:

    * inner zone (zeta <= zeta_c): g = a_inner * s_radius / zeta exactly,
      giving Rb = sqrt(s_radius^2 + 2 a_inner s_radius zeta) and the
      determinant blow-up law det ~ 1/zeta;
    * transition (zeta_c, zeta_id): g is a polynomial joining g(zeta_c) to 1
      whose free valley coefficient is solved (linearly) so that
      Rb(zeta_id) = zeta_id, which also forces Rb'(zeta_id) = 1, i.e. a C1
      match with the identity.

    Monotonicity of Rb (hence injectivity of the push) is equivalent to
    g > 0, which the constructor verifies on a dense grid together with a
    floor g >= g_min.
    """

    def __init__(self, s_radius, a_inner, zeta_c, zeta_id, g_min=0.30):
        if not 0.0 < s_radius < zeta_id:
            raise ConfigError("blow-up needs 0 < s_radius < zeta_id")
        if not 0.0 < zeta_c < zeta_id:
            raise ConfigError("blow-up needs 0 < zeta_c < zeta_id")
        self.s_radius = float(s_radius)
        self.a_inner = float(a_inner)
        self.zeta_c = float(zeta_c)
        self.zeta_id = float(zeta_id)
        self.g_min = float(g_min)
        self._solve_transition()
        self._verify()

    # -- construction ----------------------------------------------------

    def _solve_transition(self):
        s, a, zc, zid = self.s_radius, self.a_inner, self.zeta_c, self.zeta_id
        L = zid - zc
        gc = a * s / zc
        # g(u) = gc + (1-gc) S(u) + d * 16 u^2 (1-u)^2 on u in [0,1]
        P = np.polynomial.Polynomial
        u = P([0.0, 1.0])
        S = 3.0 * u ** 2 - 2.0 * u ** 3
        V = 16.0 * (u ** 2) * (1.0 - u) ** 2
        base = gc + (1.0 - gc) * S
        zeta_of_u = zc + L * u
        # budget: integral of g * zeta dzeta over the transition must equal
        # (zid^2 - s^2)/2 - a*s*zc  so that Rb(zid) = zid exactly
        target = 0.5 * (zid ** 2 - s ** 2) - a * s * zc
        I0 = L * (base * zeta_of_u).integ()(1.0)
        I1 = L * (V * zeta_of_u).integ()(1.0)
        d = (target - I0) / I1
        self._g_poly = base + d * V
        self._valley_coeff = float(d)
        # cumulative integral 2 * int g zeta dzeta from zeta_c, as poly in u
        self._acc_poly = (2.0 * L * (self._g_poly * zeta_of_u)).integ()
        self._rb2_at_zc = s ** 2 + 2.0 * a * s * zc

    def _verify(self):
        zz = np.linspace(self.zeta_c, self.zeta_id, 4001)
        gg = self.g(zz)
        if gg.min() <= self.g_min:
            raise ConfigError(
                "blow-up push determinant floor violated: min g = %.4f <= %.2f"
                % (gg.min(), self.g_min))
        rb_end = self.rb(np.array([self.zeta_id]))[0]
        if abs(rb_end - self.zeta_id) > 1e-12:
            raise ConfigError("blow-up profile failed to close: Rb(zeta_id) != zeta_id")

    # -- evaluation -------------------------------------------------------

    def g(self, zeta):
        """det of the radial push at image radius zeta (1 outside zeta_id)."""
        zeta = np.asarray(zeta, dtype=float)
        u = (zeta - self.zeta_c) / (self.zeta_id - self.zeta_c)
        inner = self.a_inner * self.s_radius / np.maximum(zeta, 1e-300)
        trans = self._g_poly(np.clip(u, 0.0, 1.0))
        return np.where(zeta <= self.zeta_c, inner,
                        np.where(zeta < self.zeta_id, trans, 1.0))

    def rb(self, zeta):
        """Remapped radius Rb(zeta)."""
        zeta = np.asarray(zeta, dtype=float)
        s, a = self.s_radius, self.a_inner
        inner = np.sqrt(s * s + 2.0 * a * s * np.maximum(zeta, 0.0))
        u = np.clip((zeta - self.zeta_c) / (self.zeta_id - self.zeta_c), 0.0, 1.0)
        trans = np.sqrt(self._rb2_at_zc + self._acc_poly(u))
        return np.where(zeta <= self.zeta_c, inner,
                        np.where(zeta < self.zeta_id, trans, zeta))

    def rb_d(self, zeta):
        """Derivative Rb'(zeta) = g(zeta) * zeta / Rb(zeta)."""
        zeta = np.asarray(zeta, dtype=float)
        return self.g(zeta) * zeta / self.rb(zeta)

    def rb_inverse(self, R):
        """Invert Rb (vectorized); input radii must be >= s_radius.

        Radii below s_radius have no preimage and return nan; radii above
        zeta_id invert to themselves.
        """
        R = np.asarray(R, dtype=float)
        s, a = self.s_radius, self.a_inner
        rb_zc = np.sqrt(self._rb2_at_zc)
        inner = (R * R - s * s) / (2.0 * a * s)
        zeta = np.where(R < s, np.nan, np.where(R <= rb_zc, inner, R))
        # Newton-polish the transition range; identity and inner are exact
        mask = (R > rb_zc) & (R < self.zeta_id)
        if np.any(mask):
            guess = np.clip(R[mask], self.zeta_c, self.zeta_id)
            for _ in range(60):
                val = self.rb(guess) - R[mask]
                der = np.maximum(self.rb_d(guess), 1e-6)
                step = val / der
                guess = np.clip(guess - step, self.zeta_c, self.zeta_id)
                if np.max(np.abs(step)) < 1e-14:
                    break
            zeta = np.array(zeta, dtype=float)
            zeta[mask] = guess
        return zeta
