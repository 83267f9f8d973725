import numpy as np
import pytest

from attractorlab.torus import (EndomorphismModel, LinearPart, RegionGeometry,
                                SaddleDeformation)


@pytest.fixture(scope="session")
def default_endo():
    lin = LinearPart(3, 0, 0, 2)
    defo = SaddleDeformation(center=(0.5, 0.0), r_out=0.12, mu_u=6.0, mu_s=0.5,
                             weak_axis=0, ramp_eps=0.03)
    reg = RegionGeometry(center=(0.5, 0.0), r_u0=0.12, r_u1=0.18,
                         delta0=0.26, Delta=1.5)
    return EndomorphismModel(lin, reg, defo)


@pytest.fixture(scope="session")
def pure_endo():
    lin = LinearPart(3, 0, 0, 2)
    reg = RegionGeometry(center=(0.5, 0.0), r_u0=0.12, r_u1=0.18,
                         delta0=0.26, Delta=1.5)
    return EndomorphismModel(lin, reg, None)


def fd_jacobian(fn, x, h=1e-7):
    """Central-difference Jacobian oracle with wrap-aware differences."""
    from attractorlab.torus import tdelta

    x = np.asarray(x, dtype=float)
    J = np.empty((2, 2))
    for j in range(2):
        dx = np.zeros(2)
        dx[j] = h
        J[:, j] = tdelta(fn(x + dx), fn(x - dx)) / (2.0 * h)
    return J
