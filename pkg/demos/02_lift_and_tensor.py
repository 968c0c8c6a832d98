"""The lifted linear map and its two exact structural identities.

A linear hyperbolic map B acts on functions by composition; on the
transform side the action is the projected lift d(B) P Ltilde_B P.
Two things are checked here:

 1. the lift reproduces T(u o B) (exactly in the continuum when
    det B = 1; the 1d run below shows the |det B| factor for a
    non-unimodular block),
 2. the lifted kernel factorizes into a tensor product of two copies of
    the model kernel after the z-change of coordinates.
"""

import numpy as np

from contactfbi.fbi_core import (det_factor, dual_phase_grid, fbi_forward,
                                 l0_hat_kernel, lift_linear,
                                 linear_lift_kernel, z_change)
from contactfbi.numerics import make_grid, sample


def one_dim_lift(beta):
    b = np.array([[beta]])
    g = make_grid(1, 8.0, 64)
    pg = dual_phase_grid(g, center_margin=3.5)

    def f(p):
        return np.exp(-np.sum(p ** 2, axis=-1) / 2.0)
    u = sample(f, g)
    ub = sample(lambda p: f(beta * p), g)
    lhs = fbi_forward(ub, pg)
    rhs = lift_linear(b, fbi_forward(u, pg))
    err = np.linalg.norm((rhs.values - abs(beta) * lhs.values).ravel()) \
        / np.linalg.norm(rhs.values.ravel())
    print("beta = %-4g  d(B) = %.4f  defect of |det B| T(u o B): %.3e"
          % (beta, det_factor(b), err))


def tensor_identity():
    rng = np.random.default_rng(0)
    b = np.diag([2.0, 0.5])
    po = rng.normal(size=(30, 4))
    pi = rng.normal(size=(30, 4))
    k = linear_lift_kernel(b, po, pi)
    zo = np.array([z_change(p[:2], p[2:])[0] for p in po])
    wo = np.array([z_change(p[:2], p[2:])[1] for p in po])
    zi = np.array([z_change(p[:2], p[2:])[0] for p in pi])
    wi = np.array([z_change(p[:2], p[2:])[1] for p in pi])
    tensor = l0_hat_kernel(b, zo, zi) * np.conj(l0_hat_kernel(b, wo, wi))
    print("tensor factorization max defect: %.3e"
          % (np.max(np.abs(k - tensor)) / np.max(np.abs(k))))


def main():
    print("-- 1d lifts (the determinant factor is visible) --")
    one_dim_lift(2.0)
    one_dim_lift(0.5)
    print("-- z-conjugated tensor factorization of the 2d lift --")
    tensor_identity()


if __name__ == "__main__":
    main()
