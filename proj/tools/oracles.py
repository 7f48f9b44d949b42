#!/usr/bin/env python3
"""Independent reference values frozen as constants in the tests and the
acceptance binary. Run with python3 (numpy, scipy)."""

import numpy as np
from scipy import integrate, special


def radial(fun, upper=np.inf):
    return integrate.quad(fun, 0.0, upper, epsabs=0.0, epsrel=1e-13, limit=500)[0]


def p0(r):
    return np.sqrt(1.0 + r * r)


def juttner_mass():
    # int exp(-p0) d^3p over R^3 = 4 pi K_2(1)
    quad = 4 * np.pi * radial(lambda r: r * r * np.exp(-p0(r)))
    return quad, 4 * np.pi * special.kn(2, 1.0)


def juttner_mass_cube(p_max=6.0, nodes=200):
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = x * p_max
    w = w * p_max
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    W = w[:, None, None] * w[None, :, None] * w[None, None, :]
    return float(np.sum(W * np.exp(-np.sqrt(1 + X * X + Y * Y + Z * Z))))


def juttner_loss_at_rest(radius=30.0):
    # p = 0, sigma = 1: A(g) = 4 pi g sqrt(1+g^2), g^2 = (p10 - 1)/2
    def f(r):
        e = p0(r)
        g = np.sqrt((e - 1) / 2)
        return np.exp(-e) * 4 * np.pi * g * np.sqrt(1 + g * g) / e * 4 * np.pi * r * r

    return radial(f, radius)


def angular_integral_unit(g):
    return 4 * np.pi * g * np.sqrt(1 + g * g)


def entropy_constant():
    # C1 = 2 int int (|x|^2 + p0) exp(-(|x|^2 + p0)) d^3x d^3p
    x0 = np.pi ** 1.5
    x2 = 1.5 * np.pi ** 1.5
    m0 = 4 * np.pi * radial(lambda r: r * r * np.exp(-p0(r)))
    m1 = 4 * np.pi * radial(lambda r: r * r * p0(r) * np.exp(-p0(r)))
    full = 2 * (x2 * m0 + x0 * m1)
    # single homogeneous cell: x = 0 with unit volume
    homogeneous = 2 * m1
    return full, homogeneous


def jiang_integrals(power, probes=(5, 10, 20, 40), radius=1.0):
    # (1/p0^k) int_{|p1|<=R} A(g)/p10 d^3p1 with sigma = g^power, p along z
    out_j, out_de = [], []
    for pm in probes:
        pv = np.array([0.0, 0.0, pm])
        e = p0(pm)

        def integrand(c, r):
            e1 = p0(r)
            s = (e + e1) ** 2 - (pm * pm + r * r + 2 * pm * r * c)
            g = np.sqrt(max(s - 4.0, 0.0)) / 2
            a = 4 * np.pi * g * np.sqrt(1 + g * g) * g ** power
            return a / e1 * 2 * np.pi * r * r

        val = integrate.dblquad(integrand, 0, radius, -1, 1, epsabs=0, epsrel=1e-12)[0]
        out_j.append(val / e ** 2)
        out_de.append(val / e)
    return out_j, out_de


if __name__ == "__main__":
    print("juttner mass (quad, 4 pi K2(1)):", *map(lambda v: repr(float(v)), juttner_mass()))
    print("juttner mass on [-6,6]^3:", repr(float(juttner_mass_cube())))
    print("juttner loss at rest, R=30:", repr(float(juttner_loss_at_rest())))
    print("A(1), A(3) for sigma=1:", repr(float(angular_integral_unit(1.0))), repr(float(angular_integral_unit(3.0))))
    print("C1 (R^3 x R^3, homogeneous cell):", *map(lambda v: repr(float(v)), entropy_constant()))
    for k in (0, 2):
        j, d = jiang_integrals(k)
        print(f"sigma=g^{k} jiang:", [repr(float(v)) for v in j])
        print(f"sigma=g^{k} de:", [repr(float(v)) for v in d])
