"""Native-unit formulas and analytic gradients, vectorized over rows of ``X``."""
from __future__ import annotations

import numpy as np


def otl_circuit(X):
    Rb1, Rb2, Rf, Rc1, Rc2, beta = X.T
    Vb1 = 12.0 * Rb2 / (Rb1 + Rb2)
    b = beta * (Rc2 + 9.0)
    den = b + Rf
    return (Vb1 + 0.74) * b / den + 11.35 * Rf / den + 0.74 * Rf * b / (den * Rc1)


def otl_circuit_grad(X):
    Rb1, Rb2, Rf, Rc1, Rc2, beta = X.T
    s = Rb1 + Rb2
    Vb1 = 12.0 * Rb2 / s
    b = beta * (Rc2 + 9.0)
    den = b + Rf
    dV_dVb1 = b / den
    dVb1_dRb1 = -12.0 * Rb2 / s ** 2
    dVb1_dRb2 = 12.0 * Rb1 / s ** 2
    # V as a function of (Vb1, b, Rf, Rc1)
    dV_db = (Vb1 + 0.74) * Rf / den ** 2 - 11.35 * Rf / den ** 2 + 0.74 * Rf ** 2 / (den ** 2 * Rc1)
    dV_dRf = -(Vb1 + 0.74) * b / den ** 2 + 11.35 * b / den ** 2 + 0.74 * b ** 2 / (den ** 2 * Rc1)
    dV_dRc1 = -0.74 * Rf * b / (den * Rc1 ** 2)
    G = np.empty_like(X)
    G[:, 0] = dV_dVb1 * dVb1_dRb1
    G[:, 1] = dV_dVb1 * dVb1_dRb2
    G[:, 2] = dV_dRf
    G[:, 3] = dV_dRc1
    G[:, 4] = dV_db * beta
    G[:, 5] = dV_db * (Rc2 + 9.0)
    return G


def piston(X):
    M, S, V0, k, P0, Ta, T0 = X.T
    A = P0 * S + 19.62 * M - k * V0 / S
    disc = np.sqrt(A * A + 4.0 * k * P0 * V0 * Ta / T0)
    V = S / (2.0 * k) * (disc - A)
    return 2.0 * np.pi * np.sqrt(M / (k + S * S * P0 * V0 * Ta / (T0 * V * V)))


def piston_grad(X):
    M, S, V0, k, P0, Ta, T0 = X.T
    A = P0 * S + 19.62 * M - k * V0 / S
    Q = 4.0 * k * P0 * V0 * Ta / T0
    disc = np.sqrt(A * A + Q)
    V = S / (2.0 * k) * (disc - A)
    R = S * S * P0 * V0 * Ta / T0
    Dm = k + R / (V * V)
    C = 2.0 * np.pi * np.sqrt(M / Dm)
    # partials of A and Q
    dA = np.stack([19.62 + 0 * M, P0 + k * V0 / S ** 2, -k / S, -V0 / S, S, 0 * M, 0 * M], axis=1)
    dQ = np.stack([0 * M, 0 * M, Q / V0, Q / k, Q / P0, Q / Ta, -Q / T0], axis=1)
    ddisc = (A[:, None] * dA + 0.5 * dQ) / disc[:, None]
    dV = (S / (2.0 * k))[:, None] * (ddisc - dA)
    dV[:, 1] += (disc - A) / (2.0 * k)
    dV[:, 3] += -S / (2.0 * k * k) * (disc - A)
    dR = np.stack([0 * M, 2.0 * R / S, R / V0, 0 * M, R / P0, R / Ta, -R / T0], axis=1)
    dDm = dR / (V * V)[:, None] - (2.0 * R / V ** 3)[:, None] * dV
    dDm[:, 3] += 1.0
    # C = 2 pi sqrt(M) Dm^{-1/2}
    G = -0.5 * (C / Dm)[:, None] * dDm
    G[:, 0] += 0.5 * C / M
    return G


def borehole(X):
    rw, r, Tu, Hu, Tl, Hl, L, Kw = X.T
    lr = np.log(r / rw)
    return 2.0 * np.pi * Tu * (Hu - Hl) / (lr * (1.0 + 2.0 * L * Tu / (lr * rw * rw * Kw) + Tu / Tl))


def borehole_grad(X):
    rw, r, Tu, Hu, Tl, Hl, L, Kw = X.T
    lr = np.log(r / rw)
    num = 2.0 * np.pi * Tu * (Hu - Hl)
    E = 2.0 * L * Tu / (rw * rw * Kw)  # den = lr + E + lr*Tu/Tl
    den = lr + E + lr * Tu / Tl
    f = num / den
    g = -f / den  # df/dden
    dlr_drw, dlr_dr = -1.0 / rw, 1.0 / r
    fac = 1.0 + Tu / Tl
    G = np.empty_like(X)
    G[:, 0] = g * (fac * dlr_drw - 2.0 * E / rw)
    G[:, 1] = g * fac * dlr_dr
    G[:, 2] = f / Tu + g * (E / Tu + lr / Tl)
    G[:, 3] = 2.0 * np.pi * Tu / den
    G[:, 4] = g * (-lr * Tu / Tl ** 2)
    G[:, 5] = -2.0 * np.pi * Tu / den
    G[:, 6] = g * E / L
    G[:, 7] = g * (-E / Kw)
    return G


def wing_weight(X):
    Sw, Wfw, A, Lam, q, lam, tc, Nz, Wdg, Wp = X.T
    c = np.cos(np.deg2rad(Lam))
    base = (0.036 * Sw ** 0.758 * Wfw ** 0.0035 * (A / (c * c)) ** 0.6 * q ** 0.006 * lam ** 0.04
            * (100.0 * tc / c) ** -0.3 * (Nz * Wdg) ** 0.49)
    return base + Sw * Wp


def wing_weight_grad(X):
    Sw, Wfw, A, Lam, q, lam, tc, Nz, Wdg, Wp = X.T
    rad = np.deg2rad(Lam)
    c = np.cos(rad)
    base = wing_weight(X) - Sw * Wp
    G = np.empty_like(X)
    G[:, 0] = 0.758 * base / Sw + Wp
    G[:, 1] = 0.0035 * base / Wfw
    G[:, 2] = 0.6 * base / A
    # (c^-2)^0.6 (c^-1)^-0.3 = c^-0.9
    G[:, 3] = base * 0.9 * np.tan(rad) * (np.pi / 180.0)
    G[:, 4] = 0.006 * base / q
    G[:, 5] = 0.04 * base / lam
    G[:, 6] = -0.3 * base / tc
    G[:, 7] = 0.49 * base / Nz
    G[:, 8] = 0.49 * base / Wdg
    G[:, 9] = Sw
    return G


GOLINSKI_TEETH = 17.0


def golinski_volume(X):
    """Speed-reducer volume with the integer number of teeth fixed."""
    x1, x2, x4, x5, x6, x7 = X.T
    z = GOLINSKI_TEETH
    return (0.7854 * x1 * x2 ** 2 * (3.3333 * z ** 2 + 14.9334 * z - 43.0934)
            - 1.508 * x1 * (x6 ** 2 + x7 ** 2) + 7.477 * (x6 ** 3 + x7 ** 3)
            + 0.7854 * (x4 * x6 ** 2 + x5 * x7 ** 2))


def golinski_volume_grad(X):
    x1, x2, x4, x5, x6, x7 = X.T
    z = GOLINSKI_TEETH
    k = 3.3333 * z ** 2 + 14.9334 * z - 43.0934
    G = np.empty_like(X)
    G[:, 0] = 0.7854 * x2 ** 2 * k - 1.508 * (x6 ** 2 + x7 ** 2)
    G[:, 1] = 2.0 * 0.7854 * x1 * x2 * k
    G[:, 2] = 0.7854 * x6 ** 2
    G[:, 3] = 0.7854 * x7 ** 2
    G[:, 4] = -3.016 * x1 * x6 + 3.0 * 7.477 * x6 ** 2 + 2.0 * 0.7854 * x4 * x6
    G[:, 5] = -3.016 * x1 * x7 + 3.0 * 7.477 * x7 ** 2 + 2.0 * 0.7854 * x5 * x7
    return G


def sine1d(X):
    return np.sin(3.0 * np.pi * X[:, 0])


def sine1d_grad(X):
    return 3.0 * np.pi * np.cos(3.0 * np.pi * X)


def corrugated_roof(X):
    return 5.0 * X[:, 0] + np.sin(10.0 * np.pi * X[:, 1])


def corrugated_roof_grad(X):
    G = np.empty_like(X)
    G[:, 0] = 5.0
    G[:, 1] = 10.0 * np.pi * np.cos(10.0 * np.pi * X[:, 1])
    return G
