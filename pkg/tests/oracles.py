"""Reference implementations used only by the tests.

They share no code with the package: reflection matrices are formed densely,
sums are written out element by element, and the QCQPs are solved by generic
first-order or SLSQP methods from several starts.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize


def theta_matrix(theta):
    return np.diag(np.conj(np.asarray(theta, dtype=complex)))


def snr_pa_dense(p_max, s_irs, s_user, G, f, h, beta, v, theta):
    T = theta_matrix(theta)
    num = beta * p_max * abs((f.conj() @ T @ G + h.conj()) @ v) ** 2
    den = s_irs * np.linalg.norm(f.conj() @ T) ** 2 + s_user
    return float(num / den)


def snr_pa_scalar(p_max, s_irs, s_user, G, f, h, beta, v, theta):
    """Same SNR with every product written as an explicit loop."""
    n, m = G.shape
    c = 0j
    for i in range(m):
        c += np.conj(h[i]) * v[i]
    noise = 0.0
    for k in range(n):
        gv = 0j
        for i in range(m):
            gv += G[k, i] * v[i]
        c += np.conj(f[k]) * np.conj(theta[k]) * gv
        noise += abs(theta[k]) ** 2 * abs(f[k]) ** 2
    return beta * p_max * abs(c) ** 2 / (s_irs * noise + s_user)


def irs_power_dense(p_max, s_irs, G, beta, v, theta):
    T = theta_matrix(theta)
    return float(beta * p_max * np.linalg.norm(T @ G @ v) ** 2 + s_irs * np.linalg.norm(T, "fro") ** 2)


def total_power_no_pa_dense(s_irs, G, v1, theta):
    T = theta_matrix(theta)
    return float(np.vdot(v1, v1).real + np.linalg.norm(T @ G @ v1) ** 2 + s_irs * np.linalg.norm(T, "fro") ** 2)


def snr_no_pa_dense(s_irs, s_user, G, f, h, v1, theta):
    T = theta_matrix(theta)
    num = abs((f.conj() @ T @ G + h.conj()) @ v1) ** 2
    den = s_irs * np.linalg.norm(f.conj() @ T) ** 2 + s_user
    return float(num / den)


def snr_via_rho(p_max, s_irs, s_user, G, f, h, beta, v, theta_dir):
    """SNR after scaling ``theta_dir`` so the IRS spends exactly ``(1-beta) P_max``."""
    T = theta_matrix(theta_dir)
    u = np.linalg.norm(T @ G @ v) ** 2
    rho = math.sqrt((1 - beta) * p_max / (beta * p_max * u + s_irs))
    return snr_pa_dense(p_max, s_irs, s_user, G, f, h, beta, v, rho * theta_dir)


def f_beta_grid(p_max, s_irs, s_user, G, f, h, v, theta_dir, points=10_000):
    grid = np.linspace(0.0, 1.0, points)
    vals = np.array([snr_via_rho(p_max, s_irs, s_user, G, f, h, b, v, theta_dir) for b in grid])
    return grid, vals


# ---------------------------------------------------------------- QCQP oracles


def _c2r(x):
    return np.concatenate([x.real, x.imag])


def _r2c(z):
    n = z.size // 2
    return z[:n] + 1j * z[n:]


def trust_region_pg(q, A, B, P, iters=20000, restarts=4, seed=0):
    """Projected gradient on ``max 2Re{q^H x} - x^H A x, x^H B x <= P``.

    Works in coordinates ``y = B^{1/2} x`` where the feasible set is a ball.
    """
    q = np.asarray(q, complex)
    A = np.atleast_2d(np.asarray(A, complex))
    B = np.atleast_2d(np.asarray(B, complex))
    w, V = np.linalg.eigh(B)
    Bh_inv = V @ np.diag(w ** -0.5) @ V.conj().T
    At = Bh_inv @ A @ Bh_inv
    qt = Bh_inv @ q
    L = 2 * max(np.linalg.eigvalsh(At).max(), 1e-300)
    rng = np.random.default_rng(seed)
    r = math.sqrt(P)

    def proj(y):
        nrm = np.linalg.norm(y)
        return y if nrm <= r else y * (r / nrm)

    def obj(y):
        return 2 * np.vdot(qt, y).real - np.vdot(y, At @ y).real

    best, best_y = -np.inf, None
    for k in range(restarts):
        y = proj(rng.standard_normal(q.size) + 1j * rng.standard_normal(q.size)) if k else np.zeros_like(q)
        step = 1.0 / L if L > 0 else 1.0
        y_prev = y
        for t in range(iters):
            z = y + (t / (t + 3)) * (y - y_prev)  # accelerated
            g = 2 * qt - 2 * At @ z
            y_prev, y = y, proj(z + step * g)
        val = obj(y)
        if val > best:
            best, best_y = val, y
    return Bh_inv @ best_y, best


def slsqp_max(fun, cons, dim, starts, seed=0):
    """Maximize a smooth real function of ``dim`` complex variables with SLSQP."""
    rng = np.random.default_rng(seed)
    best, best_x = -np.inf, None
    for k in range(starts):
        z0 = 0.1 * rng.standard_normal(2 * dim)
        res = minimize(
            lambda z: -fun(_r2c(z)),
            z0,
            method="SLSQP",
            constraints=[{"type": "ineq", "fun": (lambda z, c=c: c(_r2c(z)))} for c in cons],
            options={"ftol": 1e-15, "maxiter": 2000},
        )
        x = _r2c(res.x)
        if all(c(x) >= -1e-9 for c in cons) and fun(x) > best:
            best, best_x = fun(x), x
    return best_x, best


def two_constraint_oracle(b, C, v_ref, p_prime, starts=12, seed=0):
    def fun(v):
        return float(np.vdot(b, v).real)

    cons = [
        lambda v: 1.0 - float(np.vdot(v, v).real),
        lambda v: p_prime * (2 * float(np.vdot(v_ref, v).real) - float(np.vdot(v_ref, v_ref).real))
        - float(np.vdot(v, C @ v).real),
    ]
    return slsqp_max(fun, cons, b.size, starts, seed)


def lin_ellipsoid_sampling(k, H, P, samples=100_000, seed=0):
    """Best ``Re{k^H x}`` over random points scaled onto the ellipsoid boundary."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((samples, k.size)) + 1j * rng.standard_normal((samples, k.size))
    quad = np.einsum("ij,jk,ik->i", X.conj(), H, X).real
    X = X * np.sqrt(P / quad)[:, None]
    return float(np.max((X @ k.conj()).real))


# ---------------------------------------------------------------- CFFP oracles


def cffp_surrogate(s_irs, s_user, G, f, h, v1, theta, mu, gamma, standard=False):
    T = theta_matrix(theta)
    c = (f.conj() @ T @ G + h.conj()) @ v1
    pen = s_irs * np.linalg.norm(f.conj() @ T) ** 2 + s_user
    if standard:
        pen += abs(c) ** 2
    return float(
        math.log(1 + gamma) - abs(mu) ** 2 * pen - gamma + 2 * math.sqrt(1 + gamma) * (np.conj(mu) * c).real
    )


def gamma_grid_max(varpi, hi=100.0, points=2_000_001):
    g = np.linspace(0.0, hi, points)
    val = np.log1p(g) - g + 2 * np.sqrt(1 + g) * varpi
    return float(g[np.argmax(val)])
