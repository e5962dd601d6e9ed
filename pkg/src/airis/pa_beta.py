r"""Power-allocation factor update.

With the IRS direction :math:`\tilde\theta` and beam :math:`v` fixed, forcing
the BS+IRS power to the budget gives the IRS amplitude as a function of the
BS share :math:`\beta`, and the SNR becomes the scalar function

.. math::

    f(\beta) = \frac{a\beta^2 + b\beta + 2c\beta\sqrt{d\beta^2 + e\beta + f}}
                    {g\beta + h}.

:math:`f` is approximated by a low-order least-squares polynomial whose
stationary points (plus the interval ends and the previous :math:`\beta`) form
the candidate set; the candidate with the largest *true* :math:`f` wins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ChannelSet, Scenario

RADICAND_CLAMP = 1e-12


class RankDeficientFit(ValueError):
    pass


@dataclass(frozen=True)
class PaCoefficients:
    """Coefficients of ``f(beta)``.

    ``ab_sum`` and ``gh_sum`` optionally carry ``a + b`` and ``g + h`` computed
    without cancellation; near ``beta = 1`` the printed ``a`` and ``b`` (and
    ``g`` and ``h``) nearly cancel and the sums lose most of their digits.
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float
    g: float
    h: float
    ab_sum: float | None = None
    gh_sum: float | None = None


@dataclass(frozen=True)
class RegressionConfig:
    q_order: int = 3
    j_samples: int = 201

    def __post_init__(self):
        if not 2 <= self.q_order <= 5:
            raise ValueError(f"q_order must be in [2, 5], got {self.q_order}")
        if self.j_samples < 5 * (self.q_order + 1):
            raise ValueError(f"j_samples must be >= 5(Q+1) = {5 * (self.q_order + 1)}")


@dataclass(frozen=True)
class FitResult:
    coeffs: np.ndarray
    mse: float
    candidates: list
    beta_opt: float


def _direction_terms(ch: ChannelSet, theta_dir, v):
    """Norms shared by rho(beta) and the coefficients.

    Returns ``(u, s, w, phi)`` with ``u = ||theta_dir^H diag(Gv)||^2``,
    ``s = theta_dir^H diag(f^H) G v``, ``w = h^H v`` and
    ``phi = ||theta_dir^H diag(f^H)||^2``.
    """
    theta_dir = np.asarray(theta_dir, dtype=complex).reshape(-1)
    v = np.asarray(v, dtype=complex).reshape(-1)
    gv = ch.g @ v
    t2 = np.abs(theta_dir) ** 2
    u = float(t2 @ np.abs(gv) ** 2)
    s = np.vdot(theta_dir, np.conj(ch.f) * gv)
    w = np.vdot(ch.h, v)
    phi = float(t2 @ np.abs(ch.f) ** 2)
    return u, s, w, phi


def rho_of_beta(scn: Scenario, ch: ChannelSet, theta_dir, v, beta: float) -> float:
    """IRS amplitude that spends exactly ``(1 - beta) P_max`` at the IRS."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if ch.n == 0:
        return 0.0
    u, _, _, _ = _direction_terms(ch, theta_dir, v)
    p = scn.p_max
    return math.sqrt((1.0 - beta) * p / (beta * p * u + scn.sigma2_irs))


def pa_coefficients(scn: Scenario, ch: ChannelSet, theta_dir, v) -> PaCoefficients:
    ch.check(scn)
    u, s, w, phi = _direction_terms(ch, theta_dir, v)
    p, si, sn = scn.p_max, scn.sigma2_irs, scn.sigma2_user
    s2, w2 = abs(s) ** 2, abs(w) ** 2
    return PaCoefficients(
        a=p**2 * w2 * u - p**2 * s2,
        b=p**2 * s2 + p * w2 * si,
        c=p * float((s * np.conj(w)).real),
        d=-(p**2) * u,
        e=p**2 * u - si * p,
        f=p * si,
        g=sn * p * u - si * p * phi,
        h=si * p * phi + sn * si,
        ab_sum=p**2 * w2 * u + p * w2 * si,
        gh_sum=sn * p * u + sn * si,
    )


def eval_f_beta(co: PaCoefficients, beta):
    """SNR as a function of the BS power share (scalar or array ``beta``)."""
    beta = np.asarray(beta, dtype=float)
    scale = max(abs(co.d), abs(co.e), abs(co.f))
    # d b^2 + e b + f == (1 - b)(f - d b) + (d + e + f) b
    excess = co.d + co.e + co.f
    if abs(excess) <= 1e-12 * scale:
        excess = 0.0
    rad = (1.0 - beta) * (co.f - co.d * beta) + excess * beta
    if np.any(rad < -RADICAND_CLAMP * scale):
        raise ValueError("negative radicand in f(beta); beta outside [0, 1]?")
    rad = np.clip(rad, 0.0, None)
    ab = co.a + co.b if co.ab_sum is None else co.ab_sum
    gh = co.g + co.h if co.gh_sum is None else co.gh_sum
    num = beta * ((1.0 - beta) * co.b + beta * ab) + 2.0 * co.c * beta * np.sqrt(rad)
    den = (1.0 - beta) * co.h + beta * gh
    out = num / den
    return float(out) if out.ndim == 0 else out


def sample_betas(j_samples: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, j_samples)


def fit_polynomial(betas, values, q_order: int) -> tuple[np.ndarray, float]:
    """Least-squares polynomial coefficients (ascending powers) and the fit MSE.

    Solves the normal equations through an SVD-based least-squares routine,
    which gives the same estimator with better conditioning.
    """
    betas = np.asarray(betas, dtype=float)
    values = np.asarray(values, dtype=float)
    if betas.shape != values.shape:
        raise ValueError("betas and values differ in length")
    if betas.size < 5 * (q_order + 1):
        raise ValueError(f"need at least 5(Q+1) = {5 * (q_order + 1)} samples")
    A = np.vander(betas, q_order + 1, increasing=True)
    if np.unique(betas).size < q_order + 1 or np.linalg.matrix_rank(A) < q_order + 1:
        raise RankDeficientFit("polynomial design matrix is rank deficient")
    coeffs, *_ = np.linalg.lstsq(A, values, rcond=None)
    resid = A @ coeffs - values
    return coeffs, float(resid @ resid / betas.size)


def stationary_candidates(coeffs, q_order: int | None = None) -> list:
    """Real roots of the fitted polynomial's derivative, mapped into [0, 1].

    Roots outside the interval are replaced by 0 and complex roots dropped.
    Quadratic and cubic fits use the explicit root formulas; quartic and
    quintic fits use companion-matrix eigenvalues.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    q = coeffs.size - 1 if q_order is None else q_order
    deriv = np.array([k * coeffs[k] for k in range(1, q + 1)])  # ascending
    scale = float(np.max(np.abs(deriv))) if deriv.size else 0.0
    if scale == 0.0:
        return []
    tiny = 1e-14 * scale
    roots: list = []
    if q == 2 or (q == 3 and abs(deriv[2]) <= tiny):
        if abs(deriv[1]) > tiny:
            roots = [-deriv[0] / deriv[1]]
    elif q == 3:
        a1, a2, a3 = coeffs[1], coeffs[2], coeffs[3]
        disc = a2 * a2 - 3.0 * a3 * a1
        if disc >= 0:
            sq = math.sqrt(disc)
            roots = [(-a2 + sq) / (3.0 * a3), (-a2 - sq) / (3.0 * a3)]
    else:
        r = np.roots(deriv[::-1])
        roots = [float(z.real) for z in r if abs(z.imag) <= 1e-12 * max(1.0, abs(z))]
    return [float(r) if 0.0 <= r <= 1.0 else 0.0 for r in roots]


def select_beta(co: PaCoefficients, candidates, beta_prev: float | None = None) -> float:
    """Candidate with the largest true ``f``; ties go to the smallest beta."""
    pool = {0.0, 1.0, *map(float, candidates)}
    if beta_prev is not None:
        pool.add(float(beta_prev))
    pool = sorted(pool)
    vals = [eval_f_beta(co, b) for b in pool]
    best = max(vals)
    return next(b for b, val in zip(pool, vals) if val == best)


def optimize_beta(
    scn: Scenario,
    ch: ChannelSet,
    theta_dir,
    v,
    beta_prev: float | None = None,
    reg: RegressionConfig = RegressionConfig(),
) -> FitResult:
    """Fit, locate stationary points and pick the PA factor."""
    co = pa_coefficients(scn, ch, theta_dir, v)
    betas = sample_betas(reg.j_samples)
    scale = max(float(np.max(np.abs(eval_f_beta(co, betas)))), np.finfo(float).tiny)
    coeffs, mse = fit_polynomial(betas, eval_f_beta(co, betas) / scale, reg.q_order)
    cands = stationary_candidates(coeffs, reg.q_order)
    beta = select_beta(co, cands, beta_prev)
    return FitResult(coeffs * scale, mse * scale**2, cands, beta)
