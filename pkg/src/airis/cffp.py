"""Rate maximization without an explicit power split, via fractional programming.

The rate ``ln(1 + |c|^2 / Den)`` is lifted to a surrogate in two auxiliaries,
a complex ``mu`` (quadratic transform) and a real ``gamma >= 0`` (Lagrangian
dual transform).  Each of the four blocks ``mu``, ``gamma``, ``v1`` and
``theta`` is then maximized in turn; ``mu`` and ``gamma`` in closed form, the
beam and IRS vector as single-constraint QCQPs.

Two variants are provided.  ``PAPER_FAITHFUL`` uses the ``mu``-penalty
``|mu|^2 Den``; ``STANDARD_FP`` uses the canonical ``|mu|^2 (|c|^2 + Den)``,
for which the surrogate is tight, ``max_{mu, gamma} = ln(1 + SNR)``.
"""
from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ChannelSet,
    CffpState,
    Scenario,
    achievable_rate,
    aligned_phases,
    link_terms,
    snr_no_pa,
    total_power_no_pa,
)
from .qcqp import solve_lin_ellipsoid, solve_trust_region

BUDGET_TOL = 1e-12


class CffpVariant(enum.Enum):
    PAPER_FAITHFUL = "paper_faithful"
    STANDARD_FP = "standard_fp"

    @classmethod
    def parse(cls, value) -> "CffpVariant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"paperfaithful": "paper_faithful", "standardfp": "standard_fp"}
        return cls(aliases.get(key, key))


class BudgetExhausted(ValueError):
    """One block has no power left once the other block's draw is fixed."""


def _den(scn: Scenario, noise_gain: float) -> float:
    return scn.sigma2_irs * noise_gain + scn.sigma2_user


def update_mu(scn: Scenario, ch: ChannelSet, st: CffpState, variant=CffpVariant.PAPER_FAITHFUL) -> complex:
    """Maximizer of the surrogate over ``mu``, phase-aligned with ``c``."""
    variant = CffpVariant.parse(variant)
    c, noise_gain, _ = link_terms(ch, st.v1, st.theta)
    den = _den(scn, noise_gain)
    if variant is CffpVariant.STANDARD_FP:
        den += abs(c) ** 2
    return complex(math.sqrt(1.0 + st.gamma) * c / den)


def update_gamma(st: CffpState, varpi: float) -> float:
    """Stationary point of ``ln(1+g) - g + 2 sqrt(1+g) varpi`` over ``g >= 0``."""
    del st  # gamma's update only depends on varpi
    if varpi <= 0:
        return 0.0
    return 0.5 * (varpi * varpi + varpi * math.sqrt(varpi * varpi + 4.0))


def varpi_of(ch: ChannelSet, st: CffpState) -> float:
    c, _, _ = link_terms(ch, st.v1, st.theta)
    return float((np.conj(st.mu) * c).real)


def surrogate_value(scn: Scenario, ch: ChannelSet, st: CffpState, variant=CffpVariant.PAPER_FAITHFUL) -> float:
    """Surrogate rate in nats."""
    variant = CffpVariant.parse(variant)
    c, noise_gain, _ = link_terms(ch, st.v1, st.theta)
    den = _den(scn, noise_gain)
    c2 = abs(c) ** 2
    # pen - |c|^2; taken exactly from den in the standard variant
    rest = den if variant is CffpVariant.STANDARD_FP else den - c2
    pen = den + c2 if variant is CffpVariant.STANDARD_FP else den
    g = np.float64(st.gamma)
    mu = np.complex128(st.mu)
    # completing the square in mu:
    #   -g - |mu|^2 pen + 2 sqrt(1+g) Re{mu* c}
    #     = (|c|^2 - g (pen - |c|^2)) / pen - pen |mu - sqrt(1+g) c / pen|^2
    # which avoids cancelling terms of size gamma near the optimal mu
    with np.errstate(over="ignore", invalid="ignore"):
        if mu == 0:
            return float(np.log1p(g) - g)
        val = np.log1p(g) + (c2 - g * rest) / pen - pen * np.abs(mu - np.sqrt(1.0 + g) * c / pen) ** 2
    return float(val)


def combined_channel(ch: ChannelSet, theta) -> np.ndarray:
    """``r`` with ``c = r^H v``."""
    theta = np.asarray(theta, dtype=complex).reshape(-1)
    return ch.g.conj().T @ (theta * ch.f) + ch.h


def _check_budget(value: float, scn: Scenario, what: str) -> float:
    if value < -BUDGET_TOL * scn.p_max:
        raise BudgetExhausted(f"{what} = {value:.6e} W < 0")
    return max(value, 0.0)


def update_v1(scn: Scenario, ch: ChannelSet, st: CffpState, variant=CffpVariant.PAPER_FAITHFUL):
    """Beam update; returns ``(v1, report)``.  ``report`` is None when skipped."""
    variant = CffpVariant.parse(variant)
    theta = np.asarray(st.theta, dtype=complex)
    p_r = _check_budget(
        scn.p_max - scn.sigma2_irs * float(np.vdot(theta, theta).real), scn, "BS budget P_r"
    )
    r = combined_channel(ch, theta)
    k = 2.0 * math.sqrt(1.0 + st.gamma) * st.mu * r
    if p_r == 0.0:
        return np.zeros(ch.m, complex), None
    if not np.any(k):
        return np.asarray(st.v1, dtype=complex), None
    gt = ch.g * np.abs(theta)[:, None]
    H = np.eye(ch.m) + gt.conj().T @ gt
    # both subproblems are invariant to a common positive scaling of the
    # objective; dividing by |mu| sqrt(1+gamma) keeps them well scaled even
    # when gamma is huge
    scale = abs(st.mu) * math.sqrt(1.0 + st.gamma)
    if variant is CffpVariant.PAPER_FAITHFUL:
        return solve_lin_ellipsoid(k / scale, H, p_r)
    A = (abs(st.mu) / math.sqrt(1.0 + st.gamma)) * np.outer(r, r.conj())
    return solve_trust_region(k / (2.0 * scale), A, H, p_r)


def update_theta_cffp(scn: Scenario, ch: ChannelSet, st: CffpState, variant=CffpVariant.PAPER_FAITHFUL):
    """IRS-vector update; returns ``(theta, report)``."""
    variant = CffpVariant.parse(variant)
    v1 = np.asarray(st.v1, dtype=complex)
    if ch.n == 0:
        return np.zeros(0, complex), None
    p_b = _check_budget(scn.p_max - float(np.vdot(v1, v1).real), scn, "IRS budget P_b")
    if p_b == 0.0:
        return np.zeros(ch.n, complex), None
    gv = ch.g @ v1
    a = np.conj(ch.f) * gv
    if st.mu == 0:
        return np.zeros(ch.n, complex), None
    # objective divided by |mu| sqrt(1+gamma), see update_v1
    mu2 = abs(st.mu) / math.sqrt(1.0 + st.gamma)
    q = (np.conj(st.mu) / abs(st.mu)) * a
    a_diag = mu2 * scn.sigma2_irs * np.abs(ch.f) ** 2
    b_diag = np.abs(gv) ** 2 + scn.sigma2_irs
    if variant is CffpVariant.PAPER_FAITHFUL:
        return solve_trust_region(q, a_diag, b_diag, p_b)
    w = np.vdot(ch.h, v1)
    q = q - mu2 * np.conj(w) * a
    A = np.diag(a_diag) + mu2 * np.outer(a, a.conj())
    return solve_trust_region(q, A, np.diag(b_diag), p_b)


def initial_cffp_state(scn: Scenario, ch: ChannelSet) -> CffpState:
    """Half the budget on an MRT beam, half on a co-phased IRS vector."""
    hn = np.linalg.norm(ch.h)
    u = ch.h / hn if hn > 0 else np.eye(ch.m, 1, dtype=complex).ravel()
    v1 = math.sqrt(scn.p_max / 2.0) * u
    if ch.n == 0 or not np.any(np.conj(ch.f) * (ch.g @ u)):
        # no cascaded path along the initial beam: the IRS could only add noise
        return CffpState(math.sqrt(scn.p_max) * u, np.zeros(ch.n, complex))
    t = aligned_phases(ch, v1)
    per_unit = float(np.sum(scn.sigma2_irs + np.abs(ch.g @ v1) ** 2))
    return CffpState(v1, math.sqrt(scn.p_max / 2.0 / per_unit) * t)


@dataclass
class CffpIterate:
    iteration: int
    mu: complex
    gamma: float
    surrogate_value: float
    ar_bits: float
    total_power: float
    block_values: tuple = ()
    reports: list = field(default_factory=list)
    wall_time: float = 0.0


@dataclass
class CffpTrace:
    iterates: list = field(default_factory=list)
    converged: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def ar(self) -> list:
        return [it.ar_bits for it in self.iterates]

    @property
    def surrogate(self) -> list:
        return [it.surrogate_value for it in self.iterates]

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1


def _iterate(scn, ch, st, variant, k, blocks, reports, t0) -> CffpIterate:
    return CffpIterate(
        iteration=k,
        mu=complex(st.mu),
        gamma=float(st.gamma),
        surrogate_value=surrogate_value(scn, ch, st, variant),
        ar_bits=achievable_rate(snr_no_pa(scn, ch, st)),
        total_power=total_power_no_pa(scn, ch, st),
        block_values=tuple(blocks),
        reports=reports,
        wall_time=time.perf_counter() - t0,
    )


def run_max_ar_cffp(
    scn: Scenario,
    ch: ChannelSet,
    init: CffpState | None = None,
    variant=CffpVariant.PAPER_FAITHFUL,
    zeta: float = 1e-3,
    max_iters: int = 200,
):
    """Cycle the ``mu``, ``gamma``, ``v1`` and ``theta`` updates until the rate settles.

    Under ``STANDARD_FP`` the ``gamma`` block is first set to the current SNR,
    which together with the following ``mu`` update is the joint maximizer of
    the surrogate over both auxiliaries.  Returns ``(CffpState, CffpTrace)``.
    """
    ch.check(scn)
    variant = CffpVariant.parse(variant)
    t0 = time.perf_counter()
    st = initial_cffp_state(scn, ch) if init is None else init
    if total_power_no_pa(scn, ch, st) > scn.p_max * (1 + 1e-9):
        raise ValueError("initial state exceeds the power budget")
    trace = CffpTrace(meta={"variant": variant.value, "zeta": zeta, "stopped": None})
    trace.iterates.append(_iterate(scn, ch, st, variant, 0, (), [], t0))

    for k in range(1, max_iters + 1):
        blocks, reports = [], []
        prev = st
        try:
            if variant is CffpVariant.STANDARD_FP:
                st = CffpState(st.v1, st.theta, st.mu, snr_no_pa(scn, ch, st))
            st = CffpState(st.v1, st.theta, update_mu(scn, ch, st, variant), st.gamma)
            blocks.append(surrogate_value(scn, ch, st, variant))
            st = CffpState(st.v1, st.theta, st.mu, update_gamma(st, varpi_of(ch, st)))
            blocks.append(surrogate_value(scn, ch, st, variant))
            if not all(map(math.isfinite, blocks)):
                # the auxiliaries outgrew double precision; keep the last finite iterate
                st = prev
                trace.meta["stopped"] = "auxiliary_overflow"
                break
            v1, rep = update_v1(scn, ch, st, variant)
            if rep is not None:
                reports.append(rep)
            st = CffpState(v1, st.theta, st.mu, st.gamma)
            blocks.append(surrogate_value(scn, ch, st, variant))
            theta, rep = update_theta_cffp(scn, ch, st, variant)
            if rep is not None:
                reports.append(rep)
            st = CffpState(st.v1, theta, st.mu, st.gamma)
            blocks.append(surrogate_value(scn, ch, st, variant))
        except Exception as exc:
            raise type(exc)(f"iteration {k}: {exc}") from exc
        rec = _iterate(scn, ch, st, variant, k, blocks, reports, t0)
        if not math.isfinite(rec.ar_bits):
            raise FloatingPointError(f"non-finite rate at iteration {k}")
        trace.iterates.append(rec)
        if abs(rec.ar_bits - trace.iterates[-2].ar_bits) <= zeta:
            trace.converged = True
            break
    return st, trace
