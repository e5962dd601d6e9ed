"""Joint PA factor / BS beam / IRS vector design maximizing the user SNR.

Each outer iteration updates, in order,

1. ``beta`` by polynomial regression of ``f(beta)`` (:mod:`airis.pa_beta`),
2. ``v`` by one SCA step on the linearized two-constraint subproblem,
3. ``theta`` by Dinkelbach iterations whose parametric subproblems are
   linearized in the convex numerator term and solved as trust-region problems.

Every block is accepted only if it does not lower the SNR, so the recorded rate
sequence is non-decreasing and every recorded iterate is feasible.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ChannelSet,
    PaState,
    Scenario,
    achievable_rate,
    aligned_phases,
    irs_power_pa,
    snr_pa,
)
from .pa_beta import RegressionConfig, optimize_beta, rho_of_beta
from .qcqp import InfeasibleSubproblem, KktReport, solve_trust_region, solve_two_constraint


class InfeasibleStart(ValueError):
    pass


@dataclass(frozen=True)
class ThetaForms:
    """Quadratic forms of the SNR in ``theta`` for fixed ``beta`` and ``v``.

    ``D = a a^H`` is kept as its rank-one factor; ``E`` and ``F`` are diagonal
    and stored as vectors.  ``direct = |h^H v|^2`` is the constant term of the
    SNR numerator.
    """

    a: np.ndarray
    t: np.ndarray
    e: np.ndarray
    f: np.ndarray
    direct: float

    def D(self) -> np.ndarray:
        return np.outer(self.a, self.a.conj())

    def E(self) -> np.ndarray:
        return np.diag(self.e)

    def F(self) -> np.ndarray:
        return np.diag(self.f)

    def numerator(self, theta) -> float:
        """``theta^H D theta + 2 Re{t^H theta}`` (without the direct term)."""
        at = np.vdot(self.a, theta)
        return float(abs(at) ** 2 + 2.0 * np.vdot(self.t, theta).real)

    def quad_e(self, theta) -> float:
        return float(self.e @ np.abs(theta) ** 2)

    def quad_f(self, theta) -> float:
        return float(self.f @ np.abs(theta) ** 2)


def build_theta_forms(scn: Scenario, ch: ChannelSet, beta: float, v) -> ThetaForms:
    ch.check(scn)
    v = np.asarray(v, dtype=complex).reshape(-1)
    gv = ch.g @ v
    a = np.conj(ch.f) * gv
    w = np.vdot(ch.h, v)
    return ThetaForms(
        a=a,
        t=np.conj(w) * a,
        e=scn.sigma2_irs * np.abs(ch.f) ** 2,
        f=beta * scn.p_max * np.abs(gv) ** 2 + scn.sigma2_irs,
        direct=float(abs(w) ** 2),
    )


@dataclass(frozen=True)
class DinkelbachState:
    theta: np.ndarray
    eta: float
    f_of_eta: float
    iteration: int
    report: KktReport | None = None


def dinkelbach_theta(
    scn: Scenario,
    ch: ChannelSet,
    beta: float,
    v,
    theta_init,
    xi: float = 1e-6,
    max_iters: int = 50,
    include_direct: bool = True,
):
    """Maximize the SNR over ``theta`` under the IRS budget ``(1 - beta) P_max``.

    ``eta`` is the current numerator/denominator ratio (including the direct
    term ``|h^H v|^2`` unless ``include_direct`` is False).  ``f_of_eta`` is the
    parametric objective ``num - eta den`` at the new point divided by
    ``eta den``, i.e. the relative gain of the ratio over ``eta``; iteration
    stops once it is at most ``xi``.  Returns ``(theta, history)``.
    """
    forms = build_theta_forms(scn, ch, beta, v)
    theta = np.asarray(theta_init, dtype=complex).reshape(-1).copy()
    budget = (1.0 - beta) * scn.p_max
    if forms.quad_f(theta) > budget * (1 + 1e-9) + 1e-300:
        raise InfeasibleStart(
            f"theta_init uses {forms.quad_f(theta):.6e} W of a {budget:.6e} W IRS budget"
        )
    if budget <= 0 or ch.n == 0 or beta <= 0:
        return (np.zeros_like(theta) if budget <= 0 else theta), []
    const = forms.direct if include_direct else 0.0
    sn = scn.sigma2_user

    def ratio(th):
        return (forms.numerator(th) + const) / (forms.quad_e(th) + sn)

    history: list[DinkelbachState] = []
    for i in range(1, max_iters + 1):
        eta = ratio(theta)
        q = forms.a * np.vdot(forms.a, theta) + forms.t
        x, report = solve_trust_region(q, max(eta, 0.0) * forms.e, forms.f, budget)
        den = forms.quad_e(x) + sn
        f_new = forms.numerator(x) + const - eta * den
        if eta > 0:
            f_new /= eta * den
        if f_new >= 0:
            theta = x
        history.append(DinkelbachState(theta.copy(), eta, f_new, i, report))
        if f_new <= xi:
            break
    return theta, history


@dataclass
class VUpdate:
    v: np.ndarray
    report: KktReport | None
    status: str  # "ok", "no_budget", "infeasible", "degenerate"


def update_v(scn: Scenario, ch: ChannelSet, beta: float, theta, v_prev) -> VUpdate:
    """One SCA step for the BS beam, normalized back to unit norm."""
    ch.check(scn)
    theta = np.asarray(theta, dtype=complex).reshape(-1)
    v_prev = np.asarray(v_prev, dtype=complex).reshape(-1)
    if beta <= 0:
        return VUpdate(v_prev, None, "no_budget")
    p_prime = ((1.0 - beta) * scn.p_max - scn.sigma2_irs * float(np.vdot(theta, theta).real)) / (
        beta * scn.p_max
    )
    if p_prime <= 0:
        return VUpdate(v_prev, None, "no_budget")
    r = ch.g.conj().T @ (theta * ch.f) + ch.h  # (f^H Theta G + h^H)^H
    b = r * np.vdot(r, v_prev)
    if not np.any(b):
        return VUpdate(v_prev, None, "degenerate")
    gt = ch.g * np.abs(theta)[:, None]
    C = gt.conj().T @ gt
    try:
        vbar, report = solve_two_constraint(b, C, v_prev, p_prime)
    except InfeasibleSubproblem as exc:
        return VUpdate(v_prev, exc.report, "infeasible")
    nrm = np.linalg.norm(vbar)
    if nrm == 0:
        return VUpdate(v_prev, report, "degenerate")
    return VUpdate(vbar / nrm, report, "ok")


@dataclass
class PaIterate:
    iteration: int
    beta: float
    snr: float
    ar_bits: float
    p_bs: float
    p_irs: float
    inner_iters: int
    reports: list
    wall_time: float
    beta_accepted: bool = True
    v_status: str = "ok"
    theta_status: str = "ok"


@dataclass
class SnrPaTrace:
    iterates: list = field(default_factory=list)
    dinkelbach: list = field(default_factory=list)
    converged: bool = False
    fit_results: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def ar(self) -> list:
        return [it.ar_bits for it in self.iterates]

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1


def initial_pa_state(scn: Scenario, ch: ChannelSet, beta: float = 0.5) -> PaState:
    """MRT towards the direct link, co-phased IRS, budget-saturating amplitude."""
    hn = np.linalg.norm(ch.h)
    v = ch.h / hn if hn > 0 else np.eye(ch.m, 1, dtype=complex).ravel()
    if ch.n == 0:
        return PaState(beta, v, np.zeros(0, complex), 0.0)
    theta_dir = aligned_phases(ch, v) / math.sqrt(ch.n)
    return PaState(beta, v, theta_dir, rho_of_beta(scn, ch, theta_dir, v, beta))


def total_power_pa(scn: Scenario, ch: ChannelSet, st: PaState) -> float:
    return st.beta * scn.p_max + irs_power_pa(scn, ch, st)


def _record(scn, ch, st, k, inner, reports, t0, **flags) -> PaIterate:
    snr = snr_pa(scn, ch, st)
    return PaIterate(
        iteration=k,
        beta=st.beta,
        snr=snr,
        ar_bits=achievable_rate(snr),
        p_bs=st.beta * scn.p_max,
        p_irs=irs_power_pa(scn, ch, st),
        inner_iters=inner,
        reports=reports,
        wall_time=time.perf_counter() - t0,
        **flags,
    )


def run_max_snr_pa(
    scn: Scenario,
    ch: ChannelSet,
    init: PaState | None = None,
    eps: float = 1e-3,
    max_iters: int = 100,
    xi: float = 1e-6,
    max_inner: int = 50,
    reg: RegressionConfig = RegressionConfig(),
    fixed_beta: float | None = None,
):
    """Alternate the beta, v and theta updates until the rate settles.

    With ``fixed_beta`` the beta update is skipped (fixed-PA baselines).
    Returns ``(PaState, SnrPaTrace)``.
    """
    ch.check(scn)
    t0 = time.perf_counter()
    if init is None:
        init = initial_pa_state(scn, ch, 0.5 if fixed_beta is None else fixed_beta)
    st = init
    if total_power_pa(scn, ch, st) > scn.p_max * (1 + 1e-9):
        raise InfeasibleStart("initial state exceeds the power budget")
    trace = SnrPaTrace(meta={"fixed_beta": fixed_beta, "eps": eps, "xi": xi})
    trace.iterates.append(_record(scn, ch, st, 0, 0, [], t0))
    snr = trace.iterates[0].snr

    for k in range(1, max_iters + 1):
        reports = []
        beta_ok = False
        if fixed_beta is None and ch.n > 0:
            fit = optimize_beta(scn, ch, st.theta_dir, st.v, st.beta, reg)
            trace.fit_results.append(fit)
            cand = PaState(
                fit.beta_opt, st.v, st.theta_dir, rho_of_beta(scn, ch, st.theta_dir, st.v, fit.beta_opt)
            )
            cand_snr = snr_pa(scn, ch, cand)
            if cand_snr >= snr:
                st, snr, beta_ok = cand, cand_snr, True
        elif fixed_beta is None:
            cand = PaState(1.0, st.v, st.theta_dir, 0.0)
            if snr_pa(scn, ch, cand) >= snr:
                st, snr, beta_ok = cand, snr_pa(scn, ch, cand), True

        upd = update_v(scn, ch, st.beta, st.theta, st.v)
        if upd.report is not None:
            reports.append(upd.report)
        v_status = upd.status
        if upd.status == "ok":
            cand = PaState(st.beta, upd.v, st.theta_dir, st.rho)
            cand_snr = snr_pa(scn, ch, cand)
            if cand_snr >= snr and total_power_pa(scn, ch, cand) <= scn.p_max * (1 + 1e-9):
                st, snr = cand, cand_snr
            else:
                v_status = "rejected"

        theta, hist = dinkelbach_theta(scn, ch, st.beta, st.v, st.theta, xi, max_inner)
        trace.dinkelbach.append(hist)
        reports.extend(h.report for h in hist if h.report is not None)
        theta_status = "ok"
        cand = PaState.from_theta(st.beta, st.v, theta, st.theta_dir)
        cand_snr = snr_pa(scn, ch, cand)
        if cand_snr >= snr and total_power_pa(scn, ch, cand) <= scn.p_max * (1 + 1e-9):
            st, snr = cand, cand_snr
        else:
            theta_status = "rejected"

        rec = _record(
            scn, ch, st, k, len(hist), reports, t0,
            beta_accepted=beta_ok, v_status=v_status, theta_status=theta_status,
        )
        if not math.isfinite(rec.ar_bits):
            raise FloatingPointError(f"non-finite rate at iteration {k}")
        trace.iterates.append(rec)
        if abs(rec.ar_bits - trace.iterates[-2].ar_bits) <= eps:
            trace.converged = True
            break
    return st, trace
