"""Comparison schemes: fixed power split, passive IRS, random phases, no IRS."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import make_rng
from .max_snr_pa import run_max_snr_pa
from .model import ChannelSet, PaState, Scenario, achievable_rate, snr_pa
from .pa_beta import RegressionConfig, optimize_beta, rho_of_beta

PHASE_STREAM = 1


@dataclass
class BaselineTrace:
    """Per-round rates of a closed-form baseline (bits/s/Hz)."""

    ar: list = field(default_factory=list)
    p_bs: float = 0.0
    p_irs: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return max(len(self.ar) - 1, 0)

    @property
    def converged(self) -> bool:
        return True


def run_fixed_beta(scn: Scenario, ch: ChannelSet, beta_fixed: float, eps: float = 1e-3, max_iters: int = 100, **kw):
    """Joint beam/IRS design with the power split pinned at ``beta_fixed``."""
    if not 0.0 < beta_fixed < 1.0:
        raise ValueError(f"beta_fixed must be in (0, 1), got {beta_fixed}")
    return run_max_snr_pa(scn, ch, eps=eps, max_iters=max_iters, fixed_beta=beta_fixed, **kw)


def _mrt(r: np.ndarray, m: int) -> np.ndarray:
    nrm = np.linalg.norm(r)
    return r / nrm if nrm > 0 else np.eye(m, 1, dtype=complex).ravel()


def passive_gain(ch: ChannelSet, theta, v) -> float:
    """``|r^H v|`` for the combined channel of IRS vector ``theta``."""
    theta = np.asarray(theta, dtype=complex)
    r = ch.g.conj().T @ (theta * ch.f) + ch.h
    return float(abs(np.vdot(r, v)))


def run_passive_irs(scn: Scenario, ch: ChannelSet, iters: int = 3):
    """Unit-modulus reflection with alternating MRT and phase alignment.

    Returns ``(PaState, BaselineTrace)``; the state carries ``beta = 1`` and
    ``rho = sqrt(N)`` so that ``theta`` has unit-modulus entries.  The rate uses
    no IRS noise since a passive surface does not amplify.
    """
    ch.check(scn)
    n = ch.n
    theta = np.ones(n, complex)
    v = _mrt(ch.h, ch.m)
    trace = BaselineTrace(p_bs=scn.p_max, p_irs=0.0, meta={"iters": iters})
    gains = [passive_gain(ch, theta, v)]
    for _ in range(iters):
        v = _mrt(ch.g.conj().T @ (theta * ch.f) + ch.h, ch.m)
        a = np.conj(ch.f) * (ch.g @ v)
        w = np.vdot(ch.h, v)
        ref = np.exp(-1j * np.angle(w)) if abs(w) > 0 else 1.0
        theta = np.exp(1j * np.angle(a)) * ref
        gains.append(passive_gain(ch, theta, v))
    trace.meta["gains"] = gains
    trace.ar = [achievable_rate(scn.p_max * g * g / scn.sigma2_user) for g in gains]
    rho = math.sqrt(n)
    st = PaState(1.0, v, theta / rho if n else theta, rho if n else 0.0)
    return st, trace


def random_phases(n: int, seed: int) -> np.ndarray:
    """Unit-norm vector of i.i.d. uniform phases."""
    rng = make_rng(seed, stream=PHASE_STREAM)
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    return np.exp(1j * phi) / math.sqrt(n) if n else np.zeros(0, complex)


def run_random_phase(
    scn: Scenario, ch: ChannelSet, seed: int, rounds: int = 3, reg: RegressionConfig = RegressionConfig()
):
    """Active IRS with random phases; only the power split and the beam are optimized.

    Each round refits ``beta`` for the current beam and then re-aims the beam
    by MRT to the combined channel at the resulting amplitude.  A round is kept
    only if it does not lower the SNR.
    """
    ch.check(scn)
    theta_dir = random_phases(ch.n, seed)
    v = _mrt(ch.h, ch.m)
    beta = 0.5
    st = PaState(beta, v, theta_dir, rho_of_beta(scn, ch, theta_dir, v, beta))
    snr = snr_pa(scn, ch, st)
    trace = BaselineTrace(meta={"seed": seed, "interpretation": "active_random_phase"})
    trace.ar.append(achievable_rate(snr))
    for _ in range(rounds):
        if ch.n:
            beta = optimize_beta(scn, ch, theta_dir, st.v, st.beta, reg).beta_opt
        else:
            beta = 1.0
        rho = rho_of_beta(scn, ch, theta_dir, st.v, beta)
        v = _mrt(ch.g.conj().T @ (rho * theta_dir * ch.f) + ch.h, ch.m)
        # the beam changes the IRS draw, so re-solve the amplitude for it
        cand = PaState(beta, v, theta_dir, rho_of_beta(scn, ch, theta_dir, v, beta))
        cand_snr = snr_pa(scn, ch, cand)
        if cand_snr >= snr:
            st, snr = cand, cand_snr
        trace.ar.append(achievable_rate(snr))
    trace.p_bs = st.beta * scn.p_max
    trace.p_irs = (1.0 - st.beta) * scn.p_max if ch.n else 0.0
    return st, trace


def run_no_irs(scn: Scenario, ch: ChannelSet):
    """MRT over the direct link at full power."""
    ch.check(scn)
    hn = float(np.linalg.norm(ch.h))
    v = _mrt(ch.h, ch.m)
    st = PaState(1.0, v, np.zeros(ch.n, complex), 0.0)
    trace = BaselineTrace(ar=[achievable_rate(scn.p_max * hn * hn / scn.sigma2_user)], p_bs=scn.p_max)
    return st, trace
