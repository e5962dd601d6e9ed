"""System model for an active-IRS-assisted single-user MISO downlink.

Conventions
-----------
``theta`` is the IRS reflection vector and the reflection matrix is
``Theta = diag(conj(theta))``.  With this convention

    f^H Theta G v = theta^H a,       a = conj(f) * (G v)
    ||Theta G v||^2 = sum |theta_n|^2 |(G v)_n|^2
    ||f^H Theta||^2 = sum |theta_n|^2 |f_n|^2

so ``Theta`` is never formed as a dense matrix.  All powers are in watts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


class DimensionError(ValueError):
    """An operand's shape does not match the scenario."""

    def __init__(self, operand: str, expected, got):
        super().__init__(f"{operand}: expected shape {expected}, got {got}")
        self.operand = operand
        self.expected = expected
        self.got = got


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * math.log10(watt) + 30.0


@dataclass(frozen=True)
class Scenario:
    """Physical configuration: array sizes, power budget, noise, geometry."""

    m_antennas: int = 2
    n_elements: int = 128
    p_max: float = 1.0
    sigma2_irs: float = 1e-13
    sigma2_user: float = 1e-13
    bs_pos: tuple[float, float, float] = (0.0, 30.0, 0.0)
    irs_pos: tuple[float, float, float] = (50.0, 0.0, 10.0)
    user_pos: tuple[float, float, float] = (25.0, 30.0, 0.0)
    alpha_bi: float = 2.1
    alpha_iu: float = 2.1
    alpha_bu: float = 4.0
    pl0_db: float = -30.0

    def __post_init__(self):
        object.__setattr__(self, "bs_pos", tuple(float(x) for x in self.bs_pos))
        object.__setattr__(self, "irs_pos", tuple(float(x) for x in self.irs_pos))
        object.__setattr__(self, "user_pos", tuple(float(x) for x in self.user_pos))
        if self.m_antennas < 1:
            raise ValueError("m_antennas must be positive")
        if self.n_elements < 0:
            raise ValueError("n_elements must be nonnegative")
        for name in ("p_max", "sigma2_irs", "sigma2_user"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("alpha_bi", "alpha_iu", "alpha_bu"):
            if not getattr(self, name) >= 2:
                raise ValueError(f"{name} must be >= 2")
        pos = [self.bs_pos, self.irs_pos, self.user_pos]
        if not all(len(p) == 3 and all(math.isfinite(x) for x in p) for p in pos):
            raise ValueError("positions must be finite 3-vectors")
        if min(self.d_bi, self.d_iu, self.d_bu) <= 0:
            raise ValueError("node positions must be pairwise distinct")

    @property
    def d_bi(self) -> float:
        return math.dist(self.bs_pos, self.irs_pos)

    @property
    def d_iu(self) -> float:
        return math.dist(self.irs_pos, self.user_pos)

    @property
    def d_bu(self) -> float:
        return math.dist(self.bs_pos, self.user_pos)

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class ChannelSet:
    """One channel realization: ``g`` (N x M), ``f`` (N,), ``h`` (M,)."""

    g: np.ndarray
    f: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=complex)
        f = np.asarray(self.f, dtype=complex).reshape(-1)
        h = np.asarray(self.h, dtype=complex).reshape(-1)
        if g.ndim != 2 or g.shape != (f.size, h.size):
            raise DimensionError("g", (f.size, h.size), g.shape)
        for name, arr in (("g", g), ("f", f), ("h", h)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            arr.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.f.size

    @property
    def m(self) -> int:
        return self.h.size

    def check(self, scn: Scenario) -> None:
        if self.g.shape != (scn.n_elements, scn.m_antennas):
            raise DimensionError("g", (scn.n_elements, scn.m_antennas), self.g.shape)


@dataclass(frozen=True)
class PaState:
    """Iterate of the power-allocation algorithm.

    ``theta = rho * theta_dir``.  ``theta_dir`` is kept even when ``rho == 0``
    so that the beta step can re-inflate the IRS vector.
    """

    beta: float
    v: np.ndarray
    theta_dir: np.ndarray
    rho: float

    @property
    def theta(self) -> np.ndarray:
        return self.rho * self.theta_dir

    @classmethod
    def from_theta(cls, beta, v, theta, theta_dir_fallback=None) -> "PaState":
        theta = np.asarray(theta, dtype=complex)
        rho = float(np.linalg.norm(theta))
        if rho > 0:
            theta_dir = theta / rho
        elif theta_dir_fallback is not None:
            theta_dir = np.asarray(theta_dir_fallback, dtype=complex)
        else:
            theta_dir = np.zeros_like(theta)
        return cls(float(beta), np.asarray(v, dtype=complex), theta_dir, rho)


@dataclass(frozen=True)
class CffpState:
    """Iterate of the closed-form fractional-programming algorithm."""

    v1: np.ndarray
    theta: np.ndarray
    mu: complex = 0j
    gamma: float = 0.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError("gamma must be >= 0")


def _vec(x, size, name):
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.size != size:
        raise DimensionError(name, (size,), x.shape)
    return x


def link_terms(ch: ChannelSet, v, theta):
    """Return ``(c, noise_gain, irs_signal)`` for beam ``v`` and IRS vector ``theta``.

    ``c = (f^H Theta G + h^H) v``, ``noise_gain = ||f^H Theta||^2`` and
    ``irs_signal = ||Theta G v||^2``.
    """
    v = _vec(v, ch.m, "v")
    theta = _vec(theta, ch.n, "theta")
    gv = ch.g @ v
    a = np.conj(ch.f) * gv
    c = np.vdot(theta, a) + np.vdot(ch.h, v)
    t2 = np.abs(theta) ** 2
    noise_gain = float(t2 @ np.abs(ch.f) ** 2)
    irs_signal = float(t2 @ np.abs(gv) ** 2)
    return c, noise_gain, irs_signal


def snr_pa(scn: Scenario, ch: ChannelSet, st: PaState) -> float:
    ch.check(scn)
    c, noise_gain, _ = link_terms(ch, st.v, st.theta)
    return st.beta * scn.p_max * abs(c) ** 2 / (scn.sigma2_irs * noise_gain + scn.sigma2_user)


def achievable_rate(snr: float) -> float:
    """Rate in bits/s/Hz."""
    if snr < 0:
        raise ValueError(f"snr must be >= 0, got {snr}")
    return math.log2(1.0 + snr)


def irs_power_pa(scn: Scenario, ch: ChannelSet, st: PaState) -> float:
    ch.check(scn)
    _, _, irs_signal = link_terms(ch, st.v, st.theta)
    theta = st.theta
    return st.beta * scn.p_max * irs_signal + scn.sigma2_irs * float(np.vdot(theta, theta).real)


def budget_residual_pa(scn: Scenario, ch: ChannelSet, st: PaState) -> float:
    """``(1 - beta) P_max - P_IRS``; the state is feasible iff this is >= 0."""
    return (1.0 - st.beta) * scn.p_max - irs_power_pa(scn, ch, st)


def snr_no_pa(scn: Scenario, ch: ChannelSet, st: CffpState) -> float:
    ch.check(scn)
    c, noise_gain, _ = link_terms(ch, st.v1, st.theta)
    return abs(c) ** 2 / (scn.sigma2_irs * noise_gain + scn.sigma2_user)


def total_power_no_pa(scn: Scenario, ch: ChannelSet, st: CffpState) -> float:
    ch.check(scn)
    _, _, irs_signal = link_terms(ch, st.v1, st.theta)
    v1 = np.asarray(st.v1)
    theta = np.asarray(st.theta)
    return float(np.vdot(v1, v1).real) + irs_signal + scn.sigma2_irs * float(np.vdot(theta, theta).real)


def aligned_phases(ch: ChannelSet, v) -> np.ndarray:
    """Unit-modulus IRS vector that co-phases every cascaded path with the direct link."""
    a = np.conj(ch.f) * (ch.g @ v)
    w = np.vdot(ch.h, v)
    ref = np.exp(-1j * np.angle(w)) if abs(w) > 0 else 1.0
    return np.exp(1j * np.angle(a)) * ref
