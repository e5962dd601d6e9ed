"""Small dense complex QCQP solvers used by the beamforming updates.

Three problem shapes show up:

* ``max Re{k^H x}  s.t.  x^H H x <= P``                    (closed form)
* ``max 2 Re{q^H x} - x^H A x  s.t.  x^H B x <= P``        (multiplier bisection)
* ``max Re{b^H v}  s.t.  v^H v <= 1,
  v^H C v <= p' (2 Re{v_ref^H v} - v_ref^H v_ref)``         (nested dual bisection)

Every solver returns ``(x, KktReport)``.  Residuals in the report are relative:
stationarity is divided by the norm of the linear term and constraint terms by
the constraint level, so the same thresholds apply whatever the physical units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-9
    kkt: float = 1e-8
    bisection: float = 1e-10
    max_bisection: int = 400


TOL = Tolerances()


@dataclass
class KktReport:
    lambdas: tuple
    stationarity_residual: float
    constraint_violation: float
    complementarity_residual: float
    iterations: int = 0
    degenerate: bool = False
    infeasible: bool = False
    notes: dict = field(default_factory=dict)

    def ok(self, tol: Tolerances = TOL) -> bool:
        return (
            self.stationarity_residual <= tol.kkt
            and self.constraint_violation <= tol.feas
            and self.complementarity_residual <= tol.kkt
        )


class SubproblemError(RuntimeError):
    """A subproblem could not be solved; ``report`` carries diagnostics."""

    def __init__(self, msg, report: KktReport | None = None):
        super().__init__(msg)
        self.report = report


class InfeasibleSubproblem(SubproblemError):
    pass


def _cholesky(mat: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with one diagonal-jitter retry."""
    mat = 0.5 * (mat + mat.conj().T)
    try:
        return linalg.cholesky(mat, lower=True)
    except linalg.LinAlgError:
        n = mat.shape[0]
        jitter = 1e-12 * abs(np.trace(mat).real) / max(n, 1)
        try:
            return linalg.cholesky(mat + jitter * np.eye(n), lower=True)
        except linalg.LinAlgError as exc:
            raise SubproblemError("matrix is not positive definite") from exc


def _check_pd(mat: np.ndarray, name: str) -> None:
    w = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    if w.size and not w[0] > 1e-12 * max(abs(w[-1]), np.finfo(float).tiny):
        raise SubproblemError(f"{name} is singular or indefinite (eigenvalues {w[0]:.3e}..{w[-1]:.3e})")


def solve_lin_ellipsoid(k, H, P: float, tol: Tolerances = TOL):
    """Maximize ``Re{k^H x}`` subject to ``x^H H x <= P`` with ``H`` positive definite.

    The maximizer is ``sqrt(P / k^H H^-1 k) H^-1 k`` and the optimal value is
    ``sqrt(P k^H H^-1 k)``.  ``k == 0`` returns ``x = 0`` flagged degenerate.
    """
    k = np.asarray(k, dtype=complex).reshape(-1)
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    if H.shape != (k.size, k.size):
        raise ValueError(f"H must be {k.size}x{k.size}, got {H.shape}")
    if not P > 0:
        raise ValueError("P must be > 0")
    _check_pd(H, "H")
    knorm = np.linalg.norm(k)
    if knorm == 0:
        return np.zeros_like(k), KktReport((0.0,), 0.0, 0.0, 0.0, degenerate=True)
    L = _cholesky(H)
    y = linalg.cho_solve((L, True), k)
    s = float(np.vdot(k, y).real)
    x = math.sqrt(P / s) * y
    lam = math.sqrt(s) / (2.0 * math.sqrt(P))
    quad = float(np.vdot(x, H @ x).real)
    report = KktReport(
        lambdas=(lam,),
        stationarity_residual=float(np.linalg.norm(k / 2 - lam * (H @ x)) / (knorm / 2)),
        constraint_violation=max(0.0, quad - P) / P,
        complementarity_residual=abs(quad - P) / P,
        iterations=1,
    )
    return x, report


def lin_ellipsoid_value(k, H, P: float) -> float:
    """Optimal value ``sqrt(P k^H H^-1 k)``."""
    k = np.asarray(k, dtype=complex).reshape(-1)
    if not np.any(k):
        return 0.0
    y = np.linalg.solve(H, k)
    return math.sqrt(P * float(np.vdot(k, y).real))


def tr_objective(q, A, x) -> float:
    """``2 Re{q^H x} - x^H A x`` with ``A`` dense or given by its diagonal."""
    q = np.asarray(q, dtype=complex).reshape(-1)
    x = np.asarray(x, dtype=complex).reshape(-1)
    A = np.asarray(A)
    ax = A * x if A.ndim == 1 else A @ x
    return float(2.0 * np.vdot(q, x).real - np.vdot(x, ax).real)


class _Whitened:
    """Trust-region data in coordinates where ``B = I`` and ``A`` is diagonal.

    ``x(lam) = back(qt / (ev + lam))`` and ``x^H B x = ||qt / (ev + lam)||^2``.
    """

    def __init__(self, q, A, B):
        q = np.asarray(q, dtype=complex).reshape(-1)
        A = np.asarray(A)
        B = np.asarray(B)
        n = q.size
        self.diagonal = A.ndim == 1 and B.ndim == 1
        if self.diagonal:
            a = np.asarray(A, dtype=float)
            b = np.asarray(B, dtype=float)
            if a.shape != (n,) or b.shape != (n,):
                raise ValueError("diagonal A, B must match q")
            if np.any(b <= 0):
                raise SubproblemError("B must be positive definite")
            scale = max(float(np.max(np.abs(a))) if n else 0.0, np.finfo(float).tiny)
            if n and a.min() < -1e-10 * scale:
                raise SubproblemError("A is not positive semidefinite")
            self.sqrt_b = np.sqrt(b)
            self.ev = np.clip(a, 0.0, None) / b
            self.qt = q / self.sqrt_b
        else:
            A = (np.diag(A) if A.ndim == 1 else np.atleast_2d(A)).astype(complex)
            B = (np.diag(B) if B.ndim == 1 else np.atleast_2d(B)).astype(complex)
            if A.shape != (n, n) or B.shape != (n, n):
                raise ValueError("A, B must be n x n")
            self.A = 0.5 * (A + A.conj().T)
            self.B = 0.5 * (B + B.conj().T)
            L = _cholesky(self.B)
            Li_A = linalg.solve_triangular(L, self.A, lower=True)
            At = linalg.solve_triangular(L, Li_A.conj().T, lower=True).conj().T
            ev, U = np.linalg.eigh(0.5 * (At + At.conj().T))
            scale = max(float(np.max(np.abs(ev))) if n else 0.0, np.finfo(float).tiny)
            if n and ev[0] < -1e-10 * scale:
                raise SubproblemError(f"A is not positive semidefinite (min eig {ev[0]:.3e})")
            self.L = L
            self.U = U
            self.ev = np.clip(ev, 0.0, None)
            self.qt = U.conj().T @ linalg.solve_triangular(L, q, lower=True)

    def y(self, lam: float) -> np.ndarray:
        den = self.ev + lam
        out = np.zeros_like(self.qt)
        nz = den > 0
        out[nz] = self.qt[nz] / den[nz]
        return out

    def back(self, y: np.ndarray) -> np.ndarray:
        if self.diagonal:
            return y / self.sqrt_b
        return linalg.solve_triangular(self.L.conj().T, self.U @ y, lower=False)

    def apply_a(self, x):
        return (self.ev * self.sqrt_b**2) * x if self.diagonal else self.A @ x

    def apply_b(self, x):
        return self.sqrt_b**2 * x if self.diagonal else self.B @ x


def _bisect_norm(ev, qt, P, tol: Tolerances):
    """Find ``lam >= 0`` with ``||qt / (ev + lam)||^2 = P`` (approached from below).

    Returns ``(lam, iterations)``.  The bracket comes from bounding every
    denominator by the extreme eigenvalues.
    """
    qn = float(np.linalg.norm(qt))
    root = qn / math.sqrt(P)
    lo = max(0.0, root - float(ev.max()))
    hi = max(root - float(ev.min()), lo)

    def phi(lam):
        return float(np.sum(np.abs(qt) ** 2 / (ev + lam) ** 2)) - P

    if phi(hi) > 0:
        # roundoff at the analytic bound; widen geometrically
        step = max(hi, np.finfo(float).tiny)
        while phi(hi) > 0:
            hi += step
            step *= 2
            if hi > 1e300:
                raise SubproblemError("multiplier search diverged")
    it = 0
    while it < tol.max_bisection:
        it += 1
        if phi(hi) >= -tol.bisection * P:
            break
        mid = math.sqrt(lo * hi) if lo > 0 and hi > 4 * lo else 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if phi(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi, it


def solve_trust_region(q, A, B, P: float, tol: Tolerances = TOL):
    """Maximize ``2 Re{q^H x} - x^H A x`` subject to ``x^H B x <= P``.

    ``A`` must be Hermitian PSD and ``B`` Hermitian PD.  Passing both as 1-D
    arrays selects the diagonal fast path (O(N) per multiplier trial).  If the
    unconstrained maximizer ``A^+ q`` exists and is feasible it is returned with
    multiplier 0; otherwise ``lam > 0`` is bisected on
    ``x(lam)^H B x(lam) = P`` with ``x(lam) = (A + lam B)^-1 q``.
    """
    q = np.asarray(q, dtype=complex).reshape(-1)
    if not P > 0:
        raise ValueError("P must be > 0")
    w = _Whitened(q, A, B)
    qn = float(np.linalg.norm(w.qt))
    if qn == 0.0:
        x = np.zeros_like(q)
        return x, KktReport((0.0,), 0.0, 0.0, 0.0, degenerate=True)

    ev_scale = float(w.ev.max()) if w.ev.size else 0.0
    null = w.ev <= 1e-14 * max(ev_scale, np.finfo(float).tiny)
    lam, iters = 0.0, 0
    interior = not np.any(np.abs(w.qt[null]) > 1e-14 * qn)
    if interior:
        y0 = w.y(0.0)
        interior = float(np.vdot(y0, y0).real) <= P
    if not interior:
        lam, iters = _bisect_norm(w.ev, w.qt, P, tol)
    y = w.y(lam)
    x = w.back(y)
    quad = float(np.vdot(x, w.apply_b(x)).real)
    grad = w.apply_a(x) + lam * w.apply_b(x) - q
    report = KktReport(
        lambdas=(lam,),
        stationarity_residual=float(np.linalg.norm(grad)) / float(np.linalg.norm(q)),
        constraint_violation=max(0.0, quad - P) / P,
        complementarity_residual=(abs(quad - P) / P) if lam > 0 else 0.0,
        iterations=iters,
    )
    return x, report


def _min_ball_norm(ev, ut):
    """``lam1 >= 0`` for which ``||ut / (lam1 + ev)|| <= 1`` is tight, or 0."""
    un = float(np.linalg.norm(ut))
    if un == 0.0:
        return 0.0
    null = ev <= 1e-14 * max(float(ev.max()), np.finfo(float).tiny)
    if not np.any(np.abs(ut[null]) > 1e-14 * un):
        y = np.zeros_like(ut)
        y[~null] = ut[~null] / ev[~null]
        if float(np.vdot(y, y).real) <= 1.0:
            return 0.0
    lam, _ = _bisect_norm(ev, ut, 1.0, TOL)
    return lam


def solve_two_constraint(b, C, v_ref, p_prime: float, tol: Tolerances = TOL):
    """Solve the linearized beamforming subproblem.

    maximize ``Re{b^H v}`` subject to ``v^H v <= 1`` and
    ``v^H C v <= p' (2 Re{v_ref^H v} - v_ref^H v_ref)``.

    The dual is minimized exactly coordinate-wise: for each trial ``lam2`` the
    ball multiplier ``lam1`` is bisected in closed form, and ``lam2`` is bisected
    on the sign of the second constraint (the derivative of the partial dual).
    Residuals are reported for the problem rescaled to ``||b|| = 1`` and a unit
    second-constraint scale.  Raises :class:`InfeasibleSubproblem` when the
    linearized feasible set is empty.
    """
    b = np.asarray(b, dtype=complex).reshape(-1)
    v_ref = np.asarray(v_ref, dtype=complex).reshape(-1)
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    m = b.size
    if C.shape != (m, m) or v_ref.size != m:
        raise ValueError("dimension mismatch in two-constraint subproblem")
    C = 0.5 * (C + C.conj().T)
    bn = float(np.linalg.norm(b))
    ev, U = np.linalg.eigh(C)
    if m and ev[0] < -1e-10 * max(abs(ev[-1]), np.finfo(float).tiny):
        raise SubproblemError("C is not positive semidefinite")
    ev = np.clip(ev, 0.0, None)
    s = max(float(ev[-1]) if m else 0.0, abs(p_prime))
    if s == 0.0:
        s = 1.0
    ev_n = ev / s
    p_n = p_prime / s
    bt = U.conj().T @ (b / bn if bn > 0 else b)
    rt = U.conj().T @ v_ref
    rr = float(np.vdot(v_ref, v_ref).real)

    def point(lam2):
        ut = 0.5 * bt + lam2 * p_n * rt
        d = lam2 * ev_n
        lam1 = _min_ball_norm(d, ut)
        den = lam1 + d
        y = np.zeros_like(ut)
        nz = den > 0
        y[nz] = ut[nz] / den[nz]
        return lam1, y

    def g2(y):
        return float(np.sum(ev_n * np.abs(y) ** 2)) - p_n * (2.0 * float(np.vdot(rt, y).real) - rr)

    if bn == 0.0:
        if g2(rt) <= tol.feas and rr <= 1.0 + tol.feas:
            return v_ref.copy(), KktReport((0.0, 0.0), 0.0, 0.0, 0.0, degenerate=True)
        raise InfeasibleSubproblem("zero objective and infeasible reference point")

    iters = 0
    lam2 = 0.0
    lam1, y = point(0.0)
    if g2(y) > 0:
        lo, hi = 0.0, 1.0
        lam1_hi, y_hi = point(hi)
        while g2(y_hi) > 0:
            iters += 1
            lo, hi = hi, 2.0 * hi
            if hi > 1e18:
                raise InfeasibleSubproblem(
                    "linearized constraint cannot be met inside the unit ball",
                    KktReport((lam1_hi, hi), float("nan"), g2(y_hi), float("nan"), iters, infeasible=True),
                )
            lam1_hi, y_hi = point(hi)
        while iters < tol.max_bisection:
            iters += 1
            if g2(y_hi) >= -tol.bisection:
                break
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            lam1_m, y_m = point(mid)
            if g2(y_m) > 0:
                lo = mid
            else:
                hi, lam1_hi, y_hi = mid, lam1_m, y_m
        lam2, lam1, y = hi, lam1_hi, y_hi

    v = U @ y
    # normalized problem residuals
    cv = U @ (ev_n * y)
    stat = 0.5 * (b / bn) - lam1 * v - lam2 * (cv - p_n * v_ref)
    ball = float(np.vdot(v, v).real) - 1.0
    c2 = g2(y)
    report = KktReport(
        lambdas=(lam1 * bn, lam2 * bn / s),
        stationarity_residual=float(np.linalg.norm(stat)) / 0.5,
        constraint_violation=max(0.0, ball, c2),
        complementarity_residual=(abs(ball) if lam1 > 0 else 0.0) + (abs(c2) if lam2 > 0 else 0.0),
        iterations=iters,
    )
    return v, report
