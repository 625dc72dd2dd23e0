"""Deterministic Krylov solves for real symmetric operators under complex shifts.

Matrices are scipy CSR (row offsets, column indices, real values).  Solves
target systems of the form (I - sigma*M) x = b with M symmetric negative
semidefinite and Re(sigma) > 0: plain conjugate gradients when sigma is
real (the operator is then SPD) and conjugate-orthogonal CG when sigma is
complex (complex symmetric), with a stabilized bi-conjugate fallback on
breakdown.  Every solve is certified by recomputing the true residual; the
accepted tolerance is the requested one or the rounding-level floor
64*eps*(|||A|||*||x|| + ||b||), whichever is larger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import BreakdownError, ConfigurationError, SolverError

DEFAULT_TOL = 1e-14
_EPS = np.finfo(float).eps
_FLOOR_FACTOR = 64.0
_PIVOT_TOL = 1e-30
_MAX_ROUNDS = 8


@dataclass
class SolveStats:
    """Cumulative counters exposed to the timing harness."""

    resolvent_solves: int = 0
    extension_solves: int = 0
    stage_solves: int = 0
    iterations: int = 0
    f_evals: int = 0
    g_evals: int = 0
    gprime_evals: int = 0
    fallbacks: int = 0

    def snapshot(self):
        return SolveStats(**vars(self))

    def delta(self, earlier):
        out = SolveStats()
        for k, v in vars(self).items():
            setattr(out, k, v - getattr(earlier, k))
        return out

    def as_dict(self):
        return dict(vars(self))


def sparse_apply(M, x):
    """Sparse matrix-vector product with scipy's deterministic row-major sum."""
    if M.shape[1] != len(x):
        raise ConfigurationError("dimension mismatch: matrix %s vs vector %d" % (M.shape, len(x)))
    return M @ x


def one_norm(M):
    """Maximum absolute column sum of a sparse matrix."""
    return float(np.max(np.abs(M).sum(axis=0)))


def _certified(matvec, b, tol, max_iter, op_norm_1, engine, stats):
    bnorm = float(np.linalg.norm(b))
    n = len(b)
    if bnorm == 0.0:
        return np.zeros(n, dtype=b.dtype)
    target = tol * bnorm
    x = np.zeros(n, dtype=b.dtype)
    r = b.copy()
    used = 0
    best = math.inf
    for _ in range(_MAX_ROUNDS):
        x, r, it = engine(matvec, x, r, 0.25 * target, max_iter - used)
        used += it
        r_true = b - matvec(x)
        res = float(np.linalg.norm(r_true))
        floor = _FLOOR_FACTOR * _EPS * (op_norm_1 * float(np.linalg.norm(x)) + bnorm)
        if stats is not None:
            stats.iterations += it
        if res <= max(target, floor):
            if not np.all(np.isfinite(x)):
                raise SolverError("solver produced non-finite entries", residual=res, iterations=used)
            return x
        if res >= 0.9 * best and used > 0:
            break  # stagnated above both the tolerance and the floor estimate
        best = min(best, res)
        if used >= max_iter:
            break
        r = r_true
    raise SolverError(
        "no convergence to %.2e after %d iterations (residual %.2e)" % (tol, used, res),
        residual=res, iterations=used)


def _cg_sweep(matvec, x, r, rec_target, budget):
    p = r.copy()
    rho = float(np.real(np.vdot(r, r)))
    it = 0
    while math.sqrt(rho) > rec_target and it < budget:
        q = matvec(p)
        denom = float(np.real(np.vdot(p, q)))
        if denom <= 0.0:
            raise SolverError("operator is not positive definite (p'Ap = %g)" % denom)
        alpha = rho / denom
        x = x + alpha * p
        r = r - alpha * q
        rho_next = float(np.real(np.vdot(r, r)))
        p = r + (rho_next / rho) * p
        rho = rho_next
        it += 1
    return x, r, it


def _cocg_sweep(matvec, x, r, rec_target, budget):
    p = r.copy()
    rho = complex(np.dot(r, r))
    it = 0
    while float(np.linalg.norm(r)) > rec_target and it < budget:
        q = matvec(p)
        denom = complex(np.dot(p, q))
        scale = float(np.linalg.norm(p)) * float(np.linalg.norm(q))
        if abs(denom) <= _PIVOT_TOL * max(scale, 1e-300):
            raise BreakdownError("conjugate-orthogonal pivot vanished")
        alpha = rho / denom
        x = x + alpha * p
        r = r - alpha * q
        rho_next = complex(np.dot(r, r))
        if abs(rho) <= _PIVOT_TOL * max(float(np.linalg.norm(r)) ** 2, 1e-300):
            raise BreakdownError("conjugate-orthogonal rho vanished")
        p = r + (rho_next / rho) * p
        rho = rho_next
        it += 1
    return x, r, it


def _bicgstab_sweep(matvec, x, r, rec_target, budget):
    r0 = r.copy()
    rho = alpha = omega = 1.0 + 0.0j
    v = np.zeros_like(r)
    p = np.zeros_like(r)
    it = 0
    while float(np.linalg.norm(r)) > rec_target and it < budget:
        rho_next = complex(np.vdot(r0, r))
        if abs(rho_next) <= _PIVOT_TOL or abs(omega) <= _PIVOT_TOL:
            raise BreakdownError("bi-conjugate recurrence broke down")
        beta = (rho_next / rho) * (alpha / omega)
        p = r + beta * (p - omega * v)
        v = matvec(p)
        alpha = rho_next / complex(np.vdot(r0, v))
        s = r - alpha * v
        t = matvec(s)
        tt = complex(np.vdot(t, t))
        omega = complex(np.vdot(t, s)) / tt if abs(tt) > 0 else 0.0
        x = x + alpha * p + omega * s
        r = s - omega * t
        rho = rho_next
        it += 1
    return x, r, it


def _jacobi_wrap(matvec, diag):
    inv = 1.0 / diag

    def wrapped(v):
        return matvec(inv * v)

    return wrapped


def solve_shifted(M, sigma, b, tol=DEFAULT_TOL, max_iter=100000, stats=None, precondition=False):
    """Solve (I - sigma*M) x = b for symmetric negative semidefinite M.

    Deterministic: zero initial guess, fixed recurrences.  Complex shifts
    route through conjugate-orthogonal CG and fall back to BiCGStab if the
    recurrence breaks down.  Raises SolverError when neither the tolerance
    nor the attainable rounding floor is certified within max_iter.
    """
    if tol <= 0.0:
        raise ConfigurationError("tolerance must be positive")
    b = np.asarray(b)
    if M.shape[0] != M.shape[1] or M.shape[1] != len(b):
        raise ConfigurationError("dimension mismatch: matrix %s vs vector %d" % (M.shape, len(b)))
    if not np.all(np.isfinite(b)):
        raise SolverError("right-hand side contains non-finite entries")

    real_shift = abs(complex(sigma).imag) <= 1e-15 * abs(complex(sigma))
    sigma = complex(sigma).real if real_shift else complex(sigma)
    op_norm_1 = 1.0 + abs(sigma) * one_norm(M)

    def matvec(v):
        return v - sigma * (M @ v)

    if precondition:
        diag = 1.0 - sigma * M.diagonal()
        mv = _jacobi_wrap(matvec, diag)

        def run(engine, rhs):
            y = _certified(mv, rhs, tol, max_iter, op_norm_1 * float(np.max(np.abs(1.0 / diag))),
                           engine, stats)
            return (1.0 / diag) * y
    else:
        def run(engine, rhs):
            return _certified(matvec, rhs, tol, max_iter, op_norm_1, engine, stats)

    if real_shift:
        if np.iscomplexobj(b):
            return run(_cg_sweep, b.astype(complex))
        return run(_cg_sweep, b.astype(float))
    try:
        return run(_cocg_sweep, b.astype(complex))
    except BreakdownError:
        if stats is not None:
            stats.fallbacks += 1
        return run(_bicgstab_sweep, b.astype(complex))


def solve_spd(M, b, tol=DEFAULT_TOL, max_iter=100000, stats=None, negate=False):
    """Solve M x = b (or -M x = b with ``negate``) for a definite matrix M by CG."""
    b = np.asarray(b, dtype=float)
    if M.shape[0] != M.shape[1] or M.shape[1] != len(b):
        raise ConfigurationError("dimension mismatch: matrix %s vs vector %d" % (M.shape, len(b)))
    sign = -1.0 if negate else 1.0

    def matvec(v):
        return sign * (M @ v)

    return _certified(matvec, b, tol, max_iter, one_norm(M), _cg_sweep, stats)
