"""Sampling-node windows and the moment-system weights attached to them.

A step of the rational-like integrator replaces resolvents of the
time-translation generator by weighted combinations of data samples taken
at offsets c (for the source term, q = p points) and d (for the boundary
term, q = p + 1 points) around the current time.  The weights solve the
moment system

    sum_k c_k**j * gamma_k = j! * R_j,   0 <= j <= q-1,

where R_j are Maclaurin coefficients of the resolvent family involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .rational import RationalApproximant, resolvent_series, z_resolvent_series

PRESET_KINDS = ("explicit", "implicit", "centered", "chebyshev_centered")

_MOMENT_RTOL = 1e-11


def _cheb_offsets():
    # roots of the degree-3 Chebyshev polynomial relocated into [-1,0] and [0,1]
    r = math.sqrt(3.0) / 2.0
    return np.array([(-r - 1.0) / 2.0, -0.5, (r - 1.0) / 2.0,
                     (1.0 - r) / 2.0, 0.5, (r + 1.0) / 2.0])


def preset_nodes(kind, p, n):
    """Node windows (c_n, d_n) for step index n of a preset scheme.

    Explicit windows trail the current time, implicit ones reach one grid
    unit ahead; centered and Chebyshev-centered windows (p = 6 only)
    straddle it.  Startup windows (small n) are shifted forward so that
    every sample time t_n + tau*c stays nonnegative.
    """
    if n < 0:
        raise ConfigurationError("step index must be nonnegative")
    if kind in ("explicit", "implicit"):
        if p not in (4, 6):
            raise ConfigurationError("preset %r supports p in {4, 6}, got %d" % (kind, p))
        back = min(n, p - 1) if kind == "explicit" else min(n, p - 2)
        c = np.arange(p, dtype=float) - back
        d = np.arange(p + 1, dtype=float) - min(n, p - 1)
        return c, d
    if kind in ("centered", "chebyshev_centered"):
        if p != 6:
            raise ConfigurationError("preset %r is defined for p = 6 only" % kind)
        shift = max(3 - n, 0)
        c = (np.arange(6) - 2.5 if kind == "centered" else _cheb_offsets()) + shift
        d = np.arange(-3.0, 4.0) + shift
        return c, d
    raise ConfigurationError("unknown node kind %r (have: %s)" % (kind, list(PRESET_KINDS) + ["custom:<file>"]))


@dataclass(frozen=True)
class NodeScheme:
    """A sequence of node windows plus its steady-state index n0."""

    kind: str
    p: int
    n0: int
    custom_rows: tuple = field(default=None, repr=False)

    def windows(self, n):
        if self.custom_rows is not None:
            c, d = self.custom_rows[min(n, len(self.custom_rows) - 1)]
        else:
            c, d = preset_nodes(self.kind, self.p, n)
        for name, v in (("c", c), ("d", d)):
            if len(np.unique(v)) != len(v):
                raise ConfigurationError("%s window at n=%d has repeated nodes" % (name, n))
            if n + v.min() < -1e-12:
                raise ConfigurationError(
                    "%s window at n=%d reaches before t=0 (min offset %g)" % (name, n, v.min()))
        return c, d


def node_scheme(spec, p):
    """Build a scheme from an identifier: a preset kind or "custom:<file>"."""
    alias = {"cheb-centered": "chebyshev_centered"}
    kind = alias.get(spec, spec)
    if kind in PRESET_KINDS:
        n0 = 3 if kind in ("centered", "chebyshev_centered") else p - 1
        return NodeScheme(kind, p, n0)
    if spec.startswith("custom:"):
        rows = _parse_custom_rows(Path(spec[len("custom:"):]).read_text(), p)
        return NodeScheme("custom", p, len(rows) - 1, custom_rows=rows)
    raise ConfigurationError("unknown node scheme %r" % spec)


def _parse_custom_rows(text, p):
    rows = []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        vals = np.array([float(v) for v in ln.split()])
        if len(vals) != 2 * p + 1:
            raise ConfigurationError(
                "custom node row needs %d values (%d for c then %d for d), got %d"
                % (2 * p + 1, p, p + 1, len(vals)))
        rows.append((vals[:p].copy(), vals[p:].copy()))
    if not rows:
        raise ConfigurationError("custom node file holds no rows")
    return tuple(rows)


# ---------------------------------------------------------------------------
# moment systems

def vandermonde_coefficients(c, taylor):
    """Solve sum_k c_k**j * gamma_k = j! * R_j for the weight vector gamma.

    Uses the O(q^2) dual Bjorck-Pereyra recursion (transposed Newton
    interpolation) instead of generic elimination.
    """
    c = np.asarray(c, dtype=float)
    q = len(c)
    if q < 1:
        raise ConfigurationError("empty node vector")
    if len(taylor) != q:
        raise ConfigurationError("need %d Taylor coefficients for %d nodes" % (q, q))
    if len(np.unique(c)) != q:
        raise ConfigurationError("repeated nodes make the moment system singular")

    b = np.array([math.factorial(j) * taylor[j] for j in range(q)])
    # transposed Newton-to-monomial factors ...
    for k in range(q - 1):
        for j in range(q - 1, k, -1):
            b[j] -= c[k] * b[j - 1]
    # ... then transposed divided-difference factors
    for n in range(q - 2, -1, -1):
        for m in range(n + 1, q):
            b[m] /= c[m] - c[m - n - 1]
        for j in range(n, q - 1):
            b[j] -= b[j + 1]
    return b


def moment_residual(c, weights, taylor):
    """Max-norm residual of the moment system, relative per row."""
    c = np.asarray(c, dtype=float)
    worst = 0.0
    for j in range(len(c)):
        rhs = math.factorial(j) * taylor[j]
        res = abs(np.sum(c ** j * weights) - rhs)
        worst = max(worst, res / max(1.0, abs(rhs)))
    return worst


@dataclass(frozen=True)
class StepCoefficients:
    """Weight vectors gamma[l][i-1] (length p) and eta[l][i-1] (length p+1)."""

    gamma: tuple
    eta: tuple


def step_coefficients(R: RationalApproximant, c, d):
    """Moment weights for every pole l and resolvent power i of R.

    gamma[l][i-1] carries the weights for (1 - w_l z)**-i on the c window;
    eta[l][i-1] those for z*(1 - w_l z)**-i on the d window.
    """
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    qc, qd = len(c), len(d)
    gamma, eta = [], []
    for w, m in R.poles:
        gl, el = [], []
        for i in range(1, m + 1):
            tc = resolvent_series(w, i, qc)
            g = vandermonde_coefficients(c, tc)
            if moment_residual(c, g, tc) > _MOMENT_RTOL:
                raise ContractViolation("gamma moment residual above tolerance for pole w=%s, i=%d" % (w, i))
            td = z_resolvent_series(w, i, qd)
            e = vandermonde_coefficients(d, td)
            if moment_residual(d, e, td) > _MOMENT_RTOL:
                raise ContractViolation("eta moment residual above tolerance for pole w=%s, i=%d" % (w, i))
            gl.append(g)
            el.append(e)
        gamma.append(tuple(gl))
        eta.append(tuple(el))
    return StepCoefficients(tuple(gamma), tuple(eta))


def conditioning_report(c):
    """Infinity norm of the inverse of the moment matrix at these nodes.

    Row j of the matrix holds c_k**j (the system's right-hand side carries
    the j! factors); the reported value measures the round-off
    amplification of the weight computation.
    """
    c = np.asarray(c, dtype=float)
    q = len(c)
    if len(np.unique(c)) != q:
        raise ConfigurationError("repeated nodes make the moment system singular")
    M = np.vstack([c ** j for j in range(q)])
    return float(np.linalg.norm(np.linalg.inv(M), np.inf))
