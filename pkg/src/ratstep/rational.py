"""A-acceptable rational approximations to exp(z) in partial-fraction form.

Every integrator in this package acts on a rational function r(z) through
the expansion

    r(z) = r_inf + sum_l sum_{j=1..m_l} r[l][j] / (1 - z*w_l)**j,

with Re(w_l) > 0 for every pole, so that r(tau*A) can be evaluated with
shifted linear solves.  This module derives that representation from
Butcher tableaux (via the stability function), provides exact Maclaurin
coefficients for the resolvent families (1-w*z)**-i and z*(1-w*z)**-i,
and classifies the order and acceptability of an approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, ContractViolation, DomainError

_TRIM_TOL = 1e-12
_CLUSTER_TOL = 1e-7  # relative distance below which roots merge into one pole
_MAX_ORDER_PROBE = 12


@dataclass(frozen=True)
class ButcherTableau:
    """Coefficients (A, b, c) of an s-stage Runge-Kutta method."""

    stage_count: int
    matrix: np.ndarray        # (s, s)
    weights: np.ndarray       # (s,)
    abscissae: np.ndarray     # (s,)

    def __post_init__(self):
        s = self.stage_count
        if self.matrix.shape != (s, s) or self.weights.shape != (s,) or self.abscissae.shape != (s,):
            raise ConfigurationError("tableau shapes inconsistent with stage count %d" % s)
        rowsum = self.matrix.sum(axis=1)
        if np.max(np.abs(rowsum - self.abscissae)) > 1e-12:
            raise ConfigurationError("tableau row sums do not match abscissae")

    @property
    def is_lower_triangular(self) -> bool:
        return bool(np.all(np.abs(np.triu(self.matrix, 1)) == 0.0))


@dataclass(frozen=True)
class RationalApproximant:
    """Poles, multiplicities and residues of a rational map, plus r(-inf).

    ``poles`` holds (w_l, m_l) pairs; ``residues[l]`` holds the m_l residues
    (r[l][1], ..., r[l][m_l]) attached to increasing powers of 1/(1 - z*w_l).
    """

    r_infinity: complex
    poles: tuple[tuple[complex, int], ...]
    residues: tuple[tuple[complex, ...], ...]
    classical_order: int

    @property
    def pole_count(self) -> int:
        """Number of poles counted with multiplicity."""
        return sum(m for _, m in self.poles)

    def evaluate(self, z):
        """Evaluate via the pole expansion; works on scalars and arrays."""
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.r_infinity, dtype=complex)
        for l, ((w, m), res) in enumerate(zip(self.poles, self.residues)):
            den = 1.0 - z * w
            if np.any(np.abs(den) < 1e-300):
                raise DomainError("evaluation at a pole of term l=%d (w=%s)" % (l, w))
            term = np.zeros(z.shape, dtype=complex)
            for j in range(m, 0, -1):
                term = (term + res[j - 1]) / den
            out += term
        return out if out.shape else complex(out)

    def __call__(self, z):
        return self.evaluate(z)


# ---------------------------------------------------------------------------
# polynomial helpers (coefficient arrays in ascending order)

def _poly_trim(c):
    c = np.asarray(c, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return np.zeros(1, dtype=complex)
    keep = len(c)
    while keep > 1 and abs(c[keep - 1]) <= _TRIM_TOL * scale:
        keep -= 1
    return c[:keep]


def _poly_mul(a, b):
    return np.convolve(a, b)


def _poly_eval(c, z):
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape, dtype=complex)
    for coef in c[::-1]:
        out = out * z + coef
    return out


def _poly_det(mat):
    """Determinant of a matrix of polynomials by cofactor expansion."""
    n = len(mat)
    if n == 1:
        return mat[0][0]
    total = np.zeros(1, dtype=complex)
    for col in range(n):
        minor = [[row[c] for c in range(n) if c != col] for row in mat[1:]]
        term = _poly_mul(mat[0][col], _poly_det(minor))
        if col % 2:
            term = -term
        m = max(len(total), len(term))
        total = np.pad(total, (0, m - len(total)))
        total = total + np.pad(term, (0, m - len(term)))
    return total


def _poly_shift(c, z0):
    """Coefficients of p(z0 + t) as a polynomial in t (Taylor shift)."""
    work = np.array(c, dtype=complex)
    n = len(work)
    out = np.empty(n, dtype=complex)
    for k in range(n):
        # synthetic division by (z - z0); remainder is the next coefficient
        for i in range(n - 2 - k, -1, -1):
            work[i] = work[i] + z0 * work[i + 1]
        out[k] = work[0]
        work = work[1:]
    return out


def _series_div(num, den, q):
    """First q coefficients of the power series num(z)/den(z), den[0] != 0."""
    if abs(den[0]) == 0.0:
        raise DomainError("series division with a pole at the origin")
    out = np.zeros(q, dtype=complex)
    for j in range(q):
        acc = num[j] if j < len(num) else 0.0
        kmax = min(j, len(den) - 1)
        for k in range(1, kmax + 1):
            acc -= den[k] * out[j - k]
        out[j] = acc / den[0]
    return out


# ---------------------------------------------------------------------------
# closed-form roots for degree <= 3 (real coefficients)

def _roots_closed_form(coeffs):
    """Roots (with multiplicities) of a real polynomial of degree <= 3.

    Multiple roots are detected from the discriminant rather than recovered
    by clustering: a numerically perturbed triple root splits by roughly
    eps**(1/3), far beyond any reasonable clustering distance, while the
    depressed-cubic invariants stay at rounding level.
    """
    c = _poly_trim(np.asarray(coeffs, dtype=float))
    deg = len(c) - 1
    if deg == 0:
        return []
    if deg == 1:
        return [(complex(-c[0] / c[1]), 1)]
    if deg == 2:
        a, b_, c0 = c[2], c[1], c[0]
        disc = b_ * b_ - 4.0 * a * c0
        scale = max(b_ * b_, abs(4.0 * a * c0), 1e-300)
        if abs(disc) <= 1e-12 * scale:
            return [(complex(-b_ / (2.0 * a)), 2)]
        sq = np.sqrt(complex(disc))
        if b_ >= 0:
            r1 = (-b_ - sq) / (2.0 * a)
        else:
            r1 = (-b_ + sq) / (2.0 * a)
        r2 = c0 / (a * r1)
        return [(complex(r1), 1), (complex(r2), 1)]
    if deg != 3:
        raise ConfigurationError("closed-form root finding limited to degree <= 3, got %d" % deg)

    c0, c1, c2 = (c[:3] / c[3]).real
    shift = -c2 / 3.0
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2 ** 3 / 27.0 - c2 * c1 / 3.0 + c0
    scale = max(abs(shift), abs(p) ** 0.5, abs(q) ** (1.0 / 3.0), 1e-300)
    if abs(p) <= 1e-10 * scale ** 2 and abs(q) <= 1e-10 * scale ** 3:
        return [(complex(shift), 3)]
    disc = -4.0 * p ** 3 - 27.0 * q * q
    if abs(disc) <= 1e-10 * (4.0 * abs(p) ** 3 + 27.0 * q * q):
        d = -3.0 * q / (2.0 * p)
        return [(complex(shift + d), 2), (complex(shift - 2.0 * d), 1)]

    # Cardano for three simple roots, followed by one Newton polish each
    sq = np.sqrt(complex(q * q / 4.0 + p ** 3 / 27.0))
    u3 = -q / 2.0 + sq
    if abs(u3) < abs(-q / 2.0 - sq):
        u3 = -q / 2.0 - sq
    u = u3 ** (1.0 / 3.0)
    v = -p / (3.0 * u)
    omega = complex(-0.5, math.sqrt(3.0) / 2.0)
    roots = []
    for k in range(3):
        t = u * omega ** k + v * omega ** (-k)
        z = t + shift
        fz = _poly_eval(c, z)
        dfz = _poly_eval(np.arange(1, 4) * c[1:], z)
        if abs(dfz) > 0:
            z = z - fz / dfz
        roots.append((complex(z), 1))
    return roots


def _cluster_roots(roots, tol=_CLUSTER_TOL):
    """Merge roots closer than a relative distance tol into multiple poles."""
    flat = []
    for z, m in roots:
        flat.extend([z] * m)
    merged: list[list[complex]] = []
    for z in flat:
        for group in merged:
            ref = group[0]
            if abs(z - ref) <= tol * max(abs(z), abs(ref), 1.0):
                group.append(z)
                break
        else:
            merged.append([z])
    return [(sum(g) / len(g), len(g)) for g in merged]


# ---------------------------------------------------------------------------
# Maclaurin series of the resolvent families (exact binomial forms)

def resolvent_series(w, power, q):
    """First q Maclaurin coefficients of (1 - w*z)**(-power)."""
    w = complex(w)
    return np.array([math.comb(power - 1 + j, j) * w ** j for j in range(q)], dtype=complex)


def z_resolvent_series(w, power, q):
    """First q Maclaurin coefficients of z * (1 - w*z)**(-power)."""
    w = complex(w)
    out = np.zeros(q, dtype=complex)
    for j in range(1, q):
        out[j] = math.comb(power - 2 + j, j - 1) * w ** (j - 1)
    return out


def taylor_coefficients(fn, q):
    """Maclaurin coefficients [R_0, ..., R_{q-1}] of a rational function.

    ``fn`` is either a :class:`RationalApproximant` (pole form) or a pair
    ``(num, den)`` of ascending coefficient sequences (quotient form).
    """
    if q < 1:
        raise ConfigurationError("need q >= 1 Taylor coefficients")
    if isinstance(fn, RationalApproximant):
        out = np.zeros(q, dtype=complex)
        out[0] = fn.r_infinity
        for (w, m), res in zip(fn.poles, fn.residues):
            for i in range(1, m + 1):
                out += res[i - 1] * resolvent_series(w, i, q)
        return out
    num, den = fn
    num = _poly_trim(num)
    den = _poly_trim(den)
    return _series_div(num, den, q)


# ---------------------------------------------------------------------------
# stability functions and partial fractions

def stability_function_from_butcher(tableau):
    """Numerator/denominator of r(z) = 1 + z * b^T (I - z*A)^(-1) * 1.

    Uses the rank-one determinant identity: the numerator equals
    det(I - z*A + z*1*b^T) and the denominator det(I - z*A), both computed
    with exact polynomial arithmetic (entries have degree one).
    """
    s = tableau.stage_count
    if s > 3:
        raise ConfigurationError("stability functions supported for s <= 3 stages")
    A = tableau.matrix
    b = tableau.weights

    def entry(i, j, rank_one):
        lin = -A[i, j] + (b[j] if rank_one else 0.0)
        return np.array([1.0 if i == j else 0.0, lin], dtype=complex)

    den = _poly_det([[entry(i, j, False) for j in range(s)] for i in range(s)])
    num = _poly_det([[entry(i, j, True) for j in range(s)] for i in range(s)])
    return _poly_trim(num).real.copy(), _poly_trim(den).real.copy()


def _sorted_pole_order(poles):
    return sorted(range(len(poles)), key=lambda l: (round(poles[l][0].real, 9), poles[l][0].imag))


def partial_fractions(num, den, cluster_tol=_CLUSTER_TOL):
    """Expand num(z)/den(z) into the pole form used by the integrators.

    Requires deg(num) <= deg(den) and every pole reciprocal w_l = 1/z_l in
    the open right half-plane.  The returned expansion is verified against
    the quotient on a grid of 100 points in the unit disk.
    """
    num = _poly_trim(np.asarray(num, dtype=complex))
    den = _poly_trim(np.asarray(den, dtype=complex))
    real_input = np.max(np.abs(num.imag)) < 1e-13 and np.max(np.abs(den.imag)) < 1e-13
    deg_n, deg_d = len(num) - 1, len(den) - 1
    if deg_n > deg_d:
        raise ConfigurationError("numerator degree %d exceeds denominator degree %d" % (deg_n, deg_d))
    if abs(den[0]) == 0.0:
        raise DomainError("denominator vanishes at z=0")

    if deg_d == 0:
        approx = RationalApproximant(complex(num[0] / den[0]), (), (), 0)
    else:
        roots = _cluster_roots(_roots_closed_form(den.real if real_input else den), cluster_tol)
        poles = []
        residue_lists = []
        for z0, m in roots:
            w = 1.0 / z0
            if w.real <= 0.0:
                raise ConfigurationError(
                    "pole reciprocal w=%s has nonpositive real part; not A-acceptable material" % w)
            den_sh = _poly_shift(den, z0)
            num_sh = _poly_shift(num, z0)
            f_series = _series_div(num_sh, den_sh[m:], m)
            res = [f_series[m - j] * (-w) ** j for j in range(1, m + 1)]
            poles.append((w, m))
            residue_lists.append(res)
        r_inf = complex(num[deg_d] / den[deg_d]) if deg_n == deg_d else 0.0

        if real_input:
            poles, residue_lists, r_inf = _symmetrize_real(poles, residue_lists, r_inf)
        order = _sorted_pole_order(poles)
        poles = tuple(poles[l] for l in order)
        residue_lists = tuple(tuple(residue_lists[l]) for l in order)
        p = _order_against_exp_series(_approximant_series(r_inf, poles, residue_lists))
        approx = RationalApproximant(r_inf, poles, residue_lists, p)

    _verify_against_quotient(approx, num, den)
    return approx


def _approximant_series(r_inf, poles, residues, q=_MAX_ORDER_PROBE + 1):
    out = np.zeros(q, dtype=complex)
    out[0] = r_inf
    for (w, m), res in zip(poles, residues):
        for i in range(1, m + 1):
            out += res[i - 1] * resolvent_series(w, i, q)
    return out


def _symmetrize_real(poles, residues, r_inf):
    """Pair complex poles with exact conjugates; realify real-axis data."""
    used = [False] * len(poles)
    new_poles, new_res = [], []
    for l, (w, m) in enumerate(poles):
        if used[l]:
            continue
        used[l] = True
        if abs(w.imag) <= 1e-12 * abs(w):
            new_poles.append((complex(w.real, 0.0), m))
            new_res.append([complex(r.real, 0.0) for r in residues[l]])
            continue
        partner = None
        for l2 in range(l + 1, len(poles)):
            w2, m2 = poles[l2]
            if not used[l2] and m2 == m and abs(w2 - w.conjugate()) <= 1e-6 * abs(w):
                partner = l2
                break
        if partner is None:
            raise ContractViolation("complex pole %s lacks a conjugate partner" % w)
        used[partner] = True
        new_poles.append((w, m))
        new_res.append(list(residues[l]))
        new_poles.append((w.conjugate(), m))
        new_res.append([r.conjugate() for r in residues[l]])
    return new_poles, new_res, complex(r_inf.real, 0.0)


def _verify_against_quotient(approx, num, den, rtol=1e-10):
    angles = 2.0 * np.pi * np.arange(10) / 10.0
    radii = np.linspace(0.1, 1.0, 10)
    zs = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
    dvals = _poly_eval(den, zs)
    ok = np.abs(dvals) > 1e-8 * np.max(np.abs(dvals))
    zs, dvals = zs[ok], dvals[ok]
    quotient = _poly_eval(num, zs) / dvals
    got = approx.evaluate(zs)
    err = np.abs(got - quotient)
    bound = rtol * (1.0 + np.abs(quotient))
    if np.any(err > bound):
        worst = np.argmax(err / bound)
        raise ContractViolation(
            "partial fractions disagree with quotient at z=%s (err=%.3e)" % (zs[worst], err[worst]))


# ---------------------------------------------------------------------------
# order and acceptability

def _order_against_exp_series(series, rtol=1e-7):
    p = -1
    for j in range(len(series)):
        target = 1.0 / math.factorial(j)
        if abs(series[j] - target) <= rtol * target:
            p = j
        else:
            break
    return max(p, 0)


def verify_order_and_acceptability(fn):
    """Classical order p and an A-acceptability flag for a rational map.

    Order is the largest j with Maclaurin coefficients matching 1/j! through
    j (probed up to 12); acceptability samples |r(iy)| on 2001 points
    (log-spaced over [-1e4, 1e4] plus 0) and requires every pole reciprocal
    in the open right half-plane.
    """
    series = taylor_coefficients(fn, _MAX_ORDER_PROBE + 1)
    p = _order_against_exp_series(series)

    y = np.logspace(-4.0, 4.0, 1000)
    samples = np.concatenate([-y[::-1], [0.0], y])
    if isinstance(fn, RationalApproximant):
        poles_ok = all(w.real > 0.0 for w, _ in fn.poles)
        vals = fn.evaluate(1j * samples)
    else:
        num, den = _poly_trim(fn[0]), _poly_trim(fn[1])
        if len(den) > 1:
            roots = _cluster_roots(_roots_closed_form(den.real))
            poles_ok = all((1.0 / z).real > 0.0 for z, _ in roots)
        else:
            poles_ok = True
        vals = _poly_eval(num, 1j * samples) / _poly_eval(den, 1j * samples)
    acceptable = poles_ok and bool(np.max(np.abs(vals)) <= 1.0 + 1e-12)
    return p, acceptable


# ---------------------------------------------------------------------------
# named methods and user-supplied tableaux

def sdirk3_tableau():
    """Three-stage SDIRK method of classical order 4 (stage order 1).

    The classical A-stable choice with diagonal gamma = 1/2 + cos(pi/18)/sqrt(3);
    see Hairer & Wanner's collection of SDIRK methods.
    """
    g = 0.5 + math.cos(math.pi / 18.0) / math.sqrt(3.0)
    A = np.array([
        [g, 0.0, 0.0],
        [0.5 - g, g, 0.0],
        [2.0 * g, 1.0 - 4.0 * g, g],
    ])
    b = np.array([1.0 / (6.0 * (1.0 - 2.0 * g) ** 2),
                  1.0 - 1.0 / (3.0 * (1.0 - 2.0 * g) ** 2),
                  1.0 / (6.0 * (1.0 - 2.0 * g) ** 2)])
    c = np.array([g, 0.5, 1.0 - g])
    return ButcherTableau(3, A, b, c)


def gauss3_tableau():
    """Three-stage Gauss collocation method (classical order 6, stage order 3)."""
    r15 = math.sqrt(15.0)
    A = np.array([
        [5.0 / 36.0, 2.0 / 9.0 - r15 / 15.0, 5.0 / 36.0 - r15 / 30.0],
        [5.0 / 36.0 + r15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - r15 / 24.0],
        [5.0 / 36.0 + r15 / 30.0, 2.0 / 9.0 + r15 / 15.0, 5.0 / 36.0],
    ])
    b = np.array([5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0])
    c = np.array([0.5 - r15 / 10.0, 0.5, 0.5 + r15 / 10.0])
    return ButcherTableau(3, A, b, c)


_TABLEAUX = {"sdirk3": sdirk3_tableau, "gauss3": gauss3_tableau}
_EXPECTED = {"sdirk3": 4, "gauss3": 6}


def tableau(name):
    """Look up a named Butcher tableau ("sdirk3" or "gauss3")."""
    try:
        return _TABLEAUX[name]()
    except KeyError:
        raise ConfigurationError("unknown method %r (have: %s)" % (name, sorted(_TABLEAUX))) from None


def approximant_from_tableau(tab):
    """Partial-fraction form of a tableau's stability function."""
    return partial_fractions(*stability_function_from_butcher(tab))


@lru_cache(maxsize=None)
def method(name):
    """Named rational approximant; validates order and A-acceptability."""
    approx = approximant_from_tableau(tableau(name))
    p, acceptable = verify_order_and_acceptability(approx)
    expected = _EXPECTED[name]
    if p != expected or not acceptable:
        raise ContractViolation(
            "method %r classified as (order=%d, acceptable=%s), expected (%d, True)"
            % (name, p, acceptable, expected))
    return approx


def tableau_from_text(text):
    """Parse the plain-text tableau format.

    Lines (after stripping blanks and '#' comments): the stage count s,
    then s rows of the matrix, then the weights, then the abscissae, all
    as whitespace-separated decimal literals.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ConfigurationError("empty tableau description")
    try:
        s = int(lines[0])
        rows = [np.array([float(v) for v in ln.split()]) for ln in lines[1:]]
    except ValueError as exc:
        raise ConfigurationError("malformed tableau text: %s" % exc) from None
    if len(rows) != s + 2:
        raise ConfigurationError("expected %d data rows after the stage count, got %d" % (s + 2, len(rows)))
    A = np.vstack(rows[:s])
    return ButcherTableau(s, A, rows[s], rows[s + 1])
