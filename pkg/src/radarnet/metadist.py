"""Distributions on [0, 1] from their moments.

* :func:`cm_reconstruct` -- Chebyshev-Markov bounds: for every grid point
  ``x0`` the smallest and largest CDF value compatible with the moments, from
  the canonical representation that puts the largest possible mass at ``x0``.
  Results are reported as CCDFs ``P(X >= t)``.
* :func:`gp_invert` -- Gil-Pelaez inversion from imaginary moments.
* :func:`cm_bounds_lp` -- linear program on a support grid (slow reference).

Recurrence coefficients come from shifted-Legendre modified moments through
the modified Chebyshev algorithm, carried out in multiprecision so that the
only error left is the one already present in the input moments.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np
from scipy.optimize import linprog

from .quadrature import panel_rule

DEFAULT_T_GRID = np.linspace(0.0, 1.0, 512)
DEFAULT_T_GRID.setflags(write=False)

HANKEL_TOL = 1e-8
DEGENERATE_TOL = 1e-10
MP_DPS = 60


class InconsistentMoments(ValueError):
    """The moments cannot belong to a distribution on [0, 1]."""


@dataclass
class MomentVector:
    beta_sf: float
    orders: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.orders = np.asarray(self.orders, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if self.orders.shape != self.values.shape:
            raise ValueError("orders and values differ in length")
        if not np.array_equal(self.orders, np.arange(1, len(self.orders) + 1)):
            raise ValueError("orders must be 1..n")
        if len(self.orders) < 1:
            raise ValueError("need at least one moment")

    @property
    def n(self):
        return len(self.values)

    def raw(self) -> list:
        """``[1, M_1, ..., M_n]``."""
        return [1.0] + [float(v) for v in self.values]

    def truncated(self, n: int) -> "MomentVector":
        return MomentVector(self.beta_sf, self.orders[:n], self.values[:n])


@dataclass
class MetaDistCurve:
    """``F`` holds ``P(p_SF >= t)`` on ``t_grid``."""

    t_grid: np.ndarray
    F: np.ndarray
    method: str
    beta_sf: float = math.nan
    n_moments: int = 0
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)
    samples: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        if self.t_grid.shape != self.F.shape:
            raise ValueError("t_grid and F differ in shape")
        if np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")

    def at(self, t):
        return np.interp(t, self.t_grid, self.F)

    def rows(self):
        for t, f in zip(self.t_grid, self.F):
            yield (repr(float(t)), repr(float(f)), self.method, repr(float(self.beta_sf)), self.n_moments)


def write_curves_csv(path, curves: Sequence[MetaDistCurve]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_sf", "F", "method", "beta_sf", "n_moments"])
        for c in curves:
            w.writerows(c.rows())


def monotone_ccdf(values) -> np.ndarray:
    """Clip to [0, 1] and force a nonincreasing sequence."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    return np.minimum.accumulate(v)


# ---------------------------------------------------------------------------
# recurrence coefficients


def _shifted_legendre_coeffs(kmax):
    """Power-basis coefficients of monic shifted Legendre polynomials on [0, 1]
    and their recurrence coefficients ``(a_k, b_k)``."""
    a = [mpmath.mpf(1) / 2] * (kmax + 1)
    b = [mpmath.mpf(0)] + [mpmath.mpf(k * k) / (4 * (4 * k * k - 1)) for k in range(1, kmax + 1)]
    polys = [[mpmath.mpf(1)]]
    if kmax >= 1:
        polys.append([-a[0], mpmath.mpf(1)])
    for k in range(1, kmax):
        prev, cur = polys[k - 1], polys[k]
        nxt = [mpmath.mpf(0)] * (k + 2)
        for i, c in enumerate(cur):
            nxt[i + 1] += c
            nxt[i] -= a[k] * c
        for i, c in enumerate(prev):
            nxt[i] -= b[k] * c
        polys.append(nxt)
    return polys, a, b


def recurrence_coefficients(raw_moments):
    """Monic three-term recurrence ``(alpha, beta)`` of the measure whose
    moments of degree ``0..D`` are ``raw_moments``.

    Returns as many coefficients as the data determine: ``beta_k`` needs
    degree ``2k`` and ``alpha_k`` degree ``2k+1``.  ``beta[0]`` is the total
    mass.  Computation stops at the first nonpositive ``beta``.
    """
    with mpmath.workdps(MP_DPS):
        m = [mpmath.mpf(float(x)) for x in raw_moments]
        D = len(m) - 1
        polys, a, b = _shifted_legendre_coeffs(D)
        nu = [mpmath.fsum(c * m[i] for i, c in enumerate(polys[k])) for k in range(D + 1)]
        alpha, beta = [], []
        if nu[0] <= 0:
            return np.array([]), np.array([float(nu[0])])
        beta.append(nu[0])
        if D >= 1:
            alpha.append(a[0] + nu[1] / nu[0])
        sig_prev2 = {l: mpmath.mpf(0) for l in range(-1, D + 2)}
        sig_prev = {l: nu[l] for l in range(D + 1)}
        k = 1
        while 2 * k <= D and len(alpha) == k:
            sig = {}
            for l in range(k, D - k + 1):
                s = sig_prev.get(l + 1, mpmath.mpf(0)) - (alpha[k - 1] - a[l]) * sig_prev[l]
                s -= beta[k - 1] * sig_prev2.get(l, mpmath.mpf(0))
                s += b[l] * sig_prev.get(l - 1, mpmath.mpf(0))
                sig[l] = s
            bk = sig[k] / sig_prev[k - 1]
            beta.append(bk)
            if bk <= 0:
                break
            if 2 * k + 1 <= D:
                alpha.append(a[k] + sig[k + 1] / sig[k] - sig_prev[k] / sig_prev[k - 1])
            sig_prev2, sig_prev = sig_prev, sig
            k += 1
        return np.array([float(x) for x in alpha]), np.array([float(x) for x in beta])


def check_moments(moments: MomentVector, tol: float = HANKEL_TOL):
    """Raise :class:`InconsistentMoments` unless the sequence can come from a
    distribution on [0, 1] (within ``tol``)."""
    v = moments.values
    if np.any(~np.isfinite(v)):
        raise InconsistentMoments("moments must be finite")
    if np.any(v <= 0) or np.any(v > 1 + tol):
        raise InconsistentMoments("moments must lie in (0, 1]")
    raw = np.array(moments.raw())
    if np.any(np.diff(raw) > tol):
        i = int(np.argmax(np.diff(raw) > tol))
        raise InconsistentMoments(
            f"Hankel matrix H(m - shift m) is not positive semidefinite: M_{i + 1} > M_{i}")
    # Hankel matrices of m and of (m_i - m_{i+1}) must be PSD
    for name, seq in (("H(m)", raw), ("H(m - shift m)", raw[:-1] - raw[1:])):
        k = (len(seq) - 1) // 2
        if k < 1:
            continue
        H = np.array([[seq[i + j] for j in range(k + 1)] for i in range(k + 1)])
        ev = np.linalg.eigvalsh(H)
        if ev[0] < -tol * max(1.0, ev[-1]):
            raise InconsistentMoments(f"Hankel matrix {name} is not positive semidefinite (min eigenvalue {ev[0]:.3g})")
    for name, seq in (("H(shift m)", raw[1:]), ("H(shift m - shift^2 m)", raw[1:-1] - raw[2:])):
        k = (len(seq) - 1) // 2
        if len(seq) < 3:
            continue
        H = np.array([[seq[i + j] for j in range(k + 1)] for i in range(k + 1)])
        ev = np.linalg.eigvalsh(H)
        if ev[0] < -tol * max(1.0, ev[-1]):
            raise InconsistentMoments(f"Hankel matrix {name} is not positive semidefinite (min eigenvalue {ev[0]:.3g})")
    # finer test than the eigenvalues above: Gauss nodes must stay inside [0, 1]
    alpha, beta = recurrence_coefficients(raw)
    if beta.size > 1 and beta[-1] < -DEGENERATE_TOL:
        k = beta.size - 1
        raise InconsistentMoments(f"recurrence coefficient beta_{k} = {beta[-1]:.3g} is negative; "
                                  f"moments beyond order {2 * k - 1} are not consistent")
    j = min(alpha.size, beta.size)
    for k in range(1, j + 1):
        J = np.diag(alpha[:k]) + np.diag(np.sqrt(np.maximum(beta[1:k], 0.0)), 1)
        nodes = np.linalg.eigvalsh(J + np.triu(J, 1).T)
        if nodes[0] < -tol or nodes[-1] > 1 + tol:
            raise InconsistentMoments(
                f"{k}-point Gauss rule has a node at {nodes[0] if nodes[0] < -tol else nodes[-1]:.3g}, "
                f"outside [0, 1]; moments beyond order {2 * k - 2} are not consistent (precision loss)")


# ---------------------------------------------------------------------------
# quadrature rules from recurrences


def gauss_rule(alpha, beta, j):
    """``j``-point Gauss rule of the measure (total mass ``beta[0]``)."""
    J = np.diag(alpha[:j]) + np.diag(np.sqrt(beta[1:j]), 1) + np.diag(np.sqrt(beta[1:j]), -1)
    x, V = np.linalg.eigh(J)
    return x, beta[0] * V[0] ** 2


def radau_rule(alpha, beta, j, x0):
    """``j``-point rule with one node fixed at ``x0``, exact up to degree
    ``2j - 2``.  Needs ``alpha[:j-1]`` and ``beta[:j]``."""
    if j == 1:
        return np.array([x0]), np.array([beta[0]])
    J = np.diag(alpha[: j - 1]) + np.diag(np.sqrt(beta[1 : j - 1]), 1) + np.diag(np.sqrt(beta[1 : j - 1]), -1)
    rhs = np.zeros(j - 1)
    rhs[-1] = beta[j - 1]
    delta = np.linalg.solve(J - x0 * np.eye(j - 1), rhs)
    Jt = np.zeros((j, j))
    Jt[: j - 1, : j - 1] = J
    Jt[j - 1, j - 1] = x0 + delta[-1]
    off = math.sqrt(beta[j - 1])
    Jt[j - 2, j - 1] = Jt[j - 1, j - 2] = off
    x, V = np.linalg.eigh(Jt)
    return x, beta[0] * V[0] ** 2


@dataclass
class _Rec:
    alpha: np.ndarray
    beta: np.ndarray

    def can_radau(self, j):
        return len(self.alpha) >= j - 1 and len(self.beta) >= j and np.all(self.beta[:j] > 0)


class CMSolver:
    """Chebyshev-Markov bounds for one moment vector ``[1, m_1..m_n]``."""

    def __init__(self, raw):
        self.raw = [float(x) for x in raw]
        self.n = len(raw) - 1
        m = self.raw
        self.mu = _Rec(*recurrence_coefficients(m))
        self.nu_x = _Rec(*recurrence_coefficients(m[1:]))
        self.nu_1mx = _Rec(*recurrence_coefficients([m[i] - m[i + 1] for i in range(self.n)]))
        self.nu_x1mx = _Rec(*recurrence_coefficients([m[i + 1] - m[i + 2] for i in range(self.n - 1)]))
        self.atoms = self._determinate()

    def _determinate(self):
        """Support of the unique matching distribution if the moments sit on
        the boundary of the moment space, else ``None``."""
        beta = self.mu.beta
        for k in range(1, len(beta)):
            if beta[k] <= DEGENERATE_TOL:
                x, w = gauss_rule(self.mu.alpha, beta, k)
                return np.clip(x, 0.0, 1.0), w
        return None

    def _candidates(self, x0):
        try:
            return self._candidates_unchecked(x0)
        except np.linalg.LinAlgError:
            # x0 is a node of a lower-order Gauss rule; the LP fallback handles it
            return []

    def _candidates_unchecked(self, x0):
        n = self.n
        out = []
        if n % 2 == 0:
            k = n // 2
            if self.mu.can_radau(k + 1):
                x, w = radau_rule(self.mu.alpha, self.mu.beta, k + 1, x0)
                out.append((x, w))
            if k >= 1 and self.nu_x1mx.can_radau(k):
                x, w = radau_rule(self.nu_x1mx.alpha, self.nu_x1mx.beta, k, x0)
                q = w / (x * (1 - x))
                m1 = self.raw[1] - np.dot(q, x)
                m0 = 1 - m1 - q.sum()
                out.append((np.concatenate([[0.0, 1.0], x]), np.concatenate([[m0, m1], q])))
        else:
            k = (n - 1) // 2
            if self.nu_x.can_radau(k + 1):
                x, w = radau_rule(self.nu_x.alpha, self.nu_x.beta, k + 1, x0)
                q = w / x
                out.append((np.concatenate([[0.0], x]), np.concatenate([[1 - q.sum()], q])))
            if self.nu_1mx.can_radau(k + 1):
                x, w = radau_rule(self.nu_1mx.alpha, self.nu_1mx.beta, k + 1, x0)
                q = w / (1 - x)
                out.append((np.concatenate([[1.0], x]), np.concatenate([[1 - q.sum()], q])))
        return out

    def bounds(self, x0, tol=1e-9):
        """``(inf F(x0-), sup F(x0))`` over distributions matching the moments,
        or ``None`` when no valid canonical representation is found."""
        if self.atoms is not None:
            x, w = self.atoms
            return float(w[x < x0 - tol].sum()), float(w[x <= x0 + tol].sum())
        best = None
        for x, w in self._candidates(x0):
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
                continue
            if x.min() < -tol or x.max() > 1 + tol or w.min() < -1e-9:
                continue
            i0 = int(np.argmin(np.abs(x - x0)))
            if abs(x[i0] - x0) > 1e-7:
                continue
            if best is None or w[i0] > best[2]:
                best = (x, w, w[i0], i0)
        if best is None:
            return None
        x, w, _, i0 = best
        w = np.clip(w, 0.0, None)
        below = (x < x0) & (np.arange(len(x)) != i0)
        lo = float(w[below].sum())
        return lo, lo + float(w[i0])


def cm_bounds_lp(raw_moments, x0, grid_size=2001, slack=1e-9):
    """LP reference for ``(inf F(x0-), sup F(x0))`` on a uniform support grid
    (``x0`` is added to the grid)."""
    grid = np.union1d(np.linspace(0.0, 1.0, grid_size), [x0])
    n = len(raw_moments) - 1
    # shifted Legendre basis keeps the constraint rows well scaled
    V = np.polynomial.legendre.legvander(2 * grid - 1, n).T
    coeffs = [np.polynomial.legendre.leg2poly(np.eye(n + 1)[j]) for j in range(n + 1)]
    rhs = []
    for c in coeffs:
        # P_j(2x - 1) in powers of x
        poly = np.polynomial.Polynomial(c)(np.polynomial.Polynomial([-1.0, 2.0]))
        rhs.append(sum(ci * raw_moments[i] for i, ci in enumerate(poly.coef)))
    rhs = np.array(rhs)
    A_ub = np.vstack([V, -V])
    b_ub = np.concatenate([rhs + slack, -rhs + slack])
    A_eq = np.ones((1, grid.size))
    sup_c = -(grid <= x0).astype(float)
    inf_c = (grid < x0).astype(float)
    kw = dict(A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=(0, None), method="highs")
    hi = linprog(sup_c, **kw)
    lo = linprog(inf_c, **kw)
    if hi.status != 0 or lo.status != 0:
        raise InconsistentMoments(f"moment LP infeasible at x0={x0}")
    return float(lo.fun), float(-hi.fun)


def cm_reconstruct(moments: MomentVector, t_grid=None, check=True) -> MetaDistCurve:
    """Average of the Chebyshev-Markov lower and upper CDF bounds, as a CCDF.

    Grid points where no canonical representation validates fall back to the
    LP; the curve then carries ``info["lp_points"]``.
    """
    t_grid = DEFAULT_T_GRID if t_grid is None else np.asarray(t_grid, dtype=float)
    if check:
        check_moments(moments)
    solver = CMSolver(moments.raw())
    lower = np.empty(t_grid.size)
    upper = np.empty(t_grid.size)
    lp_points = 0
    eps = 1e-9
    for i, t in enumerate(t_grid):
        if t <= 0:
            # P(X >= 0) = 1 for any law on [0, 1]
            lower[i] = upper[i] = 0.0
            continue
        x0 = min(t, 1 - eps)
        b = solver.bounds(x0)
        if b is None:
            lp_points += 1
            b = cm_bounds_lp(moments.raw(), x0)
        lower[i], upper[i] = b
    mid = 0.5 * (lower + upper)
    ccdf = monotone_ccdf(1.0 - mid)
    method = "cm" if lp_points == 0 else "cm+lp"
    info = {"lp_points": lp_points, "determinate": solver.atoms is not None}
    # CCDF P(X >= t) = 1 - F(t-): lower CCDF from the upper CDF bound
    return MetaDistCurve(t_grid, ccdf, method, moments.beta_sf, moments.n,
                         lower=monotone_ccdf(1.0 - upper), upper=monotone_ccdf(1.0 - lower), info=info)


# ---------------------------------------------------------------------------
# Gil-Pelaez


def gp_invert(moment_fn: Callable, t_grid=None, u_max=None, quad_spec=None, atom=0.0,
              decay_tol=1e-4, u_cap=200.0, panel=1.0) -> MetaDistCurve:
    """CCDF ``P(X >= t)`` of ``X`` in (0, 1] from ``u -> E[X^{ju}]``.

    ``atom`` is the probability mass at ``X = 1``; it is removed from the
    transform so that the remaining integrand decays.  With ``u_max=None`` the
    upper limit is the first ``u`` where ``|M_ju - atom| < decay_tol``, capped
    at ``u_cap`` (with a warning and a tail estimate in ``info``).
    """
    t_grid = DEFAULT_T_GRID if t_grid is None else np.asarray(t_grid, dtype=float)
    order = quad_spec.order if quad_spec is not None else 8

    def phi(u):
        return np.asarray(moment_fn(np.asarray(u, dtype=float)), dtype=complex) - atom

    info = {}
    if u_max is None:
        probe = np.arange(1.0, u_cap + 1e-9, 1.0)
        mags = np.abs(phi(probe))
        hit = np.nonzero(mags < decay_tol)[0]
        if hit.size:
            u_max = float(probe[hit[0]])
        else:
            u_max = float(u_cap)
            tail = float(mags[-10:].max())
            info["truncation_error"] = tail * math.log(2) / math.pi
            warnings.warn(f"transform has not decayed by u={u_cap:g} (|M-a|={tail:.2e})", RuntimeWarning)
    info["u_max"] = u_max
    inner = (t_grid > 0) & (t_grid < 1)
    logs = np.log(t_grid[inner])
    width = min(panel, math.pi / max(1.0, np.abs(logs).max()) if logs.size else panel)
    npan = max(1, int(math.ceil(u_max / width)))
    u, wq = panel_rule(np.linspace(0.0, u_max, npan + 1), order)
    ph = phi(u)
    vals = np.imag(np.exp(-1j * np.outer(logs, u)) * ph[None, :]) / u[None, :]
    integral = vals @ wq
    F = np.empty(t_grid.size)
    F[inner] = atom + (1 - atom) / 2 + integral / math.pi
    F[t_grid <= 0] = 1.0
    F[t_grid >= 1] = atom
    return MetaDistCurve(t_grid, monotone_ccdf(F), "gp", info=info)


# ---------------------------------------------------------------------------
# comparison and percentiles


def ks_distance(a: MetaDistCurve, b: MetaDistCurve) -> float:
    """Largest absolute difference, after linear interpolation of both curves
    onto the union of their grids (restricted to the overlap)."""
    lo = max(a.t_grid[0], b.t_grid[0])
    hi = min(a.t_grid[-1], b.t_grid[-1])
    grid = np.union1d(a.t_grid, b.t_grid)
    grid = grid[(grid >= lo) & (grid <= hi)]
    return float(np.max(np.abs(a.at(grid) - b.at(grid))))


def percentile_reliability(curve: MetaDistCurve, level: float) -> float:
    """Reliability reached by all but a fraction ``level`` of radars.

    Returns the largest ``t`` with ``P_M(t) >= 1 - level``, i.e. the
    ``level``-quantile of the conditional success probability: ``level=0.1``
    gives the reliability that 90% of radars achieve or exceed.  Linear
    interpolation between grid points.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    target = 1.0 - level
    t, F = curve.t_grid, monotone_ccdf(curve.F)
    ok = np.nonzero(F >= target)[0]
    if ok.size == 0:
        return float(t[0])
    i = int(ok[-1])
    if i == t.size - 1:
        return float(t[-1])
    f0, f1 = F[i], F[i + 1]
    if f0 == f1:
        return float(t[i])
    return float(t[i] + (t[i + 1] - t[i]) * (f0 - target) / (f0 - f1))
