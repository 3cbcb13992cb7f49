"""Quadrature helpers: tolerance spec, adaptive 1D/2D wrappers, composite
Gauss-Legendre panels with geometric grading."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Raised when an integral does not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message if achieved is None else f"{message} (achieved {achieved:.3g})")
        self.achieved = achieved


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and resolution for the integration engine.

    ``rule`` names the scheme: ``"quadpack"`` for adaptive Gauss-Kronrod on
    scalar integrals; moment fields always use composite Gauss-Legendre
    panels with ``order`` points each and ``max_depth`` levels of geometric
    grading toward singular endpoints.
    """

    rel_tol: float = 1e-6
    abs_tol: float = 1e-10
    max_depth: int = 24
    rule: str = "quadpack"
    order: int = 10
    limit: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.order < 2:
            raise ValueError("order must be >= 2")

    def refined(self, factor: float = 1.5) -> "QuadratureSpec":
        return QuadratureSpec(
            self.rel_tol, self.abs_tol, self.max_depth + 4, self.rule,
            int(math.ceil(self.order * factor)), self.limit,
        )


DEFAULT_QUAD = QuadratureSpec()


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(edges, order: int):
    """Composite Gauss-Legendre nodes/weights over consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * x
    weights = half * w
    return nodes.ravel(), weights.ravel()


def graded_edges(a: float, b: float, toward: str, depth: int, ratio: float = 0.25):
    """Panel edges on [a, b] shrinking geometrically toward one end.

    ``toward`` is ``"a"``, ``"b"``, ``"both"`` or ``"none"``.
    """
    if not b > a:
        return np.array([a, b])
    if toward == "none":
        return np.array([a, b])
    if toward == "both":
        mid = 0.5 * (a + b)
        left = graded_edges(a, mid, "a", depth, ratio)
        right = graded_edges(mid, b, "b", depth, ratio)
        return np.concatenate([left, right[1:]])
    span = b - a
    offsets = span * ratio ** np.arange(1, depth + 1)
    if toward == "a":
        inner = a + offsets[::-1]
        return np.concatenate([[a], inner, [b]])
    inner = b - offsets
    return np.concatenate([[a], inner[::-1], [b]])


def quad(f, a, b, spec: QuadratureSpec = DEFAULT_QUAD, points=None, what="integral"):
    """Adaptive scalar integral; raises :class:`QuadratureError` if the error
    estimate exceeds the tolerance by more than a factor of ten."""
    if not b > a:
        return 0.0
    pts = None
    if points is not None:
        pts = sorted(p for p in points if a < p < b)
    val, err = integrate.quad(
        f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.limit, points=pts or None
    )
    tol = max(spec.abs_tol, spec.rel_tol * abs(val))
    if not np.isfinite(val) or err > 10 * tol:
        raise QuadratureError(f"{what} did not converge", achieved=err / max(abs(val), 1e-300))
    return val


def dblquad_x_then_y(f, x0, x1, ylo, yhi, spec: QuadratureSpec = DEFAULT_QUAD, what="double integral"):
    """``int_{x0}^{x1} int_{ylo(x)}^{yhi(x)} f(y, x) dy dx`` via nested adaptive quadrature."""
    if not x1 > x0:
        return 0.0

    def inner(x):
        a, b = ylo(x), yhi(x)
        if not b > a:
            return 0.0
        return integrate.quad(f, a, b, args=(x,), epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                              limit=spec.limit)[0]

    val, err = integrate.quad(inner, x0, x1, epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.limit)
    tol = max(spec.abs_tol, spec.rel_tol * abs(val))
    if not np.isfinite(val) or err > 10 * tol:
        raise QuadratureError(f"{what} did not converge", achieved=err / max(abs(val), 1e-300))
    return val
