"""
numerics.py - Quadrature and special functions
----------------------------------------------
Adaptive Gauss-Kronrod quadrature on [0, inf) through the compactifying map t = x/(1+x),
the exponential integral Ei for negative arguments, and a panelwise Gauss-Legendre
cumulative integral used to tabulate CDFs.

Every routine here is a pure function of its inputs.
"""
import heapq
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np

from utils.errors import DomainError, NonConvergence, NonFinite

logger = logging.getLogger(__name__)

# Configuration constants
DEFAULT_REL_TOL = 1e-8
DEFAULT_ABS_TOL = 1e-12
DEFAULT_MAX_SUBDIVISIONS = 4000
EULER_GAMMA = 0.57721566490153286060651209008240243
EI_SWITCH = 1.0            # |x| at which Ei switches from series to continued fraction
EI_EPS = 1e-16
EI_MAX_TERMS = 500

# Kronrod 15-point rule with embedded 7-point Gauss rule (abscissae in [0, 1], mirrored)
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full 15-node layout: -x0..-x6, 0, x6..x0
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_GAUSS_W = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod abscissae (x1, x3, x5) and the centre
for k, w in zip((1, 3, 5), _WG[:3]):
    _GAUSS_W[k] = w
    _GAUSS_W[14 - k] = w
_GAUSS_W[7] = _WG[3]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive integrators"""
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    max_subdivisions: int = DEFAULT_MAX_SUBDIVISIONS

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.abs_tol >= 0:
            raise DomainError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if int(self.max_subdivisions) < 1:
            raise DomainError(f"max_subdivisions must be >= 1, got {self.max_subdivisions}")

    def tightened(self, factor: float = 0.5) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol * factor, self.abs_tol * factor, self.max_subdivisions)


DEFAULT_SPEC = QuadratureSpec()


def _evaluate(f: Callable, x: np.ndarray) -> np.ndarray:
    """Evaluate f on a node array, accepting vectorized or scalar-only callables"""
    try:
        values = np.asarray(f(x), dtype=float)
        if values.shape != x.shape:
            values = np.broadcast_to(values, x.shape).astype(float)
    except (TypeError, ValueError):
        values = np.array([float(f(float(xi))) for xi in x])
    if not np.all(np.isfinite(values)):
        bad = x[~np.isfinite(values)][0]
        raise NonFinite(f"integrand is not finite at x={bad!r}")
    return values


def _kronrod(g: Callable, a: float, b: float) -> Tuple[float, float]:
    """One G7-K15 panel on [a, b]: (estimate, error)"""
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    values = _evaluate(g, centre + half * _NODES)
    kronrod = half * float(np.dot(_KRONROD_W, values))
    gauss = half * float(np.dot(_GAUSS_W, values))
    return kronrod, abs(kronrod - gauss)


def _adaptive(g: Callable, edges: List[float], spec: QuadratureSpec) -> float:
    heap = []
    total = 0.0
    total_err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        est, err = _kronrod(g, a, b)
        total += est
        total_err += err
        heapq.heappush(heap, (-err, a, b, est))

    subdivisions = 0
    while total_err > max(spec.rel_tol * abs(total), spec.abs_tol):
        if subdivisions >= spec.max_subdivisions:
            raise NonConvergence(
                f"quadrature did not converge after {subdivisions} subdivisions "
                f"(estimate={total:.6g}, error={total_err:.3g})"
            )
        neg_err, a, b, est = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        if not a < mid < b:
            # interval can no longer be split in floating point
            raise NonConvergence(f"quadrature interval [{a!r}, {b!r}] collapsed before convergence")
        left, left_err = _kronrod(g, a, mid)
        right, right_err = _kronrod(g, mid, b)
        total += left + right - est
        total_err += left_err + right_err + neg_err
        heapq.heappush(heap, (-left_err, a, mid, left))
        heapq.heappush(heap, (-right_err, mid, b, right))
        subdivisions += 1

    # re-sum to shed the drift accumulated by the incremental updates
    return math.fsum(item[3] for item in heap)


def integrate_semi_infinite(f: Callable, spec: QuadratureSpec = DEFAULT_SPEC,
                            points: Optional[Iterable[float]] = None) -> float:
    """
    Integrate f over [0, inf).

    The interval is compactified with t = x/(1+x) so dx = dt/(1-t)^2, then
    subdivided adaptively. ``points`` are known breakpoints (e.g. staircase
    thresholds) used as initial panel edges.
    """
    def g(t):
        one_minus = 1.0 - t
        return _evaluate(f, t / one_minus) / (one_minus * one_minus)

    edges = [0.0, 1.0]
    if points is not None:
        inner = sorted({p / (1.0 + p) for p in points if 0.0 < p < math.inf})
        edges = [0.0] + inner + [1.0]
    return _adaptive(g, edges, spec)


def integrate_interval(f: Callable, a: float, b: float, spec: QuadratureSpec = DEFAULT_SPEC,
                       points: Optional[Iterable[float]] = None) -> float:
    """Integrate f over the finite interval [a, b]"""
    if b < a:
        return -integrate_interval(f, b, a, spec, points)
    edges = [a, b]
    if points is not None:
        edges = [a] + sorted({p for p in points if a < p < b}) + [b]
    return _adaptive(lambda x: _evaluate(f, x), edges, spec)


def exp_integral_ei(x: float) -> float:
    """
    Exponential integral Ei(x) for x < 0.

    Convergent power series for |x| <= 1, Lentz continued fraction for E1(-x) beyond.
    """
    x = float(x)
    if not x < 0:
        raise DomainError(f"Ei is only provided for negative arguments, got {x}")
    z = -x
    if z <= EI_SWITCH:
        # Ei(x) = gamma + ln|x| + sum x^k / (k k!)
        total = 0.0
        term = 1.0
        for k in range(1, EI_MAX_TERMS):
            term *= x / k
            contribution = term / k
            total += contribution
            if abs(contribution) < EI_EPS * abs(total):
                break
        return EULER_GAMMA + math.log(z) + total

    # Ei(x) = -E1(-x), E1 from the continued fraction
    return -_lentz_e1_scaled(z) * math.exp(-z)


def exp_integral_e1(z: float) -> float:
    """E1(z) = -Ei(-z) for z > 0"""
    if not z > 0:
        raise DomainError(f"E1 is only provided for positive arguments, got {z}")
    return -exp_integral_ei(-z)


def scaled_exp_integral_e1(z: float) -> float:
    """e^z * E1(z) for z > 0, without overflowing for large z"""
    if not z > 0:
        raise DomainError(f"E1 is only provided for positive arguments, got {z}")
    if z <= EI_SWITCH:
        return math.exp(z) * exp_integral_e1(z)
    return _lentz_e1_scaled(z)


def _lentz_e1_scaled(z: float) -> float:
    """e^z E1(z) for z > 1 by modified Lentz on the even continued fraction"""
    tiny = 1e-300
    b = z + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, EI_MAX_TERMS):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < EI_EPS:
            return h
    raise NonConvergence(f"E1 continued fraction did not converge at z={z}")


def cumulative_on_grid(f: Callable, grid: np.ndarray, order: int = 6) -> np.ndarray:
    """
    Cumulative integral of f from grid[0] to each grid point, one fixed-order
    Gauss-Legendre rule per panel. Returns an array the size of grid, starting at 0.
    """
    grid = np.asarray(grid, dtype=float)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    left = grid[:-1, None]
    half = 0.5 * np.diff(grid)[:, None]
    x = left + half * (nodes[None, :] + 1.0)
    values = _evaluate(f, x.ravel()).reshape(x.shape)
    panels = (half * values * weights[None, :]).sum(axis=1)
    return np.concatenate([[0.0], np.cumsum(panels)])
