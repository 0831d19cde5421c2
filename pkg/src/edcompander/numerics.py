"""Small numerical kernel: quadrature, bracketed roots, golden-section search,
standard-normal CDF/quantile and the gamma function.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import special

from .errors import DomainError, NumericalFailure, PreconditionError

__all__ = [
    "Interval",
    "TAIL_CUTOFF",
    "integrate",
    "find_root",
    "RootResult",
    "minimize_scalar",
    "std_normal_cdf",
    "std_normal_logcdf",
    "std_normal_quantile",
    "std_normal_pdf",
    "gamma_function",
]

#: Infinite integration limits are replaced by +-TAIL_CUTOFF.  Every integrand
#: in the toolkit carries at least a exp(-x**2/6) factor, i.e. < exp(-266) here.
TAIL_CUTOFF = 40.0

#: Default absolute tolerances: constants vs. integrals inside optimisation loops.
TOL_CONSTANT = 1e-10
TOL_LOOP = 1e-8

_GL_ORDER = 10
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)
# nodes/weights mapped to [0, 1]
_GL_U = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Interval:
    """An interval on the extended real line; either end may be infinite."""

    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if math.isnan(lo) or math.isnan(hi) or not lo < hi:
            raise DomainError(f"invalid interval ({lo}, {hi})")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def truncated(self, cutoff: float = TAIL_CUTOFF) -> "Interval":
        """Replace infinite ends by +-cutoff."""
        return Interval(max(self.lower, -cutoff), min(self.upper, cutoff))

    def __contains__(self, x) -> bool:
        return self.lower <= x <= self.upper

    def __iter__(self):
        yield self.lower
        yield self.upper


def _as_interval(domain) -> Interval:
    if isinstance(domain, Interval):
        return domain
    lo, hi = domain
    return Interval(lo, hi)


def _smoothstep_map(s, a, b):
    """x = a + (b - a) q(s) with q(s) = s^3 (10 - 15 s + 6 s^2) and dx/ds.

    q has a triple zero at both ends, which cancels |x - a|**(-2/3).  The
    upper half is evaluated as b - (b - a) q(1 - s) so x never rounds onto b.
    """
    r = np.minimum(s, 1.0 - s)
    q = r * r * r * (10.0 - 15.0 * r + 6.0 * r * r)
    x = np.where(s < 0.5, a + (b - a) * q, b - (b - a) * q)
    dx = 30.0 * s * s * (1.0 - s) ** 2 * (b - a)
    return x, dx


def _evaluate(f, x):
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    return y


def _panel_sums(h, left, right):
    """Gauss-Legendre estimates on a batch of panels [left_i, right_i]."""
    width = right - left
    nodes = left[:, None] + width[:, None] * _GL_U[None, :]
    vals = h(nodes.ravel()).reshape(nodes.shape)
    if not np.all(np.isfinite(vals)):
        bad = nodes[~np.isfinite(vals)][0]
        raise NumericalFailure(f"integrand is not finite at x-node {bad!r}")
    return width * (vals @ _GL_W)


def integrate(
    f: Callable,
    domain,
    abs_tol: float = TOL_CONSTANT,
    *,
    rel_tol: float = 0.0,
    points: Sequence[float] = (),
    singular_ends: bool = False,
    initial_panels: int = 8,
    max_panels: int = 200_000,
) -> float:
    """Adaptive Gauss-Legendre quadrature of ``f`` over ``domain``.

    ``f`` must accept a 1-D numpy array.  Infinite limits are truncated at
    ``TAIL_CUTOFF``.  The domain is split at ``points``; with
    ``singular_ends=True`` every piece is remapped through a quintic
    smoothstep so that integrable ``|x - a|**(-2/3)``-type singularities at
    piece ends become bounded.

    Each panel is compared against its two halves and refined until the
    summed discrepancy is below ``max(abs_tol, rel_tol * |I|)``.

    Raises NumericalFailure (with ``estimate``/``error_bound``) when the
    panel budget is exhausted.
    """
    if abs_tol <= 0 and rel_tol <= 0:
        raise PreconditionError("need abs_tol > 0 or rel_tol > 0")
    dom = _as_interval(domain).truncated()
    cuts = [dom.lower] + sorted(p for p in points if dom.lower < p < dom.upper) + [dom.upper]

    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if singular_ends:
            def h(s, a=a, b=b):
                x, dx = _smoothstep_map(s, a, b)
                return _evaluate(f, x) * dx
            lo, hi = 0.0, 1.0
        else:
            def h(x):
                return _evaluate(f, x)
            lo, hi = a, b
        share = (b - a) / dom.width
        total += _adaptive(h, lo, hi, abs_tol * share, rel_tol, initial_panels, max_panels)
    return float(total)


def _adaptive(h, lo, hi, abs_tol, rel_tol, initial_panels, max_panels):
    edges = np.linspace(lo, hi, initial_panels + 1)
    left, right = edges[:-1], edges[1:]
    whole = _panel_sums(h, left, right)
    length = hi - lo
    accepted = 0.0
    accepted_err = 0.0
    used = initial_panels
    while True:
        mid = 0.5 * (left + right)
        q_left = _panel_sums(h, left, mid)
        q_right = _panel_sums(h, mid, right)
        refined = q_left + q_right
        err = np.abs(refined - whole)
        estimate = accepted + refined.sum()
        tol = max(abs_tol, rel_tol * abs(estimate))
        ok = err <= tol * (right - left) / length
        accepted += refined[ok].sum()
        accepted_err += err[ok].sum()
        if ok.all():
            return accepted
        used += 2 * int((~ok).sum())
        if used > max_panels:
            raise NumericalFailure(
                "quadrature did not converge within the panel budget",
                estimate=float(estimate),
                error_bound=float(accepted_err + err.sum()),
            )
        keep = ~ok
        left = np.concatenate([left[keep], mid[keep]])
        right = np.concatenate([mid[keep], right[keep]])
        whole = np.concatenate([q_left[keep], q_right[keep]])


class RootResult(NamedTuple):
    root: float
    bracket: tuple
    iterations: int


def find_root(g: Callable[[float], float], bracket, tol: float = 1e-12, *,
              max_iter: int = 300, full_output: bool = False):
    """Bracketed root of ``g`` by Illinois regula falsi with bisection fallback.

    Any step that fails to halve the bracket forces a bisection on the next
    step, so the bracket width at least halves every two iterations.
    """
    iv = _as_interval(bracket)
    if not iv.is_finite:
        raise PreconditionError("root bracket must have finite endpoints")
    a, b = iv.lower, iv.upper
    fa, fb = float(g(a)), float(g(b))
    if fa == 0.0:
        return RootResult(a, (a, a), 0) if full_output else a
    if fb == 0.0:
        return RootResult(b, (b, b), 0) if full_output else b
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        raise PreconditionError(f"g has the same sign at both ends of ({a}, {b}): {fa}, {fb}")

    # weighted copies used by the Illinois modification
    wa, wb = fa, fb
    side = 0
    bisect = False
    it = 0
    for it in range(1, max_iter + 1):
        width = b - a
        if width <= tol:
            break
        x = 0.5 * (a + b)
        if not bisect:
            cand = (a * wb - b * wa) / (wb - wa)
            if a < cand < b:
                x = cand
        fx = float(g(x))
        if fx == 0.0:
            return RootResult(x, (x, x), it) if full_output else x
        if math.copysign(1.0, fx) == math.copysign(1.0, fa):
            a, fa, wa = x, fx, fx
            if side == -1:
                wb *= 0.5
            side = -1
        else:
            b, fb, wb = x, fx, fx
            if side == 1:
                wa *= 0.5
            side = 1
        bisect = (b - a) > 0.5 * width
    else:
        if b - a > tol:
            raise NumericalFailure("root finder exhausted its iteration budget",
                                   estimate=0.5 * (a + b), error_bound=b - a)
    root = a if abs(fa) <= abs(fb) else b
    return RootResult(root, (a, b), it) if full_output else root


def minimize_scalar(h: Callable[[float], float], domain, tol: float = 1e-6):
    """Golden-section search for the minimum of a unimodal ``h``.

    Returns ``(argmin, min_value)``; the argmin is the best point evaluated
    once the bracket is narrower than ``tol``.
    """
    iv = _as_interval(domain)
    if not iv.is_finite:
        raise PreconditionError("minimisation domain must be finite")
    a, b = iv.lower, iv.upper
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    hc, hd = h(c), h(d)
    best = min((hc, c), (hd, d))
    while b - a > tol:
        if hc < hd:
            b, d, hd = d, c, hc
            c = b - _INV_PHI * (b - a)
            hc = h(c)
            best = min(best, (hc, c))
        else:
            a, c, hc = c, d, hd
            d = a + _INV_PHI * (b - a)
            hd = h(d)
            best = min(best, (hd, d))
    for end in (iv.lower, iv.upper):
        # a monotone objective drives the bracket onto an endpoint
        if abs(end - best[1]) <= tol:
            he = h(end)
            if he < best[0]:
                best = (he, end)
    return best[1], best[0]


def std_normal_pdf(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


def std_normal_cdf(x):
    """Phi(x); works on scalars and arrays."""
    y = special.ndtr(x)
    return float(y) if np.ndim(y) == 0 else y


def std_normal_logcdf(x):
    """log Phi(x), accurate deep in the lower tail."""
    y = special.log_ndtr(x)
    return float(y) if np.ndim(y) == 0 else y


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open unit interval."""
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError("normal quantile needs p in (0, 1)")
    y = special.ndtri(arr)
    return float(y) if np.ndim(y) == 0 else y


def gamma_function(x: float) -> float:
    if not x > 0:
        raise DomainError(f"gamma_function is defined here for x > 0, got {x}")
    return math.gamma(x)
