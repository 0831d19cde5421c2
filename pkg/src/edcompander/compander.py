"""Source models, point densities, the compressor/expander pair and
finite-N compander quantizers.

Integrals of point-density functionals are evaluated after the change of
variables ``x = m + t**3`` (``m`` the centre of the support).  That maps the
``|x|**(-2/3)`` singularity of the beta_hat = 0 density to a bounded
integrand, so the same code path handles every density the toolkit builds.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DivergenceError, DomainError, PreconditionError
from .numerics import (
    TAIL_CUTOFF,
    TOL_CONSTANT,
    Interval,
    integrate,
    std_normal_pdf,
)

__all__ = [
    "SourceKind",
    "SourceModel",
    "gaussian_source",
    "uniform_source",
    "source_by_name",
    "DensityKind",
    "PointDensity",
    "optimized_point_density",
    "naive_point_density",
    "kkt_mass",
    "density_mass",
    "density_second_moment",
    "bennett_integral",
    "compressor",
    "expander",
    "Quantizer",
    "build_quantizer",
    "finite_n_mse",
    "MAX_LEVELS",
]

#: Largest quantizer the toolkit will materialise.
MAX_LEVELS = 10_000_000


class SourceKind(enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


@dataclass(frozen=True, eq=False)
class SourceModel:
    kind: SourceKind
    pdf: Callable = field(repr=False)
    support: Interval
    second_moment: float

    @property
    def name(self) -> str:
        return self.kind.value


def _uniform_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 0.5, 1.0, 0.0)


_GAUSSIAN = SourceModel(SourceKind.GAUSSIAN, std_normal_pdf, Interval(-math.inf, math.inf), 1.0)
_UNIFORM = SourceModel(SourceKind.UNIFORM, _uniform_pdf, Interval(-0.5, 0.5), 1.0 / 12.0)


def gaussian_source() -> SourceModel:
    """Standard normal source N(0, 1)."""
    return _GAUSSIAN


def uniform_source() -> SourceModel:
    """Uniform source on [-1/2, 1/2]."""
    return _UNIFORM


def source_by_name(name: str) -> SourceModel:
    try:
        kind = SourceKind(name.lower())
    except ValueError:
        raise DomainError(f"unknown source {name!r}; expected 'gaussian' or 'uniform'") from None
    return _GAUSSIAN if kind is SourceKind.GAUSSIAN else _UNIFORM


class DensityKind(enum.Enum):
    OPTIMIZED_KKT = "optimized"
    NAIVE_PANTER_DITE = "naive"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class PointDensity:
    """A point-density function lambda(x) on ``support``.

    ``evaluate`` must accept numpy arrays.  ``params`` records how the
    density was produced, e.g. ``{"c": ..., "beta_hat": ...}``.
    """

    evaluate: Callable = field(repr=False)
    support: Interval
    kind: DensityKind = DensityKind.CUSTOM
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            y = self.evaluate(np.asarray(x, dtype=float))
        return float(y) if np.ndim(y) == 0 else y

    @property
    def centre(self) -> float:
        iv = self.support.truncated()
        return 0.5 * (iv.lower + iv.upper)

    @property
    def half_width(self) -> float:
        return 0.5 * self.support.truncated().width


def _kkt_lambda(source, c, beta_hat):
    """The KKT-stationary lambda(x) as a bare (unnormalised) function."""
    pdf = source.pdf
    scale = 6.0 ** (1.0 / 3.0) * c ** (2.0 / 3.0)

    def lam(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.cbrt(pdf(x)) / (scale * np.cbrt(2.0 * c * x * x + beta_hat))

    return lam


def _t_space_integral(func, support: Interval, abs_tol: float) -> float:
    """Integral of ``func(x)`` over ``support`` via x = m + t**3."""
    iv = support.truncated()
    m = 0.5 * (iv.lower + iv.upper)
    big_t = np.cbrt(0.5 * iv.width)

    def integrand(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            val = func(m + t * t * t) * 3.0 * t * t
        return val

    return integrate(integrand, (-big_t, big_t), abs_tol, points=(0.0,))


def kkt_mass(source: SourceModel, c: float, beta_hat: float, abs_tol: float = TOL_CONSTANT) -> float:
    """Total mass of the KKT density for the given (c, beta_hat)."""
    return _t_space_integral(_kkt_lambda(source, c, beta_hat), source.support, abs_tol)


def optimized_point_density(source: SourceModel, c: float, beta_hat: float) -> PointDensity:
    """lambda(x) = f^(1/3) / (6^(1/3) c^(2/3) (2 c x^2 + beta_hat)^(1/3)).

    Not normalised here; pick ``beta_hat`` with
    :func:`edcompander.analysis.solve_beta_hat` so that it integrates to one.
    """
    if not c > 0:
        raise PreconditionError(f"c must be positive, got {c}")
    if not beta_hat >= 0:
        raise PreconditionError(f"beta_hat must be nonnegative, got {beta_hat}")
    if beta_hat == 0:
        mass = kkt_mass(source, c, 0.0)
        if mass < 1.0 - 1e-8:
            raise PreconditionError(
                f"c = {c} exceeds c_max: the beta_hat = 0 density has mass {mass:.10g} < 1")
    return PointDensity(
        _kkt_lambda(source, c, beta_hat),
        source.support,
        DensityKind.OPTIMIZED_KKT,
        {"c": float(c), "beta_hat": float(beta_hat), "source": source.name},
    )


def naive_point_density(source: SourceModel) -> PointDensity:
    """Panter-Dite density f^(1/3) / integral(f^(1/3))."""
    pdf = source.pdf
    norm = _t_space_integral(lambda x: np.cbrt(pdf(x)), source.support, 1e-13)

    def lam(x):
        return np.cbrt(pdf(np.asarray(x, dtype=float))) / norm

    return PointDensity(lam, source.support, DensityKind.NAIVE_PANTER_DITE,
                        {"source": source.name, "norm": norm})


def density_mass(density: PointDensity, abs_tol: float = TOL_CONSTANT) -> float:
    return _t_space_integral(density.evaluate, density.support, abs_tol)


def density_second_moment(density: PointDensity, abs_tol: float = TOL_CONSTANT) -> float:
    """Second moment of lambda, i.e. integral of x^2 lambda(x)."""
    lam = density.evaluate
    return _t_space_integral(lambda x: x * x * lam(x), density.support, abs_tol)


def bennett_integral(density: PointDensity, source: SourceModel,
                     abs_tol: float = TOL_CONSTANT) -> float:
    """Bennett integral: integral of f(x) / lambda(x)^2 over the source support."""
    lam, pdf = density.evaluate, source.pdf

    def ratio(x):
        fx = pdf(x)
        lx = lam(x)
        if np.any((fx > 0) & ~(lx > 0)):
            raise DivergenceError("point density vanishes where the source pdf is positive")
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(fx > 0, fx / np.square(lx), 0.0)

    return _t_space_integral(ratio, source.support, abs_tol)


# --------------------------------------------------------------------------
# compressor / expander

_TABLE_PANELS = 4096
_GL_U, _GL_W = np.polynomial.legendre.leggauss(10)
_GL_U = 0.5 * (_GL_U + 1.0)
_GL_W = 0.5 * _GL_W


class _CumulativeTable:
    """G tabulated on a uniform grid in t, where x = centre + t**3."""

    def __init__(self, density: PointDensity):
        self.density = density
        self.centre = density.centre
        self.t_max = float(np.cbrt(density.half_width))
        self.h = 2.0 * self.t_max / _TABLE_PANELS
        self.knots = -self.t_max + self.h * np.arange(_TABLE_PANELS + 1)
        panel = self._partial(self.knots[:-1], self.knots[1:])
        self.cum = np.concatenate([[0.0], np.cumsum(panel)])

    def g(self, t):
        """dG/dt."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.density.evaluate(self.centre + t * t * t) * 3.0 * t * t

    def _partial(self, lo, hi):
        width = hi - lo
        nodes = lo[:, None] + width[:, None] * _GL_U[None, :]
        vals = self.g(nodes.ravel()).reshape(nodes.shape)
        vals = np.where(width[:, None] > 0, vals, 0.0)
        return width * (vals @ _GL_W)

    def panel_of(self, t):
        k = np.floor((t + self.t_max) / self.h).astype(np.int64)
        return np.clip(k, 0, _TABLE_PANELS - 1)

    def forward(self, x):
        iv = self.density.support
        x = np.clip(x, max(iv.lower, -TAIL_CUTOFF), min(iv.upper, TAIL_CUTOFF))
        t = np.cbrt(x - self.centre)
        k = self.panel_of(t)
        return self.cum[k] + self._partial(self.knots[k], t)

    def inverse(self, u):
        k = np.searchsorted(self.cum, u, side="right") - 1
        k = np.clip(k, 0, _TABLE_PANELS - 1)
        lo, hi = self.knots[k].copy(), self.knots[k + 1].copy()
        base = self.cum[k]
        span = self.cum[k + 1] - base
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(span > 0, (u - base) / span, 0.5)
        t = lo + np.clip(frac, 0.0, 1.0) * (hi - lo)
        for _ in range(100):
            resid = base + self._partial(self.knots[k], t) - u
            lo = np.where(resid < 0, t, lo)
            hi = np.where(resid > 0, t, hi)
            deriv = self.g(t)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = t - resid / deriv
            bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
            t_new = np.where(bad, 0.5 * (lo + hi), step)
            done = (np.abs(resid) <= 1e-15) | (hi - lo <= 4e-16 * (1.0 + np.abs(t)))
            t = np.where(done, t, t_new)
            if done.all():
                break
        return self.centre + t * t * t


@functools.lru_cache(maxsize=64)
def _table(density: PointDensity) -> _CumulativeTable:
    return _CumulativeTable(density)


def _scalar_or_array(y, like):
    return float(y) if np.ndim(like) == 0 else y


def compressor(density: PointDensity) -> Callable:
    """G(x) = integral of lambda from the lower end of the support to x."""
    table = _table(density)

    def G(x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = table.forward(arr)
        return _scalar_or_array(out[0] if np.ndim(x) == 0 else out.reshape(np.shape(x)), x)

    return G


def expander(density: PointDensity) -> Callable:
    """G^{-1}: [0, 1] -> support, the inverse of :func:`compressor`."""
    table = _table(density)
    lower, upper = density.support.lower, density.support.upper

    def G_inv(u):
        arr = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any(~((arr >= 0.0) & (arr <= 1.0))):
            raise DomainError("expander argument must lie in [0, 1]")
        # even densities: solve on the lower half and mirror, so levels come out exactly symmetric
        even = density.kind is not DensityKind.CUSTOM
        upper_half = even & (arr > 0.5)
        v = np.where(upper_half, 1.0 - arr, arr)
        out = np.empty_like(arr)
        for s in range(0, arr.size, 1 << 16):
            out[s:s + (1 << 16)] = table.inverse(v[s:s + (1 << 16)])
        if even:
            c = density.centre
            out = np.where(upper_half, 2.0 * c - out, np.where(arr == 0.5, c, out))
        out = np.where(arr == 0.0, lower, np.where(arr == 1.0, upper, out))
        return _scalar_or_array(out[0] if np.ndim(u) == 0 else out.reshape(np.shape(u)), u)

    return G_inv


# --------------------------------------------------------------------------
# quantizers


@dataclass(frozen=True, eq=False)
class Quantizer:
    levels: np.ndarray
    boundaries: np.ndarray

    def __post_init__(self):
        levels = np.array(self.levels, dtype=float)
        bounds = np.array(self.boundaries, dtype=float)
        if levels.ndim != 1 or bounds.shape != (levels.size + 1,):
            raise PreconditionError("need N levels and N + 1 boundaries")
        if levels.size < 2:
            raise PreconditionError("a quantizer needs at least two levels")
        if np.any(np.diff(bounds) <= 0):
            raise PreconditionError("boundaries must be strictly increasing")
        if np.any((levels <= bounds[:-1]) | (levels >= bounds[1:])):
            raise PreconditionError("each level must lie strictly inside its cell")
        levels.flags.writeable = False
        bounds.flags.writeable = False
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "boundaries", bounds)

    @property
    def n_levels(self) -> int:
        return int(self.levels.size)

    def cell_index(self, x):
        """Index of the cell containing x (cells are [b_i, b_{i+1}))."""
        return np.searchsorted(self.boundaries[1:-1], x, side="right")

    def quantize(self, x):
        return self.levels[self.cell_index(x)]


def build_quantizer(density: PointDensity, n_levels: int) -> Quantizer:
    """Compander quantizer with levels G^{-1}((i - 1/2)/N) and edges G^{-1}(i/N)."""
    n = int(n_levels)
    if n < 2:
        raise PreconditionError("n_levels must be at least 2")
    if n > MAX_LEVELS:
        raise PreconditionError(f"n_levels = {n} exceeds the budget of {MAX_LEVELS}")
    g_inv = expander(density)
    levels = g_inv((np.arange(n) + 0.5) / n)
    inner = g_inv(np.arange(1, n) / n)
    bounds = np.concatenate([[density.support.lower], inner, [density.support.upper]])
    return Quantizer(levels, bounds)


_CELL_NODES, _CELL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def finite_n_mse(quantizer: Quantizer, source: SourceModel) -> float:
    """Noiseless quantization MSE, summed cell by cell.

    Cells with an infinite edge (and every cell of a small quantizer) go
    through adaptive quadrature; the rest use a fixed 20-point rule on four
    sub-panels per cell.
    """
    pdf = source.pdf
    levels, bounds = quantizer.levels, quantizer.boundaries
    n = quantizer.n_levels

    def cell(i):
        lv = levels[i]
        return integrate(lambda x: (x - lv) ** 2 * pdf(x), (bounds[i], bounds[i + 1]), 1e-15,
                         rel_tol=1e-12)

    if n <= 64:
        return float(sum(cell(i) for i in range(n)))

    total = cell(0) + cell(n - 1)
    lo, hi = bounds[1:-2], bounds[2:-1]
    lv = levels[1:-1]
    sub = 4
    acc = np.zeros_like(lv)
    for j in range(sub):
        a = lo + (hi - lo) * j / sub
        b = lo + (hi - lo) * (j + 1) / sub
        half = 0.5 * (b - a)
        x = 0.5 * (a + b)[:, None] + half[:, None] * _CELL_NODES[None, :]
        vals = (x - lv[:, None]) ** 2 * pdf(x)
        acc += half * (vals @ _CELL_WEIGHTS)
    return float(total + acc.sum())
