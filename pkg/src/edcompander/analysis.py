"""Design optimisation and closed-form bounds.

Covers the beta_hat(c) normalisation, the end-to-end coefficient Omega(c)
and its minimisation, naive (Panter-Dite) baselines, outage-probability
bounds and the exact error probability of orthogonal signalling, the
exponent max-min problems, and the uniform-quantizer baseline of Knopp et al.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .compander import (
    PointDensity,
    SourceKind,
    SourceModel,
    bennett_integral,
    density_second_moment,
    kkt_mass,
    naive_point_density,
    optimized_point_density,
)
from .errors import (
    InternalConsistencyError,
    OutOfRegimeError,
    PreconditionError,
    UnimodalityError,
)
from .numerics import (
    TOL_CONSTANT,
    TOL_LOOP,
    find_root,
    gamma_function,
    integrate,
    minimize_scalar,
    std_normal_logcdf,
    std_normal_pdf,
)

LN2 = math.log(2.0)

#: Lower end of the c search interval.
C_SEARCH_MIN = 0.05
OMEGA_REL_TOL = 1e-6
UNIMODALITY_GRID = 64


# --------------------------------------------------------------------------
# design constants


def c_max_closed_form(source: SourceModel) -> float:
    if source.kind is SourceKind.GAUSSIAN:
        return (2.0**2 * 3.0**5 / math.pi) ** (1.0 / 6.0) * gamma_function(7.0 / 6.0)
    # integral of |x|^(-2/3) over [-1/2, 1/2] is 6 * 2^(-1/3)
    return 6.0 * 2.0 ** (-1.0 / 3.0) / 12.0 ** (1.0 / 3.0)


def c_max_quadrature(source: SourceModel) -> float:
    # the beta_hat = 0 mass scales as 1/c, so c_max is the mass at c = 1
    return kkt_mass(source, 1.0, 0.0, abs_tol=1e-12)


def c_max(source: SourceModel) -> float:
    """Largest c whose beta_hat = 0 density still has mass >= 1.

    Closed form and quadrature must agree to 1e-6.
    """
    closed = c_max_closed_form(source)
    quad = c_max_quadrature(source)
    if abs(closed - quad) > 1e-6:
        raise InternalConsistencyError(
            f"c_max closed form {closed!r} disagrees with quadrature {quad!r}")
    return closed


def solve_beta_hat(source: SourceModel, c: float, tol: float = TOL_CONSTANT) -> float:
    """beta_hat >= 0 normalising the KKT density at coefficient c."""
    if not c > 0:
        raise PreconditionError(f"c must be positive, got {c}")
    cmax = c_max(source)
    if c > cmax * (1.0 + 1e-12):
        raise PreconditionError(f"c = {c} exceeds c_max = {cmax}: no nonnegative beta_hat")
    if c >= cmax:
        return 0.0

    def excess(b):
        return kkt_mass(source, c, b, abs_tol=tol) - 1.0

    upper = 16.0
    while excess(upper) > 0:
        upper *= 2.0
        if upper > 1e12:
            raise PreconditionError(f"could not bracket beta_hat for c = {c}")
    return find_root(excess, (0.0, upper), tol=1e-13 * upper)


@dataclass(frozen=True, eq=False)
class CompanderDesign:
    source: SourceModel
    c: float
    beta_hat: float
    density: PointDensity
    omega: float
    second_moment_of_density: float


def _omega_parts(source, c, tol):
    beta = solve_beta_hat(source, c, tol=tol)
    density = optimized_point_density(source, c, beta)
    m2 = density_second_moment(density, abs_tol=tol)
    return beta, density, m2


def omega_generic(source: SourceModel, c: float, density: PointDensity,
                  tol: float = TOL_CONSTANT) -> float:
    """2c (sigma^2 + m2) + Bennett / (12 c^2) for an arbitrary point density."""
    m2 = density_second_moment(density, abs_tol=tol)
    bennett = bennett_integral(density, source, abs_tol=tol)
    return 2.0 * c * (source.second_moment + m2) + bennett / (12.0 * c * c)


def omega_kkt(source: SourceModel, c: float, beta_hat: float, m2: float) -> float:
    """Omega after substituting the KKT identity: 2c sigma^2 + 3c m2 + beta_hat / 2."""
    return 2.0 * c * source.second_moment + 3.0 * c * m2 + 0.5 * beta_hat


def omega(source: SourceModel, c: float, tol: float = TOL_CONSTANT, *, check: bool = True) -> float:
    """Omega(c) for the optimised density.

    With ``check`` both forms are evaluated and must agree to 1e-6 relative.
    """
    beta, density, m2 = _omega_parts(source, c, tol)
    simplified = omega_kkt(source, c, beta, m2)
    if check:
        generic = omega_generic(source, c, density, tol)
        if abs(generic - simplified) > OMEGA_REL_TOL * abs(simplified):
            raise InternalConsistencyError(
                f"Omega forms disagree at c = {c}: {generic!r} vs {simplified!r}")
    return simplified


def check_unimodal(values) -> bool:
    """True if ``values`` decreases then increases (ties within 1e-9 relative allowed)."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    slack = 1e-9 * np.abs(v[1:])
    k = int(np.argmin(v))
    return bool(np.all(d[:k] <= slack[:k]) and np.all(d[k:] >= -slack[k:]))


def optimize_design(source: SourceModel, c_min: float = C_SEARCH_MIN,
                    tol: float = 1e-6) -> CompanderDesign:
    """Minimise Omega over (c_min, c_max] by golden section.

    Omega is first sampled on a 64-point grid and checked for unimodality.
    """
    cmax = c_max(source)
    grid = np.linspace(c_min, cmax, UNIMODALITY_GRID)
    values = [omega(source, c, TOL_LOOP, check=False) for c in grid]
    if not check_unimodal(values):
        raise UnimodalityError("Omega(c) is not unimodal on the check grid",
                               grid=list(zip(grid.tolist(), values)))
    k = int(np.argmin(values))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    c_opt, _ = minimize_scalar(lambda c: omega(source, c, TOL_LOOP, check=False), (lo, hi), tol)
    return design_at(source, c_opt)


def design_at(source: SourceModel, c: float) -> CompanderDesign:
    beta, density, m2 = _omega_parts(source, c, TOL_CONSTANT)
    om = omega(source, c, TOL_CONSTANT)
    return CompanderDesign(source, float(c), float(beta), density, om, m2)


# --------------------------------------------------------------------------
# naive baseline


@dataclass(frozen=True)
class DispersionReport:
    source_kind: str
    c_opt: float
    beta_hat_opt: float
    omega_opt: float
    dispersion_lower_bound: float
    naive_c: float
    naive_omega: float
    naive_dispersion: float
    gap_db: float


@dataclass(frozen=True, eq=False)
class NaiveDesign:
    """Panter-Dite density with its own best c."""

    source: SourceModel
    c: float
    density: PointDensity
    omega: float
    second_moment_of_density: float


def naive_design(source: SourceModel) -> NaiveDesign:
    """With lambda fixed, Omega = a c + b / c^2, minimised in closed form."""
    density = naive_point_density(source)
    m2 = density_second_moment(density)
    a = 2.0 * (source.second_moment + m2)
    b = bennett_integral(density, source) / 12.0
    c = (2.0 * b / a) ** (1.0 / 3.0)
    return NaiveDesign(source, c, density, 1.5 * a * c, m2)


def naive_design_report(source: SourceModel, design: CompanderDesign | None = None) -> DispersionReport:
    if design is None:
        design = optimize_design(source)
    naive = naive_design(source)
    return DispersionReport(
        source_kind=source.name,
        c_opt=design.c,
        beta_hat_opt=design.beta_hat,
        omega_opt=design.omega,
        dispersion_lower_bound=-math.log(design.omega),
        naive_c=naive.c,
        naive_omega=naive.omega,
        naive_dispersion=-math.log(naive.omega),
        gap_db=10.0 * math.log10(naive.omega / design.omega),
    )


def outage_conditional_bound(design) -> float:
    """Large-N bound on E[(X - Xhat)^2 | outage]: sigma^2 + integral x^2 lambda."""
    return design.source.second_moment + design.second_moment_of_density


def end_to_end_bound(design, gamma: float) -> float:
    return design.omega * math.exp(-gamma / 6.0)


# --------------------------------------------------------------------------
# channel


def outage_probability_bound(gamma: float, n_levels: int) -> float:
    """Two-branch upper bound on the ML decoding error of N orthogonal signals."""
    ln_n = math.log(n_levels)
    if ln_n > gamma / 2.0:
        raise OutOfRegimeError(f"ln N = {ln_n:.6g} exceeds gamma / 2 = {gamma / 2:.6g}")
    if ln_n < gamma / 8.0:
        return 2.0 * math.exp(ln_n - gamma / 4.0)
    return 2.0 * math.exp(-0.5 * (math.sqrt(gamma) - math.sqrt(2.0 * ln_n)) ** 2)


def exact_orthogonal_error_prob(gamma: float, n_levels: int) -> float:
    """P[error] = 1 - integral phi(t) Phi(t + sqrt(gamma))^(N-1) dt.

    Integrated in the complementary form phi(t) (1 - Phi^(N-1)) so that
    small error probabilities keep their relative accuracy.
    """
    if n_levels < 1 or gamma < 0:
        raise PreconditionError("need n_levels >= 1 and gamma >= 0")
    if n_levels == 1:
        return 0.0
    root = math.sqrt(gamma)
    k = n_levels - 1

    def integrand(t):
        log_cdf = std_normal_logcdf(t + root)
        return std_normal_pdf(t) * -np.expm1(k * log_cdf)

    # the mass sits near t = -sqrt(gamma)/2 for large gamma, near 0 otherwise
    lo = -0.5 * root - 12.0
    value = integrate(integrand, (lo, 12.0), abs_tol=1e-300, rel_tol=1e-11,
                      points=(-0.5 * root,), initial_panels=16)
    return min(max(value, 0.0), 1.0)


class Regime(enum.Enum):
    BELOW_ONE_EIGHTH = "tau < 1/8"
    MIDDLE = "1/8 <= tau <= 1/2"


@dataclass(frozen=True)
class ExponentResult:
    tau_opt: float
    exponent: float
    regime: Regime


def outage_exponent(tau: float) -> float:
    if tau < 0.125:
        return 0.25 - tau
    return 0.5 * (1.0 - math.sqrt(2.0 * tau)) ** 2


def scheme_exponent() -> ExponentResult:
    """max over tau of min(2 tau, outage exponent).

    2 tau increases and the outage exponent decreases, so the optimum is
    where they cross.
    """
    tau = find_root(lambda t: 2.0 * t - outage_exponent(t), (0.0, 0.5), tol=1e-15)
    regime = Regime.BELOW_ONE_EIGHTH if tau < 0.125 else Regime.MIDDLE
    return ExponentResult(tau, min(2.0 * tau, outage_exponent(tau)), regime)


def num_levels(c: float, gamma: float) -> int:
    """N = round(c e^(gamma/12)), at least 2."""
    if not c > 0 or gamma < 0:
        raise PreconditionError("need c > 0 and gamma >= 0")
    value = c * math.exp(gamma / 12.0) if gamma < 12.0 * 700 else math.inf
    if not value < 2.0**62:
        raise OverflowError(f"N = c e^(gamma/12) overflows at gamma = {gamma}")
    return max(2, int(math.floor(value + 0.5)))


# --------------------------------------------------------------------------
# Knopp et al. uniform-quantizer baseline


@dataclass(frozen=True)
class KnoppParams:
    b: float
    rho: float
    integer_b: bool = True

    def __post_init__(self):
        if (self.integer_b and int(self.b) != self.b) or self.b < 2:
            raise PreconditionError(f"b must be an integer >= 2, got {self.b}")
        if not 0.0 <= self.rho <= 1.0:
            raise PreconditionError(f"rho must lie in [0, 1], got {self.rho}")

    @property
    def delta(self) -> float:
        return 2.0 * math.sqrt(self.b * LN2)


def _knopp_log(gamma, b, rho):
    """Natural log of the Knopp bound; vectorised over b and rho."""
    b = np.asarray(b, dtype=float)
    rho = np.asarray(rho, dtype=float)
    bl = b * LN2
    root = np.sqrt(2.0 * math.pi * bl)
    # quantization term: 2^(-2b) (1/sqrt(2 pi b ln2) + 4 b ln2)
    log_q = -2.0 * bl + np.log(1.0 / root + 4.0 * bl)
    # outage term: 2^(b rho - gamma rho / (2 ln2 (rho + 1))) (16 b ln2 + (16 b ln2 + 1) 2^(-2b) / root)
    log_e = rho * bl - gamma * rho / (2.0 * (rho + 1.0)) + np.log(
        16.0 * bl + (16.0 * bl + 1.0) * np.exp(-2.0 * bl) / root)
    return np.logaddexp(log_q, log_e)


def knopp_distortion_bound(gamma: float, params: KnoppParams) -> float:
    return float(np.exp(_knopp_log(gamma, params.b, params.rho)))


def knopp_optimize(gamma: float, b_max: int = 4096, rho_points: int = 1024,
                   integer_b: bool = True):
    """Minimise the Knopp bound over b in [2, b_max] and rho in [0, 1].

    b is searched exhaustively over the integers and rho on a uniform grid,
    then rho once more on a fine grid spanning the neighbouring cells of the
    best point.  With ``integer_b=False`` b is additionally relaxed to a real
    number by golden section around the best integer (the resulting
    ``KnoppParams.b`` is then fractional).
    Returns ``(KnoppParams, value)``.
    """
    if not gamma > 0:
        raise PreconditionError("gamma must be positive")
    bs = np.arange(2, b_max + 1, dtype=float)
    rhos = np.linspace(0.0, 1.0, rho_points)
    table = _knopp_log(gamma, bs[:, None], rhos[None, :])
    i, j = np.unravel_index(np.argmin(table), table.shape)
    fine = np.linspace(rhos[max(j - 1, 0)], rhos[min(j + 1, rho_points - 1)], rho_points)
    b_near = bs[max(i - 1, 0): i + 2]
    table2 = _knopp_log(gamma, b_near[:, None], fine[None, :])
    i2, j2 = np.unravel_index(np.argmin(table2), table2.shape)
    if table2[i2, j2] <= table[i, j]:
        b_best, rho_best, log_best = b_near[i2], fine[j2], table2[i2, j2]
    else:
        b_best, rho_best, log_best = bs[i], rhos[j], table[i, j]
    if integer_b:
        return KnoppParams(int(b_best), float(rho_best)), float(np.exp(log_best))

    def best_over_rho(b):
        return float(np.min(_knopp_log(gamma, b, fine)))

    lo, hi = max(2.0, b_best - 1.0), min(float(b_max), b_best + 1.0)
    b_real, log_real = minimize_scalar(best_over_rho, (lo, hi), 1e-9)
    if log_real < log_best:
        rho_real = float(fine[np.argmin(_knopp_log(gamma, b_real, fine))])
        return KnoppParams(b_real, rho_real, integer_b=False), float(np.exp(log_real))
    return KnoppParams(b_best, float(rho_best), integer_b=False), float(np.exp(log_best))


def knopp_analytic_bound(gamma: float) -> float:
    """Knopp bound at b = gamma / (12 ln 2), rho = 1."""
    if not gamma > 0:
        raise PreconditionError("gamma must be positive")
    e = math.exp(-gamma / 6.0)
    return e * (math.sqrt(6.0) / math.sqrt(math.pi * gamma) * (1.0 + e * (4.0 * gamma / 3.0 + 1.0))
                + 5.0 * gamma / 3.0)


def _knopp_theta(b_prime, rho):
    return min(2.0 * b_prime * LN2, rho / (2.0 * (rho + 1.0)) - rho * b_prime * LN2)


def knopp_exponent(tol: float = 1e-10):
    """max over (b', rho) of min(2 b' ln2, rho / (2 (rho + 1)) - rho b' ln2).

    For fixed rho the first argument increases and the second decreases in
    b', so the inner max is at their crossing; the outer max over rho is a
    golden-section search.  Returns ``(b_prime, rho, theta)``.
    """

    def crossing(rho):
        if rho == 0.0:
            return 0.0
        g = lambda bp: 2.0 * bp * LN2 - (rho / (2.0 * (rho + 1.0)) - rho * bp * LN2)
        return find_root(g, (0.0, 1.0), tol=1e-15)

    rho, neg = minimize_scalar(lambda r: -_knopp_theta(crossing(r), r), (0.0, 1.0), tol)
    b_prime = crossing(rho)
    return b_prime, rho, _knopp_theta(b_prime, rho)
