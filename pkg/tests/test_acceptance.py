"""Acceptance criteria, one test per criterion.

Each test prints a single ``CRITERION n: PASS|FAIL`` line (also repeated in
the pytest terminal summary) followed by the individual sub-checks.
Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from edcompander.analysis import (
    LN2,
    c_max,
    c_max_closed_form,
    c_max_quadrature,
    design_at,
    end_to_end_bound,
    exact_orthogonal_error_prob,
    knopp_analytic_bound,
    knopp_exponent,
    knopp_optimize,
    naive_design_report,
    omega,
    optimize_design,
    outage_exponent,
    outage_probability_bound,
    scheme_exponent,
)
from edcompander.compander import (
    bennett_integral,
    build_quantizer,
    density_second_moment,
    finite_n_mse,
    gaussian_source,
    uniform_source,
)
from edcompander.errors import BoundViolation
from edcompander.simulator import (
    DesignChoice,
    SimConfig,
    SimMode,
    conditional_outage_check,
    run_simulation,
    sweep,
)


class Checks:
    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.items = []

    def near(self, label, got, want, tol):
        self.add(label, abs(got - want) <= tol, f"{got:.8g} vs {want:.8g} +- {tol:g}")

    def add(self, label, ok, detail=""):
        self.items.append((label, bool(ok), detail))

    def info(self, label, detail):
        self.items.append((label, None, detail))

    def finish(self):
        ok = all(flag is not False for _, flag, _ in self.items)
        line = f"CRITERION {self.number}: {'PASS' if ok else 'FAIL'}  {self.title}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        for label, flag, detail in self.items:
            tag = "info" if flag is None else ("ok" if flag else "FAILED")
            print(f"    [{tag}] {label}: {detail}")
        failed = [label for label, flag, _ in self.items if flag is False]
        assert not failed, f"criterion {self.number} failed: {failed}"


def test_criterion_01_gaussian_constants():
    ch = Checks(1, "Gaussian constants")
    src = gaussian_source()
    t0 = time.perf_counter()
    ch.near("c0 closed form", c_max_closed_form(src), 2.41269638, 1e-6)
    ch.near("c0 quadrature", c_max_quadrature(src), 2.41269638, 1e-6)
    d = optimize_design(src)
    ch.near("c_opt", d.c, 1.0327, 0.005)
    ch.near("beta_hat_opt", d.beta_hat, 2.0771, 0.01)
    ch.near("omega_opt", d.omega, 9.6622, 0.01)
    ch.near("dispersion", -math.log(d.omega), -2.2682, 0.005)
    ch.near("density second moment", d.second_moment_of_density, 1.93, 0.02)
    elapsed = time.perf_counter() - t0
    ch.add("runtime", elapsed <= 10, f"{elapsed:.2f} s <= 10 s")
    ch.finish()


def test_criterion_02_uniform_constants():
    ch = Checks(2, "uniform constants")
    src = uniform_source()
    t0 = time.perf_counter()
    ch.near("c0", c_max(src), 2.0801, 1e-3)
    d = optimize_design(src)
    ch.near("c_opt", d.c, 0.8281, 0.005)
    ch.near("beta_hat_opt", d.beta_hat, 0.1385, 0.005)
    ch.near("omega_opt", d.omega, 0.3884, 0.002)
    ch.near("dispersion", -math.log(d.omega), 0.9458, 0.005)
    elapsed = time.perf_counter() - t0
    ch.add("runtime", elapsed <= 10, f"{elapsed:.2f} s <= 10 s")
    ch.finish()


def test_criterion_03_naive_baselines(gauss_designs, unif_designs):
    ch = Checks(3, "naive baselines")
    g = naive_design_report(gaussian_source(), gauss_designs[0])
    u = naive_design_report(uniform_source(), unif_designs[0])
    ch.near("Gaussian naive dispersion", g.naive_dispersion, -2.3564, 0.005)
    ch.near("Gaussian gap dB", g.gap_db, 0.383, 0.005)
    ch.near("uniform naive dispersion", u.naive_dispersion, 0.9242, 0.005)
    ch.near("uniform gap dB", u.gap_db, 0.0943, 0.01)
    ch.finish()


def test_criterion_04_kkt_identity():
    ch = Checks(4, "two Omega forms agree on a 32-point grid")
    for src in (gaussian_source(), uniform_source()):
        worst = 0.0
        for c in np.linspace(0.05, c_max(src), 32):
            d = design_at(src, c)
            generic = 2 * c * (src.second_moment + d.second_moment_of_density) \
                + bennett_integral(d.density, src) / (12 * c * c)
            worst = max(worst, abs(generic - d.omega) / d.omega)
            omega(src, c, check=True)
        ch.add(f"{src.name} max rel diff", worst <= 1e-6, f"{worst:.3g} <= 1e-6")
    ch.finish()


def test_criterion_05_bennett_convergence(gauss_designs, unif_designs):
    ch = Checks(5, "Bennett convergence")
    pairs = [("gaussian/optimized", gaussian_source(), gauss_designs[0].density),
             ("gaussian/naive", gaussian_source(), gauss_designs[1].density),
             ("uniform/optimized", uniform_source(), unif_designs[0].density),
             ("uniform/naive", uniform_source(), unif_designs[1].density)]
    for label, src, lam in pairs:
        limit = bennett_integral(lam, src) / 12
        err = {}
        for n in (1024, 4096):
            err[n] = abs(n * n * finite_n_mse(build_quantizer(lam, n), src) - limit) / limit
        ch.add(f"{label} N=4096 within 3%", err[4096] <= 0.03, f"rel err {err[4096]:.3g}")
        ch.add(f"{label} error shrinks", err[4096] <= err[1024] + 1e-12,
               f"{err[1024]:.3g} -> {err[4096]:.3g}")
    ch.finish()


def test_criterion_06_bound_dominance(gauss_designs):
    ch = Checks(6, "bound dominance")
    t0 = time.perf_counter()
    worst, count = -math.inf, 0
    for gamma in np.linspace(2, 200, 20):
        for ln_n in np.linspace(0.1, gamma / 2, 20):
            n = max(2, int(math.exp(ln_n)))
            if math.log(n) > gamma / 2:
                continue
            ratio = exact_orthogonal_error_prob(gamma, n) / outage_probability_bound(gamma, n)
            worst = max(worst, ratio)
            count += 1
    ch.add("Pe <= bound on 20x20 grid", worst <= 1.0, f"max ratio {worst:.4g} over {count} pairs")
    d = gauss_designs[0]
    for gamma in (36.0, 48.0, 60.0):
        r = run_simulation(SimConfig(d, gamma, 1_000_000, 2024))
        lim = end_to_end_bound(d, gamma) * 1.05 + 4 * r.mse_std_error
        ch.add(f"simulated MSE at gamma={gamma:g}", r.mse <= lim, f"{r.mse:.4g} <= {lim:.4g}")
    elapsed = time.perf_counter() - t0
    ch.add("runtime", elapsed <= 120, f"{elapsed:.1f} s <= 120 s")
    ch.finish()


def test_criterion_07_exponents():
    ch = Checks(7, "exponent max-mins")
    r = scheme_exponent()
    ch.near("tau_opt", r.tau_opt, 1 / 12, 1e-12)
    ch.near("scheme exponent", r.exponent, 1 / 6, 1e-12)
    tau = np.linspace(1e-5, 0.5, 100_000)
    grid_best = max(min(2 * t, outage_exponent(t)) for t in tau)
    ch.add("grid confirms 1/6", grid_best <= 1 / 6 + 1e-12, f"grid max {grid_best:.12g}")
    b, rho, theta = knopp_exponent()
    ch.near("knopp theta", theta, 1 / 6, 1e-6)
    ch.near("knopp rho", rho, 1.0, 1e-6)
    ch.near("knopp b'", b, 1 / (12 * LN2), 1e-6)
    ch.finish()


def test_criterion_08_knopp_comparison(gauss_designs):
    ch = Checks(8, "Knopp comparison")
    d = gauss_designs[0]
    gaps = []
    for gamma in (60.0, 120.0, 240.0):
        ana = knopp_analytic_bound(gamma)
        _, num = knopp_optimize(gamma)
        ours = end_to_end_bound(d, gamma)
        ch.add(f"gamma={gamma:g} analytic >= numeric", ana >= num, f"{ana:.5g} vs {num:.5g}")
        ch.add(f"gamma={gamma:g} numeric >= ours", num >= ours, f"{num:.5g} vs {ours:.5g}")
        if ana < num:
            _, relaxed = knopp_optimize(gamma, integer_b=False)
            ch.info(f"gamma={gamma:g} numeric with real-valued b", f"{relaxed:.5g}")
        gaps.append(math.log(ana) - math.log(ours))
    ch.add("-ln D gap to Knopp analytic grows", all(np.diff(gaps) > 0),
           ", ".join(f"{g:.4f}" for g in gaps))
    v = -math.log(knopp_analytic_bound(600.0)) - (100 - math.log(1000))
    ch.add("gamma=600 asymptotics", abs(v) <= 0.02, f"|{v:.4g}| <= 0.02")
    ch.finish()


def test_criterion_09_simulator_statistics(gauss_designs):
    ch = Checks(9, "simulator statistics")
    src = gaussian_source()
    n = 200_000
    recs = sweep(src, DesignChoice.OPTIMIZED, np.arange(12.0, 121.0, 12.0), n_samples=n, seed=9,
                 mode=SimMode.FULL_CHANNEL)
    worst = 0.0
    for r in recs:
        se = math.sqrt(r.pe_exact * (1 - r.pe_exact) / n)
        z = abs(r.sim_outage_rate - r.pe_exact) / se if se > 0 else (0.0 if r.sim_outage_rate == 0 else math.inf)
        worst = max(worst, z)
    ch.add("outage rate on every sweep row", worst <= 4, f"max |z| = {worst:.2f} over {len(recs)} rows")
    d = gauss_designs[0]
    full = run_simulation(SimConfig(d, 48.0, 1_000_000, 31, SimMode.FULL_CHANNEL))
    ana = run_simulation(SimConfig(d, 48.0, 1_000_000, 32, SimMode.ANALYTIC_OUTAGE))
    z = abs(full.mse - ana.mse) / math.hypot(full.mse_std_error, ana.mse_std_error)
    ch.add("full vs analytic MSE", z <= 5, f"{z:.2f} combined std errors")
    cfg = SimConfig(d, 36.0, 500_000, 77)
    same = run_simulation(cfg, workers=1) == run_simulation(cfg, workers=4)
    ch.add("bit-identical across worker counts", same)
    ch.finish()


def test_criterion_10_conditional_outage(gauss_designs):
    ch = Checks(10, "conditional-outage bound")
    d = gauss_designs[0]
    for n_levels, gamma in ((21, 36.0), (1024, 0.0)):
        cfg = SimConfig(d, gamma, 1_000_000, 10 + n_levels, n_levels=n_levels)
        try:
            emp, bound = conditional_outage_check(cfg)
            ch.add(f"N={n_levels} forced outage", True, f"{emp:.5g} vs bound {bound:.5g} (+4 stderr allowed)")
        except BoundViolation as exc:
            ch.add(f"N={n_levels} forced outage", False, str(exc))
    q = build_quantizer(d.density, 1024)
    lv = float(np.mean(q.levels ** 2))
    m2 = density_second_moment(d.density)
    ch.add("level second moment vs integral", abs(lv - m2) <= 0.02 * m2, f"{lv:.5g} vs {m2:.5g}")
    ch.finish()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
