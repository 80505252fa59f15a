"""Built-in consistency suite: every analytic route against an independent one."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LaserStatsError
from .gillespie import SimConfig, simulate
from .langevin import (
    LangevinModel,
    closed_form_S0,
    fano_analytic,
    optimum_conditions,
    spectral_density,
)
from .model import LaserParams, MicroState, SchemeKind
from .oracles import LinearNoise, master_equation, steady_by_root, thermal_cap
from .steady import solve_steady, threshold_gamma

TABLE2_EXPECTED = {
    ("Lambda3", 0): (1 / 2, 3 / 4),
    ("Lambda3", 1): (2 / 3, 5 / 6),
    ("V3", 0): (1 / 2, 3 / 4),
    ("V3", 1): (5 / 6, 11 / 12),
    ("Four4", 0): (1 / 3, 2 / 3),
    ("Four4", 1): (3 / 7, 5 / 7),
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def random_params(rng: np.random.Generator, scheme=None, gamma: bool = True) -> LaserParams:
    """A random lasing configuration with finite rates."""
    s = SchemeKind(scheme) if scheme is not None else SchemeKind(rng.choice([k.value for k in SchemeKind]))
    p = LaserParams(
        s,
        N=int(10 ** rng.uniform(2, 5)),
        P=10 ** rng.uniform(0, 3),
        ell=int(rng.integers(2)),
        p_u=10 ** rng.uniform(1, 4),
        p_d=10 ** rng.uniform(1, 4),
        alpha=10 ** rng.uniform(-0.5, 1),
    )
    if gamma:
        p = p.replace(gamma=rng.uniform(0, 0.5) * min(threshold_gamma(p), 1e4))
    return p


def table2_params(scheme, ell: int, alpha: float = 1.0, P: float = 1000.0,
                  n_over_alpha: float = 1e6) -> LaserParams:
    """Optimum pump ratios at gamma = 0 and the given atom excess."""
    opt = optimum_conditions(scheme, ell)
    return LaserParams(
        opt.scheme,
        N=int(round(n_over_alpha * alpha)),
        P=P,
        ell=ell,
        p_u=math.inf if opt.P_over_pu is None else P / opt.P_over_pu,
        p_d=math.inf if opt.P_over_pd is None else P / opt.P_over_pd,
        alpha=alpha,
    )


def table2_rows(tol: float = 5e-3) -> list[dict]:
    rows = []
    for (scheme, ell), (s_exp, f_exp) in TABLE2_EXPECTED.items():
        p = table2_params(scheme, ell)
        opt = optimum_conditions(scheme, ell)
        s0 = spectral_density(p, 0.0)
        fano = fano_analytic(p)
        ok = (abs(s0 - s_exp) <= tol and abs(fano - f_exp) <= tol
              and abs(opt.s_min - s_exp) <= 1e-12)
        rows.append(dict(scheme=scheme, ell=ell, s_min=opt.s_min, s0=s0, s0_expected=s_exp,
                         fano=fano, fano_expected=f_exp, ok=ok))
    return rows


def _worst(values) -> float:
    return float(max(values)) if values else 0.0


def check_steady(rng, draws=30, tol=1e-8) -> CheckResult:
    errs = []
    for _ in range(draws):
        p = random_params(rng)
        ss, ref = solve_steady(p), steady_by_root(p)
        errs.append(abs(ss.m - ref.m) / ref.m)
        errs.append(float(np.max(np.abs(ss.populations - ref.populations))) / p.N)
    w = _worst(errs)
    return CheckResult("steady-vs-root", w < tol, f"worst relative error {w:.2e} (tol {tol:g})")


def check_spectrum(rng, draws=30, tol=1e-8) -> CheckResult:
    errs = []
    for _ in range(draws):
        p = random_params(rng)
        w = p.alpha * np.array([0.0, 0.1, 1.0, 10.0, 100.0])
        a = LangevinModel(p).photocurrent_spectrum(w)
        b = LinearNoise(p).photocurrent_spectrum(w)
        errs.append(float(np.max(np.abs(a - b) / np.abs(b))))
    w = _worst(errs)
    return CheckResult("spectrum-vs-linear-noise", w < tol, f"worst relative error {w:.2e} (tol {tol:g})")


def check_fano(rng, draws=10, tol=1e-6) -> CheckResult:
    errs = []
    for _ in range(draws):
        p = random_params(rng)
        a, b = fano_analytic(p), LinearNoise(p).fano()
        errs.append(abs(a - b) / abs(b))
    w = _worst(errs)
    return CheckResult("fano-vs-lyapunov", w < tol, f"worst relative error {w:.2e} (tol {tol:g})")


def check_closed_forms(rng, draws=20, tol=1e-9) -> CheckResult:
    errs = []
    for scheme in SchemeKind:
        for _ in range(draws):
            p = random_params(rng, scheme, gamma=False)
            a = spectral_density(p, 0.0, large_m=True)
            b = closed_form_S0(p, "gamma0")
            errs.append(abs(a - b) / abs(b))
    w = _worst(errs)
    return CheckResult("closed-form-gamma0", w < tol, f"worst relative error {w:.2e} (tol {tol:g})")


def check_reduction(rng, draws=10, tol=1e-10) -> CheckResult:
    errs = []
    for _ in range(draws):
        lam = random_params(rng, SchemeKind.Lambda3).replace(ell=0)
        four = lam.replace(scheme=SchemeKind.Four4, p_u=math.inf)
        w = lam.alpha * np.logspace(-2, 3, 10)
        a, b = spectral_density(lam, w), spectral_density(four, w)
        errs.append(float(np.max(np.abs(a - b) / np.abs(b))))
    w = _worst(errs)
    return CheckResult("lambda-equals-4level-fast-upper", w < tol, f"worst relative error {w:.2e} (tol {tol:g})")


def check_high_frequency(rng, draws=10, tol=1e-2) -> CheckResult:
    errs = []
    for scheme in SchemeKind:
        for _ in range(draws):
            p = random_params(rng, scheme)
            errs.append(abs(spectral_density(p, 1e3 * p.max_rate) - 1))
    w = _worst(errs)
    return CheckResult("high-frequency-shot-noise", w < tol, f"worst |S - 1| {w:.2e} (tol {tol:g})")


def check_table2(tol=5e-3) -> CheckResult:
    rows = table2_rows(tol)
    bad = [f"{r['scheme']}/ell={r['ell']}" for r in rows if not r["ok"]]
    return CheckResult("optimum-table", not bad, "all six rows within tolerance" if not bad else f"mismatch: {bad}")


def micro_params() -> LaserParams:
    return LaserParams(SchemeKind.Four4, N=2, P=1.0, ell=1, p_u=2.0, p_d=3.0, gamma=0.5, alpha=0.3)


def check_master_equation(seed=0, events=1_000_000, tol=0.02) -> CheckResult:
    p = micro_params()
    cap = thermal_cap(steady_by_root(p).m)
    exact = master_equation(p, cap).photon_distribution()
    # mean event rate is a few per unit time; size the run for the event budget
    cfg = SimConfig(duration=events / 2.0, burn_in=50.0, seed=seed, m_hist_size=cap + 1)
    traj = simulate(p, cfg, MicroState((2, 0, 0, 0), 0))
    hist = traj.m_histogram
    emp = np.zeros(max(hist.size, exact.size))
    emp[:hist.size] = hist
    ref = np.zeros_like(emp)
    ref[:exact.size] = exact
    tv = 0.5 * float(np.abs(emp - ref).sum())
    ok = tv < tol and traj.n_events >= events
    return CheckResult("micro-master-equation", ok,
                       f"total variation {tv:.4f} over {traj.n_events} events (tol {tol:g})")


def run_all(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    suite = [
        lambda: check_steady(rng),
        lambda: check_spectrum(rng),
        lambda: check_fano(rng),
        lambda: check_closed_forms(rng),
        lambda: check_reduction(rng),
        lambda: check_high_frequency(rng),
        check_table2,
        lambda: check_master_equation(seed),
    ]
    results = []
    for fn in suite:
        try:
            results.append(fn())
        except LaserStatsError as exc:
            results.append(CheckResult(getattr(fn, "__name__", "check"), False, f"error: {exc}"))
    return results
