"""Cross-route consistency suite behind ``collcpt check``."""

from __future__ import annotations

import math
import time
from typing import Callable, NamedTuple

import numpy as np

from . import analytic, bare, darkstate, dressed
from .basis import enumerate_states
from .params import SystemParams


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str
    seconds: float


def _three_routes() -> tuple[bool, str]:
    worst_dressed = worst_bare = 0.0
    for nbar in (0.2, 1.0, 3.0):
        for ratio in (0.5, 1.0, 2.0):
            for n in (1, 2, 4):
                omega = 50.0 * n * (1 + nbar)
                o2 = omega / math.hypot(1.0, ratio)
                p = SystemParams.symmetric(o2, o2 * ratio, nbar, n)
                ref = analytic.upper_population_analytic(analytic.xi(p), n)
                worst_dressed = max(worst_dressed, abs(dressed.steady_upper_population(p) / ref - 1))
                worst_bare = max(worst_bare, abs(bare.steady_upper_population(p) / ref - 1))
    ok = worst_dressed <= 1e-10 and worst_bare <= 0.05
    return ok, f"dressed rel {worst_dressed:.1e} (<=1e-10), bare rel {worst_bare:.1e} (<=5e-2)"


def _perfect_cpt() -> tuple[bool, str]:
    worst = 0.0
    for o2, o3 in ((5, 5), (1, 3), (7, 0.5)):
        worst = max(worst, bare.steady_upper_population(SystemParams(o2, o3)))
    return worst <= 1e-8, f"max rho11 {worst:.1e} (<=1e-8)"


def _detailed_balance() -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = worst_xi = 0.0
    for _ in range(50):
        p = SystemParams(
            omega2=rng.uniform(0.5, 20), omega3=rng.uniform(0.5, 20),
            gamma3=rng.uniform(0.2, 3), nbar2=rng.uniform(0.05, 5), nbar3=rng.uniform(0.05, 5),
            n_atoms=int(rng.integers(1, 13)))
        x = analytic.xi(p)
        worst_xi = max(worst_xi, abs(x - analytic.xi_from_rates(dressed.rates(p))))
        prob, basis = dressed.dressed_steady_state(p)
        worst = max(worst, np.max(np.abs(prob - analytic.steady_distribution(x, basis))))
    return worst <= 1e-12 and worst_xi <= 1e-12, f"distribution {worst:.1e}, xi identity {worst_xi:.1e}"


def _dark_state() -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    worst_res = worst_form = 0.0
    for n in range(1, 41):
        p = SystemParams(rng.uniform(0.5, 5), rng.uniform(0.5, 5), n_atoms=n)
        h = darkstate.build_chain_hamiltonian(p)
        d = darkstate.dark_state_recurrence(p).coefficients
        worst_res = max(worst_res, np.linalg.norm(h @ d) / np.linalg.norm(h))
        worst_form = max(worst_form, np.max(np.abs(d - darkstate.dark_state_closed_form(p).coefficients)))
    overlap = min(darkstate.product_form_overlap(SystemParams(1.0, 2.0, n_atoms=n)) for n in range(1, 9))
    coeff_ok = all(
        (c := darkstate.dark_rate_coefficients(SystemParams.symmetric(2, 3, 1, n))).out_factor == 4 * n
        and c.in_factor == 2 * n
        for n in range(1, 13))
    ok = worst_res <= 1e-10 and worst_form <= 1e-12 and abs(overlap - 1) <= 1e-10 and coeff_ok
    return ok, (f"residual {worst_res:.1e}, forms {worst_form:.1e}, "
                f"overlap-1 {abs(overlap - 1):.1e}, 4N/2N factors {'ok' if coeff_ok else 'wrong'}")


def _chain_consistency() -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, 6):
        p = SystemParams(1.3, 2.1, n_atoms=n)
        basis = enumerate_states(n)
        idx = [basis.index[s] for s in darkstate.chain_states(n)]
        h = bare.build_hamiltonian(p, basis)
        worst = max(worst, np.max(np.abs(h[np.ix_(idx, idx)] - darkstate.build_chain_hamiltonian(p))))
    return worst <= 1e-12, f"max entry deviation {worst:.1e}"


def _large_n() -> tuple[bool, str]:
    worst = 0.0
    for x in -np.geomspace(1e-6, 10, 60):
        closed = analytic.upper_population_analytic(x, 1000)
        moment = analytic.mean_R22(x, 1000)
        worst = max(worst, abs(closed / moment - 1))
    return worst <= 1e-9, f"closed form vs moment sum rel {worst:.1e}"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "three_route_agreement": _three_routes,
    "perfect_cpt": _perfect_cpt,
    "detailed_balance": _detailed_balance,
    "dark_state": _dark_state,
    "chain_consistency": _chain_consistency,
    "large_n_closed_form": _large_n,
}


def run_checks() -> list[CheckResult]:
    out = []
    for name, fn in CHECKS.items():
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # report, don't abort the table
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
