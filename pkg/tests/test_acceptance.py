"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` (the summary lines are
printed even without ``-s``). The expected values live here as
plain data; every comparison uses the stated tolerance.
"""

from __future__ import annotations

import time
from fractions import Fraction

import numpy as np
import pytest

from arldpc.cli import run
from arldpc.density_evolution import threshold, threshold_curve
from arldpc.ensembles import preset
from arldpc.lifted_codes import simulate
from arldpc.protograph import build_protograph, degree_census
from arldpc.reports import table1, table3
from arldpc.weight_enumerator import estimate_growth_large_L, exact_average_enumerator, objective

from oracles import brute_force_average, monte_carlo_average, scalar_de_threshold

pytestmark = pytest.mark.slow

# --- reference data -------------------------------------------------------

T1_THRESHOLD = {3: 0.714, 4: 0.635, 5: 0.588, 6: 0.557, 7: 0.537, 8: 0.522, 9: 0.512, 10: 0.505, 20: 0.488}
T1_DELTA = {3: 0.1419, 4: 0.0814, 5: 0.0573, 6: 0.0449, 7: 0.0374, 8: 0.0324}
T1_SCALED = {3: 0.142, 4: 0.109, 5: 0.096, 6: 0.090, 7: 0.087, 8: 0.086}
T1_ESTIMATED = {10: "0.0258", 20: "0.0129"}

T3_L = (2, 3, 4, 5, 6, 7, 8, 20, "inf")
T3_EPS = {
    "example1": (0.6358, 0.5600, 0.5249, 0.5064, 0.4965, 0.4914, 0.4893, 0.4881, 0.4881),
    "example2": (0.6471, 0.5673, 0.5298, 0.5098, 0.4989, 0.4930, 0.4902, 0.4881, 0.4881),
    "example3": (0.6448, 0.5671, 0.5301, 0.5103, 0.4993, 0.4933, 0.4903, 0.4881, 0.4881),
    "example4": (0.6353, 0.5574, 0.5223, 0.5046, 0.4955, 0.4911, 0.4892, 0.4881, 0.4881),
}
T3_DELTA = {
    "example1": (0.0873, 0.0496, 0.0362, 0.0289, 0.0241, 0.0206, 0.0180),
    "example2": (0.0920, 0.0511, 0.0367, 0.0291, 0.0243, 0.0208, 0.0182),
    "example3": (0.0950, 0.0524, 0.0375, 0.0298, 0.0248, 0.0213, 0.0186),
    "example4": (0.0814, 0.0449, 0.0324, 0.0258, 0.0215, 0.0184, 0.0161),
}


def report(capsys, number: int, title: str, ok: bool, detail: str = "") -> None:
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}" + (f" -- {detail}" if detail else ""))
    assert ok, detail


def _rows(table, key="L"):
    return {r[key]: r for r in table.rows}


@pytest.fixture(scope="module")
def t1():
    t, status = table1()
    return _rows(t), status


@pytest.fixture(scope="module")
def t3():
    t, status = table3()
    return _rows(t), status


# --- criteria -------------------------------------------------------------


def test_01_table1_thresholds(capsys):
    start = time.perf_counter()
    rows = threshold_curve(preset("gcd(3,6)"), sorted(T1_THRESHOLD))
    elapsed = time.perf_counter() - start
    errs = {r.L: abs(r.epsilon - T1_THRESHOLD[r.L]) for r in rows}
    worst = max(errs, key=errs.get)
    ok = max(errs.values()) <= 1e-3 and elapsed < 120
    report(capsys, 1, "(3,6) GCD thresholds within 1e-3 in < 2 min", ok,
           f"max error {errs[worst]:.2e} at L={worst}, {elapsed:.1f} s")


def test_02_table3_thresholds(capsys, t3):
    rows, _ = t3
    errs = []
    for name, vals in T3_EPS.items():
        for L, ref in zip(T3_L, vals):
            errs.append((abs(float(rows[str(L)][f"{name}_eps"]) - ref), name, str(L)))
    worst = max(errs)
    ok = len(errs) == 36 and worst[0] <= 5e-4
    report(capsys, 2, "edge-spreading example thresholds (36 values) within 5e-4", ok,
           f"max error {worst[0]:.1e} ({worst[1]}, L={worst[2]})")


def test_03_table1_growth_rates(capsys, t1):
    rows, status = t1
    d_err = max(abs(float(rows[str(L)]["delta_min"]) - v) for L, v in T1_DELTA.items())
    s_err = max(abs(float(rows[str(L)]["scaled"]) - v) for L, v in T1_SCALED.items())
    est_ok = all(rows[str(L)]["delta_min"] == v and rows[str(L)]["delta_source"] == "scaled-estimate"
                 for L, v in T1_ESTIMATED.items())
    formula_ok = all(f"{estimate_growth_large_L(0.086, L, 2):.4f}" == v for L, v in T1_ESTIMATED.items())
    ok = d_err <= 1.5e-3 and s_err <= 2e-3 and est_ok and formula_ok and all(s == "ok" for s in status)
    report(capsys, 3, "(3,6) GCD growth rates, scaled values and L>=10 estimates", ok,
           f"delta max error {d_err:.1e}, scaled max error {s_err:.1e}, "
           f"L=10/20 -> {rows['10']['delta_min']}/{rows['20']['delta_min']}")


def test_04_table3_growth_rates_and_ordering(capsys, t3):
    rows, status = t3
    errs = []
    for name, vals in T3_DELTA.items():
        for L, ref in zip(T3_L, vals):
            errs.append((abs(float(rows[str(L)][f"{name}_delta"]) - ref), name, L))
    worst = max(errs)
    order = ["example3", "example2", "example1", "example4"]
    bad_order = [L for L in range(4, 9)
                 if not all(float(rows[str(L)][f"{a}_delta"]) > float(rows[str(L)][f"{b}_delta"])
                            for a, b in zip(order, order[1:]))]
    best_eps = {L: max(T3_EPS, key=lambda n: float(rows[str(L)][f"{n}_eps"])) for L in (2, 3)}
    ok = (worst[0] <= 1.5e-3 and not bad_order and all(v == "example2" for v in best_eps.values())
          and all(s == "ok" for s in status))
    report(capsys, 4, "edge-spreading example growth rates within 1.5e-3; ordering 3>2>1>4 at L>=4; example 2 best eps at L=2,3",
           ok, f"max error {worst[0]:.1e} ({worst[1]}, L={worst[2]}), ordering violations {bad_order}, "
               f"best thresholds {best_eps}")


def test_05_rate_and_complexity_formulas(capsys):
    bad = []
    for J in (3, 4, 5):
        fam = preset(f"gcd({J},{2 * J})")
        for L in range(2, 51):
            p = fam.terminated(L).protograph
            avg_check = Fraction(int(p.check_degrees.sum()), p.n_c)
            if fam.rate(L) != Fraction(L - J + 1, 2 * L) or avg_check != Fraction(2 * J * L, L + J - 1) \
                    or set(p.var_degrees.tolist()) != {J}:
                bad.append((J, L))
    fam39 = preset("gcd(3,9)")
    bad += [(3, 9, L) for L in range(2, 51) if fam39.rate(L) != Fraction(2 * L - 2, 3 * L)]
    report(capsys, 5, "terminated rates and average degrees equal the closed forms", not bad, f"mismatches {bad}")


def test_06_degree_censuses(capsys):
    bad = []
    for L in range(2, 21):
        expect = {
            1: {2: 3, 4: 3, 6: 3 * L - 3},
            2: {3: 6, 6: 3 * L - 3},
            "gcd(3,9)": {3: 2, 6: 2, 9: L - 2},
        }
        for key, want in expect.items():
            got = degree_census(preset(key).terminated(L).protograph).checks
            if got != {d: c for d, c in want.items() if c}:
                bad.append((key, L, got))
    report(capsys, 6, "check-degree censuses for L = 2..20", not bad, f"mismatches {bad[:3]}")


def test_07_de_matches_scalar_recursion(capsys):
    out = []
    for J in (3, 4):
        proto = threshold(build_protograph([[J, J]])).epsilon
        scalar = scalar_de_threshold(J, 2 * J)
        out.append((J, proto, scalar))
    ok = all(abs(a - b) <= 5e-4 for _, a, b in out) and abs(out[0][2] - 0.4294) <= 5e-4
    report(capsys, 7, "protograph DE equals the scalar recursion on [3 3] and [4 4]", ok,
           ", ".join(f"[{J} {J}]: {a:.5f} vs {b:.5f}" for J, a, b in out))


def test_08_enumerator_matches_oracles(capsys):
    p11 = build_protograph([[1, 1]])
    exact_ok = all(exact_average_enumerator(p11, N) == brute_force_average([[1, 1]], N) for N in (2, 3))
    p33 = build_protograph([[3, 3]])
    exact = exact_average_enumerator(p33, 4)
    mean, se = monte_carlo_average([[3, 3]], 4, lifts=10_000, seed=2024)
    z = []
    for w in range(9):
        ref = float(exact.get(w, 0))
        z.append(0.0 if se[w] == 0 and mean[w] == ref else abs(mean[w] - ref) / se[w] if se[w] else np.inf)
    ok = exact_ok and max(z) <= 3
    report(capsys, 8, "exact enumerator vs exhaustive lifts and 10^4-lift Monte Carlo", ok,
           f"brute force equal: {exact_ok}, max |z| = {max(z):.2f}")


def test_09_gradient_check(capsys):
    protos = {
        "[3 3]": build_protograph([[3, 3]]),
        "example2 L=2": preset(2).terminated(2).protograph,
        "[[2 1],[1 2]]": build_protograph([[2, 1], [1, 2]]),
    }
    rng = np.random.default_rng(7)
    worst = (0.0, "")
    for name, p in protos.items():
        done = 0
        while done < 50:
            w = rng.uniform(0.02, 0.48, p.n_v)
            if not np.isfinite(objective(p, w)):
                continue
            _, g = objective(p, w, with_grad=True)
            fd = np.empty(p.n_v)
            h = 1e-6
            for i in range(p.n_v):
                e = np.zeros(p.n_v)
                e[i] = h
                fd[i] = (objective(p, w + e) - objective(p, w - e)) / (2 * h)
            rel = float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12))
            worst = max(worst, (rel, name))
            done += 1
    report(capsys, 9, "analytic gradient vs central differences at 150 interior points", worst[0] < 1e-4,
           f"max relative error {worst[0]:.1e} ({worst[1]})")


def test_10_simulation_waterfall(capsys):
    start = time.perf_counter()
    fam = preset(1)
    low = simulate(fam, 8, 1000, 0.43, 200, seed=1)
    high = simulate(fam, 8, 1000, 0.55, 200, seed=1)
    elapsed = time.perf_counter() - start
    ok = low.block_failure_rate < 0.05 and high.block_failure_rate > 0.90 and elapsed < 300
    report(capsys, 10, "example 1 waterfall brackets the threshold (N=1000, 200 trials)", ok,
           f"failure rate {low.block_failure_rate:.3f} at 0.43, {high.block_failure_rate:.3f} at 0.55, "
           f"{elapsed:.1f} s")


def test_11_determinism(capsys, tmp_path):
    commands = {
        "table1": ["table1", "--L", "3,4"],
        "table3": ["table3", "--L", "2", "--examples", "1,3"],
        "simulate": ["simulate", "--preset", "1", "--L", "4", "--N", "200", "--eps", "0.45:0.55:0.05",
                     "--trials", "20", "--seed", "11"],
    }
    differing = []
    for name, argv in commands.items():
        outs = []
        for k in range(2):
            path = tmp_path / f"{name}{k}.csv"
            assert run(argv + ["--output", str(path)]) == 0
            outs.append(path.read_bytes())
        if outs[0] != outs[1]:
            differing.append(name)
    report(capsys, 11, "repeated table1/table3/simulate runs are byte-identical", not differing,
           f"differing outputs: {differing}")

