"""End-to-end acceptance gate: one test per shipping criterion.

Each test prints a single PASS line with the measured numbers when it
succeeds; a failed assertion prints the offending values.  Criteria with a
stated runtime budget assert it too.
"""

import math
import time

import numpy as np
import pytest

from conftest import random_mode, random_spec
from wgfock import oracle
from wgfock.cli import main as cli_main
from wgfock.correlators import (
    CorrelatorRequest,
    build_cache,
    correlator,
    norm,
    overlap_amplitude,
    photon_number,
)
from wgfock.emitter import kerr_spec, superradiant_spec
from wgfock.interferometer import (
    cfi,
    lossy_distribution,
    noon_two_mode_arm,
    pure_qfi,
    qfi_from_occupations,
    twin_fock_arm,
    uniform_two_mode_arm,
)
from wgfock.modes import ExpMode
from wgfock.states import build_basis, mode_occupations, project, variance_sigma


def _report(num, text):
    print(f"\nACCEPTANCE {num:02d} PASS — {text}")


def test_criterion_01_normalization_identity():
    t0 = time.time()
    worst = 0.0
    for N in range(1, 101):
        worst = max(worst, abs(norm(superradiant_spec(N)) - 1.0))
        worst = max(worst, abs(norm(kerr_spec(N, 1.0, 0.5, 0.3)) - 1.0))
    elapsed = time.time() - t0
    assert worst < 1e-10
    assert elapsed < 10.0
    _report(1, f"norm = 1 within {worst:.1e} for N=1..100, both presets, {elapsed:.2f} s")


def test_criterion_02_oracle_equivalence(rng):
    t0 = time.time()
    worst_c = 0.0
    for N in range(1, 5):
        for n in range(1, N + 1):
            for _ in range(100):
                spec = random_spec(rng, N)
                req = CorrelatorRequest(
                    spec,
                    tuple(random_mode(rng) for _ in range(n)),
                    tuple(random_mode(rng) for _ in range(n)),
                )
                e = correlator(req)
                o = oracle.correlator_direct(req)
                worst_c = max(worst_c, abs(e - o) / max(abs(o), 1e-12))
    worst_o = 0.0
    for N in range(1, 5):
        for D in (1, 2, 3):
            for _ in range(100):
                spec = random_spec(rng, N)
                base = tuple(random_mode(rng) for _ in range(D))
                occ = tuple(int(k) for k in rng.multinomial(N, [1.0 / D] * D))
                e = overlap_amplitude(spec, base, occ)
                o = oracle.overlap_direct(spec, base, occ)
                worst_o = max(worst_o, abs(e - o) / max(abs(o), 1e-12))
    elapsed = time.time() - t0
    assert worst_c < 1e-9
    assert worst_o < 1e-9
    assert elapsed < 120.0
    _report(
        2,
        f"engine vs brute force: correlators {worst_c:.1e}, overlaps {worst_o:.1e} "
        f"rel, 100 draws/case, {elapsed:.1f} s",
    )


def test_criterion_03_mode_ratio_table():
    t0 = time.time()
    N = 100
    spec = superradiant_spec(N)
    expected = {
        10: [0.902, 0.984, 0.996, 0.998],
        2: [0.653, 0.688],
    }
    results = {}
    for D, row in expected.items():
        basis = build_basis(spec, D)
        C = np.cumsum(basis.lambdas) / N
        for d, target in enumerate(row, start=1):
            assert abs(C[d - 1] - target) <= 0.002, (D, d, C[d - 1], target)
        results[D] = [round(float(c), 4) for c in C[: len(row)]]
    elapsed = time.time() - t0
    assert elapsed < 300.0
    _report(3, f"N=100 photon-fraction table D=10 {results[10]}, D=2 {results[2]}, {elapsed:.1f} s")


def test_criterion_04_optimal_mode_rate():
    for N in (100, 200):
        spec = superradiant_spec(N)
        x = N / math.log(N)
        grid = np.exp(np.linspace(math.log(x / 4), math.log(4 * x), 20))
        vals = [photon_number(spec, ExpMode(float(g), 0.0)) for g in grid]
        gstar = float(grid[int(np.argmax(vals))])
        assert x / 1.5 <= gstar <= 1.5 * x, (N, gstar, x)
    _report(4, "photon-number argmax within 1.5x of N/ln N for N=100, 200")


def test_criterion_05_fraction_in_optimal_single_mode():
    # Stated band [0.48, 0.62]; the computed N=100 value is 0.6348, which the
    # engine's own N=100 mode table (criterion 3, matching the printed
    # reference to 1e-3) corroborates.  Kept faithful; fails at N=100.
    t0 = time.time()
    fractions = {}
    for N in (100, 200, 300):
        spec = superradiant_spec(N)
        frac = photon_number(spec, ExpMode(N / math.log(N), 0.0)) / N
        fractions[N] = frac
    elapsed = time.time() - t0
    print(f"\n  measured single-mode fractions: "
          + ", ".join(f"N={k}: {v:.4f}" for k, v in fractions.items())
          + f" ({elapsed:.1f} s)")
    assert elapsed < 1800.0
    for N, frac in fractions.items():
        assert 0.48 <= frac <= 0.62, (
            f"N={N}: fraction {frac:.4f} outside [0.48, 0.62]; see decisions ledger: "
            "the 50-60% range understates the exact N=100 value"
        )
    _report(5, f"single-mode fractions {fractions}")


def test_criterion_06_variance_bound():
    spec = superradiant_spec(40)
    basis = build_basis(spec, 8)
    cache = build_cache(spec, basis.base, max_order=2)
    sigma3 = variance_sigma(spec, basis, 3, cache)
    assert sigma3 < 1.0
    _report(6, f"sigma_n3 = {sigma3:.4f} < 1 at N=40, D=8")


def test_criterion_07_effective_state_fidelity():
    # N = 1 is excluded: the rate-ladder family j*N/ln(N) that defines the
    # basis is itself undefined there (its own precondition is N >= 2).
    worst = 1.0
    for N in range(2, 11):
        spec = superradiant_spec(N)
        basis = build_basis(spec, 8)
        fid = project(spec, basis, 3).fidelity
        worst = min(worst, fid)
        assert fid > 0.97, (N, fid)
    _report(7, f"three-mode fidelity > 0.97 for all 2 <= N <= 10 at D=8 (min {worst:.4f})")


def test_criterion_08_qfi_formulas():
    for N in (2, 10, 60):
        assert qfi_from_occupations([N / 2], [N / 2]) == pytest.approx(N * (1 + N / 2))
    N_tot = 100
    spec = superradiant_spec(N_tot // 2)
    basis = build_basis(spec, 10)
    occ = mode_occupations(spec, basis, 3)
    q = qfi_from_occupations(occ, occ)
    ratio = q / N_tot**2
    assert 0.39 <= ratio <= 0.43, ratio
    _report(8, f"twin-Fock QFI exact; twin emitted-state Q/N^2 = {ratio:.4f} at N=100")


def test_criterion_09_cfi_equals_qfi_limits():
    arms = {"uniform": uniform_two_mode_arm(5), "bunched": noon_two_mode_arm(5)}
    for name, arm in arms.items():
        q = pure_qfi(arm, arm)
        for phi in (0.1, 0.5, 1.0):
            c = cfi(lossy_distribution(arm, arm, phi, 1.0, "mnr"))
            assert abs(c - q) <= 1e-6 * q, (name, phi, c, q)
        c_nr = cfi(lossy_distribution(arm, arm, 1e-4, 1.0, "nr"))
        assert abs(c_nr - q) <= 1e-3 * q, (name, c_nr, q)
    q2 = pure_qfi(arms["bunched"], arms["bunched"])
    c2 = cfi(lossy_distribution(arms["bunched"], arms["bunched"], math.pi / 4, 1.0, "nr"))
    assert c2 < q2
    _report(
        9,
        "MNR CFI = QFI (1e-6 rel) at phi in {0.1,0.5,1.0}; NR CFI -> QFI at phi->0; "
        f"NR at pi/4 strictly below ({c2:.2f} < {q2:.0f})",
    )


def test_criterion_10_loss_properties():
    spec = superradiant_spec(5)
    basis = build_basis(spec, 8)
    arm = project(spec, basis, 2).normalized()
    snl = 10.0
    phis = np.linspace(0.05, 1.5, 8)

    maxima = {}
    for eta in (0.9, 0.95):
        cs = []
        for phi in phis:
            dist_nr = lossy_distribution(arm, arm, float(phi), eta, "nr")
            dist_mnr = lossy_distribution(arm, arm, float(phi), eta, "mnr")
            assert dist_nr.total_P() == pytest.approx(1.0, abs=1e-10)
            c_nr, c_mnr = cfi(dist_nr), cfi(dist_mnr)
            assert c_nr <= c_mnr + 1e-9, (eta, phi, c_nr, c_mnr)
            cs.append(c_nr)
        maxima[eta] = max(cs)
        assert maxima[eta] > snl, (eta, maxima[eta])

    lossless = [cfi(lossy_distribution(arm, arm, float(p), 1.0, "nr")) for p in phis]
    phistar = float(phis[int(np.argmax(lossless))])
    series = [
        cfi(lossy_distribution(arm, arm, phistar, eta, "nr")) for eta in (1.0, 0.95, 0.9)
    ]
    assert series[0] >= series[1] >= series[2], series
    _report(
        10,
        f"twin emitted N=10: sum P = 1; NR <= MNR; max CFI {maxima[0.9]:.1f} (eta=0.9) "
        f"> SNL {snl:.0f}; monotone in eta at phi*={phistar:.2f}: "
        + " >= ".join(f"{v:.1f}" for v in series),
    )


def test_criterion_11_cli_determinism(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.csv"
        code = cli_main(
            ["characterize", "--preset", "superradiant", "--N", "12", "--D", "6",
             "--d", "4", "--out", str(path)]
        )
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]

    scans = []
    for i in range(2):
        path = tmp_path / f"scan{i}.csv"
        code = cli_main(
            ["cfi-scan", "--psi2", "4", "--phi-grid", "0.1:1.0:3",
             "--eta-list", "1.0,0.9", "--jobs", "2", "--out", str(path)]
        )
        assert code == 0
        scans.append(path.read_bytes())
    assert scans[0] == scans[1]
    _report(11, "repeated CLI runs byte-identical (sequential and parallel)")
