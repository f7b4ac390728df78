"""Acceptance suite: each criterion at its stated tolerance, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists
one PASS/FAIL line per criterion.
"""

import math
import time

import numpy as np

from chaoscope.certificates import (
    cbar_sample,
    certify_graphical_family,
    certify_mwu_chaos_domination,
    certify_mwu_chaos_lp,
    certify_potential_negativity,
    check_domination,
    negative_point_search,
    region_sample_points,
)
from chaoscope.cfunction import (
    c_bimatrix,
    c_bimatrix_primal,
    c_graphical,
    c_multi,
    induced_graphical_game,
)
from chaoscope.decomposition import chebyshev_fit, decompose, potential_coordination_lift
from chaoscope.dynamics import UpdateRule
from chaoscope.game_core import BimatrixGame, GraphicalGame, NormalFormGame, RegionSpec
from chaoscope.volume_lab import (
    GradualMap,
    accumulate_log_volume,
    ensemble_divergence,
    extract_c_coefficient,
    volume_integrand,
)

from conftest import EXAMPLE_A, EXAMPLE_B, MP, random_bimatrix, random_dual, random_normal_form


def report(number, name, ok, detail=""):
    print(f"criterion {number:2d} {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    return ok


def payoff_scale(game):
    return max(1.0, game.scale())


# --------------------------------------------------------------------------
# corpora shared with the soundness criterion


def domination_corpus(n_games=500, seed=8):
    """3x3 games mixing a random zero-sum part with scaled coordination parts."""
    rng = np.random.default_rng(seed)
    scales = [0.0, 0.02, 0.1, 0.5, 2.0]
    games = []
    for g in range(n_games):
        Z = rng.normal(size=(3, 3))
        C = rng.normal(size=(3, 3))
        s = scales[g % len(scales)]
        games.append(BimatrixGame(Z + s * C, -Z + s * C))
    return games


def potential_corpus(n_games=50, seed=10):
    """3-player potential games: potential tensor plus offsets free of the own strategy."""
    rng = np.random.default_rng(seed)
    out = []
    for g in range(n_games):
        counts = tuple(rng.integers(2, 4, size=3))
        P = rng.normal(size=counts)
        if g % 5 == 0:
            # pairwise potential: exercises the pairwise branch of the certificate
            P = (rng.normal(size=counts[:2])[:, :, None]
                 + rng.normal(size=(counts[0], counts[2]))[:, None, :]
                 + rng.normal(size=counts[1:])[None, :, :])
        payoffs = []
        for i in range(3):
            offset_shape = list(counts)
            offset_shape[i] = 1
            payoffs.append(P + rng.normal(size=offset_shape))
        out.append((NormalFormGame(tuple(payoffs)), P))
    return out


def graphical_corpus(seed=12):
    rng = np.random.default_rng(seed)
    games = [GraphicalGame((2, 2, 2), {
        (0, 1): MP, (1, 0): -MP.T, (1, 2): MP, (2, 1): -MP.T, (0, 2): MP, (2, 0): -MP.T,
    })]
    for _ in range(20):
        counts = (3, 3, 3)
        edges = {}
        for i in range(3):
            for k in range(i + 1, 3):
                Z = rng.normal(size=(counts[i], counts[k]))
                C = 0.05 * rng.normal(size=(counts[i], counts[k]))
                edges[(i, k)] = Z + C
                edges[(k, i)] = (-Z + C).T
        games.append(GraphicalGame(counts, edges))
    return games


# --------------------------------------------------------------------------


def test_criterion_01_decomposition_additivity():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(200):
        game = random_bimatrix(rng)
        dec = decompose(game)
        p = random_dual(rng, game.strategy_counts, batch=(50,))
        total = c_bimatrix(game, p)
        zs = c_bimatrix(BimatrixGame(dec.Z, -dec.Z), p)
        co = c_bimatrix(BimatrixGame(dec.C, dec.C), p)
        worst = max(worst, float(np.max(np.abs(total - zs - co))) / payoff_scale(game))
    assert report(1, "decomposition additivity", worst <= 1e-10, f"worst scaled error {worst:.2e}")


def test_criterion_02_trivial_invariance():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(200):
        game = random_bimatrix(rng)
        n, m = game.strategy_counts
        TA = np.add.outer(rng.normal(size=n), rng.normal(size=m))
        TB = np.add.outer(rng.normal(size=n), rng.normal(size=m))
        shifted = BimatrixGame(game.A + TA, game.B + TB)
        p = random_dual(rng, game.strategy_counts, batch=(50,))
        a, b = c_bimatrix(game, p), c_bimatrix(shifted, p)
        worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a)))))
    assert report(2, "trivial invariance", worst <= 1e-10, f"worst relative change {worst:.2e}")


def test_criterion_03_sign_laws():
    rng = np.random.default_rng(3)
    zero_sum_min, coord_max = math.inf, -math.inf
    for _ in range(10):
        game = random_bimatrix(rng)
        p = random_dual(rng, game.strategy_counts, scale=3.0, batch=(10_000,))
        zero_sum_min = min(zero_sum_min, float(np.min(c_bimatrix(BimatrixGame(game.A, -game.A), p))))
        coord_max = max(coord_max, float(np.max(c_bimatrix(BimatrixGame(game.A, game.A), p))))
    ok = zero_sum_min >= -1e-12 and coord_max <= 1e-12
    assert report(3, "sign laws", ok, f"zero-sum min {zero_sum_min:.3e}, coordination max {coord_max:.3e}")


def test_criterion_04_worked_example():
    game = BimatrixGame(EXAMPLE_A, EXAMPLE_B)
    dec = decompose(game)
    c_exact = np.array_equal(dec.C, np.array([[4.0, 4.0, 2.0], [0.0, 0.0, 4.0], [6.0, 0.0, 4.0]]))
    rz, rc = chebyshev_fit(dec.Z).r, chebyshev_fit(dec.C).r
    dom = check_domination(dec.Z, dec.C)
    rng = np.random.default_rng(4)
    p = random_dual(rng, (3, 3), batch=(100,))
    full = c_bimatrix(game, p)
    zero_sum = c_bimatrix(BimatrixGame(dec.Z, -dec.Z), p)
    ratio_err = float(np.max(np.abs(full - 15.0 / 16.0 * zero_sum)))
    ok = (c_exact and abs(rz - 8) <= 1e-9 and abs(rc - 2) <= 1e-9 and dom.dominates
          and dom.theta_margin == 18.0 and ratio_err <= 1e-10)
    assert report(4, "worked example", ok,
                  f"r(Z)={rz:.12g} r(C)={rc:.12g} margin={dom.theta_margin} 15/16 error {ratio_err:.2e}")


def test_criterion_05_matching_pennies_anchors(matching_pennies):
    uniform = [np.zeros(2), np.zeros(2)]
    c0 = float(c_bimatrix(matching_pennies, uniform))
    gmap = GradualMap(matching_pennies, UpdateRule("mwu", 0.01))
    det_err = max(abs(volume_integrand(gmap, uniform, e) - (1 + e * e)) for e in (0.1, 0.01, 0.001))
    cbar = cbar_sample(matching_pennies, RegionSpec(0.1), num_samples=100_000, seed=5)
    rel = abs(cbar - 0.1296) / 0.1296
    ok = abs(c0 - 1) <= 1e-12 and det_err <= 1e-12 and rel <= 0.02
    assert report(5, "matching pennies anchors", ok,
                  f"C(0)={c0!r} det error {det_err:.1e} sampled cbar {cbar:.6f}")


def test_criterion_06_integrand_order():
    # three-player games: in bimatrix games det(I + eps J) is even in eps, so
    # the eps^3 term vanishes and the residual shrinks by ~16 rather than ~8
    rng = np.random.default_rng(6)
    eps = 1e-3
    ratios, surrogate_errors = [], []
    for _ in range(50):
        counts = tuple(int(n) for n in rng.integers(2, 4, size=3))
        game = random_normal_form(rng, counts)
        p = np.concatenate(random_dual(rng, counts, scale=1.0))
        C = float(c_multi(game, p))
        gmap = GradualMap(game, UpdateRule("mwu", eps))
        r1 = abs(volume_integrand(gmap, p, eps) - 1 - C * eps**2)
        r2 = abs(volume_integrand(gmap, p, eps / 2) - 1 - C * (eps / 2) ** 2)
        ratios.append(r1 / r2)
        fit = extract_c_coefficient(GradualMap(game, UpdateRule("omwu_surrogate", eps)), p,
                                    [4e-3, 2e-3, 1e-3])
        surrogate_errors.append(abs(fit.value + C) / abs(C))
    lo, hi = min(ratios), max(ratios)
    worst = max(surrogate_errors)
    ok = lo >= 6 and hi <= 10 and worst <= 1e-5
    assert report(6, "integrand order", ok,
                  f"halving ratios in [{lo:.3f}, {hi:.3f}], surrogate rel error {worst:.1e}")


def test_criterion_07_local_equivalence():
    rng = np.random.default_rng(7)
    worst = 0.0
    for N in (3, 4):
        for _ in range(5):
            counts = tuple(int(n) for n in rng.integers(2, 4, size=N))
            game = random_normal_form(rng, counts)
            for _ in range(50 // 5):
                p = random_dual(rng, counts)
                h = induced_graphical_game(game, p)
                worst = max(worst, abs(float(c_multi(game, p)) - float(c_graphical(h, p))))
    assert report(7, "local equivalence", worst <= 1e-9, f"worst |C_G - C_H| {worst:.2e}")


def test_criterion_08_domination_verdicts():
    rng = np.random.default_rng(88)
    dominated = failures = 0
    for game in domination_corpus():
        dec = decompose(game)
        if check_domination(dec.Z, dec.C).dominates:
            dominated += 1
            p = random_dual(rng, (3, 3), scale=3.0, batch=(2_000,))
            if float(np.min(c_bimatrix(game, p))) < -1e-10:
                failures += 1
        else:
            found = negative_point_search(game)
            if found is None or not found[1] < 0:
                failures += 1
    ok = failures == 0 and 0 < dominated < 500
    assert report(8, "domination verdicts", ok,
                  f"{dominated} dominated of 500, {failures} verdict mismatches")


def test_criterion_09_radius_bounds():
    rng = np.random.default_rng(9)
    delta = 0.2
    worst = -math.inf
    for _ in range(100):
        n, m = rng.integers(2, 5, size=2)
        K = rng.normal(size=(n, m))
        r = chebyshev_fit(K).r
        xs = region_sample_points((n, m), RegionSpec(delta), num_samples=1_000, seed=int(rng.integers(1 << 30)))
        values = c_bimatrix_primal(K, -K, xs[0], xs[1])
        lower = (r * delta) ** 2 - float(np.min(values))
        upper = float(np.max(values)) - r**2
        worst = max(worst, lower, upper)
    assert report(9, "radius bounds", worst <= 1e-9, f"worst violation {worst:.2e}")


def test_criterion_10_multiplayer_potential():
    rng = np.random.default_rng(10)
    worst_equal, worst_sign, contradictions, issued = 0.0, -math.inf, 0, 0
    for game, P in potential_corpus():
        lifted = potential_coordination_lift(game, P)
        p = random_dual(rng, game.strategy_counts, batch=(200,))
        cu, cp = c_multi(game, p), c_multi(lifted, p)
        worst_equal = max(worst_equal, float(np.max(np.abs(cu - cp))))
        worst_sign = max(worst_sign, float(np.max(cu)))
        for delta in (0.1, 0.25):
            region = RegionSpec(delta)
            certificate = certify_potential_negativity(game, P, region, 0.01)
            if certificate is None:
                continue
            issued += 1
            sampled = cbar_sample(game, region, num_samples=5_000, seed=issued, mode="omwu")
            if sampled < certificate.cbar_lower - 1e-9:
                contradictions += 1
    ok = worst_equal <= 1e-9 and worst_sign <= 1e-12 and contradictions == 0
    assert report(10, "multi-player potential", ok,
                  f"|C_U - C_UP| {worst_equal:.1e}, max C {worst_sign:.1e}, "
                  f"{issued} certificates, {contradictions} contradicted")


def test_criterion_11_chaos_experiment(matching_pennies):
    start = time.perf_counter()
    eps, region = 0.01, RegionSpec(0.05)
    # a start inside S^0.05 whose orbit leaves the region after ~3e4 steps
    p0 = [np.array([1.0, 0.0]), np.zeros(2)]
    rule = UpdateRule("mwu", eps)
    cbar = cbar_sample(matching_pennies, region, num_samples=100_000, seed=11)
    ledger = accumulate_log_volume(matching_pennies, p0, rule, 40_000, region)
    window = ledger.in_region_window()
    t = np.arange(window + 1)
    bound = 0.9 * (cbar * eps**2 / 2) * t
    volume_ok = window > 0 and bool(np.all(ledger.cumulative[: window + 1] >= bound))
    div = ensemble_divergence(matching_pennies, p0, rule, 40_000, region, 1e-6, 64,
                              seed=11, cbar=cbar)
    elapsed = time.perf_counter() - start
    ok = volume_ok and div.fitted_gamma > 0 and elapsed < 10
    assert report(11, "chaos experiment", ok,
                  f"window {window} steps, log-volume {ledger.cumulative[window]:.4f} "
                  f"vs bound {bound[-1]:.4f}, fitted gamma {div.fitted_gamma:.3e} "
                  f"(predicted {div.predicted_gamma:.3e}), {elapsed:.1f}s")


def _sampled_min(game, region, mode, seed):
    # random points, the polytope corners and a coarse grid
    random_min = cbar_sample(game, region, num_samples=4_000, seed=seed, mode=mode)
    grid_min = cbar_sample(game, region, method="grid", grid_resolution=4, mode=mode)
    return min(random_min, grid_min)


def test_criterion_12_certificate_soundness(matching_pennies, example_game):
    checked, unsound = 0, []
    deltas = (0.1, 0.2, 0.3)
    bimatrix = [matching_pennies, example_game] + domination_corpus()[::5]
    for g_index, game in enumerate(bimatrix):
        for delta in deltas:
            region = RegionSpec(delta)
            for certify in (certify_mwu_chaos_domination, certify_mwu_chaos_lp):
                certificate = certify(game, region, 0.01)
                if certificate is None:
                    continue
                checked += 1
                if _sampled_min(game, region, "mwu", g_index) < certificate.cbar_lower - 1e-9:
                    unsound.append((certificate.kind, g_index, delta))
    for g_index, h in enumerate(graphical_corpus()):
        for delta in (0.1, 0.3):
            region = RegionSpec(delta)
            certificate = certify_graphical_family(h, region, 0.01)
            if certificate is None:
                continue
            checked += 1
            if _sampled_min(h, region, "mwu", g_index) < certificate.cbar_lower - 1e-9:
                unsound.append((certificate.kind, g_index, delta))
    for g_index, (game, P) in enumerate(potential_corpus()):
        for delta in (0.1, 0.25):
            region = RegionSpec(delta)
            certificate = certify_potential_negativity(game, P, region, 0.01)
            if certificate is None:
                continue
            checked += 1
            if _sampled_min(game, region, "omwu", g_index) < certificate.cbar_lower - 1e-9:
                unsound.append((certificate.kind, g_index, delta))
    ok = checked > 0 and not unsound
    assert report(12, "certificate soundness", ok,
                  f"{checked} certificates checked, {len(unsound)} contradicted by sampling")
