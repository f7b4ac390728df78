import itertools

import numpy as np
import pytest

from chaoscope.certificates import (
    cbar_sample,
    certify_graphical_family,
    certify_mwu_chaos_domination,
    certify_mwu_chaos_lp,
    certify_potential_negativity,
    check_domination,
    complement_basis,
    evaluate_c,
    lyapunov_exponent,
    negative_point_search,
    projected_matrices,
    region_sample_points,
    sample_truncated_simplex,
    truncated_simplex_grid,
    truncated_simplex_vertices,
)
from chaoscope.cfunction import c_bimatrix, c_multi
from chaoscope.decomposition import (
    chebyshev_fit,
    decompose,
    l2_trivial_projection,
    potential_coordination_lift,
)
from chaoscope.game_core import BimatrixGame, GraphicalGame, NormalFormGame, RegionSpec

from conftest import MP, random_bimatrix

EPS = 0.01


def pairwise_pennies(N=3):
    edges = {}
    for i, k in itertools.combinations(range(N), 2):
        edges[(i, k)] = MP
        edges[(k, i)] = -MP.T
    return GraphicalGame((2,) * N, edges)


class TestDomination:
    def test_equal_matrices(self):
        r = check_domination(MP, MP)
        assert r.dominates and r.theta_margin == 0.0

    def test_pennies_over_scaled_identity(self):
        r = check_domination(MP, 0.05 * np.eye(2))
        assert r.dominates
        assert r.theta_margin == pytest.approx(3.9, abs=1e-14)
        j, jp, k, kp = r.witness
        assert j != jp and k != kp

    def test_worked_example(self, example_game):
        d = decompose(example_game)
        r = check_domination(d.Z, d.C)
        assert r.dominates and r.theta_margin == pytest.approx(18.0)

    def test_failure_reports_violation(self):
        r = check_domination(0.05 * np.eye(2), MP)
        assert not r.dominates and r.theta_margin is None and r.violation is not None

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            check_domination(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_transitive_on_random_corpus(self):
        rng = np.random.default_rng(0)
        mats = [rng.normal(size=(3, 3)) * s for s in (0.2, 0.5, 1.0, 2.0, 5.0) for _ in range(8)]
        dom = {(a, b): check_domination(mats[a], mats[b]).dominates
               for a in range(len(mats)) for b in range(len(mats))}
        for a, b, c in itertools.product(range(len(mats)), repeat=3):
            if dom[(a, b)] and dom[(b, c)]:
                assert dom[(a, c)]


class TestBimatrixCertificates:
    def test_matching_pennies(self, matching_pennies):
        cert = certify_mwu_chaos_domination(matching_pennies, RegionSpec(0.1), EPS)
        assert cert is not None
        assert cert.theta == 4.0
        assert cert.cbar_lower == pytest.approx(16e-4, rel=1e-12)
        assert cert.lyapunov_exponent == pytest.approx(16e-4 * EPS**2 / 8)
        assert cert.paper_exponent == pytest.approx(16 * 0.01 * EPS**2 / 8)
        sampled = cbar_sample(matching_pennies, RegionSpec(0.1), method="grid", grid_resolution=20)
        assert sampled == pytest.approx(0.1296, rel=1e-12)
        assert sampled >= cert.cbar_lower

    def test_coordination_not_certified(self, coordination_pennies):
        assert certify_mwu_chaos_domination(coordination_pennies, RegionSpec(0.1), EPS) is None
        assert certify_mwu_chaos_lp(coordination_pennies, RegionSpec(0.1), EPS) is None

    def test_worked_example(self, example_game):
        cert = certify_mwu_chaos_domination(example_game, RegionSpec(0.2), EPS)
        assert cert.theta == pytest.approx(18.0)
        lp = certify_mwu_chaos_lp(example_game, RegionSpec(0.3), EPS)
        assert lp.cbar_lower == pytest.approx(1.76, abs=1e-10)
        assert lp.details["r_Z"] == pytest.approx(8.0) and lp.details["r_C"] == pytest.approx(2.0)
        assert (lp.theta * 0.3) ** 2 == pytest.approx(1.76)

    def test_lp_zero_sum(self):
        rng = np.random.default_rng(1)
        Z = rng.normal(size=(3, 3))
        cert = certify_mwu_chaos_lp(BimatrixGame(Z, -Z), RegionSpec(0.1), EPS)
        rz = decompose(BimatrixGame(Z, -Z)).Z
        assert cert.cbar_lower == pytest.approx((chebyshev_fit(rz).r * 0.1) ** 2, rel=1e-12)

    def test_epsilon_must_be_positive(self, matching_pennies):
        with pytest.raises(ValueError, match="epsilon"):
            certify_mwu_chaos_domination(matching_pennies, RegionSpec(0.1), 0.0)

    def test_region_validated(self, matching_pennies):
        with pytest.raises(ValueError, match="delta"):
            certify_mwu_chaos_lp(matching_pennies, RegionSpec(0.7), EPS)

    def test_lp_bounds_hold_on_sampled_points(self):
        # C_(Z,-Z) >= (r(Z) delta)^2 and C_(C,-C) <= r(C)^2 on the region
        rng = np.random.default_rng(2)
        region = RegionSpec(0.1)
        for _ in range(20):
            g = random_bimatrix(rng, max_n=4)
            d = decompose(g)
            xs = region_sample_points(g.strategy_counts, region, 2000, seed=3)
            cz = evaluate_c(BimatrixGame(d.Z, -d.Z), xs)
            cc = evaluate_c(BimatrixGame(d.C, -d.C), xs)
            assert cz.min() >= (chebyshev_fit(d.Z).r * region.delta) ** 2 - 1e-9
            assert cc.max() <= chebyshev_fit(d.C).r ** 2 + 1e-9

    def test_certificate_dict(self, matching_pennies):
        out = certify_mwu_chaos_domination(matching_pennies, RegionSpec(0.1), EPS).to_dict()
        assert out["certified"] is True and out["kind"] == "domination" and out["algorithm"] == "MWU"
        assert out["dimension"] == 4


class TestNegativeSearch:
    def test_finds_negative_point_when_not_dominated(self, coordination_pennies):
        p, c = negative_point_search(coordination_pennies)
        assert c < 0
        assert c_bimatrix(coordination_pennies, p) == pytest.approx(c, rel=1e-9)

    def test_none_when_dominated(self, matching_pennies):
        assert negative_point_search(matching_pennies) is None


class TestGraphicalFamily:
    def test_pairwise_pennies(self):
        cert = certify_graphical_family(pairwise_pennies(), RegionSpec(0.1), EPS)
        assert cert is not None
        assert cert.cbar_lower == pytest.approx(3 * 16 * 0.1**4, rel=1e-12)
        assert cert.lyapunov_exponent == pytest.approx(cert.cbar_lower * EPS**2 / 12)
        assert cert.paper_exponent == pytest.approx(6 * 16 * 0.01 * EPS**2 / 24)

    def test_one_coordination_edge(self):
        h = GraphicalGame((2, 2, 2), {(0, 1): MP, (1, 0): MP.T})
        assert certify_graphical_family(h, RegionSpec(0.1), EPS) is None

    def test_single_edge_reduces_to_bimatrix(self, matching_pennies):
        h = GraphicalGame((2, 2), {(0, 1): MP, (1, 0): -MP.T})
        a = certify_graphical_family(h, RegionSpec(0.1), EPS)
        b = certify_mwu_chaos_domination(matching_pennies, RegionSpec(0.1), EPS)
        assert a.cbar_lower == pytest.approx(b.cbar_lower) and a.theta == b.theta

    def test_all_zero_not_certified(self):
        assert certify_graphical_family(GraphicalGame((2, 2, 2), {}), RegionSpec(0.1), EPS) is None


class TestPotential:
    def test_complement_basis_orthonormal(self):
        basis = complement_basis(3, 4)
        assert basis.shape == (6, 3, 4)
        gram = np.einsum("ajl,bjl->ab", basis, basis)
        np.testing.assert_allclose(gram, np.eye(6), atol=1e-13)
        np.testing.assert_allclose(basis.sum(axis=1), 0, atol=1e-13)
        np.testing.assert_allclose(basis.sum(axis=2), 0, atol=1e-13)

    def test_projected_matrices(self):
        P = np.arange(12.0).reshape(2, 3, 2)
        mats = projected_matrices(P, 0, 2)
        assert mats.shape == (3, 2, 2)
        np.testing.assert_array_equal(mats[1], P[:, 1, :])

    def test_coordination_certified(self, coordination_pennies):
        cert = certify_potential_negativity(coordination_pennies, MP, RegionSpec(0.1), EPS)
        assert cert is not None and cert.algorithm == "OMWU"
        assert cert.theta == pytest.approx(2.0)
        assert cert.cbar_lower == pytest.approx(0.01 * 4.0)
        sampled = cbar_sample(coordination_pennies, RegionSpec(0.1), mode="omwu",
                              method="grid", grid_resolution=20)
        assert sampled == pytest.approx(0.1296, rel=1e-12)

    def test_outer_sum_not_certified(self):
        rng = np.random.default_rng(4)
        a = [rng.normal(size=n) for n in (2, 3, 2)]
        P = a[0][:, None, None] + a[1][None, :, None] + a[2][None, None, :]
        game = NormalFormGame((P, P, P))
        assert certify_potential_negativity(game, P, RegionSpec(0.1), EPS) is None
        xs = region_sample_points((2, 3, 2), RegionSpec(0.1), 500, seed=1)
        assert np.max(np.abs(evaluate_c(game, xs))) <= 1e-10

    def test_single_pair_with_shared_matrix(self):
        rng = np.random.default_rng(5)
        M = rng.normal(size=(2, 3))
        b = rng.normal(size=2)
        P = M[:, :, None] + b[None, None, :]
        game = potential_coordination_lift(NormalFormGame((P, P, P)), P)
        cert = certify_potential_negativity(game, P, RegionSpec(0.1), EPS)
        assert cert.theta == pytest.approx(l2_trivial_projection(M)[2], rel=1e-12)

    def test_not_a_potential(self, matching_pennies):
        with pytest.raises(ValueError, match="potential"):
            certify_potential_negativity(matching_pennies, MP, RegionSpec(0.1), EPS)

    def test_sound_on_random_potentials(self):
        rng = np.random.default_rng(6)
        region = RegionSpec(0.15)
        for counts in [(2, 2), (3, 2), (2, 2, 2), (2, 3, 2)]:
            for _ in range(5):
                P = rng.normal(size=counts)
                game = potential_coordination_lift(NormalFormGame(tuple(P for _ in counts)), P)
                cert = certify_potential_negativity(game, P, region, EPS)
                if cert is None:
                    continue
                sampled = cbar_sample(game, region, num_samples=3000, seed=1, mode="omwu")
                assert sampled >= cert.cbar_lower - 1e-9


class TestSampling:
    def test_truncated_simplex(self):
        rng = np.random.default_rng(7)
        x = sample_truncated_simplex(3, 0.1, 1000, rng)
        assert np.all(x >= 0.1 - 1e-15)
        np.testing.assert_allclose(x.sum(axis=1), 1.0)

    def test_vertices(self):
        v = truncated_simplex_vertices(3, 0.1)
        np.testing.assert_allclose(v, 0.1 + 0.7 * np.eye(3))

    def test_grid(self):
        g = truncated_simplex_grid(3, 0.1, 4)
        assert len(g) == 15
        np.testing.assert_allclose(g.sum(axis=1), 1.0)
        assert np.all(g >= 0.1 - 1e-15)

    def test_matching_pennies_random(self, matching_pennies):
        assert cbar_sample(matching_pennies, RegionSpec(0.1)) == pytest.approx(0.1296, rel=0.02)

    def test_matching_pennies_without_vertices(self, matching_pennies):
        value = cbar_sample(matching_pennies, RegionSpec(0.1), include_vertices=False)
        assert value == pytest.approx(0.1296, rel=0.02)
        assert value >= 0.1296

    def test_zero_game(self):
        g = BimatrixGame(np.zeros((2, 2)), np.zeros((2, 2)))
        assert cbar_sample(g, RegionSpec(0.1), num_samples=1000) == 0.0

    def test_deterministic(self, example_game):
        a = cbar_sample(example_game, RegionSpec(0.2), num_samples=5000, seed=3)
        b = cbar_sample(example_game, RegionSpec(0.2), num_samples=5000, seed=3)
        assert a == b

    def test_bad_mode(self, matching_pennies):
        with pytest.raises(ValueError, match="mode"):
            cbar_sample(matching_pennies, RegionSpec(0.1), mode="sgd")


def test_lyapunov_exponent():
    assert lyapunov_exponent(0.5, 0.1, 5) == pytest.approx(0.5 * 0.01 / 10)


def test_three_player_pennies_sampled_above_certificate():
    h = pairwise_pennies()
    cert = certify_graphical_family(h, RegionSpec(0.1), EPS)
    assert cbar_sample(h, RegionSpec(0.1), num_samples=5000) >= cert.cbar_lower
    assert c_multi(h.to_normal_form(), [np.zeros(2)] * 3) == pytest.approx(3.0)
