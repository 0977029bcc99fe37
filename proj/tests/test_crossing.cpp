#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gfdyn/crossing.hpp"

using namespace gfd;

TEST_SUITE("crossing") {

TEST_CASE("sphere exponent keeps the cube inside a factor two") {
    CHECK(choose_pm(1) == 2);
    CHECK(choose_pm(4) == 2);
    CHECK(choose_pm(5) == 3);
    CHECK(choose_pm(16) == 4);
    CHECK(choose_pm(17) == 5);
    for (int K : {3, 13, 40}) {
        const double lam = lambda_bound(K, choose_pm(K), 2);
        CHECK(lam >= 1.0);
        CHECK(lam <= 2.0);
    }
}

TEST_CASE("pseudo-gradient is tangent and lowers the action") {
    const ConicalFamily fam = make_family(hyperbolic_fixture(0.1), 5, 0.45);
    const LevelFunction level = make_level(fam);
    std::mt19937_64 rng(17);
    int sampled = 0;
    for (int k = 0; k < 20; ++k) {
        const auto pt = sample_manifold(level, rng);
        if (!pt) continue;
        ++sampled;
        const auto [t, w] = *pt;
        CHECK(std::abs(level.value(t, w)) < 1e-10);
        CHECK(std::abs(level.sphere(w) - 1.0) < 1e-10);
        const GradientIdentities g = pseudo_gradient_identities(level, t, w);
        CHECK(g.tangency < 1e-10);
        CHECK(g.sphere < 1e-10);
        CHECK(g.action_rate < 1e-10);
        CHECK(pseudo_gradient(level, t, w).t_rate <= 0.0);
    }
    CHECK(sampled >= 10);
    CHECK_THROWS_AS(pseudo_gradient(level, 0.3, Vec(Vec::Ones(2 * fam.aux_dim()))), Error);
}

TEST_CASE("neighborhood distances are phase invariant") {
    const Fixture f = hyperbolic_fixture(0.1);
    const ConicalFamily fam = make_family(f, 5, 0.45);
    const auto& k = f.known.front();
    const TrajectoryNeighborhood nb = make_neighborhood(fam, k.axis, k.action, 0.2);
    CHECK(nb.lambda >= 1.0);
    CHECK(nb.blocks() == fam.blocks());
    const Vec center = nb.lambda * nb.a;
    CHECK(phase_distance(nb, center) < 1e-9);
    CHECK(phase_distance(nb, rotate_phase(center, 1.1)) < 1e-9);
    CHECK(projective_distance(nb, Vec(3.0 * center)) < 1e-9);
    CHECK(box_distance(nb, nb.a) == 0.0);
    const Membership in = neighborhood_membership(nb, center);
    CHECK(in.in_v);
    Vec far = center;
    slot(far, 0, 2) = -slot(far, 0, 2);
    CHECK(!neighborhood_membership(nb, far).in_v);
}

TEST_CASE("flow lines descend in action and stay on the level") {
    const Fixture f = hyperbolic_fixture(0.1);
    const ConicalFamily fam = make_family(f, 5, 0.45);
    const LevelFunction level = make_level(fam);
    std::mt19937_64 rng(23);
    const auto pt = sample_manifold(level, rng);
    REQUIRE(pt);
    FlowOptions opt;
    opt.max_steps = 400;
    const FlowLine down = flow_line(level, pt->first, pt->second, 1, {}, opt);
    CHECK(down.max_action_increase <= 1e-12);
    CHECK(down.max_drift < 1e-9);
    CHECK(down.t_end <= pt->first);
    const FlowLine up = flow_line(level, pt->first, pt->second, -1, {}, opt);
    CHECK(up.t_end >= pt->first);
    CHECK(!down.termination.empty());
}

TEST_CASE("small crossing run") {
    const Fixture f = hyperbolic_fixture(0.1);
    const auto& k = f.known.front();
    CrossingOptions opt;
    opt.m_list = {1, 2};
    opt.seeds_per_m = 8;
    opt.interior_seeds_per_m = 16;
    const CrossingTable table = crossing_experiment(f, k.axis, k.action, opt);
    // both directions from every seed
    CHECK(table.rows.size() == 2 * 2 * (8 + 16));
    for (const auto& r : table.rows)
        if (r.crossed) CHECK(r.delta_action > 0.0);
    CHECK(table.isolation > 0.2);
    CHECK(table.distance_floor >= 0.05);
    opt.m_list = {9};
    CHECK_THROWS_AS(crossing_experiment(f, k.axis, k.action, opt), ResourceCap);
}

} // TEST_SUITE
