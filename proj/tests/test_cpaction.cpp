#include <doctest.h>

#include <cmath>

#include "gfdyn/cpaction.hpp"

using namespace gfd;

namespace {

bool has_action(const std::vector<std::pair<double, int>>& spec, double a, double tol) {
    for (const auto& [x, mult] : spec) {
        const double d = std::abs(x - (a - std::floor(a)));
        if (std::min(d, 1.0 - d) < tol) return true;
    }
    return false;
}

} // namespace

TEST_SUITE("cpaction") {

TEST_CASE("family construction checks parity and window") {
    const Fixture f = pseudo_rotation_fixture({0.1, 0.3});
    CHECK_THROWS_AS(make_family(f, 4), ParityError);
    CHECK_THROWS_AS(make_family(f, 5, 0.6), Error);
    const ConicalFamily fam = make_family(f);
    CHECK(fam.blocks() == f.tuple.size() + 5);
    CHECK(fam.in_window(-0.01));
    CHECK(!fam.in_window(1.2));
}

TEST_CASE("action derivative matches finite differences and is non-positive") {
    const ConicalFamily fam = make_family(hyperbolic_fixture(0.1));
    Vec v = Vec::LinSpaced(2 * fam.aux_dim(), -0.5, 0.7);
    const double h = 1e-6;
    const double fd = (fam.value(0.3 + h, v) - fam.value(0.3 - h, v)) / (2 * h);
    CHECK(fam.dt(0.3, v) == doctest::Approx(fd).epsilon(1e-6));
    const MonotonicityReport r = delta_monotonicity(fam, 300);
    CHECK(r.ok());
}

TEST_CASE("pseudo-rotation critical points") {
    const std::vector<double> a{0.1317, 0.2841, 0.6173};
    const ConicalFamily fam = make_family(pseudo_rotation_fixture(a));
    const CriticalSearch cs = critical_points(fam);
    REQUIRE(cs.records.size() == 3);
    for (const auto& r : cs.records) {
        CHECK(r.nullity == 0);
        CHECK(r.hessian_nullity == 0);
        CHECK(r.index == r.chart_index);
        CHECK(r.residual < 1e-9);
        const auto [shift0, shift1] = recap_shift(fam, r);
        CHECK(shift1 - shift0 == 6);
    }
    const auto spec = action_spectrum(cs.records);
    for (double x : a) CHECK(has_action(spec, x, 1e-8));
}

TEST_CASE("critical search is independent of worker count") {
    const ConicalFamily fam = make_family(hyperbolic_fixture(0.1));
    SeedOptions one, three;
    three.workers = 3;
    const auto a = critical_points(fam, one).records;
    const auto b = critical_points(fam, three).records;
    REQUIRE(a.size() == b.size());
    for (size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].t == b[k].t);
        CHECK(a[k].z == b[k].z);
    }
}

TEST_CASE("kernel correspondence on the hyperbolic fixture") {
    const ConicalFamily fam = make_family(hyperbolic_fixture(0.1));
    const CriticalSearch cs = critical_points(fam);
    CHECK(!cs.records.empty());
    for (const auto& r : cs.records) {
        const auto [hess, mono] = kernel_correspondence(fam, r);
        CHECK(hess == 0);
        CHECK(mono == 0);
    }
}

TEST_CASE("iterated family spectrum") {
    const std::vector<double> a{0.3, 0.8};
    const ConicalFamily fam = make_family(pseudo_rotation_fixture(a));
    const ConicalFamily fam3 = iterate_family(fam, 3);
    CHECK(fam3.sigma.size() == 3 * fam.sigma.size());
    const auto spec = action_spectrum(fam3);
    CHECK(has_action(spec, 0.9, 1e-7));
    CHECK(has_action(spec, 0.4, 1e-7));
    CHECK_THROWS_AS(iterate_family(fam, 7), ResourceCap);
    IterateCap tight;
    tight.max_aux = 20;
    CHECK_THROWS_AS(iterate_family(fam, 2, tight), ResourceCap);
}

TEST_CASE("projectivized monodromy of a pseudo-rotation") {
    const Fixture f = pseudo_rotation_fixture({0.1, 0.35});
    const ConicalFamily fam = make_family(f);
    const Mat M = projectivized_monodromy(fam, f.known[0].action, f.known[0].axis);
    REQUIRE(M.rows() == 2);
    // rotation by 2π(0.35 - 0.1)
    const double c = std::cos(2.0 * std::numbers::pi * 0.25);
    CHECK(M.trace() == doctest::Approx(2.0 * c).epsilon(1e-9));
    CHECK(M.determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

} // TEST_SUITE
