#include <doctest.h>

#include <numbers>

#include "gfdyn/maslov.hpp"

using namespace gfd;

namespace {

SymplecticPath two_angle_path(double a0, double a1, double b0, double b1) {
    return SymplecticPath::unitary_diagonal(2, [=](double t) {
        return std::vector<double>{a0 + (a1 - a0) * t, b0 + (b1 - b0) * t};
    });
}

} // namespace

TEST_SUITE("maslov") {

TEST_CASE("calibration on rotations") {
    CHECK(maslov_index(SymplecticPath::rotation(1, 1.0)) == -2);
    CHECK(maslov_index(SymplecticPath::rotation(1, -1.0)) == 2);
    CHECK(maslov_index(SymplecticPath::rotation(2, -1.0)) == 4);
    CHECK(maslov_index(SymplecticPath::rotation(3, -1.0)) == 6);
    CHECK(maslov_index(SymplecticPath::rotation(1, -0.3)) == 2);
    CHECK(maslov_index(SymplecticPath::rotation(1, 0.3)) == 0);
    CHECK(maslov_index(SymplecticPath::constant(2)) == 0);
}

TEST_CASE("hyperbolic exponential path") {
    Mat S(2, 2);
    S << 0.0, 1.0, 1.0, 0.0;
    const SymplecticPath p = SymplecticPath::exponential(complex_structure(1) * S);
    CHECK(p.based());
    CHECK(maslov_index(p) == 1);
}

TEST_CASE("horizon extends by the endpoint") {
    const MaslovResult r = maslov_detail(SymplecticPath::rotation(1, -0.3), 3);
    // e^{2iπ 0.9 t} for t in [0, 1]
    CHECK(r.mas == maslov_index(SymplecticPath::rotation(1, -0.9)));
    CHECK(r.nullity_end == 0);
    const MaslovResult full = maslov_detail(SymplecticPath::rotation(1, -0.5), 2);
    CHECK(full.nullity_end == 2);
}

TEST_CASE("path properties") {
    const SymplecticPath r = two_angle_path(0.0, 0.3, 0.0, -0.45);
    const SymplecticPath s = two_angle_path(0.3, 0.85, -0.45, -1.2);
    const double th = 0.4;
    CMat u(2, 2);
    u << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const PropertyReport rep =
        path_properties_suite(r, s, realify(u), [](double t) { return t * t * (3.0 - 2.0 * t); });
    CHECK(rep.concatenation_ok());
    CHECK(rep.reverse_ok());
    CHECK(rep.direct_sum_ok());
    CHECK(rep.conjugation_ok());
    CHECK(rep.reparametrization_ok());
}

TEST_CASE("mean index of a rotation") {
    const MeanIndex m = mean_index(SymplecticPath::rotation(1, -0.3), 1024, 5);
    CHECK(m.error_bar == doctest::Approx(1.0 / 1024));
    CHECK(std::abs(m.mean - 0.6) <= m.error_bar);
    CHECK(m.table.size() == 5);
    CHECK(m.table[0].mas == 2);
}

TEST_CASE("Bott inequalities hold and a shifted table breaks them") {
    const IndexReport rep = bott_report(SymplecticPath::rotation(1, -0.3), 20, 2048);
    CHECK(rep.violations == 0);
    CHECK(rep.iterates.size() == 20);
    auto shifted = rep.iterates;
    for (auto& e : shifted) e.mas += 3;
    CHECK(bott_evaluate(rep.d, rep.mean, rep.error_bar, rep.horizon, shifted).violations > 0);
    CHECK_NOTHROW(bott_check(SymplecticPath::rotation(1, 0.7), 10, 1024));
}

TEST_CASE("fixed-point index via generating functions equals the linearized path") {
    const Fixture f = pseudo_rotation_fixture({0.1317, 0.2841});
    // one more identity step gives the odd length the fiber reduction needs
    const auto odd = [&](double s) { return concat(f.family(s), identity_tuple(f.d + 1, 1)); };
    for (const auto& k : f.known) {
        const FixedPointMaslov r = fixed_point_maslov(odd, k.axis);
        CHECK(r.agree());
    }
}

TEST_CASE("iterated index identity on a pseudo-rotation axis") {
    const Fixture f = pseudo_rotation_fixture({0.0, 0.1317, 0.2841});
    const auto rows = iterated_index_identity(f, f.known[1].axis, f.known[1].action, 4);
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) CHECK(row.agree());
    const AugmentedAction a = augmented_action(f, f.known[1].axis, f.known[1].action, 3);
    CHECK(a.homogeneous());
}

} // TEST_SUITE
