#include <doctest.h>

#include <numbers>
#include <random>

#include "gfdyn/hamdiff.hpp"

using namespace gfd;

TEST_SUITE("hamdiff") {

TEST_CASE("rotation step is the exact rotation") {
    Vec z(4);
    z << 0.3, -0.2, 1.1, 0.4;
    for (double t : {0.1, -0.2, 0.35}) {
        const StepResult s = step_map(rotation_step(t, 2), z);
        const Vec expected = rotate_phase(z, -2.0 * std::numbers::pi * t);
        CHECK((s.sigma_z - expected).norm() < 1e-12);
    }
    const StepTuple g = rotation_tuple(0.4, 5, 2);
    CHECK(g.size() == 5);
    CHECK((apply_tuple(g, z) - rotate_phase(z, -2.0 * std::numbers::pi * 0.4)).norm() < 1e-12);
    CHECK_THROWS(rotation_tuple(0.4, 4, 2));
}

TEST_CASE("pseudo-rotation fixture fixes the coordinate axes") {
    const Fixture f = pseudo_rotation_fixture({0.1317, 0.2841, 0.6173});
    CHECK(f.d == 2);
    CHECK(f.tuple.size() % 2 == 0);
    REQUIRE(f.known.size() == 3);
    for (const auto& k : f.known) {
        const Vec image = apply_tuple(f.tuple, k.axis);
        CHECK((image - rotate_phase(k.axis, 2.0 * std::numbers::pi * k.action)).norm() < 1e-12);
    }
    CHECK_NOTHROW(verify_fixture(f));
}

TEST_CASE("hyperbolic fixture: known fixed points and saddle spectrum") {
    const Fixture f = hyperbolic_fixture(0.1);
    CHECK(f.d == 1);
    CHECK_NOTHROW(verify_fixture(f));
    for (const auto& k : f.known) {
        const CVec ev = projectivized_eigenvalues(f.tuple, k.axis, k.action);
        REQUIRE(ev.size() == 2);
        for (Eigen::Index j = 0; j < ev.size(); ++j) CHECK(std::abs(std::abs(ev(j)) - 1.0) > 1e-3);
    }
}

TEST_CASE("tuple Jacobian matches finite differences") {
    const Fixture f = hyperbolic_fixture(0.1);
    Vec z(4);
    z << 0.6, 0.1, -0.3, 0.5;
    const Mat J = tuple_jacobian(f.tuple, z);
    const double h = 1e-6;
    for (Eigen::Index c = 0; c < 4; ++c) {
        Vec e = Vec::Zero(4);
        e(c) = h;
        const Vec fd = (apply_tuple(f.tuple, Vec(z + e)) - apply_tuple(f.tuple, Vec(z - e))) / (2 * h);
        CHECK((fd - J.col(c)).norm() < 1e-7);
    }
    CHECK(symplectic_defect(J) < 1e-9);
}

TEST_CASE("Hamiltonian field derivatives") {
    MonomialTerm t;
    t.coeff = {0.4, -0.7};
    t.alpha = {2, 0};
    t.beta = {0, 1};
    t.cos_amp = 0.3;
    const HamiltonianField h(2, {t});
    CHECK(!h.autonomous());
    CHECK(!h.conical());
    Vec z(4);
    z << 0.2, 0.5, -0.4, 0.3;
    const double eps = 1e-6;
    const Vec g = h.gradient(0.3, z);
    const Mat H = h.hessian(0.3, z);
    for (Eigen::Index c = 0; c < 4; ++c) {
        Vec e = Vec::Zero(4);
        e(c) = eps;
        CHECK((h.value(0.3, Vec(z + e)) - h.value(0.3, Vec(z - e))) / (2 * eps) ==
              doctest::Approx(g(c)).epsilon(1e-6));
        CHECK(((h.gradient(0.3, Vec(z + e)) - h.gradient(0.3, Vec(z - e))) / (2 * eps) - H.col(c)).norm() < 1e-6);
    }
}

TEST_CASE("lift certificate separates conical fields") {
    CHECK(lift_validate(HamiltonianField::diagonal({0.2, -0.5})).pass());
    CHECK(lift_validate(hyperbolic_fixture(0.1).hamiltonian).pass());
    MonomialTerm cubic;
    cubic.alpha = {2, 0};
    cubic.beta = {1, 0};
    const LiftCertificate c = lift_validate(HamiltonianField(2, {cubic}));
    CHECK(!c.two_homogeneous);
    MonomialTerm twisted;
    twisted.alpha = {2, 0};
    twisted.beta = {0, 0};
    const LiftCertificate d = lift_validate(HamiltonianField(2, {twisted}));
    CHECK(d.two_homogeneous);
    CHECK(!d.s1_invariant);
}

TEST_CASE("midpoint discretization of a diagonal field") {
    // H = -π a |z|^2 generates e^{-2iπ a t}; the midpoint rule preserves |z|
    const StepTuple tup = tuple_from_flow(HamiltonianField::diagonal({-std::numbers::pi * 0.3}), 7);
    Vec z(2);
    z << 1.0, 0.0;
    const Vec image = apply_tuple(tup, z);
    CHECK(image.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conjugating a tuple conjugates the map") {
    const Fixture f = hyperbolic_fixture(0.1);
    const double th = 0.7;
    CMat u(2, 2);
    u << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Mat U = realify(u);
    const StepTuple conj = conjugate(f.tuple, U);
    Vec z(4);
    z << 0.3, 0.2, -0.5, 0.1;
    CHECK((apply_tuple(conj, z) - U * apply_tuple(f.tuple, Vec(U.transpose() * z))).norm() < 1e-10);
}

} // TEST_SUITE
