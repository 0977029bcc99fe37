#include <doctest.h>

#include <random>

#include "gfdyn/hamdiff.hpp"

using namespace gfd;

namespace {

Vec gaussian(Eigen::Index n, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec v(n);
    for (auto& x : v) x = scale * g(rng);
    return v;
}

ElementaryGen small_quadratic(Eigen::Index d, std::mt19937_64& rng) {
    Mat a = Mat::NullaryExpr(2 * d, 2 * d, [&] { return std::normal_distribution<double>(0.0, 0.2)(rng); });
    return ElementaryGen::quadratic((a + a.transpose()) / 2);
}

// quartic conical field, small enough for a midpoint step of size 1/5
StepTuple quartic_tuple(Eigen::Index d, int n) {
    MonomialTerm t;
    t.coeff = {0.8, 0.3};
    t.alpha.assign(static_cast<size_t>(d), 0);
    t.beta.assign(static_cast<size_t>(d), 0);
    t.alpha[0] = 1;
    t.beta[static_cast<size_t>(d - 1)] = 1;
    t.norm_power = 1;
    return tuple_from_flow(HamiltonianField(d, {t}), n, 1.0);
}

} // namespace

TEST_SUITE("genfun") {

TEST_CASE("step map lies on the graph of the gradient") {
    std::mt19937_64 rng(1);
    const ElementaryGen f = small_quadratic(2, rng);
    const Vec z = gaussian(4, 1.0, rng);
    const StepResult s = step_map(f, z);
    const auto [mid, slope] = tau(z, s.sigma_z);
    CHECK((mid - s.w).norm() < 1e-13);
    CHECK((slope - f.gradient(s.w)).norm() < 1e-12);
    CHECK((step_source(f, s.w) - z).norm() < 1e-13);
    CHECK((step_image(f, s.w) - s.sigma_z).norm() < 1e-13);
}

TEST_CASE("step Jacobian matches finite differences") {
    const StepTuple tup = quartic_tuple(2, 5);
    std::mt19937_64 rng(3);
    const Vec z = gaussian(4, 0.7, rng);
    const StepResult s = step_map(tup[0], z);
    const Mat Jac = step_jacobian(tup[0], s.w);
    const double h = 1e-6;
    for (Eigen::Index c = 0; c < 4; ++c) {
        Vec e = Vec::Zero(4);
        e(c) = h;
        const Vec fd = (step_map(tup[0], Vec(z + e)).sigma_z - step_map(tup[0], Vec(z - e)).sigma_z) / (2 * h);
        CHECK((fd - Jac.col(c)).norm() < 1e-7);
    }
    CHECK(symplectic_defect(Jac) < 1e-10);
}

TEST_CASE("averaging map inverts for odd length") {
    std::mt19937_64 rng(5);
    const Vec v = gaussian(2 * 2 * 5, 1.0, rng);
    const Vec w = averaging_map(v, 2);
    CHECK((averaging_inverse(w, 2) - v).norm() < 1e-12);
    const Vec g = gaussian(v.size(), 1.0, rng);
    const Vec y = averaging_transpose_solve(g, 2);
    // A^T y = g, checked through <A x, y> = <x, g>
    const Vec x = gaussian(v.size(), 1.0, rng);
    CHECK(std::abs(averaging_map(x, 2).dot(y) - x.dot(g)) < 1e-11);
}

TEST_CASE("broken gradient follows the jump law and finite differences") {
    std::mt19937_64 rng(7);
    for (int n : {3, 5}) {
        const StepTuple tup = quartic_tuple(2, n);
        const Vec v = gaussian(2 * 2 * n, 0.4, rng);
        const BrokenCoordinates bc = broken_coordinates(tup, v);
        const Vec g = broken_gradient(tup, v);
        for (Eigen::Index k = 0; k < n; ++k) {
            const Vec law = times_i(Vec(slot(bc.z, k, 2) - slot(bc.sigma_z, (k + n - 1) % n, 2)));
            CHECK((slot(g, k, 2) - law).norm() < 1e-10);
        }
        const double h = 1e-5;
        for (Eigen::Index c = 0; c < v.size(); ++c) {
            Vec e = Vec::Zero(v.size());
            e(c) = h;
            const double fd = (broken_value(tup, Vec(v + e)) - broken_value(tup, Vec(v - e))) / (2 * h);
            CHECK(fd == doctest::Approx(g(c)).epsilon(1e-5).scale(1.0));
        }
    }
}

TEST_CASE("broken Hessian is the derivative of the gradient") {
    const StepTuple tup = quartic_tuple(2, 5);
    std::mt19937_64 rng(8);
    const Vec v = gaussian(20, 0.4, rng);
    const Mat H = broken_hessian(tup, v).matrix();
    CHECK((H - broken_hessian_blocks(tup, v).dense()).norm() < 1e-12);
    const double h = 1e-6;
    for (Eigen::Index c = 0; c < v.size(); c += 3) {
        Vec e = Vec::Zero(v.size());
        e(c) = h;
        const Vec fd = (broken_gradient(tup, Vec(v + e)) - broken_gradient(tup, Vec(v - e))) / (2 * h);
        CHECK((fd - H.col(c)).norm() < 1e-6);
    }
}

TEST_CASE("fixed points of the composition are critical points") {
    const StepTuple tup = rotation_tuple(0.3, 5, 2);
    // e^{-2iπ 0.3} has no fixed point but 0; use a fixed point of the quartic flow instead
    const StepTuple q = quartic_tuple(2, 5);
    Vec z1 = Vec::Zero(4);
    CHECK(broken_gradient(q, v_from_trajectory(q, z1)).norm() < 1e-12);
    CHECK(broken_gradient(tup, Vec(Vec::Zero(20))).norm() == 0.0);
}

TEST_CASE("decomposition splits the broken function") {
    std::mt19937_64 rng(11);
    StepTuple sigma = quartic_tuple(2, 4);
    const StepTuple delta = rotation_tuple(0.37, 5, 2);
    for (int s = 0; s < 20; ++s) {
        const Vec v = gaussian(2 * 2 * 9, 0.5, rng);
        const auto [lhs, rhs] = decompose_check(sigma, delta, v);
        CHECK(std::abs(lhs - rhs) < 1e-11 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("stabilization keeps the index") {
    const StepTuple sigma = concat(rotation_tuple(0.2, 5, 2), identity_tuple(2, 1));
    const StepTuple delta = identity_tuple(2, 5);
    const StabilizationReport r = stabilize(sigma, delta);
    CHECK(r.consistent());
    CHECK(r.splitting_residual < 1e-10);
}

TEST_CASE("smallness certificate on small steps") {
    const SmallnessReport r = certify_smallness(quartic_tuple(2, 5));
    CHECK(r.ok);
    CHECK(r.failures == 0);
    CHECK(r.samples > 0);
}

TEST_CASE("tuple algebra") {
    const StepTuple a = identity_tuple(2, 3);
    const StepTuple b = rotation_tuple(0.1, 5, 2);
    CHECK(concat(a, b).size() == 8);
    CHECK(repeat(b, 3).size() == 15);
    CHECK(a.quadratic());
    CHECK(b.conical());
    CHECK_THROWS_AS(concat(a, identity_tuple(3, 1)), DimensionMismatch);
}

} // TEST_SUITE
