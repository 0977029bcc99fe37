#include <doctest.h>

#include <numbers>
#include <random>

#include "gfdyn/symplin.hpp"

using namespace gfd;

namespace {

Mat random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Mat a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
    return (a + a.transpose()) / 2;
}

Mat unitary_rotation(double t, Eigen::Index n) {
    return realify(CMat(std::polar(1.0, -2.0 * std::numbers::pi * t) * CMat::Identity(n, n)));
}

} // namespace

TEST_SUITE("symplin") {

TEST_CASE("times_i is the complex structure") {
    const Vec v = Vec::LinSpaced(6, -1.0, 2.0);
    CHECK((times_i(v) - complex_structure(3) * v).norm() < 1e-15);
    CHECK((times_i(times_i(v)) + v).norm() < 1e-15);
    CHECK((realify(complexify(v)) - v).norm() == 0.0);
    // <i v, v> = 0, <i v, i v> = |v|^2
    CHECK(std::abs(omega(v, v)) < 1e-15);
    CHECK(omega(v, Vec(times_i(v))) == doctest::Approx(v.squaredNorm()));
}

TEST_CASE("tau pairs midpoint and rotated difference") {
    Vec z(2), Z(2);
    z << 1.0, 2.0;
    Z << 3.0, -1.0;
    const auto [mid, slope] = tau(z, Z);
    CHECK(mid(0) == 2.0);
    CHECK(mid(1) == 0.5);
    // i((1+2i) - (3-i)) = i(-2+3i) = -3-2i
    CHECK(slope(0) == -3.0);
    CHECK(slope(1) == -2.0);
    CHECK_THROWS_AS(tau(Vec(Vec::Zero(3)), Vec(Vec::Zero(3))), DimensionMismatch);
    CHECK_THROWS_AS(tau(Vec(Vec::Zero(2)), Vec(Vec::Zero(4))), DimensionMismatch);
}

TEST_CASE("complex line complement is orthonormal and hermitian-orthogonal") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Vec z(6);
    for (auto& x : z) x = g(rng);
    const Mat B = complex_line_complement(z);
    REQUIRE(B.cols() == 4);
    CHECK((B.transpose() * B - Mat::Identity(4, 4)).norm() < 1e-12);
    for (Eigen::Index c = 0; c < B.cols(); ++c) CHECK(std::abs(hermitian_dot(z, B.col(c))) < 1e-12);
    // J-invariant: span is closed under i
    const Mat JB = complex_structure(3) * B;
    CHECK((B * (B.transpose() * JB) - JB).norm() < 1e-12);
}

TEST_CASE("rotation Cayley form is -tan(pi t)|w|^2") {
    for (double t : {0.4, -0.4, 0.25, -0.25, 0.1}) {
        const QuadForm q = cayley_genfn(SymplecticMatrix(unitary_rotation(t, 2)));
        const Mat expected = -2.0 * std::tan(std::numbers::pi * t) * Mat::Identity(4, 4);
        CHECK((q.matrix() - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("Cayley form reproduces the map through its gradient") {
    // Cayley image of J S, symplectic for any symmetric S
    std::mt19937_64 rng(9);
    const Mat JS = 0.3 * complex_structure(2) * random_symmetric(4, rng);
    const Mat I = Mat::Identity(4, 4);
    const Mat M = (I + JS / 2) * (I - JS / 2).inverse();
    REQUIRE(symplectic_defect(M) < 1e-12);
    const QuadForm q = cayley_genfn(SymplecticMatrix(M));
    Vec z(4);
    z << 0.3, -0.1, 0.7, 0.2;
    const Vec Z = M * z;
    const auto [w, slope] = tau(z, Z);
    CHECK((q.gradient(w) - slope).norm() < 1e-12);
}

TEST_CASE("Cayley singular and non-symplectic inputs are rejected") {
    CHECK_THROWS_AS(cayley_genfn(SymplecticMatrix(-Mat::Identity(2, 2))), CayleySingular);
    Mat bad = Mat::Identity(2, 2);
    bad(0, 0) = 2.0;
    CHECK_THROWS_AS(SymplecticMatrix{bad}, NotSymplectic);
}

TEST_CASE("inertia counts with explicit tolerance") {
    Mat m = Mat::Zero(4, 4);
    m.diagonal() << -2.0, 0.0, 3.0, -1e-12;
    const Inertia in = inertia(m, 1e-9);
    CHECK(in.index == 1);
    CHECK(in.nullity == 2);
    CHECK(in.coindex == 1);
    const auto [idx, nul] = quad_index(QuadForm(m, 1e-9));
    CHECK(idx == 1);
    CHECK(nul == 2);
}

TEST_CASE("cyclic block elimination matches dense eigenvalues") {
    std::mt19937_64 rng(4);
    for (int n : {3, 5, 7}) {
        CyclicBlockForm f;
        for (int k = 0; k < n; ++k) {
            f.diag.push_back(random_symmetric(4, rng));
            std::normal_distribution<double> g;
            Mat u(4, 4);
            for (auto& x : u.reshaped()) x = g(rng);
            f.upper.push_back(u);
        }
        const Mat dense = f.dense();
        CHECK((dense - dense.transpose()).norm() == 0.0);
        const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(dense).eigenvalues();
        CHECK(f.norm_bound() >= ev.cwiseAbs().maxCoeff() - 1e-12);
        for (double shift : {0.0, 0.5, -1.3}) {
            const int expected = static_cast<int>((ev.array() + shift < 0.0).count());
            CHECK(negative_count(f, shift) == expected);
        }
        const Inertia a = inertia(f, 1e-9);
        const Inertia b = inertia(dense, 1e-9);
        CHECK(a.index == b.index);
        CHECK(a.nullity == b.nullity);
    }
}

} // TEST_SUITE
