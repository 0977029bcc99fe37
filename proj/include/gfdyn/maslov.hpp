#pragma once

// Maslov index of symplectic paths through quadratic generating families:
// mas = ind(Q_1) - ind(Q_0), Q_t built from Cayley factors on a fixed mesh.

#include <functional>
#include <string>
#include <vector>

#include "gfdyn/hamdiff.hpp"

namespace gfd {

// Γ : [0,1] -> Sp(2d), extended by Γ_{t+k} = Γ_t Γ_1^k
struct SymplecticPath {
    std::function<Mat(double)> sample;
    Eigen::Index d = 0;
    int resolution = 8; // starting sub-intervals per unit

    Mat at(double t) const;
    bool based(double tol = 1e-10) const;

    static SymplecticPath constant(Eigen::Index d, const Mat& m = Mat());
    // e^{2iπ turns t} on C^d
    static SymplecticPath rotation(Eigen::Index d, double turns);
    // t -> exp(t X), X Hamiltonian
    static SymplecticPath exponential(const Mat& generator);
    // diag(e^{2iπ θ_j(t)})
    static SymplecticPath unitary_diagonal(Eigen::Index d, std::function<std::vector<double>(double)> angles);
};

// R then S (S_0 = R_1), each on half the time
SymplecticPath concatenate(const SymplecticPath& r, const SymplecticPath& s);
// t -> Γ_{1-t}
SymplecticPath reverse(const SymplecticPath& r);
SymplecticPath direct_sum(const SymplecticPath& r, const SymplecticPath& s);
// A Γ_t A^{-1}
SymplecticPath conjugate(const SymplecticPath& r, const Mat& a);
// t -> Γ_{φ(t)}, φ(0) = 0, φ(1) = 1
SymplecticPath reparametrize(const SymplecticPath& r, std::function<double(double)> phi);

struct MaslovOptions {
    int max_subdivisions = 1 << 14;
    bool verify_doubling = true;
    double singular_threshold = 1e6;
};

struct MaslovResult {
    int mas = 0;
    int nullity_end = 0; // dim ker(Γ_end - I)
    int subdivisions = 0;
};

// index of the path over [0, horizon], horizon a positive integer
MaslovResult maslov_detail(const SymplecticPath& path, int horizon = 1, int subdivisions = 0,
                           const MaslovOptions& opt = {});
int maslov_index(const SymplecticPath& path, int subdivisions = 0);

// the generating-family index of the fixed factor list (Cayley Hessians); exposed for tests
Inertia cayley_chain_inertia(const std::vector<Mat>& hessians);

struct PropertyReport {
    int mas_r = 0, mas_s = 0;
    int concatenation = 0;  // mas(R∘S)
    int reversed = 0;       // mas(R^{-1})
    int direct = 0;         // mas(R ⊕ S)
    int conjugated = 0;     // mas(A R A^{-1})
    int reparametrized = 0; // mas(R∘φ)
    bool concatenation_ok() const { return concatenation == mas_r + mas_s; }
    bool reverse_ok() const { return reversed == -mas_r; }
    bool direct_sum_ok() const { return direct == mas_r + mas_s; }
    bool conjugation_ok() const { return conjugated == mas_r; }
    bool reparametrization_ok() const { return reparametrized == mas_r; }
    bool all_ok() const {
        return concatenation_ok() && reverse_ok() && direct_sum_ok() && conjugation_ok() && reparametrization_ok();
    }
};

// R and S must satisfy S_0 = R_1; a is a symplectic conjugator, phi a reparametrization
PropertyReport path_properties_suite(const SymplecticPath& r, const SymplecticPath& s, const Mat& a,
                                     std::function<double(double)> phi);

struct FixedPointMaslov {
    int index_start = 0;
    int index_end = 0;
    int index_difference = 0;
    int linearized = 0; // mas of s -> dΦ_s(z)
    bool agree() const { return index_difference == linearized; }
};

// family(s) must have constant odd size; the fiber-critical point over z is used at s = 0, 1
FixedPointMaslov fixed_point_maslov(const std::function<StepTuple(double)>& family, const Vec& z);

struct IterateEntry {
    int k = 0;
    int mas = 0;
    int nullity = 0;
};

struct MeanIndex {
    double mean = 0.0;
    double error_bar = 0.0; // d / K
    int horizon = 0;
    std::vector<IterateEntry> table;
};

// table holds k = 1..table_upto (at least k = 1)
MeanIndex mean_index(const SymplecticPath& path, int K, int table_upto = 1);

struct IndexReport {
    int d = 0;
    int mas = 0;
    double mean = 0.0;
    double error_bar = 0.0;
    int horizon = 0;
    std::vector<IterateEntry> iterates;
    // with i_k = mas_k - d: i_k - (k mean - d) and (k mean + d) - (i_k + nullity_k)
    std::vector<double> lower_margin;
    std::vector<double> upper_margin;
    int violations = 0;
    // same inequalities applied to mas_k directly
    int unshifted_violations = 0;
};

IndexReport bott_report(const SymplecticPath& path, int kmax, int mean_horizon = 4096);
// margins and violation counts for a given table
IndexReport bott_evaluate(int d, double mean, double error_bar, int horizon, std::vector<IterateEntry> iterates);
// throws VerificationFailure on any violation
IndexReport bott_check(const SymplecticPath& path, int kmax, int mean_horizon = 4096);

// s -> e^{-2iπ action s} dΦ_{m s}(axis), with the fixture's family for Φ_u, u in [0,1]
SymplecticPath fixed_point_path(const Fixture& fixture, const Vec& axis, double action, int m);

struct IterationRow {
    int m = 0;
    double action_m = 0.0; // m t - floor(m t)
    int i_m = 0;            // index of the all-identity family
    double mmas_m = 0.0;    // mean index of the y^m path
    double lhs = 0.0;       // i(m) + mmas_m
    double rhs = 0.0;       // m mmas_1 - 2(d+1) floor(m t) + i(m)
    double error_bar = 0.0;
    bool agree() const { return std::abs(lhs - rhs) <= error_bar + 1e-12; }
};

std::vector<IterationRow> iterated_index_identity(const Fixture& fixture, const Vec& axis, double action, int mmax,
                                                  int K = 40, int n2 = 5);

struct AugmentedAction {
    double value = 0.0;     // ã(y^m)
    double expected = 0.0;  // m ã(y)
    double tolerance = 0.0;
    bool homogeneous() const { return std::abs(value - expected) <= tolerance; }
};

AugmentedAction augmented_action(const Fixture& fixture, const Vec& axis, double action, int m, int K = 40);

} // namespace gfd
