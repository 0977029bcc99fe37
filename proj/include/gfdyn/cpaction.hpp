#pragma once

// The CP^d variational principle. F_t = F_{(σ, δ_t)} generates e^{-2iπt}Φ; a fixed
// direction [Z] of action t is a critical point of F_t restricted to the level
// F_t = 0, and its broken coordinates carry a 2-dimensional kernel C·ζ.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gfdyn/hamdiff.hpp"

namespace gfd {

struct ConicalFamily {
    StepTuple sigma;                               // even size, last step identity
    std::function<StepTuple(double)> sigma_family; // s -> σ_s, may be empty
    Eigen::Index d = 0;                            // CP^d
    int n2 = 5;
    double epsilon = 0.05;

    Eigen::Index lift_dim() const { return d + 1; }
    Eigen::Index blocks() const { return sigma.size() + n2; }
    Eigen::Index aux_dim() const { return lift_dim() * blocks(); } // N + 1
    bool in_window(double t) const { return t > -epsilon && t < 1.0 + epsilon; }

    StepTuple tuple(double t) const;           // (σ, δ_t)
    StepTuple tuple(double s, double t) const; // (σ_s, δ_t)
    double value(double t, const Vec& v) const;
    Vec gradient(double t, const Vec& v) const;
    // ∂_t F_t(v); only the δ_t blocks depend on t
    double dt(double t, const Vec& v) const;
};

ConicalFamily make_family(const Fixture& fixture, int n2 = 5, double epsilon = 0.05);

struct CriticalRecord {
    double t = 0.0;
    Vec z; // unit, largest coordinate real positive
    Vec v;
    double action = 0.0; // t mod 1
    int index = 0;
    int nullity = 0;          // dim ker(dφ - id), projectivized linearization
    int hessian_nullity = 0;  // dim ker d²F_t(v) - 2
    int chart_index = 0;      // index of d²F_t on the complement of C·ζ
    double residual = 0.0;    // |e^{-2iπt}Φ(Z) - Z|
    double gradient_residual = 0.0;
};

struct SeedOptions {
    int random = 24;
    bool axes = true;
    std::uint64_t seed = 1;
    int workers = 1;
    double tol = 1e-11;
    int max_iter = 80;
    double phase = 0.0; // global phase applied to every seed
};

struct CriticalSearch {
    std::vector<CriticalRecord> records;
    int attempted = 0;
    std::vector<std::string> failures;
};

// throws Error when nothing is found
CriticalSearch critical_points(const ConicalFamily& family, const SeedOptions& seeds = {});

// actions mod 1 grouped within 1e-7, with multiplicities
std::vector<std::pair<double, int>> action_spectrum(const std::vector<CriticalRecord>& records);
std::vector<std::pair<double, int>> action_spectrum(const ConicalFamily& family, const SeedOptions& seeds = {});

struct MonotonicityReport {
    int samples = 0;
    double max_dt = 0.0;           // over random v, must be <= 1e-12
    int level_samples = 0;
    double level_max_dt = 0.0;     // over fiber-critical v != 0, must be < 0
    double at_zero = 0.0;
    bool ok() const { return max_dt <= 1e-12 && level_max_dt < 0.0 && at_zero == 0.0; }
};

// throws VerificationFailure on a violation
MonotonicityReport delta_monotonicity(const ConicalFamily& family, int samples = 1000, std::uint64_t seed = 3);

// index at (σ', δ_t, δ_0) and (σ', δ_t, δ_1), σ' = σ without its final identity
std::pair<int, int> recap_shift(const ConicalFamily& family, const CriticalRecord& record);

// (dim ker d²F_t - 2, dim ker of the projectivized monodromy minus id); throws on mismatch
std::pair<int, int> kernel_correspondence(const ConicalFamily& family, const CriticalRecord& record);

struct IterateCap {
    int max_m = 6;
    Eigen::Index max_aux = 1200;
};

// σ^{(m)}_s = (σ_1^k, σ_{s'}, σ_0^{m-k-1}), k = floor(ms), s' = ms - k
ConicalFamily iterate_family(const ConicalFamily& family, int m, const IterateCap& cap = {});

// e^{-2iπt}dΦ(Z) acting on C^{d+1}/CZ, in an orthonormal basis of (CZ)^⊥
Mat projectivized_monodromy(const ConicalFamily& family, double t, const Vec& z);

} // namespace gfd
