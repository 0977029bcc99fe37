#pragma once

// Crossing energy near a fixed direction. Everything lives in w-coordinates:
// G_t(w) = F_t(A^{-1} w), restricted to the smooth sphere
// Σ_m = {Σ_k |w_k|^p = 1}; M_m = {G_t = 0} and the action is t.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gfdyn/cpaction.hpp"

namespace gfd {

// smallest p >= 2 with K^{-1/p} >= 1/2
int choose_pm(int K);
// max over samples of 1/max|z_k| for z in Σ, which must lie in [1, 2]
double lambda_bound(int K, int p, Eigen::Index block_dim, int samples = 200, std::uint64_t seed = 5);

struct LevelFunction {
    ConicalFamily family;
    int p = 2;

    Eigen::Index lift_dim() const { return family.lift_dim(); }
    Eigen::Index blocks() const { return family.blocks(); }
    double value(double t, const Vec& w) const;
    Vec gradient(double t, const Vec& w) const; // ∇_w G_t = A^{-T} ∇_v F_t
    double dt(double t, const Vec& w) const;
    double sphere(const Vec& w) const;      // Σ |w_k|^p
    Vec sphere_normal(const Vec& w) const;  // p |w_k|^{p-2} w_k
    Vec to_sphere(const Vec& w) const;
    // the t in the window with G_t(w) = 0, if any
    std::optional<double> level_time(const Vec& w) const;
};

LevelFunction make_level(const ConicalFamily& family_m);

// a random point of M_m, rejection sampled
std::optional<std::pair<double, Vec>> sample_manifold(const LevelFunction& level, std::mt19937_64& rng,
                                                      int tries = 200);

struct PseudoGradient {
    double t_rate = 0.0; // -|∇_ζ f|^2
    Vec w_rate;          // ∂_t f ∇_ζ f, horizontal
    double grad_sq = 0.0;
    double dt = 0.0;
    Vec ambient;         // ∇_w G_t
};

// throws Error when (t, w) is off M_m or off Σ_m by more than 1e-9
PseudoGradient pseudo_gradient(const LevelFunction& level, double t, const Vec& w);

struct GradientIdentities {
    double tangency = 0.0;    // |dG(X)|
    double sphere = 0.0;      // |<normal, X_w>|
    double action_rate = 0.0; // |X_t + |∇_ζ f|^2|, the norm from an independent basis
};

GradientIdentities pseudo_gradient_identities(const LevelFunction& level, double t, const Vec& w);

struct TrajectoryNeighborhood {
    Vec center;    // x
    double r = 0.0;
    double t = 0.0;
    Vec a;         // stacked w-coordinates of the trajectory of x
    double lambda = 1.0; // λ a on the boundary of the product of unit balls
    Eigen::Index lift_dim = 0;

    Eigen::Index blocks() const { return a.size() / (2 * lift_dim); }
};

TrajectoryNeighborhood make_neighborhood(const ConicalFamily& family_m, const Vec& x, double t, double r);

// max_k |p_k - a_k|
double box_distance(const TrajectoryNeighborhood& nb, const Vec& p);
// min over θ of max_k |e^{iθ} p_k - λ a_k|; 64-point grid then golden section
double phase_distance(const TrajectoryNeighborhood& nb, const Vec& p);
// phase_distance after rescaling p so that max_k |p_k| = 1
double projective_distance(const TrajectoryNeighborhood& nb, const Vec& p);

struct Membership {
    bool in_b = false; // B_r
    bool in_u = false; // U_r, p taken on the boundary of the unit product
    bool in_v = false; // V_r, after rescaling
};

Membership neighborhood_membership(const TrajectoryNeighborhood& nb, const Vec& p);

struct FlowSample {
    double s = 0.0;
    double t = 0.0;
    double grad_norm = 0.0;
    double rho = 0.0; // projective_distance, NaN without a region
};

struct FlowLine {
    std::vector<FlowSample> samples;
    int direction = 1;
    std::string termination;
    int steps = 0;
    double max_drift = 0.0;            // max |G| after projection
    double max_action_increase = 0.0;  // max of direction·(t_{k+1} - t_k), <= 0 ideally
    double t_end = 0.0;
    Vec w_end;
};

struct FlowStop {
    const TrajectoryNeighborhood* region = nullptr;
    double enter = -1.0;                                   // stop once rho < enter
    double exit = std::numeric_limits<double>::infinity(); // stop once rho > exit
};

struct FlowOptions {
    double atol = 1e-10;
    double rtol = 1e-8;
    int max_steps = 20000;
    double stall = 1e-10;
    double h0 = 1e-3;
};

// u' = direction · X_m(u), Dormand-Prince 5(4), projected back to Σ_m and G = 0 after each step
FlowLine flow_line(const LevelFunction& level, double t0, const Vec& w0, int direction, const FlowStop& stop,
                   const FlowOptions& opt = {});

struct CrossingOptions {
    double r = 0.2;
    std::vector<int> m_list{1, 2, 3, 4};
    int seeds_per_m = 64;          // seeds on ∂V_r, each flowed both ways
    int interior_seeds_per_m = 64; // seeds inside V_{r/2}, flowed out to ∂V_r
    int n2 = 5;
    // the action varies by about K r^2 across V_r, so the window is kept wide (ε < 1/2)
    double epsilon = 0.45;
    std::uint64_t seed = 1;
    int workers = 1;
    FlowOptions flow;
    IterateCap cap;
};

struct CrossingRow {
    int m = 0;
    int seed = 0;
    int direction = 1;
    std::string kind; // "boundary" or "interior"
    bool crossed = false;
    double delta_action = 0.0;
    int steps = 0;
    std::string termination;
    double max_action_increase = 0.0;
    double max_drift = 0.0;
};

struct CrossingTable {
    std::vector<CrossingRow> rows;
    std::map<int, double> c_min; // NaN when m produced no crossing
    std::map<int, int> p;
    double c_inf = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> no_crossing;
    std::vector<std::string> discarded;
    double isolation = 0.0;
    double distance_floor = 0.0; // sampled min distance between ∂V_r and V_{r/2}, m = first
};

// x a fixed direction of action t_x of the fixture's map
CrossingTable crossing_experiment(const Fixture& fixture, const Vec& x, double t_x, const CrossingOptions& opt);

// half the smallest phase-minimized distance from x to the other fixed directions
double isolation_radius(const Fixture& fixture, const Vec& x, double t_x);

// sampled min over pairs (∂V_r, V_{r/2}) on Σ_m of min_θ |e^{iθ}u - v|
double sampled_distance_floor(const LevelFunction& level, const TrajectoryNeighborhood& nb, int pairs,
                              std::uint64_t seed);

} // namespace gfd
