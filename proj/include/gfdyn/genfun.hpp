#pragma once

// Broken trajectories. A tuple of small steps (σ_1, ..., σ_n), each given by an
// elementary generating function f_k with ∇f_k(w) = i(z - σ(z)), w = (z + σ(z))/2,
// and the function
//   F(v) = Σ f_k((v_k + v_{k+1})/2) + ½<v_k, i v_{k+1}>,  v_{n+1} = v_1.
// Lists of points are stacked into one vector of n blocks of size 2d.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gfdyn/symplin.hpp"

namespace gfd {

struct ElementaryGen {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<Mat(const Vec&)> hessian;
    Eigen::Index dim = 0; // complex dimension
    bool is_quadratic = false;
    bool is_conical = false;

    static ElementaryGen zero(Eigen::Index d);
    // f(w) = ½ w^T H w
    static ElementaryGen quadratic(const Mat& hessian);
};

class StepTuple {
public:
    StepTuple() = default;
    StepTuple(Eigen::Index d, std::vector<ElementaryGen> steps);

    Eigen::Index dim() const { return d_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(steps_.size()); }
    bool odd() const { return size() % 2 == 1; }
    const ElementaryGen& operator[](Eigen::Index k) const { return steps_[static_cast<size_t>(k)]; }
    const std::vector<ElementaryGen>& steps() const { return steps_; }

    bool conical() const;
    bool quadratic() const;

    StepTuple& append(const ElementaryGen& f);
    StepTuple& append(const StepTuple& other);

private:
    Eigen::Index d_ = 0;
    std::vector<ElementaryGen> steps_;
};

StepTuple concat(const StepTuple& a, const StepTuple& b);
StepTuple identity_tuple(Eigen::Index d, Eigen::Index n);
StepTuple repeat(const StepTuple& t, int times);

// k-th 2d block of a stacked vector
inline auto slot(Vec& v, Eigen::Index k, Eigen::Index d) { return v.segment(2 * d * k, 2 * d); }
inline auto slot(const Vec& v, Eigen::Index k, Eigen::Index d) { return v.segment(2 * d * k, 2 * d); }

struct NewtonOptions {
    double tol = 1e-12;
    int max_iter = 50;
};

struct StepResult {
    Vec sigma_z;
    Vec w;
    int iterations = 0;
};

// solves z = w - (i/2)∇f(w); σ(z) = 2w - z
StepResult step_map(const ElementaryGen& f, const Vec& z, const NewtonOptions& opt = {});

// explicit in w
Vec step_source(const ElementaryGen& f, const Vec& w);
Vec step_image(const ElementaryGen& f, const Vec& w);

// dσ(z) = (I + ½JH)(I - ½JH)^{-1}, H the Hessian of f at w
Mat step_jacobian(const ElementaryGen& f, const Vec& w);

struct Trajectory {
    Vec z; // n+1 points z_1..z_{n+1}, z_{k+1} = σ_k(z_k)
    Vec w; // n midpoints
};

Trajectory trajectory(const StepTuple& tuple, const Vec& z1, const NewtonOptions& opt = {});

// w = A v, w_k = (v_k + v_{k+1})/2 cyclically
Vec averaging_map(const Vec& v, Eigen::Index d);
// n odd only: v_1 = Σ (-1)^{k+1} w_k, v_{k+1} = 2 w_k - v_k
Vec averaging_inverse(const Vec& w, Eigen::Index d);
// solves A^T y = g, n odd
Vec averaging_transpose_solve(const Vec& g, Eigen::Index d);

// ψ: z-coordinates to w-coordinates, w_k = (z_k + σ_k(z_k))/2
Vec psi(const StepTuple& tuple, const Vec& z, const NewtonOptions& opt = {});

struct BrokenCoordinates {
    Vec v;
    Vec w;
    Vec z;       // z_k, from w_k explicitly
    Vec sigma_z; // σ_k(z_k)
};

BrokenCoordinates broken_coordinates(const StepTuple& tuple, const Vec& v);

// v-coordinates of the closed broken trajectory through a fixed point z1 of the
// composition (or the fiber-critical point over z1 in general), n odd
Vec v_from_trajectory(const StepTuple& tuple, const Vec& z1, const NewtonOptions& opt = {});

double broken_value(const StepTuple& tuple, const Vec& v);
Vec broken_gradient(const StepTuple& tuple, const Vec& v);
CyclicBlockForm broken_hessian_blocks(const StepTuple& tuple, const Vec& v);
QuadForm broken_hessian(const StepTuple& tuple, const Vec& v);

// both sides of F_{(σ,δ)}(v) = F_{(σ,id)}(v_1..v_{n+1}) + F_{(δ,id)}(v_{n+1}..v_{n+m}, v_1)
std::pair<double, double> decompose_check(const StepTuple& sigma, const StepTuple& delta, const Vec& v);

struct Quad0Reduction {
    Mat A;           // (q, ξ) -> (q, ξ - c^{-1} b^T q)
    Mat c;           // fiber block
    Mat shift;       // c^{-1} b^T
    double residual; // sampled max |∂_q (Q∘A)|
};

// base variables are the first base_real_dim coordinates
Quad0Reduction reduce_quad0(const QuadForm& q, Eigen::Index base_real_dim, std::uint64_t seed = 1);

struct StabilizationReport {
    QuadForm q;
    int index_q = 0;
    int index_delta_id = 0;
    int index_delta = 0;
    double splitting_residual = 0.0; // |F_{(σ,δ)}∘A - F_{(σ,id)} - Q| at samples
    bool consistent() const { return index_q == index_delta_id && index_delta_id == index_delta; }
};

StabilizationReport stabilize(const StepTuple& sigma, const StepTuple& delta, std::uint64_t seed = 1);

struct CommonFactorInput {
    Vec z1;     // m points, the shared segment
    Vec z2;     // n points along δ
    Vec z3;     // n points along δ'
    Vec z_last; // the final shared point
};

bool common_factor_check(const StepTuple& sigma, const StepTuple& delta, const StepTuple& delta_prime,
                         const CommonFactorInput& in, double tol = 1e-10);

struct SmallnessReport {
    bool ok = true;
    int samples = 0;
    int failures = 0;
    int worst_iterations = 0;
    std::string first_failure;
};

// samples the working ball and runs every step's Newton inversion
SmallnessReport certify_smallness(const StepTuple& tuple, double radius = 4.0, int samples = 200,
                                  std::uint64_t seed = 7);

} // namespace gfd
