#pragma once

// Discrete Hamiltonian systems. Convention: X_H = i ∇H, so H = -π|z|^2
// generates e^{-2iπt}.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gfdyn/genfun.hpp"

namespace gfd {

// Re(coeff · z^α conj(z)^β) · |z|^{2 q} · (1 + cos_amp cos 2πkt + sin_amp sin 2πkt)
struct MonomialTerm {
    std::complex<double> coeff{1.0, 0.0};
    std::vector<int> alpha;
    std::vector<int> beta;
    int norm_power = 0;
    double cos_amp = 0.0;
    double sin_amp = 0.0;
    int frequency = 1;

    int degree() const;
    bool autonomous() const { return cos_amp == 0.0 && sin_amp == 0.0; }
};

class HamiltonianField {
public:
    HamiltonianField() = default;
    HamiltonianField(Eigen::Index dim, std::vector<MonomialTerm> terms, Mat quadratic = Mat());

    static HamiltonianField zero(Eigen::Index dim);
    // Σ c_j |z_j|^2
    static HamiltonianField diagonal(const std::vector<double>& c);
    // ½ x^T S x in real coordinates
    static HamiltonianField real_quadratic(const Mat& S);

    Eigen::Index dim() const { return dim_; }
    const std::vector<MonomialTerm>& terms() const { return terms_; }
    const Mat& quadratic_part() const { return quad_; }

    double value(double t, const Vec& z) const;
    Vec gradient(double t, const Vec& z) const;
    Mat hessian(double t, const Vec& z) const;

    bool autonomous() const;
    bool two_homogeneous() const;
    bool s1_invariant() const;
    bool quadratic() const;
    bool conical() const { return two_homogeneous() && s1_invariant(); }
    bool identically_zero() const;

    HamiltonianField scaled(double factor) const;
    HamiltonianField operator+(const HamiltonianField& other) const;

private:
    Eigen::Index dim_ = 0;
    std::vector<MonomialTerm> terms_;
    Mat quad_; // empty or 2 dim x 2 dim
};

// f_k(w) = (s/n) H(s (t_k + 1/(2n)), w), t_k = (k-1)/n: implicit midpoint for the
// flow up to time s. Throws NewtonDivergence when the smallness sampling fails.
StepTuple tuple_from_flow(const HamiltonianField& h, int n, double s = 1.0, bool certify = true);

// q_t(w) = -tan(πt)|w|^2, the step e^{-2iπt}
ElementaryGen rotation_step(double t, Eigen::Index d);
// (g_{t/(m-1)}, ..., g_{t/(m-1)}, id), m >= 5 odd
StepTuple rotation_tuple(double t, int m, Eigen::Index d);

// exact step diag(e^{2iπ θ_j})
ElementaryGen diagonal_rotation_step(const std::vector<double>& theta);

// f'(w) = f(U^{-1} w) for unitary U: σ' = U σ U^{-1}
StepTuple conjugate(const StepTuple& tuple, const Mat& unitary);

Vec apply_tuple(const StepTuple& tuple, const Vec& z, const NewtonOptions& opt = {});
// dΦ(z), product of the step Jacobians along the trajectory
Mat tuple_jacobian(const StepTuple& tuple, const Vec& z, const NewtonOptions& opt = {});

struct LiftCertificate {
    bool two_homogeneous = true;
    bool s1_invariant = true;
    double homogeneity_residual = 0.0;
    double euler_residual = 0.0;
    double phase_residual = 0.0;
    bool pass() const { return two_homogeneous && s1_invariant; }
};

LiftCertificate lift_validate(const HamiltonianField& h, int samples = 64, std::uint64_t seed = 11);

struct KnownFixedPoint {
    Vec axis;          // unit vector in C^{d+1}
    double action = 0; // mod 1
    int index = -1;    // -1 when not recorded
};

struct Fixture {
    std::string name;
    Eigen::Index d = 0; // CP^d, lifts live in C^{d+1}
    StepTuple tuple;    // σ, even size, last step identity
    HamiltonianField hamiltonian;
    std::string discretization; // "midpoint" or "exact_rotation"
    std::vector<double> rotation;   // a_j for exact rotations
    std::vector<KnownFixedPoint> known;
    std::function<StepTuple(double)> family; // s -> σ_s, σ_0 = identity, σ_1 = tuple
    double c = 0.0;       // hyperbolic fixture parameters
    double epsilon = 0.0;
};

// diag(e^{2iπ a_j}) built from n1 - 1 exact steps and a final identity
Fixture pseudo_rotation_fixture(const std::vector<double>& a, int n1 = 6);

// H = 2πc Re(z1^2 conj(z2)^2)/|z|^2 + ε |z1|^2 |z2|^2/|z|^2 on C^2
Fixture hyperbolic_fixture(double c = 0.1, double epsilon = 0.0, int n1 = 8);

// σ from an arbitrary conical Hamiltonian, n1 - 1 midpoint steps and a final identity
Fixture hamiltonian_fixture(const std::string& name, const HamiltonianField& h, int n1);

// eigenvalues of the projectivized linearization at a fixed axis
CVec projectivized_eigenvalues(const StepTuple& tuple, const Vec& axis, double action);

// checks every known fixed point; throws VerificationFailure
void verify_fixture(const Fixture& f, double tol = 1e-9);

} // namespace gfd
