#pragma once

// Realified complex linear algebra. A point of C^n is a vector of 2n reals,
// (re z_1, im z_1, re z_2, ...). Multiplication by i is the block matrix J.

#include <Eigen/Dense>

#include <complex>
#include <utility>
#include <vector>

#include "gfdyn/errors.hpp"

namespace gfd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// complex dimension of a realified vector
template <typename Derived>
Eigen::Index complex_dim(const Eigen::MatrixBase<Derived>& v) {
    return v.size() / 2;
}

template <typename Derived>
VecX<typename Derived::Scalar> times_i(const Eigen::MatrixBase<Derived>& v) {
    using S = typename Derived::Scalar;
    VecX<S> out(v.size());
    for (Eigen::Index k = 0; k + 1 < v.size(); k += 2) {
        out(k) = -v(k + 1);
        out(k + 1) = v(k);
    }
    return out;
}

// matrix of multiplication by i on C^n
template <typename Scalar = double>
MatX<Scalar> complex_structure(Eigen::Index n) {
    MatX<Scalar> J = MatX<Scalar>::Zero(2 * n, 2 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
        J(2 * k + 1, 2 * k) = Scalar(1);
        J(2 * k, 2 * k + 1) = Scalar(-1);
    }
    return J;
}

// ω(u, v) = <i u, v>
template <typename A, typename B>
typename A::Scalar omega(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
    return times_i(u).dot(v);
}

// τ(z, Z) = ((z+Z)/2, i(z-Z))
template <typename A, typename B>
std::pair<VecX<typename A::Scalar>, VecX<typename A::Scalar>>
tau(const Eigen::MatrixBase<A>& z, const Eigen::MatrixBase<B>& Z) {
    if (z.size() != Z.size() || z.size() % 2 != 0)
        throw DimensionMismatch("tau: arguments must be realified vectors of equal size");
    VecX<typename A::Scalar> mid = (z + Z) / 2;
    VecX<typename A::Scalar> diff = z - Z;
    return {mid, times_i(diff)};
}

Vec realify(const CVec& z);
CVec complexify(const Vec& v);
Mat realify(const CMat& m);
// only meaningful for J-linear real matrices
CMat complexify(const Mat& m);

// <z, w>_C = sum conj(z_k) w_k
std::complex<double> hermitian_dot(const Vec& z, const Vec& w);

// rotate every complex coordinate by e^{iθ}
Vec rotate_phase(const Vec& v, double theta);

// real orthonormal basis (2n x 2(n-1)) of the hermitian complement of C z
Mat complex_line_complement(const Vec& z);

struct Inertia {
    int index = 0;
    int nullity = 0;
    int coindex = 0;
};

// 1e-8 (1 + ρ)
double default_tolerance(double spectral_radius);

class QuadForm {
public:
    QuadForm() = default;
    // tol < 0 selects the default relative tolerance
    explicit QuadForm(const Mat& hessian, double tol = -1.0);

    const Mat& matrix() const { return hessian_; }
    double tol() const { return tol_; }
    Eigen::Index size() const { return hessian_.rows(); }

    double value(const Vec& x) const { return 0.5 * x.dot(hessian_ * x); }
    Vec gradient(const Vec& x) const { return hessian_ * x; }

private:
    Mat hessian_;
    double tol_ = 0.0;
};

Inertia inertia(const QuadForm& q);
std::pair<int, int> quad_index(const QuadForm& q);

// counts of a symmetric matrix against an explicit threshold
Inertia inertia(const Mat& symmetric, double tol);

class SymplecticMatrix {
public:
    explicit SymplecticMatrix(const Mat& m, double tol = 1e-10);
    static SymplecticMatrix identity(Eigen::Index d);

    const Mat& matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows() / 2; }

private:
    Mat m_;
};

// max-abs entry of M^T J M - J
double symplectic_defect(const Mat& m);

// Hessian of the Cayley generating function, unchecked. Throws CayleySingular
// when ||(I+M)^{-1}|| exceeds the threshold.
Mat cayley_hessian(const Mat& m, double singular_threshold = 1e6);

// f(w) = <K w, w> with grad f = 2 i (I-M)(I+M)^{-1} w
QuadForm cayley_genfn(const SymplecticMatrix& m);

// Cyclic block-tridiagonal symmetric matrix: block (k,k) = diag[k],
// block (k, k+1 mod n) = upper[k], plus its transpose.
struct CyclicBlockForm {
    std::vector<Mat> diag;
    std::vector<Mat> upper;

    Eigen::Index blocks() const { return static_cast<Eigen::Index>(diag.size()); }
    Eigen::Index block_size() const { return diag.empty() ? 0 : diag.front().rows(); }
    Mat dense() const;
    // cheap upper bound for the spectral radius
    double norm_bound() const;
};

// number of eigenvalues of (form + shift I) below zero, by block elimination
int negative_count(const CyclicBlockForm& form, double shift);

Inertia inertia(const CyclicBlockForm& form, double tol);
Inertia inertia(const CyclicBlockForm& form);

} // namespace gfd
