#include "gfdyn/symplin.hpp"

#include <algorithm>
#include <cmath>

namespace gfd {

Vec realify(const CVec& z) {
    Vec v(2 * z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        v(2 * k) = z(k).real();
        v(2 * k + 1) = z(k).imag();
    }
    return v;
}

CVec complexify(const Vec& v) {
    if (v.size() % 2 != 0) throw DimensionMismatch("complexify: odd length");
    CVec z(v.size() / 2);
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = {v(2 * k), v(2 * k + 1)};
    return z;
}

Mat realify(const CMat& m) {
    Mat r(2 * m.rows(), 2 * m.cols());
    for (Eigen::Index j = 0; j < m.rows(); ++j)
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            const auto c = m(j, k);
            r(2 * j, 2 * k) = c.real();
            r(2 * j, 2 * k + 1) = -c.imag();
            r(2 * j + 1, 2 * k) = c.imag();
            r(2 * j + 1, 2 * k + 1) = c.real();
        }
    return r;
}

CMat complexify(const Mat& m) {
    CMat c(m.rows() / 2, m.cols() / 2);
    for (Eigen::Index j = 0; j < c.rows(); ++j)
        for (Eigen::Index k = 0; k < c.cols(); ++k) c(j, k) = {m(2 * j, 2 * k), m(2 * j + 1, 2 * k)};
    return c;
}

std::complex<double> hermitian_dot(const Vec& z, const Vec& w) {
    return complexify(z).dot(complexify(w));
}

Vec rotate_phase(const Vec& v, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    Vec out(v.size());
    for (Eigen::Index k = 0; k + 1 < v.size(); k += 2) {
        out(k) = c * v(k) - s * v(k + 1);
        out(k + 1) = s * v(k) + c * v(k + 1);
    }
    return out;
}

Mat complex_line_complement(const Vec& z) {
    const CVec zc = complexify(z);
    const Eigen::Index n = zc.size();
    const CMat zm = zc;
    Eigen::HouseholderQR<CMat> qr(zm);
    const CMat Q = qr.householderQ() * CMat::Identity(n, n);
    Mat B(2 * n, 2 * (n - 1));
    for (Eigen::Index k = 1; k < n; ++k) {
        const CVec e = Q.col(k);
        B.col(2 * (k - 1)) = realify(e);
        B.col(2 * (k - 1) + 1) = realify(CVec(std::complex<double>(0.0, 1.0) * e));
    }
    return B;
}

double default_tolerance(double spectral_radius) { return 1e-8 * (1.0 + spectral_radius); }

QuadForm::QuadForm(const Mat& hessian, double tol) : hessian_(0.5 * (hessian + hessian.transpose())), tol_(tol) {
    if (hessian.rows() != hessian.cols()) throw DimensionMismatch("QuadForm: matrix not square");
}

Inertia inertia(const Mat& symmetric, double tol) {
    Inertia r;
    if (symmetric.rows() == 0) return r;
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error("inertia: eigensolver failed");
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double ev = es.eigenvalues()(k);
        if (ev < -tol)
            ++r.index;
        else if (ev > tol)
            ++r.coindex;
        else
            ++r.nullity;
    }
    return r;
}

Inertia inertia(const QuadForm& q) {
    if (q.size() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Mat> es(q.matrix(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error("quad_index: eigensolver failed");
    const auto& ev = es.eigenvalues();
    const double tol = q.tol() >= 0 ? q.tol() : default_tolerance(ev.cwiseAbs().maxCoeff());
    Inertia r;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (ev(k) < -tol)
            ++r.index;
        else if (ev(k) > tol)
            ++r.coindex;
        else
            ++r.nullity;
    }
    return r;
}

std::pair<int, int> quad_index(const QuadForm& q) {
    const Inertia r = inertia(q);
    return {r.index, r.nullity};
}

double symplectic_defect(const Mat& m) {
    const Mat J = complex_structure(m.rows() / 2);
    return (m.transpose() * J * m - J).cwiseAbs().maxCoeff();
}

SymplecticMatrix::SymplecticMatrix(const Mat& m, double tol) : m_(m) {
    if (m.rows() != m.cols() || m.rows() % 2 != 0) throw DimensionMismatch("SymplecticMatrix: need 2d x 2d");
    const double scale = 1.0 + m.squaredNorm();
    if (symplectic_defect(m) > tol * scale) throw NotSymplectic("SymplecticMatrix: M^T J M != J");
}

SymplecticMatrix SymplecticMatrix::identity(Eigen::Index d) {
    return SymplecticMatrix(Mat::Identity(2 * d, 2 * d));
}

Mat cayley_hessian(const Mat& m, double singular_threshold) {
    const Eigen::Index n = m.rows();
    const Mat I = Mat::Identity(n, n);
    const Mat plus = I + m;
    Eigen::JacobiSVD<Mat> svd(plus);
    const double smin = svd.singularValues()(n - 1);
    if (!(smin * singular_threshold > 1.0)) throw CayleySingular("cayley: -1 is (nearly) an eigenvalue");
    const Mat K = complex_structure(n / 2) * (I - m) * plus.inverse();
    return K + K.transpose();
}

QuadForm cayley_genfn(const SymplecticMatrix& m) {
    const Mat& M = m.matrix();
    const Eigen::Index n = M.rows();
    const Mat I = Mat::Identity(n, n);
    const Mat plus = I + M;
    Eigen::JacobiSVD<Mat> svd(plus);
    if (!(svd.singularValues()(n - 1) * 1e6 > 1.0)) throw CayleySingular("cayley_genfn: -1 in spectrum");
    const Mat K = complex_structure(n / 2) * (I - M) * plus.inverse();
    const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * (1.0 + K.cwiseAbs().maxCoeff()))
        throw VerificationFailure("cayley_genfn: K not symmetric, input not symplectic");
    return QuadForm(K + K.transpose());
}

Mat CyclicBlockForm::dense() const {
    const Eigen::Index n = blocks(), b = block_size();
    Mat H = Mat::Zero(n * b, n * b);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index kp = (k + 1) % n;
        H.block(k * b, k * b, b, b) += diag[k];
        // += so that n = 1, 2 fold the couplings correctly
        H.block(k * b, kp * b, b, b) += upper[k];
        H.block(kp * b, k * b, b, b) += upper[k].transpose();
    }
    return H;
}

double CyclicBlockForm::norm_bound() const {
    const Eigen::Index n = blocks();
    double r = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index km = (k + n - 1) % n;
        r = std::max(r, diag[k].norm() + upper[k].norm() + upper[km].norm());
    }
    return r;
}

namespace {

int count_negative(const Mat& s) {
    Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
    return static_cast<int>((es.eigenvalues().array() < 0.0).count());
}

} // namespace

// Sylvester: eliminate blocks 1..n-2 along the chain, carrying the coupling of the
// current pivot to block 0 and the Schur complement on block 0. A pivot that is
// close to singular is merged with its successor instead of being inverted.
int negative_count(const CyclicBlockForm& form, double shift) {
    const Eigen::Index n = form.blocks(), b = form.block_size();
    const Mat Ib = Mat::Identity(b, b);
    if (n <= 3) {
        const Mat H = form.dense();
        return count_negative(H + shift * Mat::Identity(H.rows(), H.cols()));
    }
    const auto& D = form.diag;
    const auto& E = form.upper;
    int neg = 0;
    Mat S00 = D[0] + shift * Ib;
    Mat P = D[1] + shift * Ib;
    Mat G = E[0].transpose(); // pivot rows x block 0
    Mat C = E[1];             // pivot rows x next block
    Eigen::Index k = 1;
    while (k < n - 1) {
        Eigen::SelfAdjointEigenSolver<Mat> es(P);
        const auto& ev = es.eigenvalues();
        const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
        const Eigen::Index next = k + 1;
        const bool last = next == n - 1;
        if (ev.cwiseAbs().minCoeff() < 1e-3 * scale && P.rows() < 8 * b) {
            const Eigen::Index m = P.rows();
            Mat P2(m + b, m + b);
            P2 << P, C, C.transpose(), D[next] + shift * Ib;
            Mat G2(m + b, b);
            G2 << G, (last ? E[next] : Mat::Zero(b, b));
            if (!last) {
                Mat C2 = Mat::Zero(m + b, b);
                C2.bottomRows(b) = E[next];
                C = std::move(C2);
            }
            P = std::move(P2);
            G = std::move(G2);
            k = next;
            continue;
        }
        neg += static_cast<int>((ev.array() < 0.0).count());
        // P^{-1} from its eigen-decomposition, already at hand
        const Mat& V = es.eigenvectors();
        const Mat VtC = V.transpose() * C;
        const Mat VtG = V.transpose() * G;
        const Vec inv = ev.cwiseInverse();
        const Mat CtPi = VtC.transpose() * inv.asDiagonal();
        Mat Pn = D[next] + shift * Ib - CtPi * VtC;
        Mat Gn = (last ? E[next] : Mat::Zero(b, b)) - CtPi * VtG;
        S00 -= VtG.transpose() * inv.asDiagonal() * VtG;
        P = std::move(Pn);
        G = std::move(Gn);
        if (!last) C = E[next];
        k = next;
    }
    const Eigen::Index m = P.rows();
    Mat F(b + m, b + m);
    F << S00, G.transpose(), G, P;
    return neg + count_negative(0.5 * (F + F.transpose()));
}

Inertia inertia(const CyclicBlockForm& form, double tol) {
    const int total = static_cast<int>(form.blocks() * form.block_size());
    const int below = negative_count(form, tol);
    const int below_upper = negative_count(form, -tol);
    Inertia r;
    r.index = below;
    r.nullity = below_upper - below;
    r.coindex = total - below_upper;
    return r;
}

Inertia inertia(const CyclicBlockForm& form) { return inertia(form, default_tolerance(form.norm_bound())); }

} // namespace gfd
