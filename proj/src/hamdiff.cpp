#include "gfdyn/hamdiff.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace gfd {

using cd = std::complex<double>;

int MonomialTerm::degree() const {
    int deg = 2 * norm_power;
    for (int a : alpha) deg += a;
    for (int b : beta) deg += b;
    return deg;
}

namespace {

cd power_product(const CVec& z, const std::vector<int>& a, const std::vector<int>& b) {
    cd p{1.0, 0.0};
    for (size_t j = 0; j < a.size(); ++j)
        for (int e = 0; e < a[j]; ++e) p *= z(static_cast<Eigen::Index>(j));
    for (size_t j = 0; j < b.size(); ++j)
        for (int e = 0; e < b[j]; ++e) p *= std::conj(z(static_cast<Eigen::Index>(j)));
    return p;
}

// z^α conj(z)^β with α lowered at j1, j2 and β lowered at k1, k2 (-1 = none),
// times the falling-factorial coefficient
cd lowered(const CVec& z, std::vector<int> a, std::vector<int> b, int j1, int j2, int k1, int k2) {
    double coef = 1.0;
    for (int j : {j1, j2}) {
        if (j < 0) continue;
        coef *= a[static_cast<size_t>(j)];
        a[static_cast<size_t>(j)] -= 1;
        if (coef == 0.0) return 0.0;
    }
    for (int k : {k1, k2}) {
        if (k < 0) continue;
        coef *= b[static_cast<size_t>(k)];
        b[static_cast<size_t>(k)] -= 1;
        if (coef == 0.0) return 0.0;
    }
    return coef * power_product(z, a, b);
}

struct Wirtinger {
    CVec d;    // ∂_j u
    CVec dbar; // ∂̄_j u
    CMat dd;   // ∂_j ∂_k u
    CMat ddbar_bar; // ∂̄_j ∂̄_k u
    CMat mixed;     // ∂_j ∂̄_k u
    cd value;
};

// derivatives of u = z^α conj(z)^β |z|^{2q}
Wirtinger monomial_derivatives(const CVec& z, const MonomialTerm& term, int order) {
    const Eigen::Index n = z.size();
    const auto& a = term.alpha;
    const auto& b = term.beta;
    const int q = term.norm_power;
    const double N = z.squaredNorm();
    Wirtinger w;
    const cd M = power_product(z, a, b);
    double Nq = 1.0, Nq1 = 0.0, Nq2 = 0.0;
    if (q != 0) {
        if (N < 1e-300) {
            w.value = 0.0;
            w.d = CVec::Zero(n);
            w.dbar = CVec::Zero(n);
            w.dd = w.ddbar_bar = w.mixed = CMat::Zero(n, n);
            return w;
        }
        Nq = std::pow(N, q);
        Nq1 = q * std::pow(N, q - 1);
        Nq2 = q * (q - 1) * std::pow(N, q - 2);
    }
    w.value = M * Nq;
    if (order < 1) return w;
    CVec dM(n), dbM(n);
    w.d.resize(n);
    w.dbar.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const int jj = static_cast<int>(j);
        dM(j) = lowered(z, a, b, jj, -1, -1, -1);
        dbM(j) = lowered(z, a, b, -1, -1, jj, -1);
        w.d(j) = dM(j) * Nq + M * Nq1 * std::conj(z(j));
        w.dbar(j) = dbM(j) * Nq + M * Nq1 * z(j);
    }
    if (order < 2) return w;
    w.dd.resize(n, n);
    w.ddbar_bar.resize(n, n);
    w.mixed.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) {
            const int jj = static_cast<int>(j), kk = static_cast<int>(k);
            const cd ddM = lowered(z, a, b, jj, kk, -1, -1);
            const cd bbM = lowered(z, a, b, -1, -1, jj, kk);
            const cd dbM2 = lowered(z, a, b, jj, -1, kk, -1);
            const cd zj = z(j), zk = z(k);
            w.dd(j, k) = ddM * Nq + dM(j) * Nq1 * std::conj(zk) + dM(k) * Nq1 * std::conj(zj) +
                         M * Nq2 * std::conj(zj) * std::conj(zk);
            w.ddbar_bar(j, k) = bbM * Nq + dbM(j) * Nq1 * zk + dbM(k) * Nq1 * zj + M * Nq2 * zj * zk;
            w.mixed(j, k) = dbM2 * Nq + dM(j) * Nq1 * zk + dbM(k) * Nq1 * std::conj(zj) +
                            M * (Nq2 * std::conj(zj) * zk + (j == k ? Nq1 : 0.0));
        }
    return w;
}

double time_factor(const MonomialTerm& term, double t) {
    if (term.autonomous()) return 1.0;
    const double arg = 2.0 * std::numbers::pi * term.frequency * t;
    return 1.0 + term.cos_amp * std::cos(arg) + term.sin_amp * std::sin(arg);
}

} // namespace

HamiltonianField::HamiltonianField(Eigen::Index dim, std::vector<MonomialTerm> terms, Mat quadratic)
    : dim_(dim), terms_(std::move(terms)), quad_(std::move(quadratic)) {
    for (auto& t : terms_) {
        t.alpha.resize(static_cast<size_t>(dim_), 0);
        t.beta.resize(static_cast<size_t>(dim_), 0);
    }
    if (quad_.size() != 0) {
        if (quad_.rows() != 2 * dim_ || quad_.cols() != 2 * dim_)
            throw DimensionMismatch("HamiltonianField: quadratic part has wrong size");
        quad_ = 0.5 * (quad_ + quad_.transpose());
    }
}

HamiltonianField HamiltonianField::zero(Eigen::Index dim) { return HamiltonianField(dim, {}); }

HamiltonianField HamiltonianField::diagonal(const std::vector<double>& c) {
    const Eigen::Index n = static_cast<Eigen::Index>(c.size());
    std::vector<MonomialTerm> terms;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (c[static_cast<size_t>(j)] == 0.0) continue;
        MonomialTerm t;
        t.coeff = c[static_cast<size_t>(j)];
        t.alpha.assign(static_cast<size_t>(n), 0);
        t.beta.assign(static_cast<size_t>(n), 0);
        t.alpha[static_cast<size_t>(j)] = 1;
        t.beta[static_cast<size_t>(j)] = 1;
        terms.push_back(t);
    }
    return HamiltonianField(n, terms);
}

HamiltonianField HamiltonianField::real_quadratic(const Mat& S) { return HamiltonianField(S.rows() / 2, {}, S); }

double HamiltonianField::value(double t, const Vec& z) const {
    double h = quad_.size() ? 0.5 * z.dot(quad_ * z) : 0.0;
    const CVec zc = complexify(z);
    for (const auto& term : terms_) {
        const Wirtinger w = monomial_derivatives(zc, term, 0);
        h += time_factor(term, t) * (term.coeff * w.value).real();
    }
    return h;
}

Vec HamiltonianField::gradient(double t, const Vec& z) const {
    Vec g = quad_.size() ? Vec(quad_ * z) : Vec(Vec::Zero(z.size()));
    const CVec zc = complexify(z);
    for (const auto& term : terms_) {
        const Wirtinger w = monomial_derivatives(zc, term, 1);
        const double tf = time_factor(term, t);
        const cd c = term.coeff;
        for (Eigen::Index j = 0; j < zc.size(); ++j) {
            // ∂_j T for T = ½(c u + conj(c u))
            const cd dT = 0.5 * (c * w.d(j) + std::conj(c * w.dbar(j)));
            g(2 * j) += tf * 2.0 * dT.real();
            g(2 * j + 1) += tf * -2.0 * dT.imag();
        }
    }
    return g;
}

Mat HamiltonianField::hessian(double t, const Vec& z) const {
    Mat H = quad_.size() ? quad_ : Mat(Mat::Zero(z.size(), z.size()));
    const CVec zc = complexify(z);
    const Eigen::Index n = zc.size();
    for (const auto& term : terms_) {
        const Wirtinger w = monomial_derivatives(zc, term, 2);
        const double tf = time_factor(term, t);
        const cd c = term.coeff;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k) {
                const cd a = 0.5 * (c * w.dd(j, k) + std::conj(c * w.ddbar_bar(j, k)));
                const cd b = 0.5 * (c * w.mixed(j, k) + std::conj(c * w.mixed(k, j)));
                H(2 * j, 2 * k) += tf * (2.0 * a.real() + 2.0 * b.real());
                H(2 * j, 2 * k + 1) += tf * (-2.0 * a.imag() + 2.0 * b.imag());
                H(2 * j + 1, 2 * k) += tf * (-2.0 * a.imag() - 2.0 * b.imag());
                H(2 * j + 1, 2 * k + 1) += tf * (-2.0 * a.real() + 2.0 * b.real());
            }
    }
    return H;
}

bool HamiltonianField::autonomous() const {
    for (const auto& t : terms_)
        if (!t.autonomous()) return false;
    return true;
}

bool HamiltonianField::two_homogeneous() const {
    for (const auto& t : terms_)
        if (t.degree() != 2) return false;
    return true;
}

bool HamiltonianField::s1_invariant() const {
    for (const auto& t : terms_) {
        int da = 0, db = 0;
        for (int a : t.alpha) da += a;
        for (int b : t.beta) db += b;
        if (da != db) return false;
    }
    if (quad_.size()) {
        const Mat J = complex_structure(dim_);
        if ((quad_ * J - J * quad_).cwiseAbs().maxCoeff() > 1e-14 * (1.0 + quad_.cwiseAbs().maxCoeff())) return false;
    }
    return true;
}

bool HamiltonianField::quadratic() const {
    for (const auto& t : terms_)
        if (t.norm_power != 0 || t.degree() != 2) return false;
    return true;
}

bool HamiltonianField::identically_zero() const {
    for (const auto& t : terms_)
        if (t.coeff != cd(0.0, 0.0)) return false;
    return quad_.size() == 0 || quad_.cwiseAbs().maxCoeff() == 0.0;
}

HamiltonianField HamiltonianField::scaled(double factor) const {
    HamiltonianField out = *this;
    for (auto& t : out.terms_) t.coeff *= factor;
    if (out.quad_.size()) out.quad_ *= factor;
    return out;
}

HamiltonianField HamiltonianField::operator+(const HamiltonianField& other) const {
    if (other.dim_ != dim_) throw DimensionMismatch("HamiltonianField: sum of different dimensions");
    std::vector<MonomialTerm> terms = terms_;
    terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
    Mat q;
    if (quad_.size() && other.quad_.size())
        q = quad_ + other.quad_;
    else
        q = quad_.size() ? quad_ : other.quad_;
    return HamiltonianField(dim_, terms, q);
}

StepTuple tuple_from_flow(const HamiltonianField& h, int n, double s, bool certify) {
    if (n < 1) throw Error("tuple_from_flow: n must be positive");
    const Eigen::Index dim = h.dim();
    std::vector<ElementaryGen> steps;
    const double dt = s / n;
    const bool conical = h.conical(), quad = h.quadratic() && h.autonomous();
    for (int k = 0; k < n; ++k) {
        const double tk = s * (static_cast<double>(k) / n + 0.5 / n);
        ElementaryGen f;
        f.dim = dim;
        f.value = [h, tk, dt](const Vec& w) { return dt * h.value(tk, w); };
        f.gradient = [h, tk, dt](const Vec& w) { return Vec(dt * h.gradient(tk, w)); };
        f.hessian = [h, tk, dt](const Vec& w) { return Mat(dt * h.hessian(tk, w)); };
        f.is_conical = conical;
        f.is_quadratic = quad;
        steps.push_back(std::move(f));
    }
    StepTuple tuple(dim, std::move(steps));
    if (certify) {
        const SmallnessReport rep = certify_smallness(tuple);
        if (!rep.ok)
            throw NewtonDivergence("tuple_from_flow: steps not small enough, " + rep.first_failure);
    }
    return tuple;
}

ElementaryGen rotation_step(double t, Eigen::Index d) {
    if (std::abs(t) >= 0.5) throw Error("rotation_step: |t| must be below 1/2");
    ElementaryGen f = ElementaryGen::quadratic(-2.0 * std::tan(std::numbers::pi * t) * Mat::Identity(2 * d, 2 * d));
    f.is_conical = true;
    return f;
}

StepTuple rotation_tuple(double t, int m, Eigen::Index d) {
    if (m < 5 || m % 2 == 0) throw ParityError("rotation_tuple: m must be odd and at least 5");
    const double step = t / (m - 1);
    if (std::abs(step) >= 0.5) throw Error("rotation_tuple: |t/(m-1)| must be below 1/2");
    StepTuple out(d, {});
    const ElementaryGen g = rotation_step(step, d);
    for (int k = 0; k < m - 1; ++k) out.append(g);
    out.append(ElementaryGen::zero(d));
    return out;
}

ElementaryGen diagonal_rotation_step(const std::vector<double>& theta) {
    const Eigen::Index n = static_cast<Eigen::Index>(theta.size());
    Mat H = Mat::Zero(2 * n, 2 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double th = theta[static_cast<size_t>(j)];
        if (std::abs(th) >= 0.5) throw Error("diagonal_rotation_step: angle too large");
        H(2 * j, 2 * j) = H(2 * j + 1, 2 * j + 1) = 2.0 * std::tan(std::numbers::pi * th);
    }
    return ElementaryGen::quadratic(H);
}

StepTuple conjugate(const StepTuple& tuple, const Mat& unitary) {
    const Mat U = unitary;
    const Mat Ut = unitary.transpose();
    StepTuple out(tuple.dim(), {});
    for (const auto& f : tuple.steps()) {
        ElementaryGen g = f;
        g.value = [f, Ut](const Vec& w) { return f.value(Ut * w); };
        g.gradient = [f, U, Ut](const Vec& w) { return Vec(U * f.gradient(Ut * w)); };
        g.hessian = [f, U, Ut](const Vec& w) { return Mat(U * f.hessian(Ut * w) * Ut); };
        out.append(g);
    }
    return out;
}

Vec apply_tuple(const StepTuple& tuple, const Vec& z, const NewtonOptions& opt) {
    Vec cur = z;
    for (const auto& f : tuple.steps()) cur = step_map(f, cur, opt).sigma_z;
    return cur;
}

Mat tuple_jacobian(const StepTuple& tuple, const Vec& z, const NewtonOptions& opt) {
    Vec cur = z;
    Mat D = Mat::Identity(z.size(), z.size());
    for (const auto& f : tuple.steps()) {
        const StepResult s = step_map(f, cur, opt);
        D = step_jacobian(f, s.w) * D;
        cur = s.sigma_z;
    }
    return D;
}

LiftCertificate lift_validate(const HamiltonianField& h, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Eigen::Index n = h.dim();
    LiftCertificate cert;
    for (int s = 0; s < samples; ++s) {
        Vec z(2 * n);
        for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = gauss(rng);
        const double t = unif(rng);
        const double r = 0.2 + 2.0 * unif(rng), th = 2.0 * std::numbers::pi * unif(rng);
        const double h0 = h.value(t, z);
        const double scale = 1.0 + std::abs(h0);
        const double hl = h.value(t, r * rotate_phase(z, th));
        cert.homogeneity_residual = std::max(cert.homogeneity_residual, std::abs(hl - r * r * h.value(t, rotate_phase(z, th))) / (r * r * scale));
        cert.euler_residual = std::max(cert.euler_residual, std::abs(h.gradient(t, z).dot(z) - 2.0 * h0) / scale);
        cert.phase_residual = std::max(cert.phase_residual, std::abs(h.value(t, rotate_phase(z, th)) - h0) / scale);
    }
    cert.two_homogeneous = cert.homogeneity_residual < 1e-10 && cert.euler_residual < 1e-9;
    cert.s1_invariant = cert.phase_residual < 1e-10;
    return cert;
}

CVec projectivized_eigenvalues(const StepTuple& tuple, const Vec& axis, double action) {
    const Mat D = tuple_jacobian(tuple, axis);
    const Mat L = realify(CMat(std::polar(1.0, -2.0 * std::numbers::pi * action) * CMat::Identity(axis.size() / 2, axis.size() / 2))) * D;
    const Mat B = complex_line_complement(axis);
    Eigen::EigenSolver<Mat> es(B.transpose() * L * B, false);
    return es.eigenvalues();
}

namespace {

Vec unit_axis(Eigen::Index n, Eigen::Index j) {
    Vec v = Vec::Zero(2 * n);
    v(2 * j) = 1.0;
    return v;
}

StepTuple exact_rotation_tuple(const std::vector<double>& a, int n1, double s) {
    const Eigen::Index n = static_cast<Eigen::Index>(a.size());
    std::vector<double> theta(a.size());
    for (size_t j = 0; j < a.size(); ++j) theta[j] = s * a[j] / (n1 - 1);
    StepTuple out(n, {});
    const ElementaryGen g = diagonal_rotation_step(theta);
    for (int k = 0; k < n1 - 1; ++k) out.append(g);
    out.append(ElementaryGen::zero(n));
    return out;
}

} // namespace

Fixture pseudo_rotation_fixture(const std::vector<double>& a, int n1) {
    if (a.size() < 2) throw Error("pseudo_rotation_fixture: need at least two rotation numbers");
    if (n1 < 4 || n1 % 2 != 0) throw ParityError("pseudo_rotation_fixture: n1 must be even and at least 4");
    for (double aj : a)
        if (std::abs(aj) / (n1 - 1) >= 0.5) throw Error("pseudo_rotation_fixture: rotation too large for n1");
    Fixture f;
    f.name = "pseudo_rotation";
    f.d = static_cast<Eigen::Index>(a.size()) - 1;
    f.rotation = a;
    f.discretization = "exact_rotation";
    std::vector<double> c(a.size());
    for (size_t j = 0; j < a.size(); ++j) c[j] = std::numbers::pi * a[j];
    f.hamiltonian = HamiltonianField::diagonal(c);
    f.family = [a, n1](double s) { return exact_rotation_tuple(a, n1, s); };
    f.tuple = f.family(1.0);
    for (size_t j = 0; j < a.size(); ++j) {
        KnownFixedPoint k;
        k.axis = unit_axis(f.d + 1, static_cast<Eigen::Index>(j));
        k.action = a[j] - std::floor(a[j]);
        f.known.push_back(k);
    }
    return f;
}

Fixture hamiltonian_fixture(const std::string& name, const HamiltonianField& h, int n1) {
    if (n1 < 2 || n1 % 2 != 0) throw ParityError("hamiltonian_fixture: n1 must be even");
    if (!h.conical()) throw Error("hamiltonian_fixture: Hamiltonian must be 2-homogeneous and S1-invariant");
    Fixture f;
    f.name = name;
    f.d = h.dim() - 1;
    f.hamiltonian = h;
    f.discretization = "midpoint";
    const Eigen::Index dim = h.dim();
    f.family = [h, n1, dim](double s) {
        StepTuple t = tuple_from_flow(h, n1 - 1, s, false);
        t.append(ElementaryGen::zero(dim));
        return t;
    };
    StepTuple t = tuple_from_flow(h, n1 - 1, 1.0, true);
    t.append(ElementaryGen::zero(dim));
    f.tuple = t;
    return f;
}

Fixture hyperbolic_fixture(double c, double epsilon, int n1) {
    MonomialTerm saddle;
    saddle.coeff = 2.0 * std::numbers::pi * c;
    saddle.alpha = {2, 0};
    saddle.beta = {0, 2};
    saddle.norm_power = -1;
    std::vector<MonomialTerm> terms{saddle};
    if (epsilon != 0.0) {
        MonomialTerm bump;
        bump.coeff = epsilon;
        bump.alpha = {1, 1};
        bump.beta = {1, 1};
        bump.norm_power = -1;
        terms.push_back(bump);
    }
    Fixture f = hamiltonian_fixture("hyperbolic", HamiltonianField(2, terms), n1);
    f.c = c;
    f.epsilon = epsilon;
    for (Eigen::Index j = 0; j < 2; ++j) {
        KnownFixedPoint k;
        k.axis = unit_axis(2, j);
        k.action = 0.0;
        f.known.push_back(k);
    }
    // the poles must be hyperbolic for the crossing experiment to mean anything
    const CVec ev = projectivized_eigenvalues(f.tuple, f.known.front().axis, 0.0);
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (std::abs(std::abs(ev(k)) - 1.0) < 0.05)
            throw VerificationFailure("hyperbolic_fixture: pole is not hyperbolic for these parameters");
    return f;
}

void verify_fixture(const Fixture& f, double tol) {
    for (const auto& k : f.known) {
        const Vec phi = apply_tuple(f.tuple, k.axis);
        const Vec back = rotate_phase(phi, -2.0 * std::numbers::pi * k.action);
        const double res = (back - k.axis).norm();
        if (!(res < tol)) {
            std::ostringstream os;
            os << "fixture " << f.name << ": listed fixed point fails, residual " << res;
            throw VerificationFailure(os.str());
        }
    }
}

} // namespace gfd
