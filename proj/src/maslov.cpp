#include "gfdyn/maslov.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

namespace gfd {

namespace {

Mat symplectic_inverse(const Mat& m) {
    const Mat J = complex_structure(m.rows() / 2);
    return -J * m.transpose() * J;
}

Mat scalar_rotation(Eigen::Index d, double turns) {
    return realify(CMat(std::polar(1.0, 2.0 * std::numbers::pi * turns) * CMat::Identity(d, d)));
}

bool cayley_regular(const Mat& m, double threshold) {
    const Mat plus = Mat::Identity(m.rows(), m.cols()) + m;
    Eigen::JacobiSVD<Mat> svd(plus);
    return svd.singularValues()(plus.rows() - 1) * threshold > 1.0;
}

// Fixed factors from I to m: m = U P, P^{1/2} P^{1/2} U^{1/2} U^{1/2} composed right to left.
std::vector<Mat> root_path_factors(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m.transpose() * m);
    const Mat& V = es.eigenvectors();
    const Vec s = es.eigenvalues().cwiseSqrt();
    const Mat Phalf = V * s.cwiseSqrt().asDiagonal() * V.transpose();
    const Mat U = m * V * s.cwiseInverse().asDiagonal() * V.transpose();
    Eigen::ComplexEigenSolver<CMat> ces(complexify(U));
    const CMat W = ces.eigenvectors();
    CVec root = ces.eigenvalues();
    for (Eigen::Index k = 0; k < root.size(); ++k) root(k) = std::polar(1.0, 0.5 * std::arg(root(k)));
    const Mat Uhalf = realify(CMat(W * root.asDiagonal() * W.inverse()));
    return {Phalf, Phalf, Uhalf, Uhalf};
}

struct UnitFactors {
    bool ok = true;
    std::vector<Mat> hessians;
};

UnitFactors unit_factors(const SymplecticPath& path, int N, double threshold) {
    UnitFactors out;
    out.hessians.reserve(static_cast<size_t>(N));
    Mat prev_inv = symplectic_inverse(path.sample(0.0));
    for (int i = 0; i < N; ++i) {
        const double a = static_cast<double>(i) / N, h = 1.0 / N;
        for (double theta : {0.25, 0.5, 0.75}) {
            if (!cayley_regular(path.sample(a + theta * h) * prev_inv, threshold)) {
                out.ok = false;
                return out;
            }
        }
        const Mat next = path.sample(a + h);
        const Mat factor = next * prev_inv;
        if (!cayley_regular(factor, threshold)) {
            out.ok = false;
            return out;
        }
        out.hessians.push_back(cayley_hessian(factor, threshold));
        prev_inv = symplectic_inverse(next);
    }
    return out;
}

CyclicBlockForm chain_form(const std::vector<Mat>& hs) {
    const size_t n = hs.size();
    const Eigen::Index b = hs.front().rows();
    const Mat halfJ = 0.5 * complex_structure(b / 2);
    CyclicBlockForm form;
    form.diag.resize(n);
    form.upper.resize(n);
    for (size_t k = 0; k < n; ++k) {
        const size_t km = (k + n - 1) % n;
        form.diag[k] = 0.25 * (hs[km] + hs[k]);
        form.upper[k] = 0.25 * hs[k] + halfJ;
    }
    return form;
}

// Γ_0 prefix, then the unit factors `horizon` times (or zeros), padded to odd length
Inertia family_end_inertia(const std::vector<Mat>& prefix, const std::vector<Mat>& unit, int horizon, bool identity) {
    std::vector<Mat> hs = prefix;
    const Eigen::Index b = unit.front().rows();
    const Mat zero = Mat::Zero(b, b);
    hs.reserve(prefix.size() + unit.size() * static_cast<size_t>(horizon) + 1);
    for (int k = 0; k < horizon; ++k)
        for (const auto& h : unit) hs.push_back(identity ? zero : h);
    if (hs.size() % 2 == 0) hs.push_back(zero);
    return inertia(chain_form(hs));
}

} // namespace

Mat SymplecticPath::at(double t) const {
    if (t <= 1.0) return sample(t);
    const double k = std::ceil(t) - 1.0;
    const Mat one = sample(1.0);
    Mat pw = Mat::Identity(one.rows(), one.cols());
    for (int j = 0; j < static_cast<int>(k); ++j) pw = pw * one;
    return sample(t - k) * pw;
}

bool SymplecticPath::based(double tol) const {
    const Mat g0 = sample(0.0);
    return (g0 - Mat::Identity(g0.rows(), g0.cols())).cwiseAbs().maxCoeff() <= tol;
}

SymplecticPath SymplecticPath::constant(Eigen::Index d, const Mat& m) {
    const Mat value = m.size() ? m : Mat(Mat::Identity(2 * d, 2 * d));
    SymplecticPath p;
    p.d = d;
    p.sample = [value](double) { return value; };
    p.resolution = 2;
    return p;
}

SymplecticPath SymplecticPath::rotation(Eigen::Index d, double turns) {
    SymplecticPath p;
    p.d = d;
    p.sample = [d, turns](double t) { return scalar_rotation(d, turns * t); };
    p.resolution = std::max(4, static_cast<int>(std::ceil(4.0 * std::abs(turns))));
    return p;
}

SymplecticPath SymplecticPath::exponential(const Mat& generator) {
    SymplecticPath p;
    p.d = generator.rows() / 2;
    p.sample = [generator](double t) { return Mat((t * generator).exp()); };
    p.resolution = std::max(4, static_cast<int>(std::ceil(2.0 * generator.norm())));
    return p;
}

SymplecticPath SymplecticPath::unitary_diagonal(Eigen::Index d, std::function<std::vector<double>(double)> angles) {
    SymplecticPath p;
    p.d = d;
    p.sample = [d, angles](double t) {
        const std::vector<double> th = angles(t);
        CVec diag(d);
        for (Eigen::Index j = 0; j < d; ++j) diag(j) = std::polar(1.0, 2.0 * std::numbers::pi * th[static_cast<size_t>(j)]);
        return realify(CMat(diag.asDiagonal()));
    };
    p.resolution = 8;
    return p;
}

SymplecticPath concatenate(const SymplecticPath& r, const SymplecticPath& s) {
    SymplecticPath p;
    p.d = r.d;
    p.sample = [r, s](double t) { return t <= 0.5 ? r.sample(2.0 * t) : s.sample(2.0 * t - 1.0); };
    p.resolution = 2 * std::max(r.resolution, s.resolution);
    return p;
}

SymplecticPath reverse(const SymplecticPath& r) {
    SymplecticPath p = r;
    p.sample = [r](double t) { return r.sample(1.0 - t); };
    return p;
}

SymplecticPath direct_sum(const SymplecticPath& r, const SymplecticPath& s) {
    SymplecticPath p;
    p.d = r.d + s.d;
    p.sample = [r, s](double t) {
        const Mat a = r.sample(t), b = s.sample(t);
        Mat m = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
        m.topLeftCorner(a.rows(), a.cols()) = a;
        m.bottomRightCorner(b.rows(), b.cols()) = b;
        return m;
    };
    p.resolution = std::max(r.resolution, s.resolution);
    return p;
}

SymplecticPath conjugate(const SymplecticPath& r, const Mat& a) {
    const Mat ainv = a.inverse();
    SymplecticPath p = r;
    p.sample = [r, a, ainv](double t) { return Mat(a * r.sample(t) * ainv); };
    return p;
}

SymplecticPath reparametrize(const SymplecticPath& r, std::function<double(double)> phi) {
    SymplecticPath p = r;
    p.sample = [r, phi](double t) { return r.sample(phi(t)); };
    p.resolution = 2 * r.resolution;
    return p;
}

Inertia cayley_chain_inertia(const std::vector<Mat>& hessians) {
    std::vector<Mat> hs = hessians;
    if (hs.size() % 2 == 0) hs.push_back(Mat::Zero(hs.front().rows(), hs.front().cols()));
    return inertia(chain_form(hs));
}

MaslovResult maslov_detail(const SymplecticPath& path, int horizon, int subdivisions, const MaslovOptions& opt) {
    if (horizon < 1) throw Error("maslov_index: horizon must be positive");
    const Mat g0 = path.sample(0.0);
    const bool based = (g0 - Mat::Identity(g0.rows(), g0.cols())).cwiseAbs().maxCoeff() <= 1e-12;
    if (!based && horizon > 1) throw Error("maslov_index: iteration needs a path starting at the identity");
    std::vector<Mat> prefix;
    if (!based)
        for (const Mat& f : root_path_factors(g0)) prefix.push_back(cayley_hessian(f, opt.singular_threshold));

    auto index_at = [&](int N, bool& ok) {
        const UnitFactors uf = unit_factors(path, N, opt.singular_threshold);
        ok = uf.ok;
        MaslovResult r;
        if (!ok) return r;
        const Inertia end = family_end_inertia(prefix, uf.hessians, horizon, false);
        const Inertia start = family_end_inertia(prefix, uf.hessians, horizon, true);
        r.mas = end.index - start.index;
        r.nullity_end = end.nullity;
        r.subdivisions = N;
        return r;
    };

    int N = subdivisions > 0 ? subdivisions : std::max(1, path.resolution);
    while (N <= opt.max_subdivisions) {
        bool ok = false;
        const MaslovResult r = index_at(N, ok);
        if (!ok) {
            N *= 2;
            continue;
        }
        if (!opt.verify_doubling) return r;
        bool ok2 = false;
        const MaslovResult r2 = index_at(2 * N, ok2);
        if (ok2 && r2.mas == r.mas && r2.nullity_end == r.nullity_end) return r;
        N *= 2;
    }
    std::ostringstream os;
    os << "maslov_index: no Cayley-regular subdivision up to " << opt.max_subdivisions << " per unit";
    throw SubdivisionFailure(os.str());
}

int maslov_index(const SymplecticPath& path, int subdivisions) { return maslov_detail(path, 1, subdivisions).mas; }

PropertyReport path_properties_suite(const SymplecticPath& r, const SymplecticPath& s, const Mat& a,
                                     std::function<double(double)> phi) {
    PropertyReport rep;
    rep.mas_r = maslov_index(r);
    rep.mas_s = maslov_index(s);
    rep.concatenation = maslov_index(concatenate(r, s));
    rep.reversed = maslov_index(reverse(r));
    rep.direct = maslov_index(direct_sum(r, s));
    rep.conjugated = maslov_index(conjugate(r, a));
    rep.reparametrized = maslov_index(reparametrize(r, std::move(phi)));
    return rep;
}

FixedPointMaslov fixed_point_maslov(const std::function<StepTuple(double)>& family, const Vec& z) {
    const StepTuple t0 = family(0.0), t1 = family(1.0);
    if (t0.size() != t1.size()) throw Error("fixed_point_maslov: family changes size");
    if (!t0.odd()) throw ParityError("fixed_point_maslov: tuples must have odd size");
    FixedPointMaslov out;
    out.index_start = inertia(broken_hessian_blocks(t0, v_from_trajectory(t0, z))).index;
    out.index_end = inertia(broken_hessian_blocks(t1, v_from_trajectory(t1, z))).index;
    out.index_difference = out.index_end - out.index_start;
    SymplecticPath lin;
    lin.d = t0.dim();
    lin.sample = [family, z](double s) { return tuple_jacobian(family(s), z); };
    lin.resolution = 8;
    out.linearized = maslov_index(lin);
    return out;
}

MeanIndex mean_index(const SymplecticPath& path, int K, int table_upto) {
    if (K < 1) throw Error("mean_index: K must be positive");
    MaslovOptions checked;
    const MaslovResult first = maslov_detail(path, 1, 0, checked);
    MaslovOptions fast;
    fast.verify_doubling = false;
    MeanIndex out;
    out.horizon = K;
    out.error_bar = static_cast<double>(path.d) / K;
    const int upto = std::min(std::max(table_upto, 1), K);
    for (int k = 1; k <= upto; ++k) {
        const MaslovResult r = k == 1 ? first : maslov_detail(path, k, first.subdivisions, fast);
        out.table.push_back({k, r.mas, r.nullity_end});
    }
    int masK = 0;
    if (K <= upto)
        masK = out.table[static_cast<size_t>(K - 1)].mas;
    else
        masK = maslov_detail(path, K, first.subdivisions, fast).mas;
    // mas_K lies in [Kμ, Kμ + 2d]; centering gives |mean - μ| <= d/K
    out.mean = static_cast<double>(masK - path.d) / K;
    return out;
}

IndexReport bott_evaluate(int d, double mean, double error_bar, int horizon, std::vector<IterateEntry> iterates) {
    IndexReport rep;
    rep.d = d;
    rep.mean = mean;
    rep.error_bar = error_bar;
    rep.horizon = horizon;
    rep.iterates = std::move(iterates);
    rep.mas = rep.iterates.empty() ? 0 : rep.iterates.front().mas;
    for (const auto& e : rep.iterates) {
        const double km = e.k * mean;
        const double slack = e.k * error_bar + 1e-9;
        const double shifted = e.mas - d;
        const double lo = shifted - (km - d);
        const double hi = (km + d) - (shifted + e.nullity);
        rep.lower_margin.push_back(lo);
        rep.upper_margin.push_back(hi);
        if (lo < -slack || hi < -slack) ++rep.violations;
        const double lo_raw = e.mas - (km - d);
        const double hi_raw = (km + d) - (e.mas + e.nullity);
        if (lo_raw < -slack || hi_raw < -slack) ++rep.unshifted_violations;
    }
    return rep;
}

IndexReport bott_report(const SymplecticPath& path, int kmax, int mean_horizon) {
    const MeanIndex mi = mean_index(path, mean_horizon, kmax);
    return bott_evaluate(static_cast<int>(path.d), mi.mean, mi.error_bar, mi.horizon, mi.table);
}

IndexReport bott_check(const SymplecticPath& path, int kmax, int mean_horizon) {
    IndexReport rep = bott_report(path, kmax, mean_horizon);
    if (rep.violations > 0) {
        std::ostringstream os;
        os << "bott_check: " << rep.violations << " inequality violations";
        throw VerificationFailure(os.str());
    }
    return rep;
}

namespace {

// dΦ_u(axis) for u >= 0 via the family on [0,1] and powers of dΦ_1
struct LinearizedFlow {
    std::function<StepTuple(double)> family;
    Vec axis;
    Mat one;

    Mat at(double u) const {
        if (u <= 1.0) return tuple_jacobian(family(u), axis);
        const int k = static_cast<int>(std::ceil(u)) - 1;
        Mat pw = Mat::Identity(one.rows(), one.cols());
        for (int j = 0; j < k; ++j) pw = pw * one;
        return tuple_jacobian(family(u - k), axis) * pw;
    }
};

SymplecticPath lifted_path(const Fixture& fixture, const Vec& axis, double phase_rate, int m) {
    LinearizedFlow flow{fixture.family, axis, tuple_jacobian(fixture.tuple, axis)};
    const Eigen::Index dim = fixture.d + 1;
    SymplecticPath p;
    p.d = dim;
    p.sample = [flow, dim, phase_rate, m](double s) { return Mat(scalar_rotation(dim, -phase_rate * s) * flow.at(m * s)); };
    p.resolution = 8 * m;
    return p;
}

} // namespace

SymplecticPath fixed_point_path(const Fixture& fixture, const Vec& axis, double action, int m) {
    const double tm = m * action - std::floor(m * action);
    return lifted_path(fixture, axis, tm, m);
}

std::vector<IterationRow> iterated_index_identity(const Fixture& fixture, const Vec& axis, double action, int mmax,
                                                  int K, int n2) {
    const int d = static_cast<int>(fixture.d);
    const int n1 = static_cast<int>(fixture.tuple.size());
    const SymplecticPath base = fixed_point_path(fixture, axis, action, 1);
    std::vector<IterationRow> rows;
    for (int m = 1; m <= mmax; ++m) {
        IterationRow row;
        row.m = m;
        row.action_m = m * action - std::floor(m * action);
        const StepTuple idt = identity_tuple(d + 1, n1 * m + n2);
        row.i_m = inertia(broken_hessian_blocks(idt, Vec::Zero(2 * (d + 1) * idt.size()))).index;
        row.mmas_m = mean_index(fixed_point_path(fixture, axis, action, m), K, 1).mean;
        const double mmas_1 = mean_index(base, m * K, 1).mean;
        row.lhs = row.i_m + row.mmas_m;
        row.rhs = m * mmas_1 - 2.0 * (d + 1) * std::floor(m * action) + row.i_m;
        row.error_bar = static_cast<double>(d) / K;
        rows.push_back(row);
    }
    return rows;
}

AugmentedAction augmented_action(const Fixture& fixture, const Vec& axis, double action, int m, int K) {
    const int d = static_cast<int>(fixture.d);
    const double norm = 2.0 * (d + 1);
    AugmentedAction out;
    const double mean_m = mean_index(lifted_path(fixture, axis, m * action, m), K, 1).mean;
    out.value = m * action - mean_m / norm;
    const double mean_1 = mean_index(lifted_path(fixture, axis, action, 1), K, 1).mean;
    out.expected = m * (action - mean_1 / norm);
    // each mean is within (d+1)/K of its limit
    out.tolerance = (m + 1) * (d + 1.0) / (K * norm) + 1e-12;
    return out;
}

} // namespace gfd
