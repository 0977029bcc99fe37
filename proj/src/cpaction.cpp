#include "gfdyn/cpaction.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "gfdyn/parallel.hpp"

namespace gfd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec gauge_fix(const Vec& z) {
    const CVec c = complexify(z);
    Eigen::Index best = 0;
    c.cwiseAbs().maxCoeff(&best);
    return rotate_phase(z, -std::arg(c(best)));
}

double wrap_unit(double t) {
    double a = t - std::floor(t);
    if (a > 1.0 - 1e-9) a -= 1.0;
    return a;
}

double cyclic_gap(double a, double b) {
    const double g = std::abs(wrap_unit(a) - wrap_unit(b));
    return std::min(g, 1.0 - g);
}

bool last_is_identity(const StepTuple& tuple) {
    const ElementaryGen& f = tuple[tuple.size() - 1];
    if (!f.is_quadratic) return false;
    const Eigen::Index n = 2 * tuple.dim();
    return f.hessian(Vec::Zero(n)).cwiseAbs().maxCoeff() == 0.0;
}

struct Solve {
    bool ok = false;
    double t = 0.0;
    Vec z;
    double residual = 0.0;
    std::string why;
};

// Gauss-Newton on e^{-2iπt}Φ(Z) = Z, |Z|^2 = 1, Im<Z_ref, Z> = 0
Solve solve_seed(const StepTuple& sigma, const Vec& seed, const SeedOptions& opt) {
    const Eigen::Index n = seed.size();
    const Mat J = complex_structure(n / 2);
    const Vec zref = seed.normalized();
    Vec z = zref;
    double t = std::arg(hermitian_dot(z, apply_tuple(sigma, z))) / kTwoPi;

    auto residual = [&](double tt, const Vec& zz, Vec& r) {
        const Vec phi = rotate_phase(apply_tuple(sigma, zz), -kTwoPi * tt);
        r.resize(n + 2);
        r.head(n) = phi - zz;
        r(n) = zz.squaredNorm() - 1.0;
        r(n + 1) = (J * zref).dot(zz);
        return phi;
    };

    Solve out;
    Vec r;
    try {
        Vec phi = residual(t, z, r);
        for (int it = 0; it < opt.max_iter && r.norm() >= opt.tol; ++it) {
            Mat jac = Mat::Zero(n + 2, n + 1);
            jac.col(0).head(n) = -kTwoPi * (J * phi);
            const Mat rot = realify(CMat(std::polar(1.0, -kTwoPi * t) * CMat::Identity(n / 2, n / 2)));
            jac.block(0, 1, n, n) = rot * tuple_jacobian(sigma, z) - Mat::Identity(n, n);
            jac.block(n, 1, 1, n) = 2.0 * z.transpose();
            jac.block(n + 1, 1, 1, n) = (J * zref).transpose();
            const Vec step = jac.completeOrthogonalDecomposition().solve(-r);
            double alpha = 1.0;
            bool moved = false;
            for (int k = 0; k < 40; ++k, alpha *= 0.5) {
                Vec r2;
                const double t2 = t + alpha * step(0);
                const Vec z2 = z + alpha * step.tail(n);
                const Vec phi2 = residual(t2, z2, r2);
                if (r2.norm() < r.norm()) {
                    t = t2;
                    z = z2;
                    r = r2;
                    phi = phi2;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
    } catch (const Error& e) {
        out.why = e.what();
        return out;
    }
    out.residual = r.head(n).norm();
    out.t = t;
    out.z = z;
    out.ok = r.norm() < 1e-9;
    if (!out.ok) {
        std::ostringstream os;
        os << "residual " << r.norm();
        out.why = os.str();
    }
    return out;
}

int projectivized_nullity(const Mat& m) {
    const Mat diff = m - Mat::Identity(m.rows(), m.cols());
    if (diff.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(diff);
    const double tol = 1e-7 * (1.0 + m.norm());
    return static_cast<int>((svd.singularValues().array() < tol).count());
}

CriticalRecord make_record(const ConicalFamily& family, double t, const Vec& z_raw, double residual) {
    CriticalRecord rec;
    rec.t = t - std::floor(t);
    if (rec.t > 1.0 - 1e-9) rec.t -= 1.0;
    rec.action = wrap_unit(rec.t);
    if (rec.action < 0.0) rec.action = 0.0;
    rec.z = gauge_fix(z_raw.normalized());
    rec.residual = residual;
    const StepTuple tup = family.tuple(rec.t);
    rec.v = v_from_trajectory(tup, rec.z);
    rec.gradient_residual = broken_gradient(tup, rec.v).norm();
    const CyclicBlockForm blocks = broken_hessian_blocks(tup, rec.v);
    const Inertia in = inertia(blocks);
    rec.index = in.index;
    rec.hessian_nullity = in.nullity - 2;
    // second route: the Hessian on the complement of C·ζ
    const Mat B = complex_line_complement(rec.v);
    const Mat H = blocks.dense();
    const Mat HB = B.transpose() * H * B;
    rec.chart_index = inertia(Mat(0.5 * (HB + HB.transpose())), default_tolerance(blocks.norm_bound())).index;
    rec.nullity = projectivized_nullity(projectivized_monodromy(family, rec.t, rec.z));
    return rec;
}

} // namespace

StepTuple ConicalFamily::tuple(double t) const { return concat(sigma, rotation_tuple(t, n2, lift_dim())); }

StepTuple ConicalFamily::tuple(double s, double t) const {
    if (!sigma_family) throw Error("ConicalFamily: no σ_s family attached");
    return concat(sigma_family(s), rotation_tuple(t, n2, lift_dim()));
}

double ConicalFamily::value(double t, const Vec& v) const { return broken_value(tuple(t), v); }

Vec ConicalFamily::gradient(double t, const Vec& v) const { return broken_gradient(tuple(t), v); }

double ConicalFamily::dt(double t, const Vec& v) const {
    const Eigen::Index D = lift_dim(), n1 = sigma.size(), n = blocks();
    if (v.size() != 2 * D * n) throw DimensionMismatch("ConicalFamily::dt: length");
    const double a = std::numbers::pi * t / (n2 - 1);
    const double coeff = -(std::numbers::pi / (n2 - 1)) / (std::cos(a) * std::cos(a));
    double total = 0.0;
    for (Eigen::Index k = n1; k < n - 1; ++k) {
        const Vec w = 0.5 * (slot(v, k, D) + slot(v, (k + 1) % n, D));
        total += coeff * w.squaredNorm();
    }
    return total;
}

ConicalFamily make_family(const Fixture& fixture, int n2, double epsilon) {
    if (n2 < 5 || n2 % 2 == 0) throw ParityError("make_family: n2 must be odd and at least 5");
    if (fixture.tuple.size() % 2 != 0) throw ParityError("make_family: σ must have even size");
    if (!last_is_identity(fixture.tuple)) throw Error("make_family: σ must end with the identity");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw Error("make_family: ε must lie in (0, 1/2)");
    ConicalFamily f;
    f.sigma = fixture.tuple;
    f.sigma_family = fixture.family;
    f.d = fixture.d;
    f.n2 = n2;
    f.epsilon = epsilon;
    return f;
}

Mat projectivized_monodromy(const ConicalFamily& family, double t, const Vec& z) {
    const Vec zn = z.normalized();
    const Eigen::Index n = zn.size();
    const Mat rot = realify(CMat(std::polar(1.0, -kTwoPi * t) * CMat::Identity(n / 2, n / 2)));
    const Mat L = rot * tuple_jacobian(family.sigma, zn);
    const Mat B = complex_line_complement(zn);
    return B.transpose() * L * B;
}

CriticalSearch critical_points(const ConicalFamily& family, const SeedOptions& opt) {
    const Eigen::Index D = family.lift_dim();
    std::vector<Vec> seeds;
    if (opt.axes)
        for (Eigen::Index j = 0; j < D; ++j) seeds.push_back(Vec::Unit(2 * D, 2 * j));
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss;
    for (int k = 0; k < opt.random; ++k) {
        Vec s(2 * D);
        for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = gauss(rng);
        seeds.push_back(s.normalized());
    }
    if (opt.phase != 0.0)
        for (auto& s : seeds) s = rotate_phase(s, opt.phase);

    std::vector<Solve> solved(seeds.size());
    std::vector<CriticalRecord> recs(seeds.size());
    std::vector<std::string> errs(seeds.size());
    parallel_for(static_cast<int>(seeds.size()), opt.workers, [&](int i) {
        const size_t k = static_cast<size_t>(i);
        solved[k] = solve_seed(family.sigma, seeds[k], opt);
        if (!solved[k].ok) return;
        try {
            recs[k] = make_record(family, solved[k].t, solved[k].z, solved[k].residual);
        } catch (const Error& e) {
            solved[k].ok = false;
            solved[k].why = e.what();
        }
    });

    CriticalSearch out;
    out.attempted = static_cast<int>(seeds.size());
    for (size_t k = 0; k < seeds.size(); ++k) {
        if (!solved[k].ok) {
            std::ostringstream os;
            os << "seed " << k << ": " << solved[k].why;
            out.failures.push_back(os.str());
            continue;
        }
        const CriticalRecord& r = recs[k];
        bool dup = false;
        for (const auto& q : out.records) {
            const double overlap = std::abs(hermitian_dot(q.z, r.z));
            const double dist = std::sqrt(std::max(0.0, 1.0 - overlap * overlap));
            if (cyclic_gap(q.t, r.t) < 1e-7 && dist < 1e-6) {
                dup = true;
                break;
            }
        }
        if (!dup) out.records.push_back(r);
    }
    if (out.records.empty()) throw Error("critical_points: no fixed direction found");
    return out;
}

std::vector<std::pair<double, int>> action_spectrum(const std::vector<CriticalRecord>& records) {
    std::vector<double> acts;
    for (const auto& r : records) acts.push_back(wrap_unit(r.action) < 0.0 ? 0.0 : wrap_unit(r.action));
    std::sort(acts.begin(), acts.end());
    std::vector<std::pair<double, int>> out;
    for (double a : acts) {
        if (!out.empty() && a - out.back().first < 1e-7)
            ++out.back().second;
        else
            out.emplace_back(a, 1);
    }
    // 0 and values just below 1 are the same class
    if (out.size() > 1 && out.front().first + 1.0 - out.back().first < 1e-7) {
        out.front().second += out.back().second;
        out.pop_back();
    }
    return out;
}

std::vector<std::pair<double, int>> action_spectrum(const ConicalFamily& family, const SeedOptions& seeds) {
    return action_spectrum(critical_points(family, seeds).records);
}

MonotonicityReport delta_monotonicity(const ConicalFamily& family, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> window(-family.epsilon, 1.0 + family.epsilon);
    const Eigen::Index D = family.lift_dim(), len = 2 * family.aux_dim();
    MonotonicityReport rep;
    rep.max_dt = -std::numeric_limits<double>::infinity();
    rep.level_max_dt = -std::numeric_limits<double>::infinity();
    rep.at_zero = family.dt(window(rng), Vec::Zero(len));
    for (int k = 0; k < samples; ++k) {
        Vec v(len);
        for (Eigen::Index i = 0; i < len; ++i) v(i) = gauss(rng);
        rep.max_dt = std::max(rep.max_dt, family.dt(window(rng), v.normalized()));
        ++rep.samples;
    }
    const int level = std::max(1, samples / 10);
    for (int k = 0; k < level; ++k) {
        Vec z(2 * D);
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
        const double t = window(rng);
        const Vec v = v_from_trajectory(family.tuple(t), z.normalized());
        rep.level_max_dt = std::max(rep.level_max_dt, family.dt(t, v.normalized()));
        ++rep.level_samples;
    }
    if (!rep.ok()) {
        std::ostringstream os;
        os << "delta_monotonicity: max ∂_t F = " << rep.max_dt << ", on the level set " << rep.level_max_dt;
        throw VerificationFailure(os.str());
    }
    return rep;
}

std::pair<int, int> recap_shift(const ConicalFamily& family, const CriticalRecord& record) {
    if (record.nullity != 0 || record.hessian_nullity != 0)
        throw Error("recap_shift: record is degenerate, the Morse index is not the full invariant");
    std::vector<ElementaryGen> steps = family.sigma.steps();
    steps.pop_back();
    const StepTuple head = concat(StepTuple(family.lift_dim(), steps), rotation_tuple(record.t, family.n2, family.lift_dim()));
    auto index_at = [&](double s) {
        const StepTuple tup = concat(head, rotation_tuple(s, family.n2, family.lift_dim()));
        return inertia(broken_hessian_blocks(tup, v_from_trajectory(tup, record.z))).index;
    };
    return {index_at(0.0), index_at(1.0)};
}

std::pair<int, int> kernel_correspondence(const ConicalFamily& family, const CriticalRecord& record) {
    const StepTuple tup = family.tuple(record.t);
    const Vec v = v_from_trajectory(tup, record.z);
    const int hess = inertia(broken_hessian_blocks(tup, v)).nullity - 2;
    const int lin = projectivized_nullity(projectivized_monodromy(family, record.t, record.z));
    if (hess != lin) {
        std::ostringstream os;
        os << "kernel_correspondence: Hessian kernel " << hess << " vs linearization " << lin;
        throw VerificationFailure(os.str());
    }
    return {hess, lin};
}

ConicalFamily iterate_family(const ConicalFamily& family, int m, const IterateCap& cap) {
    if (m < 1) throw Error("iterate_family: m must be positive");
    const Eigen::Index aux = family.lift_dim() * (family.sigma.size() * m + family.n2);
    if (m > cap.max_m || aux > cap.max_aux) {
        std::ostringstream os;
        os << "iterate_family: m = " << m << " (aux dimension " << aux << ") exceeds the cap";
        throw ResourceCap(os.str());
    }
    if (m == 1) return family;
    ConicalFamily out = family;
    out.sigma = repeat(family.sigma, m);
    if (family.sigma_family) {
        const auto base = family.sigma_family;
        out.sigma_family = [base, m](double s) {
            const int k = std::min(static_cast<int>(std::floor(m * s)), m - 1);
            const double rest = m * s - k;
            StepTuple t = repeat(base(1.0), k);
            t.append(base(rest));
            t.append(repeat(base(0.0), m - k - 1));
            return t;
        };
    }
    return out;
}

} // namespace gfd
