#include "gfdyn/genfun.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace gfd {

ElementaryGen ElementaryGen::zero(Eigen::Index d) {
    ElementaryGen f;
    f.dim = d;
    f.value = [](const Vec&) { return 0.0; };
    f.gradient = [](const Vec& w) { return Vec(Vec::Zero(w.size())); };
    f.hessian = [](const Vec& w) { return Mat(Mat::Zero(w.size(), w.size())); };
    f.is_quadratic = true;
    f.is_conical = true;
    return f;
}

ElementaryGen ElementaryGen::quadratic(const Mat& hessian) {
    const Mat H = 0.5 * (hessian + hessian.transpose());
    ElementaryGen f;
    f.dim = H.rows() / 2;
    f.value = [H](const Vec& w) { return 0.5 * w.dot(H * w); };
    f.gradient = [H](const Vec& w) { return Vec(H * w); };
    f.hessian = [H](const Vec&) { return H; };
    f.is_quadratic = true;
    // |λ|^2-homogeneous for complex λ iff H commutes with i
    const Mat J = complex_structure(f.dim);
    f.is_conical = (H * J - J * H).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + H.cwiseAbs().maxCoeff());
    return f;
}

StepTuple::StepTuple(Eigen::Index d, std::vector<ElementaryGen> steps) : d_(d), steps_(std::move(steps)) {
    for (const auto& f : steps_)
        if (f.dim != d_) throw DimensionMismatch("StepTuple: steps of different dimension");
}

bool StepTuple::conical() const {
    for (const auto& f : steps_)
        if (!f.is_conical) return false;
    return true;
}

bool StepTuple::quadratic() const {
    for (const auto& f : steps_)
        if (!f.is_quadratic) return false;
    return true;
}

StepTuple& StepTuple::append(const ElementaryGen& f) {
    if (steps_.empty() && d_ == 0) d_ = f.dim;
    if (f.dim != d_) throw DimensionMismatch("StepTuple::append: dimension");
    steps_.push_back(f);
    return *this;
}

StepTuple& StepTuple::append(const StepTuple& other) {
    for (const auto& f : other.steps()) append(f);
    return *this;
}

StepTuple concat(const StepTuple& a, const StepTuple& b) {
    StepTuple out = a;
    out.append(b);
    return out;
}

StepTuple identity_tuple(Eigen::Index d, Eigen::Index n) {
    return StepTuple(d, std::vector<ElementaryGen>(static_cast<size_t>(n), ElementaryGen::zero(d)));
}

StepTuple repeat(const StepTuple& t, int times) {
    StepTuple out(t.dim(), {});
    for (int k = 0; k < times; ++k) out.append(t);
    return out;
}

StepResult step_map(const ElementaryGen& f, const Vec& z, const NewtonOptions& opt) {
    const Eigen::Index n = z.size();
    const Mat J = complex_structure(n / 2);
    const double scale = 1.0 + z.norm();
    auto residual = [&](const Vec& w) -> Vec { return w - 0.5 * (J * f.gradient(w)) - z; };

    Vec w = z;
    Vec r = residual(w);
    double rn = r.norm();
    int it = 0;
    while (rn > opt.tol * scale) {
        if (it >= opt.max_iter || !std::isfinite(rn)) {
            std::ostringstream os;
            os << "step_map: Newton did not converge (residual " << rn << " after " << it << " iterations)";
            throw NewtonDivergence(os.str());
        }
        const Mat Jr = Mat::Identity(n, n) - 0.5 * J * f.hessian(w);
        const Vec delta = -Jr.partialPivLu().solve(r);
        double alpha = 1.0;
        Vec trial = w + delta;
        Vec rt = residual(trial);
        while (!(rt.norm() < rn) && alpha > 1e-4) {
            alpha *= 0.5;
            trial = w + alpha * delta;
            rt = residual(trial);
        }
        w = std::move(trial);
        r = std::move(rt);
        rn = r.norm();
        ++it;
    }
    StepResult out;
    out.sigma_z = 2.0 * w - z;
    out.w = std::move(w);
    out.iterations = it;
    return out;
}

Vec step_source(const ElementaryGen& f, const Vec& w) { return w - 0.5 * times_i(f.gradient(w)); }

Vec step_image(const ElementaryGen& f, const Vec& w) { return w + 0.5 * times_i(f.gradient(w)); }

Mat step_jacobian(const ElementaryGen& f, const Vec& w) {
    const Eigen::Index n = w.size();
    const Mat half = 0.5 * complex_structure(n / 2) * f.hessian(w);
    const Mat I = Mat::Identity(n, n);
    // (I + ½JH)(I - ½JH)^{-1} = ((I - ½JH)^{-T} (I + ½JH)^T)^T
    return (I - half).transpose().partialPivLu().solve((I + half).transpose()).transpose();
}

Trajectory trajectory(const StepTuple& tuple, const Vec& z1, const NewtonOptions& opt) {
    const Eigen::Index n = tuple.size(), d = tuple.dim();
    if (z1.size() != 2 * d) throw DimensionMismatch("trajectory: start point dimension");
    Trajectory tr;
    tr.z.resize(2 * d * (n + 1));
    tr.w.resize(2 * d * n);
    slot(tr.z, 0, d) = z1;
    for (Eigen::Index k = 0; k < n; ++k) {
        const StepResult s = step_map(tuple[k], slot(tr.z, k, d), opt);
        slot(tr.w, k, d) = s.w;
        slot(tr.z, k + 1, d) = s.sigma_z;
    }
    return tr;
}

Vec averaging_map(const Vec& v, Eigen::Index d) {
    const Eigen::Index n = v.size() / (2 * d);
    Vec w(v.size());
    for (Eigen::Index k = 0; k < n; ++k) slot(w, k, d) = 0.5 * (slot(v, k, d) + slot(v, (k + 1) % n, d));
    return w;
}

Vec averaging_inverse(const Vec& w, Eigen::Index d) {
    const Eigen::Index n = w.size() / (2 * d);
    if (n % 2 == 0) throw ParityError("averaging_inverse: A is singular for an even number of blocks");
    Vec v(w.size());
    Vec v1 = Vec::Zero(2 * d);
    for (Eigen::Index k = 0; k < n; ++k) v1 += (k % 2 == 0 ? 1.0 : -1.0) * slot(w, k, d);
    slot(v, 0, d) = v1;
    for (Eigen::Index k = 0; k + 1 < n; ++k) slot(v, k + 1, d) = 2.0 * slot(w, k, d) - slot(v, k, d);
    return v;
}

Vec averaging_transpose_solve(const Vec& g, Eigen::Index d) {
    // (A^T y)_j = ½(y_j + y_{j-1})
    const Eigen::Index n = g.size() / (2 * d);
    if (n % 2 == 0) throw ParityError("averaging_transpose_solve: even number of blocks");
    Vec y(g.size());
    // y_{n-1} from the alternating sum starting at g_0
    Vec last = Vec::Zero(2 * d);
    for (Eigen::Index j = 0; j < n; ++j) last += (j % 2 == 0 ? 1.0 : -1.0) * slot(g, j, d);
    slot(y, n - 1, d) = last;
    slot(y, 0, d) = 2.0 * slot(g, 0, d) - last;
    for (Eigen::Index j = 1; j + 1 < n; ++j) slot(y, j, d) = 2.0 * slot(g, j, d) - slot(y, j - 1, d);
    return y;
}

Vec psi(const StepTuple& tuple, const Vec& z, const NewtonOptions& opt) {
    const Eigen::Index n = tuple.size(), d = tuple.dim();
    if (z.size() != 2 * d * n) throw DimensionMismatch("psi: need n points");
    Vec w(z.size());
    for (Eigen::Index k = 0; k < n; ++k) slot(w, k, d) = step_map(tuple[k], slot(z, k, d), opt).w;
    return w;
}

BrokenCoordinates broken_coordinates(const StepTuple& tuple, const Vec& v) {
    const Eigen::Index n = tuple.size(), d = tuple.dim();
    if (v.size() != 2 * d * n) throw DimensionMismatch("broken_coordinates: length");
    BrokenCoordinates bc;
    bc.v = v;
    bc.w = averaging_map(v, d);
    bc.z.resize(v.size());
    bc.sigma_z.resize(v.size());
    for (Eigen::Index k = 0; k < n; ++k) {
        const Vec wk = slot(bc.w, k, d);
        const Vec half = 0.5 * times_i(tuple[k].gradient(wk));
        slot(bc.z, k, d) = wk - half;
        slot(bc.sigma_z, k, d) = wk + half;
    }
    return bc;
}

Vec v_from_trajectory(const StepTuple& tuple, const Vec& z1, const NewtonOptions& opt) {
    const Trajectory tr = trajectory(tuple, z1, opt);
    return averaging_inverse(tr.w, tuple.dim());
}

double broken_value(const StepTuple& tuple, const Vec& v) {
    const Eigen::Index n = tuple.size(), d = tuple.dim();
    if (v.size() != 2 * d * n) throw DimensionMismatch("broken_value: length");
    double total = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto vk = slot(v, k, d);
        const auto vn = slot(v, (k + 1) % n, d);
        total += tuple[k].value(0.5 * (vk + vn)) + 0.5 * vk.dot(times_i(vn));
    }
    return total;
}

Vec broken_gradient(const StepTuple& tuple, const Vec& v) {
    const Eigen::Index n = tuple.size(), d = tuple.dim();
    if (v.size() != 2 * d * n) throw DimensionMismatch("broken_gradient: length");
    const Vec w = averaging_map(v, d);
    std::vector<Vec> grads(static_cast<size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) grads[static_cast<size_t>(k)] = tuple[k].gradient(slot(w, k, d));
    Vec g(v.size());
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index km = (k + n - 1) % n, kp = (k + 1) % n;
        const Vec dv = slot(v, kp, d) - slot(v, km, d);
        slot(g, k, d) = 0.5 * (grads[static_cast<size_t>(km)] + grads[static_cast<size_t>(k)]) + 0.5 * times_i(dv);
    }
    return g;
}

CyclicBlockForm broken_hessian_blocks(const StepTuple& tuple, const Vec& v) {
    const Eigen::Index n = tuple.size(), d = tuple.dim();
    if (v.size() != 2 * d * n) throw DimensionMismatch("broken_hessian: length");
    const Vec w = averaging_map(v, d);
    const Mat halfJ = 0.5 * complex_structure(d);
    std::vector<Mat> H(static_cast<size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        const Mat h = tuple[k].hessian(slot(w, k, d));
        H[static_cast<size_t>(k)] = 0.5 * (h + h.transpose());
    }
    CyclicBlockForm form;
    form.diag.resize(static_cast<size_t>(n));
    form.upper.resize(static_cast<size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        const size_t km = static_cast<size_t>((k + n - 1) % n), kk = static_cast<size_t>(k);
        form.diag[kk] = 0.25 * (H[km] + H[kk]);
        form.upper[kk] = 0.25 * H[kk] + halfJ;
    }
    return form;
}

QuadForm broken_hessian(const StepTuple& tuple, const Vec& v) { return QuadForm(broken_hessian_blocks(tuple, v).dense()); }

std::pair<double, double> decompose_check(const StepTuple& sigma, const StepTuple& delta, const Vec& v) {
    const Eigen::Index n = sigma.size(), m = delta.size(), d = sigma.dim();
    if (delta.dim() != d) throw DimensionMismatch("decompose_check: dimensions");
    if (v.size() != 2 * d * (n + m)) throw DimensionMismatch("decompose_check: length");
    const double lhs = broken_value(concat(sigma, delta), v);

    const StepTuple sigma_id = concat(sigma, identity_tuple(d, 1));
    const StepTuple delta_id = concat(delta, identity_tuple(d, 1));
    const Vec first = v.head(2 * d * (n + 1));
    Vec second(2 * d * (m + 1));
    second.head(2 * d * m) = v.segment(2 * d * n, 2 * d * m);
    second.tail(2 * d) = slot(v, 0, d);
    const double rhs = broken_value(sigma_id, first) + broken_value(delta_id, second);
    return {lhs, rhs};
}

Quad0Reduction reduce_quad0(const QuadForm& q, Eigen::Index base_real_dim, std::uint64_t seed) {
    const Mat& H = q.matrix();
    const Eigen::Index N = H.rows(), nb = base_real_dim, nf = N - nb;
    if (nb < 0 || nf < 0) throw DimensionMismatch("reduce_quad0: base dimension");
    const Mat b = H.topRightCorner(nb, nf);
    const Mat c = H.bottomRightCorner(nf, nf);
    Quad0Reduction out;
    out.c = c;
    if (nf > 0) {
        Eigen::JacobiSVD<Mat> svd(c);
        const Vec& s = svd.singularValues();
        if (s(nf - 1) <= 1e-10 * (1.0 + s(0)))
            throw CBlockSingular("reduce_quad0: fiber block singular, form does not generate the 0-section");
        out.shift = c.fullPivLu().solve(b.transpose());
    } else {
        out.shift = Mat::Zero(0, nb);
    }
    out.A = Mat::Identity(N, N);
    out.A.bottomLeftCorner(nf, nb) = -out.shift;

    const Mat reduced = out.A.transpose() * H * out.A;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    double worst = 0.0;
    for (int s = 0; s < 16; ++s) {
        Vec x(N);
        for (Eigen::Index k = 0; k < N; ++k) x(k) = gauss(rng);
        const Vec g = reduced * x;
        if (nb > 0) worst = std::max(worst, g.head(nb).cwiseAbs().maxCoeff() / (1.0 + H.norm() * x.norm()));
    }
    out.residual = worst;
    if (worst > 1e-9) throw VerificationFailure("reduce_quad0: reduced form still depends on the base variable");
    return out;
}

namespace {

Mat composition_at_origin(const StepTuple& t) {
    const Eigen::Index d = t.dim();
    Mat prod = Mat::Identity(2 * d, 2 * d);
    const Vec zero = Vec::Zero(2 * d);
    for (const auto& f : t.steps()) prod = step_jacobian(f, zero) * prod;
    return prod;
}

// move blocks (first, last) of F_{(δ,id)} to the front
Mat base_first(const Mat& H, Eigen::Index blocks, Eigen::Index d) {
    const Eigen::Index b = 2 * d;
    std::vector<Eigen::Index> order{0, blocks - 1};
    for (Eigen::Index k = 1; k + 1 < blocks; ++k) order.push_back(k);
    Eigen::VectorXi perm(H.rows());
    for (Eigen::Index k = 0; k < blocks; ++k)
        for (Eigen::Index j = 0; j < b; ++j) perm(k * b + j) = static_cast<int>(order[static_cast<size_t>(k)] * b + j);
    Mat out(H.rows(), H.cols());
    for (Eigen::Index r = 0; r < H.rows(); ++r)
        for (Eigen::Index c = 0; c < H.cols(); ++c) out(r, c) = H(perm(r), perm(c));
    return out;
}

} // namespace

StabilizationReport stabilize(const StepTuple& sigma, const StepTuple& delta, std::uint64_t seed) {
    const Eigen::Index m = sigma.size(), n = delta.size(), d = delta.dim();
    if (m % 2 != 0) throw ParityError("stabilize: σ must have even size");
    if (n % 2 != 1) throw ParityError("stabilize: δ must have odd size");
    if (!delta.quadratic()) throw Error("stabilize: δ steps must be quadratic");
    if (m > 0 && sigma.dim() != d) throw DimensionMismatch("stabilize: dimensions");
    const Mat prod = composition_at_origin(delta);
    if ((prod - Mat::Identity(2 * d, 2 * d)).cwiseAbs().maxCoeff() > 1e-9)
        throw VerificationFailure("stabilize: δ does not compose to the identity");

    const Eigen::Index b = 2 * d;
    const Mat Hd = broken_hessian(delta, Vec::Zero(b * n)).matrix();
    StabilizationReport rep;
    rep.q = QuadForm(Hd.bottomRightCorner(b * (n - 1), b * (n - 1)));
    rep.index_q = inertia(rep.q).index;
    rep.index_delta = inertia(QuadForm(Hd)).index;
    const StepTuple delta_id = concat(delta, identity_tuple(d, 1));
    const Mat Hdi = broken_hessian(delta_id, Vec::Zero(b * (n + 1))).matrix();
    rep.index_delta_id = inertia(QuadForm(Hdi)).index;

    if (m > 0) {
        // F_{(σ,δ)}(v¹, v² + B'(v_{m+1}, v_1)) against F_{(σ,id)}(v¹) + Q(v²)
        const Quad0Reduction red = reduce_quad0(QuadForm(base_first(Hdi, n + 1, d)), 2 * b, seed);
        const StepTuple full = concat(sigma, delta);
        const StepTuple sigma_id = concat(sigma, identity_tuple(d, 1));
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss;
        double worst = 0.0;
        for (int s = 0; s < 8; ++s) {
            Vec v1(b * (m + 1)), v2(b * (n - 1));
            for (Eigen::Index k = 0; k < v1.size(); ++k) v1(k) = 0.5 * gauss(rng);
            for (Eigen::Index k = 0; k < v2.size(); ++k) v2(k) = 0.5 * gauss(rng);
            Vec x(2 * b);
            x << slot(v1, m, d), slot(v1, 0, d);
            Vec v(b * (m + n));
            v.head(b * (m + 1)) = v1;
            v.tail(b * (n - 1)) = v2 - red.shift * x;
            const double lhs = broken_value(full, v);
            const double rhs = broken_value(sigma_id, v1) + rep.q.value(v2);
            worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
        }
        rep.splitting_residual = worst;
    }
    return rep;
}

bool common_factor_check(const StepTuple& sigma, const StepTuple& delta, const StepTuple& delta_prime,
                         const CommonFactorInput& in, double tol) {
    const Eigen::Index m = sigma.size(), n = delta.size(), d = sigma.dim();
    if (delta_prime.size() != n) throw DimensionMismatch("common_factor_check: δ and δ' differ in length");
    const Eigen::Index b = 2 * d, N = m + n + 1;
    auto to_v = [&](const StepTuple& dl, const Vec& seg) -> Vec {
        const StepTuple full = concat(concat(sigma, dl), identity_tuple(d, 1));
        Vec z(b * N);
        z << in.z1, seg, in.z_last;
        const Vec w = psi(full, z);
        if (N % 2 == 1) return averaging_inverse(w, d);
        // even size: A has a kernel; w must lie in its image and the identity slot anchors v_1 = w_N
        Vec alt = Vec::Zero(b);
        for (Eigen::Index k = 0; k < N; ++k) alt += (k % 2 == 0 ? 1.0 : -1.0) * slot(w, k, d);
        if (alt.norm() > tol * (1.0 + w.norm())) return Vec();
        Vec v(w.size());
        slot(v, 0, d) = slot(w, N - 1, d);
        for (Eigen::Index k = 0; k + 1 < N; ++k) slot(v, k + 1, d) = 2.0 * slot(w, k, d) - slot(v, k, d);
        return v;
    };
    const Vec v = to_v(delta, in.z2);
    const Vec vp = to_v(delta_prime, in.z3);
    if (v.size() == 0 || vp.size() == 0) return false;
    const double diff = (v.head(b * m) - vp.head(b * m)).cwiseAbs().maxCoeff();
    return diff <= tol * (1.0 + v.head(b * m).cwiseAbs().maxCoeff());
}

SmallnessReport certify_smallness(const StepTuple& tuple, double radius, int samples, std::uint64_t seed) {
    const Eigen::Index d = tuple.dim();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    SmallnessReport rep;
    rep.samples = samples;
    for (int s = 0; s < samples; ++s) {
        Vec z(2 * d);
        for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = gauss(rng);
        z *= radius * std::pow(unif(rng), 1.0 / static_cast<double>(2 * d)) / z.norm();
        for (Eigen::Index k = 0; k < tuple.size(); ++k) {
            try {
                rep.worst_iterations = std::max(rep.worst_iterations, step_map(tuple[k], z).iterations);
            } catch (const NewtonDivergence& e) {
                if (rep.failures == 0) {
                    std::ostringstream os;
                    os << "step " << k << ": " << e.what();
                    rep.first_failure = os.str();
                }
                ++rep.failures;
                rep.ok = false;
            }
        }
    }
    return rep;
}

} // namespace gfd
