#include "gfdyn/crossing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gfdyn/parallel.hpp"

namespace gfd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double max_block_norm(const Vec& w, Eigen::Index D) {
    double m = 0.0;
    for (Eigen::Index k = 0; k < w.size() / (2 * D); ++k) m = std::max(m, slot(w, k, D).norm());
    return m;
}

// the pseudo-gradient without the on-manifold check, for Runge-Kutta stages
PseudoGradient raw_pseudo_gradient(const LevelFunction& level, double t, const Vec& w) {
    PseudoGradient out;
    out.ambient = level.gradient(t, w);
    out.dt = level.dt(t, w);
    const Vec n = level.sphere_normal(w);
    Vec h = out.ambient - (out.ambient.dot(n) / n.squaredNorm()) * n;
    const Vec iw = times_i(w);
    const double iw2 = iw.squaredNorm();
    if (iw2 > 0.0) h -= (h.dot(iw) / iw2) * iw;
    out.grad_sq = h.squaredNorm();
    out.w_rate = out.dt * h;
    out.t_rate = -out.grad_sq;
    return out;
}

double golden_min(const std::function<double(double)>& f, double a, double b) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return std::min(fc, fd);
}

struct Seed {
    bool ok = false;
    double t = 0.0;
    Vec w;
    std::string why;
};

// λa + s δ with s tuned so the rescaled point sits at projective distance `target`
Seed radial_seed(const LevelFunction& level, const TrajectoryNeighborhood& nb, const Vec& delta, double target) {
    Seed out;
    const Vec base = nb.lambda * nb.a;
    auto rho = [&](double s) { return projective_distance(nb, level.to_sphere(base + s * delta)); };
    double hi = nb.r;
    int grow = 0;
    while (rho(hi) < target && grow < 8) {
        hi *= 2.0;
        ++grow;
    }
    if (rho(hi) < target) {
        out.why = "seed direction never reaches the target distance";
        return out;
    }
    double lo = 0.0;
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (rho(mid) < target ? lo : hi) = mid;
    }
    const Vec w = level.to_sphere(base + hi * delta);
    const auto t = level.level_time(w);
    if (!t) {
        out.why = "no zero of G_t in the window";
        return out;
    }
    out.ok = true;
    out.t = *t;
    out.w = w;
    return out;
}

// one slot on the unit sphere, the others uniform in the unit ball
Vec product_boundary_direction(Eigen::Index blocks, Eigen::Index D, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<Eigen::Index> pick(0, blocks - 1);
    const Eigen::Index j = pick(rng);
    Vec delta(2 * D * blocks);
    for (Eigen::Index k = 0; k < blocks; ++k) {
        Vec g(2 * D);
        for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = gauss(rng);
        g.normalize();
        const double radius = k == j ? 1.0 : std::pow(unif(rng), 1.0 / static_cast<double>(2 * D));
        slot(delta, k, D) = radius * g;
    }
    return delta;
}

double crossing_time(const FlowSample& a, const FlowSample& b, double level) {
    if (b.rho == a.rho) return b.t;
    const double u = std::clamp((level - a.rho) / (b.rho - a.rho), 0.0, 1.0);
    return a.t + u * (b.t - a.t);
}

} // namespace

int choose_pm(int K) {
    if (K < 1) throw Error("choose_pm: K must be positive");
    int p = 2;
    while (std::ldexp(1.0, p) < K) ++p;
    return p;
}

double lambda_bound(int K, int p, Eigen::Index block_dim, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    double worst = 1.0;
    for (int s = 0; s < samples; ++s) {
        std::vector<double> norms(static_cast<size_t>(K));
        double sum = 0.0;
        for (auto& nk : norms) {
            double q = 0.0;
            for (Eigen::Index i = 0; i < block_dim; ++i) q += gauss(rng) * gauss(rng);
            nk = std::sqrt(q) * std::exp(gauss(rng));
            sum += std::pow(nk, p);
        }
        const double scale = std::pow(sum, -1.0 / p);
        const double mx = *std::max_element(norms.begin(), norms.end()) * scale;
        worst = std::max(worst, 1.0 / mx);
    }
    // the extreme case: all slots of equal size
    worst = std::max(worst, std::pow(static_cast<double>(K), 1.0 / p));
    return worst;
}

double LevelFunction::value(double t, const Vec& w) const {
    return family.value(t, averaging_inverse(w, lift_dim()));
}

Vec LevelFunction::gradient(double t, const Vec& w) const {
    return averaging_transpose_solve(family.gradient(t, averaging_inverse(w, lift_dim())), lift_dim());
}

double LevelFunction::dt(double t, const Vec& w) const { return family.dt(t, averaging_inverse(w, lift_dim())); }

double LevelFunction::sphere(const Vec& w) const {
    double s = 0.0;
    for (Eigen::Index k = 0; k < blocks(); ++k) s += std::pow(slot(w, k, lift_dim()).norm(), p);
    return s;
}

Vec LevelFunction::sphere_normal(const Vec& w) const {
    Vec n(w.size());
    for (Eigen::Index k = 0; k < blocks(); ++k) {
        const auto wk = slot(w, k, lift_dim());
        slot(n, k, lift_dim()) = p * std::pow(wk.norm(), p - 2) * wk;
    }
    return n;
}

Vec LevelFunction::to_sphere(const Vec& w) const { return w * std::pow(sphere(w), -1.0 / p); }

std::optional<double> LevelFunction::level_time(const Vec& w) const {
    double a = -family.epsilon + 1e-12, b = 1.0 + family.epsilon - 1e-12;
    double ga = value(a, w), gb = value(b, w);
    if (ga < 0.0 || gb > 0.0) return std::nullopt;
    if (ga == 0.0) return a;
    if (gb == 0.0) return b;
    for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = value(mid, w);
        if (gm == 0.0) return mid;
        (gm > 0.0 ? a : b) = mid;
    }
    double t = 0.5 * (a + b);
    for (int it = 0; it < 3; ++it) {
        const double g = value(t, w), d = dt(t, w);
        if (d == 0.0 || std::abs(g) < 1e-16) break;
        const double tn = t - g / d;
        if (tn < a - 1e-12 || tn > b + 1e-12) break;
        t = tn;
    }
    return t;
}

LevelFunction make_level(const ConicalFamily& family_m) {
    if (family_m.blocks() % 2 == 0) throw ParityError("make_level: needs an odd number of blocks");
    LevelFunction lv;
    lv.family = family_m;
    lv.p = choose_pm(static_cast<int>(family_m.blocks()));
    return lv;
}

std::optional<std::pair<double, Vec>> sample_manifold(const LevelFunction& level, std::mt19937_64& rng, int tries) {
    std::normal_distribution<double> gauss;
    const Eigen::Index len = 2 * level.lift_dim() * level.blocks();
    for (int k = 0; k < tries; ++k) {
        Vec w(len);
        for (Eigen::Index i = 0; i < len; ++i) w(i) = gauss(rng);
        w = level.to_sphere(w);
        const auto t = level.level_time(w);
        if (t) return std::make_pair(*t, w);
    }
    return std::nullopt;
}

PseudoGradient pseudo_gradient(const LevelFunction& level, double t, const Vec& w) {
    const double g = level.value(t, w);
    const double s = level.sphere(w) - 1.0;
    if (std::abs(g) > 1e-9 || std::abs(s) > 1e-9) {
        std::ostringstream os;
        os << "pseudo_gradient: point off the manifold (G = " << g << ", sphere defect " << s << ")";
        throw Error(os.str());
    }
    return raw_pseudo_gradient(level, t, w);
}

GradientIdentities pseudo_gradient_identities(const LevelFunction& level, double t, const Vec& w) {
    const PseudoGradient x = pseudo_gradient(level, t, w);
    GradientIdentities out;
    out.tangency = std::abs(x.ambient.dot(x.w_rate) + x.dt * x.t_rate);
    const Vec n = level.sphere_normal(w);
    out.sphere = std::abs(n.dot(x.w_rate));
    // orthonormal basis of the horizontal tangent space from a QR factorization
    Mat frame(w.size(), 2);
    frame.col(0) = n;
    frame.col(1) = times_i(w);
    Eigen::HouseholderQR<Mat> qr(frame);
    const Mat Q = qr.householderQ();
    const Vec proj = Q.rightCols(w.size() - 2).transpose() * x.ambient;
    out.action_rate = std::abs(x.t_rate + proj.squaredNorm());
    return out;
}

TrajectoryNeighborhood make_neighborhood(const ConicalFamily& family_m, const Vec& x, double t, double r) {
    TrajectoryNeighborhood nb;
    nb.center = x;
    nb.r = r;
    nb.t = t;
    nb.lift_dim = family_m.lift_dim();
    nb.a = trajectory(family_m.tuple(t), x).w;
    nb.lambda = 1.0 / max_block_norm(nb.a, nb.lift_dim);
    return nb;
}

double box_distance(const TrajectoryNeighborhood& nb, const Vec& p) {
    double m = 0.0;
    for (Eigen::Index k = 0; k < nb.blocks(); ++k)
        m = std::max(m, (slot(p, k, nb.lift_dim) - slot(nb.a, k, nb.lift_dim)).norm());
    return m;
}

double phase_distance(const TrajectoryNeighborhood& nb, const Vec& p) {
    const Eigen::Index D = nb.lift_dim, K = nb.blocks();
    const CVec pc = complexify(p), ac = complexify(Vec(nb.lambda * nb.a));
    auto dist = [&](double theta) {
        const std::complex<double> u = std::polar(1.0, theta);
        double m = 0.0;
        for (Eigen::Index k = 0; k < K; ++k) m = std::max(m, (u * pc.segment(k * D, D) - ac.segment(k * D, D)).norm());
        return m;
    };
    constexpr int grid = 64;
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int j = 0; j < grid; ++j) {
        const double d = dist(kTwoPi * j / grid);
        if (d < best) {
            best = d;
            arg = j;
        }
    }
    const double h = kTwoPi / grid;
    return std::min(best, golden_min(dist, kTwoPi * arg / grid - h, kTwoPi * arg / grid + h));
}

double projective_distance(const TrajectoryNeighborhood& nb, const Vec& p) {
    const double m = max_block_norm(p, nb.lift_dim);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return phase_distance(nb, p / m);
}

Membership neighborhood_membership(const TrajectoryNeighborhood& nb, const Vec& p) {
    Membership out;
    out.in_b = box_distance(nb, p) < nb.r;
    out.in_u = std::abs(max_block_norm(p, nb.lift_dim) - 1.0) < 1e-12 && phase_distance(nb, p) < nb.r;
    out.in_v = projective_distance(nb, p) < nb.r;
    return out;
}

FlowLine flow_line(const LevelFunction& level, double t0, const Vec& w0, int direction, const FlowStop& stop,
                   const FlowOptions& opt) {
    // Dormand-Prince 5(4); the field is autonomous so the nodes c_i are not needed
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double sgn = direction >= 0 ? 1.0 : -1.0;
    const Eigen::Index n = w0.size();
    auto rhs = [&](const Vec& y) {
        const PseudoGradient x = raw_pseudo_gradient(level, y(0), y.tail(n));
        Vec out(n + 1);
        out(0) = sgn * x.t_rate;
        out.tail(n) = sgn * x.w_rate;
        return out;
    };
    auto project = [&](Vec& y) {
        Vec w = level.to_sphere(y.tail(n));
        double t = y(0);
        double g = level.value(t, w);
        for (int it = 0; it < 30 && std::abs(g) > 1e-15; ++it) {
            const Vec gw = level.gradient(t, w);
            const double gt = level.dt(t, w);
            const double den = gt * gt + gw.squaredNorm();
            if (den == 0.0) break;
            t -= g * gt / den;
            w = level.to_sphere(w - (g / den) * gw);
            g = level.value(t, w);
        }
        y(0) = t;
        y.tail(n) = w;
        return std::abs(g);
    };
    auto rho_of = [&](const Vec& w) {
        return stop.region ? projective_distance(*stop.region, w) : std::numeric_limits<double>::quiet_NaN();
    };

    FlowLine line;
    line.direction = direction >= 0 ? 1 : -1;
    Vec y(n + 1);
    y(0) = t0;
    y.tail(n) = w0;
    line.max_drift = project(y);
    double s = 0.0, h = opt.h0;
    Vec k1 = rhs(y);
    line.samples.push_back({s, y(0), std::sqrt(-k1(0) * sgn), rho_of(y.tail(n))});
    int quiet = 0;
    while (true) {
        if (line.steps >= opt.max_steps) {
            line.termination = "max_steps";
            break;
        }
        if (h < 1e-12) {
            line.termination = "underflow";
            break;
        }
        const Vec k2 = rhs(y + h * (a21 * k1));
        const Vec k3 = rhs(y + h * (a31 * k1 + a32 * k2));
        const Vec k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vec k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vec k6 = rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        Vec yn = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Vec k7 = rhs(yn);
        const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double en = 0.0;
        for (Eigen::Index i = 0; i < err.size(); ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(yn(i)));
            en = std::max(en, std::abs(err(i)) / sc);
        }
        if (!(en <= 1.0)) {
            h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
            continue;
        }
        const double drift = project(yn);
        if (drift > 1e-9) {
            line.termination = "projection_failure";
            break;
        }
        line.max_drift = std::max(line.max_drift, drift);
        line.max_action_increase = std::max(line.max_action_increase, sgn * (yn(0) - y(0)));
        s += h;
        ++line.steps;
        y = yn;
        k1 = rhs(y);
        const double speed = k1.norm();
        const double rho = rho_of(y.tail(n));
        line.samples.push_back({s, y(0), std::sqrt(std::max(0.0, -k1(0) * sgn)), rho});
        h *= std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.2), 0.2, 5.0);
        quiet = speed < opt.stall ? quiet + 1 : 0;
        if (quiet >= 3) {
            line.termination = "stalled";
            break;
        }
        if (!level.family.in_window(y(0))) {
            line.termination = "window";
            break;
        }
        if (stop.region && rho < stop.enter) {
            line.termination = "entered";
            break;
        }
        if (stop.region && rho > stop.exit) {
            line.termination = "exited";
            break;
        }
    }
    line.t_end = y(0);
    line.w_end = y.tail(n);
    return line;
}

double isolation_radius(const Fixture& fixture, const Vec& x, double t_x) {
    const ConicalFamily fam = make_family(fixture);
    const CriticalSearch cs = critical_points(fam);
    const Vec xn = x.normalized();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : cs.records) {
        const double ov = std::abs(hermitian_dot(r.z, xn));
        const double d = std::sqrt(std::max(0.0, 2.0 - 2.0 * ov));
        const double gap = std::abs(r.action - (t_x - std::floor(t_x)));
        if (d < 1e-6 && std::min(gap, 1.0 - gap) < 1e-7) continue;
        best = std::min(best, d);
    }
    return 0.5 * best;
}

double sampled_distance_floor(const LevelFunction& level, const TrajectoryNeighborhood& nb, int pairs,
                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Eigen::Index D = nb.lift_dim, K = nb.blocks();
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < pairs; ++k) {
        const Vec base = nb.lambda * nb.a;
        auto place = [&](double target) -> std::optional<Vec> {
            const Vec delta = product_boundary_direction(K, D, rng);
            auto rho = [&](double s) { return projective_distance(nb, level.to_sphere(base + s * delta)); };
            double lo = 0.0, hi = nb.r;
            for (int g = 0; g < 8 && rho(hi) < target; ++g) hi *= 2.0;
            if (rho(hi) < target) return std::nullopt;
            for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                (rho(mid) < target ? lo : hi) = mid;
            }
            return level.to_sphere(base + hi * delta);
        };
        const auto u = place(nb.r);
        const auto v = place(0.5 * nb.r * unif(rng));
        if (!u || !v) continue;
        const double ov = std::abs(hermitian_dot(*u, *v));
        best = std::min(best, std::sqrt(std::max(0.0, u->squaredNorm() + v->squaredNorm() - 2.0 * ov)));
    }
    return best;
}

CrossingTable crossing_experiment(const Fixture& fixture, const Vec& x, double t_x, const CrossingOptions& opt) {
    CrossingTable table;
    const Vec xn = x.normalized();
    table.isolation = isolation_radius(fixture, xn, t_x);
    const ConicalFamily base = make_family(fixture, opt.n2, opt.epsilon);
    for (const int m : opt.m_list) {
        const ConicalFamily fam = iterate_family(base, m, opt.cap);
        const LevelFunction level = make_level(fam);
        table.p[m] = level.p;
        const double tm = m * t_x - std::floor(m * t_x);
        const TrajectoryNeighborhood nb = make_neighborhood(fam, xn, tm, opt.r);
        const Eigen::Index D = fam.lift_dim(), K = fam.blocks();
        if (m == opt.m_list.front()) table.distance_floor = sampled_distance_floor(level, nb, 32, opt.seed + 17);

        std::mt19937_64 rng(opt.seed * 1000003ULL + static_cast<std::uint64_t>(m));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        struct Job {
            int seed;
            std::string kind;
            Seed start;
        };
        std::vector<Job> jobs;
        for (int k = 0; k < opt.seeds_per_m; ++k)
            jobs.push_back({k, "boundary", radial_seed(level, nb, product_boundary_direction(K, D, rng), opt.r)});
        for (int k = 0; k < opt.interior_seeds_per_m; ++k) {
            const Vec delta = product_boundary_direction(K, D, rng);
            const double target = opt.r * (0.25 + 0.2 * unif(rng));
            jobs.push_back({k, "interior", radial_seed(level, nb, delta, target)});
        }
        std::vector<CrossingRow> rows(2 * jobs.size());
        parallel_for(static_cast<int>(rows.size()), opt.workers, [&](int i) {
            const Job& job = jobs[static_cast<size_t>(i / 2)];
            const int dir = i % 2 == 0 ? 1 : -1;
            CrossingRow& row = rows[static_cast<size_t>(i)];
            row.m = m;
            row.seed = job.seed;
            row.direction = dir;
            row.kind = job.kind;
            if (!job.start.ok) {
                row.termination = "discarded";
                return;
            }
            FlowStop stop;
            stop.region = &nb;
            const bool boundary = job.kind == "boundary";
            if (boundary) {
                stop.enter = 0.5 * opt.r;
                stop.exit = 2.0 * opt.r;
            } else {
                stop.exit = opt.r;
            }
            const FlowLine line = flow_line(level, job.start.t, job.start.w, dir, stop, opt.flow);
            row.steps = line.steps;
            row.termination = line.termination;
            row.max_action_increase = line.max_action_increase;
            row.max_drift = line.max_drift;
            const auto& sm = line.samples;
            if (boundary && line.termination == "entered" && sm.size() >= 2) {
                const double t_in = crossing_time(sm[sm.size() - 2], sm.back(), 0.5 * opt.r);
                row.crossed = true;
                row.delta_action = std::abs(t_in - sm.front().t);
            } else if (!boundary && line.termination == "exited" && sm.size() >= 2) {
                // the line read backwards runs from ∂V_r into V_{r/2}
                size_t j = sm.size() - 1;
                while (j > 0 && sm[j].rho > 0.5 * opt.r) --j;
                const double t_half = j + 1 < sm.size() ? crossing_time(sm[j], sm[j + 1], 0.5 * opt.r) : sm[j].t;
                const double t_out = crossing_time(sm[sm.size() - 2], sm.back(), opt.r);
                row.crossed = true;
                row.direction = -dir;
                row.delta_action = std::abs(t_out - t_half);
            }
        });
        double cmin = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < rows.size(); ++k) {
            if (rows[k].termination == "discarded" && k % 2 == 0) {
                std::ostringstream os;
                os << "m = " << m << " " << rows[k].kind << " seed " << rows[k].seed << ": "
                   << jobs[k / 2].start.why;
                table.discarded.push_back(os.str());
            }
            if (rows[k].crossed) cmin = std::min(cmin, rows[k].delta_action);
            table.rows.push_back(rows[k]);
        }
        if (std::isinf(cmin)) {
            table.c_min[m] = std::numeric_limits<double>::quiet_NaN();
            table.no_crossing.push_back(m);
        } else {
            table.c_min[m] = cmin;
            if (!(table.c_inf <= cmin)) table.c_inf = cmin;
        }
    }
    return table;
}

} // namespace gfd
