// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "gfdyn/crossing.hpp"
#include "gfdyn/maslov.hpp"

using namespace gfd;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool ok = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs < budget_s;
    const bool ok = out.ok && in_time;
    if (!ok) ++failures;
    std::printf("%s %2d %s | %s | %.1fs (limit %.0fs)%s\n", ok ? "PASS" : "FAIL", id, title, out.detail.c_str(), secs,
                budget_s, in_time ? "" : " over time");
    std::fflush(stdout);
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

Vec gaussian(Eigen::Index n, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec v(n);
    for (auto& x : v) x = scale * g(rng);
    return v;
}

ElementaryGen random_quadratic(Eigen::Index D, double scale, std::mt19937_64& rng) {
    const Mat a = Mat::NullaryExpr(2 * D, 2 * D, [&] { return std::normal_distribution<double>(0.0, scale)(rng); });
    return ElementaryGen::quadratic((a + a.transpose()) / 2);
}

// two random terms Re(c z_i conj z_j) |z|^2
HamiltonianField random_quartic(Eigen::Index D, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(D) - 1);
    std::vector<MonomialTerm> terms;
    for (int k = 0; k < 2; ++k) {
        MonomialTerm t;
        t.coeff = {0.6 * g(rng), 0.6 * g(rng)};
        t.alpha.assign(static_cast<size_t>(D), 0);
        t.beta.assign(static_cast<size_t>(D), 0);
        t.alpha[static_cast<size_t>(pick(rng))] += 1;
        t.beta[static_cast<size_t>(pick(rng))] += 1;
        t.norm_power = 1;
        terms.push_back(t);
    }
    return HamiltonianField(D, terms);
}

StepTuple random_tuple(Eigen::Index D, int n, std::mt19937_64& rng) {
    // flow time short enough that every step passes the smallness certificate on the radius-4 ball
    if (std::bernoulli_distribution(0.5)(rng)) return tuple_from_flow(random_quartic(D, rng), n, 0.02);
    std::vector<ElementaryGen> steps;
    for (int k = 0; k < n; ++k) steps.push_back(random_quadratic(D, 0.3, rng));
    return StepTuple(D, steps);
}

Mat random_unitary(Eigen::Index D, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CMat a(D, D);
    for (auto& x : a.reshaped()) x = {g(rng), g(rng)};
    const CMat q = Eigen::HouseholderQR<CMat>(a).householderQ();
    return realify(q);
}

double frac(double x) { return x - std::floor(x); }

double cyclic_gap(double a, double b) {
    const double d = std::abs(frac(a) - frac(b));
    return std::min(d, 1.0 - d);
}

// ---------------------------------------------------------------------------

Outcome q_identity() {
    double worst = 0.0;
    for (double t : {0.4, -0.4, 0.25, -0.25, 0.1}) {
        const Mat m = realify(CMat(std::polar(1.0, -2.0 * std::numbers::pi * t) * CMat::Identity(3, 3)));
        const QuadForm q = cayley_genfn(SymplecticMatrix(m));
        // f(w) = <K w, w>, Hessian 2K, K = -tan(πt) I
        const Mat expected = -2.0 * std::tan(std::numbers::pi * t) * Mat::Identity(6, 6);
        worst = std::max(worst, (q.matrix() - expected).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-12, "max coefficient error " + fmt(worst)};
}

Outcome gradient_law() {
    std::mt19937_64 rng(101);
    double law = 0.0, fd_rel = 0.0;
    for (int inst = 0; inst < 200; ++inst) {
        const Eigen::Index D = 1 + (inst % 2) + 1; // d in {1, 2}
        const int n = (inst / 2) % 2 == 0 ? 3 : 5;
        const StepTuple tup = random_tuple(D, n, rng);
        const Vec v = gaussian(2 * D * n, 0.4, rng);
        const BrokenCoordinates bc = broken_coordinates(tup, v);
        const Vec g = broken_gradient(tup, v);
        for (Eigen::Index k = 0; k < n; ++k) {
            const Vec jump = times_i(Vec(slot(bc.z, k, D) - slot(bc.sigma_z, (k + n - 1) % n, D)));
            law = std::max(law, (slot(g, k, D) - jump).norm());
        }
        const double h = 1e-5;
        Vec fd(v.size());
        for (Eigen::Index c = 0; c < v.size(); ++c) {
            Vec e = Vec::Zero(v.size());
            e(c) = h;
            fd(c) = (broken_value(tup, Vec(v + e)) - broken_value(tup, Vec(v - e))) / (2 * h);
        }
        fd_rel = std::max(fd_rel, (fd - g).norm() / std::max(1.0, g.norm()));
    }
    return {law < 1e-10 && fd_rel < 1e-5, "jump law " + fmt(law) + ", finite differences " + fmt(fd_rel)};
}

Outcome decomposition() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> len(1, 4);
    double worst = 0.0;
    for (int inst = 0; inst < 1000; ++inst) {
        const Eigen::Index D = 1 + inst % 3;
        const StepTuple sigma = random_tuple(D, len(rng), rng);
        const StepTuple delta = random_tuple(D, len(rng), rng);
        const Vec v = gaussian(2 * D * (sigma.size() + delta.size()), 0.5, rng);
        const auto [lhs, rhs] = decompose_check(sigma, delta, v);
        worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
    return {worst < 1e-11, "max |lhs - rhs|/(1+|lhs|) " + fmt(worst)};
}

Outcome index_gap() {
    bool ok = true;
    std::string detail;
    for (int d = 1; d <= 3; ++d)
        for (int n2 : {5, 7}) {
            const Eigen::Index D = d + 1;
            const Vec origin = Vec::Zero(2 * D * n2);
            const int i1 = inertia(broken_hessian_blocks(rotation_tuple(1.0, n2, D), origin)).index;
            const int i0 = inertia(broken_hessian_blocks(rotation_tuple(0.0, n2, D), origin)).index;
            ok = ok && i1 - i0 == 2 * (d + 1);
            detail += std::to_string(i1 - i0) + " ";
        }
    return {ok, "gaps " + detail};
}

Outcome calibration() {
    const int full = maslov_index(SymplecticPath::rotation(1, 1.0));
    const int g1 = maslov_index(SymplecticPath::rotation(2, -1.0));
    const int g2 = maslov_index(SymplecticPath::rotation(3, -1.0));
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    // endpoint angles kept away from integers so every end is nondegenerate
    auto angle = [&] {
        double x;
        do x = u(rng);
        while (cyclic_gap(x, 0.0) < 0.05);
        return x;
    };
    int bad = 0;
    for (int pair = 0; pair < 50; ++pair) {
        const Eigen::Index D = 1 + pair % 3;
        std::vector<double> r1(static_cast<size_t>(D)), s1(static_cast<size_t>(D)), wob(static_cast<size_t>(D));
        for (size_t j = 0; j < r1.size(); ++j) {
            r1[j] = angle();
            s1[j] = angle();
            wob[j] = 0.3 * u(rng);
        }
        const auto R = SymplecticPath::unitary_diagonal(D, [=](double t) {
            std::vector<double> a(r1.size());
            for (size_t j = 0; j < a.size(); ++j) a[j] = r1[j] * t + wob[j] * std::sin(std::numbers::pi * t);
            return a;
        });
        const auto S = SymplecticPath::unitary_diagonal(D, [=](double t) {
            std::vector<double> a(r1.size());
            for (size_t j = 0; j < a.size(); ++j) a[j] = r1[j] + (s1[j] - r1[j]) * t;
            return a;
        });
        const PropertyReport rep =
            path_properties_suite(R, S, random_unitary(D, rng), [](double t) { return t * t * (3.0 - 2.0 * t); });
        if (!rep.all_ok()) ++bad;
    }
    const bool ok = full == -2 && g1 == 4 && g2 == 6 && bad == 0;
    return {ok, "full turn " + std::to_string(full) + ", g on C^2 " + std::to_string(g1) + ", g on C^3 " +
                    std::to_string(g2) + ", property failures " + std::to_string(bad) + "/50"};
}

Outcome bott() {
    std::mt19937_64 rng(606);
    std::normal_distribution<double> g;
    const Mat J = complex_structure(1);
    int violations = 0;
    int paths = 0;
    for (int k = 0; k < 25; ++k) {
        Mat S(2, 2);
        if (k < 20) {
            // positive definite times a signed scale: elliptic
            Mat a(2, 2);
            a << g(rng), g(rng), g(rng), g(rng);
            S = a * a.transpose() + 0.2 * Mat::Identity(2, 2);
            S *= (k % 2 == 0 ? 1.0 : -1.0) * (0.5 + 3.0 * std::abs(g(rng))) / S.trace() * 2.0 * std::numbers::pi;
        } else {
            const double th = g(rng);
            Mat rot(2, 2);
            rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
            Mat diag = Mat::Zero(2, 2);
            diag.diagonal() << 0.3 + std::abs(g(rng)), -(0.3 + std::abs(g(rng)));
            S = rot * diag * rot.transpose();
        }
        const IndexReport rep = bott_report(SymplecticPath::exponential(J * S), 20, 4096);
        violations += rep.violations;
        ++paths;
    }
    return {violations == 0, std::to_string(paths) + " paths, k <= 20, violations " + std::to_string(violations)};
}

Outcome pseudo_rotation_spectrum() {
    const std::vector<std::vector<double>> cases{{0.1317, 0.2841}, {0.1317, 0.2841, 0.6173}};
    bool ok = true;
    double worst = 0.0, worst_iter = 0.0;
    for (const auto& a : cases) {
        const ConicalFamily fam = make_family(pseudo_rotation_fixture(a));
        const CriticalSearch cs = critical_points(fam);
        ok = ok && cs.records.size() == a.size();
        for (const auto& r : cs.records) {
            ok = ok && r.nullity == 0;
            double best = 1.0;
            for (double x : a) best = std::min(best, cyclic_gap(r.action, x));
            worst = std::max(worst, best);
        }
        for (int m = 2; m <= 5; ++m) {
            const auto spec = action_spectrum(iterate_family(fam, m));
            ok = ok && spec.size() == a.size();
            for (double x : a) {
                double best = 1.0;
                for (const auto& [s, mult] : spec) best = std::min(best, cyclic_gap(s, m * x));
                worst_iter = std::max(worst_iter, best);
            }
        }
    }
    ok = ok && worst < 1e-8 && worst_iter < 1e-7;
    return {ok, "action error " + fmt(worst) + ", iterates m <= 5 " + fmt(worst_iter)};
}

Outcome kernel_match() {
    struct Case {
        Fixture f;
        std::function<int(const CriticalRecord&)> expected;
    };
    std::vector<Case> cases;
    cases.push_back({hyperbolic_fixture(0.1), [](const CriticalRecord&) { return 0; }});
    for (int d : {1, 2}) {
        Fixture z = hamiltonian_fixture("identity", HamiltonianField::zero(d + 1), 4);
        cases.push_back({z, [d](const CriticalRecord&) { return 2 * d; }});
    }
    // e1, e2 share a rotation number: the fixed set through them is a CP^1
    cases.push_back({pseudo_rotation_fixture({0.2, 0.2, 0.55}),
                     [](const CriticalRecord& r) { return cyclic_gap(r.action, 0.2) < 1e-6 ? 2 : 0; }});
    int records = 0, bad = 0;
    for (const auto& c : cases) {
        const ConicalFamily fam = make_family(c.f);
        SeedOptions so;
        so.random = 8;
        for (const auto& r : critical_points(fam, so).records) {
            ++records;
            const auto [hess, mono] = kernel_correspondence(fam, r);
            if (hess != mono || mono != c.expected(r)) ++bad;
        }
    }
    return {bad == 0 && records > 0, std::to_string(records) + " records, mismatches " + std::to_string(bad)};
}

Outcome recap() {
    int records = 0, bad = 0;
    for (const Fixture& f : {pseudo_rotation_fixture({0.1317, 0.2841}),
                             pseudo_rotation_fixture({0.1317, 0.2841, 0.6173}), hyperbolic_fixture(0.1)}) {
        const ConicalFamily fam = make_family(f);
        for (const auto& r : critical_points(fam).records) {
            if (r.nullity != 0) continue;
            ++records;
            const auto [i0, i1] = recap_shift(fam, r);
            if (i1 - i0 != 2 * (f.d + 1)) ++bad;
        }
    }
    return {bad == 0 && records > 0, std::to_string(records) + " records, wrong shifts " + std::to_string(bad)};
}

Outcome iterated_identity() {
    int rows = 0, bad = 0;
    double worst = 0.0;
    for (const Fixture& f :
         {pseudo_rotation_fixture({0.1317, 0.2841}), pseudo_rotation_fixture({0.0, 0.1317, 0.2841})}) {
        for (const auto& k : f.known) {
            for (const auto& row : iterated_index_identity(f, k.axis, k.action, 8, 40)) {
                ++rows;
                if (!row.agree()) ++bad;
                worst = std::max(worst, std::abs(row.lhs - row.rhs) / row.error_bar);
            }
        }
    }
    return {bad == 0 && rows > 0,
            std::to_string(rows) + " rows, disagreements " + std::to_string(bad) + ", worst gap/bar " + fmt(worst)};
}

Outcome crossing() {
    const Fixture f = hyperbolic_fixture(0.1);
    const auto& x = f.known.front();
    CrossingOptions opt;
    opt.r = 0.2;
    opt.m_list = {1, 2, 3, 4};
    opt.seeds_per_m = 64;
    opt.interior_seeds_per_m = 64;
    const CrossingTable table = crossing_experiment(f, x.axis, x.action, opt);
    int crossings = 0, nonpositive = 0;
    for (const auto& r : table.rows)
        if (r.crossed) {
            ++crossings;
            if (!(r.delta_action > 0.0)) ++nonpositive;
        }
    double lowest = std::numeric_limits<double>::infinity();
    bool every_m = true;
    std::string per_m;
    for (int m : opt.m_list) {
        const double c = table.c_min.at(m);
        every_m = every_m && std::isfinite(c);
        lowest = std::min(lowest, std::isfinite(c) ? c : 0.0);
        per_m += " " + fmt(c);
    }
    const double c1 = table.c_min.at(1);
    const bool ok = crossings > 0 && nonpositive == 0 && every_m && lowest >= 0.1 * c1;
    return {ok, std::to_string(crossings) + " crossings, nonpositive " + std::to_string(nonpositive) +
                    ", c_min(m=1..4)" + per_m + ", floor " + fmt(table.distance_floor)};
}

Outcome pseudo_gradient_checks() {
    std::vector<LevelFunction> levels;
    for (const Fixture& f : {hyperbolic_fixture(0.1), pseudo_rotation_fixture({0.1317, 0.2841})}) {
        const ConicalFamily fam = make_family(f, 5, 0.45);
        for (int m : {1, 2, 3}) levels.push_back(make_level(iterate_family(fam, m)));
    }
    std::mt19937_64 rng(1212);
    int points = 0;
    double tangency = 0.0, rate = 0.0;
    while (points < 1000) {
        const LevelFunction& level = levels[static_cast<size_t>(points) % levels.size()];
        const auto pt = sample_manifold(level, rng);
        if (!pt) continue;
        const GradientIdentities g = pseudo_gradient_identities(level, pt->first, pt->second);
        tangency = std::max(tangency, g.tangency);
        rate = std::max(rate, g.action_rate);
        ++points;
    }
    return {tangency < 1e-10 && rate < 1e-10,
            std::to_string(points) + " points, |df(X)| " + fmt(tangency) + ", |dA(X) + |grad|^2| " + fmt(rate)};
}

} // namespace

int main() {
    criterion(1, "q_t identity", 1, q_identity);
    criterion(2, "broken gradient law", 30, gradient_law);
    criterion(3, "decomposition", 30, decomposition);
    criterion(4, "index gap 2(d+1)", 10, index_gap);
    criterion(5, "Maslov calibration and path identities", 60, calibration);
    criterion(6, "Bott inequalities", 60, bott);
    criterion(7, "pseudo-rotation spectrum", 120, pseudo_rotation_spectrum);
    criterion(8, "Hessian kernel vs monodromy kernel", 60, kernel_match);
    criterion(9, "recap shift", 60, recap);
    criterion(10, "iterated index identity", 120, iterated_identity);
    criterion(11, "crossing energy", 600, crossing);
    criterion(12, "pseudo-gradient identities", 60, pseudo_gradient_checks);
    std::printf("%d failed\n", failures);
    return failures;
}
