// Batch front end: fixed-points, maslov, crossing, verify.
// Exit codes: 0 success, 1 verification failure, 2 usage or config error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "gfdyn/io.hpp"
#include "gfdyn/parallel.hpp"

using namespace gfd;
namespace fs = std::filesystem;

namespace {

struct Context {
    Json config;
    fs::path out = ".";
    std::uint64_t seed = 1;
    int workers = 1;
    std::map<std::string, double> tol{{"identity", 1e-10},  {"decomposition", 1e-11}, {"fixed_point", 1e-9},
                                      {"flow_atol", 1e-10}, {"flow_rtol", 1e-8},      {"stall", 1e-10}};
    std::string fault;
};

Json tolerances(const Context& ctx) {
    Json j = Json::object();
    for (const auto& [k, v] : ctx.tol) j[k] = v;
    return j;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << text;
}

void write_json(const fs::path& p, const Json& j) { write_text(p, j.dump(2) + "\n"); }

template <class T>
T cfg(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

const Json& section(const Json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_object()) throw ConfigError(std::string("config: missing object '") + key + "'");
    return j.at(key);
}

// ---------------------------------------------------------------- fixed-points

int cmd_fixed_points(const Context& ctx) {
    const Fixture fx = fixture_from_json(section(ctx.config, "fixture"));
    const int n2 = cfg(ctx.config, "n2", 5);
    validate_parity(static_cast<int>(fx.tuple.size()), n2);
    ConicalFamily fam = make_family(fx, n2, cfg(ctx.config, "epsilon", 0.05));
    IterateCap cap;
    cap.max_m = cfg(ctx.config, "max_m", cap.max_m);
    fam = iterate_family(fam, cfg(ctx.config, "m", 1), cap);
    SeedOptions so;
    so.random = cfg(ctx.config, "seeds", so.random);
    so.seed = ctx.seed;
    so.workers = ctx.workers;
    so.phase = cfg(ctx.config, "phase", 0.0);
    const CriticalSearch cs = critical_points(fam, so);
    int bad = 0, degenerate = 0;
    for (const auto& r : cs.records) {
        if (r.residual > ctx.tol.at("fixed_point")) ++bad;
        if (r.nullity > 0) ++degenerate;
    }
    if (degenerate > 0)
        std::cerr << "warning: " << degenerate << " degenerate record(s); the fixed set is not isolated\n";
    std::ostringstream csv;
    write_records_csv(csv, cs.records);
    write_text(ctx.out / "records.csv", csv.str());
    write_json(ctx.out / "records.json", to_json(cs.records));
    Json spec = Json::array();
    for (const auto& [a, mult] : action_spectrum(cs.records)) spec.push_back({a, mult});
    write_json(ctx.out / "summary.json", {{"command", "fixed-points"},
                                          {"fixture", fx.name},
                                          {"records", cs.records.size()},
                                          {"seeds", cs.attempted},
                                          {"failures", cs.failures},
                                          {"degenerate", degenerate},
                                          {"spectrum", spec},
                                          {"tolerances", tolerances(ctx)}});
    std::cout << cs.records.size() << " critical orbit(s) written to " << (ctx.out / "records.csv").string() << "\n";
    return bad > 0 ? 1 : 0;
}

// ---------------------------------------------------------------- maslov

SymplecticPath path_from_json(const Json& j) {
    const std::string kind = cfg<std::string>(j, "kind", "rotation");
    if (kind == "rotation") {
        const int d = cfg(j, "d", 1);
        if (d < 1) throw ConfigError("config: path.d must be positive");
        return SymplecticPath::rotation(d, cfg(j, "turns", 1.0));
    }
    if (kind == "exponential") {
        const auto rows = cfg<std::vector<std::vector<double>>>(j, "generator", {});
        const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
        if (n == 0 || n % 2) throw ConfigError("config: generator must be a non-empty even square matrix");
        Mat X(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
            if (static_cast<Eigen::Index>(rows[static_cast<size_t>(r)].size()) != n)
                throw ConfigError("config: generator must be square");
            for (Eigen::Index c = 0; c < n; ++c) X(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
        }
        const Mat J = complex_structure(n / 2);
        if (((J * X) - (J * X).transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw ConfigError("config: generator is not Hamiltonian (J X must be symmetric)");
        return SymplecticPath::exponential(X);
    }
    throw ConfigError("config: unknown path kind '" + kind + "'");
}

int cmd_maslov(const Context& ctx) {
    const Json& pj = section(ctx.config, "path");
    const std::string kind = cfg<std::string>(pj, "kind", "rotation");
    Json summary = {{"command", "maslov"}, {"tolerances", tolerances(ctx)}};
    bool failed = false;
    if (kind == "fixed_point") {
        const Fixture fx = fixture_from_json(section(pj, "fixture"));
        const int axis = cfg(pj, "axis", 0);
        if (axis < 0 || axis >= static_cast<int>(fx.known.size())) throw ConfigError("config: axis out of range");
        const KnownFixedPoint& kp = fx.known[static_cast<size_t>(axis)];
        const int mmax = cfg(pj, "mmax", 8), K = cfg(pj, "K", 40);
        if (mmax < 1 || K < 1) throw ConfigError("config: mmax and K must be positive");
        auto rows = iterated_index_identity(fx, kp.axis, kp.action, mmax, K, cfg(ctx.config, "n2", 5));
        if (ctx.fault == "maslov_offset") rows.front().lhs += 1.0;
        Json table = Json::array(), aug = Json::array();
        for (const auto& r : rows) {
            table.push_back(to_json(r));
            failed = failed || !r.agree();
        }
        for (int m = 1; m <= mmax; ++m) {
            const AugmentedAction a = augmented_action(fx, kp.axis, kp.action, m, K);
            aug.push_back(to_json(a));
            failed = failed || !a.homogeneous();
        }
        summary["iteration"] = table;
        summary["augmented_action"] = aug;
        const SymplecticPath base = fixed_point_path(fx, kp.axis, kp.action, 1);
        summary["report"] = to_json(bott_report(base, cfg(ctx.config, "kmax", 10), cfg(ctx.config, "mean_horizon", 4096)));
    } else {
        const SymplecticPath path = path_from_json(pj);
        IndexReport rep = bott_report(path, cfg(ctx.config, "kmax", 10), cfg(ctx.config, "mean_horizon", 4096));
        if (ctx.fault == "maslov_offset") {
            auto its = rep.iterates;
            for (auto& e : its) e.mas += 2 * rep.d + 1;
            rep = bott_evaluate(rep.d, rep.mean, rep.error_bar, rep.horizon, its);
        }
        failed = rep.violations > 0;
        summary["report"] = to_json(rep);
        std::cout << "mas = " << rep.mas << ", mean index = " << rep.mean << " ± " << rep.error_bar
                  << ", Bott violations = " << rep.violations << "\n";
    }
    summary["passed"] = !failed;
    write_json(ctx.out / "report.json", summary);
    if (failed) std::cerr << "verification failed: see " << (ctx.out / "report.json").string() << "\n";
    return failed ? 1 : 0;
}

// ---------------------------------------------------------------- crossing

int cmd_crossing(const Context& ctx) {
    const Fixture fx = fixture_from_json(section(ctx.config, "fixture"));
    CrossingOptions opt;
    opt.r = cfg(ctx.config, "r", opt.r);
    opt.m_list = cfg(ctx.config, "m_list", opt.m_list);
    opt.seeds_per_m = cfg(ctx.config, "seeds_per_m", opt.seeds_per_m);
    opt.interior_seeds_per_m = cfg(ctx.config, "interior_seeds_per_m", opt.interior_seeds_per_m);
    opt.n2 = cfg(ctx.config, "n2", opt.n2);
    opt.epsilon = cfg(ctx.config, "epsilon", opt.epsilon);
    opt.cap.max_m = cfg(ctx.config, "max_m", opt.cap.max_m);
    opt.cap.max_aux = cfg<Eigen::Index>(ctx.config, "max_aux", opt.cap.max_aux);
    opt.seed = ctx.seed;
    opt.workers = ctx.workers;
    opt.flow.atol = ctx.tol.at("flow_atol");
    opt.flow.rtol = ctx.tol.at("flow_rtol");
    opt.flow.stall = ctx.tol.at("stall");
    validate_parity(static_cast<int>(fx.tuple.size()), opt.n2);
    if (opt.m_list.empty()) throw ConfigError("config: m_list is empty");
    if (!(opt.r > 0.0)) throw ConfigError("config: r must be positive");
    const Eigen::Index D = fx.d + 1;
    for (int m : opt.m_list) {
        if (m < 1) throw ConfigError("config: m must be positive");
        if (m > opt.cap.max_m || D * (fx.tuple.size() * m + opt.n2) > opt.cap.max_aux)
            throw ResourceCap("m = " + std::to_string(m) + " exceeds the resource cap");
    }
    const int axis = cfg(ctx.config, "axis", 0);
    if (axis < 0 || axis >= static_cast<int>(fx.known.size())) throw ConfigError("config: axis out of range");
    const KnownFixedPoint& kp = fx.known[static_cast<size_t>(axis)];
    const CrossingTable table = crossing_experiment(fx, kp.axis, kp.action, opt);
    if (opt.r > table.isolation)
        std::cerr << "warning: r = " << opt.r << " exceeds the isolation estimate " << table.isolation
                  << "; running anyway\n";
    for (int m : table.no_crossing) std::cerr << "note: no crossing recorded for m = " << m << "\n";
    std::ostringstream csv;
    write_crossing_csv(csv, table);
    write_text(ctx.out / "crossing.csv", csv.str());
    Json summary = crossing_summary(table);
    summary["command"] = "crossing";
    summary["fixture"] = fx.name;
    summary["r"] = opt.r;
    summary["epsilon"] = opt.epsilon;
    summary["tolerances"] = tolerances(ctx);
    write_json(ctx.out / "summary.json", summary);
    std::cout << "c_inf estimate: " << format_double(table.c_inf) << "\n";
    const bool failed = summary["nonpositive_crossings"].get<int>() > 0;
    return failed ? 1 : 0;
}

// ---------------------------------------------------------------- verify

struct Check {
    std::string name;
    std::string fixture;
    bool passed = false;
    std::string detail;
};

struct Suite {
    std::vector<Check> checks;
    void add(std::string name, std::string fixture, bool ok, std::string detail) {
        checks.push_back({std::move(name), std::move(fixture), ok, std::move(detail)});
    }
    template <class Fn>
    void run(const std::string& name, const std::string& fixture, Fn&& fn) {
        try {
            std::string detail;
            const bool ok = fn(detail);
            add(name, fixture, ok, detail);
        } catch (const std::exception& e) {
            add(name, fixture, false, e.what());
        }
    }
};

std::string num(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

void verify_fixture_suite(Suite& suite, const Context& ctx, const Fixture& fx, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    const Eigen::Index D = fx.d + 1;
    auto random_vec = [&](Eigen::Index n, double scale) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * gauss(rng);
        return v;
    };
    const double tol_id = ctx.tol.at("identity");

    suite.run("tau graph", fx.name, [&](std::string& detail) {
        double worst = 0.0;
        const double sign = ctx.fault == "tau_sign" ? -1.0 : 1.0;
        for (Eigen::Index k = 0; k < fx.tuple.size(); ++k) {
            const Vec z = random_vec(2 * D, 0.5);
            const StepResult s = step_map(fx.tuple[k], z);
            const auto [mid, slope] = tau(z, s.sigma_z);
            worst = std::max(worst, (mid - s.w).norm());
            worst = std::max(worst, (sign * slope - fx.tuple[k].gradient(s.w)).norm());
        }
        detail = "max residual " + num(worst);
        return worst < tol_id;
    });
    suite.run("known fixed points", fx.name, [&](std::string& detail) {
        verify_fixture(fx, ctx.tol.at("fixed_point"));
        detail = std::to_string(fx.known.size()) + " checked";
        return true;
    });
    suite.run("conical lift", fx.name, [&](std::string& detail) {
        const LiftCertificate c = lift_validate(fx.hamiltonian);
        detail = "homogeneity " + num(c.homogeneity_residual) + ", phase " + num(c.phase_residual);
        return c.pass();
    });
    suite.run("step smallness", fx.name, [&](std::string& detail) {
        const SmallnessReport r = certify_smallness(fx.tuple);
        detail = std::to_string(r.failures) + " failures in " + std::to_string(r.samples) + " samples";
        return r.ok;
    });
    const ConicalFamily fam = make_family(fx);
    suite.run("gradient law", fx.name, [&](std::string& detail) {
        double worst = 0.0;
        for (int s = 0; s < 10; ++s) {
            const StepTuple tup = fam.tuple(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
            const Vec v = random_vec(2 * D * tup.size(), 0.3);
            const BrokenCoordinates bc = broken_coordinates(tup, v);
            const Vec g = broken_gradient(tup, v);
            const Eigen::Index n = tup.size();
            for (Eigen::Index k = 0; k < n; ++k) {
                const Vec law = times_i(Vec(slot(bc.z, k, D) - slot(bc.sigma_z, (k + n - 1) % n, D)));
                worst = std::max(worst, (slot(g, k, D) - law).norm() / (1.0 + law.norm()));
            }
        }
        detail = "max residual " + num(worst);
        return worst < tol_id;
    });
    suite.run("decomposition", fx.name, [&](std::string& detail) {
        double worst = 0.0;
        const StepTuple delta = rotation_tuple(0.37, 5, D);
        for (int s = 0; s < 10; ++s) {
            const Vec v = random_vec(2 * D * (fx.tuple.size() + delta.size()), 0.3);
            const auto [lhs, rhs] = decompose_check(fx.tuple, delta, v);
            worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
        }
        detail = "max relative residual " + num(worst);
        return worst < ctx.tol.at("decomposition");
    });
    suite.run("critical points", fx.name, [&](std::string& detail) {
        SeedOptions so;
        so.seed = ctx.seed;
        so.workers = ctx.workers;
        const CriticalSearch cs = critical_points(fam, so);
        int mismatched = 0;
        for (const auto& r : cs.records) {
            kernel_correspondence(fam, r);
            if (r.chart_index != r.index) ++mismatched;
        }
        const size_t orbits = cs.records.size();
        detail = std::to_string(orbits) + " orbits, " + std::to_string(mismatched) + " index mismatches";
        return orbits >= static_cast<size_t>(fx.d + 1) && mismatched == 0;
    });
    suite.run("delta monotonicity", fx.name, [&](std::string& detail) {
        const MonotonicityReport r = delta_monotonicity(fam, 500, ctx.seed);
        detail = "max " + num(r.max_dt) + ", on the level set " + num(r.level_max_dt);
        return r.ok();
    });
}

void verify_global_suite(Suite& suite, const Context& ctx) {
    suite.run("q_t identity", "", [&](std::string& detail) {
        double worst = 0.0;
        for (double t : {0.4, -0.4, 0.25, -0.25, 0.1}) {
            const Mat m = realify(CMat(std::polar(1.0, -2.0 * std::numbers::pi * t) * CMat::Identity(2, 2)));
            const QuadForm q = cayley_genfn(SymplecticMatrix(m));
            worst = std::max(worst, (q.matrix() + 2.0 * std::tan(std::numbers::pi * t) * Mat::Identity(4, 4))
                                        .cwiseAbs()
                                        .maxCoeff());
        }
        detail = "max coefficient error " + num(worst);
        return worst < 1e-12;
    });
    suite.run("maslov calibration", "", [&](std::string& detail) {
        const int offset = ctx.fault == "maslov_offset" ? 1 : 0;
        const int full = maslov_index(SymplecticPath::rotation(1, 1.0)) + offset;
        const int g2 = maslov_index(SymplecticPath::rotation(2, -1.0));
        const int g3 = maslov_index(SymplecticPath::rotation(3, -1.0));
        detail = "full turn " + std::to_string(full) + ", g on C^2 " + std::to_string(g2) + ", g on C^3 " +
                 std::to_string(g3);
        return full == -2 && g2 == 4 && g3 == 6;
    });
    suite.run("index gap", "", [&](std::string& detail) {
        bool ok = true;
        for (int d = 1; d <= 3; ++d)
            for (int n2 : {5, 7}) {
                const Eigen::Index D = d + 1;
                const int i1 = inertia(broken_hessian_blocks(rotation_tuple(1.0, n2, D), Vec::Zero(2 * D * n2))).index;
                const int i0 = inertia(broken_hessian_blocks(rotation_tuple(0.0, n2, D), Vec::Zero(2 * D * n2))).index;
                ok = ok && i1 - i0 == 2 * (d + 1);
                detail += "d=" + std::to_string(d) + ",n2=" + std::to_string(n2) + ":" + std::to_string(i1 - i0) + " ";
            }
        return ok;
    });
    suite.run("bott inequalities", "", [&](std::string& detail) {
        const IndexReport rep = bott_report(SymplecticPath::rotation(1, -0.3), 20, 1 << 12);
        detail = std::to_string(rep.violations) + " violations";
        return rep.violations == 0;
    });
}

int cmd_verify(const Context& ctx) {
    if (!ctx.config.contains("corpus") || !ctx.config.at("corpus").is_array() || ctx.config.at("corpus").empty())
        throw ConfigError("config: 'corpus' must be a non-empty array of fixtures");
    std::vector<Fixture> corpus;
    for (const auto& f : ctx.config.at("corpus")) corpus.push_back(fixture_from_json(f));
    Suite suite;
    std::mt19937_64 rng(ctx.seed);
    verify_global_suite(suite, ctx);
    for (const auto& fx : corpus) verify_fixture_suite(suite, ctx, fx, rng);
    Json checks = Json::array();
    int failed = 0;
    for (const auto& c : suite.checks) {
        checks.push_back({{"name", c.name}, {"fixture", c.fixture}, {"passed", c.passed}, {"detail", c.detail}});
        if (!c.passed) {
            ++failed;
            std::cerr << "FAILED: " << c.name << (c.fixture.empty() ? "" : " [" + c.fixture + "]") << ": " << c.detail
                      << "\n";
        }
    }
    write_json(ctx.out / "verify.json", {{"command", "verify"},
                                         {"checks", checks},
                                         {"passed", static_cast<int>(suite.checks.size()) - failed},
                                         {"failed", failed},
                                         {"tolerances", tolerances(ctx)}});
    std::cout << suite.checks.size() - static_cast<size_t>(failed) << "/" << suite.checks.size() << " checks passed\n";
    return failed > 0 ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"generating-function dynamics toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int workers = default_workers();
    std::vector<std::string> overrides;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "RNG seed (overrides the config)");
        sub->add_option("--workers", workers, "worker threads");
        sub->add_option("--tol-override", overrides, "tolerance override key=value");
    };
    CLI::App* fp = app.add_subcommand("fixed-points", "critical points of the conical family and their indices");
    CLI::App* ms = app.add_subcommand("maslov", "Maslov and mean indices, Bott inequalities, iteration identities");
    CLI::App* cr = app.add_subcommand("crossing", "crossing-energy experiment near a fixed direction");
    CLI::App* vf = app.add_subcommand("verify", "invariant suites over a fixture corpus");
    for (auto* s : {fp, ms, cr, vf}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        Context ctx;
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot read config " + config_path);
        try {
            ctx.config = Json::parse(in);
        } catch (const Json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!ctx.config.is_object()) throw ConfigError("config must be a JSON object");
        ctx.seed = seed != 0 ? seed : cfg<std::uint64_t>(ctx.config, "seed", 1);
        ctx.workers = std::max(1, workers);
        ctx.fault = cfg<std::string>(ctx.config, "inject_fault", "");
        if (!ctx.fault.empty() && ctx.fault != "tau_sign" && ctx.fault != "maslov_offset")
            throw ConfigError("config: unknown inject_fault '" + ctx.fault + "'");
        if (ctx.config.contains("tolerances"))
            for (const auto& [k, v] : ctx.config.at("tolerances").items()) {
                if (!ctx.tol.count(k)) throw ConfigError("config: unknown tolerance '" + k + "'");
                ctx.tol[k] = v.get<double>();
            }
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) throw ConfigError("--tol-override expects key=value, got '" + o + "'");
            const std::string key = o.substr(0, eq);
            if (!ctx.tol.count(key)) throw ConfigError("unknown tolerance '" + key + "'");
            try {
                ctx.tol[key] = std::stod(o.substr(eq + 1));
            } catch (const std::exception&) {
                throw ConfigError("bad tolerance value in '" + o + "'");
            }
        }
        ctx.out = out_dir;
        fs::create_directories(ctx.out);

        if (*fp) return cmd_fixed_points(ctx);
        if (*ms) return cmd_maslov(ctx);
        if (*cr) return cmd_crossing(ctx);
        return cmd_verify(ctx);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ResourceCap& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 1;
    }
}
