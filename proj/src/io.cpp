#include "gfdyn/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace gfd {

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

template <class T>
T require(const Json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("config: missing '") + key + "'");
    return get_or<T>(j, key, T{});
}

Json nan_safe(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

MonomialTerm term_from_json(const Json& j) {
    MonomialTerm t;
    if (j.contains("coeff")) {
        const Json& c = j.at("coeff");
        if (c.is_array() && c.size() == 2)
            t.coeff = {c[0].get<double>(), c[1].get<double>()};
        else if (c.is_number())
            t.coeff = {c.get<double>(), 0.0};
        else
            throw ConfigError("config: term coeff must be a number or [re, im]");
    }
    t.alpha = require<std::vector<int>>(j, "alpha");
    t.beta = require<std::vector<int>>(j, "beta");
    t.norm_power = get_or(j, "norm_power", 0);
    t.cos_amp = get_or(j, "cos_amp", 0.0);
    t.sin_amp = get_or(j, "sin_amp", 0.0);
    t.frequency = get_or(j, "frequency", 1);
    return t;
}

} // namespace

std::string format_double(double x) {
    if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void validate_parity(int n1, int n2) {
    if (n1 < 2 || n1 % 2 != 0) throw ConfigError("config: n1 must be even and positive");
    if (n2 < 5 || n2 % 2 == 0) throw ConfigError("config: n2 must be odd and at least 5");
}

Fixture fixture_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config: fixture must be an object");
    const std::string name = require<std::string>(j, "name");
    try {
        if (name == "pseudo_rotation") {
            const int n1 = get_or(j, "n1", 6);
            validate_parity(n1, 5);
            return pseudo_rotation_fixture(require<std::vector<double>>(j, "a"), n1);
        }
        if (name == "hyperbolic") {
            const int n1 = get_or(j, "n1", 8);
            validate_parity(n1, 5);
            return hyperbolic_fixture(get_or(j, "c", 0.1), get_or(j, "epsilon", 0.0), n1);
        }
        if (name == "zero") {
            const int n1 = get_or(j, "n1", 4);
            validate_parity(n1, 5);
            const int d = require<int>(j, "d");
            if (d < 1) throw ConfigError("config: d must be positive");
            return hamiltonian_fixture("zero", HamiltonianField::zero(d + 1), n1);
        }
        if (name == "hamiltonian") {
            const int n1 = get_or(j, "n1", 8);
            validate_parity(n1, 5);
            const int dim = require<int>(j, "dim");
            std::vector<MonomialTerm> terms;
            for (const auto& t : get_or(j, "terms", Json::array())) terms.push_back(term_from_json(t));
            Mat quad;
            if (j.contains("quadratic")) {
                const auto rows = j.at("quadratic").get<std::vector<std::vector<double>>>();
                quad.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
                for (size_t r = 0; r < rows.size(); ++r) {
                    if (rows[r].size() != rows.size()) throw ConfigError("config: quadratic must be square");
                    for (size_t c = 0; c < rows.size(); ++c)
                        quad(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
                }
            }
            return hamiltonian_fixture(get_or<std::string>(j, "label", "hamiltonian"),
                                       HamiltonianField(dim, terms, quad), n1);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    throw ConfigError("config: unknown fixture '" + name + "'");
}

Json to_json(const CriticalRecord& r) {
    Json z = Json::array();
    const CVec zc = complexify(r.z);
    for (Eigen::Index k = 0; k < zc.size(); ++k) z.push_back({zc(k).real(), zc(k).imag()});
    return {{"t", r.t},
            {"action", r.action},
            {"index", r.index},
            {"nullity", r.nullity},
            {"hessian_nullity", r.hessian_nullity},
            {"chart_index", r.chart_index},
            {"residual", r.residual},
            {"gradient_residual", r.gradient_residual},
            {"z", z}};
}

Json to_json(const std::vector<CriticalRecord>& records) {
    Json a = Json::array();
    for (const auto& r : records) a.push_back(to_json(r));
    return a;
}

Json to_json(const IndexReport& rep) {
    Json it = Json::array();
    for (size_t k = 0; k < rep.iterates.size(); ++k) {
        const auto& e = rep.iterates[k];
        it.push_back({{"k", e.k},
                      {"mas", e.mas},
                      {"nullity", e.nullity},
                      {"lower_margin", rep.lower_margin[k]},
                      {"upper_margin", rep.upper_margin[k]}});
    }
    return {{"d", rep.d},
            {"mas", rep.mas},
            {"mean", rep.mean},
            {"error_bar", rep.error_bar},
            {"horizon", rep.horizon},
            {"violations", rep.violations},
            {"unshifted_violations", rep.unshifted_violations},
            {"iterates", it}};
}

Json to_json(const IterationRow& row) {
    return {{"m", row.m},     {"action_m", row.action_m}, {"i_m", row.i_m},           {"mmas_m", row.mmas_m},
            {"lhs", row.lhs}, {"rhs", row.rhs},           {"error_bar", row.error_bar}, {"agree", row.agree()}};
}

Json to_json(const AugmentedAction& a) {
    return {{"value", a.value}, {"expected", a.expected}, {"tolerance", a.tolerance}, {"homogeneous", a.homogeneous()}};
}

Json to_json(const MonotonicityReport& rep) {
    return {{"samples", rep.samples},
            {"max_dt", rep.max_dt},
            {"level_samples", rep.level_samples},
            {"level_max_dt", rep.level_max_dt},
            {"at_zero", rep.at_zero},
            {"ok", rep.ok()}};
}

Json crossing_summary(const CrossingTable& table) {
    Json cmin = Json::object();
    for (const auto& [m, c] : table.c_min) cmin[std::to_string(m)] = nan_safe(c);
    Json p = Json::object();
    for (const auto& [m, v] : table.p) p[std::to_string(m)] = v;
    int crossed = 0, nonpositive = 0;
    double worst_increase = 0.0, worst_drift = 0.0;
    for (const auto& r : table.rows) {
        if (r.crossed) {
            ++crossed;
            if (!(r.delta_action > 0.0)) ++nonpositive;
        }
        worst_increase = std::max(worst_increase, r.max_action_increase);
        worst_drift = std::max(worst_drift, r.max_drift);
    }
    return {{"c_min", cmin},
            {"c_inf", nan_safe(table.c_inf)},
            {"p", p},
            {"lines", table.rows.size()},
            {"crossings", crossed},
            {"nonpositive_crossings", nonpositive},
            {"no_crossing_m", table.no_crossing},
            {"discarded_seeds", table.discarded.size()},
            {"isolation_radius", nan_safe(table.isolation)},
            {"distance_floor", nan_safe(table.distance_floor)},
            {"max_action_increase", worst_increase},
            {"max_drift", worst_drift}};
}

void write_records_csv(std::ostream& os, const std::vector<CriticalRecord>& records) {
    const Eigen::Index n = records.empty() ? 0 : records.front().z.size() / 2;
    os << "t,action_mod1,index,nullity,residual";
    for (Eigen::Index k = 0; k < n; ++k) os << ",z" << k << "_re,z" << k << "_im";
    os << "\n";
    for (const auto& r : records) {
        os << format_double(r.t) << ',' << format_double(r.action) << ',' << r.index << ',' << r.nullity << ','
           << format_double(r.residual);
        for (Eigen::Index k = 0; k < 2 * n; ++k) os << ',' << format_double(r.z(k));
        os << "\n";
    }
}

void write_crossing_csv(std::ostream& os, const CrossingTable& table) {
    os << "m,seed,direction,kind,crossed,delta_action,steps,termination\n";
    for (const auto& r : table.rows)
        os << r.m << ',' << r.seed << ',' << r.direction << ',' << r.kind << ',' << (r.crossed ? "true" : "false")
           << ',' << format_double(r.delta_action) << ',' << r.steps << ',' << r.termination << "\n";
}

} // namespace gfd
