#pragma once

// JSON and CSV for fixtures, index reports, critical records and crossing tables.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfdyn/crossing.hpp"
#include "gfdyn/maslov.hpp"

namespace gfd {

using Json = nlohmann::json;

// {"name": "pseudo_rotation", "a": [...], "n1": 6}
// {"name": "hyperbolic", "c": 0.1, "epsilon": 0.0, "n1": 8}
// {"name": "zero", "d": 1, "n1": 4}
// {"name": "hamiltonian", "dim": 2, "n1": 8, "terms": [{"coeff": [re, im], "alpha": [..], "beta": [..],
//   "norm_power": 0, "cos_amp": 0, "sin_amp": 0, "frequency": 1}], "quadratic": [[...]]}
// throws ConfigError
Fixture fixture_from_json(const Json& j);

// n1 even, n2 odd and >= 5; throws ConfigError
void validate_parity(int n1, int n2);

Json to_json(const CriticalRecord& r);
Json to_json(const std::vector<CriticalRecord>& records);
Json to_json(const IndexReport& rep);
Json to_json(const IterationRow& row);
Json to_json(const AugmentedAction& a);
Json to_json(const MonotonicityReport& rep);
Json crossing_summary(const CrossingTable& table);

// t, action_mod1, index, nullity, residual, then Re/Im of each coordinate of Z
void write_records_csv(std::ostream& os, const std::vector<CriticalRecord>& records);
// m, seed, direction, kind, crossed, delta_action, steps, termination
void write_crossing_csv(std::ostream& os, const CrossingTable& table);

// full-precision text for a double, locale independent
std::string format_double(double x);

} // namespace gfd
