#include <doctest.h>

#include <sstream>

#include "gfdyn/io.hpp"

using namespace gfd;

TEST_SUITE("io") {

TEST_CASE("fixtures load from JSON") {
    const Fixture p = fixture_from_json(Json::parse(R"({"name": "pseudo_rotation", "a": [0.1, 0.2, 0.3]})"));
    CHECK(p.d == 2);
    const Fixture h = fixture_from_json(Json::parse(R"({"name": "hyperbolic", "c": 0.1})"));
    CHECK(h.d == 1);
    const Fixture z = fixture_from_json(Json::parse(R"({"name": "zero", "d": 2})"));
    CHECK(z.hamiltonian.identically_zero());
    const Fixture m = fixture_from_json(Json::parse(R"({
        "name": "hamiltonian", "dim": 2, "n1": 6,
        "terms": [{"coeff": [0.5, 0.0], "alpha": [1, 0], "beta": [1, 0]}]})"));
    CHECK(m.hamiltonian.conical());
}

TEST_CASE("bad fixtures are config errors") {
    CHECK_THROWS_AS(fixture_from_json(Json::parse(R"({"name": "nope"})")), ConfigError);
    CHECK_THROWS_AS(fixture_from_json(Json::parse(R"({"a": [0.1]})")), ConfigError);
    CHECK_THROWS_AS(fixture_from_json(Json::parse(R"({"name": "pseudo_rotation", "a": [0.1], "n1": 5})")),
                    ConfigError);
    CHECK_THROWS_AS(fixture_from_json(Json::parse(R"({"name": "pseudo_rotation", "a": "x"})")), ConfigError);
    CHECK_THROWS_AS(fixture_from_json(Json::parse(R"({"name": "zero", "d": 0})")), ConfigError);
    CHECK_THROWS_AS(validate_parity(6, 4), ConfigError);
    CHECK_THROWS_AS(validate_parity(6, 3), ConfigError);
    CHECK_NOTHROW(validate_parity(6, 7));
}

TEST_CASE("number formatting round-trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678}) CHECK(std::stod(format_double(x)) == x);
    CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("record CSV layout") {
    CriticalRecord r;
    r.t = 0.25;
    r.action = 0.25;
    r.index = 4;
    r.z = Vec::Zero(4);
    r.z(0) = 1.0;
    std::ostringstream os;
    write_records_csv(os, {r});
    CHECK(os.str() == "t,action_mod1,index,nullity,residual,z0_re,z0_im,z1_re,z1_im\n0.25,0.25,4,0,0,1,0,0,0\n");
    const Json j = to_json(r);
    CHECK(j.at("z").size() == 2);
    CHECK(j.at("index") == 4);
}

TEST_CASE("crossing CSV and summary") {
    CrossingTable t;
    CrossingRow row;
    row.m = 1;
    row.crossed = true;
    row.delta_action = 0.5;
    row.kind = "interior";
    row.termination = "exited";
    t.rows.push_back(row);
    t.c_min[1] = 0.5;
    t.c_min[2] = std::nan("");
    std::ostringstream os;
    write_crossing_csv(os, t);
    CHECK(os.str() == "m,seed,direction,kind,crossed,delta_action,steps,termination\n1,0,1,interior,true,0.5,0,exited\n");
    const Json s = crossing_summary(t);
    CHECK(s.at("crossings") == 1);
    CHECK(s.at("c_min").at("2").is_null());
}

} // TEST_SUITE
