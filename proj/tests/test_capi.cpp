#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <string>

#include "crystal/crystal.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    crystal_string_free(s);
    return out;
}

crystal_spec* load(const char* source) {
    crystal_spec* s = nullptr;
    REQUIRE(crystal_spec_load(source, &s) == CRYSTAL_OK);
    return s;
}

}  // namespace

TEST_CASE("version and status names") {
    CHECK(std::strlen(crystal_version()) > 0);
    CHECK(std::string(crystal_status_name(CRYSTAL_OK)) == "Ok");
    CHECK(std::string(crystal_status_name(CRYSTAL_SPECTRUM_PROXIMITY)).size() > 0);
}

TEST_CASE("builtin names are listed") {
    char* names = nullptr;
    REQUIRE(crystal_builtin_names(&names) == CRYSTAL_OK);
    auto j = json::parse(take(names));
    CHECK(j.size() >= 15);
}

TEST_CASE("spec handles") {
    crystal_spec* s = load("builtin:fig5_right");
    int d = 0, nu = 0;
    CHECK(crystal_spec_dims(s, &d, &nu) == CRYSTAL_OK);
    CHECK(d == 1);
    CHECK(nu == 3);
    char* text = nullptr;
    REQUIRE(crystal_spec_to_json(s, &text) == CRYSTAL_OK);
    crystal_spec* again = nullptr;
    std::string round = take(text);
    REQUIRE(crystal_spec_parse_json(round.c_str(), &again) == CRYSTAL_OK);
    char* conn = nullptr;
    REQUIRE(crystal_spec_connectivity(again, &conn) == CRYSTAL_OK);
    CHECK(json::parse(take(conn))["connected"] == true);
    crystal_spec_free(again);
    crystal_spec_free(s);
    crystal_spec_free(nullptr);
}

TEST_CASE("errors map to status codes and last_error") {
    crystal_spec* s = nullptr;
    CHECK(crystal_spec_load("builtin:no_such_graph", &s) == CRYSTAL_UNKNOWN_BUILTIN);
    CHECK(s == nullptr);
    CHECK(std::string(crystal_last_error()).find("no_such_graph") != std::string::npos);
    CHECK(crystal_spec_parse_json("{not json", &s) == CRYSTAL_PARSE_ERROR);
    CHECK(crystal_spec_load("/nonexistent/spec.json", &s) == CRYSTAL_IO_ERROR);
    CHECK(crystal_spec_load(nullptr, &s) == CRYSTAL_INVALID_ARGUMENT);
    CHECK(crystal_spec_dims(nullptr, nullptr, nullptr) == CRYSTAL_INVALID_ARGUMENT);

    crystal_spec* b = load("builtin:graph_b");
    CHECK(crystal_green(b, 0.2, 1e-9, 64, 0.0, nullptr, nullptr) == CRYSTAL_SPECTRUM_PROXIMITY);
    crystal_spec_free(b);
}

TEST_CASE("asymmetric spec fails validation with a symmetry status") {
    crystal_spec* s = nullptr;
    REQUIRE(crystal_spec_parse_json(
                R"({"d":1,"nu":1,"Q":[0.0],"weights":[{"i":0,"j":0,"entries":[[1,1.0],[-1,0.5]]}]})", &s) ==
            CRYSTAL_OK);
    char* report = nullptr;
    CHECK(crystal_spec_validate(s, 1e-12, &report) == CRYSTAL_SYMMETRY_VIOLATION);
    CHECK(take(report).find("symmetry") != std::string::npos);
    crystal_spec_free(s);
}

TEST_CASE("bands and flat report") {
    crystal_spec* s = load("builtin:graph_c");
    crystal_bands* g = nullptr;
    REQUIRE(crystal_bands_sample(s, 1024, 0.0, &g) == CRYSTAL_OK);
    char* rep = nullptr;
    REQUIRE(crystal_bands_report(g, 0.0, 1e-3, &rep) == CRYSTAL_OK);
    auto j = json::parse(take(rep));
    REQUIRE(j["flats"].size() == 1);
    CHECK(std::abs(j["flats"][0]["measure"].get<double>() - 0.5) <= 2.0 / 1024);
    int64_t site = 0;
    double re = 1.0;
    char* csv = nullptr;
    char* occ = nullptr;
    REQUIRE(crystal_bands_occupation(g, &site, &re, nullptr, 1, 16, 0, &csv, &occ) == CRYSTAL_OK);
    CHECK(take(csv).rfind("bin_lo,bin_hi,mass\n", 0) == 0);
    take(occ);
    crystal_bands_free(g);
    crystal_spec_free(s);
}

TEST_CASE("field handles") {
    crystal_spec* s = load("builtin:graph_b");
    crystal_field* f = nullptr;
    const double t = 2 * 3.141592653589793 * 10;
    REQUIRE(crystal_field_propagate(s, t, 32, 1e-10, nullptr, nullptr, nullptr, 0, &f) == CRYSTAL_OK);
    int64_t M = 0;
    CHECK(crystal_field_window(f, &M) == CRYSTAL_OK);
    CHECK(M == 32);
    double re = 0.0, im = 0.0;
    CHECK(crystal_field_get(f, 10, &re, &im) == CRYSTAL_OK);
    CHECK(std::hypot(re, im) == doctest::Approx(0.5).epsilon(1e-8));
    char* summary = nullptr;
    REQUIRE(crystal_field_summary(f, &summary) == CRYSTAL_OK);
    CHECK(json::parse(take(summary))["converged"] == true);
    crystal_field_free(f);
    crystal_spec_free(s);
}

TEST_CASE("analysis entry points return JSON") {
    crystal_spec* a = load("builtin:graph_a");
    char* out = nullptr;
    int64_t N = 1024;
    REQUIRE(crystal_locality(a, 4096, &N, 1, nullptr, &out) == CRYSTAL_OK);
    CHECK(json::parse(take(out))["verdict"] == "converges");
    REQUIRE(crystal_green(a, -1.0, 0.0, 256, 0.0, nullptr, &out) == CRYSTAL_OK);
    CHECK(json::parse(take(out))["fit"]["model"] == "power");
    crystal_spec_free(a);

    crystal_spec* z = load("builtin:zd:1");
    double times[] = {2.0, 4.0};
    REQUIRE(crystal_transport(z, times, 2, 128, 1024, 1e-10, &out) == CRYSTAL_OK);
    auto j = json::parse(take(out));
    CHECK(j["msd"][1].get<double>() == doctest::Approx(32.0).epsilon(1e-8));
    crystal_spec_free(z);
}
