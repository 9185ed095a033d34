// Command-line front end over the C API.
#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "crystal/crystal.h"

namespace {

using nlohmann::json;

struct CString {
    char* p = nullptr;
    ~CString() { crystal_string_free(p); }
    char** out() { return &p; }
    std::string str() const { return p ? p : ""; }
    json parse() const { return json::parse(str()); }
};

struct SpecHandle {
    crystal_spec* p = nullptr;
    ~SpecHandle() { crystal_spec_free(p); }
};

struct BandsHandle {
    crystal_bands* p = nullptr;
    ~BandsHandle() { crystal_bands_free(p); }
};

struct FieldHandle {
    crystal_field* p = nullptr;
    ~FieldHandle() { crystal_field_free(p); }
};

// Failure carrying the process exit code.
struct Exit {
    int code;
};

int exit_code(crystal_status s) {
    switch (s) {
    case CRYSTAL_OK: return 0;
    case CRYSTAL_RESOLUTION_EXCEEDED:
    case CRYSTAL_INTEGRATION_FAILURE:
    case CRYSTAL_NUMERICAL_ERROR:
    case CRYSTAL_DIVERGENT_GRADIENT_ENERGY: return 3;
    case CRYSTAL_IO_ERROR:
    case CRYSTAL_INTERNAL_ERROR: return 1;
    default: return 2;
    }
}

void check(crystal_status s) {
    if (s == CRYSTAL_OK) return;
    std::cerr << "error [" << crystal_status_name(s) << "]: " << crystal_last_error() << "\n";
    if (s == CRYSTAL_UNKNOWN_BUILTIN) {
        CString names;
        if (crystal_builtin_names(names.out()) == CRYSTAL_OK) {
            std::string list;
            for (const auto& n : names.parse()) list += (list.empty() ? "" : ", ") + n.get<std::string>();
            std::cerr << "valid builtins: " << list << "\n";
        }
    }
    throw Exit{exit_code(s)};
}

struct Globals {
    std::string graph;
    std::string out;
    double eps = 0.0;
    std::int64_t grid = 0;
    int threads = 0;
    bool json = false;
};

void write_file(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) {
        std::cerr << "error [IoError]: cannot write " << path << "\n";
        throw Exit{1};
    }
}

std::string out_path(const Globals& g, const char* fallback) { return g.out.empty() ? fallback : g.out; }

void load(const Globals& g, SpecHandle& spec) {
    crystal_set_threads(g.threads);
    if (g.graph.empty()) {
        std::cerr << "error [InvalidArgument]: --graph is required (builtin:<name> or a JSON file)\n";
        throw Exit{2};
    }
    check(crystal_spec_load(g.graph.c_str(), &spec.p));
}

void report(const Globals& g, const std::string& json, const std::string& summary) {
    if (g.json) std::cout << json << "\n";
    else std::cout << summary << "\n";
}

std::string fmt_num(double v) { return fmt::format("{:.6g}", v); }

struct StateArrays {
    std::vector<std::int64_t> sites;
    std::vector<double> re, im;
};

// "m:re[:im],m:re[:im],..."; empty means delta_0.
StateArrays parse_state(const std::string& text) {
    StateArrays s;
    if (text.empty()) return s;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::stringstream is(item);
        std::string a, b, c;
        std::getline(is, a, ':');
        std::getline(is, b, ':');
        std::getline(is, c, ':');
        try {
            s.sites.push_back(std::stoll(a));
            s.re.push_back(b.empty() ? 1.0 : std::stod(b));
            s.im.push_back(c.empty() ? 0.0 : std::stod(c));
        } catch (const std::exception&) {
            std::cerr << "error [InvalidArgument]: bad state entry '" << item << "' (expected m:re[:im])\n";
            throw Exit{2};
        }
    }
    return s;
}

// "-1", "-1+0i", "2i", "1-0.5i"
std::pair<double, double> parse_complex(const std::string& text) {
    static const std::regex full(R"(^\s*([+-]?[0-9.]+(?:[eE][+-]?[0-9]+)?)\s*(?:([+-])\s*([0-9.]*(?:[eE][+-]?[0-9]+)?)\s*i)?\s*$)");
    static const std::regex imag(R"(^\s*([+-]?[0-9.]*(?:[eE][+-]?[0-9]+)?)\s*i\s*$)");
    std::smatch m;
    auto number = [](const std::string& s) { return s.empty() || s == "+" ? 1.0 : s == "-" ? -1.0 : std::stod(s); };
    try {
        if (std::regex_match(text, m, full)) {
            double re = std::stod(m[1]);
            double im = m[2].matched ? (m[2] == "-" ? -1.0 : 1.0) * number(m[3]) : 0.0;
            return {re, im};
        }
        if (std::regex_match(text, m, imag)) return {0.0, number(m[1])};
    } catch (const std::exception&) {
    }
    std::cerr << "error [InvalidArgument]: cannot parse complex number '" << text << "'\n";
    throw Exit{2};
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt::format("{}", v[i]);
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral and transport analysis of periodic graphs with long-range weights"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--graph", g.graph, "Crystal source: builtin:<name> or a JSON file");
    app.add_option("--out", g.out, "Output file ('-' for stdout)");
    app.add_option("--eps", g.eps, "Tolerance")->check(CLI::PositiveNumber);
    app.add_option("--grid", g.grid, "Torus grid size per axis (multiple of 4)");
    app.add_option("--threads", g.threads, "Worker threads (CRYSTAL_THREADS overrides)")->check(CLI::NonNegativeNumber);
    app.add_flag("--json", g.json, "Print the JSON result instead of the one-line summary");

    int code = 0;

    auto* validate = app.add_subcommand(
        "validate", "Check structure, symmetry, positivity and summability of the weights; report connectivity");
    validate->callback([&] {
        SpecHandle spec;
        load(g, spec);
        CString rep, conn;
        crystal_status s = crystal_spec_validate(spec.p, g.eps, rep.out());
        if (!rep.p) check(s);
        json j = rep.parse();
        if (s == CRYSTAL_OK) {
            check(crystal_spec_connectivity(spec.p, conn.out()));
            j["connectivity"] = conn.parse();
        }
        if (!g.out.empty()) write_file(g.out, j.dump(2) + "\n");
        if (s != CRYSTAL_OK) {
            if (g.json) std::cout << j.dump(2) << "\n";
            check(s);
        }
        const auto& c = j["connectivity"];
        report(g, j.dump(2),
               fmt::format("valid, norm bound {}, {}", fmt_num(j["norm_bound"].get<double>()),
                           c["connected"].get<bool>() ? std::string("connected")
                                                      : "not connected (" + c["witness"].get<std::string>() + ")"));
    });

    auto* spectrum = app.add_subcommand("spectrum", "Sample the Floquet bands on a torus grid and write them as CSV");
    spectrum->callback([&] {
        SpecHandle spec;
        load(g, spec);
        BandsHandle bands;
        check(crystal_bands_sample(spec.p, g.grid ? g.grid : 1024, g.eps, &bands.p));
        CString csv, rep;
        check(crystal_bands_csv(bands.p, csv.out()));
        check(crystal_bands_report(bands.p, 0.0, 0.0, rep.out()));
        write_file(out_path(g, "bands.csv"), csv.str());
        json j = rep.parse();
        std::string ranges, flats;
        for (const auto& b : j["bands"]) {
            const double err = std::max(b["error"].get<double>(), 1e-12);
            auto snap = [&](double v) { return std::abs(v) <= err ? 0.0 : v; };
            ranges += fmt::format("{}[{},{}]", ranges.empty() ? "" : " ", fmt_num(snap(b["min"].get<double>())),
                                  fmt_num(snap(b["max"].get<double>())));
        }
        for (const auto& f : j["flats"])
            flats += fmt::format("{}{}: {:.3f}", flats.empty() ? "" : ", ",
                                 fmt_num(std::abs(f["value"].get<double>()) < 1e-12 ? 0.0 : f["value"].get<double>()),
                                 f["measure"].get<double>());
        report(g, j.dump(2), fmt::format("band{} {}, flat {{{}}}", j["bands"].size() > 1 ? "s" : "", ranges, flats));
    });

    double min_measure = 1e-3, tol_flat = 0.0;
    auto* flatbands = app.add_subcommand("flatbands", "Detect flat and partly flat bands and test the top band");
    flatbands->add_option("--min-measure", min_measure, "Smallest grid fraction counted as flat")->check(CLI::PositiveNumber);
    flatbands->add_option("--tol", tol_flat, "Flatness tolerance (default: 1e-9 times the spectral width)");
    flatbands->callback([&] {
        SpecHandle spec;
        load(g, spec);
        BandsHandle bands;
        check(crystal_bands_sample(spec.p, g.grid ? g.grid : 1024, g.eps, &bands.p));
        CString rep, top;
        check(crystal_bands_report(bands.p, tol_flat, min_measure, rep.out()));
        check(crystal_bands_top_flatness(bands.p, top.out()));
        json j = rep.parse();
        j["top_band"] = top.parse();
        write_file(out_path(g, "flatbands.json"), j.dump(2) + "\n");
        std::string kinds;
        for (const auto& b : j["bands"]) kinds += (kinds.empty() ? "" : ", ") + b["kind"].get<std::string>();
        std::string flats;
        for (const auto& f : j["flats"])
            flats += fmt::format("{}{}: {:.3f}", flats.empty() ? "" : ", ", fmt_num(f["value"].get<double>()),
                                 f["measure"].get<double>());
        const auto& t = j["top_band"];
        report(g, j.dump(2),
               fmt::format("bands: {}; flat {{{}}}; top band {}", kinds, flats,
                           t["skipped"].get<bool>() ? "skipped (" + t["note"].get<std::string>() + ")"
                           : t["passed"].get<bool>() ? std::string("not flat")
                                                     : std::string("FLAT")));
    });

    std::string state_text;
    int bins = 64, band = 0;
    double tol_grad = 0.0;
    auto* measure = app.add_subcommand("measure", "Occupation measure of a state per band and the absolute-continuity test");
    measure->add_option("--state", state_text, "Initial state m:re[:im],... (default delta_0)");
    measure->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
    measure->add_option("--band", band, "Band index");
    measure->add_option("--tol-grad", tol_grad, "Gradient threshold (default: 1e-6 times the band width)");
    measure->callback([&] {
        SpecHandle spec;
        load(g, spec);
        BandsHandle bands;
        check(crystal_bands_sample(spec.p, g.grid ? g.grid : 1024, g.eps, &bands.p));
        auto st = parse_state(state_text);
        CString csv, occ, ac;
        check(crystal_bands_occupation(bands.p, st.sites.data(), st.re.data(), st.im.data(), st.sites.size(), bins, band,
                                       csv.out(), occ.out()));
        check(crystal_bands_ac(bands.p, tol_grad, min_measure, ac.out()));
        write_file(out_path(g, "occupation.csv"), csv.str());
        json j = occ.parse();
        j["ac"] = ac.parse();
        std::string verdicts;
        for (const auto& v : j["ac"])
            verdicts += fmt::format("{}band {}: {}", verdicts.empty() ? "" : "; ", v["band"].get<int>(),
                                    v["verdict"].get<std::string>());
        report(g, j.dump(2), fmt::format("mass {:.12g}, atoms {}; {}", j["total"].get<double>(), j["atoms"].size(), verdicts));
    });

    int jmin = 6, jmax = 14;
    auto* regularity = app.add_subcommand("regularity", "Difference quotients of the symbol across dyadic scales");
    regularity->add_option("--jmin", jmin, "Coarsest scale 2^-jmin")->check(CLI::PositiveNumber);
    regularity->add_option("--jmax", jmax, "Finest scale 2^-jmax")->check(CLI::PositiveNumber);
    regularity->callback([&] {
        SpecHandle spec;
        load(g, spec);
        CString csv, rep;
        check(crystal_regularity(spec.p, jmin, jmax, csv.out(), rep.out()));
        write_file(out_path(g, "regularity.csv"), csv.str());
        json j = rep.parse();
        report(g, j.dump(2), fmt::format("Hoelder exponent {:.3f}; {}", j["holder"].get<double>(), j["verdict"].get<std::string>()));
    });

    double t = 1.0;
    std::int64_t window = 256;
    auto* evolve = app.add_subcommand("evolve", "Propagate a state with exp(-itH) and write the amplitudes on a window");
    evolve->add_option("--t", t, "Time")->required();
    evolve->add_option("--window", window, "Half-width M of the output window")->check(CLI::NonNegativeNumber);
    evolve->add_option("--state", state_text, "Initial state m:re[:im],... (default delta_0)");
    evolve->callback([&] {
        SpecHandle spec;
        load(g, spec);
        auto st = parse_state(state_text);
        FieldHandle field;
        check(crystal_field_propagate(spec.p, t, window, g.eps, st.sites.data(), st.re.data(), st.im.data(),
                                      st.sites.size(), &field.p));
        CString csv, sum;
        check(crystal_field_csv(field.p, csv.out()));
        check(crystal_field_summary(field.p, sum.out()));
        write_file(out_path(g, "field.csv"), csv.str());
        json j = sum.parse();
        report(g, j.dump(2),
               fmt::format("t = {}: sup {:.10f} at m = {}, |psi(0)| = {:.10f}, mass in window {:.12g}", fmt_num(t),
                           j["supnorm"].get<double>(), j["argmax"].get<std::int64_t>(), j["origin_abs"].get<double>(),
                           j["captured_mass"].get<double>()));
    });

    std::vector<double> times;
    double tmin = 10.0, tmax = 1000.0;
    int count = 9;
    bool fit = false;
    auto* disperse = app.add_subcommand("disperse", "Sup-norm and origin amplitude over time; optional decay exponent fit");
    disperse->add_option("--times", times, "Explicit times")->delimiter(',');
    disperse->add_option("--tmin", tmin, "First time of a geometric sequence")->check(CLI::PositiveNumber);
    disperse->add_option("--tmax", tmax, "Last time of a geometric sequence")->check(CLI::PositiveNumber);
    disperse->add_option("--count", count, "Number of geometric times")->check(CLI::PositiveNumber);
    disperse->add_option("--window", window, "Half-width of the window for the sup-norm");
    disperse->add_flag("--fit", fit, "Fit the power-law decay of the origin amplitude envelope");
    disperse->callback([&] {
        SpecHandle spec;
        load(g, spec);
        if (times.empty())
            for (int i = 0; i < count; ++i)
                times.push_back(count == 1 ? tmin : tmin * std::pow(tmax / tmin, static_cast<double>(i) / (count - 1)));
        CString csv, rep;
        check(crystal_disperse(spec.p, times.data(), times.size(), window, g.eps, fit ? 1 : 0, csv.out(), rep.out()));
        write_file(out_path(g, "trace.csv"), csv.str());
        json j = rep.parse();
        std::string line = fmt::format("sup-norm {} -> {} over t in [{}, {}]", fmt_num(j["supnorm"].front().get<double>()),
                                       fmt_num(j["supnorm"].back().get<double>()), fmt_num(times.front()),
                                       fmt_num(times.back()));
        if (j.contains("fit"))
            line += fmt::format("; origin decay exponent {:.4f} (95% CI [{:.4f}, {:.4f}])", j["fit"]["slope"].get<double>(),
                                j["fit"]["ci95"][0].get<double>(), j["fit"]["ci95"][1].get<double>());
        report(g, j.dump(2), line);
    });

    std::vector<std::int64_t> windows;
    std::vector<double> ts;
    auto* transport = app.add_subcommand("transport", "Mean squared displacement over time with window refinement");
    transport->add_option("--t", ts, "Times")->delimiter(',');
    transport->add_option("--tmax", tmax, "Use the times tmax*i/8 for i = 1..8")->check(CLI::PositiveNumber);
    transport->add_option("--windows", windows, "Window half-widths; the smallest and largest bound the refinement")
        ->delimiter(',');
    transport->callback([&] {
        SpecHandle spec;
        load(g, spec);
        if (ts.empty())
            for (int i = 1; i <= 8; ++i) ts.push_back(tmax * i / 8.0);
        std::int64_t lo = 0, hi = 0;
        if (!windows.empty()) {
            lo = *std::min_element(windows.begin(), windows.end());
            hi = *std::max_element(windows.begin(), windows.end());
        }
        CString rep;
        check(crystal_transport(spec.p, ts.data(), ts.size(), lo, hi, g.eps, rep.out()));
        write_file(out_path(g, "transport.json"), rep.str() + "\n");
        json j = rep.parse();
        auto show = [](const json& v, const char* missing) {
            return v.is_null() ? std::string(missing) : fmt_num(v.get<double>());
        };
        report(g, j.dump(2),
               fmt::format("verdict {}; fitted speed^2 {}, analytic limit {}{}", j["verdict"].get<std::string>(),
                           show(j["fitted_speed2"], "n/a"), show(j["analytic_limit"], "inf"),
                           j["note"].get<std::string>().empty() ? "" : " (" + j["note"].get<std::string>() + ")"));
    });

    std::vector<double> alphas = {0.15, 0.2, 0.25, 0.3, 0.4, 0.5};
    double tsb = 1.0;
    std::vector<std::int64_t> sb_windows = {4096, 16384, 65536};
    auto* superb = app.add_subcommand("superballistic", "Fractional Laplacian MSD divergence test across exponents");
    superb->add_option("--alphas", alphas, "Exponents in (0, 1)")->delimiter(',');
    superb->add_option("--t", tsb, "Time")->check(CLI::PositiveNumber);
    superb->add_option("--windows", sb_windows, "Window half-widths")->delimiter(',');
    superb->callback([&] {
        crystal_set_threads(g.threads);
        CString rep;
        check(crystal_superballistic(alphas.data(), alphas.size(), tsb, sb_windows.data(), sb_windows.size(), rep.out()));
        write_file(out_path(g, "superballistic.json"), rep.str() + "\n");
        json j = rep.parse();
        std::string line;
        for (const auto& e : j)
            line += fmt::format("{}{}: {} (ratio {:.4f})", line.empty() ? "" : "; ", fmt_num(e["alpha"].get<double>()),
                                e["verdict"].get<std::string>(), e["window_ratio"].get<double>());
        report(g, j.dump(2), line);
    });

    std::string z_text = "-1";
    std::int64_t nmax = 1024;
    auto* green = app.add_subcommand("green", "Lattice Green's function G(0, n) at a complex energy and its decay fit");
    green->add_option("--z", z_text, "Energy, e.g. -1+0i");
    green->add_option("--nmax", nmax, "Largest |n|")->check(CLI::NonNegativeNumber);
    green->callback([&] {
        SpecHandle spec;
        load(g, spec);
        auto [zr, zi] = parse_complex(z_text);
        CString csv, rep;
        check(crystal_green(spec.p, zr, zi, nmax, g.eps, csv.out(), rep.out()));
        write_file(out_path(g, "green.csv"), csv.str());
        json j = rep.parse();
        std::string line = fmt::format("G(0,0) = {:.12g}{:+.12g}i, distance to spectrum {}", j["G0"][0].get<double>(),
                                       j["G0"][1].get<double>(), fmt_num(j["distance"].get<double>()));
        if (j.contains("fit")) {
            const auto& f = j["fit"];
            line += f["underflow"].get<bool>()
                        ? std::string("; decay fit underflow")
                        : fmt::format("; {} decay, exponent {:.4f} +- {:.2g}", f["model"].get<std::string>(),
                                      f["exponent"].get<double>(), f["stderr"].get<double>());
        }
        report(g, j.dump(2), line);
    });

    std::int64_t rmax = std::int64_t{1} << 20;
    std::vector<std::int64_t> n_list;
    auto* locality = app.add_subcommand("locality", "Hilbert-Schmidt norm of the half-line commutator and finite-rank errors");
    locality->add_option("--rmax", rmax, "Largest distance in the partial sums")->check(CLI::PositiveNumber);
    locality->add_option("--N", n_list, "Cut-offs for the finite-rank error bound")->delimiter(',');
    locality->callback([&] {
        SpecHandle spec;
        load(g, spec);
        CString csv, rep;
        check(crystal_locality(spec.p, rmax, n_list.data(), n_list.size(), csv.out(), rep.out()));
        write_file(out_path(g, "commutator.csv"), csv.str());
        json j = rep.parse();
        report(g, j.dump(2),
               fmt::format("HS^2 partial sum {:.12g} at R = {}, limit {}; {}", j["partial"].back().get<double>(),
                           j["R"].back().get<std::int64_t>(),
                           j["limit"].is_null() ? std::string("inf") : fmt::format("{:.12g}", j["limit"].get<double>()),
                           j["verdict"].get<std::string>()));
    });

    bool inject = false;
    auto* reproduce = app.add_subcommand("reproduce", "Run the full acceptance suite and write a markdown report");
    reproduce->add_flag("--inject-sign-error", inject, "Flip the sign of one graph_b weight (mutation check)");
    reproduce->callback([&] {
        CString md, rep;
        int passed = 0;
        crystal_set_threads(g.threads);
        check(crystal_reproduce(g.grid, inject ? 1 : 0, md.out(), rep.out(), &passed));
        write_file(out_path(g, "reproduce.md"), md.str());
        json j = rep.parse();
        if (g.json) std::cout << j.dump(2) << "\n";
        else std::cout << md.str();
        if (!passed) {
            for (const auto& c : j["claims"])
                if (!c["passed"].get<bool>())
                    std::cerr << "FAIL " << c["id"].get<std::string>() << ": " << c["claim"].get<std::string>()
                              << (c["error"].get<std::string>().empty() ? "" : " [" + c["error"].get<std::string>() + "]")
                              << "\n";
            code = 1;
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const Exit& e) {
        return e.code;
    } catch (const json::exception& e) {
        std::cerr << "error [InternalError]: " << e.what() << "\n";
        return 1;
    }
    return code;
}
