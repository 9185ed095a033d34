#include "crystal/crystal.h"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

#include "crystal/builtins.hpp"
#include "crystal/evolve.hpp"
#include "crystal/floquet.hpp"
#include "crystal/locality.hpp"
#include "crystal/reproduce.hpp"
#include "crystal/resolvent.hpp"
#include "crystal/spectral.hpp"
#include "crystal/transport.hpp"
#include "parallel.hpp"

using nlohmann::json;

struct crystal_spec {
    crystal::CrystalSpec spec;
};

struct crystal_bands {
    crystal::BandGrid grid;
};

struct crystal_field {
    crystal::WaveField field;
};

namespace {

thread_local std::string last_error;

crystal_status to_status(crystal::ErrorCode code) {
    return static_cast<crystal_status>(static_cast<int>(code));
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void put(char** out, const std::string& s) {
    if (out) *out = dup(s);
}

void put(char** out, const json& j) {
    if (out) *out = dup(j.dump(2));
}

// Non-finite numbers become null in JSON output.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class Fn>
crystal_status guarded(Fn&& fn) {
    try {
        last_error.clear();
        return fn();
    } catch (const crystal::Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        last_error = e.what();
        return CRYSTAL_INTERNAL_ERROR;
    }
}

crystal_status null_argument(const char* what) {
    last_error = std::string("null argument: ") + what;
    return CRYSTAL_INVALID_ARGUMENT;
}

crystal::State make_state(const int64_t* sites, const double* re, const double* im, size_t n) {
    crystal::State s;
    if (n == 0) {
        s[0] = 1.0;
        return s;
    }
    if (!sites || !re) throw crystal::Error(crystal::ErrorCode::InvalidArgument, "state arrays are null");
    for (size_t i = 0; i < n; ++i) s[sites[i]] += std::complex<double>(re[i], im ? im[i] : 0.0);
    return s;
}

}  // namespace

extern "C" {

const char* crystal_version(void) { return "1.0.0"; }

const char* crystal_status_name(crystal_status status) {
    if (status == CRYSTAL_OK) return "Ok";
    if (status == CRYSTAL_INTERNAL_ERROR) return "InternalError";
    if (status >= CRYSTAL_INVALID_ARGUMENT && status <= CRYSTAL_IO_ERROR)
        return crystal::error_name(static_cast<crystal::ErrorCode>(status));
    return "Unknown";
}

const char* crystal_last_error(void) { return last_error.c_str(); }

void crystal_string_free(char* s) { std::free(s); }

void crystal_set_threads(int threads) { crystal::detail::default_threads.store(threads > 0 ? threads : 0); }

crystal_status crystal_builtin_names(char** out) {
    return guarded([&] {
        put(out, json(crystal::builtin_names()));
        return CRYSTAL_OK;
    });
}

crystal_status crystal_spec_load(const char* source, crystal_spec** out) {
    if (!source || !out) return null_argument("source/out");
    return guarded([&] {
        *out = new crystal_spec{crystal::load_spec(source)};
        return CRYSTAL_OK;
    });
}

crystal_status crystal_spec_parse_json(const char* text, crystal_spec** out) {
    if (!text || !out) return null_argument("json/out");
    return guarded([&] {
        *out = new crystal_spec{crystal::parse_spec_json(text)};
        return CRYSTAL_OK;
    });
}

void crystal_spec_free(crystal_spec* spec) { delete spec; }

crystal_status crystal_spec_dims(const crystal_spec* spec, int* d, int* nu) {
    if (!spec) return null_argument("spec");
    if (d) *d = spec->spec.d;
    if (nu) *nu = spec->spec.nu;
    return CRYSTAL_OK;
}

crystal_status crystal_spec_to_json(const crystal_spec* spec, char** out) {
    if (!spec) return null_argument("spec");
    return guarded([&] {
        put(out, crystal::spec_to_json(spec->spec));
        return CRYSTAL_OK;
    });
}

crystal_status crystal_spec_validate(const crystal_spec* spec, double tol, char** out) {
    if (!spec) return null_argument("spec");
    return guarded([&] {
        auto rep = crystal::validate(spec->spec, tol > 0 ? tol : 1e-12);
        json j;
        j["label"] = spec->spec.label;
        j["ok"] = rep.ok();
        j["checks"] = json::array();
        crystal_status first = CRYSTAL_OK;
        for (const auto& c : rep.checks) {
            j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
            if (!c.passed && first == CRYSTAL_OK) {
                first = to_status(c.code);
                last_error = c.detail;
            }
        }
        j["family_sums"] = json::array();
        for (const auto& s : rep.family_sums) j["family_sums"].push_back({{"value", num(s.value)}, {"error", num(s.error)}});
        if (rep.ok()) j["norm_bound"] = num(crystal::norm_bound(spec->spec));
        put(out, j);
        return first;
    });
}

crystal_status crystal_spec_connectivity(const crystal_spec* spec, char** out) {
    if (!spec) return null_argument("spec");
    return guarded([&] {
        auto c = crystal::check_connected(spec->spec);
        put(out, json{{"connected", c.connected},
                      {"quotient_connected", c.quotient_connected},
                      {"index", c.index},
                      {"component", c.component},
                      {"witness", c.witness}});
        return CRYSTAL_OK;
    });
}

crystal_status crystal_bands_sample(const crystal_spec* spec, int64_t N, double eps, crystal_bands** out) {
    if (!spec || !out) return null_argument("spec/out");
    return guarded([&] {
        *out = new crystal_bands{crystal::sample_bands(spec->spec, N, eps > 0 ? eps : 1e-12)};
        return CRYSTAL_OK;
    });
}

void crystal_bands_free(crystal_bands* bands) { delete bands; }

crystal_status crystal_bands_csv(const crystal_bands* bands, char** out) {
    if (!bands) return null_argument("bands");
    return guarded([&] {
        put(out, crystal::bands_csv(bands->grid));
        return CRYSTAL_OK;
    });
}

crystal_status crystal_bands_report(const crystal_bands* bands, double tol_flat, double min_measure, char** out) {
    if (!bands) return null_argument("bands");
    return guarded([&] {
        auto rep = crystal::detect_flat_bands(bands->grid, tol_flat, min_measure > 0 ? min_measure : 1e-3);
        json j;
        j["N"] = bands->grid.N;
        j["bands"] = json::array();
        for (const auto& b : rep.bands)
            j["bands"].push_back({{"min", b.min}, {"max", b.max}, {"error", b.error}, {"kind", b.kind},
                                  {"flat_fraction", b.flat_fraction}});
        j["flats"] = json::array();
        for (const auto& f : rep.flats)
            j["flats"].push_back({{"value", f.value}, {"measure", f.measure}, {"band", f.band},
                                  {"witness_lo", f.witness_lo}, {"witness_hi", f.witness_hi}});
        j["spectrum"] = json::array();
        for (const auto& [lo, hi] : rep.spectrum) j["spectrum"].push_back({lo, hi});
        j["tol_flat"] = rep.tol_flat;
        j["min_measure"] = rep.min_measure;
        put(out, j);
        return CRYSTAL_OK;
    });
}

crystal_status crystal_bands_top_flatness(const crystal_bands* bands, char** out) {
    if (!bands) return null_argument("bands");
    return guarded([&] {
        auto v = crystal::top_band_flatness(bands->grid);
        put(out, json{{"oscillation", v.oscillation},
                      {"threshold", v.threshold},
                      {"passed", v.passed},
                      {"skipped", v.skipped},
                      {"note", v.note}});
        return CRYSTAL_OK;
    });
}

crystal_status crystal_bands_occupation(const crystal_bands* bands, const int64_t* sites, const double* re,
                                        const double* im, size_t n, int bins, int band, char** csv, char** out) {
    if (!bands) return null_argument("bands");
    return guarded([&] {
        auto psi = make_state(sites, re, im, n);
        auto hat = crystal::psi_hat_on_grid(bands->grid, psi);
        auto h = crystal::occupation_density(bands->grid, hat, bins, band);
        put(csv, crystal::histogram_csv(h));
        json atoms = json::array();
        for (const auto& [v, m] : h.atoms) atoms.push_back({{"value", v}, {"mass", m}});
        put(out, json{{"band", h.band}, {"total", h.total}, {"bins", bins}, {"atoms", atoms}});
        return CRYSTAL_OK;
    });
}

crystal_status crystal_bands_ac(const crystal_bands* bands, double tol_grad, double min_measure, char** out) {
    if (!bands) return null_argument("bands");
    return guarded([&] {
        auto vs = crystal::ac_criterion(bands->grid, tol_grad, min_measure > 0 ? min_measure : 1e-3);
        json j = json::array();
        for (const auto& v : vs)
            j.push_back({{"band", v.band},
                         {"fraction_coarse", v.fraction_coarse},
                         {"fraction_fine", v.fraction_fine},
                         {"stability", num(v.stability)},
                         {"verdict", v.verdict}});
        put(out, j);
        return CRYSTAL_OK;
    });
}

crystal_status crystal_regularity(const crystal_spec* spec, int jmin, int jmax, char** csv, char** out) {
    if (!spec) return null_argument("spec");
    return guarded([&] {
        if (jmin < 1 || jmax < jmin) throw crystal::Error(crystal::ErrorCode::InvalidArgument, "need 1 <= jmin <= jmax");
        std::vector<int> scales;
        for (int j = jmin; j <= jmax; ++j) scales.push_back(j);
        auto p = crystal::regularity_probe(spec->spec, scales);
        put(csv, crystal::probe_csv(p));
        put(out, json{{"j", p.j},
                      {"quotient", p.quotient},
                      {"holder", p.holder},
                      {"lipschitz_bound", num(p.lipschitz_bound)},
                      {"unbounded", p.unbounded},
                      {"verdict", p.verdict}});
        return CRYSTAL_OK;
    });
}

crystal_status crystal_field_propagate(const crystal_spec* spec, double t, int64_t M, double eps, const int64_t* sites,
                                       const double* re, const double* im, size_t n, crystal_field** out) {
    if (!spec || !out) return null_argument("spec/out");
    return guarded([&] {
        auto f = crystal::propagate(spec->spec, t, M, eps > 0 ? eps : 1e-10, {}, make_state(sites, re, im, n));
        *out = new crystal_field{std::move(f)};
        return CRYSTAL_OK;
    });
}

void crystal_field_free(crystal_field* field) { delete field; }

crystal_status crystal_field_window(const crystal_field* field, int64_t* M) {
    if (!field || !M) return null_argument("field/M");
    *M = field->field.M;
    return CRYSTAL_OK;
}

crystal_status crystal_field_get(const crystal_field* field, int64_t m, double* re, double* im) {
    if (!field) return null_argument("field");
    auto v = field->field.at(m);
    if (re) *re = v.real();
    if (im) *im = v.imag();
    return CRYSTAL_OK;
}

crystal_status crystal_field_csv(const crystal_field* field, char** out) {
    if (!field) return null_argument("field");
    return guarded([&] {
        put(out, crystal::field_csv(field->field));
        return CRYSTAL_OK;
    });
}

crystal_status crystal_field_summary(const crystal_field* field, char** out) {
    if (!field) return null_argument("field");
    return guarded([&] {
        const auto& f = field->field;
        std::int64_t arg = 0;
        double best = -1.0;
        for (std::int64_t m = -f.M; m <= f.M; ++m)
            if (std::abs(f.at(m)) > best + 1e-15) {
                best = std::abs(f.at(m));
                arg = m;
            }
        put(out, json{{"t", f.t},
                      {"M", f.M},
                      {"supnorm", f.supnorm()},
                      {"argmax", arg},
                      {"origin_abs", std::abs(f.at(0))},
                      {"captured_mass", f.captured_mass},
                      {"resolution", f.resolution},
                      {"converged", f.converged},
                      {"change", f.change},
                      {"edge_mass", f.edge_mass}});
        return CRYSTAL_OK;
    });
}

crystal_status crystal_disperse(const crystal_spec* spec, const double* times, size_t n, int64_t M, double eps,
                                int fit_exponent, char** csv, char** out) {
    if (!spec || (!times && n)) return null_argument("spec/times");
    return guarded([&] {
        std::vector<double> ts(times, times + n);
        auto trace = crystal::dispersion_trace(spec->spec, ts, M, eps > 0 ? eps : 1e-10);
        put(csv, crystal::trace_csv(trace));
        json j;
        j["t"] = ts;
        j["supnorm"] = json::array();
        j["origin_abs"] = json::array();
        for (const auto& s : trace) {
            j["supnorm"].push_back(s.supnorm);
            j["origin_abs"].push_back(s.origin_abs);
        }
        if (fit_exponent) {
            auto fit = crystal::power_dispersion_probe(spec->spec, ts);
            j["fit"] = {{"slope", fit.slope},   {"stderr", fit.stderr_slope}, {"ci95", {fit.ci_lo, fit.ci_hi}},
                        {"intercept", fit.intercept}, {"envelope", fit.value}};
        }
        put(out, j);
        return CRYSTAL_OK;
    });
}

crystal_status crystal_transport(const crystal_spec* spec, const double* times, size_t n, int64_t M_start,
                                 int64_t M_cap, double eps, char** out) {
    if (!spec || !times) return null_argument("spec/times");
    return guarded([&] {
        crystal::MsdOptions o;
        if (M_start > 0) o.M_start = M_start;
        if (M_cap > 0) o.M_cap = M_cap;
        if (eps > 0) o.eps = eps;
        auto r = crystal::msd_series(spec->spec, std::vector<double>(times, times + n), o);
        json msd = json::array();
        for (double v : r.msd) msd.push_back(num(v));
        put(out, json{{"t", r.t},
                      {"msd", msd},
                      {"converged", r.converged},
                      {"window", r.window},
                      {"fitted_speed2", num(r.fitted_speed2)},
                      {"analytic_limit", num(r.analytic_limit)},
                      {"verdict", r.verdict},
                      {"note", r.note}});
        return CRYSTAL_OK;
    });
}

crystal_status crystal_superballistic(const double* alphas, size_t n, double t, const int64_t* windows,
                                      size_t n_windows, char** out) {
    if (!alphas || !windows) return null_argument("alphas/windows");
    return guarded([&] {
        auto es = crystal::superballistic_detector(std::vector<double>(alphas, alphas + n), t,
                                                   std::vector<std::int64_t>(windows, windows + n_windows));
        json j = json::array();
        for (const auto& e : es)
            j.push_back({{"alpha", e.alpha},
                         {"window_ratio", num(e.window_ratio)},
                         {"window_exponent", num(e.window_exponent)},
                         {"gradient_exponent", num(e.gradient_exponent)},
                         {"window_sums", e.window_sums},
                         {"gradient_energy", e.gradient_energy},
                         {"verdict", e.verdict}});
        put(out, j);
        return CRYSTAL_OK;
    });
}

crystal_status crystal_green(const crystal_spec* spec, double z_re, double z_im, int64_t n_max, double eps, char** csv,
                             char** out) {
    if (!spec) return null_argument("spec");
    return guarded([&] {
        auto g = crystal::green(spec->spec, {z_re, z_im}, n_max, eps > 0 ? eps : 1e-13);
        put(csv, crystal::green_csv(g));
        json j{{"z", {z_re, z_im}}, {"distance", g.distance}, {"n_max", g.n_max}, {"resolution", g.resolution},
               {"error", g.error}, {"G0", {g.at(0).real(), g.at(0).imag()}}};
        if (n_max >= 64) {
            auto f = crystal::decay_fit(g);
            j["fit"] = {{"model", f.model},
                        {"exponent", f.exponent},
                        {"stderr", f.stderr_exponent},
                        {"residual_power", f.residual_power},
                        {"residual_exponential", f.residual_exponential},
                        {"n_range", {f.n_lo, f.n_hi}},
                        {"classes", f.classes},
                        {"underflow", f.underflow}};
        }
        put(out, j);
        return CRYSTAL_OK;
    });
}

crystal_status crystal_locality(const crystal_spec* spec, int64_t R_max, const int64_t* N_list, size_t n, char** csv,
                                char** out) {
    if (!spec || (!N_list && n)) return null_argument("spec/N_list");
    return guarded([&] {
        auto r = crystal::hs_norm(spec->spec, R_max);
        put(csv, crystal::commutator_csv(r));
        json tail = json::array();
        for (double v : r.tail) tail.push_back(num(v));
        json j{{"R", r.R}, {"partial", r.partial}, {"tail", tail}, {"limit", num(r.limit)}, {"verdict", r.verdict}};
        if (n) {
            json fr = json::array();
            for (const auto& b : crystal::finite_rank_error(spec->spec, std::vector<std::int64_t>(N_list, N_list + n)))
                fr.push_back({{"N", b.N}, {"bound", num(b.bound)}});
            j["finite_rank"] = fr;
        }
        put(out, j);
        return CRYSTAL_OK;
    });
}

crystal_status crystal_reproduce(int64_t grid_override, int inject_sign_error, char** markdown, char** out,
                                 int* all_passed) {
    return guarded([&] {
        crystal::ReproduceOptions o;
        o.grid_override = grid_override;
        o.inject_sign_error = inject_sign_error != 0;
        auto rep = crystal::reproduce(o);
        put(markdown, rep.markdown());
        json claims = json::array();
        for (const auto& c : rep.claims)
            claims.push_back({{"id", c.id}, {"claim", c.claim}, {"passed", c.passed}, {"detail", c.detail}, {"error", c.error}});
        put(out, json{{"claims", claims}, {"passed", rep.passed()}, {"seconds", rep.seconds}});
        if (all_passed) *all_passed = rep.passed() ? 1 : 0;
        return CRYSTAL_OK;
    });
}

}  // extern "C"
