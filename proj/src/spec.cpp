#include "crystal/spec.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

#include "crystal/builtins.hpp"

namespace crystal {

using nlohmann::json;

const char* error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::UnknownBuiltin: return "UnknownBuiltin";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::SymmetryViolation: return "SymmetryViolation";
        case ErrorCode::SummabilityViolation: return "SummabilityViolation";
        case ErrorCode::NotAdmissible: return "NotAdmissible";
        case ErrorCode::ResolutionExceeded: return "ResolutionExceeded";
        case ErrorCode::SpectrumProximity: return "SpectrumProximity";
        case ErrorCode::IntegrationFailure: return "IntegrationFailure";
        case ErrorCode::NumericalError: return "NumericalError";
        case ErrorCode::DivergentGradientEnergy: return "DivergentGradientEnergy";
        case ErrorCode::PreconditionFailed: return "PreconditionFailed";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

CrystalSpec make_spec(int d, int nu, std::string label) {
    CrystalSpec s;
    s.d = d;
    s.nu = nu;
    s.Q.assign(static_cast<size_t>(nu), 0.0);
    s.weights.resize(static_cast<size_t>(nu * nu));
    for (auto& f : s.weights) f.d = d;
    s.label = std::move(label);
    return s;
}

namespace {

std::string index_str(const Index& k) {
    std::ostringstream os;
    os << '(';
    for (size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
    os << ')';
    return os.str();
}

Index negate(Index k) {
    for (auto& x : k) x = -x;
    return k;
}

}  // namespace

bool ValidationReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

void ValidationReport::raise() const {
    for (const auto& c : checks)
        if (!c.passed) throw Error(c.code, c.name + ": " + c.detail);
}

ValidationReport validate(const CrystalSpec& spec, double tol) {
    ValidationReport rep;
    auto add = [&](std::string name, bool ok, std::string detail, ErrorCode code) {
        rep.checks.push_back({std::move(name), ok, std::move(detail), code});
    };

    std::string problem;
    if (spec.d < 1 || spec.nu < 1) problem = "d and nu must be positive";
    else if (spec.Q.size() != static_cast<size_t>(spec.nu)) problem = "Q must have nu entries";
    else if (spec.weights.size() != static_cast<size_t>(spec.nu * spec.nu))
        problem = "weights must be a nu x nu array";
    for (size_t f = 0; problem.empty() && f < spec.weights.size(); ++f) {
        const auto& fam = spec.weights[f];
        if (fam.d != spec.d) problem = "family dimension differs from d";
        for (const auto& [k, w] : fam.entries) {
            if (k.size() != static_cast<size_t>(spec.d)) problem = "index " + index_str(k) + " has wrong length";
            else if (!std::isfinite(w)) problem = "non-finite weight at " + index_str(k);
            else if (fam.has_tail() && linf(k) > fam.K0)
                problem = "explicit entry " + index_str(k) + " overlaps the tail domain |k| > " +
                          std::to_string(fam.K0);
        }
        for (const auto& r : fam.tails) {
            if (!(r.c >= 0.0) || !std::isfinite(r.c) || !std::isfinite(r.p)) problem = "tail constants must be finite, c >= 0";
            else if (r.b < 1) problem = "progression modulus must be positive";
            else if (r.q != 0.0 && r.pattern != TailRule::Pattern::Dyadic) problem = "log exponent only allowed on dyadic tails";
            else if (spec.d > 1 && (r.pattern != TailRule::Pattern::All || r.q != 0.0))
                problem = "tails in d > 1 must use the 'all' pattern";
        }
        if (fam.K0 < 0) problem = "K0 must be nonnegative";
    }
    add("structure", problem.empty(), problem.empty() ? "well-formed" : problem, ErrorCode::InvalidArgument);
    if (!problem.empty()) return rep;

    const int nu = spec.nu;
    // symmetry
    std::string sym;
    for (int i = 0; i < nu && sym.empty(); ++i)
        for (int j = 0; j < nu && sym.empty(); ++j) {
            const auto& a = spec.w(i, j);
            const auto& b = spec.w(j, i);
            for (const auto& [k, w] : a.entries) {
                double v = b.at(negate(k));
                if (std::abs(w - v) > tol * std::max(1.0, std::abs(w))) {
                    std::ostringstream os;
                    os << "w_" << i << j << index_str(k) << " = " << w << " but w_" << j << i
                       << index_str(negate(k)) << " = " << v << " at (i,j,k) = (" << i << "," << j
                       << "," << index_str(k) << ")";
                    sym = os.str();
                    break;
                }
            }
            if (sym.empty() && (a.tails != b.tails || (a.has_tail() && a.K0 != b.K0)))
                sym = "tail rules of (" + std::to_string(i) + "," + std::to_string(j) + ") and (" +
                      std::to_string(j) + "," + std::to_string(i) + ") differ";
        }
    add("symmetry", sym.empty(), sym.empty() ? "w_ji(-k) = w_ij(k)" : sym, ErrorCode::SymmetryViolation);

    std::string neg;
    for (int i = 0; i < nu && neg.empty(); ++i)
        for (int j = 0; j < nu && neg.empty(); ++j)
            for (const auto& [k, w] : spec.w(i, j).entries)
                if (w < -tol) {
                    std::ostringstream os;
                    os << "w_" << i << j << index_str(k) << " = " << w << " < 0";
                    neg = os.str();
                    break;
                }
    add("positivity", neg.empty(), neg.empty() ? "all weights nonnegative" : neg, ErrorCode::NotAdmissible);

    std::string loop;
    for (int i = 0; i < nu; ++i) {
        double w0 = spec.w(i, i).at(Index(static_cast<size_t>(spec.d), 0));
        if (std::abs(w0) > tol) {
            loop = "w_" + std::to_string(i) + std::to_string(i) + "(0) = " + std::to_string(w0);
            break;
        }
    }
    add("no-loop", loop.empty(), loop.empty() ? "w_ii(0) = 0" : loop, ErrorCode::InvalidArgument);

    std::string sum;
    rep.family_sums.resize(spec.weights.size());
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nu; ++j) {
            const auto& fam = spec.w(i, j);
            Certified c = fam.total();
            rep.family_sums[static_cast<size_t>(i * nu + j)] = c;
            if (!std::isfinite(c.value) && sum.empty())
                sum = "sum of w_" + std::to_string(i) + std::to_string(j) + " diverges (tail not summable)";
        }
    add("summability", sum.empty(), sum.empty() ? "all families have finite certified sums" : sum,
        ErrorCode::SummabilityViolation);
    return rep;
}

void ensure_valid(const CrystalSpec& spec, double tol) { validate(spec, tol).raise(); }

std::int64_t lattice_index(const std::vector<Index>& generators, int d) {
    std::vector<std::vector<__int128>> rows;
    for (const auto& g : generators) {
        std::vector<__int128> r(g.begin(), g.end());
        if (std::any_of(r.begin(), r.end(), [](__int128 x) { return x != 0; })) rows.push_back(r);
    }
    __int128 index = 1;
    size_t top = 0;
    for (int c = 0; c < d; ++c) {
        while (true) {
            size_t best = rows.size();
            for (size_t r = top; r < rows.size(); ++r)
                if (rows[r][c] != 0 &&
                    (best == rows.size() || (rows[r][c] < 0 ? -rows[r][c] : rows[r][c]) <
                                                (rows[best][c] < 0 ? -rows[best][c] : rows[best][c])))
                    best = r;
            if (best == rows.size()) return 0;
            std::swap(rows[top], rows[best]);
            bool clean = true;
            for (size_t r = top + 1; r < rows.size(); ++r) {
                if (rows[r][c] == 0) continue;
                __int128 f = rows[r][c] / rows[top][c];
                for (int x = 0; x < d; ++x) rows[r][x] -= f * rows[top][x];
                if (rows[r][c] != 0) clean = false;
            }
            if (clean) break;
        }
        __int128 p = rows[top][c] < 0 ? -rows[top][c] : rows[top][c];
        index *= p;
        ++top;
        rows.erase(std::remove_if(rows.begin() + static_cast<long>(top), rows.end(),
                                  [](const std::vector<__int128>& r) {
                                      return std::all_of(r.begin(), r.end(), [](__int128 x) { return x == 0; });
                                  }),
                   rows.end());
    }
    return static_cast<std::int64_t>(index);
}

ConnectivityReport check_connected(const CrystalSpec& spec) {
    ConnectivityReport rep;
    const int nu = spec.nu;
    rep.component.assign(static_cast<size_t>(nu), -1);
    auto linked = [&](int i, int j) { return !spec.w(i, j).generators().empty(); };
    int ncomp = 0;
    for (int s = 0; s < nu; ++s) {
        if (rep.component[static_cast<size_t>(s)] >= 0) continue;
        std::queue<int> q;
        q.push(s);
        rep.component[static_cast<size_t>(s)] = ncomp;
        while (!q.empty()) {
            int i = q.front();
            q.pop();
            for (int j = 0; j < nu; ++j)
                if (j != i && rep.component[static_cast<size_t>(j)] < 0 && (linked(i, j) || linked(j, i))) {
                    rep.component[static_cast<size_t>(j)] = ncomp;
                    q.push(j);
                }
        }
        ++ncomp;
    }
    rep.quotient_connected = ncomp == 1;
    if (!rep.quotient_connected) {
        std::ostringstream os;
        os << "quotient graph splits into " << ncomp << " components: {";
        for (int i = 0; i < nu; ++i)
            if (rep.component[static_cast<size_t>(i)] == 0) os << ' ' << i;
        os << " } vs the rest";
        rep.witness = os.str();
        return rep;
    }

    // Lift a spanning tree, then collect cycle voltages x_i + k - x_j.
    std::vector<Index> pos(static_cast<size_t>(nu));
    std::vector<bool> seen(static_cast<size_t>(nu), false);
    pos[0] = Index(static_cast<size_t>(spec.d), 0);
    seen[0] = true;
    std::queue<int> q;
    q.push(0);
    while (!q.empty()) {
        int i = q.front();
        q.pop();
        for (int j = 0; j < nu; ++j) {
            if (seen[static_cast<size_t>(j)]) continue;
            auto gens = spec.w(i, j).generators();
            if (gens.empty()) continue;
            Index x = pos[static_cast<size_t>(i)];
            for (int a = 0; a < spec.d; ++a) x[a] += gens.front()[a];
            pos[static_cast<size_t>(j)] = x;
            seen[static_cast<size_t>(j)] = true;
            q.push(j);
        }
    }
    std::vector<Index> voltages;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nu; ++j)
            for (const auto& k : spec.w(i, j).generators()) {
                Index v(static_cast<size_t>(spec.d));
                for (int a = 0; a < spec.d; ++a)
                    v[a] = pos[static_cast<size_t>(i)][a] + k[a] - pos[static_cast<size_t>(j)][a];
                voltages.push_back(v);
            }
    rep.index = lattice_index(voltages, spec.d);
    rep.connected = rep.index == 1;
    if (!rep.connected)
        rep.witness = rep.index == 0 ? "cycle voltages do not span Z^d (rank deficient)"
                                     : "cycle voltages generate a sublattice of index " + std::to_string(rep.index);
    return rep;
}

double norm_bound(const CrystalSpec& spec) {
    double best = 0.0;
    for (int i = 0; i < spec.nu; ++i) {
        double row = 0.0;
        for (int j = 0; j < spec.nu; ++j) {
            Certified c = spec.w(i, j).total();
            row += c.value + c.error;
        }
        best = std::max(best, row);
    }
    double q = 0.0;
    for (double v : spec.Q) q = std::max(q, std::abs(v));
    return best + q;
}

namespace {

TailRule parse_tail(const json& t, std::int64_t& K0, bool& present) {
    TailRule r;
    std::string kind = t.value("kind", std::string("power"));
    present = kind != "none";
    if (!present) return r;
    if (kind == "power") {
        std::string pat = t.value("pattern", std::string("all"));
        if (pat == "all") r.pattern = TailRule::Pattern::All;
        else if (pat == "odd") r.pattern = TailRule::Pattern::Odd;
        else if (pat == "progression") r.pattern = TailRule::Pattern::Progression;
        else throw Error(ErrorCode::ParseError, "unsupported tail pattern '" + pat + "'");
    } else if (kind == "dyadic_power") {
        r.pattern = TailRule::Pattern::Dyadic;
    } else {
        throw Error(ErrorCode::ParseError, "unknown tail kind '" + kind + "'");
    }
    r.c = t.at("c").get<double>();
    r.p = t.at("p").get<double>();
    r.q = t.value("q", 0.0);
    r.a = t.value("a", std::int64_t{0});
    r.b = t.value("b", std::int64_t{1});
    K0 = std::max(K0, t.value("K0", std::int64_t{0}));
    return r;
}

json tail_json(const TailRule& r, std::int64_t K0) {
    json t;
    if (r.pattern == TailRule::Pattern::Dyadic) {
        t["kind"] = "dyadic_power";
    } else {
        t["kind"] = "power";
        t["pattern"] = pattern_name(r.pattern);
    }
    t["c"] = r.c;
    t["p"] = r.p;
    t["K0"] = K0;
    if (r.q != 0.0) t["q"] = r.q;
    if (r.pattern == TailRule::Pattern::Progression) {
        t["a"] = r.a;
        t["b"] = r.b;
    }
    return t;
}

}  // namespace

CrystalSpec parse_spec_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    try {
        int d = doc.at("d").get<int>();
        int nu = doc.at("nu").get<int>();
        if (d < 1 || nu < 1 || d > 8 || nu > 4096)
            throw Error(ErrorCode::ParseError, "d and nu must be small positive integers");
        CrystalSpec spec = make_spec(d, nu, doc.value("label", std::string("json crystal")));
        spec.Q = doc.at("Q").get<std::vector<double>>();
        for (const auto& f : doc.at("weights")) {
            int i = f.at("i").get<int>();
            int j = f.at("j").get<int>();
            if (i < 0 || j < 0 || i >= nu || j >= nu)
                throw Error(ErrorCode::ParseError, "family index out of range (indices are 0-based)");
            WeightFamily& fam = spec.w(i, j);
            for (const auto& e : f.value("entries", json::array())) {
                Index k;
                if (e.at(0).is_array()) k = e.at(0).get<Index>();
                else k = Index{e.at(0).get<std::int64_t>()};
                fam.entries[k] += e.at(1).get<double>();
            }
            std::vector<json> tails;
            if (f.contains("tail")) tails.push_back(f["tail"]);
            if (f.contains("tails"))
                for (const auto& t : f["tails"]) tails.push_back(t);
            for (const auto& t : tails) {
                bool present = false;
                TailRule r = parse_tail(t, fam.K0, present);
                if (present) fam.tails.push_back(r);
            }
        }
        return spec;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("invalid crystal document: ") + e.what());
    }
}

std::string spec_to_json(const CrystalSpec& spec) {
    json doc;
    doc["d"] = spec.d;
    doc["nu"] = spec.nu;
    doc["Q"] = spec.Q;
    doc["label"] = spec.label;
    json ws = json::array();
    for (int i = 0; i < spec.nu; ++i)
        for (int j = 0; j < spec.nu; ++j) {
            const auto& fam = spec.w(i, j);
            if (fam.entries.empty() && fam.tails.empty()) continue;
            json f;
            f["i"] = i;
            f["j"] = j;
            json entries = json::array();
            for (const auto& [k, w] : fam.entries) entries.push_back(json::array({k, w}));
            f["entries"] = entries;
            if (fam.tails.size() == 1) f["tail"] = tail_json(fam.tails[0], fam.K0);
            else if (fam.tails.size() > 1) {
                json ts = json::array();
                for (const auto& r : fam.tails) ts.push_back(tail_json(r, fam.K0));
                f["tails"] = ts;
            }
            ws.push_back(f);
        }
    doc["weights"] = ws;
    return doc.dump(2);
}

CrystalSpec load_spec(const std::string& source) {
    const std::string prefix = "builtin:";
    if (source.rfind(prefix, 0) == 0) return builtin(source.substr(prefix.size()));
    std::ifstream in(source);
    if (!in) throw Error(ErrorCode::IoError, "cannot read crystal file '" + source + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec_json(ss.str());
}

}  // namespace crystal
