#pragma once

// Command-line front end. Experiments come from a JSON config file,
// command-line flags, or both (flags win). Exit codes: 0 success, 1 a
// hypothesis check failed, 2 bad configuration, 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "impflow/impflow.hpp"

namespace impflow::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kChecksFailed = 1, kConfigFailure = 2, kNumericalFailure = 3 };

inline constexpr const char* kOutputDirEnv = "IMPFLOW_OUTPUT_DIR";

/// "%.12g"
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Value rounded to 12 significant digits for JSON output; null if not finite.
inline json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::strtod(fmt(v).c_str(), nullptr);
}

inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Configuration

struct Config {
    json values = json::object();
    std::string text;  ///< config file contents, for line numbers

    /// 1-based line of the first occurrence of "key" in the file, or 0.
    int line_of(const std::string& key) const {
        const auto pos = text.find('"' + key + '"');
        if (pos == std::string::npos) return 0;
        return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const int line = line_of(key);
        throw ConfigError(line > 0 ? "'" + key + "': " + msg : "--" + key + ": " + msg, line);
    }

    bool has(const std::string& key) const { return values.contains(key); }

    /// Hash of the effective config, output location excluded.
    std::string hash() const {
        json v = values;
        v.erase("out");
        return fnv1a_hex(v.dump());
    }
};

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "command", "example", "system", "mode", "T", "eps", "delta", "samples",
        "seed", "start", "out", "pairs", "pool", "max_chain", "step", "checks"};
    return keys;
}

inline Config load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    Config cfg;
    cfg.text = ss.str();
    try {
        cfg.values = json::parse(cfg.text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, cfg.text.size());
        const int line = 1 + static_cast<int>(std::count(cfg.text.begin(), cfg.text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
        throw ConfigError(std::string("invalid JSON: ") + e.what(), line);
    }
    if (!cfg.values.is_object()) throw ConfigError("config must be a JSON object", 1);
    for (const auto& [key, _] : cfg.values.items()) {
        const auto& k = known_keys();
        if (std::find(k.begin(), k.end(), key) == k.end()) cfg.fail(key, "unknown key");
    }
    return cfg;
}

inline std::vector<double> parse_number_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (item.empty() || used != item.size()) {
            throw ConfigError("--" + key + ": '" + item + "' is not a number");
        }
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("--" + key + ": empty list");
    return out;
}

inline std::vector<double> get_list(const Config& c, const std::string& key) {
    const json& v = c.values.at(key);
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array()) {
        for (const auto& e : v) {
            if (!e.is_number()) c.fail(key, "expected a list of numbers");
            out.push_back(e.get<double>());
        }
    } else {
        c.fail(key, "expected a number or a list of numbers");
    }
    if (out.empty()) c.fail(key, "empty list");
    return out;
}

inline std::vector<double> get_grid(const Config& c, const std::string& key, bool increasing) {
    auto g = get_list(c, key);
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (increasing ? !(g[i] > g[i - 1]) : !(g[i] < g[i - 1])) {
            c.fail(key, increasing ? "must be strictly increasing" : "must be strictly decreasing");
        }
    }
    for (double v : g) {
        if (!(v > 0.0)) c.fail(key, "entries must be positive");
    }
    return g;
}

inline std::string get_string(const Config& c, const std::string& key, const std::string& dflt) {
    if (!c.has(key)) return dflt;
    const json& v = c.values.at(key);
    if (!v.is_string()) c.fail(key, "expected a string");
    return v.get<std::string>();
}

inline std::uint64_t get_uint(const Config& c, const std::string& key, std::uint64_t dflt) {
    if (!c.has(key)) return dflt;
    const json& v = c.values.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) c.fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

/// The example named by "example", or an annulus-family system given inline
/// as {"family": "annulus", "offset": a, "slope": b}.
inline ExampleSpec resolve_system(const Config& c) {
    if (c.has("example") && c.has("system")) c.fail("system", "give either 'example' or 'system', not both");
    if (c.has("system")) {
        const json& s = c.values.at("system");
        if (!s.is_object()) c.fail("system", "expected an object");
        for (const auto& [k, _] : s.items()) {
            if (k != "family" && k != "offset" && k != "slope") c.fail(k, "unknown system key");
        }
        if (!s.contains("family") || s.at("family") != "annulus") c.fail("system", "only the 'annulus' family is supported");
        auto number = [&](const char* k, double dflt) {
            if (!s.contains(k)) return dflt;
            if (!s.at(k).is_number()) c.fail(k, "expected a number");
            return s.at(k).get<double>();
        };
        const double offset = number("offset", 0.5), slope = number("slope", 0.5);
        ExampleSpec ex = build_annulus();
        try {
            ex.system = annulus_family("annulus-family", offset, slope);
        } catch (const DomainError& e) {
            c.fail("system", e.what());
        }
        ex.name = "annulus-family";
        ex.description = "annulus rotation with I(r,0) = (-" + fmt(offset) + " - " + fmt(slope) + " r, 0)";
        ex.facts = {{"lipschitz", slope, 1e-9, FactOrigin::closed_form, "slope of I"},
                    {"gap_a", 1.0 + offset + slope, 1e-6, FactOrigin::derived, "dist(D, I(D))"}};
        return ex;
    }
    const std::string name = get_string(c, "example", "");
    if (name.empty()) c.fail("example", "no system given (use --example or a 'system' object)");
    try {
        return build_example(name);
    } catch (const DomainError& e) {
        c.fail("example", e.what());
    }
}

// ---------------------------------------------------------------------------
// Commands

struct Run {
    Config cfg;
    std::filesystem::path out_dir;
    std::uint64_t seed = 0;
    std::ostream* out = &std::cout;

    std::string banner() const {
        return std::string("# impflow ") + kVersion + " config=" + cfg.hash() + " seed=" + std::to_string(seed);
    }

    json stamp() const {
        return json{{"version", kVersion}, {"config_hash", cfg.hash()}, {"seed", seed}};
    }

    std::ofstream open(const std::string& file) const {
        std::filesystem::create_directories(out_dir);
        std::ofstream f(out_dir / file, std::ios::binary);
        if (!f) throw ConfigError("cannot write '" + (out_dir / file).string() + "'");
        *out << "wrote " << (out_dir / file).string() << '\n';
        return f;
    }
};

inline std::string coords_csv(const Point& p) {
    std::string s;
    for (std::size_t i = 0; i < p.dim(); ++i) s += (i ? "," : "") + fmt(p[i]);
    return s;
}

inline int cmd_simulate(Run& r) {
    const auto ex = resolve_system(r.cfg);
    const auto& sys = ex.system;
    if (!r.cfg.has("start")) r.cfg.fail("start", "simulate needs a start point");
    const auto start = get_list(r.cfg, "start");
    if (start.size() != sys.space().dimension()) r.cfg.fail("start", "wrong number of coordinates");
    const Point x = sys.space().point(std::span<const double>(start));
    if (!sys.space().contains(x)) r.cfg.fail("start", "start point lies outside the phase space");
    if (!r.cfg.has("T")) r.cfg.fail("T", "simulate needs a horizon T");
    const auto Ts = get_grid(r.cfg, "T", true);
    if (Ts.size() != 1) r.cfg.fail("T", "simulate takes a single horizon");
    const double T = Ts.front();
    const double step = r.cfg.has("step") ? get_grid(r.cfg, "step", true).front() : 0.01;

    const auto orbit = impulsive_orbit(sys, x, T);
    auto f = r.open("orbit.csv");
    f << r.banner() << '\n';
    f << "t";
    for (std::size_t i = 0; i < x.dim(); ++i) f << ",x" << i;
    f << ",kind\n";
    const auto& jumps = orbit.impulse_times();
    std::size_t next_jump = 0;
    for (double t : time_grid(T, step)) {
        while (next_jump < jumps.size() && jumps[next_jump] <= t) {
            const double tj = jumps[next_jump];
            f << fmt(tj) << ',' << coords_csv(orbit.pre_jump(next_jump)) << ",left_limit\n";
            f << fmt(tj) << ',' << coords_csv(orbit.at(tj)) << ",impulse\n";
            ++next_jump;
        }
        if (next_jump > 0 && jumps[next_jump - 1] == t) continue;
        f << fmt(t) << ',' << coords_csv(orbit.at(t)) << ",flow\n";
    }
    *r.out << "impulses: " << jumps.size() << '\n';
    return kOk;
}

inline int cmd_entropy(Run& r) {
    const auto ex = resolve_system(r.cfg);
    const auto& sys = ex.system;
    const std::string mode_s = get_string(r.cfg, "mode", "classical");
    if (mode_s != "classical" && mode_s != "tau") r.cfg.fail("mode", "expected 'classical' or 'tau'");
    const EntropyMode mode = mode_s == "tau" ? EntropyMode::tau : EntropyMode::classical;
    if (!r.cfg.has("T")) r.cfg.fail("T", "entropy needs a T grid");
    const auto T_grid = get_grid(r.cfg, "T", true);
    if (T_grid.size() < 4) r.cfg.fail("T", "need at least 4 horizons");
    const auto eps = r.cfg.has("eps") ? get_grid(r.cfg, "eps", false) : std::vector<double>{0.1};
    std::vector<double> deltas{0.0};
    SequenceBuilder builder;
    if (mode == EntropyMode::tau) {
        deltas = r.cfg.has("delta") ? get_grid(r.cfg, "delta", false) : std::vector<double>{0.2};
        double eta = kInf;
        if (sys.has_impulses()) {
            builder = impulse_builder(sys);
            eta = sys.eta();
        } else if (ex.section) {
            builder = section_builder(sys.flow_ptr(), *ex.section, ex.section_eta);
            eta = ex.section_eta;
        } else {
            r.cfg.fail("mode", "system has neither impulses nor a cross-section");
        }
        if (!(deltas.front() < eta / 2.0)) r.cfg.fail("delta", "delta must stay below eta/2 = " + fmt(eta / 2.0));
    }
    const auto n = get_uint(r.cfg, "samples", default_sample_size(ex.name));
    if (n < 1) r.cfg.fail("samples", "need at least one sample");

    const auto points = ex.sample(n, r.seed);
    const auto dyn = Dynamics::of(sys);
    const auto sweep = entropy_sweep(dyn, points, T_grid, eps, deltas, mode,
                                     mode == EntropyMode::tau ? &builder : nullptr);

    auto csv = r.open("entropy_sweep.csv");
    csv << r.banner() << '\n' << "mode,T,eps,delta,count,slope_so_far\n";
    json cells = json::array();
    for (const auto& c : sweep.cells) {
        GrowthEstimate partial = c;
        for (std::size_t i = 0; i < c.counts.size(); ++i) {
            partial.counts.assign(c.counts.begin(), c.counts.begin() + static_cast<std::ptrdiff_t>(i + 1));
            fit_growth(partial);
            csv << to_string(c.mode) << ',' << fmt(c.counts[i].first) << ',' << fmt(c.epsilon) << ','
                << fmt(c.delta) << ',' << c.counts[i].second << ',' << fmt(partial.slope) << '\n';
        }
        json counts = json::array();
        for (const auto& [T, k] : c.counts) counts.push_back({{"T", num(T)}, {"count", k}});
        json res = json::array();
        for (double v : c.residuals) res.push_back(num(v));
        cells.push_back({{"eps", num(c.epsilon)}, {"delta", num(c.delta)}, {"grid_step", num(c.grid_step)},
                         {"slope", num(c.slope)}, {"intercept", num(c.intercept)}, {"residuals", res},
                         {"counts", counts}, {"degenerate", c.degenerate}, {"saturated", c.saturated},
                         {"monotone_in_T", c.monotone}});
    }
    json flags = json::array({sweep.stable ? "stable" : "unstable"});
    if (sweep.saturated) flags.push_back("saturated");
    if (!sweep.eps_monotone) flags.push_back("eps_nonmonotone");
    if (!sweep.delta_monotone) flags.push_back("delta_nonmonotone");
    json summary = r.stamp();
    summary["example"] = ex.name;
    summary["mode"] = mode_s;
    summary["sample_size"] = points.size();
    summary["h_estimate"] = num(sweep.h_estimate);
    summary["flag"] = sweep.stable ? "stable" : "unstable";
    summary["flags"] = flags;
    summary["eps_monotone"] = sweep.eps_monotone;
    summary["delta_monotone"] = sweep.delta_monotone;
    summary["cells"] = cells;
    r.open("entropy_summary.json") << summary.dump(2) << '\n';
    *r.out << "h_estimate " << fmt(sweep.h_estimate) << ' ' << summary["flag"].get<std::string>() << '\n';
    return kOk;
}

inline int cmd_check(Run& r) {
    const auto ex = resolve_system(r.cfg);
    const auto n = get_uint(r.cfg, "checks", 64);
    if (n < 2) r.cfg.fail("checks", "need at least 2 samples");
    const auto rep = check_conditions(ex.system, n, r.seed);
    json items = json::array();
    for (const auto& it : rep.items) {
        items.push_back({{"id", it.id}, {"description", it.description}, {"status", to_string(it.status)},
                         {"measured", num(it.measured)}, {"witness", it.witness}});
        *r.out << to_string(it.status) << ' ' << it.id << ' ' << fmt(it.measured)
               << (it.witness.empty() ? "" : "  " + it.witness) << '\n';
    }
    json j = r.stamp();
    j["example"] = ex.name;
    j["a"] = num(rep.gap_a);
    j["lipschitz"] = num(rep.lipschitz);
    j["all_passed"] = rep.all_passed();
    j["items"] = items;
    r.open("check_report.json") << j.dump(2) << '\n';
    return rep.all_passed() ? kOk : kChecksFailed;
}

inline int cmd_quotient(Run& r) {
    const auto ex = resolve_system(r.cfg);
    const auto& sys = ex.system;
    const auto pairs = get_uint(r.cfg, "pairs", 100);
    const auto pool_n = get_uint(r.cfg, "pool", 200);
    const auto max_chain = get_uint(r.cfg, "max_chain", 3);
    if (max_chain < 1) r.cfg.fail("max_chain", "must be at least 1");

    const auto pts = glued_mixture(sys, 2 * pairs, r.seed);
    const std::size_t n_d = sys.d_set().param ? pool_n / 4 : 0;
    const auto pool = chain_pool(sys, pool_n - n_d, n_d, r.seed + 1);
    std::vector<EquivClass> pool_classes;
    for (const auto& p : pool) pool_classes.push_back(class_of(sys, p));

    auto f = r.open("quotient_distances.csv");
    f << r.banner() << '\n' << "pair";
    for (const char* who : {"p", "q"}) {
        for (std::size_t i = 0; i < sys.space().dimension(); ++i) f << ',' << who << i;
    }
    f << ",d,d_tilde,chain_d_tilde\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const Point& p = pts[2 * i];
        const Point& q = pts[2 * i + 1];
        const auto a = project(sys, p), b = project(sys, q);
        const double dt = quotient_dist(sys, a, b);
        const double dc = quotient_dist_chain(sys, a, b, max_chain, std::span<const EquivClass>(pool_classes));
        worst = std::max(worst, dt - dc);
        f << i << ',' << coords_csv(p) << ',' << coords_csv(q) << ',' << fmt(sys.space().dist(p, q)) << ','
          << fmt(dt) << ',' << fmt(dc) << '\n';
    }
    *r.out << "max(d_tilde - chain_d_tilde) " << fmt(worst) << '\n';
    return kOk;
}

inline int cmd_example(Run& r, const std::vector<std::string>& args) {
    if (args.empty() || args.front() == "list") {
        for (const auto& name : example_names()) {
            *r.out << name << "  " << build_example(name).description << '\n';
        }
        return kOk;
    }
    if (args.front() != "describe" || args.size() != 2) {
        throw ConfigError("usage: example list | example describe <name>");
    }
    ExampleSpec ex = [&] {
        try {
            return build_example(args[1]);
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    }();
    const auto& k = ex.system.constants();
    *r.out << ex.name << ": " << ex.description << '\n'
           << "constants: xi0=" << fmt(k.xi0) << " eta=" << fmt(k.eta) << " a=" << fmt(k.a)
           << " s0=" << fmt(k.s0) << " xi=" << fmt(k.xi) << '\n'
           << "fact,value,tolerance,origin,note\n";
    for (const auto& f : ex.facts) {
        *r.out << f.name << ',' << fmt(f.value) << ',' << fmt(f.tolerance) << ',' << to_string(f.origin)
               << ',' << f.note << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------------------

/// Parses argv and runs one experiment. Messages go to `out`/`err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"impulsive semiflows: simulation, entropy estimates, quotient checks"};
    app.fallthrough();
    app.require_subcommand(0, 1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON experiment config");
    std::string top_out;
    app.add_option("--out", top_out, "output directory");

    std::map<std::string, std::string> flags;
    auto add_flags = [&](CLI::App* sub, std::initializer_list<const char*> names) {
        for (const char* nm : names) {
            sub->add_option(std::string("--") + nm, flags[nm]);
        }
    };
    auto* sim = app.add_subcommand("simulate", "write one impulsive orbit");
    add_flags(sim, {"example", "start", "T", "step", "seed", "out"});
    auto* ent = app.add_subcommand("entropy", "separated-set entropy sweep");
    add_flags(ent, {"example", "mode", "T", "eps", "delta", "samples", "seed", "out"});
    auto* chk = app.add_subcommand("check", "hypothesis checks");
    add_flags(chk, {"example", "checks", "seed", "out"});
    auto* quo = app.add_subcommand("quotient", "quotient distance tables");
    add_flags(quo, {"example", "pairs", "pool", "max_chain", "seed", "out"});
    auto* exm = app.add_subcommand("example", "list or describe built-in examples");
    std::vector<std::string> example_args;
    exm->add_option("args", example_args, "list | describe <name>");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigFailure;
    }

    Run r;
    r.out = &out;
    try {
        if (!config_path.empty()) r.cfg = load_config_file(config_path);
        std::string command = get_string(r.cfg, "command", "");
        for (auto* sub : {sim, ent, chk, quo, exm}) {
            if (sub->parsed()) command = sub->get_name();
        }
        if (command.empty()) throw ConfigError("no command given");
        r.cfg.values["command"] = command;

        for (const auto& [key, value] : flags) {
            if (value.empty()) continue;
            if (key == "example" || key == "mode" || key == "out") {
                r.cfg.values[key] = value;
            } else if (key == "seed" || key == "samples" || key == "pairs" || key == "pool" ||
                       key == "max_chain" || key == "checks") {
                const auto v = parse_number_list(key, value);
                if (v.size() != 1 || v[0] < 0 || v[0] != std::floor(v[0])) {
                    throw ConfigError("--" + key + ": expected a non-negative integer");
                }
                r.cfg.values[key] = static_cast<std::uint64_t>(v[0]);
            } else {
                r.cfg.values[key] = parse_number_list(key, value);
            }
        }
        if (flags["out"].empty() && !top_out.empty()) r.cfg.values["out"] = top_out;
        r.seed = get_uint(r.cfg, "seed", 0);
        if (r.cfg.has("out")) {
            r.out_dir = get_string(r.cfg, "out", ".");
        } else if (const char* env = std::getenv(kOutputDirEnv)) {
            r.out_dir = env;
        } else {
            r.out_dir = ".";
        }

        if (command == "simulate") return cmd_simulate(r);
        if (command == "entropy") return cmd_entropy(r);
        if (command == "check") return cmd_check(r);
        if (command == "quotient") return cmd_quotient(r);
        if (command == "example") return cmd_example(r, example_args);
        r.cfg.fail("command", "unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigFailure;
    } catch (const GrazingError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const Error& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumericalFailure;
    }
}

}  // namespace impflow::cli
