#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bethe/density.hpp"
#include "bethe/disorder.hpp"
#include "bethe/errors.hpp"
#include "bethe/population.hpp"
#include "bethe/properties.hpp"
#include "bethe/spectra.hpp"

#ifndef BETHE_VERSION
#define BETHE_VERSION "0.1.0"
#endif

namespace bethe::cli {

inline const char* version_string() { return "bethe " BETHE_VERSION; }

enum class Command { solve, sweep, certify, validate, oracle_compare };

inline std::optional<Command> parse_command(const std::string& s) {
    if (s == "solve") return Command::solve;
    if (s == "sweep") return Command::sweep;
    if (s == "certify") return Command::certify;
    if (s == "validate") return Command::validate;
    if (s == "oracle-compare") return Command::oracle_compare;
    return std::nullopt;
}

inline std::string to_string(Command c) {
    switch (c) {
    case Command::solve: return "solve";
    case Command::sweep: return "sweep";
    case Command::certify: return "certify";
    case Command::validate: return "validate";
    case Command::oracle_compare: return "oracle-compare";
    }
    return "?";
}

/// Raw value plus where it came from ("run.ini:12", "env BETHE_SEED", "flag --seed").
struct Setting {
    std::string value;
    std::string origin;
};

using Settings = std::map<std::string, Setting>;

struct KeySpec {
    const char* key;
    const char* fallback;  // nullptr: mandatory
    const char* help;
};

/// Every recognised key, as section.name, with its default.
inline const std::vector<KeySpec>& known_keys() {
    static const std::vector<KeySpec> keys = {
        {"run.seed", nullptr, "u64 seed (mandatory)"},
        {"run.out", "", "output path; stdout when empty"},
        {"run.workers", "0", "threads; 0 = available parallelism"},
        {"run.format", "auto", "csv | json | auto (csv for sweep and certify)"},
        {"physics.K", "2", "branching number, degree K+1"},
        {"physics.E", "0", "energies: list 'a, b, c' or range 'min:max:step'"},
        {"physics.beta", "0.05", "disorder strengths, list"},
        {"physics.eta", "schedule", "'schedule' or a fixed eta > 0"},
        {"physics.eps", "0.1", "phase classification margin around |E| = K+1"},
        {"law.kind", "uniform", "uniform | uniform-matched | gaussian | table"},
        {"law.L", "2", "regularity constant L >= 1"},
        {"law.table", "", "two-column (x weight) file for kind = table"},
        {"solver.pool_size", "100000", "population size N >= 1000"},
        {"solver.max_generations", "500", "generation cap"},
        {"solver.convergence_tol", "0.005", "lagged KS tolerance"},
        {"solver.replicas", "4", "independent pools per Lyapunov estimate"},
        {"solver.measure_generations", "100", "generations averaged after convergence"},
        {"density.grid_points", "16384", "grid size (power of two)"},
        {"density.max_steps", "300", "density iteration cap"},
        {"density.tol", "1e-7", "L1 change per step at convergence"},
        {"certify.steps", "200", "tail induction steps"},
        {"certify.t_scan", "false", "scan t = t0 2^k for a closing certificate"},
        {"oracle.depth", "12", "finite tree depth n"},
        {"oracle.replicas", "100000", "finite tree replicas m"},
        {"validate.tol", "0.01", "hypothesis tolerance in (0, 0.1]"},
        {"validate.trials", "100000", "random tuples per inequality"},
    };
    return keys;
}

inline const KeySpec* find_key(const std::string& key) {
    for (const auto& k : known_keys())
        if (key == k.key) return &k;
    return nullptr;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

inline void put(Settings& settings, const std::string& key, std::string value, std::string origin) {
    if (!find_key(key)) throw ConfigError(origin + ": unknown key '" + key + "'");
    settings[key] = {std::move(value), std::move(origin)};
}

}  // namespace detail

/// Parses "key = value" lines grouped under [section] headers. '#' and ';'
/// start comments. Errors name the file and line.
inline Settings parse_ini(std::istream& in, const std::string& name) {
    Settings out;
    std::string line, section;
    int lineno = 0;
    std::map<std::string, int> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = name + ":" + std::to_string(lineno);
        const auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line.erase(cut);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string k = detail::trim(line.substr(0, eq));
        const std::string v = detail::trim(line.substr(eq + 1));
        if (k.empty()) throw ConfigError(where + ": missing key");
        const std::string key = (section.empty() ? "run" : section) + "." + k;
        if (auto it = seen.find(key); it != seen.end())
            throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " +
                              std::to_string(it->second) + ")");
        seen[key] = lineno;
        detail::put(out, key, v, where);
    }
    return out;
}

inline Settings load_ini(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    return parse_ini(in, path);
}

/// BETHE_<SECTION>_<KEY> -> section.key (BETHE_SEED etc. -> run.seed).
/// Matching is case-insensitive against the known keys.
inline Settings environment_settings(const std::map<std::string, std::string>& env) {
    Settings out;
    const std::string prefix = "BETHE_";
    for (const auto& [name, value] : env) {
        if (name.rfind(prefix, 0) != 0) continue;
        std::string rest = name.substr(prefix.size());
        std::string lower;
        for (char c : rest) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        const KeySpec* match = nullptr;
        for (const auto& k : known_keys()) {
            std::string full = k.key, flat;
            for (char c : full) flat += c == '.' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            std::string shortname = full.substr(full.find('.') + 1);
            for (char& c : shortname) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (lower == flat || (full.rfind("run.", 0) == 0 && lower == shortname)) match = &k;
        }
        if (!match) throw ConfigError("env " + name + ": unknown setting");
        out[match->key] = {value, "env " + name};
    }
    return out;
}

inline std::map<std::string, std::string> read_environment(char** envp) {
    std::map<std::string, std::string> env;
    for (char** e = envp; e && *e; ++e) {
        std::string kv = *e;
        const auto eq = kv.find('=');
        if (eq != std::string::npos) env[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return env;
}

/// Later layers win: file < environment < flags.
inline Settings merge(std::initializer_list<const Settings*> layers) {
    Settings out;
    for (const Settings* l : layers)
        for (const auto& [k, v] : *l) out[k] = v;
    return out;
}

struct LawSpec {
    std::string kind = "uniform";
    double L = 2.0;
    std::string table;
};

inline DisorderLaw make_law(const LawSpec& spec, double beta) {
    if (beta == 0.0) return DisorderLaw::point_mass(0.0, 0.0);
    if (spec.kind == "uniform") return DisorderLaw::uniform(beta, spec.L);
    if (spec.kind == "uniform-matched")
        return DisorderLaw::uniform(beta, spec.L, UniformScaling::moment_matched);
    if (spec.kind == "gaussian") return DisorderLaw::gaussian(beta, spec.L);
    if (spec.kind == "table") return DisorderLaw::load_table(spec.table, beta, spec.L);
    throw ConfigError("unknown law kind '" + spec.kind + "'");
}

struct RunConfig {
    Command command = Command::solve;
    std::uint64_t seed = 0;
    std::string out;
    unsigned workers = 1;
    std::string format = "json";
    int K = 2;
    std::vector<double> energies{0.0};
    std::vector<double> betas{0.05};
    /// empty: eta schedule with extrapolation
    std::optional<double> eta;
    double eps = 0.1;
    LawSpec law;
    std::size_t pool_size = 100000;
    int max_generations = 500;
    double convergence_tol = 0.005;
    int replicas = 4;
    int measure_generations = 100;
    std::size_t grid_points = 16384;
    int density_max_steps = 300;
    double density_tol = 1e-7;
    int certify_steps = 200;
    bool t_scan = false;
    int tree_depth = 12;
    std::size_t tree_replicas = 100000;
    double validate_tol = 0.01;
    std::size_t validate_trials = 100000;
};

namespace detail {

template <typename T>
T parse_number(const Setting& s, const std::string& key) {
    const std::string v = trim(s.value);
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
        try {
            std::size_t used = 0;
            out = static_cast<T>(std::stod(v, &used));
            if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            throw ConfigError(s.origin + ": " + key + " expects a number, got '" + v + "'");
        }
        if (!std::isfinite(out)) throw ConfigError(s.origin + ": " + key + " must be finite");
    } else {
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size())
            throw ConfigError(s.origin + ": " + key + " expects an integer, got '" + v + "'");
    }
    return out;
}

inline bool parse_bool(const Setting& s, const std::string& key) {
    const std::string v = trim(s.value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(s.origin + ": " + key + " expects true or false, got '" + v + "'");
}

inline std::vector<double> parse_list(const Setting& s, const std::string& key) {
    std::vector<double> out;
    for (const auto& item : split(s.value, ','))
        out.push_back(parse_number<double>({item, s.origin}, key));
    if (out.empty()) throw ConfigError(s.origin + ": " + key + " is empty");
    return out;
}

/// "a, b, c" or "min:max:step" (inclusive, step > 0).
inline std::vector<double> parse_energies(const Setting& s, const std::string& key) {
    if (s.value.find(':') == std::string::npos) return parse_list(s, key);
    const auto parts = split(s.value, ':');
    if (parts.size() != 3) throw ConfigError(s.origin + ": " + key + " range must be min:max:step");
    const double lo = parse_number<double>({parts[0], s.origin}, key);
    const double hi = parse_number<double>({parts[1], s.origin}, key);
    const double step = parse_number<double>({parts[2], s.origin}, key);
    if (!(step > 0.0) || hi < lo) throw ConfigError(s.origin + ": " + key + " needs min <= max and step > 0");
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    if (count > 100000) throw ConfigError(s.origin + ": " + key + " range has too many points");
    std::vector<double> out;
    for (long i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

}  // namespace detail

/// Types and validates the merged settings. Every error names the origin of
/// the offending value.
inline RunConfig resolve(Command command, const Settings& raw) {
    using detail::parse_number;
    Settings s = raw;
    for (const auto& k : known_keys()) {
        if (s.count(k.key)) continue;
        if (!k.fallback)
            throw ConfigError(std::string("missing mandatory setting '") + k.key +
                              "' (config key, BETHE_SEED or --seed)");
        s[k.key] = {k.fallback, "default"};
    }
    auto get = [&](const char* k) -> const Setting& { return s.at(k); };
    auto fail = [&](const char* k, const std::string& msg) {
        throw ConfigError(get(k).origin + ": " + k + " " + msg);
    };
    RunConfig c;
    c.command = command;
    c.seed = parse_number<std::uint64_t>(get("run.seed"), "run.seed");
    c.out = detail::trim(get("run.out").value);
    const int workers = parse_number<int>(get("run.workers"), "run.workers");
    if (workers < 0) fail("run.workers", "must be >= 0");
    c.workers = workers == 0 ? default_workers() : static_cast<unsigned>(workers);
    c.format = detail::trim(get("run.format").value);
    if (c.format == "auto")
        c.format = command == Command::sweep || command == Command::certify ? "csv" : "json";
    if (c.format != "csv" && c.format != "json") fail("run.format", "must be csv, json or auto");

    c.K = parse_number<int>(get("physics.K"), "physics.K");
    if (c.K < 2) fail("physics.K", "must be >= 2");
    c.energies = detail::parse_energies(get("physics.E"), "physics.E");
    c.betas = detail::parse_list(get("physics.beta"), "physics.beta");
    for (double b : c.betas)
        if (b < 0.0) fail("physics.beta", "must be >= 0");
    const std::string eta = detail::trim(get("physics.eta").value);
    if (eta != "schedule") {
        c.eta = parse_number<double>(get("physics.eta"), "physics.eta");
        if (!(*c.eta > 0.0)) fail("physics.eta", "must be > 0 or 'schedule'");
    }
    c.eps = parse_number<double>(get("physics.eps"), "physics.eps");
    if (!(c.eps > 0.0)) fail("physics.eps", "must be > 0");

    c.law.kind = detail::trim(get("law.kind").value);
    if (c.law.kind != "uniform" && c.law.kind != "uniform-matched" && c.law.kind != "gaussian" &&
        c.law.kind != "table")
        fail("law.kind", "must be uniform, uniform-matched, gaussian or table");
    c.law.L = parse_number<double>(get("law.L"), "law.L");
    if (!(c.law.L >= 1.0)) fail("law.L", "must be >= 1");
    c.law.table = detail::trim(get("law.table").value);
    if (c.law.kind == "table" && c.law.table.empty()) fail("law.table", "is required for kind = table");

    c.pool_size = parse_number<std::size_t>(get("solver.pool_size"), "solver.pool_size");
    if (c.pool_size < 1000) fail("solver.pool_size", "must be >= 1000");
    c.max_generations = parse_number<int>(get("solver.max_generations"), "solver.max_generations");
    if (c.max_generations < 1) fail("solver.max_generations", "must be >= 1");
    c.convergence_tol = parse_number<double>(get("solver.convergence_tol"), "solver.convergence_tol");
    if (!(c.convergence_tol > 0.0)) fail("solver.convergence_tol", "must be > 0");
    c.replicas = parse_number<int>(get("solver.replicas"), "solver.replicas");
    if (c.replicas < 1) fail("solver.replicas", "must be >= 1");
    c.measure_generations =
        parse_number<int>(get("solver.measure_generations"), "solver.measure_generations");
    if (c.measure_generations < 1) fail("solver.measure_generations", "must be >= 1");

    c.grid_points = parse_number<std::size_t>(get("density.grid_points"), "density.grid_points");
    if (c.grid_points < 16 || (c.grid_points & (c.grid_points - 1)) != 0)
        fail("density.grid_points", "must be a power of two >= 16");
    c.density_max_steps = parse_number<int>(get("density.max_steps"), "density.max_steps");
    if (c.density_max_steps < 1) fail("density.max_steps", "must be >= 1");
    c.density_tol = parse_number<double>(get("density.tol"), "density.tol");
    if (!(c.density_tol > 0.0)) fail("density.tol", "must be > 0");

    c.certify_steps = parse_number<int>(get("certify.steps"), "certify.steps");
    if (c.certify_steps < 1) fail("certify.steps", "must be >= 1");
    c.t_scan = detail::parse_bool(get("certify.t_scan"), "certify.t_scan");

    c.tree_depth = parse_number<int>(get("oracle.depth"), "oracle.depth");
    if (c.tree_depth < 1) fail("oracle.depth", "must be >= 1");
    c.tree_replicas = parse_number<std::size_t>(get("oracle.replicas"), "oracle.replicas");
    if (c.tree_replicas < 1) fail("oracle.replicas", "must be >= 1");

    c.validate_tol = parse_number<double>(get("validate.tol"), "validate.tol");
    if (!(c.validate_tol > 0.0 && c.validate_tol <= 0.1)) fail("validate.tol", "must be in (0, 0.1]");
    c.validate_trials = parse_number<std::size_t>(get("validate.trials"), "validate.trials");
    if (c.validate_trials < 1) fail("validate.trials", "must be >= 1");

    if (command == Command::solve && (c.energies.size() != 1 || c.betas.size() != 1))
        throw ConfigError("solve takes a single E and a single beta; use sweep for grids");
    return c;
}

namespace detail {
inline std::string num(double x) { return bethe::detail::fmt(x); }
}  // namespace detail

/// Resolved configuration as sorted key = value lines. The worker count is
/// left out: it does not affect results.
inline std::vector<std::pair<std::string, std::string>> canonical(const RunConfig& c) {
    using detail::num;
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
        return s;
    };
    std::vector<std::pair<std::string, std::string>> kv = {
        {"run.command", to_string(c.command)},
        {"run.seed", std::to_string(c.seed)},
        {"run.format", c.format},
        {"physics.K", std::to_string(c.K)},
        {"physics.E", list(c.energies)},
        {"physics.beta", list(c.betas)},
        {"physics.eta", c.eta ? num(*c.eta) : "schedule"},
        {"physics.eps", num(c.eps)},
        {"law.kind", c.law.kind},
        {"law.L", num(c.law.L)},
        {"law.table", c.law.table},
        {"solver.pool_size", std::to_string(c.pool_size)},
        {"solver.max_generations", std::to_string(c.max_generations)},
        {"solver.convergence_tol", num(c.convergence_tol)},
        {"solver.replicas", std::to_string(c.replicas)},
        {"solver.measure_generations", std::to_string(c.measure_generations)},
        {"density.grid_points", std::to_string(c.grid_points)},
        {"density.max_steps", std::to_string(c.density_max_steps)},
        {"density.tol", num(c.density_tol)},
        {"certify.steps", std::to_string(c.certify_steps)},
        {"certify.t_scan", c.t_scan ? "true" : "false"},
        {"oracle.depth", std::to_string(c.tree_depth)},
        {"oracle.replicas", std::to_string(c.tree_replicas)},
        {"validate.tol", num(c.validate_tol)},
        {"validate.trials", std::to_string(c.validate_trials)},
    };
    std::sort(kv.begin(), kv.end());
    return kv;
}

/// 64-bit FNV-1a of the canonical configuration text.
inline std::uint64_t config_hash(const RunConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [k, v] : canonical(c)) {
        for (char ch : k + " = " + v + "\n") {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

/// Header block shared by every artifact.
inline nlohmann::ordered_json provenance(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["version"] = version_string();
    j["config_hash"] = hash_hex(config_hash(c));
    j["seed"] = c.seed;
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : canonical(c)) cfg[k] = v;
    j["config"] = cfg;
    return j;
}

inline std::string csv_preamble(const RunConfig& c) {
    std::ostringstream os;
    os << "# " << version_string() << "\n";
    os << "# config_hash = " << hash_hex(config_hash(c)) << "\n";
    for (const auto& [k, v] : canonical(c)) os << "# " << k << " = " << v << "\n";
    return os.str();
}

inline std::uint64_t point_seed(std::uint64_t seed, std::size_t index) {
    return index == 0 ? seed : mix64(seed + 0x9E3779B97F4A7C15ull * index);
}

/// Runs body(i) for i in [0, n) on `workers` threads taking indices from a
/// shared counter. Results are stored by index, so completion order is irrelevant.
template <typename Fn>
void for_each_point(std::size_t n, unsigned workers, Fn&& body) {
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        for (std::size_t i = next++; i < n; i = next++) body(i);
    };
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
    if (threads <= 1) {
        drain();
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                drain();
            } catch (...) {
                errors[t] = std::current_exception();
                next = n;
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline SolveOptions solve_options(const RunConfig& c, std::uint64_t seed, unsigned workers) {
    SolveOptions o;
    o.pool_size = c.pool_size;
    o.max_generations = c.max_generations;
    o.convergence_tol = c.convergence_tol;
    o.seed = seed;
    o.workers = workers;
    o.estimator.replicas = c.replicas;
    o.estimator.measure_generations = c.measure_generations;
    o.eta = c.eta;
    o.eps = c.eps;
    return o;
}

inline std::string run_solve_like(const RunConfig& c) {
    std::vector<std::pair<double, double>> points;
    for (double b : c.betas)
        for (double E : c.energies) points.emplace_back(E, b);
    std::vector<SpectralReport> reports(points.size());
    // One point: parallelize inside the solver. Many points: one point per thread.
    const bool inner = points.size() == 1;
    for_each_point(points.size(), inner ? 1u : c.workers, [&](std::size_t i) {
        const auto [E, b] = points[i];
        reports[i] = solve_point(E, c.K, make_law(c.law, b),
                                 solve_options(c, point_seed(c.seed, i), inner ? c.workers : 1u));
    });
    if (c.format == "json") {
        nlohmann::ordered_json j = provenance(c);
        if (c.command == Command::solve) {
            j["report"] = to_json(reports.front());
        } else {
            auto& arr = j["reports"] = nlohmann::ordered_json::array();
            for (const auto& r : reports) arr.push_back(to_json(r));
        }
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    os << csv_preamble(c);
    const auto& cols = report_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    for (const auto& r : reports) os << report_csv_row(r) << "\n";
    return os.str();
}

inline std::string run_certify(const RunConfig& c) {
    struct Row {
        double E, beta, eta;
        std::string status;
        TailCertificate cert;
    };
    std::vector<Row> rows;
    const double edge = 2.0 * std::sqrt(static_cast<double>(c.K));
    for (double b : c.betas) {
        if (!(b < 1.0)) throw ConfigError("certify requires beta < 1");
        for (double E : c.energies) {
            const double eta = c.eta.value_or(eta_schedule(b).back());
            Row row{E, b, eta, "", {}};
            if (std::abs(E) < edge * (1.0 - 1e-12)) {
                row.status = "not_hyperbolic";
            } else {
                const DisorderLaw law = make_law(c.law, b);
                const EnergyPoint ep(E, eta, c.K);
                const TailBound nu = law_tail(law), et = cauchy_tail(eta);
                row.cert = c.t_scan ? tail_certify_scan(ep, b, nu, et, c.certify_steps)
                                    : tail_certify(ep, b, nu, et, c.certify_steps);
                row.status = row.cert.closes ? "pass" : (row.cert.breakdown ? "breakdown" : "fail");
            }
            rows.push_back(std::move(row));
        }
    }
    using detail::num;
    if (c.format == "json") {
        nlohmann::ordered_json j = provenance(c);
        auto& arr = j["certificates"] = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            nlohmann::ordered_json e;
            e["E"] = r.E;
            e["beta"] = r.beta;
            e["eta"] = r.eta;
            e["status"] = r.status;
            if (r.status != "not_hyperbolic") {
                e["w"] = r.cert.w;
                e["t"] = r.cert.t;
                e["s0"] = r.cert.s0;
                e["r0"] = r.cert.r0;
                e["nu_tail"] = {{"s", r.cert.nu_tail.s}, {"r", r.cert.nu_tail.r}};
                e["eta_tail"] = {{"s", r.cert.eta_tail.s}, {"r", r.cert.eta_tail.r}};
                e["first_failing_step"] = r.cert.first_failing_step;
                e["failure"] = r.cert.failure;
                e["radius"] = r.cert.concentration_radius;
                if (r.cert.closes) e["bound"] = r.cert.concentration_bound;
                else e["bound"] = nullptr;
                const TailBound& last = r.cert.history.back();
                e["last"] = {{"s", last.s}, {"r", last.r}};
            }
            arr.push_back(e);
        }
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    os << csv_preamble(c);
    os << "E,beta,eta,status,w,t,s0,r0,s_last,r_last,first_failing_step,radius,bound\n";
    for (const auto& r : rows) {
        os << num(r.E) << ',' << num(r.beta) << ',' << num(r.eta) << ',' << r.status;
        if (r.status == "not_hyperbolic") {
            os << ",,,,,,,,,\n";
            continue;
        }
        const TailBound& last = r.cert.history.back();
        os << ',' << num(r.cert.w) << ',' << num(r.cert.t) << ',' << num(r.cert.s0) << ','
           << num(r.cert.r0) << ',' << num(last.s) << ',' << num(last.r) << ','
           << r.cert.first_failing_step << ',' << num(r.cert.concentration_radius) << ','
           << (r.cert.closes ? num(r.cert.concentration_bound) : "nan") << "\n";
    }
    return os.str();
}

inline std::string run_validate(const RunConfig& c) {
    struct Row {
        double beta;
        std::string law;
        ValidationReport rep;
    };
    std::vector<Row> rows;
    for (double b : c.betas) {
        if (!(b > 0.0)) throw ConfigError("validate requires beta > 0");
        const DisorderLaw law = make_law(c.law, b);
        rows.push_back({b, law.describe(), validate(law, c.validate_tol)});
    }
    PropertySuiteOptions popt;
    popt.trials = c.validate_trials;
    popt.seed = c.seed;
    const auto props = run_property_suite(popt);
    using detail::num;
    if (c.format == "json") {
        nlohmann::ordered_json j = provenance(c);
        auto& laws = j["laws"] = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            laws.push_back({{"beta", r.beta},
                            {"law", r.law},
                            {"mean", r.rep.mean},
                            {"fourth_moment", r.rep.fourth_moment},
                            {"regularity_worst_ratio", r.rep.regularity_worst_ratio},
                            {"subcauchy_worst_ratio", r.rep.subcauchy_worst_ratio},
                            {"passes",
                             {{"fourth_moment", r.rep.passes.fourth_moment},
                              {"regularity", r.rep.passes.regularity},
                              {"mean_zero", r.rep.passes.mean_zero},
                              {"subcauchy", r.rep.passes.subcauchy}}}});
        }
        auto& ps = j["properties"] = nlohmann::ordered_json::array();
        for (const auto& p : props)
            ps.push_back({{"name", p.name},
                          {"trials", p.trials},
                          {"violations", p.violations},
                          {"worst_slack", p.worst_slack},
                          {"passed", p.passed()}});
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    os << csv_preamble(c);
    os << "kind,name,value1,value2,value3,value4,passed\n";
    for (const auto& r : rows)
        os << "law," << r.law << ',' << num(r.rep.mean) << ',' << num(r.rep.fourth_moment) << ','
           << num(r.rep.regularity_worst_ratio) << ',' << num(r.rep.subcauchy_worst_ratio) << ','
           << (r.rep.passes.all() ? 1 : 0) << "\n";
    for (const auto& p : props)
        os << "property," << p.name << ',' << p.trials << ',' << p.violations << ','
           << num(p.worst_slack) << ",," << (p.passed() ? 1 : 0) << "\n";
    return os.str();
}

inline std::string run_oracle_compare(const RunConfig& c) {
    struct Row {
        double E, beta, eta;
        double ks_tree = 0.0, ks_band = 0.0;
        double l1_density = std::numeric_limits<double>::quiet_NaN();
        int density_steps = 0;
        bool density_converged = false;
        bool pool_converged = false;
    };
    std::vector<Row> rows;
    for (double b : c.betas) {
        for (double E : c.energies) {
            const double eta = c.eta.value_or(eta_schedule(b).front());
            const DisorderLaw law = make_law(c.law, b);
            IterationConfig cfg{EnergyPoint(E, eta, c.K), law};
            cfg.pool_size = c.pool_size;
            cfg.max_generations = c.max_generations;
            cfg.convergence_tol = c.convergence_tol;
            cfg.seed = point_seed(c.seed, rows.size());
            cfg.workers = c.workers;
            Row row{E, b, eta};
            // generation n - 1 from leaves against the depth-n tree
            MeasurePool pool = init_pool(InitMode::leaf_law(), cfg);
            for (int g = 0; g + 1 < c.tree_depth; ++g) pool = step_pool(pool, cfg);
            const MeasurePool tree = finite_tree_green(c.tree_depth, cfg, c.tree_replicas);
            row.ks_tree = pool_distance(pool, tree);
            row.ks_band = 1.63 / std::sqrt(static_cast<double>(c.pool_size)) +
                          1.63 / std::sqrt(static_cast<double>(c.tree_replicas));
            // projected population fixed point against the density fixed point
            const FixedPointResult fp = run_to_fixed_point(cfg);
            row.pool_converged = fp.converged;
            const GridSpec grid = GridSpec::for_energy(E, c.grid_points);
            const GridDensity projected = cauchy_project(fp.pool, grid, c.workers);
            const DensityFixedPoint dfp =
                density_fixed_point(cauchy_grid(free_green(cfg.energy), grid), law, cfg.energy,
                                    c.density_max_steps, c.density_tol);
            row.l1_density = l1_distance(projected, dfp.density);
            row.density_steps = dfp.steps;
            row.density_converged = dfp.converged;
            rows.push_back(row);
        }
    }
    using detail::num;
    if (c.format == "json") {
        nlohmann::ordered_json j = provenance(c);
        auto& arr = j["comparisons"] = nlohmann::ordered_json::array();
        for (const auto& r : rows)
            arr.push_back({{"E", r.E},
                           {"beta", r.beta},
                           {"eta", r.eta},
                           {"ks_population_vs_tree", r.ks_tree},
                           {"ks_band_99", r.ks_band},
                           {"l1_population_vs_density", r.l1_density},
                           {"density_steps", r.density_steps},
                           {"density_status", r.density_converged ? "converged" : "unconverged"},
                           {"population_status", r.pool_converged ? "converged" : "unconverged"}});
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    os << csv_preamble(c);
    os << "E,beta,eta,ks_population_vs_tree,ks_band_99,l1_population_vs_density,density_steps,"
          "density_status,population_status\n";
    for (const auto& r : rows)
        os << num(r.E) << ',' << num(r.beta) << ',' << num(r.eta) << ',' << num(r.ks_tree) << ','
           << num(r.ks_band) << ',' << num(r.l1_density) << ',' << r.density_steps << ','
           << (r.density_converged ? "converged" : "unconverged") << ','
           << (r.pool_converged ? "converged" : "unconverged") << "\n";
    return os.str();
}

/// Produces the artifact text for a resolved configuration.
inline std::string render(const RunConfig& c) {
    switch (c.command) {
    case Command::solve:
    case Command::sweep: return run_solve_like(c);
    case Command::certify: return run_certify(c);
    case Command::validate: return run_validate(c);
    case Command::oracle_compare: return run_oracle_compare(c);
    }
    throw std::logic_error("unhandled command");
}

/// Renders and writes to c.out (stdout when empty).
inline void run(const RunConfig& c, std::ostream& stdout_stream) {
    const std::string text = render(c);
    if (c.out.empty()) {
        stdout_stream << text;
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file '" + c.out + "'");
    f << text;
    if (!f) throw std::runtime_error("failed writing '" + c.out + "'");
}

}  // namespace bethe::cli
