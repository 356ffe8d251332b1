#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kirchhoff/branch.hpp"
#include "kirchhoff/error.hpp"
#include "kirchhoff/grid.hpp"
#include "kirchhoff/sublinear.hpp"

namespace kirchhoff {

/// Flat sectioned key-value file:
///
///   # comment
///   [section]
///   key = value
///
/// Keys are addressed as "section.key". Keys before any section header live
/// in the unnamed section and are addressed by their bare name.
class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& in, const std::string& origin = "<config>") {
        KeyValueFile kv;
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find_first_of("#;");
            if (hash != std::string::npos && (hash == 0 || std::isspace(static_cast<unsigned char>(line[hash - 1])))) {
                line.erase(hash);
            }
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                detail::require(line.back() == ']', ErrorCode::InvalidConfig,
                                origin + ":" + std::to_string(lineno) + ": malformed section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            detail::require(eq != std::string::npos, ErrorCode::InvalidConfig,
                            origin + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            detail::require(!key.empty(), ErrorCode::InvalidConfig,
                            origin + ":" + std::to_string(lineno) + ": empty key");
            const std::string full = section.empty() ? key : section + "." + key;
            detail::require(!kv.values_.count(full), ErrorCode::InvalidConfig,
                            origin + ":" + std::to_string(lineno) + ": duplicate key " + full);
            kv.values_[full] = trim(line.substr(eq + 1));
        }
        return kv;
    }

    static KeyValueFile parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        const auto it = values_.find(key);
        detail::require(it != values_.end(), ErrorCode::InvalidConfig, "missing config key " + key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? to_double(key, require_string(key)) : fallback;
    }

    double require_double(const std::string& key) const { return to_double(key, require_string(key)); }

    long get_int(const std::string& key, long fallback) const {
        if (!has(key)) return fallback;
        const std::string v = require_string(key);
        char* end = nullptr;
        const long out = std::strtol(v.c_str(), &end, 10);
        detail::require(end != v.c_str() && *end == '\0', ErrorCode::InvalidConfig,
                        "config key " + key + " expects an integer, got '" + v + "'");
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Sorted "key=value" lines, independent of comments and layout.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
        return out;
    }

    static std::string trim(const std::string& s) {
        std::size_t a = 0;
        std::size_t b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static std::vector<std::string> split(const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::string cur;
        std::istringstream in(s);
        while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
        return parts;
    }

    static double to_double(const std::string& key, const std::string& v) {
        char* end = nullptr;
        const double out = std::strtod(v.c_str(), &end);
        detail::require(end != v.c_str() && *end == '\0', ErrorCode::InvalidConfig,
                        "config key " + key + " expects a number, got '" + v + "'");
        return out;
    }

private:
    std::map<std::string, std::string> values_;
};

inline std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Numeric columns of a CSV file. Lines that do not parse as numbers (headers)
/// are skipped; every data row must have the same number of columns.
inline std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), ErrorCode::InvalidConfig, "cannot open CSV file " + path.string());
    std::vector<std::vector<double>> columns;
    std::string line;
    while (std::getline(in, line)) {
        line = KeyValueFile::trim(line);
        if (line.empty() || line.front() == '#') continue;
        std::vector<double> row;
        bool numeric = true;
        for (const auto& cell : KeyValueFile::split(line, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric) continue;
        if (columns.empty()) columns.resize(row.size());
        detail::require(row.size() == columns.size(), ErrorCode::InvalidConfig,
                        "inconsistent column count in " + path.string());
        for (std::size_t i = 0; i < row.size(); ++i) columns[i].push_back(row[i]);
    }
    detail::require(!columns.empty(), ErrorCode::InvalidConfig, "no numeric rows in " + path.string());
    return columns;
}

/// Branch description as written in a config: family plus parameters.
struct BranchSpec {
    std::string family = "tan";
    int k = 1;
    double c = 1.0;
    double s = 0.5;
    double a = 1.0;
    double b = 0.0;
    std::filesystem::path table;

    /// "tan:2", "log", "singular:1:0.5", "affine:1:0", "table:path.csv"
    static BranchSpec parse(const std::string& text, const std::filesystem::path& base_dir = {}) {
        const auto parts = KeyValueFile::split(text, ':');
        detail::require(!parts.empty() && !parts[0].empty(), ErrorCode::InvalidConfig, "empty branch specification");
        BranchSpec spec;
        spec.family = parts[0];
        auto num = [&](std::size_t i) {
            detail::require(i < parts.size(), ErrorCode::InvalidConfig, "branch '" + text + "' is missing parameters");
            return KeyValueFile::to_double("branch", parts[i]);
        };
        if (spec.family == "tan") {
            spec.k = static_cast<int>(num(1));
        } else if (spec.family == "log") {
        } else if (spec.family == "singular") {
            spec.c = num(1);
            spec.s = num(2);
        } else if (spec.family == "affine") {
            spec.a = num(1);
            spec.b = num(2);
        } else if (spec.family == "table") {
            detail::require(parts.size() >= 2, ErrorCode::InvalidConfig, "table branch needs a file path");
            std::string path = parts[1];
            for (std::size_t i = 2; i < parts.size(); ++i) path += ":" + parts[i];
            spec.table = base_dir.empty() ? std::filesystem::path(path) : base_dir / path;
        } else {
            detail::fail(ErrorCode::InvalidConfig, "unknown branch family '" + spec.family + "'");
        }
        return spec;
    }

    KirchhoffBranch build() const {
        try {
            if (family == "tan") return KirchhoffBranch::tan(k);
            if (family == "log") return KirchhoffBranch::log();
            if (family == "singular") return KirchhoffBranch::singular_power(c, s);
            if (family == "affine") return KirchhoffBranch::affine(a, b);
            if (family == "table") {
                auto cols = read_numeric_csv(table);
                detail::require(cols.size() >= 2, ErrorCode::InvalidConfig, "branch table needs columns t,K");
                return KirchhoffBranch::table(std::move(cols[0]), std::move(cols[1]));
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InvalidArgument) detail::fail(ErrorCode::InvalidConfig, e.what());
            throw;
        }
        detail::fail(ErrorCode::InvalidConfig, "unknown branch family '" + family + "'");
    }
};

struct CoefficientSpec {
    std::string kind = "constant";  // constant | linear-ramp | checkerboard | csv
    double value = 1.0;
    double base = 1.0;
    double slope = 1.0;
    double low = 1.0;
    double high = 2.0;
    int cells = 2;
    std::filesystem::path file;

    Coefficient build(const DiscreteLaplacian& op) const {
        try {
            if (kind == "constant") return Coefficient::constant(op, value);
            if (kind == "linear-ramp") return Coefficient::linear_ramp(op, base, slope);
            if (kind == "checkerboard") return Coefficient::checkerboard(op, low, high, cells);
            if (kind == "csv") {
                const auto cols = read_numeric_csv(file);
                detail::require(cols.back().size() == op.node_count(), ErrorCode::InvalidConfig,
                                "alpha CSV has " + std::to_string(cols.back().size()) + " rows, grid has " +
                                    std::to_string(op.node_count()) + " nodes");
                return Coefficient::from_values(op, GridFunction(op.spec(), cols.back()));
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::DimensionMismatch) {
                detail::fail(ErrorCode::InvalidConfig, e.what());
            }
            throw;
        }
        detail::fail(ErrorCode::InvalidConfig, "unknown alpha kind '" + kind + "'");
    }
};

struct NonlinearitySpec {
    std::string kind = "power";  // power | table
    double q = 0.5;
    std::filesystem::path file;  // CSV xi,f[,F]

    Nonlinearity build() const {
        try {
            if (kind == "power") return Nonlinearity::power(q);
            if (kind == "table") {
                auto cols = read_numeric_csv(file);
                detail::require(cols.size() >= 2, ErrorCode::InvalidConfig, "nonlinearity table needs columns xi,f");
                std::vector<double> primitive;
                if (cols.size() >= 3) primitive = std::move(cols[2]);
                return Nonlinearity::table(std::move(cols[0]), std::move(cols[1]), std::move(primitive));
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InvalidArgument) detail::fail(ErrorCode::InvalidConfig, e.what());
            throw;
        }
        detail::fail(ErrorCode::InvalidConfig, "unknown nonlinearity kind '" + kind + "'");
    }
};

enum class RouteChoice { Auto, Lambda, T };

struct Tolerances {
    double linear = kDefaultLinearTol;
    double frozen = 1e-10;
    double root = 1e-10;
    double verify = 1e-8;
};

struct RunConfig {
    DomainSpec domain = DomainSpec::interval(1.0, 256);
    CoefficientSpec alpha;
    NonlinearitySpec nonlinearity;
    BranchSpec branch;
    RouteChoice route = RouteChoice::Auto;
    Tolerances tolerances;
    std::uint64_t seed = 20240601;
    std::filesystem::path output_dir = "out";
    int verify_starts = 5;
    int verify_perturbations = 200;
    int saddle_lambda_samples = 21;
    int saddle_perturbations = 50;
    double lam_min = 1e-8;
    double lam_max = 1e8;
    std::vector<std::string> survey_branches;
    std::string canonical;  // canonical key-value text, hashed into reports
    std::filesystem::path base_dir;  // directory relative paths resolve against

    std::uint64_t hash() const { return fnv1a64(canonical); }

    /// Enforces cross-field invariants.
    void validate() const {
        try {
            domain.validate();
        } catch (const Error& e) {
            detail::fail(ErrorCode::InvalidConfig, e.what());
        }
        for (double tol : {tolerances.linear, tolerances.frozen, tolerances.root, tolerances.verify}) {
            detail::require(tol > 0.0, ErrorCode::InvalidConfig, "all tolerances must be positive");
        }
        detail::require(route != RouteChoice::T || nonlinearity.kind == "power", ErrorCode::InvalidConfig,
                        "route = t requires a power nonlinearity");
        detail::require(verify_starts >= 5, ErrorCode::InvalidConfig, "verify.starts must be at least 5");
        detail::require(verify_perturbations >= 0 && saddle_perturbations >= 0 && saddle_lambda_samples >= 1,
                        ErrorCode::InvalidConfig, "verification sample counts must be nonnegative");
        detail::require(lam_min > 0.0 && lam_max > lam_min, ErrorCode::InvalidConfig, "invalid lambda window");
    }

    static RunConfig from_keys(const KeyValueFile& kv, const std::filesystem::path& base_dir = {}) {
        RunConfig cfg;
        cfg.canonical = kv.canonical();
        cfg.base_dir = base_dir;
        auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
        };

        const std::string kind = kv.get("domain.kind", "interval");
        if (kind == "interval") {
            cfg.domain = DomainSpec::interval(kv.get_double("domain.length", 1.0),
                                              static_cast<int>(kv.get_int("domain.resolution", 256)));
        } else if (kind == "rectangle") {
            const auto lengths = KeyValueFile::split(kv.get("domain.lengths", "1, 1"), ',');
            detail::require(lengths.size() == 2, ErrorCode::InvalidConfig, "domain.lengths expects 'a, b'");
            const auto res = KeyValueFile::split(kv.get("domain.resolution", "64"), ',');
            detail::require(res.size() == 1 || res.size() == 2, ErrorCode::InvalidConfig,
                            "domain.resolution expects 'n' or 'nx, ny'");
            const int nx = static_cast<int>(KeyValueFile::to_double("domain.resolution", res[0]));
            const int ny = res.size() == 2 ? static_cast<int>(KeyValueFile::to_double("domain.resolution", res[1])) : nx;
            cfg.domain = DomainSpec::rectangle(KeyValueFile::to_double("domain.lengths", lengths[0]),
                                               KeyValueFile::to_double("domain.lengths", lengths[1]), nx, ny);
        } else {
            detail::fail(ErrorCode::InvalidConfig, "domain.kind must be interval or rectangle");
        }

        cfg.alpha.kind = kv.get("alpha.kind", "constant");
        cfg.alpha.value = kv.get_double("alpha.value", 1.0);
        cfg.alpha.base = kv.get_double("alpha.base", 1.0);
        cfg.alpha.slope = kv.get_double("alpha.slope", 1.0);
        cfg.alpha.low = kv.get_double("alpha.low", 1.0);
        cfg.alpha.high = kv.get_double("alpha.high", 2.0);
        cfg.alpha.cells = static_cast<int>(kv.get_int("alpha.cells", 2));
        if (kv.has("alpha.file")) cfg.alpha.file = resolve(kv.require_string("alpha.file"));
        if (cfg.alpha.kind == "csv") {
            detail::require(kv.has("alpha.file"), ErrorCode::InvalidConfig, "alpha.kind = csv needs alpha.file");
        }

        cfg.nonlinearity.kind = kv.get("nonlinearity.kind", "power");
        cfg.nonlinearity.q = kv.get_double("nonlinearity.q", 0.5);
        if (kv.has("nonlinearity.file")) cfg.nonlinearity.file = resolve(kv.require_string("nonlinearity.file"));
        detail::require(cfg.nonlinearity.kind == "power" || cfg.nonlinearity.kind == "table",
                        ErrorCode::InvalidConfig, "nonlinearity.kind must be power or table");
        if (cfg.nonlinearity.kind == "table") {
            detail::require(kv.has("nonlinearity.file"), ErrorCode::InvalidConfig,
                            "nonlinearity.kind = table needs nonlinearity.file");
        }

        cfg.branch.family = kv.get("branch.family", "tan");
        cfg.branch.k = static_cast<int>(kv.get_int("branch.k", 1));
        cfg.branch.c = kv.get_double("branch.c", 1.0);
        cfg.branch.s = kv.get_double("branch.s", 0.5);
        cfg.branch.a = kv.get_double("branch.a", 1.0);
        cfg.branch.b = kv.get_double("branch.b", 0.0);
        if (kv.has("branch.file")) cfg.branch.table = resolve(kv.require_string("branch.file"));

        const std::string route = kv.get("solver.route", "auto");
        if (route == "auto") cfg.route = RouteChoice::Auto;
        else if (route == "lambda") cfg.route = RouteChoice::Lambda;
        else if (route == "t") cfg.route = RouteChoice::T;
        else detail::fail(ErrorCode::InvalidConfig, "solver.route must be auto, lambda or t");
        cfg.tolerances.linear = kv.get_double("solver.linear_tol", cfg.tolerances.linear);
        cfg.tolerances.frozen = kv.get_double("solver.frozen_tol", cfg.tolerances.frozen);
        cfg.tolerances.root = kv.get_double("solver.root_tol", cfg.tolerances.root);
        cfg.tolerances.verify = kv.get_double("solver.verify_tol", cfg.tolerances.verify);
        cfg.lam_min = kv.get_double("solver.lam_min", cfg.lam_min);
        cfg.lam_max = kv.get_double("solver.lam_max", cfg.lam_max);
        cfg.seed = static_cast<std::uint64_t>(kv.get_int("solver.seed", static_cast<long>(cfg.seed)));

        cfg.verify_starts = static_cast<int>(kv.get_int("verify.starts", cfg.verify_starts));
        cfg.verify_perturbations = static_cast<int>(kv.get_int("verify.perturbations", cfg.verify_perturbations));
        cfg.saddle_lambda_samples = static_cast<int>(kv.get_int("verify.saddle_lambda_samples", cfg.saddle_lambda_samples));
        cfg.saddle_perturbations = static_cast<int>(kv.get_int("verify.saddle_perturbations", cfg.saddle_perturbations));

        cfg.output_dir = kv.get("output.dir", "out");
        if (kv.has("survey.branches")) {
            for (const auto& b : KeyValueFile::split(kv.require_string("survey.branches"), ';')) {
                if (!b.empty()) cfg.survey_branches.push_back(b);
            }
        }
        cfg.validate();
        return cfg;
    }

    /// Reads a config file. KIRCHHOFF_OUTPUT_DIR, when set, overrides output.dir.
    static RunConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        detail::require(static_cast<bool>(in), ErrorCode::InvalidConfig, "cannot open config file " + path.string());
        const auto kv = KeyValueFile::parse(in, path.string());
        auto cfg = from_keys(kv, path.parent_path());
        if (const char* env = std::getenv("KIRCHHOFF_OUTPUT_DIR"); env != nullptr && *env != '\0') cfg.output_dir = env;
        return cfg;
    }

    std::vector<BranchSpec> survey_specs() const {
        std::vector<BranchSpec> out;
        for (const auto& s : survey_branches) out.push_back(BranchSpec::parse(s, base_dir));
        return out;
    }
};

} // namespace kirchhoff
