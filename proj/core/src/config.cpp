#include "quenchlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "quenchlab/errors.hpp"
#include "quenchlab/field_io.hpp"

namespace quenchlab {

namespace pt = boost::property_tree;

const std::vector<std::string>& known_operations() {
    static const std::vector<std::string> ops = {
        "almgren_scan",        "apriori_scaling",   "averaged_energy",   "blowup_sequence",
        "comparison_guard",    "density_estimate",  "frequency",         "holder_seminorm",
        "parabolic_dimension", "rupture_set",       "self_similarity",   "slice_dimension",
        "two_valued_check",    "weighted_energy",
    };
    return ops;
}

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_number(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        fail(ErrorKind::validation, fmt::format("key '{}': '{}' is not a number", key, raw));
    }
    return v;
}

std::uint64_t to_unsigned(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        fail(ErrorKind::validation,
             fmt::format("key '{}': '{}' is not a nonnegative integer", key, raw));
    }
    return v;
}

bool to_flag(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    fail(ErrorKind::validation, fmt::format("key '{}': '{}' is not a boolean", key, raw));
}

// Drops an inline "; comment" or "# comment".
std::string strip_comment(const std::string& v) {
    std::string out = v;
    for (const char* marker : {" ;", " #", "\t;", "\t#"}) {
        const auto pos = out.find(marker);
        if (pos != std::string::npos) out = out.substr(0, pos);
    }
    return trim(out);
}

class Section {
public:
    Section(std::string name, const pt::ptree& tree, std::set<std::string> allowed)
        : name_(std::move(name)) {
        for (const auto& [k, v] : tree) {
            if (!allowed.empty() && !allowed.count(k)) {
                fail(ErrorKind::validation,
                     fmt::format("unknown key '{}' in section [{}]", k, name_));
            }
            values_[k] = strip_comment(v.data());
        }
    }

    std::optional<std::string> raw(const std::string& k) const {
        auto it = values_.find(k);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }
    std::string key(const std::string& k) const { return name_ + "." + k; }
    double number(const std::string& k, double fallback) const {
        auto r = raw(k);
        return r ? to_number(*r, key(k)) : fallback;
    }
    std::uint64_t unsigned_value(const std::string& k, std::uint64_t fallback) const {
        auto r = raw(k);
        return r ? to_unsigned(*r, key(k)) : fallback;
    }
    std::string text(const std::string& k, const std::string& fallback) const {
        return raw(k).value_or(fallback);
    }
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::string name_;
    std::map<std::string, std::string> values_;
};

const pt::ptree& child_or_empty(const pt::ptree& root, const std::string& name) {
    static const pt::ptree empty;
    auto it = root.find(name);
    return it == root.not_found() ? empty : it->second;
}

std::vector<double> axis_values(const Section& s, const std::string& k, int n) {
    const auto r = s.raw(k);
    if (!r) fail(ErrorKind::validation, fmt::format("missing key '{}'", s.key(k)));
    auto v = parse_list(*r, s.key(k));
    if (v.size() == 1) v.assign(static_cast<std::size_t>(n), v.front());
    require(v.size() == static_cast<std::size_t>(n), ErrorKind::validation,
            fmt::format("key '{}' needs 1 or {} values", s.key(k), n));
    return v;
}

}  // namespace

std::vector<double> parse_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number(item, key));
    require(!out.empty(), ErrorKind::validation, fmt::format("key '{}' is empty", key));
    return out;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

double AnalysisRequest::number(const std::string& key, double fallback) const {
    return maybe_number(key).value_or(fallback);
}

std::optional<double> AnalysisRequest::maybe_number(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    return to_number(it->second, key);
}

std::size_t AnalysisRequest::count(const std::string& key, std::size_t fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : static_cast<std::size_t>(to_unsigned(it->second, key));
}

bool AnalysisRequest::flag(const std::string& key, bool fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : to_flag(it->second, key);
}

std::string AnalysisRequest::text(const std::string& key, const std::string& fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

std::vector<double> AnalysisRequest::list(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) fail(ErrorKind::usage, fmt::format("missing parameter '{}'", key));
    return parse_list(it->second, key);
}

void RunConfig::validate() const {
    using K = SourceSpec::Kind;
    if (source.kind == K::solve || source.kind == K::synthetic) {
        require(grid.has_value(), ErrorKind::validation, "section [grid] is required");
        grid->validate();
        require(grid->dim() == model.n(), ErrorKind::validation,
                "grid dimension must equal model n");
    } else {
        require(!source.path.empty(), ErrorKind::validation, "source.path is required");
    }
    if (source.kind == K::restart) {
        require(source.time_end.has_value(), ErrorKind::validation,
                "source.time_end is required for a restart");
    }
    if (source.kind == K::synthetic) {
        require(source.time_samples >= 2, ErrorKind::validation, "source.time_samples must be >= 2");
        require(source.time_grading >= 1.0, ErrorKind::validation,
                "source.time_grading must be >= 1");
    }
    static const std::set<std::string> boundaries = {"constant", "ode_trace", "radial_trace",
                                                     "periodic"};
    require(boundaries.count(boundary.kind) != 0, ErrorKind::validation,
            fmt::format("unknown boundary kind '{}' (known: constant, ode_trace, radial_trace, "
                        "periodic)",
                        boundary.kind));
    require(boundary.value > 0.0, ErrorKind::validation, "boundary.value must be positive");
    solver.validate();
    const auto& ops = known_operations();
    for (const auto& a : analyses) {
        if (std::find(ops.begin(), ops.end(), a.op) == ops.end()) {
            fail(ErrorKind::validation,
                 fmt::format("analysis {}: unknown operation '{}' (known: {})", a.index, a.op,
                             fmt::join(ops, ", ")));
        }
    }
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    pt::ptree root;
    try {
        std::istringstream in(text);
        pt::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorKind::validation,
             fmt::format("config parse error at line {}: {}", e.line(), e.message()));
    }
    static const std::set<std::string> sections = {"model", "grid",   "source",
                                                   "boundary", "solver", "run"};
    std::vector<std::pair<std::uint64_t, const pt::ptree*>> analysis_sections;
    for (const auto& [name, tree] : root) {
        if (name.rfind("analysis.", 0) == 0) {
            analysis_sections.emplace_back(to_unsigned(name.substr(9), name), &tree);
        } else if (!sections.count(name)) {
            fail(ErrorKind::validation, fmt::format("unknown section [{}]", name));
        }
    }

    RunConfig cfg;
    cfg.digest = fnv1a_hex(text);
    const Section model("model", child_or_empty(root, "model"), {"p", "n"});
    const double p = model.number("p", 3.0);
    const auto n = static_cast<int>(model.number("n", 1.0));
    cfg.model = ModelParams(p, n);

    if (root.find("grid") != root.not_found()) {
        const Section g("grid", root.get_child("grid"),
                        {"origin", "extent", "cells", "time_start", "time_end"});
        GridSpec spec;
        spec.origin = axis_values(g, "origin", n);
        spec.extent = axis_values(g, "extent", n);
        for (double c : axis_values(g, "cells", n)) {
            require(c >= 1.0 && c == std::floor(c), ErrorKind::validation,
                    "grid.cells must be positive integers");
            spec.cells.push_back(static_cast<std::size_t>(c));
        }
        spec.time_start = g.number("time_start", 0.0);
        spec.time_end = g.number("time_end", 1.0);
        cfg.grid = spec;
    }

    const Section src("source", child_or_empty(root, "source"),
                      {"kind", "profile", "path", "time_samples", "time_grading", "value",
                       "amplitude", "width", "time_end"});
    const std::string kind = src.text("kind", "solve");
    if (kind == "solve") cfg.source.kind = SourceSpec::Kind::solve;
    else if (kind == "synthetic") cfg.source.kind = SourceSpec::Kind::synthetic;
    else if (kind == "file") cfg.source.kind = SourceSpec::Kind::file;
    else if (kind == "restart") cfg.source.kind = SourceSpec::Kind::restart;
    else
        fail(ErrorKind::validation,
             fmt::format("unknown source kind '{}' (known: solve, synthetic, file, restart)", kind));
    cfg.source.profile = src.text("profile", "constant");
    if (auto path = src.raw("path")) {
        std::filesystem::path pth(*path);
        cfg.source.path = pth.is_absolute() || base_dir.empty() ? pth : base_dir / pth;
    }
    cfg.source.time_samples = src.unsigned_value("time_samples", 101);
    cfg.source.time_grading = src.number("time_grading", 1.0);
    cfg.source.value = src.number("value", 1.0);
    cfg.source.amplitude = src.number("amplitude", 0.5);
    cfg.source.width = src.number("width", 1.0);
    if (src.raw("time_end")) cfg.source.time_end = src.number("time_end", 0.0);

    const Section bnd("boundary", child_or_empty(root, "boundary"), {"kind", "value"});
    cfg.boundary.kind = bnd.text("kind", "constant");
    cfg.boundary.value = bnd.number("value", 1.0);

    const Section sol("solver", child_or_empty(root, "solver"),
                      {"epsilon_reg", "dt_initial", "dt_min", "safety", "quench_threshold",
                       "max_steps", "store_stride"});
    SolverConfig& sc = cfg.solver;
    sc.epsilon_reg = sol.number("epsilon_reg", sc.epsilon_reg);
    sc.dt_initial = sol.number("dt_initial", sc.dt_initial);
    sc.dt_min = sol.number("dt_min", sc.dt_min);
    sc.safety = sol.number("safety", sc.safety);
    sc.quench_threshold = sol.number("quench_threshold", sc.quench_threshold);
    sc.max_steps = sol.unsigned_value("max_steps", sc.max_steps);
    sc.store_stride = sol.unsigned_value("store_stride", sc.store_stride);

    const Section run("run", child_or_empty(root, "run"), {"seed", "output_dir"});
    cfg.seed = run.unsigned_value("seed", 0);
    if (auto out = run.raw("output_dir")) {
        std::filesystem::path pth(*out);
        cfg.output_dir = pth.is_absolute() || base_dir.empty() ? pth : base_dir / pth;
    } else if (!base_dir.empty()) {
        cfg.output_dir = base_dir / cfg.output_dir;
    }

    std::sort(analysis_sections.begin(), analysis_sections.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < analysis_sections.size(); ++i) {
        const auto& [number, tree] = analysis_sections[i];
        const Section s(fmt::format("analysis.{}", number), *tree, {});
        AnalysisRequest req;
        req.index = i;
        req.op = s.text("op", "");
        req.params = s.values();
        req.params.erase("op");
        require(!req.op.empty(), ErrorKind::validation,
                fmt::format("section [analysis.{}] has no 'op' key", number));
        cfg.analyses.push_back(std::move(req));
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorKind::usage,
            fmt::format("config file '{}' does not exist", path.string()));
    return parse_config(read_file(path), path.parent_path());
}

}  // namespace quenchlab
