#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quenchlab/grid.hpp"
#include "quenchlab/solver.hpp"

namespace quenchlab {

/// Where the field under analysis comes from.
struct SourceSpec {
    enum class Kind { solve, synthetic, file, restart };

    Kind kind = Kind::solve;
    /// Initial profile (solve) or synthetic field name.
    std::string profile = "constant";
    std::filesystem::path path;
    std::size_t time_samples = 101;
    /// Synthetic time stamps cluster towards time_end like (1 - s)^grading.
    double time_grading = 1.0;
    double value = 1.0;
    double amplitude = 0.5;
    double width = 1.0;
    /// restart: new end of the time window.
    std::optional<double> time_end;
};

struct BoundarySpec {
    /// constant, ode_trace, radial_trace or periodic.
    std::string kind = "constant";
    double value = 1.0;
};

/// One [analysis.N] section: an operation name plus raw parameters.
struct AnalysisRequest {
    std::size_t index = 0;
    std::string op;
    std::map<std::string, std::string> params;

    bool has(const std::string& key) const { return params.count(key) != 0; }
    double number(const std::string& key, double fallback) const;
    std::optional<double> maybe_number(const std::string& key) const;
    std::size_t count(const std::string& key, std::size_t fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::string text(const std::string& key, const std::string& fallback) const;
    std::vector<double> list(const std::string& key) const;
};

struct RunConfig {
    ModelParams model{3.0, 1};
    std::optional<GridSpec> grid;
    SourceSpec source;
    BoundarySpec boundary;
    SolverConfig solver;
    std::vector<AnalysisRequest> analyses;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "quenchlab-run";
    /// FNV-1a hash of the config text.
    std::string digest;

    void validate() const;
};

const std::vector<std::string>& known_operations();

/// Parses INI text. Relative paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

std::vector<double> parse_list(const std::string& text, const std::string& key);
std::string fnv1a_hex(const std::string& text);

}  // namespace quenchlab
