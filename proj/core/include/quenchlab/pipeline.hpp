#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "quenchlab/config.hpp"
#include "quenchlab/report.hpp"
#include "quenchlab/solver.hpp"

namespace quenchlab {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    bool empty() const noexcept { return rows.empty(); }
    /// Comma separated, doubles with 17 significant digits.
    std::string render() const;
};

struct AnalysisOutput {
    nlohmann::json result = nlohmann::json::object();
    CsvTable table;
};

struct AnalysisContext {
    std::uint64_t seed = 0;
    std::optional<QuenchReport> quench;
    /// Used by comparison_guard.
    std::optional<BoundaryData> boundary;
};

/// Named profiles shared by synthetic fields and solver initial data.
std::vector<std::string> known_profiles();
double profile_value(const ModelParams& params, const SourceSpec& source, const SpatialPoint& x,
                     double t);

SpaceTimeField synthetic_field(const ModelParams& params, const GridSpec& grid,
                               const SourceSpec& source);
BoundaryData make_boundary(const ModelParams& params, const BoundarySpec& spec);

AnalysisOutput run_analysis(const SpaceTimeField& field, const AnalysisRequest& request,
                            const AnalysisContext& context);

/// Worker count for independent analyses: QUENCHLAB_THREADS if set, else 1.
std::size_t analysis_threads();

/// Builds the field, runs every analysis, and writes field.qlf,
/// analysis_<i>_<op>.csv and report.json into the output directory.
Report run_pipeline(const RunConfig& config);

}  // namespace quenchlab
