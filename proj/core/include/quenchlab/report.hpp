#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "quenchlab/errors.hpp"

namespace quenchlab {

struct Report {
    /// {"metadata": {...}, "solve": {...}, "analyses": [...], "violations": {...}}
    nlohmann::json document = nlohmann::json::object();
    std::optional<ErrorKind> first_error;
};

enum class ReportFormat { json, text };

ReportFormat parse_report_format(const std::string& name);

/// Sorted keys, two-space indentation, doubles with 17 significant digits,
/// non-finite numbers as null.
std::string canonical_json(const nlohmann::json& value);

std::string emit_report(const Report& report, ReportFormat format);

/// Reads a report previously written as JSON.
Report parse_report(const std::string& text);

}  // namespace quenchlab
