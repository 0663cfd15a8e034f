#include "quenchlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

namespace quenchlab {

using nlohmann::json;

ReportFormat parse_report_format(const std::string& name) {
    if (name == "json") return ReportFormat::json;
    if (name == "text") return ReportFormat::text;
    fail(ErrorKind::usage, fmt::format("unknown report format '{}' (known: json, text)", name));
}

namespace {

std::string number_text(double v) {
    if (!std::isfinite(v)) return "null";
    std::string s = fmt::format("{:.17g}", v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

void emit(const json& v, int depth, std::string& out) {
    const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(2 * depth), ' ');
    switch (v.type()) {
        case json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [k, item] : v.items()) {
                if (!first) out += ",\n";
                first = false;
                out += pad + json(k).dump() + ": ";
                emit(item, depth + 1, out);
            }
            out += "\n" + close + "}";
            return;
        }
        case json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ",\n";
                out += pad;
                emit(v[i], depth + 1, out);
            }
            out += "\n" + close + "]";
            return;
        }
        case json::value_t::number_float:
            out += number_text(v.get<double>());
            return;
        default:
            out += v.dump();
            return;
    }
}

std::string scalar_text(const json& v) {
    if (v.is_number_float()) return fmt::format("{:.10g}", v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        const bool flat = std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_primitive(); });
        if (flat && v.size() <= 8) {
            std::string s = "[";
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + scalar_text(v[i]);
            return s + "]";
        }
        return fmt::format("[{} entries]", v.size());
    }
    if (v.is_object()) return fmt::format("{{{} keys}}", v.size());
    return v.dump();
}

void table(const json& obj, std::string& out) {
    std::size_t width = 0;
    for (const auto& [k, item] : obj.items()) width = std::max(width, k.size());
    for (const auto& [k, item] : obj.items()) {
        out += fmt::format("  {:<{}}  {}\n", k, width, scalar_text(item));
    }
}

std::string text_report(const json& doc) {
    std::string out = "quenchlab report\n";
    if (doc.contains("metadata")) table(doc["metadata"], out);
    if (doc.contains("solve")) {
        out += "\n== solve\n";
        table(doc["solve"], out);
    }
    if (doc.contains("analyses")) {
        for (const auto& a : doc["analyses"]) {
            out += fmt::format("\n== analysis {}: {} [{}]\n", a.value("index", 0),
                               a.value("op", std::string("?")), a.value("status", std::string("?")));
            if (a.contains("result")) table(a["result"], out);
            if (a.contains("error")) table(a["error"], out);
        }
    }
    if (doc.contains("violations")) {
        out += "\n== violations\n";
        table(doc["violations"], out);
    }
    return out;
}

}  // namespace

std::string canonical_json(const json& value) {
    std::string out;
    emit(value, 0, out);
    out += "\n";
    return out;
}

std::string emit_report(const Report& report, ReportFormat format) {
    return format == ReportFormat::json ? canonical_json(report.document)
                                        : text_report(report.document);
}

Report parse_report(const std::string& text) {
    Report r;
    try {
        r.document = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::corrupt_file, fmt::format("report is not valid JSON: {}", e.what()));
    }
    return r;
}

}  // namespace quenchlab
