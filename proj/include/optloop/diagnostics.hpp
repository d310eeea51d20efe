#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace optloop {

// Machine-readable problem report attached to a document location.
// `line`/`column` are 1-based within the extracted document; 0 means
// "no specific location".
enum class DiagCode {
    MissingSection,
    SyntaxError,
    UnresolvedReference,
    ShapeMismatch,
    DuplicateName,
    DuplicateIndexBinding,
    ObjectiveHasNoVariable,
    NoVariables,
    NonNumericParameter,
    IndexOutOfRange,
    GroundingExplosion,
};

inline const char* diag_code_name(DiagCode code) {
    switch (code) {
        case DiagCode::MissingSection: return "MissingSection";
        case DiagCode::SyntaxError: return "SyntaxError";
        case DiagCode::UnresolvedReference: return "UnresolvedReference";
        case DiagCode::ShapeMismatch: return "ShapeMismatch";
        case DiagCode::DuplicateName: return "DuplicateName";
        case DiagCode::DuplicateIndexBinding: return "DuplicateIndexBinding";
        case DiagCode::ObjectiveHasNoVariable: return "ObjectiveHasNoVariable";
        case DiagCode::NoVariables: return "NoVariables";
        case DiagCode::NonNumericParameter: return "NonNumericParameter";
        case DiagCode::IndexOutOfRange: return "IndexOutOfRange";
        case DiagCode::GroundingExplosion: return "GroundingExplosion";
    }
    return "Unknown";
}

struct Diagnostic {
    DiagCode code;
    std::string message;
    int line = 0;
    int column = 0;

    nlohmann::json to_json() const {
        return {{"code", diag_code_name(code)},
                {"message", message},
                {"line", line},
                {"column", column}};
    }
};

inline nlohmann::json diagnostics_to_json(const std::vector<Diagnostic>& diags) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : diags) arr.push_back(d.to_json());
    return arr;
}

inline std::string diagnostics_to_string(const std::vector<Diagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) {
        out += diag_code_name(d.code);
        if (d.line > 0) {
            out += " (line " + std::to_string(d.line);
            if (d.column > 0) out += ", col " + std::to_string(d.column);
            out += ")";
        }
        out += ": " + d.message + "\n";
    }
    return out;
}

}  // namespace optloop
