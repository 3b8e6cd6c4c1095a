#pragma once

#include "partrace/spinsys.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace partrace {

/// Coupling files are JSON objects:
///
///   {
///     "sites": 4,
///     "field_h": 0.3,
///     "couplings": [ {"axis": "x", "i": 1, "j": 2, "value": 1.0}, ... ]
///   }
///
/// Site labels in the file are 1-based. Unknown keys are rejected. See
/// docs/file_formats.md.
CouplingSpec parse_coupling_spec(std::string_view json_text);
std::string format_coupling_spec(const CouplingSpec& spec);

CouplingSpec read_coupling_file(const std::filesystem::path& path);
void write_coupling_file(const CouplingSpec& spec, const std::filesystem::path& path);

}  // namespace partrace
