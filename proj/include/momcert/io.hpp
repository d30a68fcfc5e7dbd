#pragma once

#include <string>

namespace momcert {

/// Writes `contents` to a sibling temp file and renames it over `path`, so
/// readers never observe a partially written file.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Shortest of %.15g/%.16g/%.17g that reads back to the same double.
std::string format_double(double v);

}  // namespace momcert
