#pragma once

#include <string>

namespace covermodal {

// Reads the whole file as raw bytes; throws std::runtime_error naming the path.
std::string read_file(const std::string& path);

// Writes via a temporary file in the same directory, then renames into place.
void atomic_write_file(const std::string& path, const std::string& bytes);

void ensure_directory(const std::string& path);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double x);

// Fixed three decimal places, for human-facing summaries.
std::string format_fixed3(double x);

}  // namespace covermodal
