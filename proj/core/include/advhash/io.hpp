#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace advhash {

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// Joins fields with commas and appends a newline. Fields are written as-is.
std::string csv_row(const std::vector<std::string>& fields);

// Writes to "<path>.tmp.<pid>" and renames over `path`, so readers never see
// a partial file. Throws Error on failure and removes the temporary.
void atomic_write(const std::string& path, std::string_view content);

std::string read_text_file(const std::string& path);

}  // namespace advhash
