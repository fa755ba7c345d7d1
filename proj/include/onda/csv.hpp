#pragma once

#include <string>
#include <vector>

namespace onda {

// Minimal RFC-4180 CSV: fields containing comma, quote or newline are
// quoted, embedded quotes doubled. Doubles are printed with 17 significant
// digits so a round trip is lossless.
std::string csv_field(const std::string& value);
std::string csv_join(const std::vector<std::string>& fields);
std::string format_double(double v);
std::string format_double_fixed(double v, int decimals);

std::vector<std::vector<std::string>> parse_csv(const std::string& text);
double parse_double(const std::string& field);

// Temp file plus rename, so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace onda
