#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ctst::csv {

using Row = std::vector<std::string>;

// RFC-4180: quoted fields, doubled quotes, embedded CR/LF inside quotes.
std::vector<Row> parse(std::string_view content);

// Quotes only when the field contains a comma, quote, CR or LF.
std::string escape(std::string_view field);
std::string format_row(const Row& row);

}  // namespace ctst::csv
