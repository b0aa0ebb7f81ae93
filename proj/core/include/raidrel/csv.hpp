#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace raidrel {

// %.17g: round-trips every double and is stable across runs.
std::string format_double(double v);

// Quotes a field when it contains a separator, quote or newline.
std::string csv_field(std::string_view s);

void write_csv_row(std::ostream& os, std::initializer_list<std::string> fields);

}  // namespace raidrel
