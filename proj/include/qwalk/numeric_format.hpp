#pragma once

#include <string>
#include <string_view>

namespace qwalk {

/// Shortest decimal text that parses back to exactly `value`. Independent of
/// the global locale.
std::string format_double(double value);

/// Parses the whole of `text` as a double, locale-independently.
/// Throws InvalidArgument on trailing garbage or an empty field.
double parse_double(std::string_view text);

}  // namespace qwalk
