#include "qwalk/numeric_format.hpp"

#include <array>
#include <charconv>

#include "qwalk/error.hpp"

namespace qwalk {

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw Error("failed to format floating-point value");
  return std::string(buf.data(), end);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw InvalidArgument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace qwalk
