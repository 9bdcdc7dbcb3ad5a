#include "nosignal/format.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace nosignal {

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) x = 0.0;  // drop the sign of negative zero
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

std::string format_fixed(double x, int decimals) {
  std::array<char, 64> buf{};
  const double scale = std::pow(10.0, decimals);
  double rounded = std::round(x * scale) / scale;
  if (rounded == 0.0) rounded = 0.0;
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), rounded,
                                       std::chars_format::fixed, decimals);
  std::string s(buf.data(), ptr);
  if (s.find('.') != std::string::npos) {
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
  }
  return s;
}

std::string join_reals(std::span<const double> xs, char sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += format_real(xs[i]);
  }
  return out;
}

}  // namespace nosignal
