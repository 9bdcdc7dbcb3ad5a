#pragma once

#include <span>
#include <string>

namespace nosignal {

/// Shortest decimal that round-trips to the same double; '.' separator
/// regardless of locale. Non-finite values print as "nan", "inf", "-inf".
std::string format_real(double x);

/// Fixed-point text with at most `decimals` digits after the point and
/// trailing zeros removed ("2.430" -> "2.43", "6.000" -> "6").
std::string format_fixed(double x, int decimals);

std::string join_reals(std::span<const double> xs, char sep = ',');

}  // namespace nosignal
