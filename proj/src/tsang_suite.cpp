#include <array>

#include "nosignal/synth.hpp"

namespace nosignal {

namespace {

constexpr double kLo = 0.001;
constexpr double kHi = 0.999;

struct Entry {
  int n;
  const char* expr;
  std::vector<int> high;  // 1-based variables with truth 0.999
  std::vector<int> low;   // 1-based variables with truth 0.001
};

}  // namespace

std::vector<SynthFunction> tsang_suite() {
  static const std::array<Entry, 10> kEntries{{
      {10, "pi^(x1*x2)*sqrt(2*x3) - asin(x4) + log(x3+x5) - x9/x10*sqrt(x7/x8) - x2*x7", {5, 8, 10}, {1, 2, 7, 9}},
      {10, "pi^(x1*x2)*sqrt(2*abs(x3)) - asin(0.5*x4) + log(abs(x3+x5)+1) + x9/(1+abs(x10))*sqrt(x7/(1+abs(x8))) - x2*x7",
       {5}, {1, 2, 7, 9}},
      {10, "exp(abs(x1-x2)) + abs(x2*x3) - x3^(2*abs(x4)) + log(x4^2+x5^2+x7^2+x8^2) + x9 + 1/(1+x10^2)",
       {3, 5, 7, 8}, {}},
      {10, "exp(abs(x1-x2)) + abs(x2*x3) - x3^(2*abs(x4)) + (x1*x4)^2 + log(x4^2+x5^2+x7^2+x8^2) + x9 + 1/(1+x10^2)",
       {3, 5, 7, 8}, {}},
      {10, "1/(1+x1^2+x2^2+x3^2) + sqrt(exp(x4+x5)) + abs(x6+x7) + x8*x9*x10", {1, 2, 3}, {4, 5, 8, 9, 10}},
      {10, "exp(abs(x1*x2)+1) - exp(abs(x3+x4)+1) + cos(x5+x6-x8) + sqrt(x8^2+x9^2+x10^2)",
       {8, 9, 10}, {1, 2, 3, 4, 5, 6}},
      {10, "(atan(x1)+atan(x2))^2 + max(x3*x4+x6, 0) - 1/(1+(x4*x5*x6*x7*x8)^2) + (abs(x7)/(1+abs(x9)))^5"
           " + x1+x2+x3+x4+x5+x6+x7+x8+x9+x10",
       {9}, {1, 2, 3, 4, 5, 6, 7, 8}},
      {10, "x1*x2 + 2^(x3+x5+x6) + 2^(x3+x4+x5+x7) + sin(x7*sin(x8+x9)) + acos(0.9*x10)", {}, {1, 2, 3, 4, 5, 6}},
      {10, "tanh(x1*x2+x3*x4)*sqrt(abs(x5)) + exp(x5+x6) + log((x6*x7*x8)^2+1) + x9*x10 + 1/(1+abs(x10))",
       {}, {6, 7, 8, 9, 10}},
      {9, "sinh(x1+x2) + acos(tanh(x3+x5+x7)) + cos(x4+x5) + sec(x7*x9)", {3}, {1, 2, 4}},
  }};

  std::vector<SynthFunction> out;
  for (std::size_t k = 0; k < kEntries.size(); ++k) {
    const Entry& e = kEntries[k];
    SynthFunction f;
    f.name = "tsang-" + std::to_string(k + 1);
    f.n = e.n;
    f.expr = e.expr;
    f.binary = false;
    f.domain.assign(static_cast<std::size_t>(e.n), Interval{kLo, kHi});
    f.truth.assign(static_cast<std::size_t>(e.n), std::nullopt);
    for (int v : e.high) f.truth[static_cast<std::size_t>(v - 1)] = kHi;
    for (int v : e.low) f.truth[static_cast<std::size_t>(v - 1)] = kLo;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace nosignal
