#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace windts {

// Validation failure: caller passed something that violates an operation's
// contract. CLI maps this to exit code 1, anything else to 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

template <typename... Args>
[[noreturn]] void fail(fmt::format_string<Args...> f, Args&&... args) {
  throw ValidationError(fmt::format(f, std::forward<Args>(args)...));
}

#define WINDTS_REQUIRE(cond, ...) \
  do {                            \
    if (!(cond)) ::windts::fail(__VA_ARGS__); \
  } while (0)

// Dense row-major matrix of doubles. Used for point sets, multivariate
// windows and forecasts; the autodiff Tensor is separate.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {v.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {v.data() + r * cols, cols}; }
  bool empty() const { return v.empty(); }
};

inline std::string join_i64(std::span<const std::int64_t> xs, const char* sep = "x") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace windts
