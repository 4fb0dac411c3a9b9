#include "fex/scalar_functions.hpp"

#include <cmath>
#include <cstring>

namespace fex {
namespace {

double zero_v(double) { return 0.0; }
Derivs4 zero_d(double) { return {0.0, 0.0, 0.0, 0.0}; }

double one_v(double) { return 1.0; }
Derivs4 one_d(double) { return {1.0, 0.0, 0.0, 0.0}; }

double id_v(double x) { return x; }
Derivs4 id_d(double x) { return {x, 1.0, 0.0, 0.0}; }

double sq_v(double x) { return x * x; }
Derivs4 sq_d(double x) { return {x * x, 2.0 * x, 2.0, 0.0}; }

double cube_v(double x) { return x * x * x; }
Derivs4 cube_d(double x) { return {x * x * x, 3.0 * x * x, 6.0 * x, 6.0}; }

double quart_v(double x) {
  const double x2 = x * x;
  return x2 * x2;
}
Derivs4 quart_d(double x) {
  const double x2 = x * x;
  return {x2 * x2, 4.0 * x2 * x, 12.0 * x2, 24.0 * x};
}

double exp_v(double x) { return std::exp(x); }
Derivs4 exp_d(double x) {
  const double e = std::exp(x);
  return {e, e, e, e};
}

double sin_v(double x) { return std::sin(x); }
Derivs4 sin_d(double x) {
  const double s = std::sin(x), c = std::cos(x);
  return {s, c, -s, -c};
}

double cos_v(double x) { return std::cos(x); }
Derivs4 cos_d(double x) {
  const double s = std::sin(x), c = std::cos(x);
  return {c, -s, -c, s};
}

double sinsq_v(double x) { return std::sin(x * x); }
Derivs4 sinsq_d(double x) {
  const double x2 = x * x;
  const double s = std::sin(x2), c = std::cos(x2);
  return {s, 2.0 * x * c, 2.0 * c - 4.0 * x2 * s,
          -12.0 * x * s - 8.0 * x2 * x * c};
}

double xsinx_v(double x) { return x * std::sin(x); }
Derivs4 xsinx_d(double x) {
  const double s = std::sin(x), c = std::cos(x);
  return {x * s, s + x * c, 2.0 * c - x * s, -3.0 * s - x * c};
}

const ScalarFunction kTable[] = {
    {"0", zero_v, zero_d},
    {"1", one_v, one_d},
    {"Id", id_v, id_d},
    {"x^2", sq_v, sq_d},
    {"x^3", cube_v, cube_d},
    {"x^4", quart_v, quart_d},
    {"exp", exp_v, exp_d},
    {"sin", sin_v, sin_d},
    {"cos", cos_v, cos_d},
    {"sin(x^2)", sinsq_v, sinsq_d},
    {"x*sin(x)", xsinx_v, xsinx_d},
};

}  // namespace

const ScalarFunction* find_scalar_function(const std::string& name) {
  for (const auto& fn : kTable) {
    if (name == fn.name) return &fn;
  }
  return nullptr;
}

std::vector<std::string> scalar_function_names() {
  std::vector<std::string> out;
  for (const auto& fn : kTable) out.emplace_back(fn.name);
  return out;
}

}  // namespace fex
