#ifndef FEX_SCALAR_FUNCTIONS_HPP
#define FEX_SCALAR_FUNCTIONS_HPP

#include <string>
#include <vector>

namespace fex {

// Value and first three derivatives of a scalar function at one point.
struct Derivs4 {
  double f = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

// Closed-form scalar functions with analytic derivatives up to order 3.
// Serves two roles: builtin unary operators and fitting targets for the
// neural operators.
struct ScalarFunction {
  const char* name;
  double (*value)(double);
  Derivs4 (*derivs)(double);
};

// Known names: "0", "1", "Id", "x^2", "x^3", "x^4", "exp", "sin", "cos",
// "sin(x^2)", "x*sin(x)". Returns nullptr when unknown.
const ScalarFunction* find_scalar_function(const std::string& name);

std::vector<std::string> scalar_function_names();

}  // namespace fex

#endif  // FEX_SCALAR_FUNCTIONS_HPP
