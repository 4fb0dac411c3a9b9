#ifndef FEX_UNARY_OPS_HPP
#define FEX_UNARY_OPS_HPP

#include <memory>
#include <string>
#include <vector>

#include "fex/scalar_functions.hpp"
#include "fex/transnet.hpp"

namespace fex {

// A pool entry: either a closed-form builtin or a frozen trained network.
// TN operators are named "TN[<target>]".
struct UnaryOperator {
  std::string name;
  const ScalarFunction* builtin = nullptr;
  std::shared_ptr<const TnOperator> tn;

  double value(double t) const {
    return builtin != nullptr ? builtin->value(t) : tn->value(t);
  }
  Derivs4 derivs(double t) const {
    return builtin != nullptr ? builtin->derivs(t) : tn->derivs(t);
  }
};

UnaryOperator make_builtin_op(const std::string& name);
UnaryOperator make_tn_op(std::shared_ptr<const TnOperator> tn);

enum class BinaryOp { add, sub, mul, div };

const char* binary_op_name(BinaryOp op);            // "+", "-", "*", "/"
BinaryOp binary_op_from_name(const std::string& s);

struct OperatorPool {
  std::vector<UnaryOperator> unary;
  std::vector<BinaryOp> binary{BinaryOp::add, BinaryOp::sub, BinaryOp::mul};

  int unary_count() const { return static_cast<int>(unary.size()); }
  int binary_count() const { return static_cast<int>(binary.size()); }
  // Index of the named unary operator, -1 if absent.
  int find_unary(const std::string& name) const;
};

}  // namespace fex

#endif
