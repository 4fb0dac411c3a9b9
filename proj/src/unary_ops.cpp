#include "fex/unary_ops.hpp"

#include "fex/error.hpp"

namespace fex {

UnaryOperator make_builtin_op(const std::string& name) {
  const ScalarFunction* fn = find_scalar_function(name);
  if (fn == nullptr) {
    throw FexError("unknown builtin unary operator '" + name + "'");
  }
  UnaryOperator op;
  op.name = name;
  op.builtin = fn;
  return op;
}

UnaryOperator make_tn_op(std::shared_ptr<const TnOperator> tn) {
  if (tn == nullptr) throw FexError("make_tn_op: null operator");
  UnaryOperator op;
  op.name = "TN[" + tn->target + "]";
  op.tn = std::move(tn);
  return op;
}

const char* binary_op_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
  }
  return "?";
}

BinaryOp binary_op_from_name(const std::string& s) {
  if (s == "+") return BinaryOp::add;
  if (s == "-") return BinaryOp::sub;
  if (s == "*") return BinaryOp::mul;
  if (s == "/") return BinaryOp::div;
  throw FexError("unknown binary operator '" + s + "'");
}

int OperatorPool::find_unary(const std::string& name) const {
  for (int i = 0; i < unary_count(); ++i) {
    if (unary[static_cast<size_t>(i)].name == name) return i;
  }
  return -1;
}

}  // namespace fex
