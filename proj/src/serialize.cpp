#include "fex/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fex/error.hpp"

namespace fex {

void reject_unknown_keys(const Json& obj,
                         std::initializer_list<const char*> allowed,
                         const std::string& context) {
  if (!obj.is_object()) {
    throw FexError(context + ": expected a JSON object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw FexError(context + ": unknown key '" + key + "'");
    }
  }
}

Json tn_operator_to_json(const TnOperator& op) {
  return Json{{"target_tag", op.target},
              {"domain", {op.lo, op.hi}},
              {"M", op.hidden},
              {"gamma", op.gamma},
              {"a", op.a},
              {"r", op.r},
              {"alpha", op.alpha},
              {"fit_sup_error", op.fit_sup_error}};
}

TnOperator tn_operator_from_json(const Json& j) {
  reject_unknown_keys(
      j, {"target_tag", "domain", "M", "gamma", "a", "r", "alpha",
          "fit_sup_error"},
      "tn operator");
  TnOperator op;
  op.target = j.at("target_tag").get<std::string>();
  const auto& dom = j.at("domain");
  op.lo = dom.at(0).get<double>();
  op.hi = dom.at(1).get<double>();
  op.hidden = j.at("M").get<int>();
  op.gamma = j.at("gamma").get<double>();
  op.a = j.at("a").get<std::vector<double>>();
  op.r = j.at("r").get<std::vector<double>>();
  op.alpha = j.at("alpha").get<std::vector<double>>();
  op.fit_sup_error = j.at("fit_sup_error").get<double>();
  if (static_cast<int>(op.a.size()) != op.hidden ||
      static_cast<int>(op.r.size()) != op.hidden ||
      static_cast<int>(op.alpha.size()) != op.hidden + 1) {
    throw FexError("tn operator: weight array sizes inconsistent with M");
  }
  return op;
}

Json operator_pool_to_json(const OperatorPool& pool) {
  Json unary = Json::array();
  for (const auto& op : pool.unary) {
    if (op.builtin != nullptr) {
      unary.push_back(Json{{"kind", "builtin"}, {"name", op.name}});
    } else {
      unary.push_back(
          Json{{"kind", "tn"}, {"weights", tn_operator_to_json(*op.tn)}});
    }
  }
  Json binary = Json::array();
  for (BinaryOp b : pool.binary) binary.push_back(binary_op_name(b));
  return Json{{"unary", unary}, {"binary", binary}};
}

OperatorPool operator_pool_from_json(const Json& j) {
  reject_unknown_keys(j, {"unary", "binary"}, "operator pool");
  OperatorPool pool;
  pool.binary.clear();
  for (const auto& entry : j.at("unary")) {
    const std::string kind = entry.at("kind").get<std::string>();
    if (kind == "builtin") {
      reject_unknown_keys(entry, {"kind", "name"}, "pool entry");
      pool.unary.push_back(make_builtin_op(entry.at("name").get<std::string>()));
    } else if (kind == "tn") {
      reject_unknown_keys(entry, {"kind", "weights"}, "pool entry");
      pool.unary.push_back(make_tn_op(std::make_shared<TnOperator>(
          tn_operator_from_json(entry.at("weights")))));
    } else {
      throw FexError("pool entry: unknown kind '" + kind + "'");
    }
  }
  for (const auto& entry : j.at("binary")) {
    pool.binary.push_back(binary_op_from_name(entry.get<std::string>()));
  }
  if (pool.unary.empty() || pool.binary.empty()) {
    throw FexError("operator pool: empty unary or binary set");
  }
  return pool;
}

Json expression_to_json(const Expression& expr, const OperatorPool& pool) {
  Json ops = Json::array();
  Json layout = Json::array();
  for (int i = 0; i < expr.skel.node_count(); ++i) {
    const Node& n = expr.skel.nodes[static_cast<size_t>(i)];
    if (n.kind == NodeKind::binary) {
      ops.push_back(binary_op_name(
          pool.binary[static_cast<size_t>(expr.e[static_cast<size_t>(i)])]));
    } else {
      ops.push_back(
          pool.unary[static_cast<size_t>(expr.e[static_cast<size_t>(i)])].name);
      layout.push_back(Json{{"node", i},
                            {"offset", n.theta_offset},
                            {"scale_len", n.scale_len}});
    }
  }
  return Json{
      {"skeleton",
       {{"depth", expr.skel.depth}, {"input_dim", expr.skel.input_dim}}},
      {"operators", ops},
      {"theta", {{"values", expr.theta.values}, {"layout", layout}}},
      {"render", to_expression_string(expr.skel, expr.e, pool, expr.theta)}};
}

Expression expression_from_json(const Json& j, const OperatorPool& pool) {
  reject_unknown_keys(j, {"skeleton", "operators", "theta", "render"},
                      "expression");
  Expression expr;
  const auto& sk = j.at("skeleton");
  reject_unknown_keys(sk, {"depth", "input_dim"}, "expression.skeleton");
  expr.skel = build_skeleton(sk.at("depth").get<int>(),
                             sk.at("input_dim").get<int>());
  const auto& ops = j.at("operators");
  if (static_cast<int>(ops.size()) != expr.skel.node_count()) {
    throw FexError("expression: operator count does not match skeleton");
  }
  for (int i = 0; i < expr.skel.node_count(); ++i) {
    const auto name = ops.at(static_cast<size_t>(i)).get<std::string>();
    if (expr.skel.nodes[static_cast<size_t>(i)].kind == NodeKind::binary) {
      const BinaryOp b = binary_op_from_name(name);
      int idx = -1;
      for (int k = 0; k < pool.binary_count(); ++k) {
        if (pool.binary[static_cast<size_t>(k)] == b) idx = k;
      }
      if (idx < 0) throw FexError("expression: binary '" + name + "' not in pool");
      expr.e.push_back(idx);
    } else {
      const int idx = pool.find_unary(name);
      if (idx < 0) throw FexError("expression: unary '" + name + "' not in pool");
      expr.e.push_back(idx);
    }
  }
  expr.theta.values = j.at("theta").at("values").get<std::vector<double>>();
  if (expr.theta.size() != expr.skel.theta_size) {
    throw FexError("expression: theta length does not match skeleton layout");
  }
  return expr;
}

Json controller_to_json(const ControllerState& c) {
  return Json{{"logits", c.logits},
              {"epsilon", c.epsilon},
              {"nu_q", c.nu_q},
              {"eta_lr", c.eta_lr},
              {"step", c.step}};
}

ControllerState controller_from_json(const Json& j) {
  reject_unknown_keys(j, {"logits", "epsilon", "nu_q", "eta_lr", "step"},
                      "controller");
  ControllerState c;
  c.logits = j.at("logits").get<std::vector<std::vector<double>>>();
  c.epsilon = j.at("epsilon").get<double>();
  c.nu_q = j.at("nu_q").get<double>();
  c.eta_lr = j.at("eta_lr").get<double>();
  c.step = j.at("step").get<int>();
  return c;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FexError("cannot open file for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FexError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw FexError("write failed: " + path);
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fex
