#ifndef FEX_SERIALIZE_HPP
#define FEX_SERIALIZE_HPP

#include <json.hpp>
#include <string>

#include "fex/controller.hpp"
#include "fex/eval.hpp"
#include "fex/transnet.hpp"
#include "fex/unary_ops.hpp"

namespace fex {

using Json = nlohmann::json;

// Throws FexError naming the offending key when obj holds a key outside
// allowed; context prefixes the message.
void reject_unknown_keys(const Json& obj,
                         std::initializer_list<const char*> allowed,
                         const std::string& context);

Json tn_operator_to_json(const TnOperator& op);
TnOperator tn_operator_from_json(const Json& j);

Json operator_pool_to_json(const OperatorPool& pool);
OperatorPool operator_pool_from_json(const Json& j);

// Expression export: skeleton, operator names, packed parameters with their
// layout, and the rendered formula.
Json expression_to_json(const Expression& expr, const OperatorPool& pool);
Expression expression_from_json(const Json& j, const OperatorPool& pool);

Json controller_to_json(const ControllerState& c);
ControllerState controller_from_json(const Json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a over a string, rendered as fixed-width hex (checksums, config hash).
std::string fnv1a_hex(const std::string& data);

}  // namespace fex

#endif
