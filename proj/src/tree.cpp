#include "fex/tree.hpp"

#include <cmath>
#include <string>

#include "fex/error.hpp"

namespace fex {
namespace {

void assign_theta_layout(TreeSkeleton& skel) {
  int offset = 0;
  for (auto& node : skel.nodes) {
    switch (node.kind) {
      case NodeKind::leaf:
        node.scale_len = skel.input_dim;
        break;
      case NodeKind::unary:
        node.scale_len = 1;
        break;
      case NodeKind::binary:
        node.scale_len = 0;
        node.theta_offset = -1;
        continue;
    }
    node.theta_offset = offset;
    offset += node.scale_len + 1;
  }
  skel.theta_size = offset;
}

}  // namespace

TreeSkeleton build_skeleton(int depth, int input_dim) {
  if (input_dim < 1) {
    throw FexError("build_skeleton: input_dim must be >= 1, got " +
                   std::to_string(input_dim));
  }
  TreeSkeleton skel;
  skel.depth = depth;
  skel.input_dim = input_dim;
  switch (depth) {
    case 1:
      skel.nodes = {{NodeKind::leaf, -1, -1, 0, -1}};
      skel.root = 0;
      break;
    case 2:
      skel.nodes = {{NodeKind::leaf, -1, -1, 0, -1},
                    {NodeKind::binary, 0, 2, 0, -1},
                    {NodeKind::leaf, -1, -1, 0, -1}};
      skel.root = 1;
      break;
    case 3:
      skel.nodes = {{NodeKind::leaf, -1, -1, 0, -1},
                    {NodeKind::binary, 0, 2, 0, -1},
                    {NodeKind::leaf, -1, -1, 0, -1},
                    {NodeKind::unary, 1, -1, 0, -1}};
      skel.root = 3;
      break;
    default:
      throw FexError("build_skeleton: unsupported depth " +
                     std::to_string(depth) + " (supported: 1, 2, 3)");
  }
  assign_theta_layout(skel);
  return skel;
}

NodeParams node_params(const TreeSkeleton& skel, int node,
                       const ParamVector& theta) {
  const Node& n = skel.nodes[static_cast<size_t>(node)];
  if (n.kind == NodeKind::binary) return {};
  const double* base = theta.data() + n.theta_offset;
  return {base, n.scale_len, base[n.scale_len]};
}

UnpackedParams unpack_params(const TreeSkeleton& skel,
                             const ParamVector& theta) {
  if (theta.size() != skel.theta_size) {
    throw FexError("unpack_params: parameter length " +
                   std::to_string(theta.size()) + " does not match layout " +
                   std::to_string(skel.theta_size));
  }
  UnpackedParams up;
  up.alpha.resize(skel.nodes.size());
  up.beta.assign(skel.nodes.size(), 0.0);
  for (int i = 0; i < skel.node_count(); ++i) {
    NodeParams np = node_params(skel, i, theta);
    if (np.alpha == nullptr) continue;
    up.alpha[static_cast<size_t>(i)].assign(np.alpha, np.alpha + np.alpha_len);
    up.beta[static_cast<size_t>(i)] = np.beta;
  }
  return up;
}

ParamVector pack_params(const TreeSkeleton& skel, const UnpackedParams& up) {
  if (up.alpha.size() != skel.nodes.size() ||
      up.beta.size() != skel.nodes.size()) {
    throw FexError("pack_params: node count mismatch");
  }
  ParamVector theta;
  theta.values.assign(static_cast<size_t>(skel.theta_size), 0.0);
  for (int i = 0; i < skel.node_count(); ++i) {
    const Node& n = skel.nodes[static_cast<size_t>(i)];
    if (n.kind == NodeKind::binary) continue;
    const auto& a = up.alpha[static_cast<size_t>(i)];
    if (static_cast<int>(a.size()) != n.scale_len) {
      throw FexError("pack_params: alpha length mismatch at node " +
                     std::to_string(i));
    }
    double* base = theta.values.data() + n.theta_offset;
    for (int k = 0; k < n.scale_len; ++k) base[k] = a[static_cast<size_t>(k)];
    base[n.scale_len] = up.beta[static_cast<size_t>(i)];
  }
  return theta;
}

ParamVector random_init_theta(const TreeSkeleton& skel, Rng& rng) {
  ParamVector theta;
  theta.values.assign(static_cast<size_t>(skel.theta_size), 0.0);
  const double leaf_scale = 1.0 / std::sqrt(static_cast<double>(skel.input_dim));
  for (const auto& node : skel.nodes) {
    if (node.kind == NodeKind::binary) continue;
    double* base = theta.values.data() + node.theta_offset;
    if (node.kind == NodeKind::leaf) {
      for (int k = 0; k < node.scale_len; ++k) {
        base[k] = rng.uniform(-1.0, 1.0) * leaf_scale;
      }
    } else {
      base[0] = 1.0;
    }
    base[node.scale_len] = 0.0;
  }
  return theta;
}

void validate_sequence(const TreeSkeleton& skel, const OperatorSequence& e,
                       int unary_count, int binary_count) {
  if (static_cast<int>(e.size()) != skel.node_count()) {
    throw FexError("operator sequence length " + std::to_string(e.size()) +
                   " does not match node count " +
                   std::to_string(skel.node_count()));
  }
  for (int i = 0; i < skel.node_count(); ++i) {
    const bool is_binary = skel.nodes[static_cast<size_t>(i)].kind ==
                           NodeKind::binary;
    const int limit = is_binary ? binary_count : unary_count;
    const int idx = e[static_cast<size_t>(i)];
    if (idx < 0 || idx >= limit) {
      throw FexError("operator index " + std::to_string(idx) + " at node " +
                     std::to_string(i) + " outside " +
                     (is_binary ? std::string("binary") : std::string("unary")) +
                     " set of size " + std::to_string(limit));
    }
  }
}

}  // namespace fex
