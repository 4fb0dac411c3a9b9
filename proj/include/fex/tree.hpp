#ifndef FEX_TREE_HPP
#define FEX_TREE_HPP

#include <cstdint>
#include <vector>

#include "fex/rng.hpp"

namespace fex {

enum class NodeKind { leaf, unary, binary };

// One node of a fixed expression tree. Children refer to indices in
// TreeSkeleton::nodes; leaves consume the raw input vector instead.
struct Node {
  NodeKind kind = NodeKind::leaf;
  int left = -1;   // sole child for interior unary nodes
  int right = -1;  // second child for binary nodes
  int scale_len = 0;     // length of this node's alpha block (0 for binary)
  int theta_offset = -1; // start of [alpha..., beta] in the packed vector
};

// Canonical tree of a given depth. Nodes are stored in inorder traversal
// order, which is also the order operator sequences and packed parameters
// follow.
struct TreeSkeleton {
  int depth = 0;
  int input_dim = 0;
  std::vector<Node> nodes;
  int root = -1;
  int theta_size = 0;

  int node_count() const { return static_cast<int>(nodes.size()); }
};

// Operator assignment, one entry per node in skeleton order. Unary nodes
// index the unary pool, binary nodes the binary set.
using OperatorSequence = std::vector<int>;

// Flat parameter vector. Per unary node, the packed block is
// [alpha_0..alpha_{scale_len-1}, beta] at the node's theta_offset.
struct ParamVector {
  std::vector<double> values;

  int size() const { return static_cast<int>(values.size()); }
  double* data() { return values.data(); }
  const double* data() const { return values.data(); }
};

// Supported depths: 1 (single leaf), 2 (binary over two leaves),
// 3 (unary root over a depth-2 tree).
TreeSkeleton build_skeleton(int depth, int input_dim);

// Per-node view into a packed vector (alpha pointer + beta), empty for
// binary nodes.
struct NodeParams {
  const double* alpha = nullptr;
  int alpha_len = 0;
  double beta = 0.0;
};

NodeParams node_params(const TreeSkeleton& skel, int node,
                       const ParamVector& theta);

// Unpacked form used for round-trip checks and serialization.
struct UnpackedParams {
  std::vector<std::vector<double>> alpha;  // per node, empty for binary
  std::vector<double> beta;                // per node, 0 for binary
};

UnpackedParams unpack_params(const TreeSkeleton& skel, const ParamVector& theta);
ParamVector pack_params(const TreeSkeleton& skel, const UnpackedParams& up);

// Leaf alpha entries i.i.d. uniform on [-1,1] scaled by d^{-1/2}, interior
// alpha = 1, all beta = 0.
ParamVector random_init_theta(const TreeSkeleton& skel, Rng& rng);

// Throws FexError when the sequence length or any entry is out of range.
void validate_sequence(const TreeSkeleton& skel, const OperatorSequence& e,
                       int unary_count, int binary_count);

}  // namespace fex

#endif
