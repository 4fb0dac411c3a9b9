#ifndef FEX_EVAL_HPP
#define FEX_EVAL_HPP

#include <string>
#include <vector>

#include "fex/tree.hpp"
#include "fex/unary_ops.hpp"

namespace fex {

// Division by a magnitude below this floor is recorded as a domain error and
// evaluated with the denominator clamped to the signed floor.
inline constexpr double kDivisionFloor = 1e-12;

struct Jet {
  double value = 0.0;
  std::vector<double> grad;  // length d
  double lap = 0.0;
};

struct EvalStatus {
  bool domain_error = false;  // division floor was hit somewhere in the tree
};

// Value and first two derivatives of a leaf operator at one input coordinate.
struct LeafDerivs {
  double u = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// Supplies leaf-operator evaluations at the current point. The loss kernels
// substitute precomputed tables; DirectLeafSource computes on the fly.
class LeafSource {
public:
  virtual ~LeafSource() = default;
  virtual LeafDerivs leaf(int op, int coord) const = 0;
  virtual double leaf_value(int op, int coord) const = 0;
};

class DirectLeafSource final : public LeafSource {
public:
  DirectLeafSource(const OperatorPool& pool, const double* x)
      : pool_(&pool), x_(x) {}
  LeafDerivs leaf(int op, int coord) const override {
    const Derivs4 d = pool_->unary[static_cast<size_t>(op)].derivs(x_[coord]);
    return {d.f, d.d1, d.d2};
  }
  double leaf_value(int op, int coord) const override {
    return pool_->unary[static_cast<size_t>(op)].value(x_[coord]);
  }

private:
  const OperatorPool* pool_;
  const double* x_;
};

struct ValueLap {
  double value = 0.0;
  double lap = 0.0;
};

// Full parameter sensitivities of one evaluation. dgrad is |theta| x d
// row-major: row p holds the sensitivity of the whole gradient to theta_p.
struct JetSensitivity {
  Jet jet;
  std::vector<double> dvalue;
  std::vector<double> dgrad;
  std::vector<double> dlap;
};

// Reusable evaluator bound to one skeleton and pool; holds per-node scratch
// so repeated calls over many points allocate nothing.
class JetEvaluator {
public:
  JetEvaluator(const TreeSkeleton& skel, const OperatorPool& pool);

  const TreeSkeleton& skeleton() const { return *skel_; }

  double value(const OperatorSequence& e, const ParamVector& theta,
               const LeafSource& source, EvalStatus* status = nullptr);

  // Forward pass computing value, gradient, Laplacian at every node; the
  // gradient stays in internal scratch (see jet() for a copying variant).
  ValueLap jet_forward(const OperatorSequence& e, const ParamVector& theta,
                       const LeafSource& source, EvalStatus* status = nullptr);

  Jet jet(const OperatorSequence& e, const ParamVector& theta,
          const LeafSource& source, EvalStatus* status = nullptr);

  // Reverse sweep over the state left by the latest jet_forward()/jet() with
  // the same e and theta: fills dtheta (length theta_size) with the gradient
  // of seed_value*value + seed_lap*lap with respect to theta.
  void backward(const OperatorSequence& e, const ParamVector& theta,
                double seed_value, double seed_lap, double* dtheta);

  // Reverse sweep over the state left by the latest value() with the same e
  // and theta: fills dtheta with seed * dvalue/dtheta. Only leaf values are
  // touched, so a values-only LeafSource suffices.
  void backward_value(const OperatorSequence& e, const ParamVector& theta,
                      double seed, double* dtheta);

  // jet_forward + backward in one call.
  ValueLap jet_adjoint(const OperatorSequence& e, const ParamVector& theta,
                       const LeafSource& source, double seed_value,
                       double seed_lap, double* dtheta,
                       EvalStatus* status = nullptr);

  // value + backward_value in one call.
  double value_grad(const OperatorSequence& e, const ParamVector& theta,
                    const LeafSource& source, double seed, double* dtheta,
                    EvalStatus* status = nullptr);

  // Forward-mode over every theta component; the reference implementation the
  // adjoint pass is validated against.
  JetSensitivity dense_sensitivity(const OperatorSequence& e,
                                   const ParamVector& theta,
                                   const LeafSource& source,
                                   EvalStatus* status = nullptr);

private:
  void forward_values(const OperatorSequence& e, const ParamVector& theta,
                      const LeafSource& source, EvalStatus* status);
  void forward_jets(const OperatorSequence& e, const ParamVector& theta,
                    const LeafSource& source, EvalStatus* status);

  const TreeSkeleton* skel_;
  const OperatorPool* pool_;
  int d_;
  // Forward state per node.
  std::vector<double> v_, l_;
  std::vector<double> g_;          // node*d
  std::vector<Derivs4> fder_;      // interior unary operator derivatives
  std::vector<LeafDerivs> leaf_;   // node*d leaf operator derivatives
  std::vector<double> leafval_;    // node*d, value-only path
  std::vector<double> denom_;      // clamped denominator per binary node
  // Adjoint state per node.
  std::vector<double> av_, al_;
  std::vector<double> ag_;         // node*d
  // Tangent state per node (dense path).
  std::vector<double> tv_, tl_;
  std::vector<double> tg_;         // node*d
  // theta component -> owning node and slot (alpha index or scale_len=beta).
  std::vector<int> owner_node_, owner_slot_;
};

// One-shot conveniences over a temporary evaluator.
double evaluate(const TreeSkeleton& skel, const OperatorSequence& e,
                const OperatorPool& pool, const ParamVector& theta,
                const double* x, EvalStatus* status = nullptr);

Jet evaluate_jet(const TreeSkeleton& skel, const OperatorSequence& e,
                 const OperatorPool& pool, const ParamVector& theta,
                 const double* x, EvalStatus* status = nullptr);

JetSensitivity evaluate_jet_with_sensitivity(const TreeSkeleton& skel,
                                             const OperatorSequence& e,
                                             const OperatorPool& pool,
                                             const ParamVector& theta,
                                             const double* x,
                                             EvalStatus* status = nullptr);

// Deterministic infix rendering; vector leaf scalings elide entries beyond 4.
std::string to_expression_string(const TreeSkeleton& skel,
                                 const OperatorSequence& e,
                                 const OperatorPool& pool,
                                 const ParamVector& theta, int precision = 6);

// A complete searchable result: topology, operator choice, parameters.
struct Expression {
  TreeSkeleton skel;
  OperatorSequence e;
  ParamVector theta;
};

}  // namespace fex

#endif
