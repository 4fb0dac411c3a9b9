#include "fex/eval.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

#include "fex/error.hpp"

namespace fex {
namespace {

double clamp_denominator(double v, EvalStatus* status) {
  if (std::abs(v) < kDivisionFloor) {
    if (status != nullptr) status->domain_error = true;
    return v >= 0.0 ? kDivisionFloor : -kDivisionFloor;
  }
  return v;
}

}  // namespace

JetEvaluator::JetEvaluator(const TreeSkeleton& skel, const OperatorPool& pool)
    : skel_(&skel), pool_(&pool), d_(skel.input_dim) {
  const size_t nn = skel.nodes.size();
  const size_t nd = nn * static_cast<size_t>(d_);
  v_.assign(nn, 0.0);
  l_.assign(nn, 0.0);
  g_.assign(nd, 0.0);
  fder_.assign(nn, Derivs4{});
  leaf_.assign(nd, LeafDerivs{});
  leafval_.assign(nd, 0.0);
  denom_.assign(nn, 0.0);
  av_.assign(nn, 0.0);
  al_.assign(nn, 0.0);
  ag_.assign(nd, 0.0);
  tv_.assign(nn, 0.0);
  tl_.assign(nn, 0.0);
  tg_.assign(nd, 0.0);
  owner_node_.assign(static_cast<size_t>(skel.theta_size), -1);
  owner_slot_.assign(static_cast<size_t>(skel.theta_size), -1);
  for (int i = 0; i < skel.node_count(); ++i) {
    const Node& n = skel.nodes[static_cast<size_t>(i)];
    if (n.kind == NodeKind::binary) continue;
    for (int k = 0; k <= n.scale_len; ++k) {
      owner_node_[static_cast<size_t>(n.theta_offset + k)] = i;
      owner_slot_[static_cast<size_t>(n.theta_offset + k)] = k;
    }
  }
}

void JetEvaluator::forward_values(const OperatorSequence& e,
                                  const ParamVector& theta,
                                  const LeafSource& source,
                                  EvalStatus* status) {
  auto rec = [&](auto&& self, int i) -> void {
    const Node& n = skel_->nodes[static_cast<size_t>(i)];
    switch (n.kind) {
      case NodeKind::leaf: {
        const NodeParams np = node_params(*skel_, i, theta);
        double v = np.beta;
        for (int c = 0; c < d_; ++c) {
          const double u = source.leaf_value(e[static_cast<size_t>(i)], c);
          leafval_[static_cast<size_t>(i) * d_ + c] = u;
          v += np.alpha[c] * u;
        }
        v_[static_cast<size_t>(i)] = v;
        break;
      }
      case NodeKind::unary: {
        self(self, n.left);
        const NodeParams np = node_params(*skel_, i, theta);
        const Derivs4 f =
            pool_->unary[static_cast<size_t>(e[static_cast<size_t>(i)])]
                .derivs(v_[static_cast<size_t>(n.left)]);
        fder_[static_cast<size_t>(i)] = f;
        v_[static_cast<size_t>(i)] = np.alpha[0] * f.f + np.beta;
        break;
      }
      case NodeKind::binary: {
        self(self, n.left);
        self(self, n.right);
        const double a = v_[static_cast<size_t>(n.left)];
        const double b = v_[static_cast<size_t>(n.right)];
        switch (pool_->binary[static_cast<size_t>(e[static_cast<size_t>(i)])]) {
          case BinaryOp::add: v_[static_cast<size_t>(i)] = a + b; break;
          case BinaryOp::sub: v_[static_cast<size_t>(i)] = a - b; break;
          case BinaryOp::mul: v_[static_cast<size_t>(i)] = a * b; break;
          case BinaryOp::div: {
            const double denom = clamp_denominator(b, status);
            denom_[static_cast<size_t>(i)] = denom;
            v_[static_cast<size_t>(i)] = a / denom;
            break;
          }
        }
        break;
      }
    }
  };
  rec(rec, skel_->root);
}

void JetEvaluator::forward_jets(const OperatorSequence& e,
                                const ParamVector& theta,
                                const LeafSource& source, EvalStatus* status) {
  auto rec = [&](auto&& self, int i) -> void {
    const Node& n = skel_->nodes[static_cast<size_t>(i)];
    double* gi = g_.data() + static_cast<size_t>(i) * d_;
    switch (n.kind) {
      case NodeKind::leaf: {
        const NodeParams np = node_params(*skel_, i, theta);
        double v = np.beta;
        double lap = 0.0;
        for (int c = 0; c < d_; ++c) {
          const LeafDerivs L = source.leaf(e[static_cast<size_t>(i)], c);
          leaf_[static_cast<size_t>(i) * d_ + c] = L;
          v += np.alpha[c] * L.u;
          gi[c] = np.alpha[c] * L.d1;
          lap += np.alpha[c] * L.d2;
        }
        v_[static_cast<size_t>(i)] = v;
        l_[static_cast<size_t>(i)] = lap;
        break;
      }
      case NodeKind::unary: {
        self(self, n.left);
        const NodeParams np = node_params(*skel_, i, theta);
        const double* gc = g_.data() + static_cast<size_t>(n.left) * d_;
        const Derivs4 f =
            pool_->unary[static_cast<size_t>(e[static_cast<size_t>(i)])]
                .derivs(v_[static_cast<size_t>(n.left)]);
        fder_[static_cast<size_t>(i)] = f;
        double sumg2 = 0.0;
        for (int c = 0; c < d_; ++c) {
          gi[c] = np.alpha[0] * f.d1 * gc[c];
          sumg2 += gc[c] * gc[c];
        }
        v_[static_cast<size_t>(i)] = np.alpha[0] * f.f + np.beta;
        l_[static_cast<size_t>(i)] =
            np.alpha[0] *
            (f.d2 * sumg2 + f.d1 * l_[static_cast<size_t>(n.left)]);
        break;
      }
      case NodeKind::binary: {
        self(self, n.left);
        self(self, n.right);
        const double va = v_[static_cast<size_t>(n.left)];
        const double vb = v_[static_cast<size_t>(n.right)];
        const double la = l_[static_cast<size_t>(n.left)];
        const double lb = l_[static_cast<size_t>(n.right)];
        const double* ga = g_.data() + static_cast<size_t>(n.left) * d_;
        const double* gb = g_.data() + static_cast<size_t>(n.right) * d_;
        switch (pool_->binary[static_cast<size_t>(e[static_cast<size_t>(i)])]) {
          case BinaryOp::add:
            v_[static_cast<size_t>(i)] = va + vb;
            l_[static_cast<size_t>(i)] = la + lb;
            for (int c = 0; c < d_; ++c) gi[c] = ga[c] + gb[c];
            break;
          case BinaryOp::sub:
            v_[static_cast<size_t>(i)] = va - vb;
            l_[static_cast<size_t>(i)] = la - lb;
            for (int c = 0; c < d_; ++c) gi[c] = ga[c] - gb[c];
            break;
          case BinaryOp::mul: {
            double dot = 0.0;
            for (int c = 0; c < d_; ++c) {
              gi[c] = ga[c] * vb + va * gb[c];
              dot += ga[c] * gb[c];
            }
            v_[static_cast<size_t>(i)] = va * vb;
            l_[static_cast<size_t>(i)] = la * vb + 2.0 * dot + va * lb;
            break;
          }
          case BinaryOp::div: {
            const double denom = clamp_denominator(vb, status);
            denom_[static_cast<size_t>(i)] = denom;
            const double q = va / denom;
            double dot = 0.0;
            for (int c = 0; c < d_; ++c) {
              gi[c] = (ga[c] - q * gb[c]) / denom;
              dot += gi[c] * gb[c];
            }
            v_[static_cast<size_t>(i)] = q;
            l_[static_cast<size_t>(i)] = (la - 2.0 * dot - q * lb) / denom;
            break;
          }
        }
        break;
      }
    }
  };
  rec(rec, skel_->root);
}

double JetEvaluator::value(const OperatorSequence& e, const ParamVector& theta,
                           const LeafSource& source, EvalStatus* status) {
  forward_values(e, theta, source, status);
  return v_[static_cast<size_t>(skel_->root)];
}

ValueLap JetEvaluator::jet_forward(const OperatorSequence& e,
                                   const ParamVector& theta,
                                   const LeafSource& source,
                                   EvalStatus* status) {
  forward_jets(e, theta, source, status);
  return {v_[static_cast<size_t>(skel_->root)],
          l_[static_cast<size_t>(skel_->root)]};
}

Jet JetEvaluator::jet(const OperatorSequence& e, const ParamVector& theta,
                      const LeafSource& source, EvalStatus* status) {
  forward_jets(e, theta, source, status);
  Jet out;
  out.value = v_[static_cast<size_t>(skel_->root)];
  out.lap = l_[static_cast<size_t>(skel_->root)];
  const double* gr = g_.data() + static_cast<size_t>(skel_->root) * d_;
  out.grad.assign(gr, gr + d_);
  return out;
}

void JetEvaluator::backward(const OperatorSequence& e, const ParamVector& theta,
                            double seed_value, double seed_lap,
                            double* dtheta) {
  std::fill(av_.begin(), av_.end(), 0.0);
  std::fill(al_.begin(), al_.end(), 0.0);
  std::fill(ag_.begin(), ag_.end(), 0.0);
  std::memset(dtheta, 0, sizeof(double) * static_cast<size_t>(skel_->theta_size));
  av_[static_cast<size_t>(skel_->root)] = seed_value;
  al_[static_cast<size_t>(skel_->root)] = seed_lap;

  auto rec = [&](auto&& self, int i) -> void {
    const Node& n = skel_->nodes[static_cast<size_t>(i)];
    const double av = av_[static_cast<size_t>(i)];
    const double al = al_[static_cast<size_t>(i)];
    const double* ag = ag_.data() + static_cast<size_t>(i) * d_;
    switch (n.kind) {
      case NodeKind::leaf: {
        double* dt = dtheta + n.theta_offset;
        const LeafDerivs* L = leaf_.data() + static_cast<size_t>(i) * d_;
        for (int c = 0; c < d_; ++c) {
          dt[c] += av * L[c].u + ag[c] * L[c].d1 + al * L[c].d2;
        }
        dt[d_] += av;
        break;
      }
      case NodeKind::unary: {
        const NodeParams np = node_params(*skel_, i, theta);
        const double alpha = np.alpha[0];
        const Derivs4 f = fder_[static_cast<size_t>(i)];
        const int c = n.left;
        const double* cg = g_.data() + static_cast<size_t>(c) * d_;
        const double cl = l_[static_cast<size_t>(c)];
        double sumg2 = 0.0, sum_ag_cg = 0.0;
        for (int k = 0; k < d_; ++k) {
          sumg2 += cg[k] * cg[k];
          sum_ag_cg += ag[k] * cg[k];
        }
        double* dt = dtheta + n.theta_offset;
        dt[0] += av * f.f + sum_ag_cg * f.d1 +
                 al * (f.d2 * sumg2 + f.d1 * cl);
        dt[1] += av;
        av_[static_cast<size_t>(c)] +=
            av * alpha * f.d1 + sum_ag_cg * alpha * f.d2 +
            al * alpha * (f.d3 * sumg2 + f.d2 * cl);
        double* cag = ag_.data() + static_cast<size_t>(c) * d_;
        for (int k = 0; k < d_; ++k) {
          cag[k] += ag[k] * alpha * f.d1 + al * alpha * 2.0 * f.d2 * cg[k];
        }
        al_[static_cast<size_t>(c)] += al * alpha * f.d1;
        self(self, c);
        break;
      }
      case NodeKind::binary: {
        const int a = n.left, b = n.right;
        const double va = v_[static_cast<size_t>(a)];
        const double vb = v_[static_cast<size_t>(b)];
        const double la = l_[static_cast<size_t>(a)];
        const double lb = l_[static_cast<size_t>(b)];
        const double* ga = g_.data() + static_cast<size_t>(a) * d_;
        const double* gb = g_.data() + static_cast<size_t>(b) * d_;
        double* aag = ag_.data() + static_cast<size_t>(a) * d_;
        double* bag = ag_.data() + static_cast<size_t>(b) * d_;
        switch (pool_->binary[static_cast<size_t>(e[static_cast<size_t>(i)])]) {
          case BinaryOp::add:
            av_[static_cast<size_t>(a)] += av;
            av_[static_cast<size_t>(b)] += av;
            al_[static_cast<size_t>(a)] += al;
            al_[static_cast<size_t>(b)] += al;
            for (int k = 0; k < d_; ++k) {
              aag[k] += ag[k];
              bag[k] += ag[k];
            }
            break;
          case BinaryOp::sub:
            av_[static_cast<size_t>(a)] += av;
            av_[static_cast<size_t>(b)] -= av;
            al_[static_cast<size_t>(a)] += al;
            al_[static_cast<size_t>(b)] -= al;
            for (int k = 0; k < d_; ++k) {
              aag[k] += ag[k];
              bag[k] -= ag[k];
            }
            break;
          case BinaryOp::mul: {
            double ag_dot_gb = 0.0, ag_dot_ga = 0.0;
            for (int k = 0; k < d_; ++k) {
              ag_dot_gb += ag[k] * gb[k];
              ag_dot_ga += ag[k] * ga[k];
            }
            av_[static_cast<size_t>(a)] += av * vb + ag_dot_gb + al * lb;
            av_[static_cast<size_t>(b)] += av * va + ag_dot_ga + al * la;
            al_[static_cast<size_t>(a)] += al * vb;
            al_[static_cast<size_t>(b)] += al * va;
            for (int k = 0; k < d_; ++k) {
              aag[k] += ag[k] * vb + al * 2.0 * gb[k];
              bag[k] += ag[k] * va + al * 2.0 * ga[k];
            }
            break;
          }
          case BinaryOp::div: {
            const double denom = denom_[static_cast<size_t>(i)];
            const double q = v_[static_cast<size_t>(i)];
            const double ql = l_[static_cast<size_t>(i)];
            const double* qg = g_.data() + static_cast<size_t>(i) * d_;
            // q.l = (la - 2 qg.gb - q lb)/denom
            al_[static_cast<size_t>(a)] += al / denom;
            double aqv = av - al * lb / denom;
            al_[static_cast<size_t>(b)] -= al * q / denom;
            av_[static_cast<size_t>(b)] -= al * ql / denom;
            double aqg_dot_gb = 0.0, aqg_dot_qg = 0.0;
            for (int k = 0; k < d_; ++k) {
              const double aqg = ag[k] - al * 2.0 * gb[k] / denom;
              bag[k] += -al * 2.0 * qg[k] / denom - aqg * q / denom;
              aag[k] += aqg / denom;
              aqg_dot_gb += aqg * gb[k];
              aqg_dot_qg += aqg * qg[k];
            }
            // q.g_k = (ga_k - q gb_k)/denom
            aqv -= aqg_dot_gb / denom;
            av_[static_cast<size_t>(b)] -= aqg_dot_qg / denom;
            // q.v = va/denom
            av_[static_cast<size_t>(a)] += aqv / denom;
            av_[static_cast<size_t>(b)] -= aqv * q / denom;
            break;
          }
        }
        self(self, a);
        self(self, b);
        break;
      }
    }
  };
  rec(rec, skel_->root);
}

ValueLap JetEvaluator::jet_adjoint(const OperatorSequence& e,
                                   const ParamVector& theta,
                                   const LeafSource& source, double seed_value,
                                   double seed_lap, double* dtheta,
                                   EvalStatus* status) {
  const ValueLap out = jet_forward(e, theta, source, status);
  backward(e, theta, seed_value, seed_lap, dtheta);
  return out;
}

void JetEvaluator::backward_value(const OperatorSequence& e,
                                  const ParamVector& theta, double seed,
                                  double* dtheta) {
  std::fill(av_.begin(), av_.end(), 0.0);
  std::memset(dtheta, 0, sizeof(double) * static_cast<size_t>(skel_->theta_size));
  av_[static_cast<size_t>(skel_->root)] = seed;

  auto rec = [&](auto&& self, int i) -> void {
    const Node& n = skel_->nodes[static_cast<size_t>(i)];
    const double av = av_[static_cast<size_t>(i)];
    switch (n.kind) {
      case NodeKind::leaf: {
        double* dt = dtheta + n.theta_offset;
        const double* lv = leafval_.data() + static_cast<size_t>(i) * d_;
        for (int c = 0; c < d_; ++c) dt[c] += av * lv[c];
        dt[d_] += av;
        break;
      }
      case NodeKind::unary: {
        const NodeParams np = node_params(*skel_, i, theta);
        const Derivs4 f = fder_[static_cast<size_t>(i)];
        double* dt = dtheta + n.theta_offset;
        dt[0] += av * f.f;
        dt[1] += av;
        av_[static_cast<size_t>(n.left)] += av * np.alpha[0] * f.d1;
        self(self, n.left);
        break;
      }
      case NodeKind::binary: {
        const int a = n.left, b = n.right;
        const double va = v_[static_cast<size_t>(a)];
        const double vb = v_[static_cast<size_t>(b)];
        switch (pool_->binary[static_cast<size_t>(e[static_cast<size_t>(i)])]) {
          case BinaryOp::add:
            av_[static_cast<size_t>(a)] += av;
            av_[static_cast<size_t>(b)] += av;
            break;
          case BinaryOp::sub:
            av_[static_cast<size_t>(a)] += av;
            av_[static_cast<size_t>(b)] -= av;
            break;
          case BinaryOp::mul:
            av_[static_cast<size_t>(a)] += av * vb;
            av_[static_cast<size_t>(b)] += av * va;
            break;
          case BinaryOp::div: {
            const double denom = denom_[static_cast<size_t>(i)];
            av_[static_cast<size_t>(a)] += av / denom;
            av_[static_cast<size_t>(b)] -=
                av * v_[static_cast<size_t>(i)] / denom;
            break;
          }
        }
        self(self, a);
        self(self, b);
        break;
      }
    }
  };
  rec(rec, skel_->root);
}

double JetEvaluator::value_grad(const OperatorSequence& e,
                                const ParamVector& theta,
                                const LeafSource& source, double seed,
                                double* dtheta, EvalStatus* status) {
  const double out = value(e, theta, source, status);
  backward_value(e, theta, seed, dtheta);
  return out;
}

JetSensitivity JetEvaluator::dense_sensitivity(const OperatorSequence& e,
                                               const ParamVector& theta,
                                               const LeafSource& source,
                                               EvalStatus* status) {
  forward_jets(e, theta, source, status);
  JetSensitivity out;
  out.jet.value = v_[static_cast<size_t>(skel_->root)];
  out.jet.lap = l_[static_cast<size_t>(skel_->root)];
  const double* gr = g_.data() + static_cast<size_t>(skel_->root) * d_;
  out.jet.grad.assign(gr, gr + d_);
  const int np = skel_->theta_size;
  out.dvalue.assign(static_cast<size_t>(np), 0.0);
  out.dlap.assign(static_cast<size_t>(np), 0.0);
  out.dgrad.assign(static_cast<size_t>(np) * d_, 0.0);

  for (int p = 0; p < np; ++p) {
    auto rec = [&](auto&& self, int i) -> void {
      const Node& n = skel_->nodes[static_cast<size_t>(i)];
      double* tg = tg_.data() + static_cast<size_t>(i) * d_;
      switch (n.kind) {
        case NodeKind::leaf: {
          tv_[static_cast<size_t>(i)] = 0.0;
          tl_[static_cast<size_t>(i)] = 0.0;
          std::memset(tg, 0, sizeof(double) * static_cast<size_t>(d_));
          if (owner_node_[static_cast<size_t>(p)] == i) {
            const int slot = owner_slot_[static_cast<size_t>(p)];
            if (slot < n.scale_len) {
              const LeafDerivs L = leaf_[static_cast<size_t>(i) * d_ + slot];
              tv_[static_cast<size_t>(i)] = L.u;
              tg[slot] = L.d1;
              tl_[static_cast<size_t>(i)] = L.d2;
            } else {
              tv_[static_cast<size_t>(i)] = 1.0;
            }
          }
          break;
        }
        case NodeKind::unary: {
          const int c = n.left;
          self(self, c);
          const NodeParams nprm = node_params(*skel_, i, theta);
          const double alpha = nprm.alpha[0];
          const Derivs4 f = fder_[static_cast<size_t>(i)];
          const double* cg = g_.data() + static_cast<size_t>(c) * d_;
          const double* tcg = tg_.data() + static_cast<size_t>(c) * d_;
          const double cv_t = tv_[static_cast<size_t>(c)];
          const double cl = l_[static_cast<size_t>(c)];
          double sumg2 = 0.0, sum_cg_tcg = 0.0;
          for (int k = 0; k < d_; ++k) {
            sumg2 += cg[k] * cg[k];
            sum_cg_tcg += cg[k] * tcg[k];
          }
          tv_[static_cast<size_t>(i)] = alpha * f.d1 * cv_t;
          for (int k = 0; k < d_; ++k) {
            tg[k] = alpha * (f.d2 * cv_t * cg[k] + f.d1 * tcg[k]);
          }
          tl_[static_cast<size_t>(i)] =
              alpha * (f.d3 * cv_t * sumg2 + 2.0 * f.d2 * sum_cg_tcg +
                       f.d2 * cv_t * cl + f.d1 * tl_[static_cast<size_t>(c)]);
          if (owner_node_[static_cast<size_t>(p)] == i) {
            if (owner_slot_[static_cast<size_t>(p)] == 0) {
              tv_[static_cast<size_t>(i)] += f.f;
              for (int k = 0; k < d_; ++k) tg[k] += f.d1 * cg[k];
              tl_[static_cast<size_t>(i)] += f.d2 * sumg2 + f.d1 * cl;
            } else {
              tv_[static_cast<size_t>(i)] += 1.0;
            }
          }
          break;
        }
        case NodeKind::binary: {
          const int a = n.left, b = n.right;
          self(self, a);
          self(self, b);
          const double va = v_[static_cast<size_t>(a)];
          const double vb = v_[static_cast<size_t>(b)];
          const double la = l_[static_cast<size_t>(a)];
          const double lb = l_[static_cast<size_t>(b)];
          const double tva = tv_[static_cast<size_t>(a)];
          const double tvb = tv_[static_cast<size_t>(b)];
          const double tla = tl_[static_cast<size_t>(a)];
          const double tlb = tl_[static_cast<size_t>(b)];
          const double* ga = g_.data() + static_cast<size_t>(a) * d_;
          const double* gb = g_.data() + static_cast<size_t>(b) * d_;
          const double* tga = tg_.data() + static_cast<size_t>(a) * d_;
          const double* tgb = tg_.data() + static_cast<size_t>(b) * d_;
          switch (
              pool_->binary[static_cast<size_t>(e[static_cast<size_t>(i)])]) {
            case BinaryOp::add:
              tv_[static_cast<size_t>(i)] = tva + tvb;
              tl_[static_cast<size_t>(i)] = tla + tlb;
              for (int k = 0; k < d_; ++k) tg[k] = tga[k] + tgb[k];
              break;
            case BinaryOp::sub:
              tv_[static_cast<size_t>(i)] = tva - tvb;
              tl_[static_cast<size_t>(i)] = tla - tlb;
              for (int k = 0; k < d_; ++k) tg[k] = tga[k] - tgb[k];
              break;
            case BinaryOp::mul: {
              double cross = 0.0;
              for (int k = 0; k < d_; ++k) {
                tg[k] = tga[k] * vb + ga[k] * tvb + tva * gb[k] + va * tgb[k];
                cross += tga[k] * gb[k] + ga[k] * tgb[k];
              }
              tv_[static_cast<size_t>(i)] = tva * vb + va * tvb;
              tl_[static_cast<size_t>(i)] =
                  tla * vb + la * tvb + 2.0 * cross + tva * lb + va * tlb;
              break;
            }
            case BinaryOp::div: {
              const double denom = denom_[static_cast<size_t>(i)];
              const double q = v_[static_cast<size_t>(i)];
              const double ql = l_[static_cast<size_t>(i)];
              const double* qg = g_.data() + static_cast<size_t>(i) * d_;
              const double tqv = (tva - q * tvb) / denom;
              double cross = 0.0;
              for (int k = 0; k < d_; ++k) {
                tg[k] =
                    (tga[k] - tqv * gb[k] - q * tgb[k] - qg[k] * tvb) / denom;
                cross += tg[k] * gb[k] + qg[k] * tgb[k];
              }
              tv_[static_cast<size_t>(i)] = tqv;
              tl_[static_cast<size_t>(i)] =
                  (tla - 2.0 * cross - tqv * lb - q * tlb - ql * tvb) / denom;
              break;
            }
          }
          break;
        }
      }
    };
    rec(rec, skel_->root);
    out.dvalue[static_cast<size_t>(p)] = tv_[static_cast<size_t>(skel_->root)];
    out.dlap[static_cast<size_t>(p)] = tl_[static_cast<size_t>(skel_->root)];
    const double* tgr = tg_.data() + static_cast<size_t>(skel_->root) * d_;
    for (int k = 0; k < d_; ++k) {
      out.dgrad[static_cast<size_t>(p) * d_ + k] = tgr[k];
    }
  }
  return out;
}

double evaluate(const TreeSkeleton& skel, const OperatorSequence& e,
                const OperatorPool& pool, const ParamVector& theta,
                const double* x, EvalStatus* status) {
  JetEvaluator ev(skel, pool);
  DirectLeafSource source(pool, x);
  return ev.value(e, theta, source, status);
}

Jet evaluate_jet(const TreeSkeleton& skel, const OperatorSequence& e,
                 const OperatorPool& pool, const ParamVector& theta,
                 const double* x, EvalStatus* status) {
  JetEvaluator ev(skel, pool);
  DirectLeafSource source(pool, x);
  return ev.jet(e, theta, source, status);
}

JetSensitivity evaluate_jet_with_sensitivity(const TreeSkeleton& skel,
                                             const OperatorSequence& e,
                                             const OperatorPool& pool,
                                             const ParamVector& theta,
                                             const double* x,
                                             EvalStatus* status) {
  JetEvaluator ev(skel, pool);
  DirectLeafSource source(pool, x);
  return ev.dense_sensitivity(e, theta, source, status);
}

namespace {

std::string fmt_number(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

// "" for alpha=1, "-" for alpha=-1, otherwise "<alpha>·".
std::string scale_prefix(double alpha, int precision) {
  if (alpha == 1.0) return "";
  if (alpha == -1.0) return "-";
  return fmt_number(alpha, precision) + "·";
}

std::string bias_suffix(double beta, int precision) {
  if (beta == 0.0) return "";
  if (beta > 0.0) return "+" + fmt_number(beta, precision);
  return fmt_number(beta, precision);
}

std::string scalar_apply(const std::string& name, const std::string& arg) {
  if (name == "Id") return arg;
  if (name == "0" || name == "1") return name;
  return name + "(" + arg + ")";
}

}  // namespace

std::string to_expression_string(const TreeSkeleton& skel,
                                 const OperatorSequence& e,
                                 const OperatorPool& pool,
                                 const ParamVector& theta, int precision) {
  const int d = skel.input_dim;
  auto rec = [&](auto&& self, int i) -> std::string {
    const Node& n = skel.nodes[static_cast<size_t>(i)];
    if (n.kind == NodeKind::binary) {
      const BinaryOp op =
          pool.binary[static_cast<size_t>(e[static_cast<size_t>(i)])];
      const std::string mid = op == BinaryOp::mul
                                  ? std::string("·")
                                  : std::string(binary_op_name(op));
      return "(" + self(self, n.left) + " " + mid + " " + self(self, n.right) +
             ")";
    }
    const NodeParams np = node_params(skel, i, theta);
    const std::string& name =
        pool.unary[static_cast<size_t>(e[static_cast<size_t>(i)])].name;
    if (n.kind == NodeKind::unary) {
      return scale_prefix(np.alpha[0], precision) +
             scalar_apply(name, self(self, n.left)) +
             bias_suffix(np.beta, precision);
    }
    if (d == 1) {
      return scale_prefix(np.alpha[0], precision) + scalar_apply(name, "x") +
             bias_suffix(np.beta, precision);
    }
    std::string vec = "[";
    const int shown = d <= 4 ? d : 4;
    for (int k = 0; k < shown; ++k) {
      if (k > 0) vec += ", ";
      vec += fmt_number(np.alpha[k], precision);
    }
    if (d > 4) vec += ", …";
    vec += "]";
    const std::string mapped = name == "Id" ? "x" : name + ".(x)";
    return "⟨" + vec + ", " + mapped + "⟩" +
           bias_suffix(np.beta, precision);
  };
  return rec(rec, skel.root);
}

}  // namespace fex
