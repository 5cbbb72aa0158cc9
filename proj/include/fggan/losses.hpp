#pragma once

#include <vector>

#include "fggan/tensor.hpp"
#include "fggan/xbm.hpp"

namespace fggan {

// Margin and warmup gate for the contrastive objective.
struct ContrastiveConfig {
  double margin = 0.5;  // alpha in [0,1)
  bool enabled = false;
};

// Per-network loss components. Components are the unweighted values (0 when
// the component is switched off); total applies the weights.
struct LossBreakdown {
  double adv = 0.0;
  double ce = 0.0;
  double cl = 0.0;
  double total = 0.0;
};

struct LossWeights {
  double adv = 1.0;
  double ce = 1.0;
  double cl = 1.0;
};

// Hinge discriminator loss over matched real, generated, and mismatched-
// caption scores:
//   mean max(0, 1 - s_real) + 0.5 mean max(0, 1 + s_fake)
//                           + 0.5 mean max(0, 1 + s_mismatch).
struct HingeDResult {
  double value = 0.0;
  Tensor grad_real;
  Tensor grad_fake;
  Tensor grad_mismatch;
};
HingeDResult hinge_d(const Tensor& real_scores, const Tensor& fake_scores,
                     const Tensor& mismatch_scores);

// Hinge generator loss, -mean(fake_scores).
struct HingeGResult {
  double value = 0.0;
  Tensor grad_fake;
};
HingeGResult hinge_g(const Tensor& fake_scores);

enum class Reduction { kMean, kSum };

// Auxiliary-classifier cross entropy for the discriminator: sum of the fake
// and real cross entropies, reduced over the batch (mean by default; kSum
// keeps the plain batch sum). Probabilities are clamped at 1e-12 before the
// log.
struct CeDResult {
  double value = 0.0;
  Tensor grad_probs_fake;
  Tensor grad_probs_real;
};
CeDResult ce_d(const Tensor& probs_fake, const Tensor& probs_real,
               const std::vector<int>& labels, Reduction reduction = Reduction::kMean);

// Generator-side cross entropy: reduced -log p_fake[i, y_i].
struct CeGResult {
  double value = 0.0;
  Tensor grad_probs_fake;
};
CeGResult ce_g(const Tensor& probs_fake, const std::vector<int>& labels,
               Reduction reduction = Reduction::kMean);

// Contrastive loss between live batch embeddings and the memory bank:
//   (1/NM) sum_i [ sum_{j: y_i = y_j} (1 - cos(e_i, e^x_j))
//                + sum_{j: y_i != y_j} max(cos(e_i, e^x_j) - alpha, 0) ].
// Gradients flow only to the batch rows; bank entries are constants.
struct ContrastiveResult {
  double value = 0.0;
  Tensor grad_embeddings;
};
ContrastiveResult contrastive(const Tensor& embeddings, const std::vector<int>& labels,
                              const MemoryBank::Snapshot& bank, double margin);

// total = w_adv adv + w_ce ce + w_cl cl, with cl forced to 0 while the
// warmup gate is closed. Throws NumericError naming the non-finite component.
LossBreakdown total_loss(double adv, double ce, double cl, const LossWeights& weights,
                         bool contrastive_enabled, const char* network);

}  // namespace fggan
