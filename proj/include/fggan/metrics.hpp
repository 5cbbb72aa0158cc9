#pragma once

#include <cstdint>

#include "fggan/data.hpp"
#include "fggan/linalg.hpp"
#include "fggan/models.hpp"
#include "fggan/nn.hpp"
#include "fggan/tensor.hpp"

namespace fggan {

// Squared Frechet distance between two Gaussians:
//   ||mu_a - mu_b||^2 + tr(Sig_a + Sig_b - 2 sqrtm(Sig_a^1/2 Sig_b Sig_a^1/2)).
// Near-singular covariances are regularised with +1e-6 I on both sides.
double fid(const GaussianStats& a, const GaussianStats& b);

// exp(mean_i KL(p(y|x_i) || mean_j p(y|x_j))), rows validated to sum to 1
// within 1e-6. 0 log 0 counts as 0.
double inception_score(const Tensor& class_probs);

// Frozen evaluation networks standing in for Inception-v3: a random-init
// feature extractor for FID and a small classifier fitted once on the real
// data for IS. Seeded independently of training.
class EvalNets {
 public:
  EvalNets() = default;
  static EvalNets build(const Dataset& dataset, std::size_t d_feat, std::uint64_t eval_seed);

  Tensor extract_features(const Tensor& x) const;  // [n x d_feat]
  Tensor class_probs(const Tensor& x) const;       // [n x K]

  std::size_t d_feat() const { return feat2_.out_dim(); }
  std::size_t n_classes() const { return cls_.out_dim(); }

 private:
  LinearLayer feat1_, feat2_;  // random projection with tanh in between
  LinearLayer cls_;            // softmax classifier
};

struct MetricsReport {
  double fid = 0.0;
  double is = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_real = 0;
};

// Generates n_samples conditioned on captions drawn from the dataset, then
// scores FID (real vs generated features) and IS (classifier probabilities
// of the generated set). Deterministic given (generator params, dataset,
// eval_seed).
MetricsReport evaluate(const Generator& generator, const Dataset& dataset, const EvalNets& nets,
                       std::size_t n_samples, std::uint64_t eval_seed);

// FID between two feature sets.
double fid_from_features(const Tensor& feats_a, const Tensor& feats_b);

// FID between two disjoint halves of the real set: the best score reachable
// at this sample count.
double noise_floor_fid(const Dataset& dataset, const EvalNets& nets, std::uint64_t eval_seed);

}  // namespace fggan
