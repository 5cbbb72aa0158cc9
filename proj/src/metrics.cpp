#include "fggan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fggan {

namespace {

constexpr double kProbClamp = 1e-12;
constexpr double kSigmaReg = 1e-6;

// x W^T + b without touching a layer's forward cache.
Tensor affine(const Tensor& x, const LinearLayer& l) {
  Tensor y = matmul_transb(x, l.w);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double* row = y.row_ptr(i);
    for (std::size_t j = 0; j < y.cols(); ++j) row[j] += l.b.data[j];
  }
  return y;
}

}  // namespace

double fid(const GaussianStats& a, const GaussianStats& b) {
  if (!a.mu.same_shape(b.mu) || !a.sigma.same_shape(b.sigma)) {
    throw ShapeError("fid: stats dimensions " + a.mu.shape_str() + " vs " + b.mu.shape_str());
  }
  const std::size_t d = a.mu.size();

  Tensor sig_a = a.sigma;
  Tensor sig_b = b.sigma;
  const double min_eig_a = sym_eig(sig_a).values.data[0];
  const double min_eig_b = sym_eig(sig_b).values.data[0];
  if (min_eig_a < 1e-10 || min_eig_b < 1e-10) {
    for (std::size_t i = 0; i < d; ++i) {
      sig_a.at(i, i) += kSigmaReg;
      sig_b.at(i, i) += kSigmaReg;
    }
  }

  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a.mu.data[i] - b.mu.data[i];
    mean_term += diff * diff;
  }

  // tr((Sig_a Sig_b)^1/2) computed through the symmetric congruence
  // Sig_a^1/2 Sig_b Sig_a^1/2, which has the same eigenvalues.
  const Tensor root_a = sqrtm_psd(sig_a);
  Tensor mid = matmul(matmul(root_a, sig_b), root_a);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double avg = 0.5 * (mid.at(i, j) + mid.at(j, i));
      mid.at(i, j) = avg;
      mid.at(j, i) = avg;
    }
  const Tensor cross_root = sqrtm_psd(mid);

  const double result = mean_term + trace(sig_a) + trace(sig_b) - 2.0 * trace(cross_root);
  if (result < -1e-8) {
    throw NumericError("fid: negative distance " + std::to_string(result));
  }
  return std::max(0.0, result);
}

double inception_score(const Tensor& class_probs) {
  if (class_probs.rank() != 2 || class_probs.rows() == 0 || class_probs.cols() == 0) {
    throw ShapeError("inception_score: expected non-empty [n x K] probabilities");
  }
  const std::size_t n = class_probs.rows(), k = class_probs.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = class_probs.row_ptr(i);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (row[j] < -1e-12) {
        throw ValueError("inception_score: negative probability at row " + std::to_string(i));
      }
      sum += row[j];
    }
    if (std::fabs(sum - 1.0) > 1e-6) {
      throw ValueError("inception_score: row " + std::to_string(i) + " sums to " +
                       std::to_string(sum));
    }
  }
  std::vector<double> marginal(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = class_probs.row_ptr(i);
    for (std::size_t j = 0; j < k; ++j) marginal[j] += row[j];
  }
  for (double& m : marginal) m = std::max(m / static_cast<double>(n), kProbClamp);

  double kl_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = class_probs.row_ptr(i);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = row[j];
      if (p > 0.0) kl_sum += p * (std::log(p) - std::log(marginal[j]));
    }
  }
  return std::exp(kl_sum / static_cast<double>(n));
}

EvalNets EvalNets::build(const Dataset& dataset, std::size_t d_feat, std::uint64_t eval_seed) {
  if (dataset.records.empty()) throw ValueError("eval nets: dataset is empty");
  EvalNets nets;
  const std::size_t d = dataset.dim;
  const std::size_t hidden = std::max<std::size_t>(2 * d_feat, 32);

  Rng feat_rng(mix_seed(eval_seed, 11));
  nets.feat1_ = LinearLayer(d, hidden);
  nets.feat1_.init(feat_rng);
  nets.feat2_ = LinearLayer(hidden, d_feat);
  nets.feat2_.init(feat_rng);

  // Fit the IS classifier once on the real data; frozen afterwards.
  const int k = dataset.n_subclasses();
  Rng cls_rng(mix_seed(eval_seed, 12));
  nets.cls_ = LinearLayer(d, static_cast<std::size_t>(k));
  nets.cls_.init(cls_rng);

  AdamState mw{Tensor::zeros(nets.cls_.w.shape), Tensor::zeros(nets.cls_.w.shape)};
  AdamState mb{Tensor::zeros(nets.cls_.b.shape), Tensor::zeros(nets.cls_.b.shape)};
  const std::size_t batch = std::min<std::size_t>(128, dataset.size());
  const long steps = 400;
  for (long t = 1; t <= steps; ++t) {
    Tensor x({batch, d});
    std::vector<int> labels(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t row = cls_rng.uniform_index(dataset.size());
      std::copy(dataset.records[row].x.begin(), dataset.records[row].x.end(), x.row_ptr(i));
      labels[i] = dataset.label_of(row);
    }
    const Tensor logits = affine(x, nets.cls_);
    const Tensor probs = softmax_rows(logits);
    // Fused softmax + CE gradient: (p - onehot)/batch.
    Tensor dlogits = probs;
    const double inv = 1.0 / static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      double* row = dlogits.row_ptr(i);
      for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) row[j] *= inv;
      row[static_cast<std::size_t>(labels[i])] -= inv;
    }
    nets.cls_.zero_grad();
    nets.cls_.backward_at(dlogits, x);
    adam_update(nets.cls_.w, nets.cls_.grad_w, mw, t, 0.05);
    adam_update(nets.cls_.b, nets.cls_.grad_b, mb, t, 0.05);
  }
  return nets;
}

Tensor EvalNets::extract_features(const Tensor& x) const {
  const Tensor h = activation_forward(affine(x, feat1_), Activation::kTanh);
  return affine(h, feat2_);
}

Tensor EvalNets::class_probs(const Tensor& x) const {
  return softmax_rows(affine(x, cls_));
}

double fid_from_features(const Tensor& feats_a, const Tensor& feats_b) {
  return fid(fit_gaussian(feats_a), fit_gaussian(feats_b));
}

MetricsReport evaluate(const Generator& generator, const Dataset& dataset, const EvalNets& nets,
                       std::size_t n_samples, std::uint64_t eval_seed) {
  const std::size_t d_feat = nets.d_feat();
  if (n_samples < d_feat + 2) {
    throw ValueError("evaluate: need at least " + std::to_string(d_feat + 2) +
                     " samples for a rank-sufficient covariance, got " +
                     std::to_string(n_samples));
  }
  if (dataset.size() < d_feat + 2) {
    throw ValueError("evaluate: dataset too small for feature covariance");
  }
  const GeneratorConfig& gcfg = generator.config();
  if (gcfg.out_dim != dataset.dim) {
    throw ValueError("evaluate: generator emits dim " + std::to_string(gcfg.out_dim) +
                     " but dataset has dim " + std::to_string(dataset.dim));
  }

  const Tensor caption_pool = build_caption_pool(dataset, gcfg.t_dim);
  Rng rng(mix_seed(eval_seed, 21));

  Tensor fake_features({n_samples, d_feat});
  Tensor fake_probs({n_samples, static_cast<std::size_t>(dataset.n_subclasses())});
  const std::size_t chunk = 64;
  std::size_t done = 0;
  while (done < n_samples) {
    const std::size_t b = std::min(chunk, n_samples - done);
    Tensor z({b, gcfg.z_dim});
    for (double& v : z.data) v = rng.normal();
    Tensor t({b, gcfg.t_dim});
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t row = rng.uniform_index(dataset.size());
      const int label = dataset.label_of(row);
      const double* cap = caption_pool.row_ptr(static_cast<std::size_t>(label));
      std::copy(cap, cap + gcfg.t_dim, t.row_ptr(i));
    }
    const Tensor fake = generator.forward(z, t);
    const Tensor feats = nets.extract_features(fake);
    const Tensor probs = nets.class_probs(fake);
    for (std::size_t i = 0; i < b; ++i) {
      std::copy(feats.row_ptr(i), feats.row_ptr(i) + d_feat, fake_features.row_ptr(done + i));
      std::copy(probs.row_ptr(i), probs.row_ptr(i) + probs.cols(),
                fake_probs.row_ptr(done + i));
    }
    done += b;
  }

  const Tensor real_features = nets.extract_features(dataset_matrix(dataset));

  MetricsReport report;
  report.fid = fid_from_features(real_features, fake_features);
  report.is = inception_score(fake_probs);
  report.n_samples = n_samples;
  report.n_real = dataset.size();
  return report;
}

double noise_floor_fid(const Dataset& dataset, const EvalNets& nets, std::uint64_t eval_seed) {
  const std::size_t n = dataset.size();
  const std::size_t d_feat = nets.d_feat();
  if (n < 2 * (d_feat + 2)) {
    throw ValueError("noise floor: dataset too small to split");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(eval_seed, 22));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

  const std::size_t half = n / 2;
  const Tensor all = dataset_matrix(dataset);
  Tensor xa({half, dataset.dim});
  Tensor xb({n - half, dataset.dim});
  for (std::size_t i = 0; i < half; ++i) {
    std::copy(all.row_ptr(order[i]), all.row_ptr(order[i]) + dataset.dim, xa.row_ptr(i));
  }
  for (std::size_t i = half; i < n; ++i) {
    std::copy(all.row_ptr(order[i]), all.row_ptr(order[i]) + dataset.dim,
              xb.row_ptr(i - half));
  }
  return fid_from_features(nets.extract_features(xa), nets.extract_features(xb));
}

}  // namespace fggan
