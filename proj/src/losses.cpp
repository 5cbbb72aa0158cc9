#include "fggan/losses.hpp"

#include <cmath>
#include <string>

namespace fggan {

namespace {

constexpr double kLogClamp = 1e-12;

void require_scores(const Tensor& t, const char* what) {
  if (t.rank() != 1 || t.size() == 0) {
    throw ShapeError(std::string(what) + ": expected non-empty rank-1 scores, got " +
                     t.shape_str());
  }
}

void require_probs(const Tensor& p, const std::vector<int>& labels, const char* what) {
  if (p.rank() != 2) throw ShapeError(std::string(what) + ": expected rank-2 probabilities");
  if (p.rows() != labels.size()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(p.rows()) + " rows vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const int k = static_cast<int>(p.cols());
  for (int y : labels) {
    if (y < 0 || y >= k) {
      throw ValueError(std::string(what) + ": label " + std::to_string(y) +
                       " outside [0, " + std::to_string(k) + ")");
    }
  }
}

}  // namespace

HingeDResult hinge_d(const Tensor& real_scores, const Tensor& fake_scores,
                     const Tensor& mismatch_scores) {
  require_scores(real_scores, "hinge_d");
  require_same_shape(real_scores, fake_scores, "hinge_d fake");
  require_same_shape(real_scores, mismatch_scores, "hinge_d mismatch");
  const std::size_t n = real_scores.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  HingeDResult r;
  r.grad_real = Tensor::zeros(real_scores.shape);
  r.grad_fake = Tensor::zeros(real_scores.shape);
  r.grad_mismatch = Tensor::zeros(real_scores.shape);
  for (std::size_t i = 0; i < n; ++i) {
    const double sr = real_scores.data[i];
    const double sf = fake_scores.data[i];
    const double sm = mismatch_scores.data[i];
    if (1.0 - sr > 0.0) {
      r.value += (1.0 - sr) * inv_n;
      r.grad_real.data[i] = -inv_n;
    }
    if (1.0 + sf > 0.0) {
      r.value += 0.5 * (1.0 + sf) * inv_n;
      r.grad_fake.data[i] = 0.5 * inv_n;
    }
    if (1.0 + sm > 0.0) {
      r.value += 0.5 * (1.0 + sm) * inv_n;
      r.grad_mismatch.data[i] = 0.5 * inv_n;
    }
  }
  return r;
}

HingeGResult hinge_g(const Tensor& fake_scores) {
  require_scores(fake_scores, "hinge_g");
  const std::size_t n = fake_scores.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  HingeGResult r;
  r.grad_fake = Tensor::full(fake_scores.shape, -inv_n);
  for (double s : fake_scores.data) r.value -= s * inv_n;
  return r;
}

CeDResult ce_d(const Tensor& probs_fake, const Tensor& probs_real,
               const std::vector<int>& labels, Reduction reduction) {
  require_probs(probs_fake, labels, "ce_d fake");
  require_probs(probs_real, labels, "ce_d real");
  require_same_shape(probs_fake, probs_real, "ce_d");
  const std::size_t n = labels.size();
  const double inv_n = reduction == Reduction::kMean ? 1.0 / static_cast<double>(n) : 1.0;

  CeDResult r;
  r.grad_probs_fake = Tensor::zeros(probs_fake.shape);
  r.grad_probs_real = Tensor::zeros(probs_real.shape);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = static_cast<std::size_t>(labels[i]);
    const double pf = probs_fake.at(i, y);
    const double pr = probs_real.at(i, y);
    r.value += -(std::log(std::max(pf, kLogClamp)) + std::log(std::max(pr, kLogClamp))) * inv_n;
    if (pf > kLogClamp) r.grad_probs_fake.at(i, y) = -inv_n / pf;
    if (pr > kLogClamp) r.grad_probs_real.at(i, y) = -inv_n / pr;
  }
  return r;
}

CeGResult ce_g(const Tensor& probs_fake, const std::vector<int>& labels,
               Reduction reduction) {
  require_probs(probs_fake, labels, "ce_g");
  const std::size_t n = labels.size();
  const double inv_n = reduction == Reduction::kMean ? 1.0 / static_cast<double>(n) : 1.0;
  CeGResult r;
  r.grad_probs_fake = Tensor::zeros(probs_fake.shape);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = static_cast<std::size_t>(labels[i]);
    const double pf = probs_fake.at(i, y);
    r.value += -std::log(std::max(pf, kLogClamp)) * inv_n;
    if (pf > kLogClamp) r.grad_probs_fake.at(i, y) = -inv_n / pf;
  }
  return r;
}

ContrastiveResult contrastive(const Tensor& embeddings, const std::vector<int>& labels,
                              const MemoryBank::Snapshot& bank, double margin) {
  if (embeddings.rank() != 2 || embeddings.rows() != labels.size()) {
    throw ShapeError("contrastive: embeddings " + embeddings.shape_str() + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (bank.empty()) {
    throw StateError("contrastive: memory bank is empty; gate on a warm bank");
  }
  if (bank.embeddings.cols() != embeddings.cols()) {
    throw ShapeError("contrastive: embedding dim " + embeddings.shape_str() + " vs bank " +
                     bank.embeddings.shape_str());
  }
  if (margin < 0.0 || margin >= 1.0) {
    throw ValueError("contrastive: margin " + std::to_string(margin) + " outside [0,1)");
  }
  const std::size_t n = embeddings.rows();
  const std::size_t m = bank.size();
  const std::size_t d = embeddings.cols();
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(m));

  ContrastiveResult r;
  r.grad_embeddings = Tensor::zeros(embeddings.shape);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ei = embeddings.row_ptr(i);
    double* gi = r.grad_embeddings.row_ptr(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double* ex = bank.embeddings.row_ptr(j);
      double cos = 0.0;
      for (std::size_t c = 0; c < d; ++c) cos += ei[c] * ex[c];
      if (labels[i] == bank.labels[j]) {
        r.value += (1.0 - cos) * scale;
        for (std::size_t c = 0; c < d; ++c) gi[c] -= ex[c] * scale;
      } else if (cos - margin > 0.0) {
        r.value += (cos - margin) * scale;
        for (std::size_t c = 0; c < d; ++c) gi[c] += ex[c] * scale;
      }
    }
  }
  return r;
}

LossBreakdown total_loss(double adv, double ce, double cl, const LossWeights& weights,
                         bool contrastive_enabled, const char* network) {
  LossBreakdown out;
  out.adv = adv;
  out.ce = ce;
  out.cl = contrastive_enabled ? cl : 0.0;
  const char* broken = nullptr;
  if (!std::isfinite(out.adv)) broken = "adv";
  if (!std::isfinite(out.ce)) broken = "ce";
  if (!std::isfinite(out.cl)) broken = "cl";
  if (broken) {
    throw NumericError(std::string(network) + " loss component " + broken + " is non-finite");
  }
  out.total = weights.adv * out.adv + weights.ce * out.ce + weights.cl * out.cl;
  return out;
}

}  // namespace fggan
