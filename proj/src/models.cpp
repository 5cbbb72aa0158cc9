#include "fggan/models.hpp"

#include <cmath>

#include "fggan/linalg.hpp"

namespace fggan {

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) {
    throw ShapeError("concat: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out({a.rows(), a.cols() + b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* dst = out.row_ptr(i);
    const double* pa = a.row_ptr(i);
    const double* pb = b.row_ptr(i);
    std::copy(pa, pa + a.cols(), dst);
    std::copy(pb, pb + b.cols(), dst + a.cols());
  }
  return out;
}

Generator::Generator(const GeneratorConfig& cfg, Rng& rng) : cfg_(cfg) {
  ctx_ = LinearLayer(cfg.ctx_dim + cfg.t_dim, cfg.ctx_dim);
  ctx_.init(rng);
  heads_.reserve(cfg.blocks);
  blocks_.reserve(cfg.blocks);
  for (std::size_t k = 0; k < cfg.blocks; ++k) {
    heads_.emplace_back(cfg.ctx_dim, 2 * cfg.hidden);
    heads_.back().init(rng);
    const std::size_t in = k == 0 ? cfg.z_dim + cfg.t_dim : cfg.hidden;
    blocks_.emplace_back(in, cfg.hidden);
    blocks_.back().init(rng);
  }
  out_ = LinearLayer(cfg.hidden, cfg.out_dim);
  out_.init(rng);
  // gamma head biases start at 1 so modulation begins as identity scale.
  for (LinearLayer& head : heads_) {
    for (std::size_t j = 0; j < cfg.hidden; ++j) head.b.data[j] = 1.0;
  }
}

Tensor Generator::forward(const Tensor& z, const Tensor& t, Cache& cache) const {
  if (z.rank() != 2 || t.rank() != 2 || z.rows() != t.rows()) {
    throw ShapeError("generator: z " + z.shape_str() + " vs t " + t.shape_str());
  }
  if (z.cols() != cfg_.z_dim || t.cols() != cfg_.t_dim) {
    throw ShapeError("generator: expected z_dim " + std::to_string(cfg_.z_dim) + ", t_dim " +
                     std::to_string(cfg_.t_dim));
  }
  const std::size_t n = z.rows();
  const std::size_t k_blocks = cfg_.blocks;

  cache = Cache{};
  cache.z = z;
  cache.t = t;
  cache.h.resize(k_blocks + 1);
  cache.ctx_in.resize(k_blocks);
  cache.gamma.resize(k_blocks);
  cache.beta.resize(k_blocks);
  cache.block_in.resize(k_blocks);
  cache.pre_mod.resize(k_blocks);
  cache.pre_act.resize(k_blocks);

  cache.h[0] = Tensor::zeros({n, cfg_.ctx_dim});
  Tensor x = concat_cols(z, t);
  for (std::size_t k = 0; k < k_blocks; ++k) {
    cache.ctx_in[k] = concat_cols(cache.h[k], t);
    Tensor hpre = matmul_transb(cache.ctx_in[k], ctx_.w);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = hpre.row_ptr(i);
      for (std::size_t j = 0; j < cfg_.ctx_dim; ++j) row[j] += ctx_.b.data[j];
    }
    cache.h[k + 1] = activation_forward(hpre, Activation::kTanh);

    Tensor gb = matmul_transb(cache.h[k + 1], heads_[k].w);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = gb.row_ptr(i);
      for (std::size_t j = 0; j < 2 * cfg_.hidden; ++j) row[j] += heads_[k].b.data[j];
    }
    cache.gamma[k] = Tensor({n, cfg_.hidden});
    cache.beta[k] = Tensor({n, cfg_.hidden});
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = gb.row_ptr(i);
      std::copy(row, row + cfg_.hidden, cache.gamma[k].row_ptr(i));
      std::copy(row + cfg_.hidden, row + 2 * cfg_.hidden, cache.beta[k].row_ptr(i));
    }

    cache.block_in[k] = x;
    Tensor a = matmul_transb(x, blocks_[k].w);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = a.row_ptr(i);
      for (std::size_t j = 0; j < cfg_.hidden; ++j) row[j] += blocks_[k].b.data[j];
    }
    cache.pre_mod[k] = a;
    Tensor mod({n, cfg_.hidden});
    for (std::size_t i = 0; i < mod.size(); ++i) {
      mod.data[i] = cache.gamma[k].data[i] * a.data[i] + cache.beta[k].data[i];
    }
    cache.pre_act[k] = mod;
    x = activation_forward(mod, Activation::kLeakyRelu);
  }

  cache.out_in = x;
  Tensor y = matmul_transb(x, out_.w);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = y.row_ptr(i);
    for (std::size_t j = 0; j < cfg_.out_dim; ++j) row[j] += out_.b.data[j];
  }
  cache.out_pre = y;
  if (cfg_.bounded_output) {
    for (double& v : y.data) v = 0.5 * (1.0 + std::tanh(v));
  }
  cache.y = y;
  return y;
}

Tensor Generator::forward(const Tensor& z, const Tensor& t) const {
  Cache cache;
  return forward(z, t, cache);
}

void Generator::backward(const Cache& cache, const Tensor& grad_y) {
  if (cache.h.empty()) throw StateError("generator: backward without a forward cache");
  require_same_shape(grad_y, cache.y, "generator backward");
  const std::size_t n = grad_y.rows();
  const std::size_t k_blocks = cfg_.blocks;

  Tensor gout = grad_y;
  if (cfg_.bounded_output) {
    // y = 0.5 (1 + tanh(u)) -> dy/du = 0.5 (1 - tanh(u)^2)
    for (std::size_t i = 0; i < gout.size(); ++i) {
      const double th = std::tanh(cache.out_pre.data[i]);
      gout.data[i] *= 0.5 * (1.0 - th * th);
    }
  }
  Tensor gx = out_.backward_at(gout, cache.out_in);

  // dh carried backwards through the recurrent context cell.
  Tensor dh = Tensor::zeros({n, cfg_.ctx_dim});
  for (std::size_t k = k_blocks; k-- > 0;) {
    Tensor dmod = activation_backward(gx, cache.pre_act[k], Activation::kLeakyRelu);
    Tensor da({n, cfg_.hidden});
    Tensor dgb({n, 2 * cfg_.hidden});
    for (std::size_t i = 0; i < n; ++i) {
      const double* gm = dmod.row_ptr(i);
      const double* a = cache.pre_mod[k].row_ptr(i);
      const double* gamma = cache.gamma[k].row_ptr(i);
      double* da_row = da.row_ptr(i);
      double* dgb_row = dgb.row_ptr(i);
      for (std::size_t j = 0; j < cfg_.hidden; ++j) {
        da_row[j] = gm[j] * gamma[j];
        dgb_row[j] = gm[j] * a[j];              // d gamma
        dgb_row[cfg_.hidden + j] = gm[j];       // d beta
      }
    }
    gx = blocks_[k].backward_at(da, cache.block_in[k]);
    Tensor dh_from_head = heads_[k].backward_at(dgb, cache.h[k + 1]);
    for (std::size_t i = 0; i < dh.size(); ++i) dh.data[i] += dh_from_head.data[i];

    // Through h_{k+1} = tanh(ctx(concat(h_k, t))).
    Tensor dpre({n, cfg_.ctx_dim});
    for (std::size_t i = 0; i < dpre.size(); ++i) {
      const double h = cache.h[k + 1].data[i];
      dpre.data[i] = dh.data[i] * (1.0 - h * h);
    }
    Tensor dctx_in = ctx_.backward_at(dpre, cache.ctx_in[k]);
    dh = Tensor::zeros({n, cfg_.ctx_dim});
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = dctx_in.row_ptr(i);
      std::copy(row, row + cfg_.ctx_dim, dh.row_ptr(i));
    }
  }
}

std::vector<ParamRef> Generator::params() {
  std::vector<ParamRef> out;
  for (ParamRef& p : ctx_.params("g.ctx")) out.push_back(p);
  for (std::size_t k = 0; k < heads_.size(); ++k) {
    for (ParamRef& p : heads_[k].params("g.head" + std::to_string(k))) out.push_back(p);
  }
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    for (ParamRef& p : blocks_[k].params("g.block" + std::to_string(k))) out.push_back(p);
  }
  for (ParamRef& p : out_.params("g.out")) out.push_back(p);
  return out;
}

void Generator::zero_grad() {
  ctx_.zero_grad();
  for (LinearLayer& l : heads_) l.zero_grad();
  for (LinearLayer& l : blocks_) l.zero_grad();
  out_.zero_grad();
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, Rng& rng) : cfg_(cfg) {
  trunk1_ = LinearLayer(cfg.in_dim + cfg.t_dim, cfg.hidden);
  trunk1_.init(rng);
  trunk2_ = LinearLayer(cfg.hidden, cfg.hidden);
  trunk2_.init(rng);
  adv_ = LinearLayer(cfg.hidden, 1);
  adv_.init(rng);
  reduce_ = LinearLayer(cfg.hidden, cfg.embed_dim);
  reduce_.init(rng);
  classify_ = LinearLayer(cfg.embed_dim, cfg.n_classes);
  classify_.init(rng);
}

DiscriminatorOutput Discriminator::forward(const Tensor& x, const Tensor& t, Cache& cache) const {
  if (x.rank() != 2 || t.rank() != 2 || x.rows() != t.rows()) {
    throw ShapeError("discriminator: x " + x.shape_str() + " vs t " + t.shape_str());
  }
  if (x.cols() != cfg_.in_dim || t.cols() != cfg_.t_dim) {
    throw ShapeError("discriminator: expected in_dim " + std::to_string(cfg_.in_dim) +
                     ", t_dim " + std::to_string(cfg_.t_dim));
  }
  const std::size_t n = x.rows();

  cache = Cache{};
  cache.u = concat_cols(x, t);
  auto affine = [n](const Tensor& in, const LinearLayer& l) {
    Tensor y = matmul_transb(in, l.w);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = y.row_ptr(i);
      for (std::size_t j = 0; j < y.cols(); ++j) row[j] += l.b.data[j];
    }
    return y;
  };
  cache.pre1 = affine(cache.u, trunk1_);
  cache.act1 = activation_forward(cache.pre1, Activation::kLeakyRelu);
  cache.pre2 = affine(cache.act1, trunk2_);
  cache.trunk = activation_forward(cache.pre2, Activation::kLeakyRelu);

  Tensor score_col = affine(cache.trunk, adv_);
  DiscriminatorOutput out;
  out.scores = Tensor({n});
  for (std::size_t i = 0; i < n; ++i) out.scores.data[i] = score_col.at(i, 0);

  cache.reduced = affine(cache.trunk, reduce_);
  cache.r_norms.resize(n);
  cache.embeddings = Tensor({n, cfg_.embed_dim});
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = cache.reduced.row_ptr(i);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < cfg_.embed_dim; ++j) norm2 += r[j] * r[j];
    const double norm = std::sqrt(norm2);
    if (!(norm > 1e-12)) {
      throw ValueError("discriminator: degenerate embedding (norm <= 1e-12) at row " +
                       std::to_string(i));
    }
    cache.r_norms[i] = norm;
    double* e = cache.embeddings.row_ptr(i);
    for (std::size_t j = 0; j < cfg_.embed_dim; ++j) e[j] = r[j] / norm;
  }
  out.embeddings = cache.embeddings;

  cache.logits = affine(cache.reduced, classify_);
  cache.probs = softmax_rows(cache.logits);
  out.probs = cache.probs;
  return out;
}

DiscriminatorOutput Discriminator::forward(const Tensor& x, const Tensor& t) const {
  Cache cache;
  return forward(x, t, cache);
}

Tensor Discriminator::backward(const Cache& cache, const Tensor& grad_scores,
                               const Tensor& grad_embeddings, const Tensor& grad_probs,
                               bool accumulate_params) {
  if (cache.u.size() == 0) throw StateError("discriminator: backward without a forward cache");
  const std::size_t n = cache.u.rows();
  if (grad_scores.rank() != 1 || grad_scores.size() != n) {
    throw ShapeError("discriminator backward: grad_scores " + grad_scores.shape_str());
  }
  require_same_shape(grad_embeddings, cache.embeddings, "discriminator backward embeddings");
  require_same_shape(grad_probs, cache.probs, "discriminator backward probs");

  // Head gradients are always needed for the input gradient; parameter
  // accumulation is snapshot-restored when frozen.
  std::vector<Tensor> saved;
  std::vector<ParamRef> prefs;
  if (!accumulate_params) {
    prefs = params();
    saved.reserve(prefs.size());
    for (const ParamRef& p : prefs) saved.push_back(*p.grad);
  }

  // Softmax Jacobian: dlogits = p . (gp - <gp, p>)
  Tensor dlogits(cache.probs.shape);
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = cache.probs.row_ptr(i);
    const double* gp = grad_probs.row_ptr(i);
    double inner = 0.0;
    for (std::size_t j = 0; j < cache.probs.cols(); ++j) inner += gp[j] * p[j];
    double* dl = dlogits.row_ptr(i);
    for (std::size_t j = 0; j < cache.probs.cols(); ++j) dl[j] = p[j] * (gp[j] - inner);
  }
  Tensor dr = classify_.backward_at(dlogits, cache.reduced);

  // Through e = r / ||r||: dr += (ge - e <ge, e>) / ||r||.
  for (std::size_t i = 0; i < n; ++i) {
    const double* e = cache.embeddings.row_ptr(i);
    const double* ge = grad_embeddings.row_ptr(i);
    double inner = 0.0;
    for (std::size_t j = 0; j < cfg_.embed_dim; ++j) inner += ge[j] * e[j];
    double* d = dr.row_ptr(i);
    const double inv_norm = 1.0 / cache.r_norms[i];
    for (std::size_t j = 0; j < cfg_.embed_dim; ++j) d[j] += (ge[j] - inner * e[j]) * inv_norm;
  }

  Tensor dtrunk = reduce_.backward_at(dr, cache.trunk);
  Tensor gs_col({n, 1});
  for (std::size_t i = 0; i < n; ++i) gs_col.at(i, 0) = grad_scores.data[i];
  Tensor dtrunk_adv = adv_.backward_at(gs_col, cache.trunk);
  for (std::size_t i = 0; i < dtrunk.size(); ++i) dtrunk.data[i] += dtrunk_adv.data[i];

  Tensor dpre2 = activation_backward(dtrunk, cache.pre2, Activation::kLeakyRelu);
  Tensor dact1 = trunk2_.backward_at(dpre2, cache.act1);
  Tensor dpre1 = activation_backward(dact1, cache.pre1, Activation::kLeakyRelu);
  Tensor du = trunk1_.backward_at(dpre1, cache.u);

  if (!accumulate_params) {
    for (std::size_t i = 0; i < prefs.size(); ++i) *prefs[i].grad = saved[i];
  }

  Tensor dx({n, cfg_.in_dim});
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = du.row_ptr(i);
    std::copy(row, row + cfg_.in_dim, dx.row_ptr(i));
  }
  return dx;
}

std::vector<ParamRef> Discriminator::params() {
  std::vector<ParamRef> out;
  for (ParamRef& p : trunk1_.params("d.trunk1")) out.push_back(p);
  for (ParamRef& p : trunk2_.params("d.trunk2")) out.push_back(p);
  for (ParamRef& p : adv_.params("d.adv")) out.push_back(p);
  for (ParamRef& p : reduce_.params("d.reduce")) out.push_back(p);
  for (ParamRef& p : classify_.params("d.classify")) out.push_back(p);
  return out;
}

void Discriminator::zero_grad() {
  trunk1_.zero_grad();
  trunk2_.zero_grad();
  adv_.zero_grad();
  reduce_.zero_grad();
  classify_.zero_grad();
}

}  // namespace fggan
