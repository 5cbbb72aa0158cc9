#pragma once

#include <string>
#include <vector>

#include "fggan/nn.hpp"
#include "fggan/tensor.hpp"

namespace fggan {

struct GeneratorConfig {
  std::size_t z_dim = 16;
  std::size_t t_dim = 32;
  std::size_t ctx_dim = 16;   // recurrent context state size
  std::size_t hidden = 48;    // width of each modulated block
  std::size_t blocks = 3;     // K
  std::size_t out_dim = 64;   // data dimension D
  bool bounded_output = false;  // shapes16 mode squashes into [0,1]
};

// Conditional generator. A single recurrent context cell consumes the
// caption vector and produces, per block, affine (gamma, beta) modulation of
// the block's pre-activation:
//   h_{k+1} = tanh(Ctx(concat(h_k, t)))
//   a_k     = Block_k(x_k),  x_{k+1} = lrelu(gamma_k . a_k + beta_k)
class Generator {
 public:
  Generator() = default;
  Generator(const GeneratorConfig& cfg, Rng& rng);

  struct Cache {
    Tensor z, t;
    std::vector<Tensor> h;        // context states, h[0] = 0, size K+1
    std::vector<Tensor> ctx_in;   // concat(h_k, t) per step
    std::vector<Tensor> gamma, beta;
    std::vector<Tensor> block_in;  // x_k, input to block k
    std::vector<Tensor> pre_mod;   // a_k
    std::vector<Tensor> pre_act;   // gamma.a + beta
    Tensor out_in;                 // input to the output layer
    Tensor out_pre;                // pre-squash output
    Tensor y;
  };

  Tensor forward(const Tensor& z, const Tensor& t, Cache& cache) const;
  Tensor forward(const Tensor& z, const Tensor& t) const;  // discards the cache

  // Accumulates parameter gradients; returns nothing (input gradients are
  // not needed upstream of the latent draw).
  void backward(const Cache& cache, const Tensor& grad_y);

  std::vector<ParamRef> params();
  void zero_grad();

  const GeneratorConfig& config() const { return cfg_; }

 private:
  GeneratorConfig cfg_;
  LinearLayer ctx_;                  // (ctx_dim + t_dim) -> ctx_dim
  std::vector<LinearLayer> heads_;   // ctx_dim -> 2*hidden, one per block
  std::vector<LinearLayer> blocks_;  // trunk blocks
  LinearLayer out_;
};

struct DiscriminatorConfig {
  std::size_t in_dim = 64;    // data dimension D
  std::size_t t_dim = 32;
  std::size_t hidden = 48;    // trunk width
  std::size_t embed_dim = 16;
  std::size_t n_classes = 12;  // C*S subclass labels
};

struct DiscriminatorOutput {
  Tensor scores;      // [N]
  Tensor embeddings;  // [N x embed_dim], unit-norm rows
  Tensor probs;       // [N x n_classes], rows sum to 1
};

// Three-headed discriminator over concat(x, t): adversarial score off the
// trunk, then a dimension-reduction layer whose output feeds both the
// L2-normalised contrastive embedding and the subclass classifier.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& cfg, Rng& rng);

  struct Cache {
    Tensor u;                    // concat(x, t)
    Tensor pre1, act1, pre2, trunk;
    Tensor reduced;              // pre-normalisation feature r
    std::vector<double> r_norms; // ||r_i||
    Tensor embeddings;           // e = r / ||r||
    Tensor logits;
    Tensor probs;
  };

  DiscriminatorOutput forward(const Tensor& x, const Tensor& t, Cache& cache) const;
  DiscriminatorOutput forward(const Tensor& x, const Tensor& t) const;

  // Pulls the three head gradients back to the input. grad_probs is the
  // gradient w.r.t. the softmax output; the softmax Jacobian is applied
  // here. Returns grad w.r.t. x. When accumulate_params is false the
  // parameters are left untouched (used when only the input gradient is
  // needed, e.g. the generator step).
  Tensor backward(const Cache& cache, const Tensor& grad_scores, const Tensor& grad_embeddings,
                  const Tensor& grad_probs, bool accumulate_params = true);

  std::vector<ParamRef> params();
  void zero_grad();

  const DiscriminatorConfig& config() const { return cfg_; }

 private:
  DiscriminatorConfig cfg_;
  LinearLayer trunk1_, trunk2_;
  LinearLayer adv_;
  LinearLayer reduce_;
  LinearLayer classify_;
};

// Row-wise concat(a, b).
Tensor concat_cols(const Tensor& a, const Tensor& b);

}  // namespace fggan
