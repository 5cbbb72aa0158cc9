#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fggan/tensor.hpp"

namespace fggan {

// A named parameter tensor together with its gradient accumulator. Networks
// hand these out so the optimizer, checkpointing and the finite-difference
// harness can walk every trainable tensor by name.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

// Fully connected layer, y = x W^T + b. Gradients accumulate into grad_w /
// grad_b until zero_grad(). The stateful forward/backward pair caches the
// last input; backward_at() takes the input explicitly so several live
// forward passes can share one layer (the networks use that form).
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(std::size_t in_dim, std::size_t out_dim);

  void init(Rng& rng);  // uniform +-sqrt(6/(fan_in+fan_out)), zero bias

  Tensor forward(const Tensor& x);
  // grad_in; parameter gradients accumulate internally.
  Tensor backward(const Tensor& grad_out);
  Tensor backward_at(const Tensor& grad_out, const Tensor& x);

  void zero_grad();
  std::vector<ParamRef> params(const std::string& prefix);

  std::size_t in_dim() const { return w.cols(); }
  std::size_t out_dim() const { return w.rows(); }

  Tensor w;  // [out x in]
  Tensor b;  // [out]
  Tensor grad_w;
  Tensor grad_b;

 private:
  Tensor cached_x_;
  bool has_forward_ = false;
};

enum class Activation { kTanh, kLeakyRelu };

constexpr double kLeakySlope = 0.2;

Tensor activation_forward(const Tensor& x, Activation kind);
// grad wrt x given upstream grad and the pre-activation input.
Tensor activation_backward(const Tensor& grad_out, const Tensor& x, Activation kind);

// Adam moments for one parameter tensor.
struct AdamState {
  Tensor m;
  Tensor v;
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// One bias-corrected Adam update. step_count is the post-increment step
// index (pass 1 on the first call).
void adam_update(Tensor& param, const Tensor& grad, AdamState& state, long step_count,
                 double lr, double beta1 = kAdamBeta1, double beta2 = kAdamBeta2,
                 double eps = kAdamEps);

// Optimizer bound to a fixed parameter list.
class AdamOpt {
 public:
  explicit AdamOpt(std::vector<ParamRef> params);

  void step(double lr);
  long step_count() const { return step_count_; }

  // For checkpointing: moments by parameter name.
  std::vector<std::pair<std::string, AdamState*>> states();
  void set_step_count(long t) { step_count_ = t; }

 private:
  std::vector<ParamRef> params_;
  std::vector<AdamState> states_;
  long step_count_ = 0;
};

struct LrSchedule {
  double lr_max = 1e-4;
  double lr_min = 1e-6;
  long total_steps = 1;
};

// lr_min + 0.5 (lr_max - lr_min)(1 + cos(pi step / total)).
double cosine_lr(const LrSchedule& schedule, long step);

struct GradCheckReport {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  std::size_t checked = 0;
  bool pass = false;
};

// Central finite differences against already-computed analytic gradients.
// eval_loss must be a pure function of the current parameter values; the
// analytic gradient for params[i] is read from params[i].grad before any
// perturbation. h is relative: h_i = h_rel * max(1, |p_i|).
GradCheckReport finite_diff_check(const std::string& name,
                                  const std::function<double()>& eval_loss,
                                  const std::vector<ParamRef>& params, double tolerance,
                                  double h_rel = 1e-5);

}  // namespace fggan
