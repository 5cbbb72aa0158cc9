#include "fggan/nn.hpp"

#include <cmath>

#include "fggan/linalg.hpp"

namespace fggan {

LinearLayer::LinearLayer(std::size_t in_dim, std::size_t out_dim)
    : w({out_dim, in_dim}),
      b({out_dim}),
      grad_w({out_dim, in_dim}),
      grad_b({out_dim}) {}

void LinearLayer::init(Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in_dim() + out_dim()));
  for (double& x : w.data) x = rng.uniform(-bound, bound);
  for (double& x : b.data) x = 0.0;
}

Tensor LinearLayer::forward(const Tensor& x) {
  if (x.rank() != 2 || x.cols() != in_dim()) {
    throw ShapeError("linear: input " + x.shape_str() + " does not match in_dim " +
                     std::to_string(in_dim()));
  }
  cached_x_ = x;
  has_forward_ = true;
  Tensor y = matmul_transb(x, w);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double* row = y.row_ptr(i);
    for (std::size_t j = 0; j < y.cols(); ++j) row[j] += b.data[j];
  }
  return y;
}

Tensor LinearLayer::backward(const Tensor& grad_out) {
  if (!has_forward_) throw StateError("linear: backward called before forward");
  if (grad_out.rank() != 2 || grad_out.rows() != cached_x_.rows() ||
      grad_out.cols() != out_dim()) {
    throw ShapeError("linear: grad_out " + grad_out.shape_str() +
                     " does not match cached forward batch");
  }
  return backward_at(grad_out, cached_x_);
}

Tensor LinearLayer::backward_at(const Tensor& grad_out, const Tensor& x) {
  if (grad_out.rank() != 2 || x.rank() != 2 || grad_out.rows() != x.rows() ||
      grad_out.cols() != out_dim() || x.cols() != in_dim()) {
    throw ShapeError("linear: backward shapes " + grad_out.shape_str() + " / " +
                     x.shape_str());
  }
  // dW = g^T x, db = sum_batch g, dx = g W
  Tensor dw = matmul_transa(grad_out, x);
  for (std::size_t i = 0; i < dw.size(); ++i) grad_w.data[i] += dw.data[i];
  for (std::size_t i = 0; i < grad_out.rows(); ++i) {
    const double* row = grad_out.row_ptr(i);
    for (std::size_t j = 0; j < out_dim(); ++j) grad_b.data[j] += row[j];
  }
  return matmul(grad_out, w);
}

void LinearLayer::zero_grad() {
  for (double& x : grad_w.data) x = 0.0;
  for (double& x : grad_b.data) x = 0.0;
}

std::vector<ParamRef> LinearLayer::params(const std::string& prefix) {
  return {{prefix + ".W", &w, &grad_w}, {prefix + ".b", &b, &grad_b}};
}

Tensor activation_forward(const Tensor& x, Activation kind) {
  require_finite(x, "activation input");
  Tensor out(x.shape);
  switch (kind) {
    case Activation::kTanh:
      for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = std::tanh(x.data[i]);
      break;
    case Activation::kLeakyRelu:
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x.data[i];
        out.data[i] = v > 0.0 ? v : kLeakySlope * v;
      }
      break;
  }
  return out;
}

Tensor activation_backward(const Tensor& grad_out, const Tensor& x, Activation kind) {
  require_same_shape(grad_out, x, "activation backward");
  Tensor out(x.shape);
  switch (kind) {
    case Activation::kTanh:
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = std::tanh(x.data[i]);
        out.data[i] = grad_out.data[i] * (1.0 - t * t);
      }
      break;
    case Activation::kLeakyRelu:
      for (std::size_t i = 0; i < x.size(); ++i) {
        out.data[i] = grad_out.data[i] * (x.data[i] > 0.0 ? 1.0 : kLeakySlope);
      }
      break;
  }
  return out;
}

void adam_update(Tensor& param, const Tensor& grad, AdamState& state, long step_count,
                 double lr, double beta1, double beta2, double eps) {
  require_same_shape(param, grad, "adam");
  require_same_shape(param, state.m, "adam moment m");
  require_same_shape(param, state.v, "adam moment v");
  require_finite(grad, "adam gradient");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.data[i];
    state.m.data[i] = beta1 * state.m.data[i] + (1.0 - beta1) * g;
    state.v.data[i] = beta2 * state.v.data[i] + (1.0 - beta2) * g * g;
    const double mhat = state.m.data[i] / bc1;
    const double vhat = state.v.data[i] / bc2;
    param.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

AdamOpt::AdamOpt(std::vector<ParamRef> params) : params_(std::move(params)) {
  states_.reserve(params_.size());
  for (const ParamRef& p : params_) {
    states_.push_back({Tensor::zeros(p.value->shape), Tensor::zeros(p.value->shape)});
  }
}

void AdamOpt::step(double lr) {
  ++step_count_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adam_update(*params_[i].value, *params_[i].grad, states_[i], step_count_, lr);
  }
}

std::vector<std::pair<std::string, AdamState*>> AdamOpt::states() {
  std::vector<std::pair<std::string, AdamState*>> out;
  out.reserve(states_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) out.emplace_back(params_[i].name, &states_[i]);
  return out;
}

double cosine_lr(const LrSchedule& schedule, long step) {
  if (step < 0 || step > schedule.total_steps) {
    throw ValueError("cosine_lr: step " + std::to_string(step) + " outside [0, " +
                     std::to_string(schedule.total_steps) + "]");
  }
  const double frac = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  constexpr double kPi = 3.14159265358979323846;
  return schedule.lr_min + 0.5 * (schedule.lr_max - schedule.lr_min) * (1.0 + std::cos(kPi * frac));
}

GradCheckReport finite_diff_check(const std::string& name,
                                  const std::function<double()>& eval_loss,
                                  const std::vector<ParamRef>& params, double tolerance,
                                  double h_rel) {
  GradCheckReport report;
  report.name = name;
  report.tolerance = tolerance;
  // Snapshot analytic gradients before touching any parameter.
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const ParamRef& p : params) analytic.push_back(*p.grad);

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& value = *params[pi].value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double orig = value.data[i];
      const double h = h_rel * std::max(1.0, std::fabs(orig));
      value.data[i] = orig + h;
      const double up = eval_loss();
      value.data[i] = orig - h;
      const double down = eval_loss();
      value.data[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[pi].data[i];
      const double rel = std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)});
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.checked;
    }
  }
  report.pass = report.max_rel_err < tolerance;
  return report;
}

}  // namespace fggan
