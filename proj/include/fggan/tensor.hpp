#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "fggan/errors.hpp"

namespace fggan {

// Dense row-major tensor of doubles. The one value carrier used everywhere.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shp);
  Tensor(std::vector<std::size_t> shp, std::vector<double> values);

  static Tensor zeros(std::vector<std::size_t> shp);
  static Tensor full(std::vector<std::size_t> shp, double value);
  // 1-D / 2-D literals for tests and small fixtures.
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  // Rank-2 helpers; throw on other ranks.
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  double* row_ptr(std::size_t i) { return data.data() + i * cols(); }
  const double* row_ptr(std::size_t i) const { return data.data() + i * cols(); }

  Tensor row(std::size_t i) const;

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;

  std::string shape_str() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shp);

// Throws ShapeError with a message naming `what` if shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what);
// Throws NumericError naming `what` if any element is NaN/Inf.
void require_finite(const Tensor& t, const std::string& what);

// xoshiro256++ with splitmix64 seeding. All draws are implemented on top of
// next_u64() so a given seed yields the same sequence on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0,1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via the Marsaglia polar method (no cached spare, so the
  // state alone determines the sequence and checkpoints stay small).
  double normal();
  double normal(double mean, double stddev);
  // Uniform integer in [0,n). n must be >= 1.
  std::size_t uniform_index(std::size_t n);

  Tensor normal_tensor(std::vector<std::size_t> shp);

  std::array<std::uint64_t, 4> state() const;
  void set_state(const std::array<std::uint64_t, 4>& s);

 private:
  std::uint64_t s_[4];
};

// Stateless 64-bit mixer; used to derive independent seed streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace fggan
