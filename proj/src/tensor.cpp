#include "fggan/tensor.hpp"

#include <cmath>
#include <sstream>

namespace fggan {

std::size_t shape_product(const std::vector<std::size_t>& shp) {
  std::size_t n = 1;
  for (std::size_t d : shp) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shp)
    : shape(std::move(shp)), data(shape_product(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shp, std::vector<double> values)
    : shape(std::move(shp)), data(std::move(values)) {
  if (shape_product(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_str() + " does not match " +
                     std::to_string(data.size()) + " values");
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shp) { return Tensor(std::move(shp)); }

Tensor Tensor::full(std::vector<std::size_t> shp, double value) {
  Tensor t(std::move(shp));
  for (double& x : t.data) x = value;
  return t;
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Tensor t({r, c});
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("tensor: ragged matrix literal");
    for (double v : row) t.data[i++] = v;
  }
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ShapeError("tensor: rows() on rank-" + std::to_string(rank()));
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError("tensor: cols() on rank-" + std::to_string(rank()));
  return shape[1];
}

Tensor Tensor::row(std::size_t i) const {
  const std::size_t c = cols();
  Tensor out({c});
  for (std::size_t j = 0; j < c; ++j) out.data[j] = data[i * c + j];
  return out;
}

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
  if (!a.same_shape(b)) {
    throw ShapeError(what + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

void require_finite(const Tensor& t, const std::string& what) {
  if (!t.all_finite()) throw NumericError(what + ": non-finite values");
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  for (;;) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double r2 = u * u + v * v;
    if (r2 > 0.0 && r2 < 1.0) {
      return u * std::sqrt(-2.0 * std::log(r2) / r2);
    }
  }
}

double Rng::normal(double mean, double stddev) { return mean + stddev * normal(); }

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw ValueError("rng: uniform_index(0)");
  std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i >= n ? n - 1 : i;
}

Tensor Rng::normal_tensor(std::vector<std::size_t> shp) {
  Tensor t(std::move(shp));
  for (double& x : t.data) x = normal();
  return t;
}

std::array<std::uint64_t, 4> Rng::state() const { return {s_[0], s_[1], s_[2], s_[3]}; }

void Rng::set_state(const std::array<std::uint64_t, 4>& s) {
  for (int i = 0; i < 4; ++i) s_[i] = s[i];
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (0xA0761D6478BD642FULL * (stream + 1));
  return splitmix64(x);
}

}  // namespace fggan
