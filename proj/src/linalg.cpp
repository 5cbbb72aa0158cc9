#include "fggan/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fggan {

namespace {

void require_rank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + ": expected rank-2, got rank-" +
                                      std::to_string(t.rank()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions " + a.shape_str() + " vs " + b.shape_str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b.row_ptr(p);
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_transb(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_transb");
  require_rank2(b, "matmul_transb");
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_transb: inner dimensions " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.row_ptr(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      orow[j] = acc;
    }
  }
  return out;
}

Tensor matmul_transa(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_transa");
  require_rank2(b, "matmul_transa");
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_transa: inner dimensions " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  Tensor out({m, n});
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.row_ptr(p);
    const double* brow = b.row_ptr(p);
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* orow = out.row_ptr(i);
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 1 || logits.size() == 0) {
    throw ShapeError("softmax: expected non-empty rank-1 tensor");
  }
  require_finite(logits, "softmax input");
  const double mx = *std::max_element(logits.data.begin(), logits.data.end());
  Tensor out(logits.shape);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.data[i] = std::exp(logits.data[i] - mx);
    sum += out.data[i];
  }
  for (double& x : out.data) x /= sum;
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  require_rank2(logits, "softmax_rows");
  require_finite(logits, "softmax input");
  const std::size_t n = logits.rows(), k = logits.cols();
  if (k == 0) throw ShapeError("softmax_rows: zero columns");
  Tensor out({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    const double* in = logits.row_ptr(i);
    double* o = out.row_ptr(i);
    const double mx = *std::max_element(in, in + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (std::size_t j = 0; j < k; ++j) o[j] /= sum;
  }
  return out;
}

namespace {

constexpr double kNormEps = 1e-12;

double row_norm(const double* p, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += p[j] * p[j];
  return std::sqrt(s);
}

}  // namespace

Tensor l2_normalize(const Tensor& v) {
  if (v.rank() != 1) throw ShapeError("l2_normalize: expected rank-1 tensor");
  const double norm = row_norm(v.data.data(), v.size());
  if (!(norm > kNormEps)) throw ValueError("l2_normalize: degenerate vector (norm <= 1e-12)");
  Tensor out(v.shape);
  for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = v.data[i] / norm;
  return out;
}

Tensor l2_normalize_rows(const Tensor& m) {
  require_rank2(m, "l2_normalize_rows");
  Tensor out(m.shape);
  const std::size_t d = m.cols();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* in = m.row_ptr(i);
    const double norm = row_norm(in, d);
    if (!(norm > kNormEps)) {
      throw ValueError("l2_normalize_rows: degenerate vector at row " + std::to_string(i));
    }
    double* o = out.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) o[j] = in[j] / norm;
  }
  return out;
}

Tensor cosine_sim_matrix(const Tensor& a, const Tensor& b) {
  require_rank2(a, "cosine_sim_matrix");
  require_rank2(b, "cosine_sim_matrix");
  if (a.cols() != b.cols()) {
    throw ShapeError("cosine_sim_matrix: dimension mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  return matmul_transb(a, b);
}

EigDecomposition sym_eig(const Tensor& s) {
  require_rank2(s, "sym_eig");
  if (s.rows() != s.cols()) throw ShapeError("sym_eig: matrix not square " + s.shape_str());
  require_finite(s, "sym_eig input");
  const std::size_t d = s.rows();

  double asym = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      asym = std::max(asym, std::fabs(s.at(i, j) - s.at(j, i)));
  if (asym > 1e-9) {
    throw ValueError("sym_eig: input asymmetric by " + std::to_string(asym));
  }

  // Work on the symmetrised copy; cyclic Jacobi sweeps.
  Tensor a(s.shape);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a.at(i, j) = 0.5 * (s.at(i, j) + s.at(j, i));
  Tensor v = identity(d);

  double scale = 0.0;
  for (double x : a.data) scale = std::max(scale, std::fabs(x));
  if (scale == 0.0) scale = 1.0;
  const double tol = 1e-15 * scale;
  const int max_sweeps = 100;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) off = std::max(off, std::fabs(a.at(i, j)));
    if (off <= tol) {
      EigDecomposition out;
      out.values = Tensor({d});
      for (std::size_t i = 0; i < d; ++i) out.values.data[i] = a.at(i, i);
      // Sort ascending, permuting eigenvector columns to match.
      std::vector<std::size_t> order(d);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return out.values.data[x] < out.values.data[y];
      });
      Tensor sorted_vals({d});
      Tensor sorted_vecs({d, d});
      for (std::size_t c = 0; c < d; ++c) {
        sorted_vals.data[c] = out.values.data[order[c]];
        for (std::size_t r = 0; r < d; ++r) sorted_vecs.at(r, c) = v.at(r, order[c]);
      }
      out.values = std::move(sorted_vals);
      out.vectors = std::move(sorted_vecs);
      return out;
    }
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a.at(p, q);
        if (std::fabs(apq) <= tol) continue;
        const double app = a.at(p, p), aqq = a.at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - sn * akq;
          a.at(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - sn * aqk;
          a.at(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - sn * vkq;
          v.at(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  throw NumericError("sym_eig: Jacobi iteration did not converge in 100 sweeps");
}

Tensor sqrtm_psd(const Tensor& s) {
  EigDecomposition eig = sym_eig(s);
  const std::size_t d = s.rows();
  for (std::size_t i = 0; i < d; ++i) {
    double& lam = eig.values.data[i];
    if (lam < -1e-6) {
      throw NumericError("sqrtm_psd: matrix not PSD, eigenvalue " + std::to_string(lam));
    }
    if (lam < 0.0) lam = 0.0;
  }
  // R = V sqrt(D) V^T
  Tensor vs({d, d});
  for (std::size_t i = 0; i < d; ++i) {
    const double root = std::sqrt(eig.values.data[i]);
    for (std::size_t r = 0; r < d; ++r) vs.at(r, i) = eig.vectors.at(r, i) * root;
  }
  Tensor out = matmul_transb(vs, vs);
  // Enforce exact symmetry against fp drift.
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double avg = 0.5 * (out.at(i, j) + out.at(j, i));
      out.at(i, j) = avg;
      out.at(j, i) = avg;
    }
  return out;
}

GaussianStats fit_gaussian(const Tensor& x) {
  require_rank2(x, "fit_gaussian");
  const std::size_t n = x.rows(), d = x.cols();
  if (n < 2) throw ValueError("fit_gaussian: need at least 2 samples, got " + std::to_string(n));
  GaussianStats g;
  g.mu = Tensor({d});
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) g.mu.data[j] += row[j];
  }
  for (std::size_t j = 0; j < d; ++j) g.mu.data[j] /= static_cast<double>(n);

  g.sigma = Tensor({d, d});
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) centered[j] = row[j] - g.mu.data[j];
    for (std::size_t r = 0; r < d; ++r) {
      const double cr = centered[r];
      double* srow = g.sigma.row_ptr(r);
      for (std::size_t c = r; c < d; ++c) srow[c] += cr * centered[c];
    }
  }
  const double div = static_cast<double>(n - 1);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = r; c < d; ++c) {
      g.sigma.at(r, c) /= div;
      g.sigma.at(c, r) = g.sigma.at(r, c);
    }
  return g;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

double trace(const Tensor& m) {
  require_rank2(m, "trace");
  if (m.rows() != m.cols()) throw ShapeError("trace: matrix not square " + m.shape_str());
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m.at(i, i);
  return s;
}

Tensor transpose(const Tensor& m) {
  require_rank2(m, "transpose");
  Tensor out({m.cols(), m.rows()});
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Tensor identity(std::size_t d) {
  Tensor out({d, d});
  for (std::size_t i = 0; i < d; ++i) out.at(i, i) = 1.0;
  return out;
}

}  // namespace fggan
