#include "fggan/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fggan/linalg.hpp"

namespace fggan {

DataMode parse_data_mode(const std::string& s) {
  if (s == "vector") return DataMode::kVector;
  if (s == "shapes16") return DataMode::kShapes16;
  throw ValueError("unknown data mode '" + s + "' (expected vector or shapes16)");
}

std::string data_mode_name(DataMode mode) {
  return mode == DataMode::kVector ? "vector" : "shapes16";
}

Taxonomy make_taxonomy(int n_classes, int subclasses_per_class, std::size_t dim,
                       double sigma_between, double sigma_within, Rng& rng) {
  if (n_classes < 1 || subclasses_per_class < 1) {
    throw ValueError("taxonomy: classes and subclasses must be >= 1");
  }
  if (dim < 2) throw ValueError("taxonomy: dim must be >= 2");
  if (!(sigma_between > sigma_within) || !(sigma_within > 0.0)) {
    throw ValueError("taxonomy: need sigma_between > sigma_within > 0");
  }
  Taxonomy tax;
  tax.n_classes = n_classes;
  tax.subclasses_per_class = subclasses_per_class;
  tax.dim = dim;
  tax.sigma_between = sigma_between;
  tax.sigma_within = sigma_within;
  tax.class_centers = Tensor({static_cast<std::size_t>(n_classes), dim});
  for (double& v : tax.class_centers.data) v = rng.normal();
  tax.prototypes =
      Tensor({static_cast<std::size_t>(n_classes * subclasses_per_class), dim});
  for (int c = 0; c < n_classes; ++c) {
    for (int s = 0; s < subclasses_per_class; ++s) {
      const std::size_t row = static_cast<std::size_t>(c * subclasses_per_class + s);
      for (std::size_t j = 0; j < dim; ++j) {
        tax.prototypes.at(row, j) =
            tax.class_centers.at(static_cast<std::size_t>(c), j) +
            sigma_between * rng.normal();
      }
    }
  }
  return tax;
}

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const char* kAttributes[] = {
    "crimson markings", "azure crest",   "golden speckles", "violet bands",
    "emerald sheen",    "ivory streaks", "amber fringe",    "teal gloss",
    "russet patches",   "pearl dots",    "onyx stripes",    "copper glaze",
};
constexpr int kNumAttributes = 12;

}  // namespace

Tensor embed_caption(const std::string& text, std::size_t t_dim) {
  if (t_dim == 0) throw ValueError("embed_caption: t_dim must be >= 1");
  Tensor acc({t_dim});
  bool any_token = false;
  std::string token;
  auto flush = [&]() {
    if (token.empty()) return;
    const std::uint64_t h = fnv1a64(token);
    const std::size_t idx = static_cast<std::size_t>(h % t_dim);
    const double sign = ((h >> 32) & 1ULL) ? 1.0 : -1.0;
    acc.data[idx] += sign;
    any_token = true;
    token.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  if (!any_token) throw ValueError("embed_caption: empty caption");
  // Opposite-sign collisions can cancel to zero; nudge the token count in
  // so the embedding never degenerates.
  double norm2 = 0.0;
  for (double v : acc.data) norm2 += v * v;
  if (norm2 <= 1e-24) acc.data[0] += 1.0;
  return l2_normalize(acc);
}

std::string caption_text(int cls, int subclass) {
  const int attr = (cls * 7 + subclass * 3) % kNumAttributes;
  std::ostringstream os;
  os << "class " << cls << " variant " << subclass << " with " << kAttributes[attr];
  return os.str();
}

MismatchResult mismatch(const std::vector<int>& labels, const Tensor& caption_pool, Rng& rng) {
  if (caption_pool.rank() != 2 || caption_pool.rows() < 2) {
    throw ValueError("mismatch: need at least 2 subclasses in the caption pool");
  }
  const int k = static_cast<int>(caption_pool.rows());
  MismatchResult out;
  out.captions = Tensor({labels.size(), caption_pool.cols()});
  out.labels.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw ValueError("mismatch: label " + std::to_string(labels[i]) + " outside pool of " +
                       std::to_string(k));
    }
    int pick = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(k - 1)));
    if (pick >= labels[i]) ++pick;
    out.labels.push_back(pick);
    const double* src = caption_pool.row_ptr(static_cast<std::size_t>(pick));
    double* dst = out.captions.row_ptr(i);
    std::copy(src, src + caption_pool.cols(), dst);
  }
  return out;
}

std::vector<double> render_shape16(int cls, int subclass, int subclasses_per_class,
                                   double sigma_within, Rng& rng) {
  std::vector<double> px(kShapes16Dim, 0.0);
  const double cx = 7.5, cy = 7.5, radius = 5.0;
  const double intensity =
      0.30 + 0.65 * (static_cast<double>(subclass) + 0.5) /
                 static_cast<double>(subclasses_per_class);
  const int shape = cls % 4;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const double dx = x - cx, dy = y - cy;
      bool inside = false;
      switch (shape) {
        case 0: inside = dx * dx + dy * dy <= radius * radius; break;          // disc
        case 1: inside = std::max(std::fabs(dx), std::fabs(dy)) <= radius; break;  // square
        case 2: inside = std::fabs(dx) + std::fabs(dy) <= radius; break;       // diamond
        case 3:                                                                 // cross
          inside = (std::fabs(dx) <= 1.5 || std::fabs(dy) <= 1.5) &&
                   std::max(std::fabs(dx), std::fabs(dy)) <= radius;
          break;
      }
      double v = inside ? intensity : 0.0;
      v += sigma_within * rng.normal();
      px[static_cast<std::size_t>(y) * 16 + static_cast<std::size_t>(x)] =
          std::clamp(v, 0.0, 1.0);
    }
  }
  return px;
}

Batch sample_batch(const Taxonomy& tax, std::size_t n, Rng& rng, DataMode mode,
                   std::size_t t_dim) {
  if (n < 1) throw ValueError("sample_batch: n must be >= 1");
  const std::size_t dim = mode == DataMode::kShapes16 ? kShapes16Dim : tax.dim;
  const int total = tax.n_subclasses();

  Tensor pool({static_cast<std::size_t>(total), t_dim});
  for (int c = 0; c < tax.n_classes; ++c) {
    for (int s = 0; s < tax.subclasses_per_class; ++s) {
      const Tensor v = embed_caption(caption_text(c, s), t_dim);
      double* dst = pool.row_ptr(static_cast<std::size_t>(c * tax.subclasses_per_class + s));
      std::copy(v.data.begin(), v.data.end(), dst);
    }
  }

  Batch batch;
  batch.x_real = Tensor({n, dim});
  batch.captions = Tensor({n, t_dim});
  batch.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(total)));
    batch.labels.push_back(label);
    if (mode == DataMode::kVector) {
      const double* proto = tax.prototypes.row_ptr(static_cast<std::size_t>(label));
      double* dst = batch.x_real.row_ptr(i);
      for (std::size_t j = 0; j < dim; ++j) dst[j] = proto[j] + tax.sigma_within * rng.normal();
    } else {
      const int c = label / tax.subclasses_per_class;
      const int s = label % tax.subclasses_per_class;
      const std::vector<double> px =
          render_shape16(c, s, tax.subclasses_per_class, tax.sigma_within, rng);
      std::copy(px.begin(), px.end(), batch.x_real.row_ptr(i));
    }
    const double* cap = pool.row_ptr(static_cast<std::size_t>(label));
    std::copy(cap, cap + t_dim, batch.captions.row_ptr(i));
  }
  MismatchResult mis = mismatch(batch.labels, pool, rng);
  batch.captions_mismatched = std::move(mis.captions);
  batch.mismatched_labels = std::move(mis.labels);
  return batch;
}

Dataset generate_dataset(const Taxonomy& tax, std::size_t per_subclass, DataMode mode,
                         Rng& rng) {
  if (per_subclass < 1) throw ValueError("generate_dataset: per_subclass must be >= 1");
  Dataset ds;
  ds.n_classes = tax.n_classes;
  ds.subclasses_per_class = tax.subclasses_per_class;
  ds.dim = mode == DataMode::kShapes16 ? kShapes16Dim : tax.dim;
  long id = 0;
  for (int c = 0; c < tax.n_classes; ++c) {
    for (int s = 0; s < tax.subclasses_per_class; ++s) {
      const std::size_t proto_row = static_cast<std::size_t>(c * tax.subclasses_per_class + s);
      for (std::size_t k = 0; k < per_subclass; ++k) {
        DatasetRecord rec;
        rec.id = id++;
        rec.cls = c;
        rec.subclass = s;
        rec.caption = caption_text(c, s);
        if (mode == DataMode::kVector) {
          rec.x.resize(tax.dim);
          const double* proto = tax.prototypes.row_ptr(proto_row);
          for (std::size_t j = 0; j < tax.dim; ++j) {
            rec.x[j] = proto[j] + tax.sigma_within * rng.normal();
          }
        } else {
          rec.x = render_shape16(c, s, tax.subclasses_per_class, tax.sigma_within, rng);
        }
        ds.records.push_back(std::move(rec));
      }
    }
  }
  return ds;
}

std::pair<std::vector<int>, std::vector<int>> split_classes(const Taxonomy& tax,
                                                            double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw ValueError("split_classes: fraction must be in (0,1)");
  }
  const int c = tax.n_classes;
  const int n_train = static_cast<int>(std::floor(train_fraction * c));
  if (n_train < 1 || n_train >= c) {
    throw ValueError("split_classes: fraction " + std::to_string(train_fraction) +
                     " leaves an empty side for " + std::to_string(c) + " classes");
  }
  std::vector<int> order(static_cast<std::size_t>(c));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  std::vector<int> train(order.begin(), order.begin() + n_train);
  std::vector<int> test(order.begin() + n_train, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string quote_csv(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

// Splits one CSV line honouring double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) {
    throw ParseError("csv line " + std::to_string(lineno) + ": unterminated quote");
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void save_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "id,class,subclass,caption";
  for (std::size_t j = 0; j < dataset.dim; ++j) out << ",x" << j;
  out << "\n";
  for (const DatasetRecord& rec : dataset.records) {
    if (rec.x.size() != dataset.dim) {
      throw ValueError("save_csv: record " + std::to_string(rec.id) + " has " +
                       std::to_string(rec.x.size()) + " values, expected " +
                       std::to_string(dataset.dim));
    }
    out << rec.id << ',' << rec.cls << ',' << rec.subclass << ',' << quote_csv(rec.caption);
    for (double v : rec.x) out << ',' << format_double(v);
    out << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line, 1);
  if (header.size() < 5 || header[0] != "id" || header[1] != "class" ||
      header[2] != "subclass" || header[3] != "caption") {
    throw ParseError("csv line 1: unexpected header");
  }
  const std::size_t dim = header.size() - 4;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[4 + j] != "x" + std::to_string(j)) {
      throw ParseError("csv line 1: expected column x" + std::to_string(j));
    }
  }

  Dataset ds;
  ds.dim = dim;
  std::size_t lineno = 1;
  int max_cls = -1, max_sub = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line, lineno);
    if (fields.size() != 4 + dim) {
      throw ParseError("csv line " + std::to_string(lineno) + ": expected " +
                       std::to_string(4 + dim) + " fields, got " +
                       std::to_string(fields.size()));
    }
    DatasetRecord rec;
    try {
      rec.id = std::stol(fields[0]);
      rec.cls = std::stoi(fields[1]);
      rec.subclass = std::stoi(fields[2]);
    } catch (const std::exception&) {
      throw ParseError("csv line " + std::to_string(lineno) + ": bad integer field");
    }
    if (rec.cls < 0 || rec.subclass < 0) {
      throw ParseError("csv line " + std::to_string(lineno) + ": negative class index");
    }
    rec.caption = fields[3];
    rec.x.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      char* end = nullptr;
      rec.x[j] = std::strtod(fields[4 + j].c_str(), &end);
      if (end == fields[4 + j].c_str() || *end != '\0') {
        throw ParseError("csv line " + std::to_string(lineno) + ": bad float in column x" +
                         std::to_string(j));
      }
    }
    max_cls = std::max(max_cls, rec.cls);
    max_sub = std::max(max_sub, rec.subclass);
    ds.records.push_back(std::move(rec));
  }
  ds.n_classes = max_cls + 1;
  ds.subclasses_per_class = max_sub + 1;
  return ds;
}

Tensor build_caption_pool(const Dataset& dataset, std::size_t t_dim) {
  const int total = dataset.n_subclasses();
  if (total < 1) throw ValueError("caption pool: dataset has no records");
  Tensor pool({static_cast<std::size_t>(total), t_dim});
  std::vector<bool> filled(static_cast<std::size_t>(total), false);
  for (const DatasetRecord& rec : dataset.records) {
    const std::size_t label =
        static_cast<std::size_t>(rec.cls * dataset.subclasses_per_class + rec.subclass);
    if (filled[label]) continue;
    const Tensor v = embed_caption(rec.caption, t_dim);
    std::copy(v.data.begin(), v.data.end(), pool.row_ptr(label));
    filled[label] = true;
  }
  // Subclasses absent from the file fall back to the template caption.
  for (int label = 0; label < total; ++label) {
    if (filled[static_cast<std::size_t>(label)]) continue;
    const Tensor v = embed_caption(caption_text(label / dataset.subclasses_per_class,
                                                label % dataset.subclasses_per_class),
                                   t_dim);
    std::copy(v.data.begin(), v.data.end(), pool.row_ptr(static_cast<std::size_t>(label)));
  }
  return pool;
}

Batch sample_batch_from_dataset(const Dataset& dataset, const Tensor& caption_pool,
                                std::size_t n, Rng& rng) {
  if (dataset.records.empty()) throw ValueError("sample_batch: dataset is empty");
  if (n < 1) throw ValueError("sample_batch: n must be >= 1");
  const std::size_t t_dim = caption_pool.cols();
  Batch batch;
  batch.x_real = Tensor({n, dataset.dim});
  batch.captions = Tensor({n, t_dim});
  batch.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = rng.uniform_index(dataset.records.size());
    const DatasetRecord& rec = dataset.records[row];
    std::copy(rec.x.begin(), rec.x.end(), batch.x_real.row_ptr(i));
    const int label = dataset.label_of(row);
    batch.labels.push_back(label);
    const double* cap = caption_pool.row_ptr(static_cast<std::size_t>(label));
    std::copy(cap, cap + t_dim, batch.captions.row_ptr(i));
  }
  MismatchResult mis = mismatch(batch.labels, caption_pool, rng);
  batch.captions_mismatched = std::move(mis.captions);
  batch.mismatched_labels = std::move(mis.labels);
  return batch;
}

Tensor dataset_matrix(const Dataset& dataset) {
  Tensor out({dataset.size(), dataset.dim});
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::copy(dataset.records[i].x.begin(), dataset.records[i].x.end(), out.row_ptr(i));
  }
  return out;
}

}  // namespace fggan
