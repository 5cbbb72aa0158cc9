#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fggan/tensor.hpp"

namespace fggan {

enum class DataMode { kVector, kShapes16 };

DataMode parse_data_mode(const std::string& s);
std::string data_mode_name(DataMode mode);

constexpr std::size_t kShapes16Dim = 256;  // 16x16 grayscale, flattened

// Two-level synthetic taxonomy: C classes, each split into S similar
// subclasses. Prototypes live in data space; subclass prototypes of one
// class cluster around the class centre.
struct Taxonomy {
  int n_classes = 0;
  int subclasses_per_class = 0;
  std::size_t dim = 0;
  double sigma_between = 0.0;  // subclass offset scale
  double sigma_within = 0.0;   // per-sample jitter scale
  Tensor class_centers;        // [C x D]
  Tensor prototypes;           // [C*S x D], row c*S+s

  int n_subclasses() const { return n_classes * subclasses_per_class; }
};

// One aligned training batch: matched captions t plus a mismatched caption
// per row drawn from a different subclass.
struct Batch {
  Tensor x_real;               // [N x D]
  Tensor captions;             // [N x T]
  Tensor captions_mismatched;  // [N x T]
  std::vector<int> labels;     // global subclass index, [N]
  std::vector<int> mismatched_labels;  // subclass the mismatched caption came from

  std::size_t size() const { return labels.size(); }
};

struct DatasetRecord {
  long id = 0;
  int cls = 0;
  int subclass = 0;
  std::string caption;
  std::vector<double> x;
};

struct Dataset {
  int n_classes = 0;
  int subclasses_per_class = 0;
  std::size_t dim = 0;
  std::vector<DatasetRecord> records;

  std::size_t size() const { return records.size(); }
  int n_subclasses() const { return n_classes * subclasses_per_class; }
  int label_of(std::size_t i) const {
    return records[i].cls * subclasses_per_class + records[i].subclass;
  }
};

Taxonomy make_taxonomy(int n_classes, int subclasses_per_class, std::size_t dim,
                       double sigma_between, double sigma_within, Rng& rng);

// Deterministic hashed bag-of-tokens caption embedding, unit norm.
Tensor embed_caption(const std::string& text, std::size_t t_dim);

// The caption string attached to a (class, subclass) pair.
std::string caption_text(int cls, int subclass);

// Per-row replacement captions drawn uniformly from the other subclasses.
// caption_pool holds one caption vector per global subclass index.
struct MismatchResult {
  Tensor captions;          // [N x T]
  std::vector<int> labels;  // source subclass per row
};
MismatchResult mismatch(const std::vector<int>& labels, const Tensor& caption_pool, Rng& rng);

// Fresh samples straight from the taxonomy (prototype + jitter, or rendered
// 16x16 glyphs in shapes16 mode).
Batch sample_batch(const Taxonomy& tax, std::size_t n, Rng& rng, DataMode mode,
                   std::size_t t_dim);

// Renders the glyph for one (class, subclass, jitter) triple; exposed so the
// sampler and the dataset generator share one definition.
std::vector<double> render_shape16(int cls, int subclass, int subclasses_per_class,
                                   double sigma_within, Rng& rng);

// Materialise a dataset of per_subclass samples for every subclass.
Dataset generate_dataset(const Taxonomy& tax, std::size_t per_subclass, DataMode mode,
                         Rng& rng);

// Class-level split; all subclasses of a class land on the same side.
std::pair<std::vector<int>, std::vector<int>> split_classes(const Taxonomy& tax,
                                                            double train_fraction, Rng& rng);

void save_csv(const Dataset& dataset, const std::string& path);
Dataset load_csv(const std::string& path);

// One caption vector per global subclass index, [C*S x T].
Tensor build_caption_pool(const Dataset& dataset, std::size_t t_dim);

// Training batch drawn from dataset rows (uniform with replacement).
Batch sample_batch_from_dataset(const Dataset& dataset, const Tensor& caption_pool,
                                std::size_t n, Rng& rng);

// All data rows as one [n x D] tensor.
Tensor dataset_matrix(const Dataset& dataset);

}  // namespace fggan
