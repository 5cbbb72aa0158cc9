#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fggan/checkpoint.hpp"
#include "fggan/data.hpp"
#include "fggan/losses.hpp"
#include "fggan/metrics.hpp"
#include "fggan/models.hpp"
#include "fggan/nn.hpp"
#include "fggan/xbm.hpp"

namespace fggan {

struct TrainConfig {
  std::uint64_t seed = 1;
  int epochs = 300;
  int steps_per_epoch = 8;
  int batch_size = 24;
  double lr_g = 1e-4;
  double lr_d = 4e-4;
  double lr_min = 1e-6;
  int contrastive_warmup_epochs = -1;  // -1: 10% of epochs
  double margin = 0.5;
  int xbm_capacity = -1;  // -1: 8 * batch_size
  double w_adv = 1.0;
  double w_ce = 1.0;
  double w_cl = 1.0;
  int d_steps_per_g = 1;
  std::size_t z_dim = 16;
  std::size_t t_dim = 32;
  std::size_t embed_dim = 16;
  std::size_t ctx_dim = 16;
  std::size_t gen_hidden = 48;
  std::size_t gen_blocks = 3;
  std::size_t disc_hidden = 48;
  std::string mode = "vector";
  std::string reduction = "mean";
  int eval_every = 0;  // 0: no periodic evaluation
  std::uint64_t eval_seed = 9000;
  std::size_t d_feat = 16;
  std::size_t n_eval_samples = 2000;

  // Defaults applied, every key validated. Unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;  // effective config, derived fields resolved
  void validate() const;

  int warmup_epochs() const {
    return contrastive_warmup_epochs >= 0 ? contrastive_warmup_epochs : epochs / 10;
  }
  int bank_capacity() const { return xbm_capacity >= 0 ? xbm_capacity : 8 * batch_size; }
  Reduction ce_reduction() const {
    return reduction == "sum" ? Reduction::kSum : Reduction::kMean;
  }
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown d;
  LossBreakdown g;
  double lr_d = 0.0;
  double lr_g = 0.0;
  bool evaluated = false;
  double fid = 0.0;
  double is = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

std::string history_header();
std::string history_row(const EpochRecord& rec);

// One training run: alternating discriminator/generator updates, XBM
// maintenance, warmup-gated contrastive loss, cosine learning rates and
// periodic evaluation. Fully determined by (config, dataset file).
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const Dataset& dataset);
  // Resume from a checkpoint produced by a run with the same config.
  Trainer(const TrainConfig& cfg, const Dataset& dataset, const Checkpoint& resume);

  // out_dir may be empty (no files written). Writes history.csv rows as
  // epochs complete and checkpoints at eval points and at the end.
  TrainHistory run(const std::string& out_dir);

  LossBreakdown train_step_d(const Batch& batch, double lr, bool contrastive_on);
  LossBreakdown train_step_g(const Batch& batch, double lr, bool contrastive_on);

  Batch sample_batch(std::size_t n);
  bool gate_open(int epoch) const;
  double lr_d_at(long step) const;
  double lr_g_at(long step) const;

  Checkpoint make_checkpoint();
  void save(const std::string& path) { save_checkpoint(make_checkpoint(), path); }

  Generator& generator() { return gen_; }
  Discriminator& discriminator() { return disc_; }
  MemoryBank& bank() { return bank_; }
  const TrainConfig& config() const { return cfg_; }
  int epoch() const { return epoch_; }
  long step() const { return step_; }
  const EvalNets& eval_nets();

 private:
  void init_networks();
  void restore(const Checkpoint& ckpt);
  MetricsReport evaluate_now();

  TrainConfig cfg_;
  const Dataset& dataset_;
  Tensor caption_pool_;
  Generator gen_;
  Discriminator disc_;
  MemoryBank bank_;
  std::optional<AdamOpt> opt_g_;
  std::optional<AdamOpt> opt_d_;
  Rng model_rng_;
  Rng data_rng_;
  LrSchedule sched_g_;
  LrSchedule sched_d_;
  int epoch_ = 0;
  long step_ = 0;
  std::optional<EvalNets> eval_nets_;
};

}  // namespace fggan
