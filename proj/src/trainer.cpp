#include "fggan/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fggan {

namespace {

Tensor scaled(const Tensor& t, double s) {
  Tensor out = t;
  for (double& v : out.data) v *= s;
  return out;
}

std::string fmt10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("config: expected a flat JSON object");
  TrainConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "steps_per_epoch") cfg.steps_per_epoch = value.get<int>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "lr_g") cfg.lr_g = value.get<double>();
      else if (key == "lr_d") cfg.lr_d = value.get<double>();
      else if (key == "lr_min") cfg.lr_min = value.get<double>();
      else if (key == "contrastive_warmup_epochs") cfg.contrastive_warmup_epochs = value.get<int>();
      else if (key == "margin") cfg.margin = value.get<double>();
      else if (key == "xbm_capacity") cfg.xbm_capacity = value.get<int>();
      else if (key == "w_adv") cfg.w_adv = value.get<double>();
      else if (key == "w_ce") cfg.w_ce = value.get<double>();
      else if (key == "w_cl") cfg.w_cl = value.get<double>();
      else if (key == "d_steps_per_g") cfg.d_steps_per_g = value.get<int>();
      else if (key == "z_dim") cfg.z_dim = value.get<std::size_t>();
      else if (key == "t_dim") cfg.t_dim = value.get<std::size_t>();
      else if (key == "embed_dim") cfg.embed_dim = value.get<std::size_t>();
      else if (key == "ctx_dim") cfg.ctx_dim = value.get<std::size_t>();
      else if (key == "gen_hidden") cfg.gen_hidden = value.get<std::size_t>();
      else if (key == "gen_blocks") cfg.gen_blocks = value.get<std::size_t>();
      else if (key == "disc_hidden") cfg.disc_hidden = value.get<std::size_t>();
      else if (key == "mode") cfg.mode = value.get<std::string>();
      else if (key == "reduction") cfg.reduction = value.get<std::string>();
      else if (key == "eval_every") cfg.eval_every = value.get<int>();
      else if (key == "eval_seed") cfg.eval_seed = value.get<std::uint64_t>();
      else if (key == "d_feat") cfg.d_feat = value.get<std::size_t>();
      else if (key == "n_eval_samples") cfg.n_eval_samples = value.get<std::size_t>();
      else if (key == "data" || key == "out") { /* path keys, handled by the CLI */ }
      else throw ParseError("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw ParseError("config: bad value for key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["epochs"] = epochs;
  j["steps_per_epoch"] = steps_per_epoch;
  j["batch_size"] = batch_size;
  j["lr_g"] = lr_g;
  j["lr_d"] = lr_d;
  j["lr_min"] = lr_min;
  j["contrastive_warmup_epochs"] = warmup_epochs();
  j["margin"] = margin;
  j["xbm_capacity"] = bank_capacity();
  j["w_adv"] = w_adv;
  j["w_ce"] = w_ce;
  j["w_cl"] = w_cl;
  j["d_steps_per_g"] = d_steps_per_g;
  j["z_dim"] = z_dim;
  j["t_dim"] = t_dim;
  j["embed_dim"] = embed_dim;
  j["ctx_dim"] = ctx_dim;
  j["gen_hidden"] = gen_hidden;
  j["gen_blocks"] = gen_blocks;
  j["disc_hidden"] = disc_hidden;
  j["mode"] = mode;
  j["reduction"] = reduction;
  j["eval_every"] = eval_every;
  j["eval_seed"] = eval_seed;
  j["d_feat"] = d_feat;
  j["n_eval_samples"] = n_eval_samples;
  return j;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ValueError("config: epochs must be >= 0");
  if (steps_per_epoch < 1) throw ValueError("config: steps_per_epoch must be >= 1");
  if (batch_size < 1) throw ValueError("config: batch_size must be >= 1");
  if (!(lr_g > 0.0) || !(lr_d > 0.0) || !(lr_min > 0.0)) {
    throw ValueError("config: learning rates must be > 0");
  }
  if (margin < 0.0 || margin >= 1.0) throw ValueError("config: margin must be in [0,1)");
  if (epochs > 0 && warmup_epochs() >= epochs && w_cl != 0.0) {
    throw ValueError("config: contrastive_warmup_epochs must be < epochs");
  }
  if (batch_size > bank_capacity()) {
    throw ValueError("config: batch_size exceeds xbm_capacity");
  }
  if (d_steps_per_g < 1) throw ValueError("config: d_steps_per_g must be >= 1");
  if (z_dim < 1 || t_dim < 1 || embed_dim < 1 || ctx_dim < 1 || gen_hidden < 1 ||
      gen_blocks < 1 || disc_hidden < 1 || d_feat < 1) {
    throw ValueError("config: network dimensions must be >= 1");
  }
  parse_data_mode(mode);
  if (reduction != "mean" && reduction != "sum") {
    throw ValueError("config: reduction must be mean or sum");
  }
  if (eval_every < 0) throw ValueError("config: eval_every must be >= 0");
}

std::string history_header() {
  return "epoch,loss_d_adv,loss_d_ce,loss_d_cl,loss_g_adv,loss_g_ce,loss_g_cl,fid,is";
}

std::string history_row(const EpochRecord& rec) {
  const double nan = std::nan("");
  std::string row = std::to_string(rec.epoch);
  for (double v : {rec.d.adv, rec.d.ce, rec.d.cl, rec.g.adv, rec.g.ce, rec.g.cl,
                   rec.evaluated ? rec.fid : nan, rec.evaluated ? rec.is : nan}) {
    row += ",";
    row += fmt10(v);
  }
  return row;
}

Trainer::Trainer(const TrainConfig& cfg, const Dataset& dataset)
    : cfg_(cfg),
      dataset_(dataset),
      bank_(static_cast<std::size_t>(cfg.bank_capacity())),
      model_rng_(mix_seed(cfg.seed, 101)),
      data_rng_(mix_seed(cfg.seed, 102)) {
  cfg_.validate();
  init_networks();
}

Trainer::Trainer(const TrainConfig& cfg, const Dataset& dataset, const Checkpoint& resume)
    : Trainer(cfg, dataset) {
  restore(resume);
}

void Trainer::init_networks() {
  if (dataset_.n_subclasses() < 2) {
    throw ValueError("trainer: dataset must contain at least 2 subclasses");
  }
  if (dataset_.records.empty()) throw ValueError("trainer: dataset is empty");
  const DataMode mode = parse_data_mode(cfg_.mode);
  if (mode == DataMode::kShapes16 && dataset_.dim != kShapes16Dim) {
    throw ValueError("trainer: shapes16 mode expects dim 256, dataset has " +
                     std::to_string(dataset_.dim));
  }
  caption_pool_ = build_caption_pool(dataset_, cfg_.t_dim);

  GeneratorConfig gcfg;
  gcfg.z_dim = cfg_.z_dim;
  gcfg.t_dim = cfg_.t_dim;
  gcfg.ctx_dim = cfg_.ctx_dim;
  gcfg.hidden = cfg_.gen_hidden;
  gcfg.blocks = cfg_.gen_blocks;
  gcfg.out_dim = dataset_.dim;
  gcfg.bounded_output = mode == DataMode::kShapes16;

  DiscriminatorConfig dcfg;
  dcfg.in_dim = dataset_.dim;
  dcfg.t_dim = cfg_.t_dim;
  dcfg.hidden = cfg_.disc_hidden;
  dcfg.embed_dim = cfg_.embed_dim;
  dcfg.n_classes = static_cast<std::size_t>(dataset_.n_subclasses());

  Rng init_rng(mix_seed(cfg_.seed, 100));
  gen_ = Generator(gcfg, init_rng);
  disc_ = Discriminator(dcfg, init_rng);
  opt_g_.emplace(gen_.params());
  opt_d_.emplace(disc_.params());

  const long total = std::max(1L, static_cast<long>(cfg_.epochs) * cfg_.steps_per_epoch);
  sched_g_ = {cfg_.lr_g, cfg_.lr_min, total};
  sched_d_ = {cfg_.lr_d, cfg_.lr_min * (cfg_.lr_d / cfg_.lr_g), total};
}

bool Trainer::gate_open(int epoch) const { return epoch >= cfg_.warmup_epochs(); }

double Trainer::lr_g_at(long step) const { return cosine_lr(sched_g_, step); }

// Scaled copy of the generator schedule so lr_d/lr_g is exactly the
// configured ratio at every step.
double Trainer::lr_d_at(long step) const { return (cfg_.lr_d / cfg_.lr_g) * lr_g_at(step); }

Batch Trainer::sample_batch(std::size_t n) {
  return sample_batch_from_dataset(dataset_, caption_pool_, n, data_rng_);
}

LossBreakdown Trainer::train_step_d(const Batch& batch, double lr, bool contrastive_on) {
  const std::size_t n = batch.size();
  disc_.zero_grad();

  const Tensor z = model_rng_.normal_tensor({n, cfg_.z_dim});
  const Tensor fake = gen_.forward(z, batch.captions);

  Discriminator::Cache c_real, c_fake, c_mis;
  const DiscriminatorOutput out_real = disc_.forward(batch.x_real, batch.captions, c_real);
  const DiscriminatorOutput out_fake = disc_.forward(fake, batch.captions, c_fake);
  const DiscriminatorOutput out_mis =
      disc_.forward(batch.x_real, batch.captions_mismatched, c_mis);

  // Real embeddings enter the memory first; the loss then runs against the
  // whole bank including this batch. Stored rows are detached copies.
  bank_.enqueue_batch(out_real.embeddings, batch.labels);

  const bool use_adv = cfg_.w_adv != 0.0;
  const bool use_ce = cfg_.w_ce != 0.0;
  const bool use_cl = contrastive_on && cfg_.w_cl != 0.0;

  HingeDResult adv;
  if (use_adv) adv = hinge_d(out_real.scores, out_fake.scores, out_mis.scores);
  CeDResult ce;
  if (use_ce) ce = ce_d(out_fake.probs, out_real.probs, batch.labels, cfg_.ce_reduction());
  ContrastiveResult cl;
  if (use_cl) {
    cl = contrastive(out_real.embeddings, batch.labels, bank_.contents(), cfg_.margin);
  }
  const LossBreakdown breakdown = total_loss(use_adv ? adv.value : 0.0, use_ce ? ce.value : 0.0,
                                             use_cl ? cl.value : 0.0,
                                             {cfg_.w_adv, cfg_.w_ce, cfg_.w_cl}, use_cl,
                                             "discriminator");

  const Tensor zero_scores = Tensor::zeros({n});
  const Tensor zero_probs = Tensor::zeros(out_real.probs.shape);
  const Tensor zero_embed = Tensor::zeros(out_real.embeddings.shape);

  disc_.backward(c_real, use_adv ? scaled(adv.grad_real, cfg_.w_adv) : zero_scores,
                 use_cl ? scaled(cl.grad_embeddings, cfg_.w_cl) : zero_embed,
                 use_ce ? scaled(ce.grad_probs_real, cfg_.w_ce) : zero_probs);
  disc_.backward(c_fake, use_adv ? scaled(adv.grad_fake, cfg_.w_adv) : zero_scores, zero_embed,
                 use_ce ? scaled(ce.grad_probs_fake, cfg_.w_ce) : zero_probs);
  disc_.backward(c_mis, use_adv ? scaled(adv.grad_mismatch, cfg_.w_adv) : zero_scores,
                 zero_embed, zero_probs);

  opt_d_->step(lr);
  return breakdown;
}

LossBreakdown Trainer::train_step_g(const Batch& batch, double lr, bool contrastive_on) {
  const std::size_t n = batch.size();
  gen_.zero_grad();

  const Tensor z = model_rng_.normal_tensor({n, cfg_.z_dim});
  Generator::Cache gcache;
  const Tensor fake = gen_.forward(z, batch.captions, gcache);
  Discriminator::Cache dcache;
  const DiscriminatorOutput out = disc_.forward(fake, batch.captions, dcache);

  const bool use_adv = cfg_.w_adv != 0.0;
  const bool use_ce = cfg_.w_ce != 0.0;
  const bool use_cl = contrastive_on && cfg_.w_cl != 0.0;

  HingeGResult adv;
  if (use_adv) adv = hinge_g(out.scores);
  CeGResult ce;
  if (use_ce) ce = ce_g(out.probs, batch.labels, cfg_.ce_reduction());
  ContrastiveResult cl;
  if (use_cl) {
    cl = contrastive(out.embeddings, batch.labels, bank_.contents(), cfg_.margin);
  }
  const LossBreakdown breakdown = total_loss(use_adv ? adv.value : 0.0, use_ce ? ce.value : 0.0,
                                             use_cl ? cl.value : 0.0,
                                             {cfg_.w_adv, cfg_.w_ce, cfg_.w_cl}, use_cl,
                                             "generator");

  const Tensor zero_scores = Tensor::zeros({n});
  const Tensor zero_probs = Tensor::zeros(out.probs.shape);
  const Tensor zero_embed = Tensor::zeros(out.embeddings.shape);

  // D stays frozen: only the input gradient leaves the discriminator.
  const Tensor grad_fake = disc_.backward(
      dcache, use_adv ? scaled(adv.grad_fake, cfg_.w_adv) : zero_scores,
      use_cl ? scaled(cl.grad_embeddings, cfg_.w_cl) : zero_embed,
      use_ce ? scaled(ce.grad_probs_fake, cfg_.w_ce) : zero_probs,
      /*accumulate_params=*/false);
  gen_.backward(gcache, grad_fake);

  opt_g_->step(lr);
  return breakdown;
}

MetricsReport Trainer::evaluate_now() {
  const EvalNets& nets = eval_nets();
  return evaluate(gen_, dataset_, nets, cfg_.n_eval_samples,
                  mix_seed(cfg_.eval_seed, static_cast<std::uint64_t>(epoch_) + 1));
}

const EvalNets& Trainer::eval_nets() {
  if (!eval_nets_) {
    eval_nets_ = EvalNets::build(dataset_, cfg_.d_feat, cfg_.eval_seed);
  }
  return *eval_nets_;
}

TrainHistory Trainer::run(const std::string& out_dir) {
  const bool to_disk = !out_dir.empty();
  std::ofstream hist;
  if (to_disk) {
    std::filesystem::create_directories(out_dir);
    std::ofstream cfg_echo(out_dir + "/config.json");
    if (!cfg_echo) throw IoError("cannot write config echo in '" + out_dir + "'");
    cfg_echo << cfg_.to_json().dump(2) << "\n";
    hist.open(out_dir + "/history.csv");
    if (!hist) throw IoError("cannot write history.csv in '" + out_dir + "'");
    hist << history_header() << "\n" << std::flush;
  }

  TrainHistory history;
  double last_fid = std::nan("");
  for (; epoch_ < cfg_.epochs; ++epoch_) {
    EpochRecord rec;
    rec.epoch = epoch_;
    rec.lr_d = lr_d_at(step_);
    rec.lr_g = lr_g_at(step_);
    const bool contrastive_on = gate_open(epoch_);
    int d_updates = 0;
    for (int s = 0; s < cfg_.steps_per_epoch; ++s) {
      const double lrd = lr_d_at(step_);
      const double lrg = lr_g_at(step_);
      Batch batch = sample_batch(static_cast<std::size_t>(cfg_.batch_size));
      for (int j = 0; j < cfg_.d_steps_per_g; ++j) {
        if (j > 0) batch = sample_batch(static_cast<std::size_t>(cfg_.batch_size));
        const LossBreakdown d = train_step_d(batch, lrd, contrastive_on);
        rec.d.adv += d.adv;
        rec.d.ce += d.ce;
        rec.d.cl += d.cl;
        rec.d.total += d.total;
        ++d_updates;
      }
      const LossBreakdown g = train_step_g(batch, lrg, contrastive_on);
      rec.g.adv += g.adv;
      rec.g.ce += g.ce;
      rec.g.cl += g.cl;
      rec.g.total += g.total;
      ++step_;
    }
    const double inv_d = 1.0 / static_cast<double>(d_updates);
    rec.d.adv *= inv_d;
    rec.d.ce *= inv_d;
    rec.d.cl *= inv_d;
    rec.d.total *= inv_d;
    const double inv_g = 1.0 / static_cast<double>(cfg_.steps_per_epoch);
    rec.g.adv *= inv_g;
    rec.g.ce *= inv_g;
    rec.g.cl *= inv_g;
    rec.g.total *= inv_g;

    if (cfg_.eval_every > 0 && (epoch_ + 1) % cfg_.eval_every == 0) {
      const MetricsReport report = evaluate_now();
      rec.evaluated = true;
      rec.fid = report.fid;
      rec.is = report.is;
      last_fid = report.fid;
      if (to_disk) {
        save(out_dir + "/checkpoint_epoch_" + std::to_string(epoch_) + ".bin");
      }
    }

    history.epochs.push_back(rec);
    if (to_disk) hist << history_row(rec) << "\n" << std::flush;
    std::printf("epoch=%d ld=%.10g lg=%.10g fid=%.10g\n", rec.epoch, rec.d.total, rec.g.total,
                rec.evaluated ? rec.fid : last_fid);
    std::fflush(stdout);
  }

  if (to_disk) save(out_dir + "/checkpoint_final.bin");
  return history;
}

Checkpoint Trainer::make_checkpoint() {
  Checkpoint ckpt;
  for (const ParamRef& p : gen_.params()) ckpt.tensors.emplace_back(p.name, *p.value);
  for (const ParamRef& p : disc_.params()) ckpt.tensors.emplace_back(p.name, *p.value);
  for (auto& [name, state] : opt_g_->states()) {
    ckpt.tensors.emplace_back("adam." + name + ".m", state->m);
    ckpt.tensors.emplace_back("adam." + name + ".v", state->v);
  }
  for (auto& [name, state] : opt_d_->states()) {
    ckpt.tensors.emplace_back("adam." + name + ".m", state->m);
    ckpt.tensors.emplace_back("adam." + name + ".v", state->v);
  }
  const MemoryBank::Snapshot snap = bank_.contents();
  ckpt.tensors.emplace_back("xbm.embeddings", snap.embeddings);

  nlohmann::json meta;
  meta["epoch"] = epoch_;
  meta["step"] = step_;
  meta["adam_g_steps"] = opt_g_->step_count();
  meta["adam_d_steps"] = opt_d_->step_count();
  meta["model_rng"] = model_rng_.state();
  meta["data_rng"] = data_rng_.state();
  meta["xbm_labels"] = snap.labels;
  meta["config"] = cfg_.to_json();
  meta["data_dim"] = dataset_.dim;
  meta["n_classes"] = dataset_.n_classes;
  meta["subclasses_per_class"] = dataset_.subclasses_per_class;
  ckpt.meta = meta;
  return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
  if (ckpt.meta.value("config", nlohmann::json::object()) != cfg_.to_json()) {
    throw ValueError("resume: checkpoint was produced with a different config");
  }
  for (const ParamRef& p : gen_.params()) {
    const Tensor& stored = ckpt.require(p.name);
    require_same_shape(*p.value, stored, "resume " + p.name);
    *p.value = stored;
  }
  for (const ParamRef& p : disc_.params()) {
    const Tensor& stored = ckpt.require(p.name);
    require_same_shape(*p.value, stored, "resume " + p.name);
    *p.value = stored;
  }
  for (auto& [name, state] : opt_g_->states()) {
    state->m = ckpt.require("adam." + name + ".m");
    state->v = ckpt.require("adam." + name + ".v");
  }
  for (auto& [name, state] : opt_d_->states()) {
    state->m = ckpt.require("adam." + name + ".m");
    state->v = ckpt.require("adam." + name + ".v");
  }
  opt_g_->set_step_count(ckpt.meta.at("adam_g_steps").get<long>());
  opt_d_->set_step_count(ckpt.meta.at("adam_d_steps").get<long>());

  const auto mstate = ckpt.meta.at("model_rng").get<std::array<std::uint64_t, 4>>();
  model_rng_.set_state(mstate);
  const auto dstate = ckpt.meta.at("data_rng").get<std::array<std::uint64_t, 4>>();
  data_rng_.set_state(dstate);

  bank_.clear();
  const Tensor& bank_rows = ckpt.require("xbm.embeddings");
  const auto labels = ckpt.meta.at("xbm_labels").get<std::vector<int>>();
  if (bank_rows.rows() != labels.size()) {
    throw ParseError("resume: xbm embeddings/labels length mismatch");
  }
  if (!labels.empty()) bank_.enqueue_batch(bank_rows, labels);

  epoch_ = ckpt.meta.at("epoch").get<int>();
  step_ = ckpt.meta.at("step").get<long>();
}

}  // namespace fggan
