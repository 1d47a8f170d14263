#include "acgan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>

namespace acgan {

using nlohmann::json;

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::Baseline: return "baseline";
    case Objective::AContrarioBCE: return "acontrario_bce";
    case Objective::AContrarioHinge: return "acontrario_hinge";
  }
  return "?";
}

Objective parse_objective(std::string_view s) {
  for (auto o : {Objective::Baseline, Objective::AContrarioBCE, Objective::AContrarioHinge})
    if (to_string(o) == s) return o;
  throw std::invalid_argument("unknown objective '" + std::string(s) + "'");
}

LossWeights TrainConfig::effective_weights() const {
  if (objective != Objective::Baseline) return weights;
  LossWeights w = LossWeights::custom(weights.lambda[0], weights.lambda[1], 0.0, 0.0);
  w.g_mode = weights.g_mode;
  return w;
}

void TrainConfig::validate() const {
  weights.validate();
  if (!(lr > 0)) throw std::invalid_argument("train config: lr must be > 0");
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (decay_start_epoch < 0 || decay_start_epoch > epochs)
    throw std::invalid_argument("train config: decay_start_epoch must lie in [0, epochs]");
  if (batch_size < 2)
    throw std::invalid_argument("train config: batch_size must be >= 2 for a-contrario pairs");
  if (disjoint_conditional_sets && (batch_size < 4 || batch_size % 2 != 0))
    throw std::invalid_argument("train config: disjoint sets need an even batch_size >= 4");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1))
    throw std::invalid_argument("train config: betas must lie in [0, 1)");
  if (aux_l1_weight < 0) throw std::invalid_argument("train config: negative L1 weight");
  if (d_steps_per_g_step < 1 || gradnorm_every < 1 || eval_every < 0 || keep_checkpoints < 0)
    throw std::invalid_argument("train config: cadences must be positive");
  if (jitter_pad < 0) throw std::invalid_argument("train config: negative jitter_pad");
  if (g_base_channels < 1 || d_base_channels < 1)
    throw std::invalid_argument("train config: channel widths must be positive");
}

json to_json(const TrainConfig& c) {
  return {{"objective", to_string(c.objective)},
          {"weights",
           {{"strategy", to_string(c.weights.strategy)},
            {"lambda", c.weights.lambda},
            {"g_mode", to_string(c.weights.g_mode)}}},
          {"aux_l1_weight", c.aux_l1_weight},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"decay_start_epoch", c.decay_start_epoch},
          {"seed", c.seed},
          {"jitter", c.jitter},
          {"jitter_pad", c.jitter_pad},
          {"disjoint_conditional_sets", c.disjoint_conditional_sets},
          {"d_steps_per_g_step", c.d_steps_per_g_step},
          {"gradnorm_every", c.gradnorm_every},
          {"eval_every", c.eval_every},
          {"keep_checkpoints", c.keep_checkpoints},
          {"g_base_channels", c.g_base_channels},
          {"d_base_channels", c.d_base_channels},
          {"class_embedding", c.class_embedding},
          {"dropout", c.dropout}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.objective = parse_objective(j.at("objective").get<std::string>());
  const auto& w = j.at("weights");
  c.weights.strategy = parse_weight_strategy(w.at("strategy").get<std::string>());
  c.weights.lambda = w.at("lambda").get<std::array<double, 4>>();
  c.weights.g_mode = parse_generator_mode(w.at("g_mode").get<std::string>());
  c.aux_l1_weight = j.at("aux_l1_weight");
  c.epochs = j.at("epochs");
  c.batch_size = j.at("batch_size");
  c.lr = j.at("lr");
  c.beta1 = j.at("beta1");
  c.beta2 = j.at("beta2");
  c.decay_start_epoch = j.at("decay_start_epoch");
  c.seed = j.at("seed");
  c.jitter = j.at("jitter");
  c.jitter_pad = j.at("jitter_pad");
  c.disjoint_conditional_sets = j.at("disjoint_conditional_sets");
  c.d_steps_per_g_step = j.at("d_steps_per_g_step");
  c.gradnorm_every = j.at("gradnorm_every");
  c.eval_every = j.at("eval_every");
  c.keep_checkpoints = j.at("keep_checkpoints");
  c.g_base_channels = j.at("g_base_channels");
  c.d_base_channels = j.at("d_base_channels");
  c.class_embedding = j.at("class_embedding");
  c.dropout = j.at("dropout");
  return c;
}

json to_json(const MetricRecord& m) {
  return {{"step", m.step}, {"epoch", m.epoch}, {"name", m.name}, {"value", m.value}};
}

MetricRecord metric_record_from_json(const json& j) {
  return {j.at("step"), j.at("epoch"), j.at("name"), j.at("value")};
}

const Checkpoint& RunArtifacts::checkpoint(int epoch) const {
  auto it = checkpoints.find(epoch);
  if (it == checkpoints.end())
    throw std::out_of_range("no checkpoint at epoch " + std::to_string(epoch));
  return it->second;
}

int RunArtifacts::last_epoch() const {
  if (checkpoints.empty()) throw std::out_of_range("run has no checkpoints");
  return checkpoints.rbegin()->first;
}

UNetGenerator make_generator(const TrainConfig& c, Task task, int n_classes, int size,
                             Rng& rng) {
  GeneratorConfig g;
  g.n_classes = n_classes;
  g.base_channels = c.g_base_channels;
  g.dropout = c.dropout;
  g.class_embedding = c.class_embedding;
  return build_generator(task, size, rng, g);
}

PatchDiscriminator make_discriminator(const TrainConfig& c, Task task, int n_classes,
                                      Rng& rng) {
  GeneratorConfig g;
  g.task = task;
  g.n_classes = n_classes;
  const bool class_index = task == Task::SingleLabel2Image;
  return build_discriminator(patchgan70_spec(c.d_base_channels), Fusion::EarlyConcat,
                             g.condition_channels(), g.output_channels(), rng,
                             class_index ? c.class_embedding : 0);
}

namespace {

std::array<std::vector<double>, 4> split_scores(const Tensor& raw, int per_kind) {
  const std::size_t cells = raw.shape().sample_size();
  std::array<std::vector<double>, 4> out;
  for (int k = 0; k < 4; ++k) {
    const float* p = raw.sample(k * per_kind);
    out[k].assign(p, p + cells * per_kind);
  }
  return out;
}

Tensor join_grads(const std::array<std::vector<double>, 4>& g, const Shape& shape) {
  Tensor t(shape);
  std::size_t i = 0;
  for (const auto& part : g)
    for (double v : part) t[i++] = static_cast<float>(v);
  return t;
}

Tensor to_tensor(const std::vector<double>& v, const Shape& shape) {
  Tensor t(shape);
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<float>(v[i]);
  return t;
}

bool all_finite(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

struct DStep {
  std::array<double, 4> terms{};
  double total = 0.0;
  double grad_norm = 0.0;
};

// One discriminator update over all four pairings as a single 4B batch.
DStep d_update(PatchDiscriminator& d, Adam* opt, const TrainConfig& config,
               const LossWeights& w, const Tensor& cond, const Tensor& tgt,
               const Tensor& fake, Rng& derange_rng, bool want_norm) {
  PairingOptions options{config.disjoint_conditional_sets};
  FourPairingsBatch fp = assemble_pairings(cond, tgt, fake, derange_rng, options);
  std::array<Tensor, 4> cs, ts;
  for (auto k : kAllPairings) {
    cs[index_of(k)] = fp[k].conditions;
    ts[index_of(k)] = fp[k].targets;
  }
  const FieldResponse r = d.forward(concat_batch(cs), concat_batch(ts), Mode::Train);
  DStep s;
  if (!all_finite(r.raw.values())) {
    s.terms.fill(std::numeric_limits<double>::quiet_NaN());
    s.total = s.terms[0];
    return s;
  }
  const auto outs = DiscriminatorOutputs::from_raw(split_scores(r.raw, fp.batch()));
  const bool hinge = config.objective == Objective::AContrarioHinge;
  const PairingGradients g = hinge ? loss_d_hinge_grad(outs, w) : loss_d_combined_grad(outs, w);
  s.terms = hinge ? hinge_terms(outs) : bce_terms(outs);
  s.total = g.value;
  if (opt) {
    opt->zero_grad();
    d.backward(join_grads(g.d_raw, r.raw.shape()), true);
    if (want_norm) s.grad_norm = mean_abs_grad(d.params());
    opt->step();
  }
  return s;
}

bool finite(const std::array<double, 4>& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, int batch_size) {
  std::vector<std::vector<std::size_t>> out;
  const std::size_t b = std::min<std::size_t>(batch_size, n);
  for (std::size_t i = 0; i + b <= n; i += b) {
    out.emplace_back(b);
    std::iota(out.back().begin(), out.back().end(), i);
  }
  return out;
}

void gather(const PairedDataset& ds, std::span<const std::size_t> idx,
            std::span<const std::size_t> order, Tensor& cond, Tensor& tgt,
            const TrainConfig* jitter_config, Rng* jitter_rng) {
  std::vector<Tensor> cs, ts;
  for (auto i : idx) {
    const PairedSample& s = ds.samples[order[i]];
    if (jitter_config && jitter_config->jitter) {
      PairedSample j = jitter_augment(s, *jitter_rng, s.target.shape().h,
                                      jitter_config->jitter_pad);
      cs.push_back(std::move(j.condition));
      ts.push_back(std::move(j.target));
    } else {
      cs.push_back(s.condition);
      ts.push_back(s.target);
    }
  }
  cond = stack(cs);
  tgt = stack(ts);
}

}  // namespace

double lr_factor(const TrainConfig& c, int epoch) {
  if (epoch < c.decay_start_epoch) return 1.0;
  const double span = c.epochs - c.decay_start_epoch + 1;
  return 1.0 - (epoch - c.decay_start_epoch + 1) / span;
}



RunArtifacts train(const TrainConfig& config, const PairedDataset& dataset,
                   const TrainHooks& hooks) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  dataset.validate();
  if (dataset.size() < 2) throw std::invalid_argument("train: need at least two samples");

  RunArtifacts run;
  run.config = config;
  run.task = dataset.task;
  run.n_classes = dataset.n_classes;
  run.image_size = dataset.samples[0].target.shape().h;

  Rng init_rng = derive_rng(config.seed, stream::kInit);
  UNetGenerator g = make_generator(config, run.task, run.n_classes, run.image_size, init_rng);
  PatchDiscriminator d = make_discriminator(config, run.task, run.n_classes, init_rng);
  Adam opt_g(trainable(g.params()), config.lr, config.beta1, config.beta2);
  Adam opt_d(trainable(d.params()), config.lr, config.beta1, config.beta2);
  Rng shuffle_rng = derive_rng(config.seed, stream::kShuffle);
  Rng derange_rng = derive_rng(config.seed, stream::kDerange);
  Rng dropout_rng = derive_rng(config.seed, stream::kDropout);
  Rng jitter_rng = derive_rng(config.seed, stream::kJitter);

  const LossWeights w = config.effective_weights();
  const bool hinge = config.objective == Objective::AContrarioHinge;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const auto plan = batches(dataset.size(), config.batch_size);
  Tensor cond, tgt;

  auto diverged = [&](int epoch, const DStep& ds, double lr,
                      double g_adv = std::numeric_limits<double>::quiet_NaN(),
                      double g_l1 = std::numeric_limits<double>::quiet_NaN()) {
    json snap = {{"step", run.steps}, {"epoch", epoch}, {"d_terms", ds.terms},
                 {"d_total", ds.total}, {"g_adv", g_adv}, {"g_l1", g_l1}, {"lr", lr}};
    throw TrainingDiverged("training diverged at step " + std::to_string(run.steps), snap);
  };

  auto run_eval = [&](int epoch) {
    if (!hooks.on_eval) return;
    auto recs = hooks.on_eval(run.steps, epoch, g, d);
    run.metrics.insert(run.metrics.end(), recs.begin(), recs.end());
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.lr * lr_factor(config, epoch);
    opt_g.set_lr(lr);
    opt_d.set_lr(lr);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (const auto& idx : plan) {
      gather(dataset, idx, order, cond, tgt, &config, &jitter_rng);
      const bool want_norm = run.steps % config.gradnorm_every == 0;
      const Tensor fake = g.forward(cond, {Mode::Train, &dropout_rng});

      DStep first;
      for (int k = 0; k < config.d_steps_per_g_step; ++k) {
        DStep s = d_update(d, &opt_d, config, w, cond, tgt, fake, derange_rng,
                           want_norm && k == 0);
        if (k == 0) first = s;
      }

      const FieldResponse r = d.forward(cond, fake, Mode::Train);
      if (!finite(first.terms) || !all_finite(r.raw.values())) diverged(epoch, first, lr);
      const std::vector<double> raw(r.raw.values().begin(), r.raw.values().end());
      const ScoreGradient sg = hinge ? loss_g_hinge_grad(raw) : loss_g_adversarial_grad(raw, w.g_mode);
      Tensor grad_fake = d.backward(to_tensor(sg.d_raw, r.raw.shape()), false);
      const L1Gradient l1 = loss_l1_grad(fake.values(), tgt.values(), config.aux_l1_weight);
      for (std::size_t i = 0; i < grad_fake.size(); ++i) grad_fake[i] += l1.d_gen[i];
      opt_g.zero_grad();
      g.backward(grad_fake);

      LossRecord rec{run.steps, epoch, first.terms, first.total, sg.value, l1.value, lr};
      if (!finite(first.terms) || !std::isfinite(first.total) || !std::isfinite(sg.value) ||
          !std::isfinite(l1.value)) {
        diverged(epoch, first, lr, sg.value, l1.value);
      }
      if (want_norm) {
        run.grad_norms.push_back({run.steps, first.grad_norm, mean_abs_grad(g.params())});
      }
      opt_g.step();
      run.losses.push_back(rec);
      ++run.steps;
      if (config.eval_every > 0 && run.steps % config.eval_every == 0) run_eval(epoch);
    }

    Checkpoint ck{epoch + 1, save_checkpoint(g), save_checkpoint(d)};
    run.checkpoints[epoch + 1] = std::move(ck);
    if (config.keep_checkpoints > 0)
      while (static_cast<int>(run.checkpoints.size()) > config.keep_checkpoints)
        run.checkpoints.erase(run.checkpoints.begin());
    if (config.eval_every == 0) run_eval(epoch);
    if (hooks.on_epoch) hooks.on_epoch(epoch + 1, run);
  }
  return run;
}

FrozenDiscriminator::FrozenDiscriminator(PatchDiscriminator d) : d_(std::move(d)) {}

std::uint64_t FrozenDiscriminator::hash() const { return weights_hash(d_.params()); }

FieldResponse FrozenDiscriminator::respond(const Tensor& conditions,
                                           const Tensor& targets) const {
  constexpr int chunk = 64;
  const int n = conditions.shape().n;
  if (n <= chunk) return d_.forward(conditions, targets, Mode::Inference);
  std::vector<Tensor> raw, prob;
  for (int b = 0; b < n; b += chunk) {
    const int m = std::min(chunk, n - b);
    FieldResponse r =
        d_.forward(slice_batch(conditions, b, m), slice_batch(targets, b, m), Mode::Inference);
    raw.push_back(std::move(r.raw));
    prob.push_back(std::move(r.prob));
  }
  return {concat_batch(raw), concat_batch(prob)};
}

FrozenGenerator::FrozenGenerator(UNetGenerator g) : g_(std::move(g)) {}

std::uint64_t FrozenGenerator::hash() const { return weights_hash(g_.params()); }

Tensor FrozenGenerator::generate(const Tensor& conditions, Rng* rng) const {
  const ForwardContext ctx{rng ? Mode::Train : Mode::Inference, rng};
  constexpr int chunk = 64;
  const int n = conditions.shape().n;
  if (n <= chunk) return g_.forward(conditions, ctx);
  std::vector<Tensor> parts;
  for (int b = 0; b < n; b += chunk)
    parts.push_back(g_.forward(slice_batch(conditions, b, std::min(chunk, n - b)), ctx));
  return concat_batch(parts);
}

double evaluate_d_objective(const TrainConfig& config, PatchDiscriminator& d,
                            const FrozenGenerator& g, const PairedDataset& dataset,
                            Rng* g_rng) {
  const LossWeights w = config.effective_weights();
  Rng derange_rng = derive_rng(config.seed, stream::kFinetune + 100);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const auto plan = batches(dataset.size(), config.batch_size);
  double total = 0.0;
  Tensor cond, tgt;
  for (const auto& idx : plan) {
    gather(dataset, idx, order, cond, tgt, nullptr, nullptr);
    const Tensor fake = g.generate(cond, g_rng);
    total += d_update(d, nullptr, config, w, cond, tgt, fake, derange_rng, false).total;
  }
  return total / static_cast<double>(plan.size());
}

OptimalDiscriminator finetune_optimal_discriminator(const RunArtifacts& run,
                                                    const PairedDataset& dataset,
                                                    int at_epoch, int extra_epochs) {
  if (extra_epochs < 1) throw std::invalid_argument("finetune: extra_epochs must be >= 1");
  const Checkpoint& ck = run.checkpoint(at_epoch);
  const TrainConfig& config = run.config;
  PatchDiscriminator d = load_discriminator(ck.discriminator);
  FrozenGenerator g(load_generator(ck.generator));
  const std::uint64_t hash_before = g.hash();

  const auto eval_rng = [&] { return derive_rng(config.seed, stream::kFinetune + 200); };
  Rng r0 = eval_rng();
  const double before = evaluate_d_objective(config, d, g, dataset, &r0);

  Adam opt(trainable(d.params()), config.lr, config.beta1, config.beta2);
  Rng shuffle_rng = derive_rng(config.seed, stream::kFinetune);
  Rng derange_rng = derive_rng(config.seed, stream::kFinetune + 1);
  Rng dropout_rng = derive_rng(config.seed, stream::kFinetune + 2);
  Rng jitter_rng = derive_rng(config.seed, stream::kFinetune + 3);
  const LossWeights w = config.effective_weights();
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const auto plan = batches(dataset.size(), config.batch_size);
  Tensor cond, tgt;
  for (int e = 0; e < extra_epochs; ++e) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (const auto& idx : plan) {
      gather(dataset, idx, order, cond, tgt, &config, &jitter_rng);
      const Tensor fake = g.generate(cond, &dropout_rng);
      d_update(d, &opt, config, w, cond, tgt, fake, derange_rng, false);
    }
  }

  Rng r1 = eval_rng();
  const double after = evaluate_d_objective(config, d, g, dataset, &r1);
  const std::uint64_t hash_after = g.hash();
  return {FrozenDiscriminator(std::move(d)), std::move(g), before, after, hash_before,
          hash_after};
}

PairedSample jitter_augment(const PairedSample& pair, Rng& rng, int base, int pad) {
  if (pad < 0 || base < 1) throw std::invalid_argument("jitter_augment: bad base/pad");
  if (pad == 0) return pair;
  const int up = base + pad;
  std::uniform_int_distribution<int> offset(0, pad);
  const int ox = offset(rng);
  const int oy = offset(rng);
  auto src = [&](int u) { return std::min(base - 1, (2 * u + 1) * base / (2 * up)); };
  auto apply = [&](const Tensor& t) {
    const Shape& s = t.shape();
    if (!s.spatial()) return t;
    if (s.h != base || s.w != base)
      throw std::invalid_argument("jitter_augment: plane " + s.str() + " is not base x base");
    Tensor out(s);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < base; ++y)
          for (int x = 0; x < base; ++x) out.at(n, c, y, x) = t.at(n, c, src(y + oy), src(x + ox));
    return out;
  };
  return {apply(pair.condition), apply(pair.target), pair.sample_id};
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string ckpt_name(int epoch, char which) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03d.%c.ckpt", epoch, which);
  return buf;
}

}  // namespace

void write_losses_csv(const std::filesystem::path& path, const std::vector<LossRecord>& l) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,epoch";
  for (auto k : kAllPairings) out << ',' << to_string(k);
  out << ",d_total,g_adv,g_l1,lr\n";
  for (const auto& r : l) {
    out << r.step << ',' << r.epoch;
    for (double t : r.d_terms) out << ',' << fmt(t);
    out << ',' << fmt(r.d_total) << ',' << fmt(r.g_adv) << ',' << fmt(r.g_l1) << ','
        << fmt(r.lr) << '\n';
  }
}

void write_metrics_jsonl(const std::filesystem::path& path,
                         const std::vector<MetricRecord>& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : m) out << to_json(r).dump() << '\n';
}

void save_run(const std::filesystem::path& dir, const RunArtifacts& run) {
  std::filesystem::create_directories(dir / "checkpoints");
  json cfg = to_json(run.config);
  std::ofstream(dir / "config.json") << cfg.dump(2) << '\n';
  json meta = {{"task", to_string(run.task)},
               {"n_classes", run.n_classes},
               {"image_size", run.image_size},
               {"steps", run.steps},
               {"epochs", json::array()}};
  for (const auto& [epoch, ck] : run.checkpoints) {
    meta["epochs"].push_back(epoch);
    write_bytes(dir / "checkpoints" / ckpt_name(epoch, 'g'), ck.generator);
    write_bytes(dir / "checkpoints" / ckpt_name(epoch, 'd'), ck.discriminator);
  }
  std::ofstream(dir / "run.json") << meta.dump(2) << '\n';
  write_losses_csv(dir / "losses.csv", run.losses);
  std::ofstream gn(dir / "grad_norms.csv");
  gn << "step,d_mean_abs,g_mean_abs\n";
  for (const auto& r : run.grad_norms)
    gn << r.step << ',' << fmt(r.d_mean_abs) << ',' << fmt(r.g_mean_abs) << '\n';
  write_metrics_jsonl(dir / "metrics.jsonl", run.metrics);
}

RunArtifacts load_run(const std::filesystem::path& dir) {
  auto read_json = [&](const char* name) {
    std::ifstream in(dir / name);
    if (!in) throw std::runtime_error("run directory lacks " + std::string(name));
    return json::parse(in);
  };
  RunArtifacts run;
  run.config = train_config_from_json(read_json("config.json"));
  const json meta = read_json("run.json");
  run.task = parse_task(meta.at("task").get<std::string>());
  run.n_classes = meta.at("n_classes");
  run.image_size = meta.at("image_size");
  run.steps = meta.at("steps");
  for (int epoch : meta.at("epochs"))
    run.checkpoints[epoch] = {epoch, read_bytes(dir / "checkpoints" / ckpt_name(epoch, 'g')),
                              read_bytes(dir / "checkpoints" / ckpt_name(epoch, 'd'))};
  for (const auto& c : read_csv(dir / "losses.csv")) {
    if (c.size() != 10) throw std::runtime_error("malformed losses.csv row");
    LossRecord r;
    r.step = std::stol(c[0]);
    r.epoch = std::stoi(c[1]);
    for (int k = 0; k < 4; ++k) r.d_terms[k] = std::strtod(c[2 + k].c_str(), nullptr);
    r.d_total = std::strtod(c[6].c_str(), nullptr);
    r.g_adv = std::strtod(c[7].c_str(), nullptr);
    r.g_l1 = std::strtod(c[8].c_str(), nullptr);
    r.lr = std::strtod(c[9].c_str(), nullptr);
    run.losses.push_back(r);
  }
  for (const auto& c : read_csv(dir / "grad_norms.csv")) {
    if (c.size() != 3) throw std::runtime_error("malformed grad_norms.csv row");
    run.grad_norms.push_back({std::stol(c[0]), std::strtod(c[1].c_str(), nullptr),
                              std::strtod(c[2].c_str(), nullptr)});
  }
  std::ifstream m(dir / "metrics.jsonl");
  std::string line;
  while (std::getline(m, line))
    if (!line.empty()) run.metrics.push_back(metric_record_from_json(json::parse(line)));
  return run;
}

double tail_mean(const std::vector<double>& values, double fraction) {
  if (values.empty()) throw std::invalid_argument("tail_mean: empty series");
  const auto n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(values.size() * std::clamp(fraction, 0.0, 1.0))));
  return std::accumulate(values.end() - static_cast<long>(n), values.end(), 0.0) /
         static_cast<double>(n);
}

std::vector<double> loss_series(const RunArtifacts& run, PairingKind kind) {
  std::vector<double> v;
  v.reserve(run.losses.size());
  for (const auto& r : run.losses) v.push_back(r.d_terms[index_of(kind)]);
  return v;
}

}  // namespace acgan
