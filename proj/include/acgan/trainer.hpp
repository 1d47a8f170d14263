#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "acgan/checkpoint.hpp"
#include "acgan/losses.hpp"
#include "acgan/nets.hpp"
#include "acgan/pairing.hpp"

namespace acgan {

enum class Objective { Baseline, AContrarioBCE, AContrarioHinge };
std::string_view to_string(Objective o);
Objective parse_objective(std::string_view s);

/// Independent random streams derived from TrainConfig::seed.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kDerange = 3;
inline constexpr std::uint64_t kDropout = 4;
inline constexpr std::uint64_t kJitter = 5;
inline constexpr std::uint64_t kFinetune = 6;
inline constexpr std::uint64_t kProbe = 7;
}  // namespace stream

struct TrainConfig {
  Objective objective = Objective::AContrarioBCE;
  LossWeights weights = LossWeights::equal();
  double aux_l1_weight = 100.0;
  int epochs = 10;
  int batch_size = 8;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  /// Learning rates fall linearly to zero from this epoch to the end.
  int decay_start_epoch = 5;
  std::uint64_t seed = 0;
  bool jitter = false;
  int jitter_pad = 8;
  bool disjoint_conditional_sets = false;
  int d_steps_per_g_step = 1;
  int gradnorm_every = 100;
  /// Steps between metric hook calls; 0 calls the hook once per epoch.
  int eval_every = 0;
  /// 0 keeps every epoch's checkpoint in memory, k keeps the last k.
  int keep_checkpoints = 0;

  int g_base_channels = 16;
  int d_base_channels = 16;
  int class_embedding = 8;
  float dropout = 0.5f;

  /// The lambdas actually backpropagated: Baseline zeroes lambda3 and lambda4.
  LossWeights effective_weights() const;
  bool uses_acontrario() const { return objective != Objective::Baseline; }
  /// lr > 0, decay_start_epoch <= epochs, batch_size >= 2 (>= 4 and even
  /// with disjoint sets), positive cadences.
  void validate() const;
};

/// Learning-rate multiplier during 0-based `epoch`: 1 before decay_start_epoch,
/// then falling linearly so it would reach 0 one epoch after the last.
double lr_factor(const TrainConfig& c, int epoch);

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Unweighted per-kind discriminator terms of one step plus the generator side.
struct LossRecord {
  long step = 0;
  int epoch = 0;
  std::array<double, 4> d_terms{};
  double d_total = 0.0;
  double g_adv = 0.0;
  double g_l1 = 0.0;
  double lr = 0.0;
};

struct GradNormRecord {
  long step = 0;
  double d_mean_abs = 0.0;
  double g_mean_abs = 0.0;
};

struct MetricRecord {
  long step = 0;
  int epoch = 0;
  std::string name;
  double value = 0.0;
};

nlohmann::json to_json(const MetricRecord& m);
MetricRecord metric_record_from_json(const nlohmann::json& j);

struct Checkpoint {
  int epoch = 0;
  Bytes generator;
  Bytes discriminator;
};

struct RunArtifacts {
  TrainConfig config;
  Task task = Task::Label2Image;
  int n_classes = 0;
  int image_size = 0;
  std::map<int, Checkpoint> checkpoints;  // keyed by completed epoch, 1-based
  std::vector<LossRecord> losses;
  std::vector<GradNormRecord> grad_norms;
  std::vector<MetricRecord> metrics;
  long steps = 0;

  const Checkpoint& checkpoint(int epoch) const;
  int last_epoch() const;
};

/// Raised when a loss stops being finite; `snapshot` holds the offending step.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, nlohmann::json snapshot)
      : std::runtime_error(what), snapshot_(std::move(snapshot)) {}
  const nlohmann::json& snapshot() const { return snapshot_; }

 private:
  nlohmann::json snapshot_;
};

struct TrainHooks {
  /// Called every `eval_every` steps (or at each epoch end) with the live
  /// networks; returned records land in RunArtifacts::metrics.
  std::function<std::vector<MetricRecord>(long step, int epoch, UNetGenerator&,
                                          PatchDiscriminator&)>
      on_eval;
  /// Called after each epoch's checkpoint is taken.
  std::function<void(int epoch, const RunArtifacts&)> on_epoch;
};

UNetGenerator make_generator(const TrainConfig& c, Task task, int n_classes, int size,
                             Rng& rng);
PatchDiscriminator make_discriminator(const TrainConfig& c, Task task, int n_classes,
                                      Rng& rng);

RunArtifacts train(const TrainConfig& config, const PairedDataset& dataset,
                   const TrainHooks& hooks = {});

/// Inference-only view of a discriminator. Weights are never updated.
class FrozenDiscriminator {
 public:
  explicit FrozenDiscriminator(PatchDiscriminator d);
  FieldResponse respond(const Tensor& conditions, const Tensor& targets) const;
  /// Recomputed from the current weights on every call.
  std::uint64_t hash() const;
  const DiscriminatorConfig& config() const { return d_.config(); }

 private:
  mutable PatchDiscriminator d_;
};

/// Inference-only view of a generator. With an rng, dropout and the noise
/// plane stay active; without one the forward pass is deterministic.
class FrozenGenerator {
 public:
  explicit FrozenGenerator(UNetGenerator g);
  Tensor generate(const Tensor& conditions, Rng* rng = nullptr) const;
  std::uint64_t hash() const;
  const GeneratorConfig& config() const { return g_.config(); }

 private:
  mutable UNetGenerator g_;
};

struct OptimalDiscriminator {
  FrozenDiscriminator discriminator;
  FrozenGenerator generator;
  double loss_before = 0.0;
  double loss_after = 0.0;
  std::uint64_t generator_hash_before = 0;
  std::uint64_t generator_hash_after = 0;
};

/**
 * Restores the checkpoint of `at_epoch`, freezes the generator and trains the
 * discriminator alone on the run's own objective for `extra_epochs` passes
 * over `dataset` at the base learning rate. Losses before and after are the
 * objective averaged over one fixed pass.
 */
OptimalDiscriminator finetune_optimal_discriminator(const RunArtifacts& run,
                                                    const PairedDataset& dataset,
                                                    int at_epoch, int extra_epochs = 1);

/// Mean discriminator objective of `run`'s config over the whole dataset with
/// a fixed derangement seed.
double evaluate_d_objective(const TrainConfig& config, PatchDiscriminator& d,
                            const FrozenGenerator& g, const PairedDataset& dataset,
                            Rng* g_rng);

/**
 * Scales the spatial planes of condition and target to base + pad with
 * nearest-neighbour sampling, then crops both back to base at one shared
 * offset. Class-index conditions pass through.
 */
PairedSample jitter_augment(const PairedSample& pair, Rng& rng, int base, int pad);

/// Layout: config.json, losses.csv, grad_norms.csv, metrics.jsonl,
/// checkpoints/epoch_NNN.{g,d}.ckpt, run.json.
void save_run(const std::filesystem::path& dir, const RunArtifacts& run);
RunArtifacts load_run(const std::filesystem::path& dir);

void write_losses_csv(const std::filesystem::path& path, const std::vector<LossRecord>& l);
void write_metrics_jsonl(const std::filesystem::path& path,
                         const std::vector<MetricRecord>& m);

/// Mean of `values` over the trailing fraction of entries (at least one).
double tail_mean(const std::vector<double>& values, double fraction);
/// Per-step series of one pairing kind's monitored term.
std::vector<double> loss_series(const RunArtifacts& run, PairingKind kind);

}  // namespace acgan
