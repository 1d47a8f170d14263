#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "acgan/checkpoint.hpp"
#include "acgan/synthdata.hpp"
#include "acgan/trainer.hpp"

using namespace acgan;
namespace fs = std::filesystem;

namespace {

const PairedDataset& tiny_l2i() {
  static const PairedDataset ds = [] {
    ShapesSceneSpec s;
    s.image_size = 32;
    s.n_classes = 4;
    s.shape_extent_min = 6;
    s.shape_extent_max = 14;
    s.seed = 1;
    return gen_shapes_l2i(s, 24);
  }();
  return ds;
}

TrainConfig tiny_config(Objective o = Objective::AContrarioBCE) {
  TrainConfig c;
  c.objective = o;
  c.epochs = 2;
  c.decay_start_epoch = 1;
  c.batch_size = 4;
  c.g_base_channels = 8;
  c.d_base_channels = 8;
  c.gradnorm_every = 2;
  c.seed = 5;
  return c;
}

void expect_same_run(const RunArtifacts& a, const RunArtifacts& b) {
  ASSERT_EQ(a.losses.size(), b.losses.size());
  for (std::size_t i = 0; i < a.losses.size(); ++i) {
    EXPECT_EQ(a.losses[i].d_terms, b.losses[i].d_terms) << "step " << i;
    EXPECT_EQ(a.losses[i].d_total, b.losses[i].d_total);
    EXPECT_EQ(a.losses[i].g_adv, b.losses[i].g_adv);
    EXPECT_EQ(a.losses[i].g_l1, b.losses[i].g_l1);
  }
  ASSERT_EQ(a.checkpoints.size(), b.checkpoints.size());
  for (const auto& [e, ck] : a.checkpoints) {
    EXPECT_EQ(ck.generator, b.checkpoints.at(e).generator);
    EXPECT_EQ(ck.discriminator, b.checkpoints.at(e).discriminator);
  }
}

PairedSample marker_pair(int size, int mx, int my) {
  PairedSample p{Tensor({1, 2, size, size}, 0.0f), Tensor({1, 3, size, size}, 0.0f), "m"};
  p.condition.at(0, 1, my, mx) = 1.0f;
  for (int c = 0; c < 3; ++c) p.target.at(0, c, my, mx) = 1.0f;
  return p;
}

}  // namespace

TEST(TrainConfig, Validation) {
  auto c = tiny_config();
  EXPECT_NO_THROW(c.validate());
  c.lr = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny_config();
  c.decay_start_epoch = 3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny_config();
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny_config();
  c.disjoint_conditional_sets = true;
  c.batch_size = 6;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(TrainConfig, JsonRoundTrip) {
  auto c = tiny_config(Objective::AContrarioHinge);
  c.weights = LossWeights::no_gen_ac();
  c.jitter = true;
  c.lr = 1.2345678901234e-4;
  const auto back = train_config_from_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.lr, c.lr);
}

TEST(TrainConfig, EffectiveWeights) {
  auto c = tiny_config(Objective::Baseline);
  EXPECT_EQ(c.effective_weights().lambda, (std::array<double, 4>{1, 1, 0, 0}));
  c.objective = Objective::AContrarioBCE;
  EXPECT_EQ(c.effective_weights().lambda, LossWeights::equal().lambda);
}

TEST(LrSchedule, LinearDecayAfterStart) {
  TrainConfig c;
  c.epochs = 10;
  c.decay_start_epoch = 5;
  for (int e = 0; e < 5; ++e) EXPECT_EQ(lr_factor(c, e), 1.0);
  for (int e = 5; e < 10; ++e) EXPECT_NEAR(lr_factor(c, e), 1.0 - (e - 4) / 6.0, 1e-12);
  for (int e = 5; e < 9; ++e) EXPECT_GT(lr_factor(c, e), lr_factor(c, e + 1));
  EXPECT_GT(lr_factor(c, 9), 0.0);
}

TEST(Train, SameSeedIsBitwiseIdentical) {
  const auto a = train(tiny_config(), tiny_l2i());
  const auto b = train(tiny_config(), tiny_l2i());
  expect_same_run(a, b);
  auto other = tiny_config();
  other.seed = 6;
  const auto c = train(other, tiny_l2i());
  EXPECT_NE(a.losses[0].d_total, c.losses[0].d_total);
}

TEST(Train, ZeroAContrarioWeightsReduceToBaseline) {
  auto ac = tiny_config(Objective::AContrarioBCE);
  ac.weights = LossWeights::custom(1, 1, 0, 0);
  expect_same_run(train(ac, tiny_l2i()), train(tiny_config(Objective::Baseline), tiny_l2i()));
}

TEST(Train, CurvesAndCheckpoints) {
  TrainHooks hooks;
  int evals = 0, epochs = 0;
  hooks.on_eval = [&](long step, int epoch, UNetGenerator&, PatchDiscriminator&) {
    ++evals;
    return std::vector<MetricRecord>{{step, epoch, "probe_value", 1.0 * step}};
  };
  hooks.on_epoch = [&](int, const RunArtifacts&) { ++epochs; };
  const auto run = train(tiny_config(Objective::Baseline), tiny_l2i(), hooks);
  EXPECT_EQ(run.steps, 12);  // 24 samples / batch 4, two epochs
  ASSERT_EQ(run.losses.size(), 12u);
  for (std::size_t i = 0; i < run.losses.size(); ++i) {
    EXPECT_EQ(run.losses[i].step, static_cast<long>(i));
    for (double t : run.losses[i].d_terms) EXPECT_TRUE(std::isfinite(t) && t > 0);
  }
  EXPECT_EQ(evals, 2);
  EXPECT_EQ(epochs, 2);
  EXPECT_EQ(run.metrics.size(), 2u);
  EXPECT_EQ(run.checkpoints.size(), 2u);
  EXPECT_EQ(run.last_epoch(), 2);
  EXPECT_THROW(run.checkpoint(3), std::out_of_range);
  ASSERT_EQ(run.grad_norms.size(), 6u);
  for (const auto& g : run.grad_norms) {
    EXPECT_TRUE(std::isfinite(g.d_mean_abs) && g.d_mean_abs > 0);
    EXPECT_TRUE(std::isfinite(g.g_mean_abs) && g.g_mean_abs > 0);
  }
  EXPECT_LT(run.losses.back().lr, run.losses.front().lr);
}

TEST(Train, KeepCheckpointsTrims) {
  auto c = tiny_config();
  c.epochs = 3;
  c.keep_checkpoints = 1;
  const auto run = train(c, tiny_l2i());
  ASSERT_EQ(run.checkpoints.size(), 1u);
  EXPECT_EQ(run.checkpoints.begin()->first, 3);
}

TEST(Train, HingeDisjointJitterAndRatioVariantsRun) {
  auto c = tiny_config(Objective::AContrarioHinge);
  c.epochs = 1;
  c.decay_start_epoch = 1;
  c.jitter = true;
  c.jitter_pad = 4;
  c.d_steps_per_g_step = 2;
  EXPECT_EQ(train(c, tiny_l2i()).steps, 6);
  c.objective = Objective::AContrarioBCE;
  c.disjoint_conditional_sets = true;
  EXPECT_EQ(train(c, tiny_l2i()).steps, 6);
}

TEST(Train, SingleLabelTaskRuns) {
  auto c = tiny_config();
  c.epochs = 1;
  c.decay_start_epoch = 1;
  const auto ds = gen_glyph_single_label(4, 32, 16, 0);
  const auto run = train(c, ds);
  EXPECT_EQ(run.task, Task::SingleLabel2Image);
  EXPECT_EQ(run.steps, 4);
}

TEST(Train, NonFiniteLossAbortsWithSnapshot) {
  PairedDataset ds = tiny_l2i();
  for (auto& s : ds.samples) s.target[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train(tiny_config(), ds);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.snapshot().at("step"), 0);
    EXPECT_TRUE(e.snapshot().contains("d_terms"));
  }
}

TEST(Train, RejectsTinyDatasets) {
  PairedDataset ds = tiny_l2i();
  ds.samples.resize(1);
  EXPECT_THROW(train(tiny_config(), ds), std::invalid_argument);
  ds.samples.clear();
  EXPECT_THROW(train(tiny_config(Objective::Baseline), ds), std::invalid_argument);
}

TEST(Finetune, GeneratorFrozenAndLossDoesNotRise) {
  auto c = tiny_config();
  c.epochs = 1;
  c.decay_start_epoch = 1;
  const auto run = train(c, tiny_l2i());
  const auto opt = finetune_optimal_discriminator(run, tiny_l2i(), 1, 3);
  EXPECT_EQ(opt.generator_hash_before, opt.generator_hash_after);
  EXPECT_EQ(opt.generator.hash(), opt.generator_hash_before);
  EXPECT_EQ(opt.generator.hash(), weights_hash(load_generator(run.checkpoint(1).generator).params()));
  EXPECT_LE(opt.loss_after, opt.loss_before);
  EXPECT_THROW(finetune_optimal_discriminator(run, tiny_l2i(), 4), std::out_of_range);
  // The returned snapshot never moves.
  const auto h = opt.discriminator.hash();
  opt.discriminator.respond(tiny_l2i().samples[0].condition, tiny_l2i().samples[0].target);
  EXPECT_EQ(opt.discriminator.hash(), h);
}

TEST(Jitter, PadZeroIsIdentity) {
  Rng rng(1);
  const auto p = tiny_l2i().samples[0];
  const auto q = jitter_augment(p, rng, 32, 0);
  EXPECT_EQ(q.condition, p.condition);
  EXPECT_EQ(q.target, p.target);
}

TEST(Jitter, MarkerStaysAlignedAcrossConditionAndTarget) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Rng rng(seed);
    const auto q = jitter_augment(marker_pair(64, 20 + seed % 20, 30), rng, 64, 8);
    ASSERT_EQ(q.condition.shape(), (Shape{1, 2, 64, 64}));
    ASSERT_EQ(q.target.shape(), (Shape{1, 3, 64, 64}));
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        for (int c = 0; c < 3; ++c) ASSERT_EQ(q.condition.at(0, 1, y, x), q.target.at(0, c, y, x));
    EXPECT_GT(mean_abs(q.target.values()), 0.0);
  }
}

TEST(Jitter, ClassConditionsPassThrough) {
  Rng rng(2);
  const auto ds = gen_glyph_single_label(3, 32, 3, 0);
  const auto q = jitter_augment(ds.samples[1], rng, 32, 4);
  EXPECT_EQ(q.condition, ds.samples[1].condition);
  EXPECT_EQ(q.target.shape(), ds.samples[1].target.shape());
}

TEST(RunIo, SaveLoadRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "acgan_run_io";
  fs::remove_all(dir);
  TrainHooks hooks;
  hooks.on_eval = [](long step, int epoch, UNetGenerator&, PatchDiscriminator&) {
    return std::vector<MetricRecord>{{step, epoch, "x", 0.1 + step / 3.0}};
  };
  const auto run = train(tiny_config(), tiny_l2i(), hooks);
  save_run(dir, run);
  const auto back = load_run(dir);
  expect_same_run(run, back);
  EXPECT_EQ(back.steps, run.steps);
  EXPECT_EQ(to_json(back.config), to_json(run.config));
  ASSERT_EQ(back.metrics.size(), run.metrics.size());
  for (std::size_t i = 0; i < run.metrics.size(); ++i) EXPECT_EQ(back.metrics[i].value, run.metrics[i].value);
  for (std::size_t i = 0; i < run.losses.size(); ++i) EXPECT_EQ(back.losses[i].lr, run.losses[i].lr);
  ASSERT_EQ(back.grad_norms.size(), run.grad_norms.size());
  EXPECT_EQ(back.grad_norms[0].d_mean_abs, run.grad_norms[0].d_mean_abs);
  fs::remove_all(dir);
}

TEST(TailMean, UsesFinalFraction) {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  EXPECT_EQ(tail_mean(v, 0.1), 94.5);
  EXPECT_EQ(tail_mean({3.0}, 0.1), 3.0);
}
