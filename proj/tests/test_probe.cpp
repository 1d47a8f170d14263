#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "acgan/probe.hpp"
#include "acgan/synthdata.hpp"

using namespace acgan;
namespace fs = std::filesystem;

namespace {

ShapesSceneSpec small_spec() {
  ShapesSceneSpec s;
  s.image_size = 32;
  s.n_classes = 4;
  s.shape_extent_min = 6;
  s.shape_extent_max = 14;
  s.seed = 2;
  return s;
}

const PairedDataset& l2i() {
  static const PairedDataset ds = gen_shapes_l2i(small_spec(), 40);
  return ds;
}

PatchDiscriminator random_d(std::uint64_t seed) {
  Rng rng(seed);
  return build_discriminator(patchgan70_spec(4), Fusion::EarlyConcat, 4, 3, rng);
}

FrozenDiscriminator constant_d(float c) {
  auto d = random_d(1);
  for (auto& np : d.params()) np.param->value.fill(0.0f);
  d.params().back().param->value.fill(c);
  return FrozenDiscriminator(std::move(d));
}

FrozenGenerator small_g() {
  Rng rng(3);
  return FrozenGenerator(build_generator(Task::Label2Image, 32, rng, {.n_classes = 4, .base_channels = 4}));
}

ResponseMap gaussian_samples(double mean_a, double mean_b, std::size_t n) {
  Rng rng(4);
  std::normal_distribution<double> a(mean_a, 1.0), b(mean_b, 1.0);
  ResponseMap m;
  for (std::size_t i = 0; i < n; ++i) {
    m[PairingKind::RealConditional].values.push_back(a(rng));
    m[PairingKind::RealAContrario].values.push_back(b(rng));
  }
  m[PairingKind::RealConditional].kind = PairingKind::RealConditional;
  m[PairingKind::RealAContrario].kind = PairingKind::RealAContrario;
  return m;
}

}  // namespace

TEST(Collect, CountsPerKind) {
  const FrozenDiscriminator d(random_d(2));
  const auto g = small_g();
  Rng rng(1);
  const auto m = collect_responses(d, l2i(), g, kAllPairings, 33, rng, "unit");
  ASSERT_EQ(m.size(), 4u);
  for (const auto& [k, s] : m) {
    EXPECT_EQ(s.values.size(), 33u * 2 * 2);  // 32 px input gives a 2x2 grid
    EXPECT_EQ(s.n_samples, 33u);
    EXPECT_EQ(s.grid_h * s.grid_w, 4);
    EXPECT_EQ(s.source, "unit");
    for (double v : s.values) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(Collect, ConstantDiscriminatorGivesConstantValues) {
  const auto d = constant_d(-0.3f);
  const auto g = small_g();
  Rng rng(1);
  const auto m = collect_responses(d, l2i(), g, kAllPairings, 10, rng);
  for (const auto& [k, s] : m)
    for (double v : s.values) EXPECT_FLOAT_EQ(static_cast<float>(v), -0.3f);
  for (const auto& [k, r] : classification_rates(m)) EXPECT_EQ(r, 0.0);
}

TEST(Collect, Errors) {
  const auto d = constant_d(0.1f);
  const auto g = small_g();
  Rng rng(1);
  EXPECT_THROW(collect_responses(d, l2i(), g, std::span<const PairingKind>{}, 10, rng), std::invalid_argument);
  EXPECT_THROW(collect_responses(d, l2i(), g, kAllPairings, 41, rng), std::invalid_argument);
}

TEST(Collect, SubsetOfKindsAndDeterminism) {
  const FrozenDiscriminator d(random_d(5));
  const auto g = small_g();
  const std::array<PairingKind, 2> two{PairingKind::RealConditional, PairingKind::RealAContrario};
  Rng a(7), b(7);
  const auto ma = collect_responses(d, l2i(), g, two, 12, a);
  const auto mb = collect_responses(d, l2i(), g, two, 12, b);
  ASSERT_EQ(ma.size(), 2u);
  EXPECT_EQ(ma.at(PairingKind::RealAContrario).values, mb.at(PairingKind::RealAContrario).values);
}

TEST(Rates, RawThresholdMatchesSigmoidHalf) {
  const FrozenDiscriminator d(random_d(6));
  const auto g = small_g();
  Rng rng(2);
  const auto m = collect_responses(d, l2i(), g, kAllPairings, 20, rng);
  const auto rates = classification_rates(m, 0.0);
  for (const auto& [k, s] : m) {
    std::size_t above = 0;
    for (double v : s.values) above += 1.0 / (1.0 + std::exp(-v)) > 0.5;
    EXPECT_EQ(rates.at(k), static_cast<double>(above) / s.values.size());
  }
  ResponseMap pos;
  pos[PairingKind::RealConditional].values = {0.1, 3.0, 1e-9};
  EXPECT_EQ(classification_rates(pos).at(PairingKind::RealConditional), 1.0);
}

TEST(Histogram, CountsSumAndEdgesIncrease) {
  const auto m = gaussian_samples(-1, 2, 1000);
  const auto r = histogram_report(m, 50);
  ASSERT_EQ(r.edges.size(), 51u);
  for (std::size_t i = 1; i < r.edges.size(); ++i) EXPECT_GT(r.edges[i], r.edges[i - 1]);
  for (const auto& [k, h] : r.kinds) {
    std::uint64_t total = 0;
    for (auto c : h.counts) total += c;
    EXPECT_EQ(total, m.at(k).values.size());
    EXPECT_EQ(h.n, m.at(k).values.size());
  }
}

TEST(Histogram, SeparatedGaussiansHaveDistinctModes) {
  const auto r = histogram_report(gaussian_samples(-6, 6, 2000), 100);
  auto mode = [](const KindHistogram& h) {
    return std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin();
  };
  const auto& a = r.kinds.at(PairingKind::RealConditional);
  const auto& b = r.kinds.at(PairingKind::RealAContrario);
  EXPECT_LT(mode(a), mode(b));
  EXPECT_EQ(b.counts[mode(a)], 0u);
  EXPECT_EQ(a.counts[mode(b)], 0u);
  EXPECT_NEAR(a.mean, -6, 0.1);
  EXPECT_NEAR(r.separation.at({PairingKind::RealAContrario, PairingKind::RealConditional}), 12.0, 0.5);
}

TEST(Histogram, IdenticalSamplesGiveIdenticalHistograms) {
  auto m = gaussian_samples(0, 0, 500);
  m[PairingKind::RealAContrario].values = m[PairingKind::RealConditional].values;
  const auto r = histogram_report(m);
  EXPECT_EQ(r.kinds.at(PairingKind::RealConditional).counts, r.kinds.at(PairingKind::RealAContrario).counts);
  EXPECT_EQ(r.separation.at({PairingKind::RealConditional, PairingKind::RealAContrario}), 0.0);
}

TEST(Histogram, ConstantInputFallsBackToOneBin) {
  ResponseMap m;
  m[PairingKind::GeneratedConditional].values.assign(30, 0.25);
  const auto r = histogram_report(m);
  ASSERT_EQ(r.edges.size(), 2u);
  EXPECT_EQ(r.kinds.at(PairingKind::GeneratedConditional).counts[0], 30u);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_THROW(histogram_report(m, 9), std::invalid_argument);
}

TEST(Histogram, PureFunctionOfSamples) {
  const auto m = gaussian_samples(0.5, -0.5, 300);
  EXPECT_EQ(to_json(histogram_report(m)).dump(), to_json(histogram_report(m)).dump());
}

TEST(Histogram, CsvLayout) {
  const auto r = histogram_report(gaussian_samples(0, 1, 100), 10);
  const fs::path p = fs::temp_directory_path() / "acgan_hist.csv";
  write_histogram_csv(p, r);
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "bin_lo,bin_hi,real_conditional,real_acontrario");
  int rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  EXPECT_EQ(rows, 10);
  fs::remove(p);
}

TEST(ModeSeparation, Formula) {
  KindHistogram a, b;
  a.mean = 3;
  a.stddev = 1;
  b.mean = 1;
  b.stddev = std::sqrt(7.0);
  EXPECT_NEAR(mode_separation(a, b), 2.0 / 2.0, 1e-12);
  a.stddev = b.stddev = 0;
  EXPECT_EQ(mode_separation(a, b), std::numeric_limits<double>::infinity());
}

TEST(ConstantProbe, UniformClassOnAllClassDatasetEqualsRealConditionalRate) {
  PairedDataset ds = l2i();
  const Tensor uniform2 = constant_condition(ConstantCondition::uniform(2), ds.samples[0].condition, 4);
  for (auto& s : ds.samples) s.condition = uniform2;
  const FrozenDiscriminator d(random_d(8));
  const auto g = small_g();
  Rng rng(0);
  const std::array<PairingKind, 1> rc{PairingKind::RealConditional};
  const double rate = classification_rates(collect_responses(d, ds, g, rc, 25, rng)).at(PairingKind::RealConditional);
  EXPECT_EQ(constant_condition_probe(d, ds, ConstantCondition::uniform(2), 25), rate);
}

TEST(ConstantProbe, ConditionsAndErrors) {
  const Tensor like = l2i().samples[0].condition;
  const Tensor u = constant_condition(ConstantCondition::uniform(1), like, 4);
  EXPECT_EQ(u.shape(), like.shape());
  EXPECT_EQ(argmax_channels(u), std::vector<int>(32 * 32, 1));
  const Tensor e = constant_condition(ConstantCondition::empty(), like, 4);
  EXPECT_EQ(argmax_channels(e), std::vector<int>(32 * 32, 0));
  EXPECT_EQ(e, constant_condition(ConstantCondition::uniform(0), like, 4));
  const Tensor z = constant_condition(ConstantCondition::zero(), like, 4);
  EXPECT_EQ(mean_abs(z.values()), 0.0);
  EXPECT_THROW(constant_condition(ConstantCondition::uniform(4), like, 4), std::invalid_argument);
  EXPECT_EQ(ConstantCondition::uniform(3).name(), "uniform_class_3");
  EXPECT_EQ(ConstantCondition::empty().name(), "empty");
  EXPECT_EQ(ConstantCondition::zero().name(), "zero");

  auto depth_spec = small_spec();
  const auto depth = gen_shapes_depth(depth_spec, 4);
  const auto d = constant_d(1.0f);
  EXPECT_THROW(constant_condition_probe(d, depth, ConstantCondition::empty(), 2), std::invalid_argument);
  EXPECT_EQ(constant_condition_probe(d, l2i(), ConstantCondition::empty(), 5), 1.0);
}

TEST(ConstantProbe, SingleLabelConditions) {
  const auto ds = gen_glyph_single_label(5, 32, 10, 0);
  const Tensor u = constant_condition(ConstantCondition::uniform(3), ds.samples[0].condition, 5);
  EXPECT_EQ(class_of(u), 3);
  const Tensor e = constant_condition(ConstantCondition::empty(), ds.samples[0].condition, 5);
  EXPECT_EQ(mean_abs(e.values()), 0.0);
}
