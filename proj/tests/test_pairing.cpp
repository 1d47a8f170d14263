#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "acgan/pairing.hpp"

using namespace acgan;

namespace {

PairedSample scalar_pair(float x, float y, std::string id) {
  return {Tensor({1, 1, 2, 2}, x), Tensor({1, 3, 2, 2}, y), std::move(id)};
}

std::vector<PairedSample> batch_of(std::size_t n) {
  std::vector<PairedSample> b;
  for (std::size_t i = 0; i < n; ++i)
    b.push_back(scalar_pair(static_cast<float>(i), 100.0f + i, "p" + std::to_string(i)));
  return b;
}

}  // namespace

TEST(Derange, SingleElementHasNoDerangement) {
  Rng rng(1);
  EXPECT_THROW(derange_indices(1, rng), std::invalid_argument);
  EXPECT_THROW(derange_indices(0, rng), std::invalid_argument);
}

TEST(Derange, TwoElementsSwap) {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(derange_indices(2, rng), (std::vector<std::size_t>{1, 0}));
}

TEST(Derange, ThreeElementsHitOnlyTheTwoDerangements) {
  // Brute force: of the six permutations of three, keep those without fixed points.
  std::set<std::vector<std::size_t>> derangements;
  std::vector<std::size_t> p{0, 1, 2};
  do {
    bool fixed = false;
    for (std::size_t i = 0; i < 3; ++i) fixed |= p[i] == i;
    if (!fixed) derangements.insert(p);
  } while (std::next_permutation(p.begin(), p.end()));
  ASSERT_EQ(derangements.size(), 2u);

  Rng rng(9);
  std::set<std::vector<std::size_t>> seen;
  for (int i = 0; i < 200; ++i) {
    auto d = derange_indices(3, rng);
    EXPECT_TRUE(derangements.count(d));
    seen.insert(d);
  }
  EXPECT_EQ(seen, derangements);
}

TEST(Derange, NoFixedPointsAcrossSizes) {
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    Rng rng = derive_rng(seed, 3);
    const std::size_t n = 2 + seed % 63;
    const auto p = derange_indices(n, rng);
    ASSERT_EQ(p.size(), n);
    std::vector<std::size_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_NE(p[i], i);
      ASSERT_EQ(sorted[i], i);
    }
  }
}

TEST(Derange, SameSeedSamePermutation) {
  Rng a = derive_rng(42, 3), b = derive_rng(42, 3);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(derange_indices(17, a), derange_indices(17, b));
}

TEST(AContrario, ThreeElementBatch) {
  Rng rng(3);
  const auto batch = batch_of(3);
  const auto ac = make_acontrario_batch(batch, rng);
  ASSERT_EQ(ac.pairs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ac.pairs[i].target, batch[i].target);
    EXPECT_EQ(ac.pairs[i].condition, batch[ac.permutation[i]].condition);
    EXPECT_NE(ac.permutation[i], i);
    EXPECT_FALSE(ac.content_collision[i]);
  }
}

TEST(AContrario, TwoElementBatchSwapsConditions) {
  Rng rng(3);
  const auto batch = batch_of(2);
  const auto ac = make_acontrario_batch(batch, rng);
  EXPECT_EQ(ac.pairs[0].condition, batch[1].condition);
  EXPECT_EQ(ac.pairs[1].condition, batch[0].condition);
  EXPECT_EQ(ac.pairs[0].target, batch[0].target);
}

TEST(AContrario, SingleElementBatchThrows) {
  Rng rng(3);
  const auto batch = batch_of(1);
  EXPECT_THROW(make_acontrario_batch(batch, rng), std::invalid_argument);
}

TEST(AContrario, DuplicateConditionsAreFlagged) {
  std::vector<PairedSample> batch{scalar_pair(7, 1, "a0"), scalar_pair(7, 2, "a1"),
                                  scalar_pair(9, 3, "b")};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto ac = make_acontrario_batch(batch, rng);
    for (std::size_t i = 0; i < 3; ++i) {
      const bool equal = ac.pairs[i].condition == batch[i].condition;
      EXPECT_EQ(ac.content_collision[i], equal);
      EXPECT_NE(ac.permutation[i], i);
    }
  }
}

TEST(AContrario, ConditionMultisetConserved) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto batch = batch_of(2 + seed % 30);
    const auto ac = make_acontrario_batch(batch, rng);
    std::multiset<float> before, after;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      before.insert(batch[i].condition[0]);
      after.insert(ac.pairs[i].condition[0]);
    }
    EXPECT_EQ(before, after);
  }
}

TEST(Assemble, FourKindsShareOneDerangement) {
  Rng rng(11);
  const auto batch = batch_of(5);
  std::vector<Tensor> gen;
  for (int i = 0; i < 5; ++i) gen.emplace_back(Shape{1, 3, 2, 2}, -1.0f - i);
  const auto fp = assemble_pairings(batch, stack(gen), rng);
  ASSERT_EQ(fp.batch(), 5);
  for (auto k : kAllPairings) EXPECT_EQ(fp[k].batch(), 5);
  EXPECT_EQ(fp[PairingKind::RealAContrario].conditions,
            fp[PairingKind::GeneratedAContrario].conditions);
  EXPECT_EQ(fp[PairingKind::RealConditional].targets, fp[PairingKind::RealAContrario].targets);
  EXPECT_EQ(fp[PairingKind::GeneratedConditional].targets,
            fp[PairingKind::GeneratedAContrario].targets);
  for (int i = 0; i < 5; ++i)
    EXPECT_EQ(fp[PairingKind::RealAContrario].conditions.sample(i)[0],
              static_cast<float>(fp.permutation[i]));
}

TEST(Assemble, TwoElementBatchSwapsAContrarioConditions) {
  Rng rng(0);
  const auto batch = batch_of(2);
  const Tensor gen(Shape{2, 3, 2, 2}, 0.5f);
  const auto fp = assemble_pairings(batch, gen, rng);
  EXPECT_EQ(fp[PairingKind::RealAContrario].conditions.sample(0)[0], 1.0f);
  EXPECT_EQ(fp[PairingKind::RealAContrario].conditions.sample(1)[0], 0.0f);
}

TEST(Assemble, IdentityGeneratorMatchesRealPairs) {
  Rng rng(2);
  const auto batch = batch_of(4);
  std::vector<Tensor> ys;
  for (const auto& s : batch) ys.push_back(s.target);
  const auto fp = assemble_pairings(batch, stack(ys), rng);
  EXPECT_EQ(fp[PairingKind::GeneratedConditional].targets, fp[PairingKind::RealConditional].targets);
  EXPECT_EQ(fp[PairingKind::GeneratedConditional].conditions,
            fp[PairingKind::RealConditional].conditions);
}

TEST(Assemble, MisalignedGeneratedTargetsThrow) {
  Rng rng(2);
  const auto batch = batch_of(4);
  EXPECT_THROW(assemble_pairings(batch, Tensor(Shape{3, 3, 2, 2}), rng), std::invalid_argument);
}

TEST(Assemble, DisjointConditionalSetsSplitTheBatch) {
  Rng rng(2);
  const auto batch = batch_of(6);
  const auto fp = assemble_pairings(batch, Tensor(Shape{6, 3, 2, 2}, 0.0f), rng,
                                    PairingOptions{true});
  EXPECT_EQ(fp[PairingKind::RealConditional].batch(), 3);
  EXPECT_EQ(fp[PairingKind::GeneratedConditional].batch(), 3);
  std::set<float> real, gen;
  for (int i = 0; i < 3; ++i) {
    real.insert(fp[PairingKind::RealConditional].conditions.sample(i)[0]);
    gen.insert(fp[PairingKind::GeneratedConditional].conditions.sample(i)[0]);
  }
  for (float v : real) EXPECT_FALSE(gen.count(v));
}

TEST(Dataset, ValidateRejectsDuplicateIdsAndPlaneMismatch) {
  PairedDataset ds;
  ds.samples = batch_of(3);
  EXPECT_NO_THROW(ds.validate());
  ds.samples[2].sample_id = "p0";
  EXPECT_THROW(ds.validate(), std::invalid_argument);
  ds.samples = batch_of(2);
  ds.samples[1].target = Tensor({1, 3, 4, 4});
  EXPECT_THROW(ds.validate(), std::invalid_argument);
}

TEST(PairingKindNames, RoundTrip) {
  for (auto k : kAllPairings) EXPECT_EQ(parse_pairing_kind(to_string(k)), k);
  for (auto t : {Task::Label2Image, Task::Image2Depth, Task::Image2Label, Task::SingleLabel2Image})
    EXPECT_EQ(parse_task(to_string(t)), t);
}
