#include "acgan/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace acgan {

std::string_view to_string(WeightStrategy s) {
  switch (s) {
    case WeightStrategy::Equal: return "equal";
    case WeightStrategy::BalancedTrueFake: return "balanced_true_fake";
    case WeightStrategy::NoGenAC: return "no_gen_ac";
    case WeightStrategy::Custom: return "custom";
  }
  return "?";
}

WeightStrategy parse_weight_strategy(std::string_view s) {
  for (auto v : {WeightStrategy::Equal, WeightStrategy::BalancedTrueFake,
                 WeightStrategy::NoGenAC, WeightStrategy::Custom})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown weight strategy '" + std::string(s) +
                              "'");
}

std::string_view to_string(GeneratorMode m) {
  return m == GeneratorMode::NonSaturating ? "non_saturating" : "saturating";
}

GeneratorMode parse_generator_mode(std::string_view s) {
  if (s == "non_saturating") return GeneratorMode::NonSaturating;
  if (s == "saturating") return GeneratorMode::Saturating;
  throw std::invalid_argument("unknown generator mode '" + std::string(s) +
                              "'");
}

LossWeights LossWeights::equal(double value) {
  return {{value, value, value, value}, WeightStrategy::Equal,
          GeneratorMode::NonSaturating};
}

LossWeights LossWeights::balanced_true_fake() {
  return {{1.0, 0.33, 0.33, 0.33}, WeightStrategy::BalancedTrueFake,
          GeneratorMode::NonSaturating};
}

LossWeights LossWeights::no_gen_ac() {
  return {{0.5, 0.5, 0.5, 0.0}, WeightStrategy::NoGenAC,
          GeneratorMode::NonSaturating};
}

LossWeights LossWeights::custom(double l1, double l2, double l3, double l4) {
  LossWeights w{{l1, l2, l3, l4}, WeightStrategy::Custom,
                GeneratorMode::NonSaturating};
  w.validate();
  return w;
}

LossWeights LossWeights::baseline() { return custom(1.0, 1.0, 0.0, 0.0); }

LossWeights LossWeights::from_strategy(WeightStrategy s) {
  switch (s) {
    case WeightStrategy::Equal: return equal();
    case WeightStrategy::BalancedTrueFake: return balanced_true_fake();
    case WeightStrategy::NoGenAC: return no_gen_ac();
    case WeightStrategy::Custom: return equal();
  }
  return equal();
}

void LossWeights::validate() const {
  for (double l : lambda)
    if (!(l >= 0.0) || !std::isfinite(l))
      throw std::invalid_argument("loss weights must be non-negative, got " +
                                  std::to_string(l));
  switch (strategy) {
    case WeightStrategy::Equal:
      if (!(lambda[0] == lambda[1] && lambda[1] == lambda[2] &&
            lambda[2] == lambda[3]))
        throw std::invalid_argument("equal strategy needs identical lambdas");
      break;
    case WeightStrategy::BalancedTrueFake:
      if (lambda != balanced_true_fake().lambda)
        throw std::invalid_argument(
            "balanced_true_fake needs lambda = (1, 0.33, 0.33, 0.33)");
      break;
    case WeightStrategy::NoGenAC:
      if (lambda != no_gen_ac().lambda)
        throw std::invalid_argument(
            "no_gen_ac needs lambda = (0.5, 0.5, 0.5, 0)");
      break;
    case WeightStrategy::Custom: break;
  }
}

double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

DiscriminatorOutputs DiscriminatorOutputs::from_raw(
    std::array<std::vector<double>, 4> raw) {
  DiscriminatorOutputs o;
  for (std::size_t k = 0; k < 4; ++k) {
    for (double s : raw[k])
      if (!std::isfinite(s))
        throw std::invalid_argument("non-finite discriminator score");
    o.prob[k].resize(raw[k].size());
    std::transform(raw[k].begin(), raw[k].end(), o.prob[k].begin(), sigmoid);
  }
  o.raw = std::move(raw);
  return o;
}

DiscriminatorOutputs DiscriminatorOutputs::from_probabilities(
    std::array<std::vector<double>, 4> prob) {
  DiscriminatorOutputs o;
  for (std::size_t k = 0; k < 4; ++k) {
    o.raw[k].resize(prob[k].size());
    for (std::size_t i = 0; i < prob[k].size(); ++i) {
      const double d = std::clamp(prob[k][i], kLogEpsilon, 1.0 - kLogEpsilon);
      o.raw[k][i] = std::log(d / (1.0 - d));
    }
  }
  o.prob = std::move(prob);
  return o;
}

void DensityPair::validate() const {
  if (p.size() != p_g.size() || p.empty())
    throw std::invalid_argument("density pair: lengths differ or empty");
  for (const auto* v : {&p, &p_g}) {
    double total = 0.0;
    for (double x : *v) {
      if (!(x >= 0.0)) throw std::invalid_argument("negative probability");
      total += x;
    }
    if (std::fabs(total - 1.0) > 1e-9)
      throw std::invalid_argument("probabilities do not sum to 1");
  }
}

namespace {

double clamp_prob(double d) {
  return std::clamp(d, kLogEpsilon, 1.0 - kLogEpsilon);
}

void require_nonempty(std::span<const double> v, const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string("empty input: ") + what);
}

double mean_neg_log(std::span<const double> d, bool as_true) {
  double acc = 0.0;
  for (double x : d) {
    const double c = clamp_prob(x);
    acc -= as_true ? std::log(c) : std::log1p(-c);
  }
  return acc / static_cast<double>(d.size());
}

double mean_hinge(std::span<const double> raw, bool as_true) {
  double acc = 0.0;
  for (double s : raw) acc += std::max(0.0, as_true ? 1.0 - s : 1.0 + s);
  return acc / static_cast<double>(raw.size());
}

bool is_true_kind(std::size_t k) {
  return k == index_of(PairingKind::RealConditional);
}

}  // namespace

double loss_d_baseline(std::span<const double> d_real_cond,
                       std::span<const double> d_gen_cond) {
  require_nonempty(d_real_cond, "real-conditional");
  require_nonempty(d_gen_cond, "generated-conditional");
  return mean_neg_log(d_real_cond, true) + mean_neg_log(d_gen_cond, false);
}

double loss_d_acontrario(std::span<const double> d_real_ac,
                         std::span<const double> d_gen_ac) {
  require_nonempty(d_real_ac, "real-a-contrario");
  require_nonempty(d_gen_ac, "generated-a-contrario");
  return mean_neg_log(d_real_ac, false) + mean_neg_log(d_gen_ac, false);
}

double loss_d_combined(const DiscriminatorOutputs& outs, const LossWeights& w) {
  w.validate();
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    require_nonempty(outs.prob[k], "pairing kind missing");
    if (w.lambda[k] == 0.0) continue;
    total += w.lambda[k] * mean_neg_log(outs.prob[k], is_true_kind(k));
  }
  return total;
}

double loss_g_adversarial(std::span<const double> d_gen_cond,
                          GeneratorMode mode) {
  require_nonempty(d_gen_cond, "generated-conditional");
  if (mode == GeneratorMode::NonSaturating)
    return mean_neg_log(d_gen_cond, true);
  return -mean_neg_log(d_gen_cond, false);
}

double loss_d_hinge(const DiscriminatorOutputs& outs, const LossWeights& w) {
  w.validate();
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    if (outs.raw[k].empty())
      throw std::invalid_argument("hinge loss: missing pairing kind " +
                                  std::string(to_string(kAllPairings[k])));
    if (w.lambda[k] == 0.0) continue;
    total += w.lambda[k] * mean_hinge(outs.raw[k], is_true_kind(k));
  }
  return total;
}

double loss_g_hinge(std::span<const double> raw_gen_cond) {
  require_nonempty(raw_gen_cond, "generated-conditional");
  double acc = 0.0;
  for (double s : raw_gen_cond) acc += s;
  return -acc / static_cast<double>(raw_gen_cond.size());
}

double loss_l1(std::span<const float> y_gen, std::span<const float> y_real,
               double weight) {
  return loss_l1_grad(y_gen, y_real, weight).value;
}

std::array<double, 4> bce_terms(const DiscriminatorOutputs& outs) {
  std::array<double, 4> t{};
  for (std::size_t k = 0; k < 4; ++k)
    if (!outs.prob[k].empty()) t[k] = mean_neg_log(outs.prob[k], is_true_kind(k));
  return t;
}

std::array<double, 4> hinge_terms(const DiscriminatorOutputs& outs) {
  std::array<double, 4> t{};
  for (std::size_t k = 0; k < 4; ++k)
    if (!outs.raw[k].empty()) t[k] = mean_hinge(outs.raw[k], is_true_kind(k));
  return t;
}

ScoreGradient bce_term_grad(std::span<const double> raw, bool as_true) {
  require_nonempty(raw, "scores");
  ScoreGradient g;
  g.d_raw.resize(raw.size());
  const double inv_n = 1.0 / static_cast<double>(raw.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double d = sigmoid(raw[i]);
    const double c = clamp_prob(d);
    acc -= as_true ? std::log(c) : std::log1p(-c);
    // Zero slope where the clamp is active.
    const bool clamped = d < kLogEpsilon || d > 1.0 - kLogEpsilon;
    g.d_raw[i] = clamped ? 0.0 : (as_true ? d - 1.0 : d) * inv_n;
  }
  g.value = acc * inv_n;
  return g;
}

namespace {

PairingGradients weighted_bce(const DiscriminatorOutputs& outs,
                              const std::array<double, 4>& lambda,
                              bool require_all) {
  PairingGradients out;
  for (std::size_t k = 0; k < 4; ++k) {
    if (lambda[k] == 0.0 && !require_all) continue;
    if (outs.raw[k].empty())
      throw std::invalid_argument("pairing kind missing: " +
                                  std::string(to_string(kAllPairings[k])));
    out.d_raw[k].assign(outs.raw[k].size(), 0.0);
    if (lambda[k] == 0.0) continue;
    ScoreGradient g = bce_term_grad(outs.raw[k], is_true_kind(k));
    out.value += lambda[k] * g.value;
    for (std::size_t i = 0; i < g.d_raw.size(); ++i)
      out.d_raw[k][i] = lambda[k] * g.d_raw[i];
  }
  return out;
}

}  // namespace

PairingGradients loss_d_baseline_grad(const DiscriminatorOutputs& outs) {
  return weighted_bce(outs, {1.0, 1.0, 0.0, 0.0}, false);
}

PairingGradients loss_d_acontrario_grad(const DiscriminatorOutputs& outs) {
  return weighted_bce(outs, {0.0, 0.0, 1.0, 1.0}, false);
}

PairingGradients loss_d_combined_grad(const DiscriminatorOutputs& outs,
                                      const LossWeights& w) {
  w.validate();
  return weighted_bce(outs, w.lambda, true);
}

PairingGradients loss_d_hinge_grad(const DiscriminatorOutputs& outs,
                                   const LossWeights& w) {
  w.validate();
  PairingGradients out;
  for (std::size_t k = 0; k < 4; ++k) {
    if (outs.raw[k].empty())
      throw std::invalid_argument("hinge loss: missing pairing kind " +
                                  std::string(to_string(kAllPairings[k])));
    const auto& raw = outs.raw[k];
    out.d_raw[k].assign(raw.size(), 0.0);
    if (w.lambda[k] == 0.0) continue;
    const bool as_true = is_true_kind(k);
    const double scale = w.lambda[k] / static_cast<double>(raw.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double margin = as_true ? 1.0 - raw[i] : 1.0 + raw[i];
      if (margin > 0.0) {
        acc += margin;
        out.d_raw[k][i] = as_true ? -scale : scale;
      }
    }
    out.value += w.lambda[k] * acc / static_cast<double>(raw.size());
  }
  return out;
}

ScoreGradient loss_g_adversarial_grad(std::span<const double> raw_gen_cond,
                                      GeneratorMode mode) {
  if (mode == GeneratorMode::NonSaturating)
    return bce_term_grad(raw_gen_cond, true);
  // Saturating: mean log(1 - D), the negated "fake" term.
  ScoreGradient g = bce_term_grad(raw_gen_cond, false);
  g.value = -g.value;
  for (double& d : g.d_raw) d = -d;
  return g;
}

ScoreGradient loss_g_hinge_grad(std::span<const double> raw_gen_cond) {
  require_nonempty(raw_gen_cond, "generated-conditional");
  ScoreGradient g;
  g.value = loss_g_hinge(raw_gen_cond);
  g.d_raw.assign(raw_gen_cond.size(),
                 -1.0 / static_cast<double>(raw_gen_cond.size()));
  return g;
}

L1Gradient loss_l1_grad(std::span<const float> y_gen,
                        std::span<const float> y_real, double weight) {
  if (y_gen.size() != y_real.size())
    throw std::invalid_argument("loss_l1: shape mismatch (" +
                                std::to_string(y_gen.size()) + " vs " +
                                std::to_string(y_real.size()) + ")");
  if (weight < 0.0) throw std::invalid_argument("loss_l1: negative weight");
  L1Gradient g;
  g.d_gen.resize(y_gen.size());
  if (y_gen.empty()) return g;
  const double scale = weight / static_cast<double>(y_gen.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < y_gen.size(); ++i) {
    const double diff = static_cast<double>(y_gen[i]) - y_real[i];
    acc += std::fabs(diff);
    g.d_gen[i] = static_cast<float>(diff > 0 ? scale : (diff < 0 ? -scale : 0.0));
  }
  g.value = weight * acc / static_cast<double>(y_gen.size());
  return g;
}

std::vector<double> optimal_d_value(const DensityPair& dp) {
  dp.validate();
  std::vector<double> d(dp.p.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double den = dp.p[i] + dp.p_g[i];
    d[i] = den > 0.0 ? dp.p[i] / den : 0.5;
  }
  return d;
}

double jensen_shannon(const DensityPair& dp) {
  dp.validate();
  double js = 0.0;
  for (std::size_t i = 0; i < dp.p.size(); ++i) {
    const double m = 0.5 * (dp.p[i] + dp.p_g[i]);
    if (dp.p[i] > 0.0) js += 0.5 * dp.p[i] * std::log(dp.p[i] / m);
    if (dp.p_g[i] > 0.0) js += 0.5 * dp.p_g[i] * std::log(dp.p_g[i] / m);
  }
  return js;
}

double js_game_value(const DensityPair& dp) {
  return -std::log(4.0) + 2.0 * jensen_shannon(dp);
}

double game_value(const DensityPair& dp, std::span<const double> d) {
  dp.validate();
  if (d.size() != dp.p.size())
    throw std::invalid_argument("game_value: discriminator length mismatch");
  double v = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (dp.p[i] > 0.0) v += dp.p[i] * std::log(d[i]);
    if (dp.p_g[i] > 0.0) v += dp.p_g[i] * std::log1p(-d[i]);
  }
  return v;
}

}  // namespace acgan
