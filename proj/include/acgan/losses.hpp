#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "acgan/pairing.hpp"

namespace acgan {

/// Probabilities are clamped to [eps, 1 - eps] before every log.
inline constexpr double kLogEpsilon = 1e-7;

enum class WeightStrategy { Equal, BalancedTrueFake, NoGenAC, Custom };
enum class GeneratorMode { NonSaturating, Saturating };

std::string_view to_string(WeightStrategy s);
WeightStrategy parse_weight_strategy(std::string_view s);
std::string_view to_string(GeneratorMode m);
GeneratorMode parse_generator_mode(std::string_view s);

/**
 * Per-term weights of the discriminator objective, indexed by PairingKind:
 * lambda[0] on the real-conditional "true" term, lambda[1..3] on the
 * generated-conditional, real-a-contrario and generated-a-contrario "fake"
 * terms.
 */
struct LossWeights {
  std::array<double, 4> lambda{1.0, 1.0, 1.0, 1.0};
  WeightStrategy strategy = WeightStrategy::Equal;
  GeneratorMode g_mode = GeneratorMode::NonSaturating;

  static LossWeights equal(double value = 1.0);
  /// One true term against three fake terms weighted 0.33 each.
  static LossWeights balanced_true_fake();
  /// Drops the generated-a-contrario term, the other three at 0.5.
  static LossWeights no_gen_ac();
  static LossWeights custom(double l1, double l2, double l3, double l4);
  /// lambda = (1, 1, 0, 0): the classic conditional objective.
  static LossWeights baseline();
  /// Strategy presets with their canonical lambdas.
  static LossWeights from_strategy(WeightStrategy s);

  double operator[](PairingKind k) const { return lambda[index_of(k)]; }
  /// Throws on negative lambdas or a preset whose lambdas were edited.
  void validate() const;
};

double sigmoid(double s);

/// Raw last-layer scores f(x, y) per pairing kind and D = sigmoid(f).
struct DiscriminatorOutputs {
  std::array<std::vector<double>, 4> raw;
  std::array<std::vector<double>, 4> prob;

  static DiscriminatorOutputs from_raw(std::array<std::vector<double>, 4> raw);
  static DiscriminatorOutputs from_probabilities(
      std::array<std::vector<double>, 4> prob);

  bool has(PairingKind k) const { return !raw[index_of(k)].empty(); }
  std::span<const double> raw_of(PairingKind k) const { return raw[index_of(k)]; }
  std::span<const double> prob_of(PairingKind k) const {
    return prob[index_of(k)];
  }
};

/// Two discrete distributions over the same finite outcome set.
struct DensityPair {
  std::vector<double> p;
  std::vector<double> p_g;

  /// Non-negative, equal length, each summing to 1 within 1e-9.
  void validate() const;
};

// Scalar objectives. Reductions are means over every batch and patch element.

double loss_d_baseline(std::span<const double> d_real_cond,
                       std::span<const double> d_gen_cond);
double loss_d_acontrario(std::span<const double> d_real_ac,
                         std::span<const double> d_gen_ac);
double loss_d_combined(const DiscriminatorOutputs& outs, const LossWeights& w);
double loss_g_adversarial(std::span<const double> d_gen_cond, GeneratorMode mode);
/// Hinge discriminator loss on raw scores; lambdas default to one each.
double loss_d_hinge(const DiscriminatorOutputs& outs,
                    const LossWeights& w = LossWeights::equal());
double loss_g_hinge(std::span<const double> raw_gen_cond);
double loss_l1(std::span<const float> y_gen, std::span<const float> y_real,
               double weight);

/// Unweighted per-kind BCE terms: -mean log D for real-conditional,
/// -mean log(1 - D) for the others. Missing kinds report 0.
std::array<double, 4> bce_terms(const DiscriminatorOutputs& outs);
/// Unweighted per-kind hinge terms.
std::array<double, 4> hinge_terms(const DiscriminatorOutputs& outs);

// Values with gradients with respect to the raw scores.

struct ScoreGradient {
  double value = 0.0;
  std::vector<double> d_raw;
};

struct PairingGradients {
  double value = 0.0;
  std::array<std::vector<double>, 4> d_raw;
};

/// -mean log D(s) when `as_true`, else -mean log(1 - D(s)).
ScoreGradient bce_term_grad(std::span<const double> raw, bool as_true);
PairingGradients loss_d_baseline_grad(const DiscriminatorOutputs& outs);
PairingGradients loss_d_acontrario_grad(const DiscriminatorOutputs& outs);
PairingGradients loss_d_combined_grad(const DiscriminatorOutputs& outs,
                                      const LossWeights& w);
PairingGradients loss_d_hinge_grad(const DiscriminatorOutputs& outs,
                                   const LossWeights& w = LossWeights::equal());
ScoreGradient loss_g_adversarial_grad(std::span<const double> raw_gen_cond,
                                      GeneratorMode mode);
ScoreGradient loss_g_hinge_grad(std::span<const double> raw_gen_cond);

struct L1Gradient {
  double value = 0.0;
  std::vector<float> d_gen;
};
L1Gradient loss_l1_grad(std::span<const float> y_gen,
                        std::span<const float> y_real, double weight);

// Closed-form optimal discriminator.

/// D*[i] = p[i] / (p[i] + p_g[i]); 1 where only p is positive, 0.5 where both vanish.
std::vector<double> optimal_d_value(const DensityPair& dp);
/// -ln 4 + 2 JSD(p_g || p), natural log.
double js_game_value(const DensityPair& dp);
/// E_p[log D] + E_{p_g}[log(1 - D)] with 0 log 0 = 0.
double game_value(const DensityPair& dp, std::span<const double> d);
double jensen_shannon(const DensityPair& dp);

}  // namespace acgan
