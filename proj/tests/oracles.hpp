#pragma once

// Independent reference computations shared by unit tests and the acceptance run.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "acgan/layers.hpp"
#include "acgan/losses.hpp"

namespace oracle {

using acgan::DiscriminatorOutputs;
using acgan::PairingGradients;
using acgan::Rng;

inline double logistic(double s) { return 1.0 / (1.0 + std::exp(-s)); }

/// JSD(p || q) by direct summation, natural log, 0 log 0 = 0.
inline double jsd_brute(const std::vector<double>& p, const std::vector<double>& q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) acc += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0) acc += 0.5 * q[i] * std::log(q[i] / m);
  }
  return acc;
}

/// Raw scores per kind, kept away from hinge kinks at +-1 by at least `gap`.
inline std::array<std::vector<double>, 4> random_raw(Rng& rng, std::size_t n, double spread = 3.0,
                                                     double gap = 1e-2) {
  std::uniform_real_distribution<double> u(-spread, spread);
  std::array<std::vector<double>, 4> raw;
  for (auto& v : raw)
    for (std::size_t i = 0; i < n; ++i) {
      double s;
      do s = u(rng);
      while (std::abs(std::abs(s) - 1.0) < gap);
      v.push_back(s);
    }
  return raw;
}

inline double rel_err(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

/// Largest relative deviation between an analytic gradient over the four raw
/// score vectors and central differences of `f` with step h.
inline double max_rel_error_4(
    const std::array<std::vector<double>, 4>& raw,
    const std::function<double(const std::array<std::vector<double>, 4>&)>& f,
    const std::array<std::vector<double>, 4>& analytic, double h = 1e-4) {
  double worst = 0.0;
  auto x = raw;
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < x[k].size(); ++i) {
      const double keep = x[k][i];
      x[k][i] = keep + h;
      const double up = f(x);
      x[k][i] = keep - h;
      const double down = f(x);
      x[k][i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[k].empty() ? 0.0 : analytic[k][i];
      worst = std::max(worst, rel_err(a, numeric));
    }
  return worst;
}

inline double max_rel_error_1(const std::vector<double>& raw,
                              const std::function<double(const std::vector<double>&)>& f,
                              const std::vector<double>& analytic, double h = 1e-4) {
  double worst = 0.0;
  auto x = raw;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    worst = std::max(worst, rel_err(analytic[i], (up - down) / (2 * h)));
  }
  return worst;
}

/// Probabilities computed here, not through the library.
inline std::array<std::vector<double>, 4> to_prob(const std::array<std::vector<double>, 4>& raw) {
  auto p = raw;
  for (auto& v : p)
    for (auto& s : v) s = logistic(s);
  return p;
}

/// Every gradient-checked objective, evaluated on 100 random batches; returns
/// the worst relative error and the name of the objective where it occurred.
struct GradCheckResult {
  double worst = 0.0;
  std::string where;
};

inline GradCheckResult check_all_loss_gradients(std::uint64_t seed, int batches = 100) {
  using namespace acgan;
  GradCheckResult r;
  auto note = [&](double e, const std::string& name) {
    if (e > r.worst) {
      r.worst = e;
      r.where = name;
    }
  };
  Rng rng(seed);
  const std::vector<std::pair<std::string, LossWeights>> strategies = {
      {"combined/equal", LossWeights::equal()},
      {"combined/balanced", LossWeights::balanced_true_fake()},
      {"combined/no_gen_ac", LossWeights::no_gen_ac()},
      {"combined/custom", LossWeights::custom(0.7, 1.3, 0.2, 2.5)}};
  for (int b = 0; b < batches; ++b) {
    const std::size_t n = 1 + b % 24;
    const auto raw = random_raw(rng, n);
    const auto outs = DiscriminatorOutputs::from_raw(raw);
    using Raw4 = std::array<std::vector<double>, 4>;

    note(max_rel_error_4(
             raw,
             [](const Raw4& x) {
               const auto p = to_prob(x);
               return loss_d_baseline(p[0], p[1]);
             },
             loss_d_baseline_grad(outs).d_raw),
         "baseline");
    note(max_rel_error_4(
             raw,
             [](const Raw4& x) {
               const auto p = to_prob(x);
               return loss_d_acontrario(p[2], p[3]);
             },
             loss_d_acontrario_grad(outs).d_raw),
         "acontrario");
    for (const auto& [name, w] : strategies)
      note(max_rel_error_4(
               raw,
               [&w = w](const Raw4& x) {
                 return loss_d_combined(DiscriminatorOutputs::from_probabilities(to_prob(x)), w);
               },
               loss_d_combined_grad(outs, w).d_raw),
           name);
    note(max_rel_error_4(
             raw, [](const Raw4& x) { return loss_d_hinge(DiscriminatorOutputs::from_raw(x)); },
             loss_d_hinge_grad(outs).d_raw),
         "hinge_d");
    note(max_rel_error_1(
             raw[1], [](const std::vector<double>& x) { return loss_g_hinge(x); },
             loss_g_hinge_grad(raw[1]).d_raw),
         "hinge_g");
    for (auto mode : {GeneratorMode::NonSaturating, GeneratorMode::Saturating})
      note(max_rel_error_1(
               raw[1],
               [mode](const std::vector<double>& x) {
                 std::vector<double> p;
                 for (double s : x) p.push_back(logistic(s));
                 return loss_g_adversarial(p, mode);
               },
               loss_g_adversarial_grad(raw[1], mode).d_raw),
           std::string("g_adversarial/") + std::string(to_string(mode)));
  }
  return r;
}

/// A two-layer discriminator over one-hot outcomes trained to convergence on
/// the exact expected objective E_p[-log D] + E_pg[-log(1 - D)].
struct ToyResult {
  std::vector<double> d;
  double value = 0.0;
};

inline ToyResult train_toy_discriminator(const std::vector<double>& p,
                                         const std::vector<double>& pg, std::uint64_t seed,
                                         int iterations = 6000) {
  using namespace acgan;
  const int m = static_cast<int>(p.size());
  Rng rng(seed);
  Sequential net;
  net.emplace<Linear>(m, 32, rng, InitSpec{0.5});
  net.emplace<Activation>(ActivationKind::LeakyReLU);
  net.emplace<Linear>(32, 1, rng, InitSpec{0.5});
  std::vector<NamedParam> named;
  net.collect("toy", named);
  Adam opt(trainable(named), 0.01, 0.9, 0.999);
  Tensor x({m, m, 1, 1}, 0.0f);
  for (int i = 0; i < m; ++i) x.at(i, i, 0, 0) = 1.0f;
  std::vector<double> d(m);
  for (int it = 0; it < iterations; ++it) {
    opt.zero_grad();
    const Tensor s = net.forward(x, {Mode::Train, nullptr});
    Tensor g(s.shape(), 0.0f);
    for (int i = 0; i < m; ++i) {
      d[i] = logistic(s[i]);
      g[i] = static_cast<float>(-p[i] * (1 - d[i]) + pg[i] * d[i]);
    }
    net.backward(g, true);
    opt.step();
  }
  const Tensor s = net.forward(x, {Mode::Inference, nullptr});
  ToyResult r;
  for (int i = 0; i < m; ++i) {
    r.d.push_back(logistic(s[i]));
    if (p[i] > 0) r.value += p[i] * std::log(r.d[i]);
    if (pg[i] > 0) r.value += pg[i] * std::log(1 - r.d[i]);
  }
  return r;
}

inline std::vector<double> random_distribution(Rng& rng, int m, double floor = 0.02) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(m);
  double total = 0;
  for (auto& x : v) total += (x = floor + u(rng));
  for (auto& x : v) x /= total;
  return v;
}

}  // namespace oracle
