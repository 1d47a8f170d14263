#include "acgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

namespace acgan {

using nlohmann::json;

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

void ConfusionMatrix::accumulate(const ConfusionMatrix& o) {
  if (o.n_classes != n_classes) throw std::invalid_argument("confusion matrix size mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
}

ConfusionMatrix confusion_matrix(std::span<const int> pred, std::span<const int> gt,
                                 int n_classes) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("confusion_matrix: shape mismatch");
  if (n_classes < 1) throw std::invalid_argument("confusion_matrix: n_classes < 1");
  ConfusionMatrix m{n_classes, std::vector<std::uint64_t>(
                                   static_cast<std::size_t>(n_classes) * n_classes, 0)};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= n_classes || gt[i] < 0 || gt[i] >= n_classes)
      throw std::invalid_argument("confusion_matrix: label out of range");
    ++m.counts[static_cast<std::size_t>(gt[i]) * n_classes + pred[i]];
  }
  return m;
}

SegScores seg_scores(const ConfusionMatrix& conf) {
  const int c = conf.n_classes;
  const double total = static_cast<double>(conf.total());
  if (total == 0) throw std::invalid_argument("seg_scores: empty confusion matrix");
  SegScores s;
  s.per_class_iou.assign(c, std::numeric_limits<double>::quiet_NaN());
  double trace = 0, acc_sum = 0, iou_sum = 0, fw = 0;
  int present = 0;
  for (int k = 0; k < c; ++k) {
    double gt_k = 0, pred_k = 0;
    for (int j = 0; j < c; ++j) {
      gt_k += static_cast<double>(conf.at(k, j));
      pred_k += static_cast<double>(conf.at(j, k));
    }
    const double tp = static_cast<double>(conf.at(k, k));
    trace += tp;
    const double uni = gt_k + pred_k - tp;
    if (uni > 0) s.per_class_iou[k] = tp / uni;
    if (gt_k > 0) {
      ++present;
      acc_sum += tp / gt_k;
      iou_sum += s.per_class_iou[k];
      fw += gt_k / total * s.per_class_iou[k];
    }
  }
  s.pixel_accuracy = trace / total;
  s.mean_accuracy = acc_sum / present;
  s.mean_iou = iou_sum / present;
  s.freq_weighted_accuracy = fw;
  return s;
}

DepthScores depth_scores(std::span<const float> pred, std::span<const float> gt) {
  if (pred.size() != gt.size() || pred.empty())
    throw std::invalid_argument("depth_scores: shape mismatch or empty input");
  DepthScores s;
  double sq = 0, sum_d = 0, l10 = 0, rel = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double p = pred[i];
    double g = std::max<double>(gt[i], kDepthEpsilon);
    if (!(gt[i] > 0)) throw std::invalid_argument("depth_scores: non-positive ground truth");
    if (!(p >= kDepthEpsilon)) {
      p = kDepthEpsilon;
      ++s.clamped;
    }
    const double d = std::log(p) - std::log(g);
    sq += d * d;
    sum_d += d;
    l10 += std::abs(std::log10(p) - std::log10(g));
    rel += std::abs(p - g) / g;
  }
  const double n = static_cast<double>(pred.size());
  s.rmse_log = std::sqrt(sq / n);
  const double var = sq / n - (sum_d / n) * (sum_d / n);
  s.silog = 100.0 * std::sqrt(std::max(0.0, var));
  s.log10 = l10 / n;
  s.abs_rel = rel / n;
  return s;
}

LabelAccuracy label_accuracy(const ImageClassifier& classifier,
                             const Tensor& generated_images,
                             std::span<const int> intended_labels) {
  if (static_cast<std::size_t>(generated_images.shape().n) != intended_labels.size())
    throw std::invalid_argument("label_accuracy: image/label count mismatch");
  for (int l : intended_labels)
    if (l < 0 || l >= classifier.n_classes())
      throw std::invalid_argument("label_accuracy: label outside the classifier's classes");
  LabelAccuracy r;
  r.n = intended_labels.size();
  r.classifier_heldout_accuracy = classifier.heldout_accuracy();
  if (r.n == 0) return r;
  const auto pred = classifier.predict(generated_images);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < r.n; ++i) hit += pred[i] == intended_labels[i];
  r.accuracy = static_cast<double>(hit) / static_cast<double>(r.n);
  return r;
}

SampleMatrix to_samples(const Tensor& batch, int patch) {
  const Shape& s = batch.shape();
  SampleMatrix out;
  if (patch <= 0) {
    for (int n = 0; n < s.n; ++n)
      out.emplace_back(batch.sample(n), batch.sample(n) + s.sample_size());
    return out;
  }
  if (s.h % patch != 0 || s.w % patch != 0)
    throw std::invalid_argument("to_samples: patch size does not tile the image");
  for (int n = 0; n < s.n; ++n)
    for (int py = 0; py < s.h; py += patch)
      for (int px = 0; px < s.w; px += patch) {
        std::vector<double> v;
        v.reserve(static_cast<std::size_t>(s.c) * patch * patch);
        for (int c = 0; c < s.c; ++c)
          for (int y = 0; y < patch; ++y)
            for (int x = 0; x < patch; ++x) v.push_back(batch.at(n, c, py + y, px + x));
        out.push_back(std::move(v));
      }
  return out;
}

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Mat to_matrix(const SampleMatrix& x) {
  if (x.empty()) throw std::invalid_argument("empty sample set");
  const std::size_t d = x[0].size();
  Mat m(x.size(), d);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != d) throw std::invalid_argument("ragged sample set");
    for (std::size_t j = 0; j < d; ++j) m(i, j) = x[i][j];
  }
  return m;
}

// Squared distances [n, k].
Mat sq_distances(const Mat& x, const Mat& c) {
  Eigen::VectorXd xn = x.rowwise().squaredNorm();
  Eigen::VectorXd cn = c.rowwise().squaredNorm();
  Mat d = -2.0 * x * c.transpose();
  d.colwise() += xn;
  d.rowwise() += cn.transpose();
  return d.cwiseMax(0.0);
}

std::vector<int> nearest(const Mat& d) {
  std::vector<int> a(d.rows());
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    Eigen::Index j;
    d.row(i).minCoeff(&j);
    a[i] = static_cast<int>(j);
  }
  return a;
}

Mat plus_plus_seed(const Mat& x, int k, Rng& rng) {
  const auto n = x.rows();
  Mat c(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  c.row(0) = x.row(pick(rng));
  Eigen::VectorXd best = (x.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < k; ++j) {
    const double total = best.sum();
    Eigen::Index chosen = 0;
    if (total <= 0) {
      chosen = pick(rng);
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (chosen = 0; chosen < n - 1; ++chosen) {
        r -= best[chosen];
        if (r <= 0) break;
      }
    }
    c.row(j) = x.row(chosen);
    best = best.cwiseMin((x.rowwise() - c.row(j)).rowwise().squaredNorm());
  }
  return c;
}

}  // namespace

std::vector<int> assign_nearest(const SampleMatrix& x,
                                const std::vector<std::vector<double>>& centers) {
  return nearest(sq_distances(to_matrix(x), to_matrix(centers)));
}

KMeansResult kmeans(const SampleMatrix& samples, int k, Rng& rng, int restarts,
                    int max_iterations, int reseed_limit) {
  const Mat x = to_matrix(samples);
  if (k < 1 || k > x.rows()) throw std::invalid_argument("kmeans: need 1 <= k <= #samples");
  double best_inertia = std::numeric_limits<double>::infinity();
  Mat best;
  for (int r = 0; r < restarts; ++r) {
    bool done = false;
    for (int attempt = 0; attempt <= reseed_limit && !done; ++attempt) {
      Mat c = plus_plus_seed(x, k, rng);
      std::vector<int> assign;
      bool empty = false;
      for (int it = 0; it < max_iterations; ++it) {
        auto next = nearest(sq_distances(x, c));
        Mat sum = Mat::Zero(k, x.cols());
        std::vector<int> count(k, 0);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          sum.row(next[i]) += x.row(i);
          ++count[next[i]];
        }
        empty = std::find(count.begin(), count.end(), 0) != count.end();
        if (empty) break;
        for (int j = 0; j < k; ++j) c.row(j) = sum.row(j) / count[j];
        if (next == assign) break;
        assign = std::move(next);
      }
      if (empty) continue;
      const Mat d = sq_distances(x, c);
      double inertia = d.rowwise().minCoeff().sum();
      if (inertia < best_inertia) {
        best_inertia = inertia;
        best = c;
      }
      done = true;
    }
    if (!done) throw std::runtime_error("kmeans: empty cluster persisted after reseeding");
  }
  KMeansResult out;
  out.inertia = best_inertia;
  for (Eigen::Index j = 0; j < best.rows(); ++j)
    out.centers.emplace_back(best.row(j).data(), best.row(j).data() + best.cols());
  return out;
}

namespace {

void test_bins(NdbReport& r, double n_real, double n_gen) {
  const boost::math::normal_distribution<double> unit;
  const double critical = boost::math::quantile(unit, 1.0 - r.alpha / 2.0);
  r.z.assign(r.k, 0.0);
  r.significant.assign(r.k, false);
  r.ndb = 0;
  for (int j = 0; j < r.k; ++j) {
    const double pr = r.real_proportion[j];
    const double pg = r.gen_proportion[j];
    const double pooled = (pr * n_real + pg * n_gen) / (n_real + n_gen);
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n_real + 1.0 / n_gen));
    r.z[j] = se > 0 ? (pg - pr) / se : 0.0;
    r.significant[j] = std::abs(r.z[j]) > critical;
    r.ndb += r.significant[j];
  }
  r.ndb_over_k = static_cast<double>(r.ndb) / r.k;
}

}  // namespace

NdbReport ndb_score(const SampleMatrix& real, const SampleMatrix& gen,
                    const NdbOptions& options, Rng& rng) {
  if (real.empty() || gen.empty()) throw std::invalid_argument("ndb_score: empty sample set");
  if (options.k > static_cast<int>(real.size()))
    throw std::invalid_argument("ndb_score: k exceeds the number of real samples");
  if (!(options.alpha > 0 && options.alpha < 1))
    throw std::invalid_argument("ndb_score: alpha must lie in (0, 1)");
  NdbReport r;
  r.k = options.k;
  r.alpha = options.alpha;
  r.bin_centers = kmeans(real, options.k, rng, options.restarts, options.max_iterations,
                         options.reseed_limit)
                      .centers;
  const auto ra = assign_nearest(real, r.bin_centers);
  const auto ga = assign_nearest(gen, r.bin_centers);
  r.real_proportion.assign(r.k, 0.0);
  r.gen_proportion.assign(r.k, 0.0);
  for (int a : ra) r.real_proportion[a] += 1.0 / static_cast<double>(real.size());
  for (int a : ga) r.gen_proportion[a] += 1.0 / static_cast<double>(gen.size());
  test_bins(r, static_cast<double>(real.size()), static_cast<double>(gen.size()));
  return r;
}

NdbReport ndb_at_alpha(const NdbReport& report, std::size_t n_real, std::size_t n_gen,
                       double alpha) {
  NdbReport r = report;
  r.alpha = alpha;
  test_bins(r, static_cast<double>(n_real), static_cast<double>(n_gen));
  return r;
}

namespace {

json nan_to_null(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isnan(x) ? json(nullptr) : json(x));
  return a;
}

}  // namespace

json to_json(const SegScores& s) {
  return {{"pixel_accuracy", s.pixel_accuracy},
          {"mean_accuracy", s.mean_accuracy},
          {"freq_weighted_accuracy", s.freq_weighted_accuracy},
          {"mean_iou", s.mean_iou},
          {"per_class_iou", nan_to_null(s.per_class_iou)}};
}

json to_json(const DepthScores& s) {
  return {{"rmse_log", s.rmse_log},
          {"silog", s.silog},
          {"log10", s.log10},
          {"abs_rel", s.abs_rel},
          {"clamped", s.clamped}};
}

json to_json(const LabelAccuracy& s) {
  return {{"accuracy", s.accuracy},
          {"classifier_heldout_accuracy", s.classifier_heldout_accuracy},
          {"n", s.n}};
}

json to_json(const NdbReport& r) {
  return {{"k", r.k},
          {"alpha", r.alpha},
          {"ndb", r.ndb},
          {"ndb_over_k", r.ndb_over_k},
          {"real_proportion", r.real_proportion},
          {"gen_proportion", r.gen_proportion},
          {"z", r.z},
          {"significant", r.significant},
          {"bin_centers", r.bin_centers}};
}

}  // namespace acgan
