#include "cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "acgan/config.hpp"
#include "acgan/metrics.hpp"
#include "acgan/probe.hpp"
#include "acgan/synthdata.hpp"
#include "acgan/trainer.hpp"
#include "plot.hpp"

namespace acgan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UserError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw UserError("missing " + p.string());
  return json::parse(in);
}

void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string dir;
  bool force = false;
};

// Removes the lock file when the command finishes, however it finishes.
class Lock {
 public:
  explicit Lock(const fs::path& dir) : path_(dir / ".lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
      throw UserError("experiment " + dir.string() + " is locked by another process (" +
                      path_.string() + ")");
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::write(fd, pid.data(), pid.size()) < 0) {
      // The lock is held either way; the pid is informational.
    }
    ::close(fd);
  }
  ~Lock() { std::error_code ec; fs::remove(path_, ec); }
  Lock(const Lock&) = delete;
  Lock& operator=(const Lock&) = delete;

 private:
  fs::path path_;
};

// Keys that decide what the resumable stages produce.
bool pinned_key(const std::string& k) {
  return k.rfind("data.", 0) == 0 || k.rfind("train.", 0) == 0 || k == "experiment";
}

class Experiment {
 public:
  fs::path dir;
  KeyValueConfig config;
  json manifest;

  static Experiment open(const Options& o, std::optional<KeyValueConfig> kv);

  bool complete(const std::string& stage) const {
    return manifest["stages"].contains(stage) &&
           manifest["stages"][stage].value("status", "") == "complete";
  }

  void mark(const std::string& stage, const std::string& status,
            const std::vector<std::string>& artifacts = {}) {
    manifest["stages"][stage] = {{"status", status}, {"artifacts", artifacts}};
    write_json(dir / "experiment.json", manifest);
  }

  fs::path data_dir() const {
    return config.has("data.dir") ? fs::path(config.get("data.dir", "")) : dir / "data";
  }
};

fs::path artifact_root() {
  const char* env = std::getenv(kArtifactRootEnv);
  return env && *env ? fs::path(env) : fs::path("artifacts");
}

fs::path experiment_dir(const Options& o, const std::optional<KeyValueConfig>& kv) {
  if (!o.dir.empty()) return o.dir;
  if (kv) return artifact_root() / kv->get("experiment", "default");
  throw UserError("need --config or --dir");
}

Experiment Experiment::open(const Options& o, std::optional<KeyValueConfig> kv) {
  Experiment ex;
  ex.dir = experiment_dir(o, kv);
  fs::create_directories(ex.dir);
  const fs::path snap = ex.dir / "config.snapshot";
  const fs::path mpath = ex.dir / "experiment.json";
  if (fs::exists(snap)) {
    const KeyValueConfig stored = KeyValueConfig::load(snap);
    if (kv) {
      for (const auto& [k, v] : kv->entries())
        if (pinned_key(k) && stored.get(k, "\x01") != v)
          throw UserError("config key '" + k + "' differs from the experiment snapshot " +
                          snap.string());
      for (const auto& [k, v] : stored.entries())
        if (pinned_key(k) && !kv->has(k))
          throw UserError("config lacks key '" + k + "' recorded in the snapshot");
      ex.config = *kv;
    } else {
      ex.config = stored;
    }
  } else {
    if (!kv) throw UserError("no experiment at " + ex.dir.string() + "; pass --config");
    ex.config = *kv;
    std::ofstream(snap) << kv->dump();
  }
  if (fs::exists(mpath)) {
    ex.manifest = read_json(mpath);
  } else {
    ex.manifest = {{"schema_version", 1},
                   {"experiment", ex.config.get("experiment", ex.dir.filename().string())},
                   {"config_snapshot", "config.snapshot"},
                   {"dataset_manifest", (ex.data_dir() / "manifest.json").string()},
                   {"stages", json::object()}};
    write_json(mpath, ex.manifest);
  }
  return ex;
}

std::optional<KeyValueConfig> effective_config(const Options& o) {
  if (o.config.empty() && o.sets.empty()) return std::nullopt;
  KeyValueConfig kv = o.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(o.config);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UserError("--set expects key=value, got '" + s + "'");
    kv.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  if (o.config.empty() && !kv.has("schema_version"))
    kv.set("schema_version", std::to_string(kConfigSchemaVersion));
  kv.validate_schema();
  return kv;
}

// Runs `body` unless the stage already completed; artifacts are relative to the experiment.
void stage(Experiment& ex, const std::string& name, bool force,
           const std::function<std::vector<std::string>()>& body) {
  if (!force && ex.complete(name)) {
    bool present = true;
    for (const auto& a : ex.manifest["stages"][name]["artifacts"])
      present &= fs::exists(ex.dir / a.get<std::string>());
    if (present) {
      std::cout << name << ": complete, skipped\n";
      return;
    }
  }
  ex.mark(name, "incomplete");
  const auto artifacts = body();
  for (const auto& a : artifacts)
    if (!fs::exists(ex.dir / a))
      throw std::runtime_error("stage " + name + " did not produce " + a);
  ex.mark(name, "complete", artifacts);
  std::cout << name << ": complete\n";
}

std::vector<std::string> relative(const Experiment& ex, const std::vector<fs::path>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(fs::relative(p, ex.dir).string());
  return out;
}

std::vector<Color> dataset_palette(const fs::path& data_dir) {
  const json m = read_json(data_dir / "manifest.json");
  return shapes_spec_from_json(m.at("spec")).colors();
}

Tensor conditions_of(const PairedDataset& ds, std::size_t n) {
  std::vector<Tensor> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(ds.samples[i].condition);
  return stack(v);
}

Tensor targets_of(const PairedDataset& ds, std::size_t n) {
  std::vector<Tensor> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(ds.samples[i].target);
  return stack(v);
}

// Task-appropriate quality metrics of generated outputs against the first n pairs.
std::vector<MetricRecord> quality_metrics(Task task, const std::vector<Color>& palette,
                                          const PairedDataset& val, const Tensor& generated,
                                          std::size_t n, long step, int epoch) {
  std::vector<MetricRecord> out;
  auto add = [&](const std::string& name, double v) { out.push_back({step, epoch, name, v}); };
  if (task == Task::Label2Image || task == Task::Image2Label) {
    ConfusionMatrix cm{val.n_classes, std::vector<std::uint64_t>(
                                          static_cast<std::size_t>(val.n_classes) * val.n_classes)};
    for (std::size_t i = 0; i < n; ++i) {
      const int k = static_cast<int>(i);
      const auto& s = val.samples[i];
      const auto pred = task == Task::Label2Image ? segment_by_palette(generated, k, palette)
                                                  : argmax_channels(generated, k);
      const auto gt = argmax_channels(task == Task::Label2Image ? s.condition : s.target);
      cm.accumulate(confusion_matrix(pred, gt, val.n_classes));
    }
    const SegScores s = seg_scores(cm);
    add("mean_iou", s.mean_iou);
    add("pixel_accuracy", s.pixel_accuracy);
    add("mean_accuracy", s.mean_accuracy);
    add("freq_weighted_accuracy", s.freq_weighted_accuracy);
  } else if (task == Task::Image2Depth) {
    const Tensor gt = targets_of(val, n);
    const DepthScores d = depth_scores(generated.values(), gt.values());
    add("rmse_log", d.rmse_log);
    add("silog", d.silog);
    add("log10", d.log10);
    add("abs_rel", d.abs_rel);
  }
  return out;
}

std::vector<std::string> do_make_data(Experiment& ex) {
  const auto& kv = ex.config;
  const Task task = parse_task(kv.get("data.task", "label2image"));
  const int n_train = kv.get_int("data.n_train", 2000);
  const int n_val = kv.get_int("data.n_val", 500);
  if (n_train < 2 || n_val < 2) throw UserError("data.n_train and data.n_val must be >= 2");
  const auto seed = std::stoull(kv.get("data.seed", "0"));
  PairedDataset all;
  json spec;
  if (task == Task::SingleLabel2Image) {
    const int c = kv.get_int("data.n_classes", 10);
    const int size = kv.get_int("data.image_size", 32);
    all = gen_glyph_single_label(c, size, n_train + n_val, seed);
    spec = {{"generator", "glyphs"}, {"n_classes", c}, {"image_size", size}, {"seed", seed}};
  } else {
    ShapesSceneSpec s;
    s.image_size = kv.get_int("data.image_size", s.image_size);
    s.n_classes = kv.get_int("data.n_classes", s.n_classes);
    s.shapes_min = kv.get_int("data.shapes_min", s.shapes_min);
    s.shapes_max = kv.get_int("data.shapes_max", s.shapes_max);
    s.shape_extent_min = kv.get_int("data.shape_extent_min", s.shape_extent_min);
    s.shape_extent_max = kv.get_int("data.shape_extent_max", s.shape_extent_max);
    s.jitter_amplitude = static_cast<float>(kv.get_double("data.jitter_amplitude", s.jitter_amplitude));
    s.noise_std = static_cast<float>(kv.get_double("data.noise_std", s.noise_std));
    s.seed = seed;
    s.validate();
    all = task == Task::Label2Image   ? gen_shapes_l2i(s, n_train + n_val)
          : task == Task::Image2Label ? gen_shapes_i2l(s, n_train + n_val)
                                      : gen_shapes_depth(s, n_train + n_val);
    spec = to_json(s);
    spec["generator"] = "shapes";
  }
  spec["task"] = to_string(task);
  save_dataset(ex.data_dir(), split_dataset(all, n_train), spec);
  if (ex.data_dir().string().rfind(ex.dir.string(), 0) == 0)
    return relative(ex, {ex.data_dir() / "manifest.json"});
  return {};
}

RunArtifacts load_trained_run(const Experiment& ex) {
  if (!fs::exists(ex.dir / "run" / "run.json"))
    throw UserError("no trained run in " + ex.dir.string() + "; run `train` first");
  return load_run(ex.dir / "run");
}

DatasetSplit load_data(const Experiment& ex) {
  if (!fs::exists(ex.data_dir() / "manifest.json"))
    throw UserError("no dataset at " + ex.data_dir().string() + "; run `make-data` first");
  return load_dataset(ex.data_dir());
}

std::vector<Color> palette_or_empty(const Experiment& ex, Task task) {
  return task == Task::Label2Image ? dataset_palette(ex.data_dir()) : std::vector<Color>{};
}

std::vector<std::string> do_train(Experiment& ex) {
  const DatasetSplit data = load_data(ex);
  const TrainConfig c = train_config_from(ex.config);
  const auto palette = palette_or_empty(ex, data.train.task);
  const std::size_t n_eval = std::min<std::size_t>(100, data.val.size());
  TrainHooks hooks;
  hooks.on_eval = [&](long step, int epoch, UNetGenerator& g, PatchDiscriminator&) {
    const Tensor cond = conditions_of(data.val, n_eval);
    std::vector<Tensor> parts;
    for (std::size_t b = 0; b < n_eval; b += 50)
      parts.push_back(g.forward(slice_batch(cond, static_cast<int>(b),
                                            static_cast<int>(std::min<std::size_t>(50, n_eval - b))),
                                {Mode::Inference, nullptr}));
    return quality_metrics(data.val.task, palette, data.val, concat_batch(parts), n_eval, step,
                           epoch);
  };
  hooks.on_epoch = [](int epoch, const RunArtifacts& run) {
    std::cout << "epoch " << epoch << " steps " << run.steps << '\n' << std::flush;
  };
  RunArtifacts run;
  try {
    run = train(c, data.train, hooks);
  } catch (const TrainingDiverged& e) {
    write_json(ex.dir / "run" / "diverged.json", e.snapshot());
    throw;
  }
  save_run(ex.dir / "run", run);
  return relative(ex, {ex.dir / "run" / "config.json", ex.dir / "run" / "run.json",
                       ex.dir / "run" / "losses.csv", ex.dir / "run" / "grad_norms.csv",
                       ex.dir / "run" / "metrics.jsonl"});
}

ConstantCondition parse_constant(const std::string& s) {
  if (s == "empty") return ConstantCondition::empty();
  if (s == "zero") return ConstantCondition::zero();
  if (s.rfind("uniform:", 0) == 0) return ConstantCondition::uniform(std::stoi(s.substr(8)));
  throw UserError("probe.constant entries are 'empty', 'zero' or 'uniform:<class>', got '" + s + "'");
}

std::vector<std::string> do_probe(Experiment& ex, bool optimal) {
  const auto& kv = ex.config;
  const RunArtifacts run = load_trained_run(ex);
  const DatasetSplit data = load_data(ex);
  const int epoch = kv.get_int("probe.epoch", run.last_epoch());
  const std::string source = ex.dir.filename().string() + "@epoch" + std::to_string(epoch) +
                             (optimal ? "+optimal" : "");
  json summary = {{"source", source}, {"epoch", epoch}, {"optimal", optimal}};
  std::optional<FrozenDiscriminator> d;
  std::optional<FrozenGenerator> g;
  if (optimal) {
    OptimalDiscriminator opt = finetune_optimal_discriminator(
        run, data.train, epoch, kv.get_int("probe.extra_epochs", 1));
    summary["finetune"] = {{"loss_before", opt.loss_before},
                           {"loss_after", opt.loss_after},
                           {"generator_hash_before", opt.generator_hash_before},
                           {"generator_hash_after", opt.generator_hash_after},
                           {"extra_epochs", kv.get_int("probe.extra_epochs", 1)}};
    d.emplace(std::move(opt.discriminator));
    g.emplace(std::move(opt.generator));
  } else {
    const Checkpoint& ck = run.checkpoint(epoch);
    d.emplace(load_discriminator(ck.discriminator));
    g.emplace(load_generator(ck.generator));
  }
  const std::size_t n =
      std::min<std::size_t>(kv.get_int("probe.n", 500), data.val.size());
  Rng rng = derive_rng(std::stoull(kv.get("probe.seed", std::to_string(run.config.seed))),
                       stream::kProbe);
  const std::string noise_name = kv.get("probe.noise", "inference");
  if (noise_name != "inference" && noise_name != "training")
    throw UserError("probe.noise is 'inference' or 'training'");
  const ProbeNoise noise = noise_name == "training" ? ProbeNoise::Training : ProbeNoise::Inference;
  const ResponseMap resp = collect_responses(*d, data.val, *g, kAllPairings, n, rng, source, noise);
  const HistogramReport report = histogram_report(resp, kv.get_int("probe.bins", kDefaultHistogramBins));
  json rates = json::object();
  for (const auto& [k, r] : classification_rates(resp)) rates[std::string(to_string(k))] = r;
  summary["rates_true"] = rates;
  summary["n"] = n;
  summary["histogram"] = to_json(report);
  if (data.val.task == Task::Label2Image || data.val.task == Task::SingleLabel2Image) {
    json constant = json::object();
    auto list = kv.get_list("probe.constant");
    if (list.empty()) list = {"uniform:0", "empty", "zero"};
    for (const auto& item : list) {
      const ConstantCondition c = parse_constant(item);
      constant[c.name()] = constant_condition_probe(*d, data.val, c, n);
    }
    summary["constant_rates_true"] = constant;
  }
  const fs::path out = ex.dir / (optimal ? "probe_optimal" : "probe");
  write_histogram_csv((fs::create_directories(out), out / "histogram.csv"), report);
  write_json(out / "summary.json", summary);
  return relative(ex, {out / "histogram.csv", out / "summary.json"});
}

std::vector<std::string> do_eval(Experiment& ex, bool ndb_flag, bool ndb_against_real) {
  const auto& kv = ex.config;
  const RunArtifacts run = load_trained_run(ex);
  const DatasetSplit data = load_data(ex);
  const int epoch = kv.get_int("eval.epoch", run.last_epoch());
  const FrozenGenerator g(load_generator(run.checkpoint(epoch).generator));
  const std::size_t n = std::min<std::size_t>(kv.get_int("eval.n", 500), data.val.size());
  const Task task = data.val.task;
  const Tensor generated = g.generate(conditions_of(data.val, n));
  std::vector<MetricRecord> records;
  const bool seg = kv.get_bool("eval.seg", true);
  const bool depth = kv.get_bool("eval.depth", true);
  if ((seg && (task == Task::Label2Image || task == Task::Image2Label)) ||
      (depth && task == Task::Image2Depth))
    records = quality_metrics(task, palette_or_empty(ex, task), data.val, generated, n,
                              run.steps, epoch);
  if (task == Task::SingleLabel2Image && kv.get_bool("eval.label_accuracy", true)) {
    const auto seed = std::stoull(kv.get("eval.seed", "0"));
    const ProbeClassifier clf = train_probe_classifier(data.train, seed);
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(class_of(data.val.samples[i].condition));
    const LabelAccuracy acc = label_accuracy(clf, generated, labels);
    records.push_back({run.steps, epoch, "label_accuracy", acc.accuracy});
    records.push_back({run.steps, epoch, "classifier_heldout_accuracy",
                       acc.classifier_heldout_accuracy});
  }
  const fs::path out = ex.dir / "eval";
  fs::create_directories(out);
  std::vector<fs::path> artifacts{out / "metrics.jsonl"};
  if (ndb_flag || kv.get_bool("eval.ndb", false)) {
    NdbOptions o;
    o.k = kv.get_int("eval.ndb_k", 20);
    o.alpha = kv.get_double("eval.ndb_alpha", 0.05);
    o.patch = kv.get_int("eval.ndb_patch", 0);
    const SampleMatrix real = to_samples(targets_of(data.val, n), o.patch);
    const SampleMatrix gen = ndb_against_real ? real : to_samples(generated, o.patch);
    o.k = std::min<int>(o.k, static_cast<int>(real.size()));
    Rng rng = derive_rng(std::stoull(kv.get("eval.seed", "0")), 0x4e4442);
    const NdbReport r = ndb_score(real, gen, o, rng);
    json j = to_json(r);
    j["reference"] = ndb_against_real ? "real" : "generated";
    write_json(out / "ndb.json", j);
    artifacts.push_back(out / "ndb.json");
    records.push_back({run.steps, epoch, "ndb", static_cast<double>(r.ndb)});
    records.push_back({run.steps, epoch, "ndb_over_k", r.ndb_over_k});
  }
  write_metrics_jsonl(out / "metrics.jsonl", records);
  std::ofstream append(ex.dir / "run" / "metrics.jsonl", std::ios::app);
  for (const auto& r : records) append << to_json(r).dump() << '\n';
  return relative(ex, artifacts);
}

json experiment_summary(const fs::path& dir) {
  json s = {{"dir", dir.string()}};
  if (!fs::exists(dir / "run" / "run.json")) throw UserError("no trained run in " + dir.string());
  const RunArtifacts run = load_run(dir / "run");
  s["objective"] = to_string(run.config.objective);
  s["steps"] = run.steps;
  json tails = json::object();
  for (auto k : kAllPairings)
    tails[std::string(to_string(k))] = tail_mean(loss_series(run, k), 0.1);
  s["tail_losses"] = tails;
  json metrics = json::object();
  for (const auto& m : run.metrics) metrics[m.name] = m.value;
  s["last_metrics"] = metrics;
  for (const char* probe : {"probe_optimal", "probe"})
    if (fs::exists(dir / probe / "summary.json")) {
      const json p = read_json(dir / probe / "summary.json");
      s["probe"] = {{"source", p["source"]},
                    {"rates_true", p["rates_true"]},
                    {"constant_rates_true", p.value("constant_rates_true", json::object())}};
      break;
    }
  return s;
}

json do_compare(const fs::path& a, const fs::path& b) {
  json r = {{"a", experiment_summary(a)}, {"b", experiment_summary(b)}};
  json gaps = json::object();
  if (r["a"].contains("probe") && r["b"].contains("probe"))
    for (auto& [k, v] : r["a"]["probe"]["rates_true"].items())
      if (r["b"]["probe"]["rates_true"].contains(k))
        gaps["rate_true." + k] = v.get<double>() - r["b"]["probe"]["rates_true"][k].get<double>();
  for (auto& [k, v] : r["a"]["tail_losses"].items())
    gaps["tail_loss." + k] = v.get<double>() - r["b"]["tail_losses"][k].get<double>();
  r["a_minus_b"] = gaps;
  return r;
}

std::vector<double> smooth(const std::vector<double>& v) {
  const std::size_t w = std::max<std::size_t>(1, v.size() / 100);
  std::vector<double> out(v.size());
  double acc = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += v[i];
    if (i >= w) acc -= v[i - w];
    out[i] = acc / static_cast<double>(std::min(i + 1, w));
  }
  return out;
}

std::vector<std::string> do_plot(const Experiment& ex) {
  const RunArtifacts run = load_trained_run(ex);
  const fs::path out = ex.dir / "plots";
  fs::create_directories(out);
  std::vector<fs::path> files;
  std::vector<double> steps;
  for (const auto& r : run.losses) steps.push_back(static_cast<double>(r.step));
  std::vector<plot::Series> loss;
  for (auto k : kAllPairings)
    loss.push_back({steps, smooth(loss_series(run, k)), plot::kind_colors()[index_of(k)]});
  plot::line_chart(out / "losses.png", loss);
  files.push_back(out / "losses.png");

  std::vector<double> gx, gd, gg;
  for (const auto& r : run.grad_norms) {
    gx.push_back(static_cast<double>(r.step));
    gd.push_back(r.d_mean_abs);
    gg.push_back(r.g_mean_abs);
  }
  plot::line_chart(out / "grad_norms.png",
                   {{gx, gd, plot::Rgb{214, 39, 40}}, {gx, gg, plot::Rgb{31, 119, 180}}}, 720,
                   420, true);
  files.push_back(out / "grad_norms.png");

  std::map<std::string, plot::Series> metric_series;
  for (const auto& m : run.metrics) {
    auto& s = metric_series[m.name];
    s.color = plot::Rgb{31, 119, 180};
    s.x.push_back(static_cast<double>(m.step));
    s.y.push_back(m.value);
  }
  for (const auto& [name, s] : metric_series) {
    plot::line_chart(out / ("metric_" + name + ".png"), {s});
    files.push_back(out / ("metric_" + name + ".png"));
  }

  for (const char* probe : {"probe", "probe_optimal"}) {
    if (!fs::exists(ex.dir / probe / "summary.json")) continue;
    const json h = read_json(ex.dir / probe / "summary.json")["histogram"];
    const auto edges = h["edges"].get<std::vector<double>>();
    std::vector<double> centers;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) centers.push_back(0.5 * (edges[i] + edges[i + 1]));
    std::vector<plot::Series> hist;
    for (auto k : kAllPairings) {
      const std::string name(to_string(k));
      if (!h["kinds"].contains(name)) continue;
      auto counts = h["kinds"][name]["counts"].get<std::vector<double>>();
      const double n = h["kinds"][name]["n"].get<double>();
      for (auto& c : counts) c /= n;
      hist.push_back({centers, counts, plot::kind_colors()[index_of(k)]});
    }
    const fs::path f = out / (std::string("histogram_") + probe + ".png");
    plot::line_chart(f, hist);
    files.push_back(f);
  }
  return relative(ex, files);
}

void error_record(const std::string& kind, const std::string& command, const std::string& message,
                  const std::optional<fs::path>& dir, const json& extra = nullptr) {
  json rec = {{"error", {{"kind", kind}, {"command", command}, {"message", message}}}};
  if (!extra.is_null()) rec["error"]["details"] = extra;
  std::cerr << rec.dump() << '\n';
  if (dir && fs::exists(*dir)) {
    std::error_code ec;
    std::ofstream(*dir / "error.json") << rec.dump(2) << '\n';
  }
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"a-contrario conditional GAN toolkit"};
  app.require_subcommand(1);
  Options o;
  bool optimal = false, ndb = false, ndb_real = false;
  std::string cmp_a, cmp_b, cmp_out;

  auto common = [&](CLI::App* sub, bool with_force) {
    sub->add_option("--config", o.config, "experiment config file (key = value)");
    sub->add_option("--set", o.sets, "override a config key, key=value");
    sub->add_option("--dir", o.dir, "experiment directory (default $ACGAN_ARTIFACT_ROOT/<experiment>)");
    if (with_force) sub->add_flag("--force", o.force, "re-run even if the stage completed");
  };
  auto* make_data = app.add_subcommand("make-data", "generate the synthetic dataset");
  common(make_data, true);
  auto* train_cmd = app.add_subcommand("train", "train a run");
  common(train_cmd, true);
  auto* probe = app.add_subcommand("probe", "conditionality probe of a checkpoint");
  common(probe, true);
  probe->add_flag("--optimal", optimal, "fine-tune the optimal discriminator first");
  auto* eval = app.add_subcommand("eval", "quality and mode-collapse metrics");
  common(eval, true);
  eval->add_flag("--ndb", ndb, "also compute NDB");
  eval->add_flag("--ndb-against-real", ndb_real, "score the real set against itself");
  auto* compare = app.add_subcommand("compare", "side-by-side report of two experiments");
  compare->add_option("--a", cmp_a, "first experiment directory")->required();
  compare->add_option("--b", cmp_b, "second experiment directory")->required();
  compare->add_option("--out", cmp_out, "report path (default <b>/compare.json)");
  auto* plot_cmd = app.add_subcommand("plot", "render curves and histograms");
  common(plot_cmd, false);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record("user", "", e.what(), std::nullopt);
    return kExitUser;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  std::optional<fs::path> dir;
  try {
    if (command == "compare") {
      const json r = do_compare(cmp_a, cmp_b);
      const fs::path out = cmp_out.empty() ? fs::path(cmp_b) / "compare.json" : fs::path(cmp_out);
      write_json(fs::absolute(out), r);
      std::cout << r.dump(2) << '\n';
      return kExitOk;
    }
    const auto kv = effective_config(o);
    dir = experiment_dir(o, kv);
    Experiment ex = Experiment::open(o, kv);
    Lock lock(ex.dir);
    if (command == "make-data") {
      stage(ex, "make-data", o.force, [&] { return do_make_data(ex); });
    } else if (command == "train") {
      if (!fs::exists(ex.data_dir() / "manifest.json"))
        stage(ex, "make-data", false, [&] { return do_make_data(ex); });
      stage(ex, "train", o.force, [&] { return do_train(ex); });
    } else if (command == "probe") {
      const bool opt = optimal || ex.config.get_bool("probe.optimal", false);
      stage(ex, opt ? "probe-optimal" : "probe", o.force, [&] { return do_probe(ex, opt); });
    } else if (command == "eval") {
      stage(ex, "eval", o.force, [&] { return do_eval(ex, ndb, ndb_real); });
    } else if (command == "plot") {
      stage(ex, "plot", true, [&] { return do_plot(ex); });
    }
    return kExitOk;
  } catch (const TrainingDiverged& e) {
    error_record("internal", command, e.what(), dir, e.snapshot());
    return kExitInternal;
  } catch (const std::invalid_argument& e) {
    error_record("user", command, e.what(), dir);
    return kExitUser;
  } catch (const std::out_of_range& e) {
    error_record("user", command, e.what(), dir);
    return kExitUser;
  } catch (const json::exception& e) {
    error_record("user", command, std::string("malformed json: ") + e.what(), dir);
    return kExitUser;
  } catch (const std::exception& e) {
    error_record("internal", command, e.what(), dir);
    return kExitInternal;
  }
}

}  // namespace acgan::cli
