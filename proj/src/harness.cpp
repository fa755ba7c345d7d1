#include "onda/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "onda/csv.hpp"
#include "onda/hashing.hpp"

namespace onda {

namespace {

using nlohmann::json;

template <typename T>
void patch(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

json effect_level_to_json(const IlluminationEffect& e) {
  return {{"contrast", e.contrast}, {"brightness", e.brightness}};
}

json effect_level_to_json(const CameraEffect& e) {
  return {{"gain", e.gain}, {"noise_std", e.noise_std}};
}

json effect_level_to_json(const BackgroundEffect& e) {
  return {{"clutter_mean", e.clutter_mean}};
}

void effect_level_from_json(const json& j, IlluminationEffect& e) {
  patch(j, "contrast", e.contrast);
  patch(j, "brightness", e.brightness);
}

void effect_level_from_json(const json& j, CameraEffect& e) {
  patch(j, "gain", e.gain);
  patch(j, "noise_std", e.noise_std);
}

void effect_level_from_json(const json& j, BackgroundEffect& e) {
  patch(j, "clutter_mean", e.clutter_mean);
}

json effects_to_json(const DomainEffects& fx) {
  json j;
  j["clutter_offset"] = fx.clutter_offset;
  j["illumination"] = {{"artificial", effect_level_to_json(fx.illumination[0])},
                       {"cloudy", effect_level_to_json(fx.illumination[1])},
                       {"directed", effect_level_to_json(fx.illumination[2])}};
  j["camera"] = {{"kinect", effect_level_to_json(fx.camera[0])},
                 {"webcam", effect_level_to_json(fx.camera[1])}};
  j["background"] = {{"white", effect_level_to_json(fx.background[0])},
                     {"brown", effect_level_to_json(fx.background[1])}};
  return j;
}

void effects_from_json(const json& j, DomainEffects& fx) {
  patch(j, "clutter_offset", fx.clutter_offset);
  if (j.contains("illumination")) {
    const json& ill = j.at("illumination");
    const char* names[] = {"artificial", "cloudy", "directed"};
    for (int i = 0; i < 3; ++i)
      if (ill.contains(names[i])) effect_level_from_json(ill.at(names[i]), fx.illumination[i]);
  }
  if (j.contains("camera")) {
    const json& cam = j.at("camera");
    const char* names[] = {"kinect", "webcam"};
    for (int i = 0; i < 2; ++i)
      if (cam.contains(names[i])) effect_level_from_json(cam.at(names[i]), fx.camera[i]);
  }
  if (j.contains("background")) {
    const json& bg = j.at("background");
    const char* names[] = {"white", "brown"};
    for (int i = 0; i < 2; ++i)
      if (bg.contains(names[i])) effect_level_from_json(bg.at(names[i]), fx.background[i]);
  }
}

std::vector<DomainSpec> study_targets(const ExperimentConfig& cfg, const std::string& source_id) {
  std::vector<DomainSpec> targets;
  if (cfg.study.targets.empty()) {
    for (const DomainSpec& spec : domain_grid())
      if (spec.id() != source_id) targets.push_back(spec);
  } else {
    for (const std::string& id : cfg.study.targets) targets.push_back(DomainSpec::parse(id));
  }
  return targets;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  try {
    network.validate();
    opt.validate();
    adaptation.validate();
    effects.validate(data.dim);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (data.dim != network.input_dim) fail("data.dim must equal network.input_dim");
  if (data.num_classes != network.num_classes)
    fail("data.num_classes must equal network.num_classes");
  if (data.num_classes < 2) fail("need at least 2 classes");
  if (data.num_categories < 1 || data.num_categories > data.num_classes)
    fail("category count must be in [1, num_classes]");
  if (data.samples_per_class < 1) fail("samples_per_class must be positive");
  if (effects.clutter_size() != data.clutter_dims)
    fail("effects clutter block must match data.clutter_dims");
  if (data.separation <= 0 || data.within_std <= 0) fail("separation and within_std must be positive");
  if (study.seeds.empty()) fail("need at least one seed");
  if (study.sources.empty()) fail("need at least one source domain");
  for (const std::string& id : study.sources) {
    DomainSpec::parse(id);
    for (const std::string& target : study.targets)
      if (target == id) fail("source '" + id + "' also appears in targets");
  }
  for (const std::string& id : study.targets) DomainSpec::parse(id);
  if (ablation.alpha_values.empty() || ablation.nt_values.empty())
    fail("sweep grids must be nonempty");
  for (double a : ablation.alpha_values)
    if (a < 0.0 || a > 1.0) fail("swept alpha outside [0,1]");
  for (std::size_t n : ablation.nt_values)
    if (n < 2) fail("swept n_t must be at least 2");
  DomainSpec::parse(ablation.source);
  DomainSpec::parse(ablation.target);
  if (ablation.source == ablation.target) fail("ablation source equals target");
  if (ablation.samples_per_class < 1) fail("ablation samples_per_class must be positive");
  if (out_dir.empty()) fail("out_dir must be set");
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig cfg;
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    if (j.contains("network")) {
      const json& n = j.at("network");
      patch(n, "input_dim", cfg.network.input_dim);
      patch(n, "hidden_dims", cfg.network.hidden_dims);
      patch(n, "num_classes", cfg.network.num_classes);
    }
    if (j.contains("opt")) {
      const json& o = j.at("opt");
      patch(o, "lr_features", cfg.opt.lr_features);
      patch(o, "lr_classifier", cfg.opt.lr_classifier);
      patch(o, "momentum", cfg.opt.momentum);
      patch(o, "weight_decay", cfg.opt.weight_decay);
      patch(o, "epochs", cfg.opt.epochs);
      patch(o, "lr_drop_epoch", cfg.opt.lr_drop_epoch);
      patch(o, "lr_drop_factor", cfg.opt.lr_drop_factor);
      patch(o, "batch_size", cfg.opt.batch_size);
    }
    if (j.contains("adaptation")) {
      const json& a = j.at("adaptation");
      patch(a, "nt", cfg.adaptation.n_t);
      patch(a, "alpha", cfg.adaptation.alpha);
    }
    if (j.contains("data")) {
      const json& d = j.at("data");
      std::size_t dim_before = cfg.data.dim, clutter_before = cfg.data.clutter_dims;
      patch(d, "dim", cfg.data.dim);
      patch(d, "num_classes", cfg.data.num_classes);
      patch(d, "num_categories", cfg.data.num_categories);
      patch(d, "samples_per_class", cfg.data.samples_per_class);
      patch(d, "clutter_dims", cfg.data.clutter_dims);
      patch(d, "separation", cfg.data.separation);
      patch(d, "within_std", cfg.data.within_std);
      patch(d, "anchor_scale", cfg.data.anchor_scale);
      patch(d, "class_scale", cfg.data.class_scale);
      patch(d, "seed", cfg.data.seed);
      if (cfg.data.dim != dim_before || cfg.data.clutter_dims != clutter_before)
        cfg.effects = DomainEffects::defaults(cfg.data.dim, cfg.data.clutter_dims);
    }
    if (j.contains("effects")) effects_from_json(j.at("effects"), cfg.effects);
    if (j.contains("study")) {
      const json& s = j.at("study");
      patch(s, "sources", cfg.study.sources);
      patch(s, "targets", cfg.study.targets);
      patch(s, "seeds", cfg.study.seeds);
    }
    if (j.contains("ablation")) {
      const json& a = j.at("ablation");
      patch(a, "alpha_values", cfg.ablation.alpha_values);
      patch(a, "nt_values", cfg.ablation.nt_values);
      patch(a, "source", cfg.ablation.source);
      patch(a, "target", cfg.ablation.target);
      patch(a, "samples_per_class", cfg.ablation.samples_per_class);
    }
    patch(j, "out_dir", cfg.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["network"] = {{"input_dim", cfg.network.input_dim},
                  {"hidden_dims", cfg.network.hidden_dims},
                  {"num_classes", cfg.network.num_classes}};
  j["opt"] = {{"lr_features", cfg.opt.lr_features},
              {"lr_classifier", cfg.opt.lr_classifier},
              {"momentum", cfg.opt.momentum},
              {"weight_decay", cfg.opt.weight_decay},
              {"epochs", cfg.opt.epochs},
              {"lr_drop_epoch", cfg.opt.lr_drop_epoch},
              {"lr_drop_factor", cfg.opt.lr_drop_factor},
              {"batch_size", cfg.opt.batch_size}};
  j["adaptation"] = {{"nt", cfg.adaptation.n_t}, {"alpha", cfg.adaptation.alpha}};
  j["data"] = {{"dim", cfg.data.dim},
               {"num_classes", cfg.data.num_classes},
               {"num_categories", cfg.data.num_categories},
               {"samples_per_class", cfg.data.samples_per_class},
               {"clutter_dims", cfg.data.clutter_dims},
               {"separation", cfg.data.separation},
               {"within_std", cfg.data.within_std},
               {"anchor_scale", cfg.data.anchor_scale},
               {"class_scale", cfg.data.class_scale},
               {"seed", cfg.data.seed}};
  j["effects"] = effects_to_json(cfg.effects);
  j["study"] = {{"sources", cfg.study.sources},
                {"targets", cfg.study.targets},
                {"seeds", cfg.study.seeds}};
  j["ablation"] = {{"alpha_values", cfg.ablation.alpha_values},
                   {"nt_values", cfg.ablation.nt_values},
                   {"source", cfg.ablation.source},
                   {"target", cfg.ablation.target},
                   {"samples_per_class", cfg.ablation.samples_per_class}};
  j["out_dir"] = cfg.out_dir;
  return j.dump(2) + "\n";
}

Prototypes experiment_prototypes(const ExperimentConfig& cfg) {
  RngStream rng(cfg.data.seed, fnv1a("prototypes"));
  return make_prototypes(rng, cfg.data.num_classes, cfg.data.dim, cfg.data.num_categories,
                         cfg.data.separation, cfg.data.within_std, cfg.data.anchor_scale,
                         cfg.data.class_scale);
}

Dataset experiment_dataset(const ExperimentConfig& cfg, const Prototypes& proto,
                           const DomainSpec& spec, std::size_t n_per_class,
                           std::string_view tag) {
  RngStream rng(cfg.data.seed, fnv1a(std::string(tag) + ":" + spec.id()));
  return sample_domain(rng, proto, spec, cfg.effects, n_per_class);
}

Params train_source_model(const ExperimentConfig& cfg, const Dataset& source_ds,
                          const std::string& source_id, std::uint64_t seed) {
  RngStream rng(seed, fnv1a("source-train:" + source_id));
  return train(cfg.network, source_ds, cfg.opt, rng);
}

Dataset shuffled_stream(const Dataset& ds, const std::string& target_id, std::uint64_t seed) {
  RngStream rng(seed, fnv1a("stream:" + target_id));
  return subset(ds, shuffled_indices(ds.size(), rng));
}

std::vector<ResultRow> run_shift_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const Prototypes proto = experiment_prototypes(cfg);
  std::vector<ResultRow> rows;

  for (const std::string& source_id : cfg.study.sources) {
    const DomainSpec source = DomainSpec::parse(source_id);
    const Dataset source_ds =
        experiment_dataset(cfg, proto, source, cfg.data.samples_per_class, "data");
    const std::vector<DomainSpec> targets = study_targets(cfg, source_id);

    for (std::uint64_t seed : cfg.study.seeds) {
      const Params model = train_source_model(cfg, source_ds, source_id, seed);
      const std::uint64_t model_hash = params_hash(model);
      const StatsSource globals = bn_globals(model);

      for (const DomainSpec& target : targets) {
        const Dataset target_ds =
            experiment_dataset(cfg, proto, target, cfg.data.samples_per_class, "data");
        const int dist = shift_distance(source, target);

        const double bn_acc = evaluate(model, target_ds, Regime::kEval);

        const Dataset stream = shuffled_stream(target_ds, target.id(), seed);
        const StreamTrace trace = run_stream(model, globals, cfg.adaptation, stream, false);

        RngStream dial_rng(seed, fnv1a("dial:" + source_id + "->" + target.id()));
        const DialResult dial =
            dial_train_from(model, source_ds, target_ds.x, cfg.opt, dial_rng);
        const double dial_acc = dial_evaluate(dial.params, dial.bank, target_ds, "target");

        if (params_hash(model) != model_hash)
          throw std::runtime_error("study: source model mutated within a cell");

        rows.push_back({source_id, target.id(), dist, "BN", seed, bn_acc});
        rows.push_back({source_id, target.id(), dist, "ONDA-25", seed, trace.acc_25});
        rows.push_back({source_id, target.id(), dist, "ONDA-50", seed, trace.acc_50});
        rows.push_back({source_id, target.id(), dist, "ONDA-90", seed, trace.acc_90});
        rows.push_back({source_id, target.id(), dist, "DIAL", seed, dial_acc});
      }
    }
  }
  return rows;
}

std::string results_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = "source,target,shift_distance,method,seed,accuracy\n";
  for (const ResultRow& r : rows) {
    out += csv_join({r.source, r.target, std::to_string(r.shift_distance), r.method,
                     std::to_string(r.seed), format_double(r.accuracy)});
    out += '\n';
  }
  return out;
}

std::vector<ResultRow> results_from_csv(const std::string& text) {
  const auto cells = parse_csv(text);
  if (cells.empty()) throw std::runtime_error("results csv is empty");
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (c.size() != 6) throw std::runtime_error("results csv has a malformed row");
    ResultRow r;
    r.source = c[0];
    r.target = c[1];
    r.shift_distance = static_cast<int>(parse_double(c[2]));
    r.method = c[3];
    r.seed = static_cast<std::uint64_t>(parse_double(c[4]));
    r.accuracy = parse_double(c[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

AblationOutput run_ablation(const ExperimentConfig& cfg, bool sweep_alpha, bool sweep_nt) {
  if (sweep_alpha == sweep_nt)
    throw ConfigError("ablate: exactly one of alpha / nt must be swept");
  cfg.validate();
  const Prototypes proto = experiment_prototypes(cfg);
  const DomainSpec source = DomainSpec::parse(cfg.ablation.source);
  const DomainSpec target = DomainSpec::parse(cfg.ablation.target);

  const Dataset source_ds =
      experiment_dataset(cfg, proto, source, cfg.data.samples_per_class, "data");
  const Dataset target_ds =
      experiment_dataset(cfg, proto, target, cfg.ablation.samples_per_class, "ablation-data");

  const std::uint64_t base_seed = cfg.study.seeds.front();
  const Params model = train_source_model(cfg, source_ds, cfg.ablation.source, base_seed);
  const StatsSource globals = bn_globals(model);

  AblationOutput out;
  out.param = sweep_alpha ? "alpha" : "nt";
  out.bn_reference = evaluate(model, target_ds, Regime::kEval);

  RngStream dial_rng(base_seed, fnv1a("dial:" + cfg.ablation.source + "->" + cfg.ablation.target));
  const DialResult dial = dial_train_from(model, source_ds, target_ds.x, cfg.opt, dial_rng);
  out.dial_reference = dial_evaluate(dial.params, dial.bank, target_ds, "target");

  std::vector<double> values;
  if (sweep_alpha)
    values = cfg.ablation.alpha_values;
  else
    for (std::size_t n : cfg.ablation.nt_values) values.push_back(static_cast<double>(n));

  for (double value : values) {
    AdaptationConfig ac = cfg.adaptation;
    if (sweep_alpha)
      ac.alpha = value;
    else
      ac.n_t = static_cast<std::size_t>(value);

    SweepTrajectory sweep;
    sweep.value = value;
    for (std::uint64_t seed : cfg.study.seeds) {
      const Dataset stream = shuffled_stream(target_ds, cfg.ablation.target, seed);
      const StreamTrace trace = run_stream(model, globals, ac, stream, true);
      std::vector<double> acc;
      acc.reserve(trace.updates.size());
      for (const UpdateSnapshot& u : trace.updates) acc.push_back(u.whole_set_accuracy);
      sweep.per_seed.push_back(std::move(acc));
    }

    const std::size_t updates = sweep.per_seed.front().size();
    sweep.mean.resize(updates);
    sweep.stdev.resize(updates);
    const double n_seeds = static_cast<double>(sweep.per_seed.size());
    for (std::size_t u = 0; u < updates; ++u) {
      double m = 0.0;
      for (const auto& s : sweep.per_seed) m += s[u];
      m /= n_seeds;
      double var = 0.0;
      for (const auto& s : sweep.per_seed) var += (s[u] - m) * (s[u] - m);
      sweep.mean[u] = m;
      sweep.stdev[u] = n_seeds > 1 ? std::sqrt(var / (n_seeds - 1)) : 0.0;
    }
    out.sweeps.push_back(std::move(sweep));
  }
  return out;
}

std::string trajectory_filename(const std::string& param, double value) {
  std::string v;
  if (param == "nt") {
    v = std::to_string(static_cast<long long>(value));
  } else {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", value);
    v = buf;
  }
  return "trajectory_" + param + "_" + v + ".csv";
}

void write_trajectories(const AblationOutput& out, const std::string& dir) {
  for (const SweepTrajectory& sweep : out.sweeps) {
    std::string csv = "update_index,mean_accuracy,std_accuracy\n";
    for (std::size_t u = 0; u < sweep.mean.size(); ++u) {
      csv += csv_join({std::to_string(u + 1), format_double(sweep.mean[u]),
                       format_double(sweep.stdev[u])});
      csv += '\n';
    }
    write_file_atomic(dir + "/" + trajectory_filename(out.param, sweep.value), csv);
  }
}

namespace {

struct CellAccum {
  int shift = 0;
  std::map<std::string, std::pair<double, std::size_t>> methods;  // sum, count
};

double cell_mean(const CellAccum& cell, const std::string& method) {
  auto it = cell.methods.find(method);
  if (it == cell.methods.end() || it->second.second == 0)
    throw std::runtime_error("summarize: missing method '" + method + "' in a cell");
  return it->second.first / static_cast<double>(it->second.second);
}

}  // namespace

Summary summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("summarize: no rows");

  std::map<std::pair<std::string, std::string>, CellAccum> cells;
  for (const ResultRow& r : rows) {
    CellAccum& cell = cells[{r.source, r.target}];
    cell.shift = r.shift_distance;
    auto& acc = cell.methods[r.method];
    acc.first += r.accuracy;
    acc.second += 1;
  }

  Summary s;
  std::map<int, std::array<double, 3>> shift_sums;  // bn, onda90, count
  std::map<std::string, std::array<double, 4>> prog_sums;  // 25, 50, 90, count

  for (const auto& [key, cell] : cells) {
    TargetSummary t;
    t.source = key.first;
    t.target = key.second;
    t.shift = cell.shift;
    t.bn = cell_mean(cell, "BN");
    t.onda25 = cell_mean(cell, "ONDA-25");
    t.onda50 = cell_mean(cell, "ONDA-50");
    t.onda90 = cell_mean(cell, "ONDA-90");
    t.dial = cell_mean(cell, "DIAL");
    t.gain90 = t.onda90 - t.bn;
    t.gap = t.dial - t.bn;
    if (t.gap >= 0.05) t.closure = t.gain90 / t.gap;
    s.targets.push_back(t);

    auto& sh = shift_sums[t.shift];
    sh[0] += t.bn;
    sh[1] += t.onda90;
    sh[2] += 1.0;
    auto& pg = prog_sums[t.source];
    pg[0] += t.onda25;
    pg[1] += t.onda50;
    pg[2] += t.onda90;
    pg[3] += 1.0;
  }

  for (const auto& [shift, sums] : shift_sums) {
    ShiftSummary sh;
    sh.shift = shift;
    sh.cells = static_cast<std::size_t>(sums[2]);
    sh.mean_bn = sums[0] / sums[2];
    sh.mean_onda90 = sums[1] / sums[2];
    sh.mean_gain = sh.mean_onda90 - sh.mean_bn;
    s.shifts.push_back(sh);
  }
  for (const auto& [source, sums] : prog_sums)
    s.progression[source] = {sums[0] / sums[3], sums[1] / sums[3], sums[2] / sums[3]};

  double closure_sum = 0.0;
  std::size_t closure_count = 0;
  for (const TargetSummary& t : s.targets)
    if (t.closure) {
      closure_sum += *t.closure;
      ++closure_count;
    }
  if (closure_count) s.mean_closure = closure_sum / static_cast<double>(closure_count);
  return s;
}

std::string format_summary_text(const Summary& s) {
  std::string out;
  char line[256];

  out += "== per-target method means ==\n";
  std::snprintf(line, sizeof(line), "%-26s %-26s %5s %7s %7s %7s %7s %7s %7s %7s %8s\n",
                "source", "target", "shift", "bn", "onda25", "onda50", "onda90", "dial",
                "gain90", "gap", "closure");
  out += line;
  for (const TargetSummary& t : s.targets) {
    std::string closure = t.closure ? format_double_fixed(*t.closure, 4) : "-";
    std::snprintf(line, sizeof(line),
                  "%-26s %-26s %5d %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f %8s\n",
                  t.source.c_str(), t.target.c_str(), t.shift, t.bn, t.onda25, t.onda50,
                  t.onda90, t.dial, t.gain90, t.gap, closure.c_str());
    out += line;
  }

  out += "\n== mean gain (ONDA-90 minus BN) by shift distance ==\n";
  std::snprintf(line, sizeof(line), "%5s %5s %9s %11s %9s\n", "shift", "cells", "mean_bn",
                "mean_onda90", "mean_gain");
  out += line;
  for (const ShiftSummary& sh : s.shifts) {
    std::snprintf(line, sizeof(line), "%5d %5zu %9.4f %11.4f %9.4f\n", sh.shift, sh.cells,
                  sh.mean_bn, sh.mean_onda90, sh.mean_gain);
    out += line;
  }

  out += "\n== checkpoint progression per source study ==\n";
  std::snprintf(line, sizeof(line), "%-26s %9s %9s %9s\n", "source", "onda25", "onda50",
                "onda90");
  out += line;
  for (const auto& [source, means] : s.progression) {
    std::snprintf(line, sizeof(line), "%-26s %9.4f %9.4f %9.4f\n", source.c_str(), means[0],
                  means[1], means[2]);
    out += line;
  }

  out += "\n== gap closure ==\n";
  if (s.mean_closure) {
    std::size_t n = 0;
    for (const TargetSummary& t : s.targets) n += t.closure.has_value();
    std::snprintf(line, sizeof(line),
                  "mean closure over %zu cells with gap >= 0.05: %.4f\n", n, *s.mean_closure);
    out += line;
  } else {
    out += "no cells with gap >= 0.05\n";
  }
  return out;
}

std::string format_summary_csv(const Summary& s) {
  std::string out =
      "source,target,shift_distance,bn,onda25,onda50,onda90,dial,gain90,gap,closure\n";
  for (const TargetSummary& t : s.targets) {
    out += csv_join({t.source, t.target, std::to_string(t.shift), format_double(t.bn),
                     format_double(t.onda25), format_double(t.onda50), format_double(t.onda90),
                     format_double(t.dial), format_double(t.gain90), format_double(t.gap),
                     t.closure ? format_double(*t.closure) : ""});
    out += '\n';
  }
  return out;
}

}  // namespace onda
