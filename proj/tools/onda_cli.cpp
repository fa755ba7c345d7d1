// Command-line front end: dataset generation, source training, the shift
// study, hyper-parameter sweeps and report generation.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "onda/csv.hpp"
#include "onda/harness.hpp"
#include "onda/hashing.hpp"
#include "onda/model_io.hpp"

namespace {

using namespace onda;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string source_id;
  std::optional<double> alpha;
  std::optional<std::size_t> nt;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file (defaults otherwise)");
  cmd->add_option("--out", opts.out_dir, "output directory (overrides config out_dir)");
  cmd->add_option("--seed", opts.seed, "single seed override");
  cmd->add_option("--source-id", opts.source_id, "source domain id override");
  cmd->add_option("--alpha", opts.alpha, "adaptation decay override");
  cmd->add_option("--nt", opts.nt, "frames-per-update override");
}

ExperimentConfig make_config(const CommonOpts& opts) {
  ExperimentConfig cfg =
      opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.seed) cfg.study.seeds = {*opts.seed};
  if (!opts.source_id.empty()) cfg.study.sources = {opts.source_id};
  if (opts.alpha) cfg.adaptation.alpha = *opts.alpha;
  if (opts.nt) cfg.adaptation.n_t = *opts.nt;
  cfg.validate();
  return cfg;
}

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

int cmd_generate(const CommonOpts& opts) {
  ExperimentConfig cfg = make_config(opts);
  const std::string dir = cfg.out_dir + "/datasets";
  ensure_dir(dir);
  const Prototypes proto = experiment_prototypes(cfg);
  for (const DomainSpec& spec : domain_grid()) {
    const Dataset ds =
        experiment_dataset(cfg, proto, spec, cfg.data.samples_per_class, "data");
    DatasetManifest manifest;
    manifest.domain = spec;
    manifest.spec_hash = domain_effects_hash(spec, cfg.effects);
    manifest.num_classes = cfg.data.num_classes;
    manifest.num_categories = cfg.data.num_categories;
    manifest.category = proto.category;
    manifest.n_per_class = cfg.data.samples_per_class;
    manifest.seed = cfg.data.seed;
    save_dataset(dir + "/" + spec.id(), manifest, ds);
    std::printf("wrote %s/%s.csv (%zu samples)\n", dir.c_str(), spec.id().c_str(), ds.size());
  }
  return 0;
}

int cmd_train(const CommonOpts& opts) {
  ExperimentConfig cfg = make_config(opts);
  ensure_dir(cfg.out_dir);
  const std::string source_id = cfg.study.sources.front();
  const std::uint64_t seed = cfg.study.seeds.front();
  const Prototypes proto = experiment_prototypes(cfg);
  const Dataset source_ds = experiment_dataset(cfg, proto, DomainSpec::parse(source_id),
                                               cfg.data.samples_per_class, "data");
  const Params model = train_source_model(cfg, source_ds, source_id, seed);
  const double train_acc = evaluate(model, source_ds, Regime::kEval);
  const std::string path =
      cfg.out_dir + "/model_" + source_id + "_seed" + std::to_string(seed) + ".json";
  save_model(path, model);
  std::printf("trained %s (seed %llu): source accuracy %.4f -> %s\n", source_id.c_str(),
              static_cast<unsigned long long>(seed), train_acc, path.c_str());
  return 0;
}

int cmd_study(const CommonOpts& opts) {
  ExperimentConfig cfg = make_config(opts);
  ensure_dir(cfg.out_dir);
  const std::vector<ResultRow> rows = run_shift_study(cfg);
  write_file_atomic(cfg.out_dir + "/results.csv", results_to_csv(rows));
  std::printf("wrote %s/results.csv (%zu rows)\n", cfg.out_dir.c_str(), rows.size());
  return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& param) {
  ExperimentConfig cfg = make_config(opts);
  ensure_dir(cfg.out_dir);
  if (param != "alpha" && param != "nt")
    throw ConfigError("ablate: --param must be 'alpha' or 'nt'");
  const AblationOutput out = run_ablation(cfg, param == "alpha", param == "nt");
  write_trajectories(out, cfg.out_dir);
  std::printf("references: BN %.4f, DIAL %.4f\n", out.bn_reference, out.dial_reference);
  for (const SweepTrajectory& sweep : out.sweeps)
    std::printf("wrote %s/%s (%zu updates)\n", cfg.out_dir.c_str(),
                trajectory_filename(out.param, sweep.value).c_str(), sweep.mean.size());
  return 0;
}

int cmd_report(const CommonOpts& opts) {
  ExperimentConfig cfg = make_config(opts);
  const std::string results_path = cfg.out_dir + "/results.csv";
  const Summary summary = summarize(results_from_csv(read_file(results_path)));
  write_file_atomic(cfg.out_dir + "/summary.txt", format_summary_text(summary));
  write_file_atomic(cfg.out_dir + "/summary.csv", format_summary_csv(summary));
  std::printf("%s", format_summary_text(summary).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online BN-statistics domain adaptation harness"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string ablate_param;

  CLI::App* generate = app.add_subcommand("generate", "materialize the 12-domain grid datasets");
  add_common(generate, opts);
  CLI::App* train_cmd = app.add_subcommand("train", "train a source model and save it");
  add_common(train_cmd, opts);
  CLI::App* study = app.add_subcommand("study", "run the shift study, write results.csv");
  add_common(study, opts);
  CLI::App* ablate = app.add_subcommand("ablate", "sweep alpha or nt, write trajectories");
  add_common(ablate, opts);
  ablate->add_option("--param", ablate_param, "which hyper-parameter to sweep: alpha|nt")
      ->required();
  CLI::App* report = app.add_subcommand("report", "summaries from <out>/results.csv");
  add_common(report, opts);

  try {
    app.parse(argc, argv);
    if (generate->parsed()) return cmd_generate(opts);
    if (train_cmd->parsed()) return cmd_train(opts);
    if (study->parsed()) return cmd_study(opts);
    if (ablate->parsed()) return cmd_ablate(opts, ablate_param);
    if (report->parsed()) return cmd_report(opts);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const onda::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
