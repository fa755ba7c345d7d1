#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "onda/adapt.hpp"
#include "onda/dial.hpp"
#include "onda/domains.hpp"

namespace onda {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  std::size_t dim = 16;
  std::size_t num_classes = 9;
  std::size_t num_categories = 3;
  std::size_t samples_per_class = 40;
  std::size_t clutter_dims = 4;
  double separation = 3.0;
  double within_std = 1.0;
  double anchor_scale = 5.0;
  double class_scale = 0.9;
  std::uint64_t seed = 7;
};

struct StudyConfig {
  std::vector<std::string> sources{"artificial-kinect-white", "cloudy-webcam-brown"};
  std::vector<std::string> targets;  // empty means every other grid domain
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

struct AblationConfig {
  std::vector<double> alpha_values{0.01, 0.05, 0.1, 0.2, 0.5};
  std::vector<std::size_t> nt_values{2, 5, 10, 20, 30};
  std::string source = "cloudy-webcam-brown";
  std::string target = "artificial-kinect-white";
  // Longer stream than the study so every swept value converges within one
  // pass and the trajectory tails are stationary.
  std::size_t samples_per_class = 160;
};

// One JSON document drives everything; every default below is a config
// value and can be overridden field by field.
struct ExperimentConfig {
  NetworkSpec network;
  OptConfig opt;
  AdaptationConfig adaptation;
  DataConfig data;
  DomainEffects effects = DomainEffects::defaults();
  StudyConfig study;
  AblationConfig ablation;
  std::string out_dir = "out";

  void validate() const;  // throws ConfigError
};

ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

struct ResultRow {
  std::string source, target;
  int shift_distance = 0;
  std::string method;  // BN, ONDA-25, ONDA-50, ONDA-90, DIAL
  std::uint64_t seed = 0;
  double accuracy = 0.0;
};

// For every (source, target, seed): frozen BN accuracy, the three online
// checkpoints from a per-seed stream shuffle, and the offline per-domain-BN
// upper bound, all derived from the same source-trained parameters.
std::vector<ResultRow> run_shift_study(const ExperimentConfig& cfg);

std::string results_to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> results_from_csv(const std::string& text);

struct SweepTrajectory {
  double value = 0.0;
  std::vector<std::vector<double>> per_seed;  // [seed][update] whole-set accuracy
  std::vector<double> mean, stdev;            // across seeds, per update
};

struct AblationOutput {
  std::string param;  // "alpha" or "nt"
  std::vector<SweepTrajectory> sweeps;
  double bn_reference = 0.0;
  double dial_reference = 0.0;
};

// Single pre-trained source model; the seeds only reshuffle the stream.
// Exactly one of the two hyper-parameters must be swept.
AblationOutput run_ablation(const ExperimentConfig& cfg, bool sweep_alpha, bool sweep_nt);

std::string trajectory_filename(const std::string& param, double value);
void write_trajectories(const AblationOutput& out, const std::string& dir);

struct TargetSummary {
  std::string source, target;
  int shift = 0;
  double bn = 0, onda25 = 0, onda50 = 0, onda90 = 0, dial = 0;
  double gain90 = 0;               // onda90 - bn
  double gap = 0;                  // dial - bn
  std::optional<double> closure;   // gain90 / gap, only when gap >= 0.05
};

struct ShiftSummary {
  int shift = 0;
  std::size_t cells = 0;
  double mean_bn = 0, mean_onda90 = 0, mean_gain = 0;
};

struct Summary {
  std::vector<TargetSummary> targets;  // sorted by (source, target)
  std::vector<ShiftSummary> shifts;    // sorted by shift distance
  std::map<std::string, std::array<double, 3>> progression;  // source -> mean 25/50/90
  std::optional<double> mean_closure;
};

Summary summarize(const std::vector<ResultRow>& rows);
std::string format_summary_text(const Summary& s);
std::string format_summary_csv(const Summary& s);

// Shared plumbing, also used by the CLI and the test suites.
Prototypes experiment_prototypes(const ExperimentConfig& cfg);
Dataset experiment_dataset(const ExperimentConfig& cfg, const Prototypes& proto,
                           const DomainSpec& spec, std::size_t n_per_class,
                           std::string_view tag);
Params train_source_model(const ExperimentConfig& cfg, const Dataset& source_ds,
                          const std::string& source_id, std::uint64_t seed);
Dataset shuffled_stream(const Dataset& ds, const std::string& target_id, std::uint64_t seed);

}  // namespace onda
