#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "onda/network.hpp"

namespace onda {

// Online adaptation of BN statistics from a frame stream. Frames are
// predicted with the current global estimate; every n_t frames the window's
// partial statistics are folded into the globals with decay alpha:
//   sigma2_t = (1-a) sigma2_{t-1} + a * n_t/(n_t-1) * sigma2_hat
//   mu_t     = (1-a) mu_{t-1}     + a * mu_hat
struct AdaptationConfig {
  std::size_t n_t = 10;  // frames per statistics update
  double alpha = 0.1;    // moving-average decay

  void validate() const;
};

struct AdaptationState {
  StatsSource stats;  // current global (mu_t, sigma2_t) per BN layer
  // Pre-normalization activations buffered for the current window,
  // [layer][frame][channel].
  std::vector<std::vector<std::vector<double>>> window;
  std::size_t frames_in_window = 0;
  std::size_t updates_done = 0;
};

// At t=0 the globals equal the source-trained statistics.
AdaptationState init_adaptation(const StatsSource& source_globals);

// Predicts one frame with the current globals and buffers its pre-BN
// activations; fires update_statistics when the window fills.
int process_frame(const Params& params, AdaptationState& state, const AdaptationConfig& cfg,
                  const std::vector<double>& frame);

// Folds the full window into the globals and clears it. Errors if the
// window does not hold exactly n_t frames.
void update_statistics(AdaptationState& state, const AdaptationConfig& cfg);

struct UpdateSnapshot {
  std::size_t update_index = 0;
  std::size_t frame_index = 0;  // frames processed when the update fired
  double mu_norm = 0.0;         // L2 norm over all layers/channels
  double sigma2_norm = 0.0;
  double whole_set_accuracy = -1.0;  // filled only when requested
};

struct StreamTrace {
  std::vector<int> predicted;
  std::vector<std::uint8_t> correct;
  std::vector<UpdateSnapshot> updates;
  std::size_t updates_done = 0;
  // Whole-target-set accuracy with the statistics held after 25%, 50% and
  // 90% of the stream.
  double acc_25 = 0.0, acc_50 = 0.0, acc_90 = 0.0;
};

// One pass over the stream. Labels are used for scoring only; the adaptation
// path never reads them. A trailing window shorter than n_t is discarded.
StreamTrace run_stream(const Params& params, const StatsSource& source_globals,
                       const AdaptationConfig& cfg, const Dataset& stream,
                       bool record_update_accuracy = false);

void write_trace_csv(const StreamTrace& trace, const std::string& path);
void write_trace_stats_csv(const StreamTrace& trace, const std::string& path);

}  // namespace onda
