#include "onda/adapt.hpp"

#include <cmath>
#include <stdexcept>

#include "onda/csv.hpp"

namespace onda {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double stats_norm(const StatsSource& stats, bool variance) {
  double sq = 0.0;
  for (const ChannelStats& s : stats)
    for (double v : variance ? s.sigma2 : s.mu) sq += v * v;
  return std::sqrt(sq);
}

}  // namespace

void AdaptationConfig::validate() const {
  require(n_t >= 2, "adaptation: n_t must be at least 2");
  require(alpha >= 0.0 && alpha <= 1.0, "adaptation: alpha outside [0,1]");
}

AdaptationState init_adaptation(const StatsSource& source_globals) {
  AdaptationState st;
  st.stats = source_globals;
  st.window.resize(source_globals.size());
  return st;
}

int process_frame(const Params& params, AdaptationState& state, const AdaptationConfig& cfg,
                  const std::vector<double>& frame) {
  cfg.validate();
  require(frame.size() == params.spec.input_dim, "process_frame: frame dimension mismatch");
  require(state.window.size() == params.bn.size(), "process_frame: state/network mismatch");

  Tensor x = Tensor::matrix(1, frame.size());
  x.data = frame;

  ForwardTrace trace;
  Tensor logits = forward(params, x, Regime::kExternal, &state.stats, &trace);
  const int pred = static_cast<int>(argmax_row(logits, 0));

  for (std::size_t l = 0; l < state.window.size(); ++l)
    state.window[l].push_back(trace.pre_bn[l].data);
  ++state.frames_in_window;

  if (state.frames_in_window == cfg.n_t) update_statistics(state, cfg);
  return pred;
}

void update_statistics(AdaptationState& state, const AdaptationConfig& cfg) {
  cfg.validate();
  require(state.frames_in_window == cfg.n_t, "update_statistics: incomplete window");
  const double n = static_cast<double>(cfg.n_t);
  const double bessel = n / (n - 1.0);
  const double a = cfg.alpha;

  for (std::size_t l = 0; l < state.stats.size(); ++l) {
    auto& frames = state.window[l];
    require(frames.size() == cfg.n_t, "update_statistics: incomplete window");
    ChannelStats& global = state.stats[l];
    const std::size_t k = global.mu.size();

    for (std::size_t c = 0; c < k; ++c) {
      double mean = 0.0;
      for (const auto& f : frames) mean += f[c];
      mean /= n;
      double var = 0.0;
      for (const auto& f : frames) {
        const double d = f[c] - mean;
        var += d * d;
      }
      var /= n;
      global.sigma2[c] = (1.0 - a) * global.sigma2[c] + a * bessel * var;
      global.mu[c] = (1.0 - a) * global.mu[c] + a * mean;
    }
    frames.clear();
  }
  state.frames_in_window = 0;
  ++state.updates_done;
}

StreamTrace run_stream(const Params& params, const StatsSource& source_globals,
                       const AdaptationConfig& cfg, const Dataset& stream,
                       bool record_update_accuracy) {
  cfg.validate();
  const std::size_t total = stream.size();
  require(total >= 1, "run_stream: empty stream");
  require(stream.x.rows() == total, "run_stream: feature/label count mismatch");

  AdaptationState state = init_adaptation(source_globals);
  StreamTrace trace;
  trace.predicted.reserve(total);
  trace.correct.reserve(total);

  const std::size_t checkpoint_25 = total / 4;
  const std::size_t checkpoint_50 = total / 2;
  const std::size_t checkpoint_90 = total * 9 / 10;
  StatsSource stats_25 = state.stats, stats_50 = state.stats, stats_90 = state.stats;

  std::vector<double> frame(stream.x.cols());
  for (std::size_t t = 0; t < total; ++t) {
    for (std::size_t j = 0; j < frame.size(); ++j) frame[j] = stream.x.at(t, j);
    const std::size_t updates_before = state.updates_done;
    const int pred = process_frame(params, state, cfg, frame);
    trace.predicted.push_back(pred);
    trace.correct.push_back(pred == stream.y[t] ? 1 : 0);

    if (state.updates_done != updates_before) {
      UpdateSnapshot snap;
      snap.update_index = state.updates_done;
      snap.frame_index = t + 1;
      snap.mu_norm = stats_norm(state.stats, false);
      snap.sigma2_norm = stats_norm(state.stats, true);
      if (record_update_accuracy)
        snap.whole_set_accuracy = evaluate(params, stream, Regime::kExternal, &state.stats);
      trace.updates.push_back(snap);
    }

    const std::size_t processed = t + 1;
    if (processed == checkpoint_25) stats_25 = state.stats;
    if (processed == checkpoint_50) stats_50 = state.stats;
    if (processed == checkpoint_90) stats_90 = state.stats;
  }

  trace.updates_done = state.updates_done;
  trace.acc_25 = evaluate(params, stream, Regime::kExternal, &stats_25);
  trace.acc_50 = evaluate(params, stream, Regime::kExternal, &stats_50);
  trace.acc_90 = evaluate(params, stream, Regime::kExternal, &stats_90);
  return trace;
}

void write_trace_csv(const StreamTrace& trace, const std::string& path) {
  std::string out = "frame_index,update_index,predicted,correct\n";
  std::size_t next_update = 0;
  std::size_t updates_done = 0;
  for (std::size_t t = 0; t < trace.predicted.size(); ++t) {
    while (next_update < trace.updates.size() &&
           trace.updates[next_update].frame_index == t + 1) {
      updates_done = trace.updates[next_update].update_index;
      ++next_update;
    }
    out += csv_join({std::to_string(t), std::to_string(updates_done),
                     std::to_string(trace.predicted[t]),
                     std::to_string(static_cast<int>(trace.correct[t]))});
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_trace_stats_csv(const StreamTrace& trace, const std::string& path) {
  std::string out = "update_index,frame_index,mu_norm,sigma2_norm\n";
  for (const UpdateSnapshot& s : trace.updates) {
    out += csv_join({std::to_string(s.update_index), std::to_string(s.frame_index),
                     format_double(s.mu_norm), format_double(s.sigma2_norm)});
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace onda
