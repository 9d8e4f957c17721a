#include "biped/eval.hpp"

#include <cmath>

namespace biped {

std::string demo_name(DemoKind k) {
  switch (k) {
    case DemoKind::velocity_comparison: return "velocity_comparison";
    case DemoKind::rotation: return "rotation";
    case DemoKind::noisy_plane: return "noisy_plane";
    case DemoKind::velocity_tracking: return "velocity_tracking";
  }
  return "?";
}

// Mean CoM forward speed over the second half of the episode's intended
// duration. An episode that falls early stops making progress, so the
// missing time counts as zero motion rather than extrapolating the crash
// momentum.
double realized_speed_second_half(const EpisodeTrace& trace) {
  const std::size_t n = trace.t.size();
  if (n < 2 || trace.max_duration <= 0.0) return 0.0;
  const double half_t = 0.5 * trace.max_duration;
  const double window = trace.max_duration - half_t;
  std::size_t half_idx = n - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (trace.t[i] >= half_t) {
      half_idx = i;
      break;
    }
  }
  return (trace.x_com.back() - trace.x_com[half_idx]) / window;
}

TrialRecord velocity_record(double commanded, const EpisodeTrace& trace) {
  TrialRecord r;
  r.commanded_speed = commanded;
  r.realized_speed = realized_speed_second_half(trace);
  r.range_m = trace.x_com.empty() ? 0.0 : trace.x_com.back() - trace.x_com.front();
  r.reason = trace.reason;
  r.episode_s = trace.duration;
  r.success = trace.reason == DoneReason::time_limit ? 1 : 0;
  const double err = std::abs(r.realized_speed - commanded);
  r.within_band = err <= std::max(0.1 * commanded, 0.05) ? 1 : 0;
  return r;
}

TrialRecord rotation_record(double commanded, double angle_deg,
                            const EpisodeTrace& trace) {
  TrialRecord r = velocity_record(commanded, trace);
  r.ramp_angle_deg = angle_deg;
  return r;
}

TrialRecord noisy_record(double commanded, double omega, double gamma,
                         std::uint64_t plane_seed, const EpisodeTrace& trace,
                         double range_success_threshold) {
  TrialRecord r = velocity_record(commanded, trace);
  r.omega = omega;
  r.gamma = gamma;
  r.plane_seed = plane_seed;
  r.success = r.range_m >= range_success_threshold ? 1 : 0;
  return r;
}

TrialRecord tracking_record(const EpisodeTrace& trace) {
  TrialRecord r;
  r.reason = trace.reason;
  r.episode_s = trace.duration;
  r.success = trace.reason == DoneReason::time_limit ? 1 : 0;
  r.range_m = trace.x_com.empty() ? 0.0 : trace.x_com.back() - trace.x_com.front();
  // centered-window realized speed: exact for piecewise-linear profiles away
  // from the kinks
  const std::size_t n = trace.t.size();
  const std::size_t w = 20;  // 0.2 s at the policy rate
  double mae = 0.0, peak = 0.0;
  std::size_t count = 0;
  for (std::size_t i = w; i + w < n; ++i) {
    const double dt = trace.t[i + w] - trace.t[i - w];
    if (dt <= 1e-9) continue;
    const double v = (trace.x_com[i + w] - trace.x_com[i - w]) / dt;
    const double err = std::abs(v - trace.v_ds[i]);
    mae += err;
    peak = std::max(peak, err);
    ++count;
  }
  r.tracking_mae = count > 0 ? mae / static_cast<double>(count) : 0.0;
  r.tracking_peak_lag = peak;
  return r;
}

void DemoResult::recompute() {
  mse = 0.0;
  mean_success = 0.0;
  mean_range = 0.0;
  mean_tracking_mae = 0.0;
  peak_tracking_lag = 0.0;
  planes.clear();
  if (records.empty()) return;
  for (const TrialRecord& r : records) {
    const double err = r.realized_speed - r.commanded_speed;
    mse += err * err;
    mean_success += r.success;
    mean_range += r.range_m;
    mean_tracking_mae += r.tracking_mae;
    peak_tracking_lag = std::max(peak_tracking_lag, r.tracking_peak_lag);
  }
  const double n = static_cast<double>(records.size());
  mse /= n;
  mean_success /= n;
  mean_range /= n;
  mean_tracking_mae /= n;

  if (kind == DemoKind::noisy_plane) {
    for (const TrialRecord& r : records) {
      PlaneAggregate* agg = nullptr;
      for (PlaneAggregate& p : planes)
        if (p.plane_seed == r.plane_seed) agg = &p;
      if (agg == nullptr) {
        planes.push_back({r.plane_seed, 0.0, 0.0, 0});
        agg = &planes.back();
      }
      agg->mean_range += r.range_m;
      agg->mean_success += r.success;
      agg->trials += 1;
    }
    for (PlaneAggregate& p : planes) {
      p.mean_range /= p.trials;
      p.mean_success /= p.trials;
    }
  }
}

std::string DemoResult::records_csv() const {
  std::string out =
      "demo,commanded_speed,ramp_angle_deg,omega,gamma,plane_seed,seed,"
      "realized_speed,success,range_m,reason,episode_s,within_band,"
      "tracking_mae,tracking_peak_lag\n";
  for (const TrialRecord& r : records) {
    out += demo_name(kind) + ',' + format_double(r.commanded_speed) + ',' +
           format_double(r.ramp_angle_deg) + ',' + format_double(r.omega) +
           ',' + format_double(r.gamma) + ',' + std::to_string(r.plane_seed) +
           ',' + std::to_string(r.seed) + ',' +
           format_double(r.realized_speed) + ',' + std::to_string(r.success) +
           ',' + format_double(r.range_m) + ',' + done_reason_name(r.reason) +
           ',' + format_double(r.episode_s) + ',' +
           std::to_string(r.within_band) + ',' + format_double(r.tracking_mae) +
           ',' + format_double(r.tracking_peak_lag) + '\n';
  }
  return out;
}

std::string DemoResult::plot_tsv() const {
  std::string out;
  switch (kind) {
    case DemoKind::velocity_comparison: {
      out = "commanded\tmean_realized\n";
      std::vector<double> speeds;
      for (const TrialRecord& r : records)
        if (std::find(speeds.begin(), speeds.end(), r.commanded_speed) ==
            speeds.end())
          speeds.push_back(r.commanded_speed);
      for (double v : speeds) {
        double sum = 0.0;
        int n = 0;
        for (const TrialRecord& r : records)
          if (r.commanded_speed == v) {
            sum += r.realized_speed;
            ++n;
          }
        out += format_double_short(v) + '\t' + format_double_short(sum / n) + '\n';
      }
      break;
    }
    case DemoKind::rotation: {
      out = "angle_deg\tmean_success\n";
      std::vector<double> angles;
      for (const TrialRecord& r : records)
        if (std::find(angles.begin(), angles.end(), r.ramp_angle_deg) ==
            angles.end())
          angles.push_back(r.ramp_angle_deg);
      for (double a : angles) {
        double sum = 0.0;
        int n = 0;
        for (const TrialRecord& r : records)
          if (r.ramp_angle_deg == a) {
            sum += r.success;
            ++n;
          }
        out += format_double_short(a) + '\t' + format_double_short(sum / n) + '\n';
      }
      break;
    }
    case DemoKind::noisy_plane: {
      out = "plane\tomega\tmean_range\n";
      for (const PlaneAggregate& p : planes) {
        std::vector<double> omegas;
        for (const TrialRecord& r : records)
          if (r.plane_seed == p.plane_seed &&
              std::find(omegas.begin(), omegas.end(), r.omega) == omegas.end())
            omegas.push_back(r.omega);
        for (double o : omegas) {
          double sum = 0.0;
          int n = 0;
          for (const TrialRecord& r : records)
            if (r.plane_seed == p.plane_seed && r.omega == o) {
              sum += r.range_m;
              ++n;
            }
          out += std::to_string(p.plane_seed) + '\t' + format_double_short(o) +
                 '\t' + format_double_short(sum / n) + '\n';
        }
      }
      break;
    }
    case DemoKind::velocity_tracking:
      out = tracking_series_tsv;
      break;
  }
  return out;
}

namespace {

class PolicyControllerImpl : public Controller {
 public:
  PolicyControllerImpl(const PolicyCheckpoint& checkpoint,
                       const BipedModel& model)
      : params_(checkpoint.params), normalizer_(checkpoint.normalizer) {
    for (int j = 0; j < kNumActuated; ++j)
      limits_[j] = model.torque_limit[static_cast<std::size_t>(j)];
    carry_ = Vec::Zero(std::max(1, params_.actor.carry_dim()));
  }

  void begin_episode(std::uint64_t) override { carry_.setZero(); }

  Vec7 act(const Observation& obs) override {
    Vec carry_out;
    const Vec mean =
        params_.actor.mean(normalizer_.normalize(obs.v), carry_, &carry_out);
    if (params_.actor.carry_dim() > 0) carry_ = carry_out;
    Vec7 torque;
    for (int j = 0; j < kNumActuated; ++j)
      torque[j] = limits_[j] * std::tanh(mean[j]);
    return torque;
  }

 private:
  PolicyParams params_;
  ObsNormalizer normalizer_;
  Vec7 limits_;
  Vec carry_;
};

class RandomTorqueControllerImpl : public Controller {
 public:
  RandomTorqueControllerImpl(const BipedModel& model, std::uint64_t salt)
      : salt_(salt) {
    for (int j = 0; j < kNumActuated; ++j)
      limits_[j] = model.torque_limit[static_cast<std::size_t>(j)];
  }

  void begin_episode(std::uint64_t seed) override {
    rng_ = Rng(splitmix64(seed ^ salt_ ^ 0x52414E44ull));
  }

  Vec7 act(const Observation&) override {
    Vec7 torque;
    for (int j = 0; j < kNumActuated; ++j)
      torque[j] = rng_range(rng_, -limits_[j], limits_[j]);
    return torque;
  }

 private:
  std::uint64_t salt_;
  Vec7 limits_;
  Rng rng_{0};
};

}  // namespace

ControllerFactory policy_controller(const PolicyCheckpoint& checkpoint,
                                    const BipedModel& model) {
  return [checkpoint, model] {
    return std::make_unique<PolicyControllerImpl>(checkpoint, model);
  };
}

ControllerFactory random_torque_controller(const BipedModel& model,
                                           std::uint64_t salt) {
  return [model, salt] {
    return std::make_unique<RandomTorqueControllerImpl>(model, salt);
  };
}

EpisodeTrace run_episode(const BipedModel& model, const GaitNetParams& gait,
                         const EpisodeConfig& config, Controller& controller) {
  Env env(model, gait);
  controller.begin_episode(config.seed);
  Observation obs = env.reset(config);
  EpisodeTrace trace;
  trace.max_duration = config.max_duration;
  trace.t.push_back(0.0);
  trace.v_ds.push_back(config.speed.at(0.0));
  trace.x_com.push_back(env.com().x);
  while (env.episode_active()) {
    const Env::StepOut out = env.step(controller.act(obs));
    obs = out.obs;
    trace.t.push_back(env.episode_time());
    trace.v_ds.push_back(env.commanded_speed());
    trace.x_com.push_back(env.com().x);
    if (out.done) break;
  }
  trace.reason = env.done_reason();
  trace.duration = env.episode_time();
  return trace;
}

EvalConfig EvalConfig::defaults() {
  EvalConfig cfg;
  for (int i = 0; i <= 22; ++i) cfg.speeds.push_back(0.1 * i);
  for (int a = -15; a <= 15; ++a) cfg.angles_deg.push_back(a);
  cfg.rotation_speeds = {0.4, 0.8, 1.2};
  for (int o = 1; o <= 20; ++o) cfg.omegas.push_back(o);
  cfg.tracking_profile = SpeedProfile{{{0.0, 0.5},
                                       {2.0, 0.5},
                                       {7.0, 2.0},
                                       {10.0, 2.0},
                                       {15.0, 0.5},
                                       {16.0, 0.5}}};
  return cfg;
}

namespace {

std::uint64_t trial_seed(std::uint64_t seed, std::size_t condition) {
  return splitmix64(seed * 0x9E3779B97F4A7C15ull + condition + 1);
}

template <class MakeRecord>
DemoResult run_conditions(const BipedModel& model, const GaitNetParams& gait,
                          const ControllerFactory& make_controller,
                          DemoKind kind, bool parallel,
                          const std::vector<EpisodeConfig>& configs,
                          const MakeRecord& make_record) {
  DemoResult result;
  result.kind = kind;
  result.records.resize(configs.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(configs.size()); ++i) {
    const auto ci = static_cast<std::size_t>(i);
    auto controller = make_controller();
    const EpisodeTrace trace =
        run_episode(model, gait, configs[ci], *controller);
    result.records[ci] = make_record(ci, trace);
    result.records[ci].seed = configs[ci].seed;
  }
  result.recompute();
  return result;
}

}  // namespace

DemoResult run_velocity_comparison(const BipedModel& model,
                                   const GaitNetParams& gait,
                                   const ControllerFactory& make_controller,
                                   const EvalConfig& cfg) {
  std::vector<EpisodeConfig> configs;
  std::vector<double> commanded;
  for (std::uint64_t s : cfg.seeds) {
    for (double v : cfg.speeds) {
      EpisodeConfig ep;
      ep.speed = SpeedProfile::constant(v);
      ep.terrain = TerrainProfile::make_flat();
      ep.max_duration = cfg.episode_seconds;
      ep.rsi = cfg.rsi;
      ep.seed = trial_seed(s, configs.size());
      configs.push_back(ep);
      commanded.push_back(v);
    }
  }
  return run_conditions(model, gait, make_controller,
                        DemoKind::velocity_comparison, cfg.parallel, configs,
                        [&](std::size_t i, const EpisodeTrace& trace) {
                          return velocity_record(commanded[i], trace);
                        });
}

DemoResult run_rotation(const BipedModel& model, const GaitNetParams& gait,
                        const ControllerFactory& make_controller,
                        const EvalConfig& cfg) {
  std::vector<EpisodeConfig> configs;
  std::vector<std::pair<double, double>> cond;  // (speed, angle)
  for (std::uint64_t s : cfg.seeds) {
    for (double a : cfg.angles_deg) {
      for (double v : cfg.rotation_speeds) {
        EpisodeConfig ep;
        ep.speed = SpeedProfile::constant(v);
        ep.terrain = TerrainProfile::make_ramp(a * M_PI / 180.0);
        ep.max_duration = cfg.episode_seconds;
        ep.rsi = cfg.rsi;
        ep.seed = trial_seed(s, configs.size());
        configs.push_back(ep);
        cond.emplace_back(v, a);
      }
    }
  }
  return run_conditions(model, gait, make_controller, DemoKind::rotation,
                        cfg.parallel, configs,
                        [&](std::size_t i, const EpisodeTrace& trace) {
                          return rotation_record(cond[i].first, cond[i].second,
                                                 trace);
                        });
}

DemoResult run_noisy_plane(const BipedModel& model, const GaitNetParams& gait,
                           const ControllerFactory& make_controller,
                           const EvalConfig& cfg) {
  std::vector<EpisodeConfig> configs;
  struct Cond {
    double omega, gamma;
    std::uint64_t plane;
  };
  std::vector<Cond> cond;
  for (std::uint64_t plane : cfg.plane_seeds) {
    for (double omega : cfg.omegas) {
      for (double gamma : cfg.gammas) {
        for (std::uint64_t s : cfg.seeds) {
          EpisodeConfig ep;
          ep.speed = SpeedProfile::constant(cfg.noisy_speed);
          ep.terrain = TerrainProfile::make_noisy(omega, gamma, plane);
          ep.max_duration = cfg.episode_seconds;
          ep.rsi = cfg.rsi;
          ep.seed = trial_seed(s, configs.size());
          configs.push_back(ep);
          cond.push_back({omega, gamma, plane});
        }
      }
    }
  }
  return run_conditions(
      model, gait, make_controller, DemoKind::noisy_plane, cfg.parallel,
      configs, [&](std::size_t i, const EpisodeTrace& trace) {
        return noisy_record(cfg.noisy_speed, cond[i].omega, cond[i].gamma,
                            cond[i].plane, trace, cfg.range_success_threshold);
      });
}

DemoResult run_velocity_tracking(const BipedModel& model,
                                 const GaitNetParams& gait,
                                 const ControllerFactory& make_controller,
                                 const EvalConfig& cfg) {
  std::vector<EpisodeConfig> configs;
  const double duration = cfg.tracking_profile.knots.back().first;
  for (std::uint64_t s : cfg.seeds) {
    EpisodeConfig ep;
    ep.speed = cfg.tracking_profile;
    ep.terrain = TerrainProfile::make_flat();
    ep.max_duration = duration;
    ep.rsi = cfg.rsi;
    ep.seed = trial_seed(s, configs.size());
    configs.push_back(ep);
  }
  DemoResult result;
  result.kind = DemoKind::velocity_tracking;
  result.records.resize(configs.size());
  std::vector<EpisodeTrace> traces(configs.size());
#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(configs.size()); ++i) {
    const auto ci = static_cast<std::size_t>(i);
    auto controller = make_controller();
    traces[ci] = run_episode(model, gait, configs[ci], *controller);
    result.records[ci] = tracking_record(traces[ci]);
    result.records[ci].seed = configs[ci].seed;
  }
  if (!traces.empty()) {
    std::string tsv = "t\tdesired\trealized\n";
    const EpisodeTrace& tr = traces.front();
    const std::size_t w = 20;
    for (std::size_t i = w; i + w < tr.t.size(); ++i) {
      const double dt = tr.t[i + w] - tr.t[i - w];
      if (dt <= 1e-9) continue;
      const double v = (tr.x_com[i + w] - tr.x_com[i - w]) / dt;
      tsv += format_double_short(tr.t[i]) + '\t' +
             format_double_short(tr.v_ds[i]) + '\t' + format_double_short(v) +
             '\n';
    }
    result.tracking_series_tsv = std::move(tsv);
  }
  result.recompute();
  return result;
}

// --- table report ------------------------------------------------------------

namespace {

struct Cell {
  bool present = false;
  double value = 0.0;
};

std::array<Cell, 6> row_cells(const ConfigEval& c) {
  std::array<Cell, 6> cells;
  if (c.velocity) cells[0] = {true, c.velocity->mse};
  if (c.rotation) cells[1] = {true, c.rotation->mean_success};
  if (c.noisy) {
    for (const PlaneAggregate& p : c.noisy->planes) {
      if (p.plane_seed == 0) {
        cells[2] = {true, p.mean_success};
        cells[4] = {true, p.mean_range};
      } else if (p.plane_seed == 1) {
        cells[3] = {true, p.mean_success};
        cells[5] = {true, p.mean_range};
      }
    }
  }
  return cells;
}

const char* kColumnNames[6] = {"velocity_mse",  "success_rotation",
                               "success_np0",   "success_np1",
                               "range_np0_m",   "range_np1_m"};

}  // namespace

std::string Table3Report::to_csv() const {
  std::string out = "configuration";
  for (const char* c : kColumnNames) out += std::string(",") + c;
  out += '\n';
  for (const ConfigEval& c : configs) {
    out += c.name;
    for (const Cell& cell : row_cells(c))
      out += ',' + (cell.present ? format_double(cell.value) : std::string());
    out += '\n';
  }
  return out;
}

std::string Table3Report::to_text() const {
  // column 0 (MSE) is best-low, the rest best-high
  std::array<double, 6> best;
  best.fill(std::numeric_limits<double>::quiet_NaN());
  for (const ConfigEval& c : configs) {
    const auto cells = row_cells(c);
    for (int k = 0; k < 6; ++k) {
      if (!cells[static_cast<std::size_t>(k)].present) continue;
      const double v = cells[static_cast<std::size_t>(k)].value;
      if (std::isnan(best[static_cast<std::size_t>(k)]) ||
          (k == 0 ? v < best[static_cast<std::size_t>(k)]
                  : v > best[static_cast<std::size_t>(k)]))
        best[static_cast<std::size_t>(k)] = v;
    }
  }
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-28s %14s %18s %13s %13s %13s %13s\n",
                "configuration", kColumnNames[0], kColumnNames[1],
                kColumnNames[2], kColumnNames[3], kColumnNames[4],
                kColumnNames[5]);
  out += buf;
  for (const ConfigEval& c : configs) {
    const auto cells = row_cells(c);
    std::snprintf(buf, sizeof(buf), "%-28s", c.name.c_str());
    out += buf;
    const int widths[6] = {14, 18, 13, 13, 13, 13};
    for (int k = 0; k < 6; ++k) {
      const Cell& cell = cells[static_cast<std::size_t>(k)];
      if (!cell.present) {
        std::snprintf(buf, sizeof(buf), " %*s", widths[k], "-");
      } else {
        const bool is_best = cell.value == best[static_cast<std::size_t>(k)];
        std::snprintf(buf, sizeof(buf), " %*.*f%s", widths[k] - (is_best ? 1 : 0),
                      k == 0 ? 6 : 3, cell.value, is_best ? "*" : "");
      }
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Table3Report compare_configurations(std::vector<ConfigEval> configs) {
  Table3Report report;
  report.configs = std::move(configs);
  return report;
}

}  // namespace biped
