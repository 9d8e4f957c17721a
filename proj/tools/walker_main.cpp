// walker: command-line front end for the planar biped gait framework.
//
// Subcommands: synth-data, train-gait, grid-search, train-policy, demo,
// report. Every run writes a manifest.json with the effective configuration,
// seeds and input-file hashes next to its outputs.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or input error.

#include "biped/dynamics.hpp"
#include "biped/env.hpp"
#include "biped/eval.hpp"
#include "biped/gait_net.hpp"
#include "biped/gait_synth.hpp"
#include "biped/json_io.hpp"
#include "biped/ppo.hpp"
#include "biped/terrain.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace biped;

namespace {

struct Manifest {
  std::string subcommand;
  Json config = Json::object();
  Json inputs = Json::object();

  void add_input(const std::string& label, const std::string& path) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash_file(path)));
    inputs[label] = Json{{"path", path}, {"fnv1a64", buf}};
  }

  void write(const fs::path& out_dir) const {
    Json j;
    j["tool"] = "walker";
    j["version"] = "0.1.0";
    j["subcommand"] = subcommand;
    j["config"] = config;
    j["inputs"] = inputs;
    write_text_file((out_dir / "manifest.json").string(), j.dump(1));
  }
};

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidData("cannot create output directory: " + out);
  return dir;
}

BipedModel load_model(const std::string& model_path, Manifest& manifest) {
  if (model_path.empty()) return BipedModel::standard();
  manifest.add_input("model", model_path);
  return BipedModel::load(model_path);
}

std::vector<GaitCycle> cycles_from_trials(const std::vector<RawTrial>& trials) {
  std::vector<GaitCycle> cycles;
  for (const RawTrial& t : trials)
    for (const SpectralGait& s : prepare_trial(t))
      cycles.push_back(reconstruct_cycle(s));
  return cycles;
}

std::vector<SpectralGait> spectra_from_trials(
    const std::vector<RawTrial>& trials) {
  std::vector<SpectralGait> specs;
  for (const RawTrial& t : trials)
    for (const SpectralGait& s : prepare_trial(t)) specs.push_back(s);
  return specs;
}

int run_synth_data(int subjects, std::uint64_t seed, int trials_per_subject,
                   const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  SynthConfig synth;
  synth.trials_per_subject = trials_per_subject;
  const auto trials = synthesize_dataset(subjects, seed, synth);
  write_cycle_corpus((dir / "cycles.csv").string(), cycles_from_trials(trials));
  write_spectral_corpus((dir / "spectra.csv").string(),
                        spectra_from_trials(trials));
  Manifest manifest;
  manifest.subcommand = "synth-data";
  manifest.config = {{"subjects", subjects},
                     {"seed", seed},
                     {"trials_per_subject", trials_per_subject},
                     {"out", out}};
  manifest.write(dir);
  std::cerr << "wrote " << (dir / "cycles.csv") << " and spectra.csv\n";
  return 0;
}

int run_train_gait(const std::string& data, const std::string& out,
                   TrainConfig cfg) {
  const fs::path dir = prepare_out_dir(out);
  Manifest manifest;
  manifest.subcommand = "train-gait";
  manifest.add_input("cycles", data);
  const auto dataset = make_dataset(read_cycle_corpus(data));
  const TrainResult result = train(dataset, cfg);
  result.params.save((dir / "gait_net.json").string());
  write_text_file((dir / "curve.csv").string(),
                  training_curve_csv(result.curve));
  manifest.config = {{"data", data},
                     {"learning_rate", cfg.learning_rate},
                     {"batch_size", cfg.batch_size},
                     {"max_epochs", cfg.max_epochs},
                     {"patience", cfg.patience},
                     {"seed", cfg.seed},
                     {"hidden_layers", cfg.hidden_layers},
                     {"width", cfg.width},
                     {"activation", nn::act_name(cfg.activation)},
                     {"out", out}};
  manifest.write(dir);
  std::cerr << "best val " << result.best_val << " (epoch "
            << result.best_epoch << "), test " << result.test_loss << ", "
            << result.curve.size() << " epochs\n";
  return 0;
}

int run_grid_search(const std::string& data, const std::string& out,
                    int seeds, TrainConfig base) {
  const fs::path dir = prepare_out_dir(out);
  Manifest manifest;
  manifest.subcommand = "grid-search";
  manifest.add_input("cycles", data);
  const auto dataset = make_dataset(read_cycle_corpus(data));
  const auto rows = grid_search(dataset, GridSpec{}, seeds, base);
  write_text_file((dir / "grid.csv").string(), grid_table_csv(rows));
  write_text_file((dir / "grid.txt").string(), grid_table_text(rows));
  manifest.config = {{"data", data},
                     {"seeds", seeds},
                     {"max_epochs", base.max_epochs},
                     {"patience", base.patience},
                     {"base_seed", base.seed},
                     {"out", out}};
  manifest.write(dir);
  std::cerr << "ranked " << rows.size() << " configurations\n";
  std::cout << grid_table_text(rows);
  return 0;
}

int run_train_policy(const std::string& gait_path, const std::string& model_path,
                     const std::string& out, PpoConfig cfg,
                     const std::string& resume_path) {
  const fs::path dir = prepare_out_dir(out);
  Manifest manifest;
  manifest.subcommand = "train-policy";
  manifest.add_input("gait_net", gait_path);
  const GaitNetParams gait = GaitNetParams::load(gait_path);
  const BipedModel model = load_model(model_path, manifest);

  std::optional<PolicyCheckpoint> resume;
  if (!resume_path.empty()) {
    manifest.add_input("resume", resume_path);
    resume = PolicyCheckpoint::load(resume_path);
  }

  auto sink = [&](const PolicyCheckpoint& ck, int update) {
    ck.save((dir / ("checkpoint_" + std::to_string(update) + ".json")).string());
  };
  const TrainPolicyResult result = train_policy(
      model, gait, cfg, sink, resume ? &*resume : nullptr);
  result.checkpoint.save((dir / "checkpoint.json").string());
  write_text_file((dir / "training_log.csv").string(),
                  training_log_csv(result.log));

  manifest.config = {{"gait", gait_path},
                     {"arch", arch_name(cfg.arch)},
                     {"seed", cfg.seed},
                     {"total_steps", cfg.total_steps},
                     {"n_steps", cfg.n_steps},
                     {"workers", cfg.workers},
                     {"decay_alpha", cfg.decay_alpha},
                     {"rsi", cfg.rsi},
                     {"imitation_enabled", cfg.imitation_enabled},
                     {"reference_in_obs", cfg.reference_in_obs},
                     {"out", out}};
  manifest.write(dir);
  if (!result.log.empty()) {
    const IterStats& last = result.log.back();
    std::cerr << "finished at step " << last.step << ", mean return "
              << last.mean_return << ", mean length " << last.mean_length
              << "\n";
  }
  return 0;
}

EvalConfig eval_config_from_flags(double episode_seconds, int seeds) {
  EvalConfig cfg = EvalConfig::defaults();
  cfg.episode_seconds = episode_seconds;
  cfg.seeds.clear();
  for (int s = 0; s < seeds; ++s)
    cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  return cfg;
}

ControllerFactory controller_from_spec(const std::string& checkpoint,
                                       const BipedModel& model,
                                       Manifest& manifest,
                                       std::optional<PolicyCheckpoint>& keep) {
  if (checkpoint.rfind("random:", 0) == 0) {
    const auto salt = static_cast<std::uint64_t>(
        std::stoull(checkpoint.substr(7)));
    manifest.config["controller"] = checkpoint;
    return random_torque_controller(model, salt);
  }
  manifest.add_input("checkpoint", checkpoint);
  keep = PolicyCheckpoint::load(checkpoint);
  return policy_controller(*keep, model);
}

int run_demo(const std::string& kind, const std::string& checkpoint,
             const std::string& model_path, const std::string& out,
             double episode_seconds, int seeds) {
  const fs::path dir = prepare_out_dir(out);
  Manifest manifest;
  manifest.subcommand = "demo " + kind;
  const BipedModel model = load_model(model_path, manifest);
  std::optional<PolicyCheckpoint> ck;
  const ControllerFactory factory =
      controller_from_spec(checkpoint, model, manifest, ck);

  // the reference generator the checkpoint was trained against
  GaitNetParams gait;
  if (ck) {
    // demos need a gait net for reference playback; prefer a sibling file
    const fs::path sibling = fs::path(checkpoint).parent_path() / "gait_net.json";
    if (fs::exists(sibling)) {
      manifest.add_input("gait_net", sibling.string());
      gait = GaitNetParams::load(sibling.string());
    } else {
      throw InvalidData(
          "demo: no gait_net.json next to the checkpoint; pass --gait");
    }
  } else {
    Rng rng(1);
    gait = GaitNetParams::init(1, 8, nn::Act::relu, rng);
    gait.net.setZero();
  }

  const EvalConfig cfg = eval_config_from_flags(episode_seconds, seeds);
  DemoResult result;
  if (kind == "velocity")
    result = run_velocity_comparison(model, gait, factory, cfg);
  else if (kind == "rotation")
    result = run_rotation(model, gait, factory, cfg);
  else if (kind == "noisy")
    result = run_noisy_plane(model, gait, factory, cfg);
  else if (kind == "tracking")
    result = run_velocity_tracking(model, gait, factory, cfg);
  else
    throw InvalidData("demo: unknown kind " + kind);

  write_text_file((dir / "records.csv").string(), result.records_csv());
  write_text_file((dir / "plot.tsv").string(), result.plot_tsv());
  manifest.config["kind"] = kind;
  manifest.config["episode_seconds"] = episode_seconds;
  manifest.config["seeds"] = seeds;
  manifest.config["out"] = out;
  manifest.write(dir);
  std::cerr << demo_name(result.kind) << ": " << result.records.size()
            << " trials, mse " << result.mse << ", success "
            << result.mean_success << ", range " << result.mean_range << "\n";
  return 0;
}

// Gait nets per checkpoint come from sibling gait_net.json files.
int run_report(const std::vector<std::string>& checkpoints,
               const std::string& model_path, const std::string& out,
               double episode_seconds, int seeds) {
  const fs::path dir = prepare_out_dir(out);
  Manifest manifest;
  manifest.subcommand = "report table3";
  const BipedModel model = load_model(model_path, manifest);
  const EvalConfig cfg = eval_config_from_flags(episode_seconds, seeds);

  std::vector<ConfigEval> evals;
  for (const std::string& path : checkpoints) {
    std::optional<PolicyCheckpoint> ck;
    ControllerFactory factory =
        controller_from_spec(path, model, manifest, ck);
    GaitNetParams gait;
    if (ck) {
      const fs::path sibling = fs::path(path).parent_path() / "gait_net.json";
      if (!fs::exists(sibling))
        throw InvalidData("report: no gait_net.json next to " + path);
      gait = GaitNetParams::load(sibling.string());
    } else {
      Rng rng(1);
      gait = GaitNetParams::init(1, 8, nn::Act::relu, rng);
      gait.net.setZero();
    }
    ConfigEval eval;
    eval.name = ck ? fs::path(path).parent_path().filename().string() : path;
    if (eval.name.empty()) eval.name = path;
    eval.velocity = run_velocity_comparison(model, gait, factory, cfg);
    eval.rotation = run_rotation(model, gait, factory, cfg);
    eval.noisy = run_noisy_plane(model, gait, factory, cfg);
    evals.push_back(std::move(eval));
  }
  const Table3Report report = compare_configurations(std::move(evals));
  write_text_file((dir / "table3.csv").string(), report.to_csv());
  write_text_file((dir / "table3.txt").string(), report.to_text());
  manifest.config = {{"episode_seconds", episode_seconds},
                     {"seeds", seeds},
                     {"out", out}};
  manifest.write(dir);
  std::cout << report.to_text();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planar biped gait generation and torque-policy training"};
  app.require_subcommand(1);
  app.set_config("--config");

  // synth-data
  auto* synth = app.add_subcommand("synth-data", "generate a gait-cycle corpus");
  int subjects = 20;
  std::uint64_t seed = 0;
  int trials_per_subject = 6;
  std::string out = "out";
  synth->add_option("--subjects", subjects, "subjects to synthesize");
  synth->add_option("--seed", seed, "corpus seed");
  synth->add_option("--trials-per-subject", trials_per_subject,
                    "trials per subject");
  synth->add_option("--out", out, "output directory")->required();

  // train-gait
  auto* tg = app.add_subcommand("train-gait", "train the gait generator net");
  std::string data;
  TrainConfig gait_cfg;
  gait_cfg.max_epochs = 2000;
  std::string activation = "relu";
  tg->add_option("--data", data, "cycle corpus csv")->required();
  tg->add_option("--out", out, "output directory")->required();
  tg->add_option("--lr", gait_cfg.learning_rate, "learning rate");
  tg->add_option("--batch", gait_cfg.batch_size, "batch size");
  tg->add_option("--epochs", gait_cfg.max_epochs, "epoch budget");
  tg->add_option("--patience", gait_cfg.patience, "early-stopping patience");
  tg->add_option("--seed", gait_cfg.seed, "training seed");
  tg->add_option("--layers", gait_cfg.hidden_layers, "hidden layers");
  tg->add_option("--width", gait_cfg.width, "hidden width");
  tg->add_option("--activation", activation, "relu|tanh");

  // grid-search
  auto* gs = app.add_subcommand("grid-search",
                                "rank gait-net configurations on a corpus");
  int grid_seeds = 5;
  TrainConfig grid_base;
  grid_base.max_epochs = 200;
  gs->add_option("--data", data, "cycle corpus csv")->required();
  gs->add_option("--out", out, "output directory")->required();
  gs->add_option("--seeds", grid_seeds, "seeds per configuration");
  gs->add_option("--epochs", grid_base.max_epochs, "epoch budget per run");
  gs->add_option("--patience", grid_base.patience, "early-stopping patience");
  gs->add_option("--seed", grid_base.seed, "base seed");

  // train-policy
  auto* tp = app.add_subcommand("train-policy", "train the torque policy");
  std::string gait_path, model_path, resume_path, arch = "config1";
  PpoConfig ppo_cfg = PpoConfig::desk_scale();
  bool full_scale = false, no_rsi = false, no_imitation = false,
       no_reference_obs = false;
  tp->add_option("--gait", gait_path, "gait net parameter file")->required();
  tp->add_option("--out", out, "output directory")->required();
  tp->add_option("--model", model_path, "biped model file");
  tp->add_option("--arch", arch, "config1|config2|config3");
  tp->add_option("--seed", ppo_cfg.seed, "training seed");
  tp->add_option("--total-steps", ppo_cfg.total_steps, "environment steps");
  tp->add_option("--n-steps", ppo_cfg.n_steps, "rollout horizon per worker");
  tp->add_option("--workers", ppo_cfg.workers, "parallel rollout workers");
  tp->add_option("--alpha", ppo_cfg.decay_alpha, "imitation decay alpha");
  tp->add_option("--checkpoint-every", ppo_cfg.checkpoint_every,
                 "checkpoint cadence in updates");
  tp->add_option("--resume", resume_path, "checkpoint to resume from");
  tp->add_flag("--full-scale", full_scale,
               "paper-scale horizon and step budget (15M steps)");
  tp->add_flag("--no-rsi", no_rsi, "disable reference state initialization");
  tp->add_flag("--no-imitation", no_imitation,
               "disable the imitation reward (task-only baseline)");
  tp->add_flag("--no-reference-obs", no_reference_obs,
               "zero the reference entries of the observation");

  // demo
  auto* demo = app.add_subcommand("demo", "run an evaluation demo");
  std::string demo_kind, checkpoint;
  double episode_seconds = 10.0;
  int eval_seeds = 3;
  demo->add_option("kind", demo_kind, "velocity|rotation|noisy|tracking")
      ->required();
  demo->add_option("--checkpoint", checkpoint,
                   "checkpoint file, or random:<seed>")
      ->required();
  demo->add_option("--model", model_path, "biped model file");
  demo->add_option("--out", out, "output directory")->required();
  demo->add_option("--episode-seconds", episode_seconds, "episode length");
  demo->add_option("--seeds", eval_seeds, "evaluation seeds");

  // report
  auto* report = app.add_subcommand("report", "aggregate demo metrics");
  std::string table_kind;
  std::vector<std::string> report_checkpoints;
  report->add_option("kind", table_kind, "table3")->required();
  report->add_option("--checkpoints", report_checkpoints,
                     "checkpoint files (comma separated)")
      ->required()
      ->delimiter(',');
  report->add_option("--model", model_path, "biped model file");
  report->add_option("--out", out, "output directory")->required();
  report->add_option("--episode-seconds", episode_seconds, "episode length");
  report->add_option("--seeds", eval_seeds, "evaluation seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) return run_synth_data(subjects, seed, trials_per_subject, out);
    if (*tg) {
      gait_cfg.activation = nn::parse_act(activation);
      return run_train_gait(data, out, gait_cfg);
    }
    if (*gs) return run_grid_search(data, out, grid_seeds, grid_base);
    if (*tp) {
      ppo_cfg.arch = parse_arch(arch);
      if (full_scale) {
        ppo_cfg.n_steps = 8192;
        ppo_cfg.workers = 4;
        ppo_cfg.total_steps = 15000000;
      }
      ppo_cfg.rsi = !no_rsi;
      ppo_cfg.imitation_enabled = !no_imitation;
      ppo_cfg.reference_in_obs = !no_reference_obs;
      return run_train_policy(gait_path, model_path, out, ppo_cfg, resume_path);
    }
    if (*demo)
      return run_demo(demo_kind, checkpoint, model_path, out, episode_seconds,
                      eval_seeds);
    if (*report) {
      if (table_kind != "table3")
        throw InvalidData("report: unknown kind " + table_kind);
      return run_report(report_checkpoints, model_path, out, episode_seconds,
                        eval_seeds);
    }
  } catch (const InvalidData& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
