#pragma once

#include "biped/gait_data.hpp"
#include "biped/nn.hpp"

#include <span>
#include <utility>

namespace biped {

struct GaitNetInput {
  double desired_speed = 1.0;   // m/s
  double leg_length_right = 0.9;
  double leg_length_left = 0.9;
  void validate() const;
  Eigen::Vector3d vec() const {
    return {desired_speed, leg_length_right, leg_length_left};
  }
};

// Targets are flattened frame-major: element f*6+j is frame f, joint j.
Vec flatten_frames(const FrameMat& frames);
FrameMat unflatten_frames(const Vec& v);

// Speed-and-morphology conditioned gait generator: a dense net mapping
// (v, l_r, l_l) to 32x6 joint-angle frames, with fixed input/output
// standardization learned from the training split.
struct GaitNetParams {
  nn::Mlp net;                // 3 -> hidden... -> 192
  Vec in_mean, in_std;        // 3
  Vec out_mean, out_std;      // 192

  static GaitNetParams init(int hidden_layers, int width, nn::Act act,
                            Rng& rng);

  Vec forward_raw(const Vec& x) const;  // 192-vector
  GaitCycle forward(const GaitNetInput& x) const;
  void validate() const;

  std::string to_json_string() const;
  static GaitNetParams from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static GaitNetParams load(const std::string& path);
};

struct GaitSample {
  Vec x;       // matches the net input dimension (3 for the gait corpus)
  Vec target;  // matches the net output dimension (192 for the gait corpus)
};

std::vector<GaitSample> make_dataset(const std::vector<GaitCycle>& cycles);

// Mean squared error over all 192 outputs and batch items, in rad^2, plus
// the gradient with respect to the net weights. Deterministic regardless of
// thread count: items are accumulated over a fixed chunk partition.
std::pair<double, nn::Mlp> loss_and_gradient(const GaitNetParams& params,
                                             std::span<const GaitSample> batch,
                                             bool parallel = true);

double dataset_loss(const GaitNetParams& params,
                    std::span<const GaitSample> data);

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 64;
  int max_epochs = 10000;
  int patience = 50;
  std::uint64_t seed = 0;
  int hidden_layers = 2;
  int width = 512;
  nn::Act activation = nn::Act::relu;
  bool parallel = true;
  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  GaitNetParams params;  // best-validation parameters
  std::vector<EpochStats> curve;
  double best_val = 0.0;
  int best_epoch = -1;
  double test_loss = 0.0;
};

class TrainingFailure : public std::runtime_error {
 public:
  TrainingFailure(const std::string& what, GaitNetParams last)
      : std::runtime_error(what), last_params(std::move(last)) {}
  GaitNetParams last_params;
};

// 80/10/10 train/val/test split shuffled by seed; Adam; early stopping on
// validation loss with the configured patience.
TrainResult train(const std::vector<GaitSample>& dataset,
                  const TrainConfig& config);

std::string training_curve_csv(const std::vector<EpochStats>& curve);

struct GridSpec {
  std::vector<int> layers{1, 2, 3};
  std::vector<int> widths{128, 256, 512};
  std::vector<double> learning_rates{1e-3, 1e-4, 1e-5};
  std::vector<int> batch_sizes{32, 64, 128};
  std::vector<nn::Act> activations{nn::Act::relu, nn::Act::tanh};
};

struct GridRow {
  int hidden_layers = 0;
  int width = 0;
  double learning_rate = 0.0;
  int batch_size = 0;
  nn::Act activation = nn::Act::relu;
  double mean_val = 0.0;
  double std_val = 0.0;  // sample std over seeds
  int seeds = 0;
};

// Trains every configuration `n_seeds` times and ranks rows by mean
// validation loss, ascending. Runs execute in parallel; each run owns its
// state and results merge in grid order.
std::vector<GridRow> grid_search(const std::vector<GaitSample>& dataset,
                                 const GridSpec& grid, int n_seeds,
                                 const TrainConfig& base);

std::string grid_table_csv(const std::vector<GridRow>& rows);
std::string grid_table_text(const std::vector<GridRow>& rows);

}  // namespace biped
