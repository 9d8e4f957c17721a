#include "biped/gait_net.hpp"

#include "biped/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace biped {

void GaitNetInput::validate() const {
  if (!(desired_speed >= 0.0 && desired_speed <= 2.5))
    throw InvalidData("GaitNetInput: speed outside [0, 2.5]");
  Morphology m{leg_length_right, leg_length_left};
  m.validate();
}

Vec flatten_frames(const FrameMat& frames) {
  Vec v(kCycleFrames * kJointChannels);
  for (int f = 0; f < kCycleFrames; ++f)
    for (int j = 0; j < kJointChannels; ++j)
      v[f * kJointChannels + j] = frames(f, j);
  return v;
}

FrameMat unflatten_frames(const Vec& v) {
  if (v.size() != kCycleFrames * kJointChannels)
    throw InvalidData("unflatten_frames: expected 192 values");
  FrameMat frames;
  for (int f = 0; f < kCycleFrames; ++f)
    for (int j = 0; j < kJointChannels; ++j)
      frames(f, j) = v[f * kJointChannels + j];
  return frames;
}

GaitNetParams GaitNetParams::init(int hidden_layers, int width, nn::Act act,
                                  Rng& rng) {
  std::vector<int> sizes{3};
  for (int l = 0; l < hidden_layers; ++l) sizes.push_back(width);
  sizes.push_back(kCycleFrames * kJointChannels);
  GaitNetParams p;
  p.net = nn::Mlp::make(sizes, act, rng);
  p.in_mean = Vec::Zero(3);
  p.in_std = Vec::Ones(3);
  p.out_mean = Vec::Zero(kCycleFrames * kJointChannels);
  p.out_std = Vec::Ones(kCycleFrames * kJointChannels);
  return p;
}

Vec GaitNetParams::forward_raw(const Vec& x) const {
  const Vec xn = (x - in_mean).cwiseQuotient(in_std);
  const Vec z = net.forward(xn);
  if (!z.allFinite()) throw InvalidData("gait net: non-finite output");
  return out_mean + out_std.cwiseProduct(z);
}

GaitCycle GaitNetParams::forward(const GaitNetInput& x) const {
  GaitCycle cycle;
  cycle.frames = unflatten_frames(forward_raw(x.vec()));
  cycle.speed = x.desired_speed;
  cycle.morphology = {x.leg_length_right, x.leg_length_left};
  return cycle;
}

void GaitNetParams::validate() const {
  if (net.out_dim() != kCycleFrames * kJointChannels)
    throw InvalidData("GaitNetParams: output dimension must be 192");
  if (net.in_dim() != 3) throw InvalidData("GaitNetParams: input dimension 3");
  if (!net.allFinite()) throw InvalidData("GaitNetParams: non-finite weights");
  if ((in_std.array() <= 0.0).any() || (out_std.array() <= 0.0).any())
    throw InvalidData("GaitNetParams: std constants must be positive");
}

std::string GaitNetParams::to_json_string() const {
  Json j;
  j["format"] = "gait_net";
  j["version"] = 1;
  j["net"] = json_from_mlp(net);
  j["in_mean"] = json_from_vec(in_mean);
  j["in_std"] = json_from_vec(in_std);
  j["out_mean"] = json_from_vec(out_mean);
  j["out_std"] = json_from_vec(out_std);
  return j.dump(1);
}

GaitNetParams GaitNetParams::from_json_string(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidData(std::string("gait net file: ") + e.what());
  }
  if (j.value("format", "") != "gait_net")
    throw InvalidData("gait net file: wrong format tag");
  GaitNetParams p;
  p.net = mlp_from_json(j.at("net"));
  p.in_mean = vec_from_json(j.at("in_mean"));
  p.in_std = vec_from_json(j.at("in_std"));
  p.out_mean = vec_from_json(j.at("out_mean"));
  p.out_std = vec_from_json(j.at("out_std"));
  p.validate();
  return p;
}

void GaitNetParams::save(const std::string& path) const {
  write_text_file(path, to_json_string());
}

GaitNetParams GaitNetParams::load(const std::string& path) {
  return from_json_string(read_text_file(path));
}

std::vector<GaitSample> make_dataset(const std::vector<GaitCycle>& cycles) {
  std::vector<GaitSample> out;
  out.reserve(cycles.size());
  for (const GaitCycle& c : cycles) {
    GaitSample s;
    s.x = Eigen::Vector3d(c.speed, c.morphology.leg_length_right,
                          c.morphology.leg_length_left);
    s.target = flatten_frames(c.frames);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

constexpr std::size_t kGradChunks = 16;

}  // namespace

std::pair<double, nn::Mlp> loss_and_gradient(const GaitNetParams& params,
                                             std::span<const GaitSample> batch,
                                             bool parallel) {
  if (batch.empty()) throw InvalidData("loss_and_gradient: empty batch");
  const auto out_dim = static_cast<double>(params.net.out_dim());
  const double inv = 1.0 / (static_cast<double>(batch.size()) * out_dim);

  const std::size_t n_chunks = std::min(kGradChunks, batch.size());
  std::vector<nn::Mlp> grads(n_chunks, params.net.zeros_like());
  std::vector<double> sse(n_chunks, 0.0);

  par::chunked(batch.size(), n_chunks, parallel,
               [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    const auto nb = static_cast<Eigen::Index>(end - begin);
    Mat x(params.net.in_dim(), nb), t(params.net.out_dim(), nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
      x.col(i) = (batch[begin + static_cast<std::size_t>(i)].x - params.in_mean)
                     .cwiseQuotient(params.in_std);
      t.col(i) = batch[begin + static_cast<std::size_t>(i)].target;
    }
    nn::Mlp::Tape tape;
    const Mat z = params.net.forward_tape(x, tape);
    Mat y = z;
    for (Eigen::Index i = 0; i < nb; ++i)
      y.col(i) = params.out_mean + params.out_std.cwiseProduct(y.col(i));
    const Mat err = y - t;
    sse[chunk] = err.squaredNorm();
    Mat dz = err;
    for (Eigen::Index i = 0; i < nb; ++i)
      dz.col(i) = (2.0 * inv) * params.out_std.cwiseProduct(dz.col(i));
    params.net.backward(tape, dz, grads[chunk]);
  });

  nn::Mlp grad = params.net.zeros_like();
  double total_sse = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    grad.add_scaled(grads[c], 1.0);
    total_sse += sse[c];
  }
  return {total_sse * inv, std::move(grad)};
}

double dataset_loss(const GaitNetParams& params,
                    std::span<const GaitSample> data) {
  if (data.empty()) return 0.0;
  double sse = 0.0;
  for (const GaitSample& s : data) {
    const Vec y = params.forward_raw(s.x);
    sse += (y - s.target).squaredNorm();
  }
  return sse / (static_cast<double>(data.size()) *
                static_cast<double>(params.net.out_dim()));
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) && learning_rate != 0.0)
    throw InvalidData("TrainConfig: learning_rate must be >= 0");
  if (batch_size < 1) throw InvalidData("TrainConfig: batch_size >= 1");
  if (patience < 1) throw InvalidData("TrainConfig: patience >= 1");
  if (hidden_layers < 1 || width < 1)
    throw InvalidData("TrainConfig: bad architecture");
}

TrainResult train(const std::vector<GaitSample>& dataset,
                  const TrainConfig& config) {
  config.validate();
  if (dataset.size() < 2 * static_cast<std::size_t>(config.batch_size))
    throw InvalidData("train: dataset smaller than two batches");

  Rng rng(config.seed);

  // deterministic 80/10/10 split
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1],
              order[static_cast<std::size_t>(rng_below(rng, static_cast<std::int64_t>(i)))]);
  const auto n_train = static_cast<std::size_t>(0.8 * static_cast<double>(order.size()));
  const auto n_val = static_cast<std::size_t>(0.1 * static_cast<double>(order.size()));
  std::vector<GaitSample> train_set, val_set, test_set;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const GaitSample& s = dataset[order[i]];
    if (i < n_train)
      train_set.push_back(s);
    else if (i < n_train + n_val)
      val_set.push_back(s);
    else
      test_set.push_back(s);
  }
  if (val_set.empty()) val_set.push_back(train_set.back());

  GaitNetParams params = GaitNetParams::init(config.hidden_layers, config.width,
                                             config.activation, rng);

  // standardization constants from the training split
  const auto out_dim = static_cast<Eigen::Index>(kCycleFrames * kJointChannels);
  Vec in_mean = Vec::Zero(3), out_mean = Vec::Zero(out_dim);
  for (const auto& s : train_set) {
    in_mean += s.x;
    out_mean += s.target;
  }
  in_mean /= static_cast<double>(train_set.size());
  out_mean /= static_cast<double>(train_set.size());
  Vec in_var = Vec::Zero(3), out_var = Vec::Zero(out_dim);
  for (const auto& s : train_set) {
    in_var += (s.x - in_mean).cwiseAbs2();
    out_var += (s.target - out_mean).cwiseAbs2();
  }
  in_var /= static_cast<double>(train_set.size());
  out_var /= static_cast<double>(train_set.size());
  auto safe_std = [](const Vec& var) {
    Vec s = var.cwiseSqrt();
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (!(s[i] > 1e-8)) s[i] = 1.0;
    return s;
  };
  params.in_mean = in_mean;
  params.in_std = safe_std(in_var);
  params.out_mean = out_mean;
  params.out_std = safe_std(out_var);

  nn::Adam adam;
  Vec theta = params.net.flatten();
  adam.init(theta.size());

  TrainResult result;
  result.params = params;
  result.best_val = std::numeric_limits<double>::infinity();
  int wait = 0;

  std::vector<std::size_t> idx(train_set.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<GaitSample> batch;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1],
                idx[static_cast<std::size_t>(rng_below(rng, static_cast<std::int64_t>(i)))]);
    double epoch_sse_norm = 0.0;
    std::size_t seen = 0;
    for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(idx.size(), at + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = at; i < end; ++i) batch.push_back(train_set[idx[i]]);
      auto [loss, grad] = loss_and_gradient(params, batch, config.parallel);
      if (!std::isfinite(loss))
        throw TrainingFailure("train: loss diverged", result.params);
      epoch_sse_norm += loss * static_cast<double>(batch.size());
      seen += batch.size();
      theta = params.net.flatten();
      adam.step(theta, grad.flatten(), config.learning_rate);
      params.net.unflatten(theta);
    }
    EpochStats stats;
    stats.train_loss = epoch_sse_norm / static_cast<double>(seen);
    stats.val_loss = dataset_loss(params, val_set);
    result.curve.push_back(stats);
    if (!std::isfinite(stats.val_loss))
      throw TrainingFailure("train: validation loss diverged", result.params);

    if (stats.val_loss < result.best_val) {
      result.best_val = stats.val_loss;
      result.best_epoch = epoch;
      result.params = params;
      wait = 0;
    } else if (++wait >= config.patience) {
      break;
    }
  }
  result.test_loss = dataset_loss(result.params, test_set);
  return result;
}

std::string training_curve_csv(const std::vector<EpochStats>& curve) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < curve.size(); ++e) {
    out += std::to_string(e) + ',' + format_double(curve[e].train_loss) + ',' +
           format_double(curve[e].val_loss) + '\n';
  }
  return out;
}

std::vector<GridRow> grid_search(const std::vector<GaitSample>& dataset,
                                 const GridSpec& grid, int n_seeds,
                                 const TrainConfig& base) {
  if (grid.layers.empty() || grid.widths.empty() || grid.learning_rates.empty() ||
      grid.batch_sizes.empty() || grid.activations.empty() || n_seeds < 1)
    throw InvalidData("grid_search: empty grid");

  std::vector<GridRow> rows;
  for (int l : grid.layers)
    for (int w : grid.widths)
      for (double lr : grid.learning_rates)
        for (int bs : grid.batch_sizes)
          for (nn::Act act : grid.activations) {
            GridRow row;
            row.hidden_layers = l;
            row.width = w;
            row.learning_rate = lr;
            row.batch_size = bs;
            row.activation = act;
            row.seeds = n_seeds;
            rows.push_back(row);
          }

  const std::size_t n_runs = rows.size() * static_cast<std::size_t>(n_seeds);
  std::vector<double> val(n_runs, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(n_runs); ++r) {
    const auto ri = static_cast<std::size_t>(r) / static_cast<std::size_t>(n_seeds);
    const auto s = static_cast<std::size_t>(r) % static_cast<std::size_t>(n_seeds);
    TrainConfig cfg = base;
    cfg.hidden_layers = rows[ri].hidden_layers;
    cfg.width = rows[ri].width;
    cfg.learning_rate = rows[ri].learning_rate;
    cfg.batch_size = rows[ri].batch_size;
    cfg.activation = rows[ri].activation;
    cfg.seed = splitmix64(base.seed + 0x51ab * s + 1);
    cfg.parallel = false;  // runs are the parallel unit
    val[static_cast<std::size_t>(r)] = train(dataset, cfg).best_val;
  }

  for (std::size_t ri = 0; ri < rows.size(); ++ri) {
    double mean = 0.0;
    for (int s = 0; s < n_seeds; ++s)
      mean += val[ri * static_cast<std::size_t>(n_seeds) + static_cast<std::size_t>(s)];
    mean /= n_seeds;
    double var = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
      const double d =
          val[ri * static_cast<std::size_t>(n_seeds) + static_cast<std::size_t>(s)] - mean;
      var += d * d;
    }
    rows[ri].mean_val = mean;
    rows[ri].std_val = n_seeds > 1 ? std::sqrt(var / (n_seeds - 1)) : 0.0;
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const GridRow& a, const GridRow& b) {
                     return a.mean_val < b.mean_val;
                   });
  return rows;
}

std::string grid_table_csv(const std::vector<GridRow>& rows) {
  std::string out =
      "rank,hidden_layers,width,learning_rate,batch_size,activation,"
      "mean_val_loss,std_val_loss,seeds\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const GridRow& r = rows[i];
    out += std::to_string(i + 1) + ',' + std::to_string(r.hidden_layers) + ',' +
           std::to_string(r.width) + ',' + format_double(r.learning_rate) + ',' +
           std::to_string(r.batch_size) + ',' + nn::act_name(r.activation) +
           ',' + format_double(r.mean_val) + ',' + format_double(r.std_val) +
           ',' + std::to_string(r.seeds) + '\n';
  }
  return out;
}

std::string grid_table_text(const std::vector<GridRow>& rows) {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%5s %7s %6s %9s %6s %5s %14s %14s\n", "rank",
                "layers", "width", "lr", "batch", "act", "mean_val", "std_val");
  out += buf;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const GridRow& r = rows[i];
    std::snprintf(buf, sizeof(buf), "%5zu %7d %6d %9.1e %6d %5s %14.6e %14.6e\n",
                  i + 1, r.hidden_layers, r.width, r.learning_rate, r.batch_size,
                  nn::act_name(r.activation).c_str(), r.mean_val, r.std_val);
    out += buf;
  }
  return out;
}

}  // namespace biped
