#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "biped/gait_net.hpp"
#include "biped/gait_synth.hpp"

#include <cmath>

using namespace biped;

namespace {

GaitNetParams tiny_params(const std::vector<int>& sizes, nn::Act act,
                          std::uint64_t seed) {
  Rng rng(seed);
  GaitNetParams p;
  p.net = nn::Mlp::make(sizes, act, rng);
  p.in_mean = Vec::Zero(sizes.front());
  p.in_std = Vec::Ones(sizes.front());
  p.out_mean = Vec::Zero(sizes.back());
  p.out_std = Vec::Ones(sizes.back());
  return p;
}

std::vector<GaitSample> pipeline_dataset(int subjects, std::uint64_t seed) {
  std::vector<GaitCycle> cycles;
  for (const auto& trial : synthesize_dataset(subjects, seed))
    for (const auto& spec : prepare_trial(trial))
      cycles.push_back(reconstruct_cycle(spec));
  return make_dataset(cycles);
}

// |a-b| <= rel*max(|a|,|b|) + abs_floor, per coordinate
void check_close(const Vec& a, const Vec& b, double rel, double abs_floor) {
  REQUIRE(a.size() == b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double tol = rel * std::max(std::abs(a[i]), std::abs(b[i])) + abs_floor;
    CHECK(std::abs(a[i] - b[i]) <= tol);
  }
}

}  // namespace

TEST_CASE("zero network produces zero frames") {
  GaitNetParams p = tiny_params({3, 8, 192}, nn::Act::relu, 1);
  p.net.setZero();
  const GaitCycle c = p.forward({1.0, 0.9, 0.9});
  CHECK(c.frames.cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.speed == 1.0);
}

TEST_CASE("forward is deterministic") {
  Rng rng(3);
  const GaitNetParams p = GaitNetParams::init(2, 32, nn::Act::tanh, rng);
  const GaitNetInput x{1.3, 0.95, 0.88};
  CHECK(p.forward(x).frames == p.forward(x).frames);
}

TEST_CASE("single-layer net is a plain affine map") {
  GaitNetParams p = tiny_params({3, 192}, nn::Act::relu, 5);
  Rng rng(7);
  for (Eigen::Index i = 0; i < 192; ++i) {
    p.net.b[0][i] = rng_range(rng, -0.1, 0.1);
    for (Eigen::Index j = 0; j < 3; ++j)
      p.net.w[0](i, j) = rng_range(rng, -1.0, 1.0);
  }
  const Vec y = p.forward_raw(Vec::Ones(3));
  for (Eigen::Index i = 0; i < 192; ++i)
    CHECK(y[i] == doctest::Approx(p.net.w[0].row(i).sum() + p.net.b[0][i]).epsilon(1e-12));
}

TEST_CASE("loss is zero when the target equals the forward output") {
  const GaitNetParams p = tiny_params({3, 8, 192}, nn::Act::tanh, 11);
  GaitSample s;
  s.x = Vec::Constant(3, 0.4);
  s.target = p.forward_raw(s.x);
  auto [loss, grad] = loss_and_gradient(p, std::span(&s, 1));
  CHECK(loss == 0.0);
  CHECK(grad.flatten().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar toy net matches the analytic gradient") {
  GaitNetParams p = tiny_params({1, 1}, nn::Act::relu, 0);
  p.net.w[0](0, 0) = 2.0;
  GaitSample s;
  s.x = Vec::Constant(1, 1.0);
  s.target = Vec::Zero(1);
  auto [loss, grad] = loss_and_gradient(p, std::span(&s, 1));
  CHECK(loss == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(grad.w[0](0, 0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(grad.b[0][0] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("analytic gradient matches central finite differences") {
  for (const auto& [sizes, act, seed] :
       {std::tuple<std::vector<int>, nn::Act, std::uint64_t>{{3, 8, 192}, nn::Act::tanh, 2},
        {{3, 8, 192}, nn::Act::relu, 4},
        {{3, 6, 6, 6, 12}, nn::Act::tanh, 6},
        {{3, 6, 6, 6, 12}, nn::Act::relu, 8}}) {
    GaitNetParams p = tiny_params(sizes, act, seed);
    Rng rng(seed + 100);
    // mild normalization constants so the chain rule through them is covered
    p.out_mean = Vec::NullaryExpr(p.out_mean.size(), [&](Eigen::Index) {
      return rng_range(rng, -0.1, 0.1);
    });
    p.out_std = Vec::NullaryExpr(p.out_std.size(), [&](Eigen::Index) {
      return rng_range(rng, 0.5, 1.5);
    });
    std::vector<GaitSample> batch(4);
    for (auto& s : batch) {
      s.x = Vec::NullaryExpr(3, [&](Eigen::Index) { return rng_range(rng, -1.0, 1.0); });
      s.target = Vec::NullaryExpr(p.net.out_dim(), [&](Eigen::Index) {
        return rng_range(rng, -1.0, 1.0);
      });
    }
    const Vec analytic = loss_and_gradient(p, batch).second.flatten();

    Vec theta = p.net.flatten();
    Vec fd(theta.size());
    const double h = 1e-5;
    GaitNetParams probe = p;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Vec tp = theta;
      tp[i] = theta[i] + h;
      probe.net.unflatten(tp);
      const double up = loss_and_gradient(probe, batch).first;
      tp[i] = theta[i] - h;
      probe.net.unflatten(tp);
      const double dn = loss_and_gradient(probe, batch).first;
      fd[i] = (up - dn) / (2.0 * h);
    }
    check_close(analytic, fd, 1e-4, 1e-9);
  }
}

TEST_CASE("serial and parallel gradients are bit identical") {
  const GaitNetParams p = tiny_params({3, 32, 192}, nn::Act::tanh, 9);
  Rng rng(10);
  std::vector<GaitSample> batch(37);
  for (auto& s : batch) {
    s.x = Vec::NullaryExpr(3, [&](Eigen::Index) { return rng_range(rng, -1.0, 1.0); });
    s.target = Vec::NullaryExpr(192, [&](Eigen::Index) { return rng_range(rng, -1.0, 1.0); });
  }
  auto [l1, g1] = loss_and_gradient(p, batch, false);
  auto [l2, g2] = loss_and_gradient(p, batch, true);
  CHECK(l1 == l2);
  CHECK(g1.flatten() == g2.flatten());
}

TEST_CASE("normalization round trips") {
  Rng rng(21);
  GaitNetParams p = tiny_params({3, 4, 192}, nn::Act::tanh, 2);
  p.in_mean = Vec::NullaryExpr(3, [&](Eigen::Index) { return rng_range(rng, -2.0, 2.0); });
  p.in_std = Vec::NullaryExpr(3, [&](Eigen::Index) { return rng_range(rng, 0.1, 3.0); });
  const Vec x = Vec::NullaryExpr(3, [&](Eigen::Index) { return rng_range(rng, -2.0, 2.0); });
  const Vec norm = (x - p.in_mean).cwiseQuotient(p.in_std);
  const Vec back = p.in_mean + p.in_std.cwiseProduct(norm);
  check_close(back, x, 0.0, 1e-12);
}

TEST_CASE("training memorizes a single repeated sample") {
  const GaitNetParams ref = tiny_params({3, 8, 192}, nn::Act::tanh, 33);
  GaitSample s;
  s.x = Eigen::Vector3d(1.0, 0.9, 0.9);
  s.target = ref.forward_raw(s.x) * 0.1;
  std::vector<GaitSample> dataset(64, s);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 500;
  cfg.patience = 500;
  cfg.learning_rate = 1e-3;
  cfg.hidden_layers = 1;
  cfg.width = 32;
  const TrainResult r = train(dataset, cfg);
  CHECK(r.curve.back().train_loss < 1e-4);
}

TEST_CASE("zero learning rate with patience one stops after two epochs") {
  std::vector<GaitSample> dataset = pipeline_dataset(1, 17);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.patience = 1;
  cfg.batch_size = 8;
  cfg.max_epochs = 100;
  cfg.hidden_layers = 1;
  cfg.width = 8;
  const TrainResult r = train(dataset, cfg);
  CHECK(r.curve.size() == 2);
}

TEST_CASE("training is deterministic in the seed") {
  const auto dataset = pipeline_dataset(2, 40);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.hidden_layers = 1;
  cfg.width = 16;
  cfg.batch_size = 16;
  cfg.seed = 77;
  const TrainResult a = train(dataset, cfg);
  const TrainResult b = train(dataset, cfg);
  CHECK(a.params.net.flatten() == b.params.net.flatten());
  CHECK(a.best_val == b.best_val);
}

TEST_CASE("returned parameters beat every recorded validation loss") {
  const auto dataset = pipeline_dataset(2, 50);
  TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.hidden_layers = 1;
  cfg.width = 24;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-3;
  const TrainResult r = train(dataset, cfg);
  for (const auto& e : r.curve) CHECK(r.best_val <= e.val_loss);
  CHECK(r.best_epoch >= 0);
}

TEST_CASE("desk-scale pipeline training fits the synthetic corpus") {
  const auto dataset = pipeline_dataset(6, 2024);
  TrainConfig cfg;
  cfg.hidden_layers = 2;
  cfg.width = 64;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 64;
  cfg.max_epochs = 200;
  cfg.patience = 50;
  const TrainResult r = train(dataset, cfg);
  CHECK(r.best_val < 0.015);
}

TEST_CASE("diverging training carries the last finite checkpoint") {
  const auto dataset = pipeline_dataset(1, 60);
  TrainConfig cfg;
  cfg.learning_rate = 1e160;  // one Adam step overflows the layer product
  cfg.max_epochs = 30;
  cfg.hidden_layers = 1;
  cfg.width = 8;
  cfg.batch_size = 8;
  CHECK_THROWS_AS(train(dataset, cfg), TrainingFailure);
}

TEST_CASE("grid search: single configuration, two seeds") {
  const auto dataset = pipeline_dataset(1, 70);
  GridSpec grid;
  grid.layers = {1};
  grid.widths = {8};
  grid.learning_rates = {1e-3};
  grid.batch_sizes = {8};
  grid.activations = {nn::Act::tanh};
  TrainConfig base;
  base.max_epochs = 10;
  const auto rows = grid_search(dataset, grid, 2, base);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].seeds == 2);
  CHECK(rows[0].std_val >= 0.0);
}

TEST_CASE("grid search ranks a learnable configuration over a frozen one") {
  const auto dataset = pipeline_dataset(2, 80);
  GridSpec grid;
  grid.layers = {1};
  grid.widths = {16};
  grid.learning_rates = {1e-3, 0.0};
  grid.batch_sizes = {16};
  grid.activations = {nn::Act::tanh};
  TrainConfig base;
  base.max_epochs = 30;
  base.patience = 30;
  const auto rows = grid_search(dataset, grid, 1, base);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].learning_rate == 1e-3);
  CHECK(rows[0].mean_val < rows[1].mean_val);
}

TEST_CASE("default grid produces the full 162-row ranked table") {
  const auto dataset = pipeline_dataset(8, 90);
  REQUIRE(dataset.size() >= 256);  // largest batch size needs two batches
  TrainConfig base;
  base.max_epochs = 1;
  const auto rows = grid_search(dataset, GridSpec{}, 1, base);
  CHECK(rows.size() == 162);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    CHECK(rows[i].mean_val <= rows[i + 1].mean_val);
  const std::string csv = grid_table_csv(rows);
  CHECK(csv.find("rank,hidden_layers") == 0);
}

TEST_CASE("parameter files round trip exactly") {
  Rng rng(5);
  GaitNetParams p = GaitNetParams::init(2, 16, nn::Act::relu, rng);
  p.in_mean << 1.0, 0.9, 0.9;
  p.in_std << 0.5, 0.07, 0.07;
  const std::string text = p.to_json_string();
  const GaitNetParams q = GaitNetParams::from_json_string(text);
  CHECK(q.net.flatten() == p.net.flatten());
  CHECK(q.in_mean == p.in_mean);
  CHECK(q.out_std == p.out_std);
  CHECK(nn::act_name(q.net.act) == "relu");
}
