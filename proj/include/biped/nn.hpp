#pragma once

#include "biped/common.hpp"

#include <string>
#include <vector>

namespace biped::nn {

enum class Act { relu, tanh };

Act parse_act(const std::string& name);
std::string act_name(Act a);

// Dense network with the chosen activation on hidden layers and a linear
// output layer. Batches are column-major: one column per item.
struct Mlp {
  std::vector<int> sizes;  // [in, hidden..., out]
  Act act = Act::relu;
  std::vector<Mat> w;  // w[l] is sizes[l+1] x sizes[l]
  std::vector<Vec> b;

  // He-style fan-in uniform init, bias zero, draw order fixed by rng.
  static Mlp make(const std::vector<int>& sizes, Act act, Rng& rng);
  static Mlp zeros(const std::vector<int>& sizes, Act act);

  int in_dim() const { return sizes.front(); }
  int out_dim() const { return sizes.back(); }
  std::size_t layer_count() const { return w.size(); }

  Vec forward(const Vec& x) const;
  Mat forward_batch(const Mat& x) const;

  struct Tape {
    Mat input;
    std::vector<Mat> post;  // activated output per hidden layer
  };
  Mat forward_tape(const Mat& x, Tape& tape) const;

  // Accumulates into grad (same shape as *this); dy is dLoss/dOutput.
  // If dx is non-null it receives dLoss/dInput.
  void backward(const Tape& tape, const Mat& dy, Mlp& grad,
                Mat* dx = nullptr) const;

  Mlp zeros_like() const;
  void add_scaled(const Mlp& other, double s);
  void setZero();
  bool allFinite() const;

  std::size_t param_count() const;
  Vec flatten() const;
  void unflatten(const Vec& theta);
};

struct Adam {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Vec m, v;
  long long t = 0;
  void init(Eigen::Index n);
  void step(Vec& theta, const Vec& grad, double lr);
};

}  // namespace biped::nn
