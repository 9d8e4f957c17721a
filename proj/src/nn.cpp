#include "biped/nn.hpp"

#include <cmath>

namespace biped::nn {

Act parse_act(const std::string& name) {
  if (name == "relu") return Act::relu;
  if (name == "tanh") return Act::tanh;
  throw InvalidData("unknown activation: " + name);
}

std::string act_name(Act a) { return a == Act::relu ? "relu" : "tanh"; }

namespace {

inline void apply_act(Mat& z, Act act) {
  if (act == Act::relu)
    z = z.cwiseMax(0.0);
  else
    z = z.array().tanh().matrix();
}

// derivative from the activated value
inline Mat act_deriv(const Mat& post, Act act) {
  if (act == Act::relu)
    return (post.array() > 0.0).cast<double>().matrix();
  return (1.0 - post.array().square()).matrix();
}

}  // namespace

Mlp Mlp::make(const std::vector<int>& sizes, Act act, Rng& rng) {
  Mlp net = zeros(sizes, act);
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(sizes[l]));
    for (Eigen::Index i = 0; i < net.w[l].rows(); ++i)
      for (Eigen::Index j = 0; j < net.w[l].cols(); ++j)
        net.w[l](i, j) = rng_range(rng, -limit, limit);
  }
  return net;
}

Mlp Mlp::zeros(const std::vector<int>& sizes, Act act) {
  if (sizes.size() < 2) throw InvalidData("Mlp: need at least two layer sizes");
  Mlp net;
  net.sizes = sizes;
  net.act = act;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    net.w.emplace_back(Mat::Zero(sizes[l + 1], sizes[l]));
    net.b.emplace_back(Vec::Zero(sizes[l + 1]));
  }
  return net;
}

Vec Mlp::forward(const Vec& x) const {
  return forward_batch(x).col(0);
}

Mat Mlp::forward_batch(const Mat& x) const {
  Mat a = x;
  for (std::size_t l = 0; l < w.size(); ++l) {
    Mat z = (w[l] * a).colwise() + b[l];
    if (l + 1 < w.size()) apply_act(z, act);
    a = std::move(z);
  }
  return a;
}

Mat Mlp::forward_tape(const Mat& x, Tape& tape) const {
  tape.input = x;
  tape.post.clear();
  Mat a = x;
  for (std::size_t l = 0; l < w.size(); ++l) {
    Mat z = (w[l] * a).colwise() + b[l];
    if (l + 1 < w.size()) {
      apply_act(z, act);
      tape.post.push_back(z);
    }
    a = std::move(z);
  }
  return a;
}

void Mlp::backward(const Tape& tape, const Mat& dy, Mlp& grad, Mat* dx) const {
  Mat delta = dy;
  for (std::size_t li = w.size(); li-- > 0;) {
    const Mat& a_in = li == 0 ? tape.input : tape.post[li - 1];
    grad.w[li].noalias() += delta * a_in.transpose();
    grad.b[li] += delta.rowwise().sum();
    if (li > 0) {
      delta = (w[li].transpose() * delta).cwiseProduct(
          act_deriv(tape.post[li - 1], act));
    } else if (dx != nullptr) {
      dx->noalias() = w[0].transpose() * delta;
    }
  }
}

Mlp Mlp::zeros_like() const { return zeros(sizes, act); }

void Mlp::add_scaled(const Mlp& other, double s) {
  for (std::size_t l = 0; l < w.size(); ++l) {
    w[l] += s * other.w[l];
    b[l] += s * other.b[l];
  }
}

void Mlp::setZero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

bool Mlp::allFinite() const {
  for (const auto& m : w)
    if (!m.allFinite()) return false;
  for (const auto& v : b)
    if (!v.allFinite()) return false;
  return true;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < w.size(); ++l)
    n += static_cast<std::size_t>(w[l].size() + b[l].size());
  return n;
}

Vec Mlp::flatten() const {
  Vec theta(static_cast<Eigen::Index>(param_count()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    theta.segment(at, w[l].size()) =
        Eigen::Map<const Vec>(w[l].data(), w[l].size());
    at += w[l].size();
    theta.segment(at, b[l].size()) = b[l];
    at += b[l].size();
  }
  return theta;
}

void Mlp::unflatten(const Vec& theta) {
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    Eigen::Map<Vec>(w[l].data(), w[l].size()) = theta.segment(at, w[l].size());
    at += w[l].size();
    b[l] = theta.segment(at, b[l].size());
    at += b[l].size();
  }
  if (at != theta.size()) throw InvalidData("Mlp::unflatten: size mismatch");
}

void Adam::init(Eigen::Index n) {
  m = Vec::Zero(n);
  v = Vec::Zero(n);
  t = 0;
}

void Adam::step(Vec& theta, const Vec& grad, double lr) {
  if (m.size() != theta.size()) init(theta.size());
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  theta -= (lr / c1) * m.cwiseQuotient(
      ((v / c2).cwiseSqrt().array() + eps).matrix());
}

}  // namespace biped::nn
