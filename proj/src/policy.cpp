#include "biped/policy.hpp"

#include <cmath>

namespace biped {

ArchTag parse_arch(const std::string& name) {
  if (name == "config1") return ArchTag::config1_mlp;
  if (name == "config2") return ArchTag::config2_recurrent;
  if (name == "config3") return ArchTag::config3_recurrent_large;
  throw InvalidData("unknown architecture: " + name +
                    " (expected config1|config2|config3)");
}

std::string arch_name(ArchTag tag) {
  switch (tag) {
    case ArchTag::config1_mlp: return "config1";
    case ArchTag::config2_recurrent: return "config2";
    case ArchTag::config3_recurrent_large: return "config3";
  }
  return "?";
}

RnnCell RnnCell::make(int in, int hidden, Rng& rng) {
  RnnCell c = zeros(in, hidden);
  const double lx = std::sqrt(6.0 / in);
  const double lh = std::sqrt(6.0 / hidden);
  for (Eigen::Index i = 0; i < c.wx.rows(); ++i)
    for (Eigen::Index j = 0; j < c.wx.cols(); ++j)
      c.wx(i, j) = rng_range(rng, -lx, lx);
  for (Eigen::Index i = 0; i < c.wh.rows(); ++i)
    for (Eigen::Index j = 0; j < c.wh.cols(); ++j)
      c.wh(i, j) = rng_range(rng, -lh, lh);
  return c;
}

RnnCell RnnCell::zeros(int in, int hidden) {
  RnnCell c;
  c.wx = Mat::Zero(hidden, in);
  c.wh = Mat::Zero(hidden, hidden);
  c.b = Vec::Zero(hidden);
  return c;
}

Vec RnnCell::step(const Vec& x, const Vec& h) const {
  return ((wx * x + wh * h + b).array().tanh()).matrix();
}

std::size_t RnnCell::param_count() const {
  return static_cast<std::size_t>(wx.size() + wh.size() + b.size());
}

Vec ActorNet::mean(const Vec& obs, const Vec& carry, Vec* carry_out) const {
  if (!recurrent()) {
    if (carry_out != nullptr) carry_out->resize(0);
    return mlp.forward(obs);
  }
  const Vec h = cell.step(obs, carry);
  if (carry_out != nullptr) *carry_out = h;
  return head_w * h + head_b;
}

double CriticNet::value(const Vec& obs, const Vec& carry,
                        Vec* carry_out) const {
  if (!is_recurrent) {
    if (carry_out != nullptr) carry_out->resize(0);
    return mlp.forward(obs)[0];
  }
  const Vec h = cell.step(obs, carry);
  if (carry_out != nullptr) *carry_out = h;
  return (head_w * h + head_b)[0];
}

PolicyParams PolicyParams::init(ArchTag tag, int obs_dim, int act_dim,
                                Rng& rng, double init_log_std) {
  PolicyParams p;
  p.tag = tag;
  p.actor.tag = tag;
  switch (tag) {
    case ArchTag::config1_mlp:
      p.actor.mlp =
          nn::Mlp::make({obs_dim, 256, 256, act_dim}, nn::Act::tanh, rng);
      p.actor.cell = RnnCell::zeros(1, 1);
      p.actor.head_w = Mat::Zero(0, 0);
      p.actor.head_b = Vec::Zero(0);
      break;
    case ArchTag::config2_recurrent:
    case ArchTag::config3_recurrent_large: {
      const int carry = tag == ArchTag::config2_recurrent ? 128 : 256;
      p.actor.mlp = nn::Mlp::zeros({1, 1}, nn::Act::tanh);
      p.actor.cell = RnnCell::make(obs_dim, carry, rng);
      const double lim = std::sqrt(6.0 / carry);
      p.actor.head_w = Mat::NullaryExpr(act_dim, carry, [&](Eigen::Index,
                                                            Eigen::Index) {
        return rng_range(rng, -lim, lim);
      });
      p.actor.head_b = Vec::Zero(act_dim);
      break;
    }
  }
  p.actor.log_std = Vec::Constant(act_dim, init_log_std);

  p.critic.is_recurrent = tag == ArchTag::config3_recurrent_large;
  if (p.critic.is_recurrent) {
    p.critic.mlp = nn::Mlp::zeros({1, 1}, nn::Act::tanh);
    p.critic.cell = RnnCell::make(obs_dim, 256, rng);
    const double lim = std::sqrt(6.0 / 256.0);
    p.critic.head_w = Mat::NullaryExpr(1, 256, [&](Eigen::Index, Eigen::Index) {
      return rng_range(rng, -lim, lim);
    });
    p.critic.head_b = Vec::Zero(1);
  } else {
    p.critic.mlp = nn::Mlp::make({obs_dim, 256, 256, 1}, nn::Act::tanh, rng);
    p.critic.cell = RnnCell::zeros(1, 1);
    p.critic.head_w = Mat::Zero(0, 0);
    p.critic.head_b = Vec::Zero(0);
  }
  return p;
}

int PolicyParams::obs_dim() const {
  return actor.recurrent() ? static_cast<int>(actor.cell.wx.cols())
                           : actor.mlp.in_dim();
}

namespace {

void append_mat(Vec& theta, Eigen::Index& at, const Mat& m) {
  theta.segment(at, m.size()) = Eigen::Map<const Vec>(m.data(), m.size());
  at += m.size();
}

void append_vec(Vec& theta, Eigen::Index& at, const Vec& v) {
  theta.segment(at, v.size()) = v;
  at += v.size();
}

void take_mat(const Vec& theta, Eigen::Index& at, Mat& m) {
  Eigen::Map<Vec>(m.data(), m.size()) = theta.segment(at, m.size());
  at += m.size();
}

void take_vec(const Vec& theta, Eigen::Index& at, Vec& v) {
  v = theta.segment(at, v.size());
  at += v.size();
}

}  // namespace

Eigen::Index PolicyParams::param_count() const {
  std::size_t n = actor.log_std.size();
  if (actor.recurrent()) {
    n += actor.cell.param_count();
    n += static_cast<std::size_t>(actor.head_w.size() + actor.head_b.size());
  } else {
    n += actor.mlp.param_count();
  }
  if (critic.is_recurrent) {
    n += critic.cell.param_count();
    n += static_cast<std::size_t>(critic.head_w.size() + critic.head_b.size());
  } else {
    n += critic.mlp.param_count();
  }
  return static_cast<Eigen::Index>(n);
}

Vec PolicyParams::flatten() const {
  Vec theta(param_count());
  Eigen::Index at = 0;
  if (actor.recurrent()) {
    append_mat(theta, at, actor.cell.wx);
    append_mat(theta, at, actor.cell.wh);
    append_vec(theta, at, actor.cell.b);
    append_mat(theta, at, actor.head_w);
    append_vec(theta, at, actor.head_b);
  } else {
    append_vec(theta, at, actor.mlp.flatten());
  }
  append_vec(theta, at, actor.log_std);
  if (critic.is_recurrent) {
    append_mat(theta, at, critic.cell.wx);
    append_mat(theta, at, critic.cell.wh);
    append_vec(theta, at, critic.cell.b);
    append_mat(theta, at, critic.head_w);
    append_vec(theta, at, critic.head_b);
  } else {
    append_vec(theta, at, critic.mlp.flatten());
  }
  return theta;
}

void PolicyParams::unflatten(const Vec& theta) {
  Eigen::Index at = 0;
  if (actor.recurrent()) {
    take_mat(theta, at, actor.cell.wx);
    take_mat(theta, at, actor.cell.wh);
    take_vec(theta, at, actor.cell.b);
    take_mat(theta, at, actor.head_w);
    take_vec(theta, at, actor.head_b);
  } else {
    Vec sub = theta.segment(at, static_cast<Eigen::Index>(actor.mlp.param_count()));
    actor.mlp.unflatten(sub);
    at += sub.size();
  }
  take_vec(theta, at, actor.log_std);
  if (critic.is_recurrent) {
    take_mat(theta, at, critic.cell.wx);
    take_mat(theta, at, critic.cell.wh);
    take_vec(theta, at, critic.cell.b);
    take_mat(theta, at, critic.head_w);
    take_vec(theta, at, critic.head_b);
  } else {
    Vec sub = theta.segment(at, static_cast<Eigen::Index>(critic.mlp.param_count()));
    critic.mlp.unflatten(sub);
    at += sub.size();
  }
  if (at != theta.size())
    throw InvalidData("PolicyParams::unflatten: size mismatch");
}

double gaussian_logp(const Vec& u, const Vec& mean, const Vec& log_std) {
  double lp = -0.5 * static_cast<double>(u.size()) * std::log(2.0 * M_PI);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double sigma = std::exp(log_std[i]);
    const double z = (u[i] - mean[i]) / sigma;
    lp += -0.5 * z * z - log_std[i];
  }
  return lp;
}

double gaussian_entropy(const Vec& log_std) {
  return log_std.sum() +
         0.5 * static_cast<double>(log_std.size()) *
             std::log(2.0 * M_PI * std::exp(1.0));
}

}  // namespace biped
