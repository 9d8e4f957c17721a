#pragma once

#include "biped/nn.hpp"

#include <string>

namespace biped {

// The three policy network variants: a feedforward actor-critic and two
// recurrent actors (config3 also makes the critic recurrent).
enum class ArchTag { config1_mlp, config2_recurrent, config3_recurrent_large };

ArchTag parse_arch(const std::string& name);
std::string arch_name(ArchTag tag);

// Elman cell, tanh carry.
struct RnnCell {
  Mat wx, wh;
  Vec b;
  static RnnCell make(int in, int hidden, Rng& rng);
  static RnnCell zeros(int in, int hidden);
  int hidden() const { return static_cast<int>(b.size()); }
  Vec step(const Vec& x, const Vec& h) const;
  std::size_t param_count() const;
};

// Actor head produces pre-squash torque means; the environment-facing layer
// maps them through tanh onto the joint torque limits. The per-action
// log-std is state independent.
struct ActorNet {
  ArchTag tag = ArchTag::config1_mlp;
  nn::Mlp mlp;      // config1: obs -> 256 -> 256 -> act (tanh hidden)
  RnnCell cell;     // config2: 128 carry, config3: 256 carry
  Mat head_w;       // act x carry
  Vec head_b;
  Vec log_std;      // act

  bool recurrent() const { return tag != ArchTag::config1_mlp; }
  int carry_dim() const { return recurrent() ? cell.hidden() : 0; }
  Vec mean(const Vec& obs, const Vec& carry, Vec* carry_out = nullptr) const;
};

struct CriticNet {
  bool is_recurrent = false;
  nn::Mlp mlp;   // obs -> 256 -> 256 -> 1
  RnnCell cell;  // config3: 256 carry
  Mat head_w;    // 1 x carry
  Vec head_b;    // 1

  int carry_dim() const { return is_recurrent ? cell.hidden() : 0; }
  double value(const Vec& obs, const Vec& carry,
               Vec* carry_out = nullptr) const;
};

struct PolicyParams {
  ArchTag tag = ArchTag::config1_mlp;
  ActorNet actor;
  CriticNet critic;

  static PolicyParams init(ArchTag tag, int obs_dim, int act_dim, Rng& rng,
                           double init_log_std = -0.5);
  int obs_dim() const;
  int act_dim() const { return static_cast<int>(actor.log_std.size()); }

  // One flat vector over actor (including log-std) then critic; the Adam
  // state, gradient clipping, finite-difference checks and serialization all
  // run over this layout.
  Eigen::Index param_count() const;
  Vec flatten() const;
  void unflatten(const Vec& theta);
};

double gaussian_logp(const Vec& u, const Vec& mean, const Vec& log_std);
// Closed form: sum(log_std) + n/2 * log(2*pi*e)
double gaussian_entropy(const Vec& log_std);

}  // namespace biped
