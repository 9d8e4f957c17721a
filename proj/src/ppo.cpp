#include "biped/ppo.hpp"

#include "biped/json_io.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace biped {

double schedule(double value_start, double value_end, std::int64_t step,
                std::int64_t total) {
  if (total <= 0) throw InvalidData("schedule: total must be > 0");
  if (step <= 0) return value_start;
  if (step >= total) return value_end;
  const double f = static_cast<double>(step) / static_cast<double>(total);
  return value_start + f * (value_end - value_start);
}

void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const std::uint8_t> dones, double last_value,
                 double gamma, double lambda, std::span<double> advantages,
                 std::span<double> returns) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n || advantages.size() != n ||
      returns.size() != n)
    throw InvalidData("compute_gae: length mismatch");
  double carry = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double next_value = i + 1 < n ? values[i + 1] : last_value;
    const double delta =
        rewards[i] + gamma * next_value * not_done - values[i];
    carry = delta + gamma * lambda * not_done * carry;
    advantages[i] = carry;
    returns[i] = advantages[i] + values[i];
  }
}

Vec ObsNormalizer::normalize(const Vec& raw) const {
  Vec out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const double z = (raw[i] - mean[i]) / std::sqrt(var[i] + 1e-8);
    out[i] = std::clamp(z, -10.0, 10.0);
  }
  return out;
}

void ObsNormalizer::update(const Mat& raw_batch) {
  const auto n = static_cast<double>(raw_batch.cols());
  if (n < 1.0) return;
  const Vec batch_mean = raw_batch.rowwise().mean();
  Vec batch_var = Vec::Zero(raw_batch.rows());
  for (Eigen::Index c = 0; c < raw_batch.cols(); ++c)
    batch_var += (raw_batch.col(c) - batch_mean).cwiseAbs2();
  batch_var /= n;

  const Vec delta = batch_mean - mean;
  const double tot = count + n;
  mean += delta * (n / tot);
  var = (var * count + batch_var * n +
         delta.cwiseAbs2() * (count * n / tot)) /
        tot;
  count = tot;
}

void RolloutBuffer::allocate(int obs_dim_in, int act_dim_in, int seg_len,
                             int segments, int actor_carry_dim,
                             int critic_carry_dim) {
  obs_dim = obs_dim_in;
  act_dim = act_dim_in;
  segment_len = seg_len;
  n_segments = segments;
  const int n = size();
  obs = Mat::Zero(obs_dim, n);
  actions = Mat::Zero(act_dim, n);
  logp = Vec::Zero(n);
  rewards = Vec::Zero(n);
  values = Vec::Zero(n);
  advantages = Vec::Zero(n);
  returns = Vec::Zero(n);
  dones.assign(static_cast<std::size_t>(n), 0);
  starts.assign(static_cast<std::size_t>(n), 0);
  actor_carry = Mat::Zero(std::max(actor_carry_dim, 1), actor_carry_dim > 0 ? n : 0);
  critic_carry = Mat::Zero(std::max(critic_carry_dim, 1), critic_carry_dim > 0 ? n : 0);
  segment_bootstrap.assign(static_cast<std::size_t>(segments), 0.0);
}

void PpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw InvalidData("PpoConfig: clip in (0,1)");
  if (minibatch < 1 || epochs < 1 || workers < 1 || n_steps < 1)
    throw InvalidData("PpoConfig: counts must be positive");
  if ((static_cast<std::int64_t>(n_steps) * workers) % minibatch != 0)
    throw InvalidData("PpoConfig: minibatch must divide n_steps * workers");
  if (!(lr_start > 0.0) || !(lr_end > 0.0))
    throw InvalidData("PpoConfig: learning rates must be positive");
  if (total_steps < 1) throw InvalidData("PpoConfig: total_steps >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0) || !(lambda >= 0.0 && lambda <= 1.0))
    throw InvalidData("PpoConfig: bad gamma/lambda");
  if (!(decay_alpha >= 0.0 && decay_alpha < 1.0))
    throw InvalidData("PpoConfig: decay alpha in [0,1)");
  if (recurrent_seq < 1) throw InvalidData("PpoConfig: recurrent_seq >= 1");
}

PpoConfig PpoConfig::desk_scale() {
  PpoConfig cfg;
  cfg.total_steps = 300000;
  cfg.n_steps = 2048;
  cfg.workers = 2;
  return cfg;
}

// --- loss and gradient -------------------------------------------------------

namespace {

constexpr std::size_t kLossChunks = 8;

struct SampleGrad {
  // dLoss/dmean column-wise plus the log-std gradient, filled per chunk
  Mat dmu;
  Vec dlogstd;
  Vec dvalue;
};

struct ChunkAccum {
  nn::Mlp actor_mlp_grad, critic_mlp_grad;
  Mat a_wx, a_wh, a_head;
  Vec a_b, a_head_b;
  Mat c_wx, c_wh, c_head;
  Vec c_b, c_head_b;
  Vec dlogstd;
  double policy = 0.0, value = 0.0;
  double clip_count = 0.0, kl_sum = 0.0;
  int samples = 0;

  static ChunkAccum zeros(const PolicyParams& p) {
    ChunkAccum a;
    if (p.actor.recurrent()) {
      a.a_wx = Mat::Zero(p.actor.cell.wx.rows(), p.actor.cell.wx.cols());
      a.a_wh = Mat::Zero(p.actor.cell.wh.rows(), p.actor.cell.wh.cols());
      a.a_b = Vec::Zero(p.actor.cell.b.size());
      a.a_head = Mat::Zero(p.actor.head_w.rows(), p.actor.head_w.cols());
      a.a_head_b = Vec::Zero(p.actor.head_b.size());
    } else {
      a.actor_mlp_grad = p.actor.mlp.zeros_like();
    }
    if (p.critic.is_recurrent) {
      a.c_wx = Mat::Zero(p.critic.cell.wx.rows(), p.critic.cell.wx.cols());
      a.c_wh = Mat::Zero(p.critic.cell.wh.rows(), p.critic.cell.wh.cols());
      a.c_b = Vec::Zero(p.critic.cell.b.size());
      a.c_head = Mat::Zero(p.critic.head_w.rows(), p.critic.head_w.cols());
      a.c_head_b = Vec::Zero(p.critic.head_b.size());
    } else {
      a.critic_mlp_grad = p.critic.mlp.zeros_like();
    }
    a.dlogstd = Vec::Zero(p.actor.log_std.size());
    return a;
  }
};

// Per-sample surrogate pieces: fills dmu/dlogstd/dvalue given the means and
// values the network produced.
void accumulate_sample_terms(const PolicyParams& params,
                             const RolloutBuffer& buffer, int i,
                             const Vec& mean, double value, double inv_n,
                             const PpoConfig& cfg, ChunkAccum& acc, Vec& dmu,
                             double& dvalue) {
  const Vec u = buffer.actions.col(i);
  const Vec& log_std = params.actor.log_std;
  const double logp_new = gaussian_logp(u, mean, log_std);
  const double ratio = std::exp(logp_new - buffer.logp[i]);
  const double adv = buffer.advantages[i];

  const double clipped =
      std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
  const double s1 = ratio * adv;
  const double s2 = clipped * adv;
  acc.policy += -std::min(s1, s2) * inv_n;
  const bool unclipped_active = s1 <= s2;
  const double dl_dratio = unclipped_active ? -adv * inv_n : 0.0;

  if (std::abs(ratio - 1.0) > cfg.clip) acc.clip_count += 1.0;
  acc.kl_sum += buffer.logp[i] - logp_new;
  acc.samples += 1;

  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double sigma2 = std::exp(2.0 * log_std[j]);
    const double diff = u[j] - mean[j];
    dmu[j] = dl_dratio * ratio * (diff / sigma2);
    acc.dlogstd[j] += dl_dratio * ratio * (diff * diff / sigma2 - 1.0);
  }

  const double verr = value - buffer.returns[i];
  acc.value += verr * verr * inv_n;
  dvalue = cfg.vf_coef * 2.0 * verr * inv_n;
}

// Feedforward path: batched GEMM over the chunk's samples.
void chunk_feedforward(const PolicyParams& params, const RolloutBuffer& buffer,
                       std::span<const int> idx, std::size_t begin,
                       std::size_t end, double inv_n, const PpoConfig& cfg,
                       ChunkAccum& acc) {
  const auto nb = static_cast<Eigen::Index>(end - begin);
  Mat x(buffer.obs_dim, nb);
  for (Eigen::Index k = 0; k < nb; ++k)
    x.col(k) = buffer.obs.col(idx[begin + static_cast<std::size_t>(k)]);

  nn::Mlp::Tape actor_tape, critic_tape;
  const Mat means = params.actor.mlp.forward_tape(x, actor_tape);
  const Mat values = params.critic.mlp.forward_tape(x, critic_tape);

  Mat dmu(buffer.act_dim, nb);
  Mat dval(1, nb);
  Vec dmu_col(buffer.act_dim);
  for (Eigen::Index k = 0; k < nb; ++k) {
    double dvalue = 0.0;
    accumulate_sample_terms(params, buffer,
                            idx[begin + static_cast<std::size_t>(k)],
                            means.col(k), values(0, k), inv_n, cfg, acc,
                            dmu_col, dvalue);
    dmu.col(k) = dmu_col;
    dval(0, k) = dvalue;
  }
  params.actor.mlp.backward(actor_tape, dmu, acc.actor_mlp_grad);
  params.critic.mlp.backward(critic_tape, dval, acc.critic_mlp_grad);
}

// Recurrent path: truncated BPTT over one window [s, e) of a segment.
void window_recurrent(const PolicyParams& params, const RolloutBuffer& buffer,
                      int s, int e, double inv_n, const PpoConfig& cfg,
                      ChunkAccum& acc) {
  const int len = e - s;
  const bool critic_rec = params.critic.is_recurrent;

  std::vector<Vec> a_hprev(static_cast<std::size_t>(len)),
      a_h(static_cast<std::size_t>(len));
  std::vector<Vec> c_hprev, c_h;
  if (critic_rec) {
    c_hprev.resize(static_cast<std::size_t>(len));
    c_h.resize(static_cast<std::size_t>(len));
  }
  Mat dmu(buffer.act_dim, len);
  Vec dval(len);

  nn::Mlp::Tape critic_tape;
  Mat ff_values;
  if (!critic_rec) {
    Mat x(buffer.obs_dim, len);
    for (int k = 0; k < len; ++k) x.col(k) = buffer.obs.col(s + k);
    ff_values = params.critic.mlp.forward_tape(x, critic_tape);
  }

  Vec ah = buffer.actor_carry.col(s);
  Vec ch = critic_rec ? Vec(buffer.critic_carry.col(s)) : Vec();
  Vec dmu_col(buffer.act_dim);
  for (int k = 0; k < len; ++k) {
    const int i = s + k;
    if (buffer.starts[static_cast<std::size_t>(i)]) {
      ah.setZero();
      if (critic_rec) ch.setZero();
    }
    a_hprev[static_cast<std::size_t>(k)] = ah;
    ah = params.actor.cell.step(buffer.obs.col(i), ah);
    a_h[static_cast<std::size_t>(k)] = ah;
    const Vec mean = params.actor.head_w * ah + params.actor.head_b;

    double value;
    if (critic_rec) {
      c_hprev[static_cast<std::size_t>(k)] = ch;
      ch = params.critic.cell.step(buffer.obs.col(i), ch);
      c_h[static_cast<std::size_t>(k)] = ch;
      value = (params.critic.head_w * ch + params.critic.head_b)[0];
    } else {
      value = ff_values(0, k);
    }

    double dvalue = 0.0;
    accumulate_sample_terms(params, buffer, i, mean, value, inv_n, cfg, acc,
                            dmu_col, dvalue);
    dmu.col(k) = dmu_col;
    dval[k] = dvalue;
  }

  // actor BPTT
  Vec dh = Vec::Zero(params.actor.cell.hidden());
  for (int k = len - 1; k >= 0; --k) {
    const int i = s + k;
    acc.a_head.noalias() += dmu.col(k) * a_h[static_cast<std::size_t>(k)].transpose();
    acc.a_head_b += dmu.col(k);
    dh += params.actor.head_w.transpose() * dmu.col(k);
    const Vec dpre =
        dh.cwiseProduct((1.0 - a_h[static_cast<std::size_t>(k)].array().square()).matrix());
    acc.a_wx.noalias() += dpre * buffer.obs.col(i).transpose();
    acc.a_wh.noalias() += dpre * a_hprev[static_cast<std::size_t>(k)].transpose();
    acc.a_b += dpre;
    dh = params.actor.cell.wh.transpose() * dpre;
    if (buffer.starts[static_cast<std::size_t>(i)]) dh.setZero();
  }

  if (critic_rec) {
    Vec dch = Vec::Zero(params.critic.cell.hidden());
    for (int k = len - 1; k >= 0; --k) {
      const int i = s + k;
      const Vec dout = Vec::Constant(1, dval[k]);
      acc.c_head.noalias() += dout * c_h[static_cast<std::size_t>(k)].transpose();
      acc.c_head_b += dout;
      dch += params.critic.head_w.transpose() * dout;
      const Vec dpre = dch.cwiseProduct(
          (1.0 - c_h[static_cast<std::size_t>(k)].array().square()).matrix());
      acc.c_wx.noalias() += dpre * buffer.obs.col(i).transpose();
      acc.c_wh.noalias() += dpre * c_hprev[static_cast<std::size_t>(k)].transpose();
      acc.c_b += dpre;
      dch = params.critic.cell.wh.transpose() * dpre;
      if (buffer.starts[static_cast<std::size_t>(i)]) dch.setZero();
    }
  } else {
    Mat dval_row(1, len);
    for (int k = 0; k < len; ++k) dval_row(0, k) = dval[k];
    params.critic.mlp.backward(critic_tape, dval_row, acc.critic_mlp_grad);
  }
}

// Adds a chunk's gradients into the flat vector, mirroring the layout of
// PolicyParams::flatten() exactly (column-major matrix maps).
void add_mat(Vec& g, Eigen::Index& at, const Mat& m) {
  g.segment(at, m.size()) += Eigen::Map<const Vec>(m.data(), m.size());
  at += m.size();
}

void add_vec(Vec& g, Eigen::Index& at, const Vec& v) {
  g.segment(at, v.size()) += v;
  at += v.size();
}

void add_accum_to_flat(const PolicyParams& p, const ChunkAccum& acc, Vec& g) {
  Eigen::Index at = 0;
  if (p.actor.recurrent()) {
    add_mat(g, at, acc.a_wx);
    add_mat(g, at, acc.a_wh);
    add_vec(g, at, acc.a_b);
    add_mat(g, at, acc.a_head);
    add_vec(g, at, acc.a_head_b);
  } else {
    for (std::size_t l = 0; l < acc.actor_mlp_grad.w.size(); ++l) {
      add_mat(g, at, acc.actor_mlp_grad.w[l]);
      add_vec(g, at, acc.actor_mlp_grad.b[l]);
    }
  }
  add_vec(g, at, acc.dlogstd);
  if (p.critic.is_recurrent) {
    add_mat(g, at, acc.c_wx);
    add_mat(g, at, acc.c_wh);
    add_vec(g, at, acc.c_b);
    add_mat(g, at, acc.c_head);
    add_vec(g, at, acc.c_head_b);
  } else {
    for (std::size_t l = 0; l < acc.critic_mlp_grad.w.size(); ++l) {
      add_mat(g, at, acc.critic_mlp_grad.w[l]);
      add_vec(g, at, acc.critic_mlp_grad.b[l]);
    }
  }
}

Eigen::Index log_std_offset(const PolicyParams& p) {
  if (p.actor.recurrent())
    return static_cast<Eigen::Index>(p.actor.cell.param_count()) +
           p.actor.head_w.size() + p.actor.head_b.size();
  return static_cast<Eigen::Index>(p.actor.mlp.param_count());
}

}  // namespace

PpoLossParts ppo_loss_and_grad(const PolicyParams& params,
                               const RolloutBuffer& buffer,
                               std::span<const int> idx, const PpoConfig& cfg,
                               double entropy_coef, Vec& grad_out,
                               bool parallel) {
  const bool recurrent = params.actor.recurrent();

  // Total sample count normalizes the means (windows have variable length).
  std::size_t total_samples = 0;
  if (recurrent) {
    for (int s : idx) {
      const int seg_end = (s / buffer.segment_len + 1) * buffer.segment_len;
      total_samples += static_cast<std::size_t>(
          std::min(seg_end, s + cfg.recurrent_seq) - s);
    }
  } else {
    total_samples = idx.size();
  }
  const double inv_n = 1.0 / static_cast<double>(total_samples);

  const std::size_t n_chunks = std::min<std::size_t>(kLossChunks, idx.size());
  std::vector<ChunkAccum> acc;
  acc.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c)
    acc.push_back(ChunkAccum::zeros(params));

  par::chunked(idx.size(), n_chunks, parallel,
               [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    if (recurrent) {
      for (std::size_t k = begin; k < end; ++k) {
        const int s = idx[k];
        const int seg_end = (s / buffer.segment_len + 1) * buffer.segment_len;
        const int e = std::min(seg_end, s + cfg.recurrent_seq);
        window_recurrent(params, buffer, s, e, inv_n, cfg, acc[chunk]);
      }
    } else {
      chunk_feedforward(params, buffer, idx, begin, end, inv_n, cfg,
                        acc[chunk]);
    }
  });

  ChunkAccum total = ChunkAccum::zeros(params);
  Vec grad = Vec::Zero(params.param_count());
  for (std::size_t c = 0; c < n_chunks; ++c) {
    add_accum_to_flat(params, acc[c], grad);
    total.policy += acc[c].policy;
    total.value += acc[c].value;
    total.clip_count += acc[c].clip_count;
    total.kl_sum += acc[c].kl_sum;
    total.samples += acc[c].samples;
  }
  // entropy enters once: L -= ent_coef * H, dH/dlog_std = 1 per dimension
  grad.segment(log_std_offset(params), params.act_dim()).array() -=
      entropy_coef;

  grad_out = grad;
  PpoLossParts parts;
  parts.policy = total.policy;
  parts.value = total.value;
  parts.entropy = gaussian_entropy(params.actor.log_std);
  parts.total = parts.policy + cfg.vf_coef * parts.value -
                entropy_coef * parts.entropy;
  parts.clip_fraction = total.clip_count / static_cast<double>(total.samples);
  parts.approx_kl = total.kl_sum / static_cast<double>(total.samples);
  return parts;
}

UpdateDiagnostics ppo_update(const RolloutBuffer& buffer, PolicyParams& params,
                             nn::Adam& adam, Rng& shuffle_rng,
                             const PpoConfig& cfg, std::int64_t step_count) {
  const PolicyParams entry_params = params;
  const double lr = schedule(cfg.lr_start, cfg.lr_end, step_count,
                             cfg.total_steps);
  const double ent_coef = schedule(cfg.entropy_start, cfg.entropy_end,
                                   step_count, cfg.total_steps);

  std::vector<int> idx;
  int per_minibatch = 0;
  if (params.actor.recurrent()) {
    for (int seg = 0; seg < buffer.n_segments; ++seg)
      for (int s = 0; s < buffer.segment_len; s += cfg.recurrent_seq)
        idx.push_back(seg * buffer.segment_len + s);
    per_minibatch = std::max<int>(1, cfg.minibatch / cfg.recurrent_seq);
  } else {
    idx.resize(static_cast<std::size_t>(buffer.size()));
    std::iota(idx.begin(), idx.end(), 0);
    per_minibatch = cfg.minibatch;
  }

  UpdateDiagnostics diag;
  diag.lr = lr;
  diag.entropy_coef = ent_coef;
  int n_minibatches = 0;

  Vec theta = params.flatten();
  Vec grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[static_cast<std::size_t>(
                                rng_below(shuffle_rng, static_cast<std::int64_t>(i)))]);
    for (std::size_t at = 0; at < idx.size();
         at += static_cast<std::size_t>(per_minibatch)) {
      const std::size_t end =
          std::min(idx.size(), at + static_cast<std::size_t>(per_minibatch));
      const std::span<const int> mb(idx.data() + at, end - at);
      const PpoLossParts parts =
          ppo_loss_and_grad(params, buffer, mb, cfg, ent_coef, grad,
                            cfg.parallel);
      if (!std::isfinite(parts.total) || !grad.allFinite())
        throw UpdateFailure("ppo_update: non-finite loss", entry_params);
      const double norm = grad.norm();
      if (norm > cfg.max_grad_norm) grad *= cfg.max_grad_norm / norm;
      adam.step(theta, grad, lr);
      params.unflatten(theta);

      diag.clip_fraction += parts.clip_fraction;
      diag.approx_kl += parts.approx_kl;
      diag.policy_loss += parts.policy;
      diag.value_loss += parts.value;
      diag.entropy += parts.entropy;
      ++n_minibatches;
    }
  }
  const double inv = 1.0 / std::max(1, n_minibatches);
  diag.clip_fraction *= inv;
  diag.approx_kl *= inv;
  diag.policy_loss *= inv;
  diag.value_loss *= inv;
  diag.entropy *= inv;
  return diag;
}

// --- checkpoints -------------------------------------------------------------

namespace {

Json actor_to_json(const ActorNet& a) {
  Json j;
  j["tag"] = arch_name(a.tag);
  if (a.recurrent()) {
    j["wx"] = json_from_mat(a.cell.wx);
    j["wh"] = json_from_mat(a.cell.wh);
    j["b"] = json_from_vec(a.cell.b);
    j["head_w"] = json_from_mat(a.head_w);
    j["head_b"] = json_from_vec(a.head_b);
  } else {
    j["mlp"] = json_from_mlp(a.mlp);
  }
  j["log_std"] = json_from_vec(a.log_std);
  return j;
}

Json critic_to_json(const CriticNet& c) {
  Json j;
  j["recurrent"] = c.is_recurrent;
  if (c.is_recurrent) {
    j["wx"] = json_from_mat(c.cell.wx);
    j["wh"] = json_from_mat(c.cell.wh);
    j["b"] = json_from_vec(c.cell.b);
    j["head_w"] = json_from_mat(c.head_w);
    j["head_b"] = json_from_vec(c.head_b);
  } else {
    j["mlp"] = json_from_mlp(c.mlp);
  }
  return j;
}

Json config_to_json(const PpoConfig& c) {
  Json j;
  j["arch"] = arch_name(c.arch);
  j["lr_start"] = c.lr_start;
  j["lr_end"] = c.lr_end;
  j["entropy_start"] = c.entropy_start;
  j["entropy_end"] = c.entropy_end;
  j["minibatch"] = c.minibatch;
  j["epochs"] = c.epochs;
  j["clip"] = c.clip;
  j["total_steps"] = c.total_steps;
  j["gamma"] = c.gamma;
  j["lambda"] = c.lambda;
  j["vf_coef"] = c.vf_coef;
  j["max_grad_norm"] = c.max_grad_norm;
  j["decay_alpha"] = c.decay_alpha;
  j["workers"] = c.workers;
  j["n_steps"] = c.n_steps;
  j["seed"] = c.seed;
  j["max_episode_seconds"] = c.max_episode_seconds;
  j["speed_min"] = c.speed_min;
  j["speed_max"] = c.speed_max;
  j["rsi"] = c.rsi;
  j["filter_beta"] = c.filter_beta;
  j["imitation_enabled"] = c.imitation_enabled;
  j["reference_in_obs"] = c.reference_in_obs;
  j["recurrent_seq"] = c.recurrent_seq;
  j["init_log_std"] = c.init_log_std;
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

PpoConfig config_from_json(const Json& j) {
  PpoConfig c;
  c.arch = parse_arch(j.at("arch"));
  c.lr_start = j.at("lr_start");
  c.lr_end = j.at("lr_end");
  c.entropy_start = j.at("entropy_start");
  c.entropy_end = j.at("entropy_end");
  c.minibatch = j.at("minibatch");
  c.epochs = j.at("epochs");
  c.clip = j.at("clip");
  c.total_steps = j.at("total_steps");
  c.gamma = j.at("gamma");
  c.lambda = j.at("lambda");
  c.vf_coef = j.at("vf_coef");
  c.max_grad_norm = j.at("max_grad_norm");
  c.decay_alpha = j.at("decay_alpha");
  c.workers = j.at("workers");
  c.n_steps = j.at("n_steps");
  c.seed = j.at("seed");
  c.max_episode_seconds = j.at("max_episode_seconds");
  c.speed_min = j.at("speed_min");
  c.speed_max = j.at("speed_max");
  c.rsi = j.at("rsi");
  c.filter_beta = j.at("filter_beta");
  c.imitation_enabled = j.at("imitation_enabled");
  c.reference_in_obs = j.at("reference_in_obs");
  c.recurrent_seq = j.at("recurrent_seq");
  c.init_log_std = j.at("init_log_std");
  c.checkpoint_every = j.at("checkpoint_every");
  return c;
}

}  // namespace

std::string PolicyCheckpoint::to_json_string() const {
  Json j;
  j["format"] = "policy_checkpoint";
  j["version"] = version;
  j["config"] = config_to_json(config);
  j["actor"] = actor_to_json(params.actor);
  j["critic"] = critic_to_json(params.critic);
  j["normalizer"] = {{"mean", json_from_vec(normalizer.mean)},
                     {"var", json_from_vec(normalizer.var)},
                     {"count", normalizer.count}};
  j["adam"] = {{"m", json_from_vec(adam.m)},
               {"v", json_from_vec(adam.v)},
               {"t", adam.t}};
  j["worker_rng"] = worker_rng;
  j["trainer_rng"] = trainer_rng;
  j["global_step"] = global_step;
  j["update_index"] = update_index;
  j["gait_hash"] = gait_hash;
  return j.dump(1);
}

PolicyCheckpoint PolicyCheckpoint::from_json_string(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidData(std::string("checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "policy_checkpoint")
    throw InvalidData("checkpoint: wrong format tag");
  PolicyCheckpoint c;
  c.version = j.at("version");
  c.config = config_from_json(j.at("config"));

  const Json& ja = j.at("actor");
  c.params.tag = parse_arch(ja.at("tag"));
  c.params.actor.tag = c.params.tag;
  if (c.params.actor.recurrent()) {
    c.params.actor.cell.wx = mat_from_json(ja.at("wx"));
    c.params.actor.cell.wh = mat_from_json(ja.at("wh"));
    c.params.actor.cell.b = vec_from_json(ja.at("b"));
    c.params.actor.head_w = mat_from_json(ja.at("head_w"));
    c.params.actor.head_b = vec_from_json(ja.at("head_b"));
    c.params.actor.mlp = nn::Mlp::zeros({1, 1}, nn::Act::tanh);
  } else {
    c.params.actor.mlp = mlp_from_json(ja.at("mlp"));
    c.params.actor.cell = RnnCell::zeros(1, 1);
    c.params.actor.head_w = Mat::Zero(0, 0);
    c.params.actor.head_b = Vec::Zero(0);
  }
  c.params.actor.log_std = vec_from_json(ja.at("log_std"));

  const Json& jc = j.at("critic");
  c.params.critic.is_recurrent = jc.at("recurrent");
  if (c.params.critic.is_recurrent) {
    c.params.critic.cell.wx = mat_from_json(jc.at("wx"));
    c.params.critic.cell.wh = mat_from_json(jc.at("wh"));
    c.params.critic.cell.b = vec_from_json(jc.at("b"));
    c.params.critic.head_w = mat_from_json(jc.at("head_w"));
    c.params.critic.head_b = vec_from_json(jc.at("head_b"));
    c.params.critic.mlp = nn::Mlp::zeros({1, 1}, nn::Act::tanh);
  } else {
    c.params.critic.mlp = mlp_from_json(jc.at("mlp"));
    c.params.critic.cell = RnnCell::zeros(1, 1);
    c.params.critic.head_w = Mat::Zero(0, 0);
    c.params.critic.head_b = Vec::Zero(0);
  }

  c.normalizer.mean = vec_from_json(j.at("normalizer").at("mean"));
  c.normalizer.var = vec_from_json(j.at("normalizer").at("var"));
  c.normalizer.count = j.at("normalizer").at("count");
  c.adam.m = vec_from_json(j.at("adam").at("m"));
  c.adam.v = vec_from_json(j.at("adam").at("v"));
  c.adam.t = j.at("adam").at("t");
  c.worker_rng = j.at("worker_rng").get<std::vector<std::string>>();
  c.trainer_rng = j.at("trainer_rng");
  c.global_step = j.at("global_step");
  c.update_index = j.at("update_index");
  c.gait_hash = j.at("gait_hash");
  return c;
}

void PolicyCheckpoint::save(const std::string& path) const {
  write_text_file(path, to_json_string());
}

PolicyCheckpoint PolicyCheckpoint::load(const std::string& path) {
  return from_json_string(read_text_file(path));
}

std::string training_log_csv(const std::vector<IterStats>& log) {
  std::string out =
      "update,step,mean_return,mean_length,clip_frac,approx_kl,lr,"
      "entropy_coef,w_imit,w_gait\n";
  for (const IterStats& s : log) {
    out += std::to_string(s.update) + ',' + std::to_string(s.step) + ',' +
           format_double(s.mean_return) + ',' + format_double(s.mean_length) +
           ',' + format_double(s.clip_frac) + ',' + format_double(s.approx_kl) +
           ',' + format_double(s.lr) + ',' + format_double(s.entropy_coef) +
           ',' + format_double(s.w_imit) + ',' + format_double(s.w_gait) + '\n';
  }
  return out;
}

// --- training loop -----------------------------------------------------------

namespace {

std::string rng_to_string(const Rng& rng) {
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

Rng rng_from_string(const std::string& text) {
  Rng rng;
  std::istringstream ss(text);
  ss >> rng;
  if (!ss) throw InvalidData("bad rng state string");
  return rng;
}

struct Worker {
  std::unique_ptr<Env> env;
  Rng rng{0};
  Vec actor_h, critic_h;
  bool active = false;
  double ep_return = 0.0;
  int ep_len = 0;
  Observation obs;
  // completed this iteration
  std::vector<double> returns;
  std::vector<int> lengths;
  double bootstrap = 0.0;

  std::string snapshot() const {
    Json j;
    j["rng"] = rng_to_string(rng);
    j["active"] = active;
    j["ep_return"] = ep_return;
    j["ep_len"] = ep_len;
    j["actor_h"] = json_from_vec(actor_h);
    j["critic_h"] = json_from_vec(critic_h);
    if (active) j["env"] = env->snapshot_json();
    return j.dump();
  }

  void restore(const std::string& text) {
    Json j = Json::parse(text);
    rng = rng_from_string(j.at("rng"));
    active = j.at("active");
    ep_return = j.at("ep_return");
    ep_len = j.at("ep_len");
    actor_h = vec_from_json(j.at("actor_h"));
    critic_h = vec_from_json(j.at("critic_h"));
    if (active) {
      env->restore_json(j.at("env"));
      obs = env->observation();
    }
  }
};

}  // namespace

TrainPolicyResult train_policy(
    const BipedModel& model, const GaitNetParams& gait, const PpoConfig& cfg,
    const std::function<void(const PolicyCheckpoint&, int)>& checkpoint_sink,
    const PolicyCheckpoint* resume) {
  cfg.validate();
  model.validate();
  gait.validate();

  Rng init_rng(splitmix64(cfg.seed));
  PolicyParams params =
      resume ? resume->params
             : PolicyParams::init(cfg.arch, kObsDim, kNumActuated, init_rng,
                                  cfg.init_log_std);
  ObsNormalizer normalizer = resume ? resume->normalizer : ObsNormalizer(kObsDim);
  nn::Adam adam;
  if (resume) {
    adam = resume->adam;
  } else {
    adam.init(params.param_count());
  }
  Rng trainer_rng = resume ? rng_from_string(resume->trainer_rng)
                           : Rng(splitmix64(cfg.seed ^ 0x7261696E65726Aull));
  std::int64_t global_step = resume ? resume->global_step : 0;
  int update0 = resume ? resume->update_index : 0;

  const DecaySchedule decay{cfg.decay_alpha, cfg.total_steps};
  Vec7 torque_limits;
  for (int j = 0; j < kNumActuated; ++j)
    torque_limits[j] = model.torque_limit[static_cast<std::size_t>(j)];

  std::vector<Worker> workers(static_cast<std::size_t>(cfg.workers));
  for (int w = 0; w < cfg.workers; ++w) {
    Worker& wk = workers[static_cast<std::size_t>(w)];
    wk.env = std::make_unique<Env>(model, gait);
    wk.env->set_decay(decay);
    wk.actor_h = Vec::Zero(std::max(1, params.actor.carry_dim()));
    wk.critic_h = Vec::Zero(std::max(1, params.critic.carry_dim()));
    if (resume) {
      wk.restore(resume->worker_rng[static_cast<std::size_t>(w)]);
    } else {
      wk.rng = Rng(splitmix64(
          cfg.seed + 0x9E3779B9ull * (static_cast<std::uint64_t>(w) + 1)));
    }
  }

  RolloutBuffer buffer;
  buffer.allocate(kObsDim, kNumActuated, cfg.n_steps, cfg.workers,
                  params.actor.carry_dim(), params.critic.carry_dim());
  Mat raw_obs(kObsDim, buffer.size());

  TrainPolicyResult result;
  double last_mean_return = 0.0, last_mean_length = 0.0;

  const std::int64_t batch = static_cast<std::int64_t>(cfg.n_steps) * cfg.workers;
  const int n_updates = static_cast<int>((cfg.total_steps + batch - 1) / batch);

  for (int update = update0; update < n_updates; ++update) {
    const ObsNormalizer snapshot = normalizer;
    const std::int64_t step_base = global_step;

#pragma omp parallel for schedule(static, 1) if (cfg.parallel)
    for (int w = 0; w < cfg.workers; ++w) {
      Worker& wk = workers[static_cast<std::size_t>(w)];
      wk.returns.clear();
      wk.lengths.clear();
      wk.env->set_global_step(step_base);
      const int base = w * cfg.n_steps;
      for (int k = 0; k < cfg.n_steps; ++k) {
        const int i = base + k;
        if (!wk.active) {
          EpisodeConfig ep;
          ep.terrain = make_training_terrain(wk.rng);
          ep.speed = SpeedProfile::constant(
              rng_range(wk.rng, cfg.speed_min, cfg.speed_max));
          ep.max_duration = cfg.max_episode_seconds;
          ep.rsi = cfg.rsi;
          ep.seed = wk.rng();
          ep.filter_beta = cfg.filter_beta;
          ep.imitation_enabled = cfg.imitation_enabled;
          ep.reference_in_obs = cfg.reference_in_obs;
          wk.obs = wk.env->reset(ep);
          wk.env->set_global_step(step_base);
          wk.actor_h.setZero();
          wk.critic_h.setZero();
          wk.active = true;
          wk.ep_return = 0.0;
          wk.ep_len = 0;
          buffer.starts[static_cast<std::size_t>(i)] = 1;
        } else {
          buffer.starts[static_cast<std::size_t>(i)] = 0;
        }

        raw_obs.col(i) = wk.obs.v;
        const Vec obs_n = snapshot.normalize(wk.obs.v);
        buffer.obs.col(i) = obs_n;
        if (params.actor.carry_dim() > 0) buffer.actor_carry.col(i) = wk.actor_h;
        if (params.critic.carry_dim() > 0)
          buffer.critic_carry.col(i) = wk.critic_h;

        Vec a_carry_out, c_carry_out;
        const Vec mean = params.actor.mean(obs_n, wk.actor_h, &a_carry_out);
        const double value =
            params.critic.value(obs_n, wk.critic_h, &c_carry_out);
        if (params.actor.carry_dim() > 0) wk.actor_h = a_carry_out;
        if (params.critic.carry_dim() > 0) wk.critic_h = c_carry_out;

        Vec u(kNumActuated);
        for (int j = 0; j < kNumActuated; ++j)
          u[j] = mean[j] +
                 std::exp(params.actor.log_std[j]) * rng_normal(wk.rng);
        const double lp = gaussian_logp(u, mean, params.actor.log_std);
        Vec7 torque;
        for (int j = 0; j < kNumActuated; ++j)
          torque[j] = torque_limits[j] * std::tanh(u[j]);

        const Env::StepOut out = wk.env->step(torque);
        buffer.actions.col(i) = u;
        buffer.logp[i] = lp;
        buffer.values[i] = value;
        buffer.rewards[i] = out.reward.total;
        buffer.dones[static_cast<std::size_t>(i)] = out.done ? 1 : 0;
        wk.ep_return += out.reward.total;
        wk.ep_len += 1;
        if (out.done) {
          wk.returns.push_back(wk.ep_return);
          wk.lengths.push_back(wk.ep_len);
          wk.active = false;
        } else {
          wk.obs = out.obs;
        }
      }
      if (wk.active) {
        Vec tmp;
        wk.bootstrap =
            params.critic.value(snapshot.normalize(wk.obs.v), wk.critic_h, &tmp);
      } else {
        wk.bootstrap = 0.0;
      }
      buffer.segment_bootstrap[static_cast<std::size_t>(w)] = wk.bootstrap;
    }

    normalizer.update(raw_obs);

    for (int w = 0; w < cfg.workers; ++w) {
      const int base = w * cfg.n_steps;
      compute_gae(
          std::span<const double>(buffer.rewards.data() + base,
                                  static_cast<std::size_t>(cfg.n_steps)),
          std::span<const double>(buffer.values.data() + base,
                                  static_cast<std::size_t>(cfg.n_steps)),
          std::span<const std::uint8_t>(buffer.dones.data() + base,
                                        static_cast<std::size_t>(cfg.n_steps)),
          buffer.segment_bootstrap[static_cast<std::size_t>(w)], cfg.gamma,
          cfg.lambda,
          std::span<double>(buffer.advantages.data() + base,
                            static_cast<std::size_t>(cfg.n_steps)),
          std::span<double>(buffer.returns.data() + base,
                            static_cast<std::size_t>(cfg.n_steps)));
    }
    const double adv_mean = buffer.advantages.mean();
    const double adv_std = std::sqrt(
        (buffer.advantages.array() - adv_mean).square().mean() + 1e-8);
    buffer.advantages = (buffer.advantages.array() - adv_mean) / adv_std;

    const UpdateDiagnostics diag =
        ppo_update(buffer, params, adam, trainer_rng, cfg, step_base);
    global_step += batch;

    double ret_sum = 0.0, len_sum = 0.0;
    int n_eps = 0;
    for (const Worker& wk : workers) {
      for (double r : wk.returns) ret_sum += r;
      for (int l : wk.lengths) len_sum += l;
      n_eps += static_cast<int>(wk.returns.size());
    }
    if (n_eps > 0) {
      last_mean_return = ret_sum / n_eps;
      last_mean_length = len_sum / n_eps;
    }

    IterStats stats;
    stats.update = update;
    stats.step = global_step;
    stats.mean_return = last_mean_return;
    stats.mean_length = last_mean_length;
    stats.clip_frac = diag.clip_fraction;
    stats.approx_kl = diag.approx_kl;
    stats.lr = diag.lr;
    stats.entropy_coef = diag.entropy_coef;
    stats.w_imit = decay.imitation_weight(global_step);
    stats.w_gait = decay.gait_weight(global_step);
    result.log.push_back(stats);

    const bool last = update + 1 == n_updates;
    const bool cadence =
        cfg.checkpoint_every > 0 && (update + 1) % cfg.checkpoint_every == 0;
    if (last || (checkpoint_sink && cadence)) {
      PolicyCheckpoint ck;
      ck.config = cfg;
      ck.params = params;
      ck.normalizer = normalizer;
      ck.adam = adam;
      for (const Worker& wk : workers) ck.worker_rng.push_back(wk.snapshot());
      ck.trainer_rng = rng_to_string(trainer_rng);
      ck.global_step = global_step;
      ck.update_index = update + 1;
      const std::string gait_json = gait.to_json_string();
      ck.gait_hash = fnv1a(gait_json.data(), gait_json.size());
      if (checkpoint_sink && (cadence || last)) checkpoint_sink(ck, update + 1);
      if (last) result.checkpoint = std::move(ck);
    }
  }

  return result;
}

}  // namespace biped
