#include "biped/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace biped {

namespace {

// Internal chain: two massless prismatic nodes for the base translation,
// then seven revolute nodes carrying the real links.
//   node: 0 base-x, 1 base-z, 2 torso, 3 r thigh, 4 r shank, 5 r foot,
//         6 l thigh, 7 l shank, 8 l foot
constexpr int kParent[kNumCoords] = {-1, 0, 1, 2, 3, 4, 2, 6, 7};
// chain node -> link index (-1 for the massless base nodes)
constexpr int kLinkOf[kNumCoords] = {-1, -1, 0, 1, 2, 3, 4, 5, 6};
constexpr int kRightFootLink = 3;
constexpr int kLeftFootLink = 6;

using M3 = Eigen::Matrix3d;
using V3 = Eigen::Vector3d;

inline Vec2 rot(double angle, const Vec2& p) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p[0] - s * p[1], s * p[0] + c * p[1]};
}

inline Vec2 perp(const Vec2& p) { return {-p[1], p[0]}; }

inline double cross2(const Vec2& a, const Vec2& b) {
  return a[0] * b[1] - a[1] * b[0];
}

// Planar motion transform from parent coordinates to child coordinates for a
// child frame rotated by `angle` with origin at `p` (parent coordinates).
inline M3 xform(double angle, const Vec2& p) {
  const double c = std::cos(angle), s = std::sin(angle);
  M3 x;
  x << 1.0, 0.0, 0.0,                       //
      s * p[0] - c * p[1], c, s,            //
      c * p[0] + s * p[1], -s, c;
  return x;
}

// motion x motion and motion x* force planar cross products
inline V3 crm(const V3& v, const V3& m) {
  return {0.0, v[2] * m[0] - v[0] * m[2], -v[1] * m[0] + v[0] * m[1]};
}

inline V3 crf(const V3& v, const V3& f) {
  return {v[1] * f[2] - v[2] * f[1], -v[0] * f[2], v[0] * f[1]};
}

inline M3 spatial_inertia(const LinkParams& l) {
  const double m = l.mass;
  const double cx = l.com[0], cz = l.com[1];
  M3 inertia;
  inertia << l.inertia + m * (cx * cx + cz * cz), -m * cz, m * cx,  //
      -m * cz, m, 0.0,                                             //
      m * cx, 0.0, m;
  return inertia;
}

struct ChainGeometry {
  std::array<Vec2, kNumCoords> anchor;  // joint origin in the parent frame
  std::array<M3, kNumCoords> inertia;   // spatial inertia in link coords
};

ChainGeometry chain_geometry(const BipedModel& model) {
  ChainGeometry g;
  for (auto& a : g.anchor) a.setZero();
  g.anchor[4] = {0.0, -model.links[1].length};  // knee on the thigh
  g.anchor[5] = {0.0, -model.links[2].length};  // ankle on the shank
  g.anchor[7] = {0.0, -model.links[4].length};
  g.anchor[8] = {0.0, -model.links[5].length};
  for (int n = 0; n < kNumCoords; ++n) {
    g.inertia[n] = kLinkOf[n] < 0
                       ? M3::Zero()
                       : spatial_inertia(model.links[kLinkOf[n]]);
  }
  return g;
}

// joint motion subspace in child coordinates
inline V3 subspace(int node) {
  if (node == 0) return {0.0, 1.0, 0.0};
  if (node == 1) return {0.0, 0.0, 1.0};
  return {1.0, 0.0, 0.0};
}

std::array<M3, kNumCoords> joint_transforms(const BipedModel& model,
                                            const Vec9& q) {
  const ChainGeometry g = chain_geometry(model);
  std::array<M3, kNumCoords> xup;
  xup[0] = xform(0.0, {q[0], 0.0});
  xup[1] = xform(0.0, {0.0, q[1]});
  for (int n = 2; n < kNumCoords; ++n) xup[n] = xform(q[n], g.anchor[n]);
  return xup;
}

}  // namespace

Kinematics compute_kinematics(const BipedModel& model, const Vec9& q,
                              const Vec9& qd) {
  const ChainGeometry g = chain_geometry(model);
  std::array<double, kNumCoords> angle, omega;
  std::array<Vec2, kNumCoords> origin, vel;
  for (int n = 0; n < kNumCoords; ++n) {
    if (n == 0) {
      angle[n] = 0.0;
      omega[n] = 0.0;
      origin[n] = {q[0], 0.0};
      vel[n] = {qd[0], 0.0};
      continue;
    }
    const int p = kParent[n];
    if (n == 1) {
      angle[n] = angle[p];
      omega[n] = omega[p];
      origin[n] = origin[p] + Vec2{0.0, q[1]};
      vel[n] = vel[p] + Vec2{0.0, qd[1]};
      continue;
    }
    const Vec2 arm = rot(angle[p], g.anchor[n]);
    angle[n] = angle[p] + q[n];
    omega[n] = omega[p] + qd[n];
    origin[n] = origin[p] + arm;
    vel[n] = vel[p] + omega[p] * perp(arm);
  }

  Kinematics kin;
  for (int n = 2; n < kNumCoords; ++n) {
    const int l = kLinkOf[n];
    kin.angle[l] = angle[n];
    kin.origin[l] = origin[n];
    kin.omega[l] = omega[n];
    kin.origin_vel[l] = vel[n];
  }
  for (int pt = 0; pt < kNumContactPoints; ++pt) {
    const int foot = pt < kPointsPerFoot ? kRightFootLink : kLeftFootLink;
    const Vec2 offset = rot(kin.angle[foot],
                            model.contact_offsets[pt % kPointsPerFoot]);
    kin.point_pos[pt] = kin.origin[foot] + offset;
    kin.point_vel[pt] = kin.origin_vel[foot] + kin.omega[foot] * perp(offset);
  }
  return kin;
}

Mat9 mass_matrix(const BipedModel& model, const Vec9& q) {
  const ChainGeometry g = chain_geometry(model);
  const auto xup = joint_transforms(model, q);
  std::array<M3, kNumCoords> ic;
  for (int n = 0; n < kNumCoords; ++n) ic[n] = g.inertia[n];
  for (int n = kNumCoords - 1; n > 0; --n)
    ic[kParent[n]] += xup[n].transpose() * ic[n] * xup[n];

  Mat9 m = Mat9::Zero();
  for (int i = 0; i < kNumCoords; ++i) {
    V3 f = ic[i] * subspace(i);
    m(i, i) = subspace(i).dot(f);
    int j = i;
    while (kParent[j] >= 0) {
      f = xup[j].transpose() * f;
      j = kParent[j];
      m(i, j) = m(j, i) = f.dot(subspace(j));
    }
  }
  return m;
}

Vec9 bias_forces(const BipedModel& model, const Vec9& q, const Vec9& qd) {
  const ChainGeometry g = chain_geometry(model);
  const auto xup = joint_transforms(model, q);
  std::array<V3, kNumCoords> v, a, f;
  for (int n = 0; n < kNumCoords; ++n) {
    const int p = kParent[n];
    const V3 vj = subspace(n) * qd[n];
    const V3 vp = p < 0 ? V3::Zero() : v[p];
    const V3 ap = p < 0 ? V3(0.0, 0.0, model.gravity) : a[p];
    v[n] = xup[n] * vp + vj;
    a[n] = xup[n] * ap + crm(v[n], vj);
    f[n] = g.inertia[n] * a[n] + crf(v[n], g.inertia[n] * v[n]);
  }
  Vec9 bias;
  for (int n = kNumCoords - 1; n >= 0; --n) {
    bias[n] = subspace(n).dot(f[n]);
    if (kParent[n] >= 0) f[kParent[n]] += xup[n].transpose() * f[n];
  }
  return bias;
}

Vec9 generalized_accel(const BipedModel& model, const Vec9& q, const Vec9& qd,
                       const Vec9& applied) {
  const Mat9 m = mass_matrix(model, q);
  const Vec9 rhs = applied - bias_forces(model, q, qd);

  bool any_locked = false;
  for (bool b : model.locked) any_locked = any_locked || b;
  if (!any_locked) return m.ldlt().solve(rhs);

  std::vector<int> free;
  for (int i = 0; i < kNumCoords; ++i)
    if (!model.locked[i]) free.push_back(i);
  const auto nf = static_cast<Eigen::Index>(free.size());
  Mat mf(nf, nf);
  Vec rf(nf);
  for (Eigen::Index r = 0; r < nf; ++r) {
    rf[r] = rhs[free[static_cast<std::size_t>(r)]];
    for (Eigen::Index c = 0; c < nf; ++c)
      mf(r, c) = m(free[static_cast<std::size_t>(r)],
                   free[static_cast<std::size_t>(c)]);
  }
  const Vec af = mf.ldlt().solve(rf);
  Vec9 qdd = Vec9::Zero();
  for (Eigen::Index r = 0; r < nf; ++r)
    qdd[free[static_cast<std::size_t>(r)]] = af[r];
  return qdd;
}

Vec9 gravity_compensation(const BipedModel& model, const BipedState& state) {
  return bias_forces(model, state.q, Vec9::Zero());
}

double kinetic_energy(const BipedModel& model, const Vec9& q, const Vec9& qd) {
  const Kinematics kin = compute_kinematics(model, q, qd);
  double t = 0.0;
  for (int l = 0; l < kNumLinks; ++l) {
    const LinkParams& link = model.links[static_cast<std::size_t>(l)];
    const Vec2 arm = rot(kin.angle[l], link.com);
    const Vec2 vcom = kin.origin_vel[l] + kin.omega[l] * perp(arm);
    t += 0.5 * link.mass * vcom.squaredNorm() +
         0.5 * link.inertia * kin.omega[l] * kin.omega[l];
  }
  return t;
}

double potential_energy(const BipedModel& model, const Vec9& q) {
  const Kinematics kin = compute_kinematics(model, q, Vec9::Zero());
  double v = 0.0;
  for (int l = 0; l < kNumLinks; ++l) {
    const LinkParams& link = model.links[static_cast<std::size_t>(l)];
    const double zc = kin.origin[l][1] + rot(kin.angle[l], link.com)[1];
    v += link.mass * model.gravity * zc;
  }
  return v;
}

double total_energy(const BipedModel& model, const BipedState& state) {
  return kinetic_energy(model, state.q, state.qd) +
         potential_energy(model, state.q);
}

ComState com_state(const BipedModel& model, const BipedState& state) {
  const Kinematics kin = compute_kinematics(model, state.q, state.qd);
  double mass = 0.0;
  Vec2 pos = Vec2::Zero(), vel = Vec2::Zero();
  for (int l = 0; l < kNumLinks; ++l) {
    const LinkParams& link = model.links[static_cast<std::size_t>(l)];
    const Vec2 arm = rot(kin.angle[l], link.com);
    pos += link.mass * (kin.origin[l] + arm);
    vel += link.mass * (kin.origin_vel[l] + kin.omega[l] * perp(arm));
    mass += link.mass;
  }
  pos /= mass;
  vel /= mass;
  return {pos[0], pos[1], vel[0], vel[1]};
}

namespace {

struct PointForce {
  Vec2 force = Vec2::Zero();  // world frame
  double depth = 0.0;
};

// Penalty contact at one point. The normal spring pushes up on penetration
// depth; damping resists descent only, so the normal force never pulls. The
// tangential spring-damper acts from a per-point anchor that slides once the
// Coulomb cone saturates.
PointForce point_contact(const BipedModel& model, const Vec2& p, const Vec2& v,
                         double terrain_h, double& anchor) {
  PointForce out;
  const double depth = terrain_h - p[1];
  if (depth <= 0.0) {
    anchor = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double fn =
      model.contact_kp * depth + model.contact_kd * std::max(0.0, -v[1]);
  if (std::isnan(anchor)) anchor = p[0];
  double ft = -model.contact_kt * (p[0] - anchor) - model.contact_ct * v[0];
  const double limit = model.friction_mu * fn;
  if (std::abs(ft) > limit) {
    ft = ft > 0.0 ? limit : -limit;
    anchor = p[0] + (ft + model.contact_ct * v[0]) / model.contact_kt;
  }
  out.force = {ft, fn};
  out.depth = depth;
  return out;
}

ContactReport contact_core(const BipedModel& model, const Kinematics& kin,
                           const TerrainProfile& terrain,
                           std::array<double, kNumContactPoints>& anchors,
                           std::array<Vec2, kNumContactPoints>* forces_out) {
  ContactReport report;
  for (int pt = 0; pt < kNumContactPoints; ++pt) {
    FootContact& foot = pt < kPointsPerFoot ? report.right : report.left;
    const Vec2 p = kin.point_pos[pt];
    const double h = terrain.height_at(p[0]);
    const PointForce pf =
        point_contact(model, p, kin.point_vel[pt], h, anchors[pt]);
    PointContact& rec = foot.points[static_cast<std::size_t>(pt % kPointsPerFoot)];
    rec.position = p;
    rec.normal_force = pf.force[1];
    rec.tangent_force = pf.force[0];
    foot.vertical_force += pf.force[1];
    if (pf.force[1] > 0.0) ++foot.active_count;
    foot.reference_position += p / static_cast<double>(kPointsPerFoot);
    if (forces_out != nullptr) (*forces_out)[pt] = pf.force;
  }
  return report;
}

}  // namespace

ContactReport contact_forces(const BipedModel& model, const BipedState& state,
                             const TerrainProfile& terrain) {
  const Kinematics kin = compute_kinematics(model, state.q, state.qd);
  auto anchors = state.contact_anchor;  // pure query: anchors not persisted
  return contact_core(model, kin, terrain, anchors, nullptr);
}

std::pair<BipedState, ContactReport> step(const BipedModel& model,
                                          const BipedState& state,
                                          const Vec7& torques,
                                          const TerrainProfile& terrain,
                                          double dt) {
  BipedState s = state;
  for (int i = 0; i < kNumCoords; ++i)
    if (model.locked[static_cast<std::size_t>(i)]) s.qd[i] = 0.0;

  Vec9 applied = Vec9::Zero();
  for (int j = 0; j < kNumActuated; ++j) {
    const double lim = model.torque_limit[static_cast<std::size_t>(j)];
    applied[2 + j] = std::clamp(torques[j], -lim, lim);
  }

  // joint-limit penalties on the six leg joints
  for (int c = 3; c < kNumCoords; ++c) {
    const Vec2& lims = model.joint_limits[static_cast<std::size_t>((c - 3) % 3)];
    if (s.q[c] > lims[1])
      applied[c] += -model.limit_kp * (s.q[c] - lims[1]) -
                    model.limit_kd * std::max(0.0, s.qd[c]);
    else if (s.q[c] < lims[0])
      applied[c] += -model.limit_kp * (s.q[c] - lims[0]) -
                    model.limit_kd * std::min(0.0, s.qd[c]);
  }

  const Kinematics kin = compute_kinematics(model, s.q, s.qd);
  std::array<Vec2, kNumContactPoints> forces;
  contact_core(model, kin, terrain, s.contact_anchor, &forces);
  for (int pt = 0; pt < kNumContactPoints; ++pt) {
    const Vec2& f = forces[pt];
    if (f[0] == 0.0 && f[1] == 0.0) continue;
    const Vec2& p = kin.point_pos[pt];
    applied[0] += f[0];
    applied[1] += f[1];
    const bool right = pt < kPointsPerFoot;
    const int joint_coords[3] = {right ? 3 : 6, right ? 4 : 7, right ? 5 : 8};
    applied[2] += cross2(p - kin.origin[0], f);
    for (int k = 0; k < 3; ++k) {
      const int link = kLinkOf[joint_coords[k]];
      applied[joint_coords[k]] += cross2(p - kin.origin[link], f);
    }
  }

  const Vec9 qdd = generalized_accel(model, s.q, s.qd, applied);
  s.qd += dt * qdd;
  for (int i = 0; i < kNumCoords; ++i)
    if (model.locked[static_cast<std::size_t>(i)]) s.qd[i] = 0.0;
  s.q += dt * s.qd;
  s.time += dt;

  if (!s.q.allFinite() || !s.qd.allFinite() ||
      s.qd.cwiseAbs().maxCoeff() > 1e8)
    throw SimulationBlowup("dynamics step produced a non-finite state", state);

  return {s, contact_forces(model, s, terrain)};
}

BipedState set_pose_from_reference(const BipedModel& model, const Vec6& frame,
                                   const Vec6& joint_vel, double torso_pitch,
                                   const TerrainProfile& terrain) {
  if (!frame.allFinite() || !joint_vel.allFinite())
    throw InvalidData("set_pose_from_reference: non-finite reference");
  BipedState s;
  s.q[2] = torso_pitch;
  s.q.segment<6>(3) = frame;
  s.qd.segment<6>(3) = joint_vel;
  const Kinematics kin = compute_kinematics(model, s.q, s.qd);
  double min_gap = std::numeric_limits<double>::infinity();
  for (const Vec2& p : kin.point_pos)
    min_gap = std::min(min_gap, p[1] - terrain.height_at(p[0]));
  s.q[1] = -min_gap;
  return s;
}

// --- model construction and files -------------------------------------------

BipedModel BipedModel::standard() {
  BipedModel m;
  m.links[0] = {56.0, 2.6, 0.48, {0.0, 0.30}};      // HAT torso
  m.links[1] = {6.5, 0.11, 0.45, {0.0, -0.225}};    // thigh
  m.links[2] = {4.0, 0.068, 0.45, {0.0, -0.225}};   // shank
  m.links[3] = {1.5, 0.007, 0.20, {0.05, -0.035}};  // foot
  m.links[4] = m.links[1];
  m.links[5] = m.links[2];
  m.links[6] = m.links[3];
  m.torque_limit.fill(150.0);
  m.joint_limits[0] = {-1.5, 1.5};    // hip
  m.joint_limits[1] = {-2.6, 0.05};   // knee
  m.joint_limits[2] = {-1.0, 1.0};    // ankle
  m.contact_offsets[0] = {-0.05, -0.05};
  m.contact_offsets[1] = {0.02, -0.05};
  m.contact_offsets[2] = {0.08, -0.05};
  m.contact_offsets[3] = {0.15, -0.05};
  return m;
}

void BipedModel::validate() const {
  for (const LinkParams& l : links) {
    if (!(l.mass > 0.0) || !(l.inertia > 0.0) || !(l.length > 0.0))
      throw InvalidData("BipedModel: masses, inertias, lengths must be > 0");
  }
  for (double t : torque_limit)
    if (!(t > 0.0)) throw InvalidData("BipedModel: torque limits must be > 0");
  for (const Vec2& lim : joint_limits)
    if (!(lim[0] < lim[1])) throw InvalidData("BipedModel: bad joint limits");
  if (!(gravity >= 0.0)) throw InvalidData("BipedModel: gravity must be >= 0");
  for (double g : {contact_kp, contact_kd, contact_kt, contact_ct, limit_kp,
                   limit_kd})
    if (!(g >= 0.0)) throw InvalidData("BipedModel: gains must be >= 0");
  if (!(friction_mu >= 0.0)) throw InvalidData("BipedModel: mu must be >= 0");
}

namespace {
const char* kLinkNames[kNumLinks] = {"torso",   "thigh_r", "shank_r", "foot_r",
                                     "thigh_l", "shank_l", "foot_l"};
const char* kJointNames[3] = {"hip", "knee", "ankle"};
}  // namespace

std::string BipedModel::to_model_text() const {
  std::string out;
  out += "# planar 7-link biped model\n";
  out += "# link <name> <mass kg> <inertia kg m^2> <length m> <com_x m> <com_z m>\n";
  out += "gravity " + format_double(gravity) + "\n";
  for (int l = 0; l < kNumLinks; ++l) {
    const LinkParams& p = links[static_cast<std::size_t>(l)];
    out += std::string("link ") + kLinkNames[l] + ' ' + format_double(p.mass) +
           ' ' + format_double(p.inertia) + ' ' + format_double(p.length) +
           ' ' + format_double(p.com[0]) + ' ' + format_double(p.com[1]) + '\n';
  }
  out += "torque_limits";
  for (double t : torque_limit) out += ' ' + format_double(t);
  out += '\n';
  for (int j = 0; j < 3; ++j) {
    out += std::string("joint_limit ") + kJointNames[j] + ' ' +
           format_double(joint_limits[static_cast<std::size_t>(j)][0]) + ' ' +
           format_double(joint_limits[static_cast<std::size_t>(j)][1]) + '\n';
  }
  out += "contact_points";
  for (const Vec2& p : contact_offsets)
    out += ' ' + format_double(p[0]) + ' ' + format_double(p[1]);
  out += '\n';
  out += "contact_gains " + format_double(contact_kp) + ' ' +
         format_double(contact_kd) + ' ' + format_double(friction_mu) + ' ' +
         format_double(contact_kt) + ' ' + format_double(contact_ct) + '\n';
  out += "joint_limit_gains " + format_double(limit_kp) + ' ' +
         format_double(limit_kd) + '\n';
  return out;
}

BipedModel BipedModel::from_model_text(const std::string& text) {
  BipedModel m = standard();
  std::istringstream in(text);
  std::string line;
  auto want = [](std::istringstream& ss, const std::string& key) {
    double v = 0.0;
    if (!(ss >> v)) throw InvalidData("model file: bad value for " + key);
    return v;
  };
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    if (key == "gravity") {
      m.gravity = want(ss, key);
    } else if (key == "link") {
      std::string name;
      ss >> name;
      int idx = -1;
      for (int l = 0; l < kNumLinks; ++l)
        if (name == kLinkNames[l]) idx = l;
      if (idx < 0) throw InvalidData("model file: unknown link " + name);
      LinkParams& p = m.links[static_cast<std::size_t>(idx)];
      p.mass = want(ss, key);
      p.inertia = want(ss, key);
      p.length = want(ss, key);
      p.com[0] = want(ss, key);
      p.com[1] = want(ss, key);
    } else if (key == "torque_limits") {
      for (double& t : m.torque_limit) t = want(ss, key);
    } else if (key == "joint_limit") {
      std::string name;
      ss >> name;
      int idx = -1;
      for (int j = 0; j < 3; ++j)
        if (name == kJointNames[j]) idx = j;
      if (idx < 0) throw InvalidData("model file: unknown joint " + name);
      m.joint_limits[static_cast<std::size_t>(idx)][0] = want(ss, key);
      m.joint_limits[static_cast<std::size_t>(idx)][1] = want(ss, key);
    } else if (key == "contact_points") {
      for (Vec2& p : m.contact_offsets) {
        p[0] = want(ss, key);
        p[1] = want(ss, key);
      }
    } else if (key == "contact_gains") {
      m.contact_kp = want(ss, key);
      m.contact_kd = want(ss, key);
      m.friction_mu = want(ss, key);
      m.contact_kt = want(ss, key);
      m.contact_ct = want(ss, key);
    } else if (key == "joint_limit_gains") {
      m.limit_kp = want(ss, key);
      m.limit_kd = want(ss, key);
    } else {
      throw InvalidData("model file: unknown key " + key);
    }
  }
  m.validate();
  return m;
}

void BipedModel::save(const std::string& path) const {
  write_text_file(path, to_model_text());
}

BipedModel BipedModel::load(const std::string& path) {
  return from_model_text(read_text_file(path));
}

std::string trajectory_csv_header() {
  std::string out = "t";
  for (int i = 0; i < kNumCoords; ++i) out += ",q" + std::to_string(i);
  for (int i = 0; i < kNumCoords; ++i) out += ",qd" + std::to_string(i);
  out += ",FL,FR,cL,cR\n";
  return out;
}

std::string trajectory_csv_row(const BipedState& state,
                               const ContactReport& report) {
  std::string out = format_double(state.time);
  for (int i = 0; i < kNumCoords; ++i) out += ',' + format_double(state.q[i]);
  for (int i = 0; i < kNumCoords; ++i) out += ',' + format_double(state.qd[i]);
  out += ',' + format_double(report.left.vertical_force);
  out += ',' + format_double(report.right.vertical_force);
  out += ',' + std::to_string(report.left.active_count);
  out += ',' + std::to_string(report.right.active_count);
  out += '\n';
  return out;
}

}  // namespace biped
