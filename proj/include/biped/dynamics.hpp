#pragma once

#include "biped/common.hpp"
#include "biped/terrain.hpp"

#include <array>
#include <string>
#include <utility>

namespace biped {

// Planar 7-link biped: HAT torso plus bilateral thigh/shank/foot chains.
//
// Generalized coordinates (9):
//   0 torso x   1 torso z   2 torso pitch
//   3 r hip     4 r knee    5 r ankle
//   6 l hip     7 l knee    8 l ankle
// The torso reference point is the hip joint; both legs attach there.
// Conventions: x forward, z up, angles positive counterclockwise (a positive
// hip angle swings the leg forward, a positive pitch tilts the torso back).
// At the zero pose the biped stands upright with flat feet pointing forward.
//
// Actuation (7 torques): torso pitch, r hip, r knee, r ankle, l hip, l knee,
// l ankle, i.e. generalized coordinates 2..8.

struct LinkParams {
  double mass = 1.0;     // kg
  double inertia = 0.1;  // kg m^2 about the CoM
  double length = 0.4;   // m
  Vec2 com = Vec2::Zero();  // CoM offset in the link frame
};

inline constexpr int kNumLinks = 7;
inline constexpr int kNumCoords = 9;
inline constexpr int kNumActuated = 7;
inline constexpr int kPointsPerFoot = 4;
inline constexpr int kNumContactPoints = 2 * kPointsPerFoot;

struct BipedModel {
  // order: torso, r thigh, r shank, r foot, l thigh, l shank, l foot
  std::array<LinkParams, kNumLinks> links;
  std::array<double, kNumActuated> torque_limit{};
  // lower/upper per leg joint: hip, knee, ankle (shared by both sides)
  std::array<Vec2, 3> joint_limits;
  std::array<Vec2, kPointsPerFoot> contact_offsets;  // foot frame
  double gravity = 9.81;

  double contact_kp = 50000.0;  // N/m
  double contact_kd = 500.0;    // N s/m
  double friction_mu = 0.9;
  double contact_kt = 50000.0;  // tangential spring
  double contact_ct = 500.0;    // tangential damping
  // Joint-limit penalty. Gains sized for explicit integration at 1 kHz: the
  // ankle has the smallest reflected inertia (~0.012 kg m^2), so the damping
  // eigenvalue kd/I must stay well below 2/dt.
  double limit_kp = 500.0;  // N m/rad
  double limit_kd = 5.0;

  // Welded coordinates (kept at zero velocity, excluded from the solve).
  // Runtime-only test utility; not part of the model file.
  std::array<bool, kNumCoords> locked{};

  static BipedModel standard();
  void validate() const;

  std::string to_model_text() const;
  static BipedModel from_model_text(const std::string& text);
  void save(const std::string& path) const;
  static BipedModel load(const std::string& path);

  double leg_length() const {  // hip-to-sole at the zero pose
    return links[1].length + links[2].length - contact_offsets[0][1];
  }
};

struct BipedState {
  Vec9 q = Vec9::Zero();
  Vec9 qd = Vec9::Zero();
  double time = 0.0;
  // Tangential anchor per contact point (right foot 0..3, left 4..7);
  // NaN while the point is out of contact.
  std::array<double, kNumContactPoints> contact_anchor{};

  BipedState() { clear_anchors(); }
  void clear_anchors() {
    contact_anchor.fill(std::numeric_limits<double>::quiet_NaN());
  }
  Vec7 actuated_q() const { return q.segment<7>(2); }
  Vec7 actuated_qd() const { return qd.segment<7>(2); }
};

class SimulationBlowup : public std::runtime_error {
 public:
  SimulationBlowup(const std::string& what, BipedState prior)
      : std::runtime_error(what), prior_state(std::move(prior)) {}
  BipedState prior_state;
};

struct PointContact {
  Vec2 position = Vec2::Zero();
  double normal_force = 0.0;
  double tangent_force = 0.0;
};

struct FootContact {
  double vertical_force = 0.0;  // N, sum over the foot's points
  int active_count = 0;         // points with positive normal force
  Vec2 reference_position = Vec2::Zero();  // sole center
  std::array<PointContact, kPointsPerFoot> points;
};

struct ContactReport {
  FootContact right, left;
};

// World-frame pose and twist of every link, plus contact point kinematics.
struct Kinematics {
  std::array<double, kNumLinks> angle;
  std::array<Vec2, kNumLinks> origin;
  std::array<double, kNumLinks> omega;
  std::array<Vec2, kNumLinks> origin_vel;
  std::array<Vec2, kNumContactPoints> point_pos;
  std::array<Vec2, kNumContactPoints> point_vel;
};

Kinematics compute_kinematics(const BipedModel& model, const Vec9& q,
                              const Vec9& qd);

Mat9 mass_matrix(const BipedModel& model, const Vec9& q);
// Coriolis/centrifugal plus gravity terms: M qdd + bias = Q.
Vec9 bias_forces(const BipedModel& model, const Vec9& q, const Vec9& qd);

// qdd = M^-1 (Q - bias); locked coordinates stay at zero acceleration.
Vec9 generalized_accel(const BipedModel& model, const Vec9& q, const Vec9& qd,
                       const Vec9& applied);

// Generalized force that exactly cancels gravity at this configuration.
Vec9 gravity_compensation(const BipedModel& model, const BipedState& state);

double kinetic_energy(const BipedModel& model, const Vec9& q, const Vec9& qd);
double potential_energy(const BipedModel& model, const Vec9& q);
double total_energy(const BipedModel& model, const BipedState& state);

struct ComState {
  double x = 0.0, z = 0.0, xd = 0.0, zd = 0.0;
};
ComState com_state(const BipedModel& model, const BipedState& state);

// Pure contact query at the current state (anchors are read, not moved).
ContactReport contact_forces(const BipedModel& model, const BipedState& state,
                             const TerrainProfile& terrain);

// One 1 kHz step: torques are clamped to the model limits, penalty contact
// and joint-limit forces are applied as external generalized forces, and the
// state advances by semi-implicit Euler (velocities first). Throws
// SimulationBlowup carrying the prior state if the result is not finite.
std::pair<BipedState, ContactReport> step(const BipedModel& model,
                                          const BipedState& state,
                                          const Vec7& torques,
                                          const TerrainProfile& terrain,
                                          double dt = 1e-3);

// Joint angles/velocities from a 6-D reference frame (r hip, r knee,
// r ankle, l hip, l knee, l ankle); torso z solved so the lowest contact
// point touches the terrain exactly, torso x at the terrain origin.
BipedState set_pose_from_reference(const BipedModel& model, const Vec6& frame,
                                   const Vec6& joint_vel, double torso_pitch,
                                   const TerrainProfile& terrain);

std::string trajectory_csv_header();
std::string trajectory_csv_row(const BipedState& state,
                               const ContactReport& report);

}  // namespace biped
