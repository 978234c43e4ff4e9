#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kinopax/types.hpp"

namespace kinopax {

class RngStream;

/// How a state dimension is measured; drives wrapping, distance weights and
/// the workspace projection.
enum class DimKind : std::uint8_t { Position, Velocity, Angle };

double wrap_angle(double a) noexcept;

/// Control-affine-or-not system x' = f(x, u) with box constraints on the
/// state and the control. f is assumed Lipschitz in both arguments.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  std::string_view name() const noexcept { return name_; }
  std::size_t state_dim() const noexcept { return kinds_.size(); }
  std::size_t control_dim() const noexcept { return control_lo_.size(); }
  const StateVec& state_lo() const noexcept { return state_lo_; }
  const StateVec& state_hi() const noexcept { return state_hi_; }
  const ControlVec& control_lo() const noexcept { return control_lo_; }
  const ControlVec& control_hi() const noexcept { return control_hi_; }
  std::span<const DimKind> dim_kinds() const noexcept { return kinds_; }
  /// Position dimensions are always the first three state entries.
  static constexpr std::array<std::size_t, 3> workspace_dims() noexcept { return {0, 1, 2}; }

  virtual double default_t_prop() const noexcept { return 1.0; }
  /// Grid cells per state dimension used when the config leaves them unset.
  virtual std::vector<int> default_cells_per_dim() const { return std::vector<int>(state_dim(), 4); }

  /// Raw vector field; spans must already have model dimensions.
  virtual void derivative(std::span<const double> x, std::span<const double> u,
                          std::span<double> dx) const noexcept = 0;

  /// Checked evaluation of f(x, u).
  StateVec derivative(const StateVec& x, const ControlVec& u) const;

  /// Wraps angular dimensions into (-pi, pi].
  void normalize(std::span<double> x) const noexcept;

  /// Full state at rest (model-specific nominal values) at a workspace position.
  virtual StateVec state_at(const Vec3& position) const;

 protected:
  DynamicsModel(std::string name, std::vector<DimKind> kinds, StateVec state_lo, StateVec state_hi,
                ControlVec control_lo, ControlVec control_hi);

 private:
  std::string name_;
  std::vector<DimKind> kinds_;
  StateVec state_lo_;
  StateVec state_hi_;
  ControlVec control_lo_;
  ControlVec control_hi_;
};

/// (px, py, pz, vx, vy, vz), control = acceleration.
class DoubleIntegrator6D final : public DynamicsModel {
 public:
  DoubleIntegrator6D(double max_accel = 2.0, double max_speed = 5.0);
  using DynamicsModel::derivative;
  void derivative(std::span<const double> x, std::span<const double> u,
                  std::span<double> dx) const noexcept override;
};

/// (px, py, pz, speed, heading, flight-path angle), control = (accel, heading
/// rate, flight-path rate).
class DubinsAirplane6D final : public DynamicsModel {
 public:
  DubinsAirplane6D();
  using DynamicsModel::derivative;
  void derivative(std::span<const double> x, std::span<const double> u,
                  std::span<double> dx) const noexcept override;
  StateVec state_at(const Vec3& position) const override;
};

/// Rigid-body quadcopter: position, world-frame velocity, ZYX Euler angles
/// (roll, pitch, yaw), body rates. Control = (collective thrust, roll, pitch
/// and yaw torques).
class Quadcopter12D final : public DynamicsModel {
 public:
  static constexpr double kGravity = 9.81;
  static constexpr double kMass = 1.0;
  static constexpr double kIxx = 0.01;
  static constexpr double kIyy = 0.01;
  static constexpr double kIzz = 0.02;

  Quadcopter12D();
  using DynamicsModel::derivative;
  void derivative(std::span<const double> x, std::span<const double> u,
                  std::span<double> dx) const noexcept override;
  double default_t_prop() const noexcept override { return 1.0; }
  /// Finer along position and velocity; attitude and body rates unsplit.
  std::vector<int> default_cells_per_dim() const override { return {4, 4, 4, 2, 2, 2, 1, 1, 1, 1, 1, 1}; }
};

/// Lookup by CLI name: "di6", "dubins6", "quad12".
std::unique_ptr<DynamicsModel> make_model(std::string_view name);
std::vector<std::string> model_names();

/// Default integrator substeps for a duration: ceil(dt / 0.02), at least 4.
int default_substeps(double dt) noexcept;

/// One classical RK4 step of size h, in place. `scratch` must hold 5 * n values.
void rk4_step(const DynamicsModel& model, std::span<double> x, std::span<const double> u, double h,
              std::span<double> scratch) noexcept;

/// Integrates with `substeps` equal RK4 steps under zero-order-hold control.
/// Throws Error(Dynamics) on dimension mismatch, bad duration or a non-finite
/// state.
TrajectorySegment propagate_ode(const DynamicsModel& model, const StateVec& x, const ControlVec& u,
                                double dt, int substeps);
TrajectorySegment propagate_ode(const DynamicsModel& model, const StateVec& x, const ControlVec& u,
                                double dt);

ControlVec sample_control(const DynamicsModel& model, RngStream& rng);
/// Uniform on (0, t_prop].
double sample_duration(RngStream& rng, double t_prop);

}  // namespace kinopax
