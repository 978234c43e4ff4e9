#include "kinopax/dynamics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "kinopax/rng.hpp"

namespace kinopax {

using std::numbers::pi;

double wrap_angle(double a) noexcept {
  if (a > -pi && a <= pi) return a;
  a = std::remainder(a, 2.0 * pi);
  if (a <= -pi) a += 2.0 * pi;
  return a;
}

DynamicsModel::DynamicsModel(std::string name, std::vector<DimKind> kinds, StateVec state_lo,
                             StateVec state_hi, ControlVec control_lo, ControlVec control_hi)
    : name_(std::move(name)),
      kinds_(std::move(kinds)),
      state_lo_(state_lo),
      state_hi_(state_hi),
      control_lo_(control_lo),
      control_hi_(control_hi) {}

StateVec DynamicsModel::derivative(const StateVec& x, const ControlVec& u) const {
  if (x.size() != state_dim() || u.size() != control_dim())
    throw Error(ErrorKind::Dynamics, "state/control dimension mismatch for model " + name_);
  StateVec dx(state_dim());
  derivative(x.span(), u.span(), dx.span());
  return dx;
}

void DynamicsModel::normalize(std::span<double> x) const noexcept {
  for (std::size_t i = 0; i < kinds_.size(); ++i)
    if (kinds_[i] == DimKind::Angle) x[i] = wrap_angle(x[i]);
}

StateVec DynamicsModel::state_at(const Vec3& position) const {
  StateVec x(state_dim(), 0.0);
  for (std::size_t i = 0; i < 3; ++i) x[i] = position[i];
  return x;
}

// ---------------------------------------------------------------------------

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
using K = DimKind;
}  // namespace

DoubleIntegrator6D::DoubleIntegrator6D(double max_accel, double max_speed)
    : DynamicsModel("di6", {K::Position, K::Position, K::Position, K::Velocity, K::Velocity, K::Velocity},
                    {-kInf, -kInf, -kInf, -max_speed, -max_speed, -max_speed},
                    {kInf, kInf, kInf, max_speed, max_speed, max_speed},
                    {-max_accel, -max_accel, -max_accel}, {max_accel, max_accel, max_accel}) {}

void DoubleIntegrator6D::derivative(std::span<const double> x, std::span<const double> u,
                                    std::span<double> dx) const noexcept {
  dx[0] = x[3];
  dx[1] = x[4];
  dx[2] = x[5];
  dx[3] = u[0];
  dx[4] = u[1];
  dx[5] = u[2];
}

DubinsAirplane6D::DubinsAirplane6D()
    : DynamicsModel("dubins6", {K::Position, K::Position, K::Position, K::Velocity, K::Angle, K::Angle},
                    {-kInf, -kInf, -kInf, 0.5, -pi, -pi / 4}, {kInf, kInf, kInf, 3.0, pi, pi / 4},
                    {-1.0, -1.0, -0.5}, {1.0, 1.0, 0.5}) {}

void DubinsAirplane6D::derivative(std::span<const double> x, std::span<const double> u,
                                  std::span<double> dx) const noexcept {
  const double v = x[3];
  const double cos_gamma = std::cos(x[5]);
  dx[0] = v * std::cos(x[4]) * cos_gamma;
  dx[1] = v * std::sin(x[4]) * cos_gamma;
  dx[2] = v * std::sin(x[5]);
  dx[3] = u[0];
  dx[4] = u[1];
  dx[5] = u[2];
}

StateVec DubinsAirplane6D::state_at(const Vec3& position) const {
  return {position[0], position[1], position[2], 1.0, 0.0, 0.0};
}

// Roll/pitch are kept well inside the Euler-angle singularity at +-pi/2.
Quadcopter12D::Quadcopter12D()
    : DynamicsModel("quad12",
                    {K::Position, K::Position, K::Position, K::Velocity, K::Velocity, K::Velocity, K::Angle,
                     K::Angle, K::Angle, K::Velocity, K::Velocity, K::Velocity},
                    {-kInf, -kInf, -kInf, -3.0, -3.0, -3.0, -pi / 4, -pi / 4, -pi, -2.0, -2.0, -2.0},
                    {kInf, kInf, kInf, 3.0, 3.0, 3.0, pi / 4, pi / 4, pi, 2.0, 2.0, 2.0},
                    {0.5 * kMass * kGravity, -0.02, -0.02, -0.02},
                    {1.5 * kMass * kGravity, 0.02, 0.02, 0.02}) {}

void Quadcopter12D::derivative(std::span<const double> x, std::span<const double> u,
                               std::span<double> dx) const noexcept {
  const double phi = x[6], theta = x[7], psi = x[8];
  const double p = x[9], q = x[10], r = x[11];
  const double sphi = std::sin(phi), cphi = std::cos(phi);
  const double stheta = std::sin(theta), ctheta = std::cos(theta);
  const double spsi = std::sin(psi), cpsi = std::cos(psi);
  const double thrust_accel = u[0] / kMass;

  dx[0] = x[3];
  dx[1] = x[4];
  dx[2] = x[5];
  // Body z axis expressed in the world frame (ZYX convention).
  dx[3] = thrust_accel * (cphi * stheta * cpsi + sphi * spsi);
  dx[4] = thrust_accel * (cphi * stheta * spsi - sphi * cpsi);
  dx[5] = thrust_accel * (cphi * ctheta) - kGravity;
  // Euler angle rates from body rates.
  const double ttheta = stheta / ctheta;
  dx[6] = p + (sphi * q + cphi * r) * ttheta;
  dx[7] = cphi * q - sphi * r;
  dx[8] = (sphi * q + cphi * r) / ctheta;
  // Euler's rigid-body equations, diagonal inertia.
  dx[9] = (u[1] + (kIyy - kIzz) * q * r) / kIxx;
  dx[10] = (u[2] + (kIzz - kIxx) * p * r) / kIyy;
  dx[11] = (u[3] + (kIxx - kIyy) * p * q) / kIzz;
}

std::unique_ptr<DynamicsModel> make_model(std::string_view name) {
  if (name == "di6") return std::make_unique<DoubleIntegrator6D>();
  if (name == "dubins6") return std::make_unique<DubinsAirplane6D>();
  if (name == "quad12") return std::make_unique<Quadcopter12D>();
  throw Error(ErrorKind::Config, "unknown model '" + std::string(name) + "' (expected di6, dubins6, quad12)");
}

std::vector<std::string> model_names() { return {"di6", "dubins6", "quad12"}; }

// ---------------------------------------------------------------------------

int default_substeps(double dt) noexcept {
  const double steps = std::ceil(dt / 0.02);
  if (!(steps > 4.0)) return 4;
  return static_cast<int>(steps);
}

void rk4_step(const DynamicsModel& model, std::span<double> x, std::span<const double> u, double h,
              std::span<double> scratch) noexcept {
  const std::size_t n = x.size();
  auto k1 = scratch.subspan(0, n);
  auto k2 = scratch.subspan(n, n);
  auto k3 = scratch.subspan(2 * n, n);
  auto k4 = scratch.subspan(3 * n, n);
  auto tmp = scratch.subspan(4 * n, n);

  model.derivative(x, u, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  model.derivative(tmp, u, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  model.derivative(tmp, u, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
  model.derivative(tmp, u, k4);
  for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  model.normalize(x);
}

TrajectorySegment propagate_ode(const DynamicsModel& model, const StateVec& x, const ControlVec& u,
                                double dt, int substeps) {
  if (x.size() != model.state_dim() || u.size() != model.control_dim())
    throw Error(ErrorKind::Dynamics, "state/control dimension mismatch");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::Dynamics, "duration must be positive");
  if (substeps < 1) throw Error(ErrorKind::Dynamics, "substeps must be positive");
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!(u[i] >= model.control_lo()[i] && u[i] <= model.control_hi()[i]))
      throw Error(ErrorKind::Dynamics, "control outside bounds");

  TrajectorySegment seg;
  seg.control = u;
  seg.dt = dt;
  seg.start_state = x;
  seg.sampled_states.reserve(static_cast<std::size_t>(substeps));

  const double h = dt / substeps;
  std::array<double, 5 * kMaxStateDim> scratch{};
  StateVec cur = x;
  for (int s = 0; s < substeps; ++s) {
    rk4_step(model, cur.span(), u.span(), h, scratch);
    for (double v : cur)
      if (!std::isfinite(v)) throw Error(ErrorKind::Dynamics, "non-finite state during propagation");
    seg.sampled_states.push_back(cur);
  }
  seg.end_state = cur;
  return seg;
}

TrajectorySegment propagate_ode(const DynamicsModel& model, const StateVec& x, const ControlVec& u,
                                double dt) {
  return propagate_ode(model, x, u, dt, default_substeps(dt));
}

ControlVec sample_control(const DynamicsModel& model, RngStream& rng) {
  ControlVec u(model.control_dim());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.uniform(model.control_lo()[i], model.control_hi()[i]);
  return u;
}

double sample_duration(RngStream& rng, double t_prop) {
  if (!(t_prop > 0.0) || !std::isfinite(t_prop))
    throw Error(ErrorKind::Dynamics, "maximum propagation time must be positive");
  return t_prop * (1.0 - rng.uniform());
}

}  // namespace kinopax
