#include "kinopax/environment.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "kinopax/dynamics.hpp"
#include "kinopax/validity.hpp"

namespace kinopax {

using nlohmann::json;

bool Aabb::contains(const Vec3& p) const noexcept {
  return p[0] >= min[0] && p[0] <= max[0] && p[1] >= min[1] && p[1] <= max[1] && p[2] >= min[2] &&
         p[2] <= max[2];
}

bool Aabb::intersects_segment(const Vec3& a, const Vec3& b) const noexcept {
  for (int i = 0; i < 3; ++i)
    if (std::max(a[i], b[i]) < min[i] || std::min(a[i], b[i]) > max[i]) return false;
  double t_lo = 0.0;
  double t_hi = 1.0;
  for (int i = 0; i < 3; ++i) {
    const double d = b[i] - a[i];
    if (d == 0.0) {
      if (a[i] < min[i] || a[i] > max[i]) return false;
      continue;
    }
    double t1 = (min[i] - a[i]) / d;
    double t2 = (max[i] - a[i]) / d;
    if (t1 > t2) std::swap(t1, t2);
    t_lo = std::max(t_lo, t1);
    t_hi = std::min(t_hi, t2);
    if (t_lo > t_hi) return false;
  }
  return true;
}

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::Environment, what); }

bool finite3(const Vec3& v) { return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]); }

Vec3 read_vec3(const json& j, const char* field) {
  const json& arr = j.at(field);
  if (!arr.is_array() || arr.size() != 3) fail(std::string("field '") + field + "' must be an array of 3 numbers");
  Vec3 v{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!arr[i].is_number()) fail(std::string("field '") + field + "' must contain numbers");
    v[i] = arr[i].get<double>();
  }
  return v;
}

std::vector<double> read_reals(const json& j, const char* field) {
  const json& arr = j.at(field);
  if (!arr.is_array()) fail(std::string("field '") + field + "' must be an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const json& e : arr) {
    if (!e.is_number()) fail(std::string("field '") + field + "' must contain numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

const json& object_at(const json& j, const char* field) {
  const json& obj = j.at(field);
  if (!obj.is_object()) fail(std::string("field '") + field + "' must be an object");
  return obj;
}

}  // namespace

EnvironmentSpec parse_environment_spec(const json& doc) {
  try {
    if (!doc.is_object()) fail("environment document must be an object");
    EnvironmentSpec spec;
    const json& name = doc.at("name");
    if (!name.is_string()) fail("field 'name' must be a string");
    spec.name = name.get<std::string>();

    const json& ws = object_at(doc, "workspace");
    spec.workspace_lo = read_vec3(ws, "lo");
    spec.workspace_hi = read_vec3(ws, "hi");

    if (doc.contains("state_bounds") && !doc.at("state_bounds").is_null()) {
      const json& sb = object_at(doc, "state_bounds");
      spec.state_bounds.emplace(read_reals(sb, "lo"), read_reals(sb, "hi"));
    }

    const json& obstacles = doc.at("obstacles");
    if (!obstacles.is_array()) fail("field 'obstacles' must be an array");
    for (const json& o : obstacles) {
      if (!o.is_object()) fail("obstacle entries must be objects");
      spec.obstacles.push_back(Aabb{read_vec3(o, "min"), read_vec3(o, "max")});
    }

    spec.start = read_reals(doc, "start");
    const json& goal = object_at(doc, "goal");
    spec.goal.center = read_vec3(goal, "center");
    if (!goal.at("radius").is_number()) fail("goal radius must be a number");
    spec.goal.radius = goal.at("radius").get<double>();
    return spec;
  } catch (const json::exception& e) {
    fail(std::string("environment schema violation: ") + e.what());
  }
}

json environment_spec_to_json(const EnvironmentSpec& spec) {
  json doc;
  doc["name"] = spec.name;
  doc["workspace"] = {{"lo", spec.workspace_lo}, {"hi", spec.workspace_hi}};
  if (spec.state_bounds) doc["state_bounds"] = {{"lo", spec.state_bounds->first}, {"hi", spec.state_bounds->second}};
  json obstacles = json::array();
  for (const Aabb& box : spec.obstacles) obstacles.push_back({{"min", box.min}, {"max", box.max}});
  doc["obstacles"] = std::move(obstacles);
  doc["start"] = spec.start;
  doc["goal"] = {{"center", spec.goal.center}, {"radius", spec.goal.radius}};
  return doc;
}

void check_environment_spec(const EnvironmentSpec& spec) {
  if (!finite3(spec.workspace_lo) || !finite3(spec.workspace_hi)) fail("workspace bounds must be finite");
  for (int i = 0; i < 3; ++i)
    if (!(spec.workspace_lo[i] < spec.workspace_hi[i])) fail("workspace lo must be below hi in every axis");

  for (std::size_t k = 0; k < spec.obstacles.size(); ++k) {
    const Aabb& box = spec.obstacles[k];
    const std::string tag = "obstacle " + std::to_string(k);
    if (!finite3(box.min) || !finite3(box.max)) fail(tag + " has non-finite bounds");
    for (int i = 0; i < 3; ++i) {
      if (box.min[i] > box.max[i]) fail(tag + " has min > max");
      if (box.min[i] < spec.workspace_lo[i] || box.max[i] > spec.workspace_hi[i])
        fail(tag + " is not contained in the workspace");
    }
  }

  if (!finite3(spec.goal.center) || !(spec.goal.radius > 0.0) || !std::isfinite(spec.goal.radius))
    fail("goal needs a finite center and a positive radius");
  double gap2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double c = spec.goal.center[i];
    const double nearest = std::clamp(c, spec.workspace_lo[i], spec.workspace_hi[i]);
    gap2 += (c - nearest) * (c - nearest);
  }
  if (gap2 > spec.goal.radius * spec.goal.radius) fail("goal ball does not intersect the workspace");

  if (spec.start.size() < 3) fail("start needs at least a workspace position");
  for (double v : spec.start)
    if (!std::isfinite(v)) fail("start must be finite");
  const Vec3 p{spec.start[0], spec.start[1], spec.start[2]};
  for (int i = 0; i < 3; ++i)
    if (p[i] < spec.workspace_lo[i] || p[i] > spec.workspace_hi[i]) fail("start lies outside the workspace");
  for (const Aabb& box : spec.obstacles)
    if (box.contains(p)) fail("start state in collision");

  if (spec.state_bounds) {
    const auto& [lo, hi] = *spec.state_bounds;
    if (lo.size() != hi.size()) fail("state_bounds lo/hi lengths differ");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i]) fail("state_bounds lo must not exceed hi");
  }
}

Environment resolve_environment(const EnvironmentSpec& spec, const DynamicsModel& model) {
  check_environment_spec(spec);
  const std::size_t n = model.state_dim();

  Environment env;
  env.name = spec.name;
  env.workspace_lo = spec.workspace_lo;
  env.workspace_hi = spec.workspace_hi;
  env.obstacles = spec.obstacles;
  env.goal = spec.goal;

  if (spec.state_bounds) {
    const auto& [lo, hi] = *spec.state_bounds;
    if (lo.size() != n) fail("state_bounds length does not match model state dimension");
    env.state_bounds = StateBounds{StateVec::from(lo), StateVec::from(hi)};
  }

  if (spec.start.size() == n) {
    env.start = StateVec::from(spec.start);
  } else if (spec.start.size() == 3) {
    env.start = model.state_at({spec.start[0], spec.start[1], spec.start[2]});
  } else {
    fail("start must have 3 (position) or " + std::to_string(n) + " (full state) entries");
  }

  const ValidityChecker checker(env, model);
  if (!checker.state_valid(env.start)) fail("start state is not valid for model " + std::string(model.name()));
  return env;
}

EnvironmentSpec load_environment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open environment file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail("cannot parse " + path.string() + ": " + e.what());
  }
  EnvironmentSpec spec = parse_environment_spec(doc);
  check_environment_spec(spec);
  return spec;
}

Environment load_environment(const std::filesystem::path& path, const DynamicsModel& model) {
  return resolve_environment(load_environment_spec(path), model);
}

void save_environment_spec(const EnvironmentSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write environment file " + path.string());
  out << environment_spec_to_json(spec).dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

void save_environment(const Environment& env, const std::filesystem::path& path) {
  EnvironmentSpec spec;
  spec.name = env.name;
  spec.workspace_lo = env.workspace_lo;
  spec.workspace_hi = env.workspace_hi;
  if (env.state_bounds) {
    spec.state_bounds.emplace(std::vector<double>(env.state_bounds->lo.begin(), env.state_bounds->lo.end()),
                              std::vector<double>(env.state_bounds->hi.begin(), env.state_bounds->hi.end()));
  }
  spec.obstacles = env.obstacles;
  spec.start.assign(env.start.begin(), env.start.end());
  spec.goal = env.goal;
  save_environment_spec(spec, path);
}

StateBounds effective_state_bounds(const Environment& env, const DynamicsModel& model) {
  if (env.state_bounds) return *env.state_bounds;
  StateBounds b{model.state_lo(), model.state_hi()};
  for (std::size_t i = 0; i < 3; ++i) {
    b.lo[i] = env.workspace_lo[i];
    b.hi[i] = env.workspace_hi[i];
  }
  return b;
}

}  // namespace kinopax
