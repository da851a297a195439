#include "bimp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bimp/errors.hpp"

namespace bimp {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Schedule

Schedule::Schedule(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw DomainError("Schedule: at least one knot is required");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i].first > knots_[i - 1].first)) throw DomainError("Schedule: knot times must increase strictly");
  }
}

double Schedule::at(double time) const {
  if (knots_.empty()) return 0.0;
  if (time <= knots_.front().first) return knots_.front().second;
  if (time >= knots_.back().first) return knots_.back().second;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), time,
                                   [](double t, const std::pair<double, double>& k) { return t < k.first; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double s = (time - a.first) / (b.first - a.first);
  return a.second + s * (b.second - a.second);
}

const char* to_string(PlannerMode mode) { return mode == PlannerMode::kEnKTS ? "enkts" : "enks"; }

PlannerMode parse_planner_mode(const std::string& text) {
  if (text == "enkts") return PlannerMode::kEnKTS;
  if (text == "enks") return PlannerMode::kEnKS;
  throw FormatError("unknown planner mode '" + text + "' (expected enkts or enks)");
}

namespace {

// Strict accessor over a JSON object that remembers its key path.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  [[nodiscard]] const std::string& path() const { return path_; }
  [[nodiscard]] const json& raw() const { return value_; }

  void allow(std::initializer_list<const char*> keys) const {
    require_object();
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, _] : value_.items()) {
      if (allowed.count(key) == 0) fail("unknown key '" + key + "'");
    }
  }

  [[nodiscard]] bool has(const char* key) const { return value_.is_object() && value_.contains(key); }

  [[nodiscard]] Node at(const char* key) const {
    require_object();
    if (!value_.contains(key)) fail(std::string("missing required key '") + key + "'");
    return {value_.at(key), path_ + "." + key};
  }

  [[nodiscard]] double number() const {
    if (!value_.is_number()) fail("expected a number");
    const double v = value_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  [[nodiscard]] double number(const char* key, double fallback) const {
    return has(key) ? at(key).number() : fallback;
  }
  [[nodiscard]] double positive(const char* key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0)) at(key).fail("must be positive");
    return v;
  }
  [[nodiscard]] long integer() const {
    if (!value_.is_number_integer() && !value_.is_number_unsigned()) fail("expected an integer");
    return value_.get<long>();
  }
  [[nodiscard]] long integer(const char* key, long fallback) const { return has(key) ? at(key).integer() : fallback; }
  [[nodiscard]] bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const Node n = at(key);
    if (!n.value_.is_boolean()) n.fail("expected true or false");
    return n.value_.get<bool>();
  }
  [[nodiscard]] std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }
  [[nodiscard]] std::string string(const char* key, const std::string& fallback) const {
    return has(key) ? at(key).string() : fallback;
  }
  [[nodiscard]] std::vector<Node> array() const {
    if (!value_.is_array()) fail("expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < value_.size(); ++i) out.emplace_back(value_[i], path_ + "[" + std::to_string(i) + "]");
    return out;
  }
  [[nodiscard]] Eigen::VectorXd vector(Eigen::Index size) const {
    const auto items = array();
    if (static_cast<Eigen::Index>(items.size()) != size) {
      fail("expected an array of " + std::to_string(size) + " numbers");
    }
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = items[static_cast<std::size_t>(i)].number();
    return v;
  }
  [[nodiscard]] Eigen::VectorXd vector(const char* key, const Eigen::VectorXd& fallback) const {
    return has(key) ? at(key).vector(fallback.size()) : fallback;
  }

  [[noreturn]] void fail(const std::string& what) const { throw FormatError(path_ + ": " + what); }

 private:
  void require_object() const {
    if (!value_.is_object()) fail("expected an object");
  }

  const json& value_;
  std::string path_;
};

Schedule parse_schedule(const Node& node) {
  if (node.raw().is_number()) return Schedule::constant(node.number());
  std::vector<std::pair<double, double>> knots;
  for (const auto& item : node.array()) {
    const Eigen::VectorXd k = item.vector(2);
    knots.emplace_back(k[0], k[1]);
  }
  try {
    return Schedule(std::move(knots));
  } catch (const DomainError& e) {
    node.fail(e.what());
  }
}

RoadGeometry parse_road(const Node& node) {
  node.allow({"lane_width", "lane_count", "margin", "resolution", "start", "heading", "segments"});
  std::vector<RoadSegment> segments;
  for (const auto& item : node.at("segments").array()) {
    item.allow({"straight", "arc"});
    if (item.has("straight") == item.has("arc")) item.fail("each segment is either 'straight' or 'arc'");
    if (item.has("straight")) {
      segments.emplace_back(StraightSegment{item.at("straight").number()});
    } else {
      const Node arc = item.at("arc");
      arc.allow({"radius", "angle"});
      segments.emplace_back(ArcSegment{arc.at("radius").number(), arc.at("angle").number()});
    }
  }
  const Eigen::VectorXd start = node.vector("start", Eigen::Vector2d::Zero());
  try {
    return RoadGeometry::from_segments(Eigen::Vector2d(start), node.number("heading", 0.0), segments,
                                       node.at("lane_width").number(), static_cast<int>(node.at("lane_count").integer()),
                                       node.number("margin", 0.0), node.positive("resolution", 1.0));
  } catch (const DomainError& e) {
    node.fail(e.what());
  }
}

// Road-frame scripts are integrated from their speed schedule and sampled
// every dt up to end_time.
ObstacleScript parse_obstacle(const Node& node, const RoadGeometry& road, double dt, double end_time) {
  ObstacleScript script;
  script.name = node.string("name", node.path());
  script.footprint = {node.positive("length", 4.5), node.positive("width", 1.8)};
  const std::string frame = node.string("frame", "road");
  if (frame == "world") {
    node.allow({"name", "length", "width", "frame", "waypoints"});
    for (const auto& item : node.at("waypoints").array()) {
      item.allow({"t", "x", "y", "heading", "speed"});
      script.waypoints.push_back({item.at("t").number(), item.at("x").number(), item.at("y").number(),
                                  item.number("heading", 0.0), item.number("speed", 0.0)});
    }
  } else if (frame == "road") {
    node.allow({"name", "length", "width", "frame", "s0", "lateral", "speed"});
    const double s0 = node.at("s0").number();
    const Schedule lateral = node.has("lateral") ? parse_schedule(node.at("lateral")) : Schedule::constant(0.0);
    const Schedule speed = parse_schedule(node.at("speed"));
    const long samples = static_cast<long>(std::ceil(end_time / dt));
    double s = s0;
    for (long i = 0; i <= samples; ++i) {
      const double t = static_cast<double>(i) * dt;
      const Eigen::Vector2d p = road.point_at(s, lateral.at(t));
      script.waypoints.push_back({t, p.x(), p.y(), road.heading_at(s), speed.at(t)});
      // Trapezoid rule is exact for the piecewise-linear speed within a sample.
      s += 0.5 * (speed.at(t) + speed.at(t + dt)) * dt;
    }
  } else {
    node.at("frame").fail("expected 'road' or 'world'");
  }
  try {
    script.validate();
  } catch (const DomainError& e) {
    node.fail(e.what());
  }
  return script;
}

EgoStart parse_ego(const Node& node, const RoadGeometry& road) {
  EgoStart ego;
  if (node.has("s")) {
    node.allow({"s", "lateral", "speed", "u"});
    const double s = node.at("s").number();
    const Eigen::Vector2d p = road.point_at(s, node.number("lateral", 0.0));
    ego.x << p.x(), p.y(), road.heading_at(s), node.at("speed").number();
  } else {
    node.allow({"x", "y", "theta", "v", "u"});
    ego.x << node.at("x").number(), node.at("y").number(), node.at("theta").number(), node.at("v").number();
  }
  ego.u = node.vector("u", Eigen::Vector2d::Zero());
  return ego;
}

VehicleConfig parse_vehicle(const Node& node, const std::string& base_dir, double dt) {
  node.allow({"model", "weights", "wheelbase", "v_min", "v_max"});
  VehicleConfig v;
  const std::string model = node.string("model", "bicycle");
  if (model == "bicycle") {
    v.model = VehicleModel::kBicycle;
    if (node.has("weights")) node.at("weights").fail("weights apply to the mlp model only");
  } else if (model == "mlp") {
    v.model = VehicleModel::kMlp;
    std::filesystem::path p(node.at("weights").string());
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    if (!std::filesystem::exists(p)) node.at("weights").fail("file not found: " + p.string());
    v.weights = p.lexically_normal().string();
  } else {
    node.at("model").fail("expected 'bicycle' or 'mlp'");
  }
  v.params.wheelbase = node.positive("wheelbase", v.params.wheelbase);
  v.params.v_min = node.number("v_min", v.params.v_min);
  v.params.v_max = node.number("v_max", v.params.v_max);
  v.params.dt = dt;
  if (!(v.params.v_min < v.params.v_max)) node.fail("v_min must be below v_max");
  return v;
}

ConstraintParams parse_constraints(const Node& node, double ego_length, double ego_width) {
  node.allow({"d_min", "u_min", "u_max", "du_min", "du_max", "vehicle_margin", "barrier", "widths"});
  ConstraintParams c;
  c.d_min = node.number("d_min", c.d_min);
  c.u_min = node.vector("u_min", c.u_min);
  c.u_max = node.vector("u_max", c.u_max);
  c.du_min = node.vector("du_min", c.du_min);
  c.du_max = node.vector("du_max", c.du_max);
  c.vehicle_margin = node.number("vehicle_margin", c.vehicle_margin);
  c.ego = {ego_length, ego_width};
  if (node.has("barrier")) {
    const Node b = node.at("barrier");
    b.allow({"kappa", "beta", "ceiling"});
    c.barrier.kappa = b.number("kappa", c.barrier.kappa);
    c.barrier.beta = b.number("beta", c.barrier.beta);
    c.barrier.ceiling = b.number("ceiling", c.barrier.ceiling);
  }
  if (node.has("widths")) {
    const Node w = node.at("widths");
    w.allow({"collision", "boundary", "input", "rate"});
    c.widths.collision = w.number("collision", c.widths.collision);
    c.widths.boundary = w.number("boundary", c.widths.boundary);
    c.widths.input = w.vector("input", c.widths.input);
    c.widths.rate = w.vector("rate", c.widths.rate);
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    node.fail(e.what());
  }
  return c;
}

DofSet parse_dofs(const Node& node, DofSet d) {
  node.allow({"nu", "nu_w", "nu_x", "nu_u", "nu_z"});
  d.nu = node.number("nu", d.nu);
  d.nu_w = node.number("nu_w", d.nu_w);
  d.nu_x = node.number("nu_x", d.nu_x);
  d.nu_u = node.number("nu_u", d.nu_u);
  d.nu_z = node.number("nu_z", d.nu_z);
  for (double v : {d.nu, d.nu_w, d.nu_x, d.nu_u, d.nu_z}) {
    if (!(v > 2)) node.fail("degrees of freedom must exceed 2");
  }
  return d;
}

PlannerSettings parse_planner(const Node& node) {
  node.allow({"N", "H", "dt", "seed", "mode", "innovation_mode", "dof_growth", "apply", "jitter", "enkts", "enks",
              "sigma_w", "sigma_vx", "sigma_vu", "sigma_vz"});
  PlannerSettings p;
  p.ensemble_size = node.integer("N", p.ensemble_size);
  if (p.ensemble_size < 2) node.at("N").fail("ensemble size must be at least 2");
  p.horizon = static_cast<int>(node.integer("H", p.horizon));
  if (p.horizon < 1) node.at("H").fail("horizon must be at least 1");
  p.dt = node.positive("dt", p.dt);
  if (node.has("seed")) {
    const Node s = node.at("seed");
    if (!s.raw().is_number_unsigned() && !s.raw().is_number_integer()) s.fail("expected a nonnegative integer");
    if (s.raw().is_number_integer() && s.raw().get<long long>() < 0) s.fail("expected a nonnegative integer");
    p.seed = s.raw().get<std::uint64_t>();
  }
  if (node.has("mode")) {
    try {
      p.mode = parse_planner_mode(node.at("mode").string());
    } catch (const FormatError& e) {
      node.at("mode").fail(e.what());
    }
  }
  const std::string innovation = node.string("innovation_mode", "perturbed-observation");
  if (innovation == "perturbed-observation") {
    p.innovation_mode = InnovationMode::kPerturbedObservation;
  } else if (innovation == "literal") {
    p.innovation_mode = InnovationMode::kLiteral;
  } else {
    node.at("innovation_mode").fail("expected 'perturbed-observation' or 'literal'");
  }
  const std::string growth = node.string("dof_growth", "reset-per-step");
  if (growth == "reset-per-step") {
    p.dof_growth = DofGrowth::kResetPerStep;
  } else if (growth == "accumulate") {
    p.dof_growth = DofGrowth::kAccumulate;
  } else {
    node.at("dof_growth").fail("expected 'reset-per-step' or 'accumulate'");
  }
  const std::string apply = node.string("apply", "first");
  if (apply == "first") {
    p.apply = ApplyMode::kFirst;
  } else if (apply == "whole-plan") {
    p.apply = ApplyMode::kWholePlan;
  } else {
    node.at("apply").fail("expected 'first' or 'whole-plan'");
  }
  p.jitter = node.positive("jitter", p.jitter);
  if (node.has("enkts")) p.enkts = parse_dofs(node.at("enkts"), p.enkts);
  if (node.has("enks")) p.enks = parse_dofs(node.at("enks"), p.enks);
  p.sigma_w = node.vector("sigma_w", p.sigma_w);
  p.sigma_vx = node.vector("sigma_vx", p.sigma_vx);
  p.sigma_vu = node.vector("sigma_vu", p.sigma_vu);
  p.sigma_vz = node.number("sigma_vz", p.sigma_vz);
  const bool nonneg = (p.sigma_w.array() >= 0).all() && (p.sigma_vx.array() >= 0).all() &&
                      (p.sigma_vu.array() >= 0).all() && p.sigma_vz >= 0;
  if (!nonneg) node.fail("noise scales must be nonnegative");
  return p;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("scenario: ") + e.what());
  }
  const Node root(doc, "scenario");
  root.allow({"name", "road", "obstacles", "ego", "vehicle", "plant", "reference", "constraints", "planner",
              "termination"});

  const PlannerSettings planner = root.has("planner") ? parse_planner(root.at("planner")) : PlannerSettings{};
  Termination termination;
  if (root.has("termination")) {
    const Node t = root.at("termination");
    t.allow({"max_steps", "stop_on_collision"});
    termination.max_steps = t.integer("max_steps", termination.max_steps);
    if (termination.max_steps < 1) t.at("max_steps").fail("must be at least 1");
    termination.stop_on_collision = t.boolean("stop_on_collision", termination.stop_on_collision);
  }

  ScenarioConfig config(parse_road(root.at("road")));
  config.name = root.at("name").string();
  config.planner = planner;
  config.termination = termination;

  double ego_length = 4.5;
  double ego_width = 1.8;
  config.ego = parse_ego(root.at("ego"), config.road);

  const double end_time = static_cast<double>(termination.max_steps + planner.horizon + 1) * planner.dt;
  if (root.has("obstacles")) {
    for (const auto& item : root.at("obstacles").array()) {
      config.obstacles.push_back(parse_obstacle(item, config.road, planner.dt, end_time));
    }
  }

  config.vehicle = root.has("vehicle") ? parse_vehicle(root.at("vehicle"), base_dir, planner.dt)
                                       : parse_vehicle(Node(json::object(), "scenario.vehicle"), base_dir, planner.dt);
  const std::string plant = root.string("plant", "same");
  if (plant == "same") {
    config.plant = PlantModel::kSame;
  } else if (plant == "bicycle") {
    config.plant = PlantModel::kBicycle;
  } else {
    root.at("plant").fail("expected 'same' or 'bicycle'");
  }

  const Node ref = root.at("reference");
  ref.allow({"speed", "lateral"});
  config.reference.speed = parse_schedule(ref.at("speed"));
  config.reference.lateral = ref.has("lateral") ? parse_schedule(ref.at("lateral")) : Schedule::constant(0.0);

  if (root.has("constraints")) {
    const Node c = root.at("constraints");
    // The ego footprint lives next to the other constraint settings.
    json copy = c.raw();
    if (copy.contains("ego")) {
      const Node e(c.raw().at("ego"), c.path() + ".ego");
      e.allow({"length", "width"});
      ego_length = e.positive("length", ego_length);
      ego_width = e.positive("width", ego_width);
      copy.erase("ego");
    }
    config.constraints = parse_constraints(Node(copy, c.path()), ego_length, ego_width);
  } else {
    config.constraints.ego = {ego_length, ego_width};
  }
  return config;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open scenario file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto base = std::filesystem::path(path).parent_path();
  try {
    return parse_scenario(buffer.str(), base.empty() ? "." : base.string());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

VehicleDynamics planner_dynamics(const ScenarioConfig& config) {
  if (config.vehicle.model == VehicleModel::kBicycle) return bicycle_dynamics(config.vehicle.params);
  MlpModel model = load_weights(config.vehicle.weights);
  const auto manifest = read_manifest(config.vehicle.weights);
  const auto dt = manifest.find("dt");
  if (dt != manifest.end() && std::abs(std::stod(dt->second) - config.vehicle.params.dt) > 1e-12) {
    throw FormatError(config.vehicle.weights + ": network was fitted at dt = " + dt->second +
                      ", scenario uses a different dt");
  }
  return mlp_dynamics(std::move(model), config.vehicle.params);
}

VehicleDynamics plant_dynamics(const ScenarioConfig& config) {
  if (config.plant == PlantModel::kBicycle) return bicycle_dynamics(config.vehicle.params);
  return planner_dynamics(config);
}

}  // namespace bimp
