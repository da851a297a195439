#include "bimp/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bimp/errors.hpp"
#include "bimp/vehicle.hpp"

namespace bimp {

namespace {

double directional_radius(double semi_major, double semi_minor, double relative_angle) {
  const double c = semi_minor * std::cos(relative_angle);
  const double s = semi_major * std::sin(relative_angle);
  const double denom = std::sqrt(c * c + s * s);
  if (denom == 0.0) return 0.0;
  return semi_major * semi_minor / denom;
}

}  // namespace

double collision_distance(const Pose& a, const Footprint& fa, const Pose& b, const Footprint& fb, double margin) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double center = std::hypot(dx, dy);
  // Coincident centers: measure along the first vehicle's heading.
  const double direction = center > 0.0 ? std::atan2(dy, dx) : a.heading;
  const double ra = directional_radius(0.5 * fa.length + margin, 0.5 * fa.width + margin, direction - a.heading);
  const double rb = directional_radius(0.5 * fb.length + margin, 0.5 * fb.width + margin, direction - b.heading);
  return center - ra - rb;
}

// ---------------------------------------------------------------------------
// Road

RoadGeometry::RoadGeometry(std::vector<Eigen::Vector2d> centerline, double lane_width, int lane_count, double margin,
                           std::vector<double> curvature)
    : points_(std::move(centerline)),
      curvature_(std::move(curvature)),
      lane_width_(lane_width),
      lane_count_(lane_count),
      margin_(margin) {
  if (points_.size() < 2) throw DomainError("RoadGeometry: centerline needs at least two points");
  if (!(lane_width_ > 0)) throw DomainError("RoadGeometry: lane width must be positive");
  if (lane_count_ < 1) throw DomainError("RoadGeometry: lane count must be at least one");
  if (margin_ < 0 || margin_ >= half_width()) throw DomainError("RoadGeometry: margin must lie in [0, half width)");
  arc_.resize(points_.size());
  arc_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double step = (points_[i] - points_[i - 1]).norm();
    if (!(step > 0)) throw DomainError("RoadGeometry: centerline arc length must be strictly increasing");
    arc_[i] = arc_[i - 1] + step;
  }
  if (curvature_.empty()) {
    // Heading change per unit length around each segment.
    curvature_.assign(points_.size() - 1, 0.0);
    for (std::size_t i = 1; i + 1 < points_.size(); ++i) {
      const Eigen::Vector2d d0 = points_[i] - points_[i - 1];
      const Eigen::Vector2d d1 = points_[i + 1] - points_[i];
      const double turn = wrap_angle(std::atan2(d1.y(), d1.x()) - std::atan2(d0.y(), d0.x()));
      const double k = turn / (0.5 * (d0.norm() + d1.norm()));
      curvature_[i - 1] += 0.5 * k;
      curvature_[i] += 0.5 * k;
    }
  } else if (curvature_.size() != points_.size() - 1) {
    throw DomainError("RoadGeometry: one curvature value per segment is required");
  }
}

RoadGeometry RoadGeometry::from_segments(const Eigen::Vector2d& start, double heading,
                                         const std::vector<RoadSegment>& segments, double lane_width, int lane_count,
                                         double margin, double resolution) {
  if (!(resolution > 0)) throw DomainError("RoadGeometry: resolution must be positive");
  std::vector<Eigen::Vector2d> points{start};
  std::vector<double> curvature;
  Eigen::Vector2d p = start;
  double h = heading;
  for (const auto& segment : segments) {
    if (const auto* s = std::get_if<StraightSegment>(&segment)) {
      if (!(s->length > 0)) throw DomainError("RoadGeometry: straight segment length must be positive");
      const int n = std::max(1, static_cast<int>(std::ceil(s->length / resolution)));
      const Eigen::Vector2d origin = p;
      for (int i = 1; i <= n; ++i) {
        p = origin + (s->length * i / n) * Eigen::Vector2d(std::cos(h), std::sin(h));
        points.push_back(p);
        curvature.push_back(0.0);
      }
    } else {
      const auto& a = std::get<ArcSegment>(segment);
      if (!(a.radius > 0) || a.angle == 0.0) throw DomainError("RoadGeometry: arc needs positive radius and nonzero angle");
      const double sign = a.angle > 0 ? 1.0 : -1.0;
      const int n = std::max(1, static_cast<int>(std::ceil(a.radius * std::abs(a.angle) / resolution)));
      // Circle center lies to the left (right) of travel for a left (right) turn.
      const Eigen::Vector2d center = p + sign * a.radius * Eigen::Vector2d(-std::sin(h), std::cos(h));
      const double h0 = h;
      for (int i = 1; i <= n; ++i) {
        const double hi = h0 + a.angle * i / n;
        p = center - sign * a.radius * Eigen::Vector2d(-std::sin(hi), std::cos(hi));
        points.push_back(p);
        curvature.push_back(sign / a.radius);
      }
      h = h0 + a.angle;
    }
  }
  return RoadGeometry(std::move(points), lane_width, lane_count, margin, std::move(curvature));
}

std::size_t RoadGeometry::segment_index(double arc_length) const {
  const auto it = std::upper_bound(arc_.begin(), arc_.end(), arc_length);
  if (it == arc_.begin()) return 0;
  const auto i = static_cast<std::size_t>(std::distance(arc_.begin(), it)) - 1;
  return std::min(i, points_.size() - 2);
}

RoadGeometry::Projection RoadGeometry::project(const Eigen::Vector2d& q) const {
  Projection best;
  double best_dist = std::numeric_limits<double>::infinity();
  const std::size_t last = points_.size() - 2;
  for (std::size_t i = 0; i <= last; ++i) {
    const Eigen::Vector2d d = points_[i + 1] - points_[i];
    const double len2 = d.squaredNorm();
    double t = (q - points_[i]).dot(d) / len2;
    bool extrapolated = false;
    if (t < 0.0) {
      if (i == 0) {
        extrapolated = true;
      } else {
        t = 0.0;
      }
    }
    if (t > 1.0) {
      if (i == last) {
        extrapolated = true;
      } else {
        t = 1.0;
      }
    }
    const Eigen::Vector2d foot = points_[i] + t * d;
    const Eigen::Vector2d offset = q - foot;
    const double dist = offset.norm();
    if (dist < best_dist) {
      best_dist = dist;
      const double len = std::sqrt(len2);
      best.arc_length = arc_[i] + t * len;
      best.lateral = (d.x() * offset.y() - d.y() * offset.x()) / len;
      best.extrapolated = extrapolated;
    }
  }
  return best;
}

Eigen::Vector2d RoadGeometry::point_at(double arc_length, double lateral) const {
  const std::size_t i = segment_index(arc_length);
  const Eigen::Vector2d d = points_[i + 1] - points_[i];
  const double len = arc_[i + 1] - arc_[i];
  const double t = (arc_length - arc_[i]) / len;
  const Eigen::Vector2d unit = d / d.norm();
  return points_[i] + t * d + lateral * Eigen::Vector2d(-unit.y(), unit.x());
}

double RoadGeometry::heading_at(double arc_length) const {
  const std::size_t i = segment_index(arc_length);
  const Eigen::Vector2d d = points_[i + 1] - points_[i];
  return std::atan2(d.y(), d.x());
}

double RoadGeometry::curvature_at(double arc_length) const { return curvature_[segment_index(arc_length)]; }

double boundary_margin(const Pose& ego, const RoadGeometry& road, bool& extrapolated) {
  const auto p = road.project({ego.x, ego.y});
  extrapolated = p.extrapolated;
  return road.half_width() - std::abs(p.lateral);
}

double boundary_margin(const Pose& ego, const RoadGeometry& road) {
  bool ignored = false;
  return boundary_margin(ego, road, ignored);
}

// ---------------------------------------------------------------------------
// Obstacles

void ObstacleScript::validate() const {
  if (waypoints.empty()) throw DomainError("ObstacleScript " + name + ": at least one waypoint is required");
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (!(waypoints[i].time > waypoints[i - 1].time)) {
      throw DomainError("ObstacleScript " + name + ": waypoint times must be strictly increasing");
    }
  }
}

ObstacleState ov_state_at(const ObstacleScript& script, double time) {
  script.validate();
  const auto& w = script.waypoints;
  auto state_of = [&](const ObstacleWaypoint& p) {
    return ObstacleState{{p.x, p.y, p.heading}, p.speed, script.footprint};
  };
  if (time <= w.front().time) return state_of(w.front());
  if (time >= w.back().time) return state_of(w.back());
  const auto it = std::upper_bound(w.begin(), w.end(), time,
                                   [](double t, const ObstacleWaypoint& p) { return t < p.time; });
  const ObstacleWaypoint& b = *it;
  const ObstacleWaypoint& a = *(it - 1);
  const double s = (time - a.time) / (b.time - a.time);
  ObstacleState out;
  out.pose.x = a.x + s * (b.x - a.x);
  out.pose.y = a.y + s * (b.y - a.y);
  out.pose.heading = wrap_angle(a.heading + s * wrap_angle(b.heading - a.heading));
  out.speed = a.speed + s * (b.speed - a.speed);
  out.footprint = script.footprint;
  return out;
}

std::vector<ObstacleState> ov_states_at(const std::vector<ObstacleScript>& scripts, double time) {
  std::vector<ObstacleState> out;
  out.reserve(scripts.size());
  for (const auto& s : scripts) out.push_back(ov_state_at(s, time));
  return out;
}

// ---------------------------------------------------------------------------
// Constraints

Eigen::VectorXd barrier(const Eigen::VectorXd& phi, const Eigen::VectorXd& widths, const BarrierParams& params) {
  if (widths.size() != phi.size()) throw DomainError("barrier: one width per residual is required");
  Eigen::VectorXd z(phi.size());
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    const double w = widths[i];
    const double p = phi[i];
    double value;
    if (p <= -w) {
      value = 0.0;
    } else if (p <= 0.0) {
      const double r = (p + w) / w;
      value = params.kappa * r * r;
    } else {
      value = params.kappa * (1.0 + params.beta * p);
    }
    // NaN residuals are treated as maximal violation.
    z[i] = std::isnan(value) ? params.ceiling : std::min(value, params.ceiling);
  }
  return z;
}

void ConstraintParams::validate() const {
  if (!(d_min > 0)) throw DomainError("ConstraintParams: d_min must be positive");
  if (!(u_min.array() < u_max.array()).all()) throw DomainError("ConstraintParams: u_min must be below u_max");
  if (!(du_min.array() < du_max.array()).all()) throw DomainError("ConstraintParams: du_min must be below du_max");
  if (!(barrier.kappa > 0) || !(barrier.ceiling >= barrier.kappa) || barrier.beta < 0) {
    throw DomainError("ConstraintParams: barrier needs kappa > 0, beta >= 0 and ceiling >= kappa");
  }
  const bool widths_ok = widths.collision > 0 && widths.boundary > 0 && (widths.input.array() > 0).all() &&
                         (widths.rate.array() > 0).all();
  if (!widths_ok) throw DomainError("ConstraintParams: barrier widths must be positive");
}

Eigen::VectorXd constraint_vector(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& du,
                                  const std::vector<ObstacleState>& obstacles, const RoadGeometry& road,
                                  const ConstraintParams& params) {
  const auto n_obs = static_cast<Eigen::Index>(obstacles.size());
  Eigen::VectorXd phi(constraint_count(n_obs));
  const Pose ego{x[0], x[1], x[2]};
  Eigen::Index k = 0;
  for (const auto& ov : obstacles) {
    phi[k++] = params.d_min - collision_distance(ego, params.ego, ov.pose, ov.footprint, params.vehicle_margin);
  }
  phi[k++] = road.margin() - boundary_margin(ego, road);
  phi.segment(k, 2) = u - params.u_max;
  k += 2;
  phi.segment(k, 2) = params.u_min - u;
  k += 2;
  phi.segment(k, 2) = du - params.du_max;
  k += 2;
  phi.segment(k, 2) = params.du_min - du;
  return phi;
}

Eigen::VectorXd barrier_widths(const ConstraintParams& params, Eigen::Index obstacles) {
  Eigen::VectorXd w(constraint_count(obstacles));
  w.head(obstacles).setConstant(params.widths.collision);
  w[obstacles] = params.widths.boundary;
  w.segment(obstacles + 1, 2) = params.widths.input;
  w.segment(obstacles + 3, 2) = params.widths.input;
  w.segment(obstacles + 5, 2) = params.widths.rate;
  w.segment(obstacles + 7, 2) = params.widths.rate;
  return w;
}

std::vector<std::string> constraint_names(Eigen::Index obstacles) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < obstacles; ++i) names.push_back("collision_ov" + std::to_string(i + 1));
  for (const char* n : {"boundary", "accel_max", "steer_max", "accel_min", "steer_min", "daccel_max", "dsteer_max",
                        "daccel_min", "dsteer_min"}) {
    names.emplace_back(n);
  }
  return names;
}

}  // namespace bimp
