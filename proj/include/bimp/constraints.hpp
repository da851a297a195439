// Road geometry, scripted obstacle vehicles, the stacked constraint
// residual phi (phi <= 0 feasible) and the clamped soft barrier.
#pragma once

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace bimp {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

/// Vehicle footprint; the collision model is the ellipse with semi-axes
/// length/2 + margin and width/2 + margin aligned with the heading.
struct Footprint {
  double length = 0.0;
  double width = 0.0;
};

/// Distance between two vehicles' ellipses along the line joining their
/// centers: center distance minus both directional radii. Negative on overlap.
double collision_distance(const Pose& a, const Footprint& fa, const Pose& b, const Footprint& fb,
                          double margin = 0.0);

struct StraightSegment {
  double length = 0.0;
};
/// Circular arc; positive angle turns left.
struct ArcSegment {
  double radius = 0.0;
  double angle = 0.0;
};
using RoadSegment = std::variant<StraightSegment, ArcSegment>;

/// Centerline polyline with arc length; the road spans lane_count lanes
/// of lane_width, centered on the centerline.
class RoadGeometry {
 public:
  struct Projection {
    double arc_length = 0.0;
    double lateral = 0.0;  ///< signed offset, positive to the left of travel
    bool extrapolated = false;
  };

  RoadGeometry(std::vector<Eigen::Vector2d> centerline, double lane_width, int lane_count, double margin = 0.0,
               std::vector<double> curvature = {});

  static RoadGeometry from_segments(const Eigen::Vector2d& start, double heading,
                                    const std::vector<RoadSegment>& segments, double lane_width, int lane_count,
                                    double margin = 0.0, double resolution = 1.0);

  [[nodiscard]] Projection project(const Eigen::Vector2d& point) const;
  [[nodiscard]] Eigen::Vector2d point_at(double arc_length, double lateral = 0.0) const;
  [[nodiscard]] double heading_at(double arc_length) const;
  [[nodiscard]] double curvature_at(double arc_length) const;

  [[nodiscard]] double length() const { return arc_.back(); }
  [[nodiscard]] double lane_width() const { return lane_width_; }
  [[nodiscard]] int lane_count() const { return lane_count_; }
  [[nodiscard]] double half_width() const { return 0.5 * lane_width_ * lane_count_; }
  /// Required clearance between the ego center and the road edge.
  [[nodiscard]] double margin() const { return margin_; }
  [[nodiscard]] const std::vector<Eigen::Vector2d>& centerline() const { return points_; }

 private:
  [[nodiscard]] std::size_t segment_index(double arc_length) const;

  std::vector<Eigen::Vector2d> points_;
  std::vector<double> arc_;
  std::vector<double> curvature_;
  double lane_width_;
  int lane_count_;
  double margin_;
};

/// Road half-width minus |lateral offset|: positive inside, negative outside.
double boundary_margin(const Pose& ego, const RoadGeometry& road);
double boundary_margin(const Pose& ego, const RoadGeometry& road, bool& extrapolated);

struct ObstacleWaypoint {
  double time = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
};

struct ObstacleScript {
  std::string name;
  Footprint footprint;
  std::vector<ObstacleWaypoint> waypoints;

  void validate() const;
};

struct ObstacleState {
  Pose pose;
  double speed = 0.0;
  Footprint footprint;
};

/// Piecewise-linear interpolation of position, heading and speed; clamped
/// to the first waypoint before it and held at the last one after it.
ObstacleState ov_state_at(const ObstacleScript& script, double time);
std::vector<ObstacleState> ov_states_at(const std::vector<ObstacleScript>& scripts, double time);

/// Componentwise soft barrier of width w_i:
///   0                               phi <= -w
///   kappa * ((phi + w) / w)^2       -w < phi <= 0
///   min(kappa * (1 + beta * phi), ceiling)   phi > 0
struct BarrierParams {
  double kappa = 10.0;
  double beta = 1.0;
  double ceiling = 1e4;
};

Eigen::VectorXd barrier(const Eigen::VectorXd& phi, const Eigen::VectorXd& widths, const BarrierParams& params);

/// Per-group activation widths of the barrier, in the units of each residual.
struct BarrierWidths {
  double collision = 5.0;
  double boundary = 0.5;
  Eigen::Vector2d input{1.0, 0.05};
  Eigen::Vector2d rate{0.3, 0.01};
};

struct ConstraintParams {
  double d_min = 1.0;
  Eigen::Vector2d u_min{-8.0, -0.5};
  Eigen::Vector2d u_max{3.0, 0.5};
  Eigen::Vector2d du_min{-1.0, -0.05};
  Eigen::Vector2d du_max{1.0, 0.05};
  double vehicle_margin = 0.0;  ///< added to both ellipses' semi-axes
  Footprint ego;
  BarrierParams barrier;
  BarrierWidths widths;

  void validate() const;
};

/// Number of entries of the stacked residual for a scenario with the given obstacle count.
constexpr Eigen::Index constraint_count(Eigen::Index obstacles) { return obstacles + 1 + 2 * 2 + 2 * 2; }

/// Stacked residual, fixed order:
///   [d_min - distance_i for each obstacle]
///   [road margin - boundary_margin]
///   [u - u_max (2)], [u_min - u (2)], [du - du_max (2)], [du_min - du (2)]
Eigen::VectorXd constraint_vector(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& du,
                                  const std::vector<ObstacleState>& obstacles, const RoadGeometry& road,
                                  const ConstraintParams& params);

/// Barrier widths in the order of constraint_vector.
Eigen::VectorXd barrier_widths(const ConstraintParams& params, Eigen::Index obstacles);

/// Names of the constraint_vector entries, in order.
std::vector<std::string> constraint_names(Eigen::Index obstacles);

}  // namespace bimp
