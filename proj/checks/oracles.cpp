#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bimp/constraints.hpp"
#include "bimp/student_t.hpp"

namespace bimp::oracle {

Gaussian gaussian_conditional(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, Eigen::Index dim_a,
                              const Eigen::VectorXd& observed_b) {
  const Eigen::Index dim_b = mean.size() - dim_a;
  const Eigen::MatrixXd c_aa = cov.topLeftCorner(dim_a, dim_a);
  const Eigen::MatrixXd c_ab = cov.topRightCorner(dim_a, dim_b);
  const Eigen::MatrixXd c_bb = cov.bottomRightCorner(dim_b, dim_b);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(c_bb);
  Gaussian g;
  g.mean = mean.head(dim_a) + c_ab * lu.solve(observed_b - mean.tail(dim_b));
  g.cov = c_aa - c_ab * lu.solve(Eigen::MatrixXd(c_ab.transpose()));
  return g;
}

double gaussian_log_pdf(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const Eigen::VectorXd& x) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  const Eigen::VectorXd e = x - mean;
  const double q = e.dot(lu.solve(e));
  const auto n = static_cast<double>(mean.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + std::log(lu.determinant()) + q);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

Moments t_conditional_quadrature(const Eigen::Vector2d& location, const Eigen::Matrix2d& scale, double dof,
                                 double observed_b, long grid_points, double half_width_sd) {
  const double det = scale(0, 0) * scale(1, 1) - scale(0, 1) * scale(1, 0);
  const Eigen::Matrix2d inv =
      (Eigen::Matrix2d() << scale(1, 1), -scale(0, 1), -scale(1, 0), scale(0, 0)).finished() / det;
  const double center = location[0] + scale(0, 1) / scale(1, 1) * (observed_b - location[1]);
  const double half = half_width_sd * std::sqrt(scale(0, 0));
  const double h = 2.0 * half / static_cast<double>(grid_points - 1);
  // The joint density up to its constant, as a function of a.
  auto density = [&](double a) {
    const Eigen::Vector2d e(a - location[0], observed_b - location[1]);
    return std::pow(1.0 + e.dot(inv * e) / dof, -0.5 * (dof + 2.0));
  };
  double z = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  for (long i = 0; i < grid_points; ++i) {
    const double a = center - half + h * static_cast<double>(i);
    const double w = (i == 0 || i == grid_points - 1) ? 0.5 : 1.0;
    const double p = w * density(a);
    z += p;
    m1 += p * (a - center);
    m2 += p * (a - center) * (a - center);
  }
  Moments out;
  const double shift = m1 / z;
  out.mean = center + shift;
  out.variance = m2 / z - shift * shift;
  return out;
}

KalmanResult kalman_rts(const LinearGaussianModel& model, const std::vector<Eigen::VectorXd>& ys) {
  const std::size_t steps = ys.size();
  KalmanResult r;
  std::vector<Eigen::VectorXd> pred_mean(steps + 1);
  std::vector<Eigen::MatrixXd> pred_cov(steps + 1);
  r.filtered_mean.push_back(model.m0);
  r.filtered_cov.push_back(model.P0);
  for (std::size_t t = 1; t <= steps; ++t) {
    const Eigen::VectorXd m = model.A * r.filtered_mean.back();
    const Eigen::MatrixXd P = model.A * r.filtered_cov.back() * model.A.transpose() + model.Q;
    pred_mean[t] = m;
    pred_cov[t] = P;
    const Eigen::MatrixXd S = model.H * P * model.H.transpose() + model.R;
    const Eigen::MatrixXd K = P * model.H.transpose() * S.inverse();
    r.filtered_mean.push_back(m + K * (ys[t - 1] - model.H * m));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(P.rows(), P.cols());
    // Joseph form keeps the covariance symmetric.
    r.filtered_cov.push_back((I - K * model.H) * P * (I - K * model.H).transpose() + K * model.R * K.transpose());
  }
  r.smoothed_mean = r.filtered_mean;
  r.smoothed_cov = r.filtered_cov;
  for (std::size_t t = steps; t-- > 0;) {
    const Eigen::MatrixXd G = r.filtered_cov[t] * model.A.transpose() * pred_cov[t + 1].inverse();
    r.smoothed_mean[t] = r.filtered_mean[t] + G * (r.smoothed_mean[t + 1] - pred_mean[t + 1]);
    r.smoothed_cov[t] = r.filtered_cov[t] + G * (r.smoothed_cov[t + 1] - pred_cov[t + 1]) * G.transpose();
  }
  return r;
}

namespace {

Eigen::VectorXd draw_noise(const std::vector<NoiseBlock<double>>& blocks, RandomEngine& engine) {
  Eigen::Index dim = 0;
  for (const auto& b : blocks) dim += b.factor.rows();
  Eigen::VectorXd v(dim);
  Eigen::Index offset = 0;
  for (const auto& b : blocks) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(b.factor.rows());
    v.segment(offset, b.factor.rows()) = sample_mvt<double>(zero, b.factor, b.dof, 1, engine).col(0);
    offset += b.factor.rows();
  }
  return v;
}

}  // namespace

std::vector<Eigen::MatrixXd> plain_enks(const Eigen::MatrixXd& initial, long start_index,
                                        const StateSpaceModel<double>& model, const NoiseBlock<double>& process,
                                        const std::vector<NoiseBlock<double>>& measurement,
                                        const std::vector<Eigen::VectorXd>& observations, StreamKey key) {
  const Eigen::Index d = initial.rows();
  const Eigen::Index n = initial.cols();
  const auto count = static_cast<double>(n);
  Eigen::MatrixXd X = initial;
  std::vector<Eigen::MatrixXd> history;
  long t = start_index;
  for (const auto& y : observations) {
    ++t;
    const StreamKey step = key.child(static_cast<std::uint64_t>(t));
    Eigen::MatrixXd grown(X.rows() + d, n);
    grown.topRows(X.rows()) = X;
    for (Eigen::Index j = 0; j < n; ++j) {
      auto engine = step.child({2, static_cast<std::uint64_t>(j)}).engine();
      const Eigen::VectorXd w = draw_noise({process}, engine);
      grown.col(j).tail(d) = model.transition(t, X.col(j).tail(d)) + model.noise_embedding * w;
    }
    X = grown;

    Eigen::MatrixXd H(model.measurement_dim, n);
    Eigen::MatrixXd Y(model.measurement_dim, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      auto engine = step.child({3, static_cast<std::uint64_t>(j)}).engine();
      H.col(j) = model.observe(t, X.col(j).tail(d));
      Y.col(j) = H.col(j) + draw_noise(measurement, engine);
    }
    const Eigen::VectorXd x_mean = X.rowwise().sum() / count;
    const Eigen::VectorXd y_mean = Y.rowwise().sum() / count;
    const Eigen::MatrixXd dx = X.colwise() - x_mean;
    const Eigen::MatrixXd dy = Y.colwise() - y_mean;
    const Eigen::MatrixXd c_xy = dx * dy.transpose() / count;
    const Eigen::MatrixXd c_yy = dy * dy.transpose() / count;
    const Eigen::MatrixXd K = c_yy.fullPivLu().solve(Eigen::MatrixXd(c_xy.transpose())).transpose();

    for (Eigen::Index j = 0; j < n; ++j) {
      auto engine = step.child({4, static_cast<std::uint64_t>(j)}).engine();
      const Eigen::VectorXd innovation = y + draw_noise(measurement, engine) - H.col(j);
      X.col(j) += K * innovation;
    }
    history.push_back(X);
  }
  return history;
}

Eigen::VectorXd lq_first_input(const LqProblem& p) {
  const Eigen::Index nx = p.A.rows();
  const Eigen::Index m = p.B.cols();
  const auto horizon = static_cast<Eigen::Index>(p.r.size());
  const Eigen::Index nv = (horizon + 1) * m;  // increments w_0..w_H

  // Affine maps of the increments: x_t = cx + Jx W, u_t = cu + Ju W.
  Eigen::VectorXd cx = p.x0;
  Eigen::MatrixXd jx = Eigen::MatrixXd::Zero(nx, nv);
  Eigen::VectorXd cu = p.u_prev;
  Eigen::MatrixXd ju = Eigen::MatrixXd::Zero(m, nv);
  ju.block(0, 0, m, m).setIdentity();

  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(nv, nv);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv);
  for (Eigen::Index i = 0; i <= horizon; ++i) normal.block(i * m, i * m, m, m) += p.Sw;

  for (Eigen::Index t = 1; t <= horizon; ++t) {
    cx = p.A * cx + p.B * cu;
    jx = p.A * jx + p.B * ju;
    ju.block(0, t * m, m, m).setIdentity();
    const auto idx = static_cast<std::size_t>(t - 1);
    normal += jx.transpose() * p.Qx * jx + ju.transpose() * p.Ru * ju;
    rhs += jx.transpose() * p.Qx * (p.r[idx] - cx) + ju.transpose() * p.Ru * (p.s[idx] - cu);
  }
  const Eigen::VectorXd w = normal.ldlt().solve(rhs);
  return p.u_prev + w.head(m);
}

TraceAudit audit_trace(const ScenarioConfig& config, const TraceTable& table) {
  const std::size_t n_ov = config.obstacles.size();
  const std::size_t c_step = table.column("step");
  const std::size_t c_x = table.column("x");
  const std::size_t c_a = table.column("a");
  const std::size_t c_da = table.column("da");
  const std::size_t c_margin = table.column("boundary_margin");
  const std::size_t c_flags = table.column("viol_flags");
  const ConstraintParams& c = config.constraints;

  TraceAudit audit;
  for (const auto& row : table.rows) {
    ++audit.rows;
    const Pose ego{row[c_x], row[c_x + 1], row[c_x + 2]};
    const double time = row[c_step] * config.planner.dt;
    bool close = false;
    bool distance_ok = true;
    for (std::size_t i = 0; i < n_ov; ++i) {
      const ObstacleState ov = ov_state_at(config.obstacles[i], time);
      const double d = collision_distance(ego, c.ego, ov.pose, ov.footprint, c.vehicle_margin);
      distance_ok = distance_ok && d == row[table.column("dist_ov" + std::to_string(i + 1))];
      close = close || d < c.d_min;
    }
    const double margin = boundary_margin(ego, config.road);
    bool input = false;
    bool rate = false;
    for (std::size_t i = 0; i < 2; ++i) {
      const double u = row[c_a + i];
      const double du = row[c_da + i];
      const auto k = static_cast<Eigen::Index>(i);
      input = input || u < c.u_min[k] || u > c.u_max[k];
      rate = rate || du < c.du_min[k] || du > c.du_max[k];
    }
    const unsigned expected = (close ? 1U : 0U) | (margin < config.road.margin() ? 2U : 0U) | (input ? 4U : 0U) |
                              (rate ? 8U : 0U);
    if (static_cast<unsigned>(row[c_flags]) != expected) ++audit.flag_mismatches;
    if (!distance_ok) ++audit.distance_mismatches;
    if (margin != row[c_margin]) ++audit.margin_mismatches;
  }
  return audit;
}

}  // namespace bimp::oracle
