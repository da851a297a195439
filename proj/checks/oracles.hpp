// Reference computations used to validate the library. Each one is coded
// from the textbook formula and shares no algorithmic code with the code
// it checks.
#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "bimp/ensemble_smoother.hpp"
#include "bimp/random.hpp"
#include "bimp/scenario.hpp"
#include "bimp/trace.hpp"

namespace bimp::oracle {

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Conditional of the first dim_a entries of N(mean, cov) given the rest.
Gaussian gaussian_conditional(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, Eigen::Index dim_a,
                              const Eigen::VectorXd& observed_b);

/// Multivariate normal log-density.
double gaussian_log_pdf(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const Eigen::VectorXd& x);

/// Standard normal CDF.
double normal_cdf(double x);

/// Conditional of a given b under a bivariate Student's-t, by trapezoid
/// quadrature of the joint density on a uniform grid in a. Returns the
/// conditional mean and variance.
struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};
Moments t_conditional_quadrature(const Eigen::Vector2d& location, const Eigen::Matrix2d& scale, double dof,
                                 double observed_b, long grid_points = 400001, double half_width_sd = 400.0);

/// Linear-Gaussian model x+ = A x + w, y = H x + v.
struct LinearGaussianModel {
  Eigen::MatrixXd A, Q, H, R;
  Eigen::VectorXd m0;
  Eigen::MatrixXd P0;
};

struct KalmanResult {
  std::vector<Eigen::VectorXd> filtered_mean;  ///< index 0 is the prior, then after y_1..y_T
  std::vector<Eigen::MatrixXd> filtered_cov;
  std::vector<Eigen::VectorXd> smoothed_mean;  ///< Rauch-Tung-Striebel
  std::vector<Eigen::MatrixXd> smoothed_cov;
};

/// Kalman filter over y_1..y_T (no observation at time 0) and the RTS pass.
KalmanResult kalman_rts(const LinearGaussianModel& model, const std::vector<Eigen::VectorXd>& ys);

/// Plain stochastic ensemble Kalman smoother on stacked blocks: 1/N sample
/// moments without dof factors, LU solve without jitter. Noise is drawn
/// from the same stream addresses as the library so the two runs can be
/// compared sample by sample. Returns the ensemble after every update.
std::vector<Eigen::MatrixXd> plain_enks(const Eigen::MatrixXd& initial, long start_index,
                                        const StateSpaceModel<double>& model, const NoiseBlock<double>& process,
                                        const std::vector<NoiseBlock<double>>& measurement,
                                        const std::vector<Eigen::VectorXd>& observations, StreamKey key);

/// Linear-quadratic tracking over the augmented system (x, u, du):
/// minimizes the prior term on the initial increment and the per-step
/// increment, state and input tracking terms by a dense least-squares
/// solve over the increments. Returns the optimal input at the first time.
struct LqProblem {
  Eigen::MatrixXd A, B;       ///< x+ = A x + B u
  Eigen::VectorXd x0, u_prev;
  Eigen::MatrixXd Qx, Ru, Sw;  ///< tracking and increment weights (inverse scales)
  std::vector<Eigen::VectorXd> r, s;  ///< references for t = 1..H
};
Eigen::VectorXd lq_first_input(const LqProblem& problem);

/// Recomputes distances, boundary margins and violation flags of every
/// trace row from the logged state and input. Returns the number of rows
/// whose logged values differ from the recomputed ones.
struct TraceAudit {
  long rows = 0;
  long flag_mismatches = 0;
  long distance_mismatches = 0;
  long margin_mismatches = 0;
};
TraceAudit audit_trace(const ScenarioConfig& config, const TraceTable& table);

}  // namespace bimp::oracle
