// Log-posterior of a candidate plan under the Student's-t virtual system
// and the quadratic tracking cost it reduces to when every dof is large.
#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace bimp {

/// States, inputs and input increments over t = k..k+H, one column per time.
struct CandidateTrajectory {
  Eigen::MatrixXd x;
  Eigen::MatrixXd u;
  Eigen::MatrixXd du;

  [[nodiscard]] Eigen::Index length() const { return x.cols(); }
};

/// Builds a candidate by rolling x forward from x0 under the given inputs;
/// du_t = u_t - u_{t-1} with u_{-1} = u_prev.
CandidateTrajectory rollout_candidate(
    const Eigen::VectorXd& x0, const Eigen::VectorXd& u_prev, const Eigen::MatrixXd& u,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>& f);

struct References {
  Eigen::MatrixXd r;  ///< state references, one column per time
  Eigen::MatrixXd s;  ///< input references
};

/// Noise scales Sigma_{v_x}, Sigma_{v_u}, Sigma_w and their dofs.
struct TrackingNoise {
  Eigen::MatrixXd sigma_x;
  Eigen::MatrixXd sigma_u;
  Eigen::MatrixXd sigma_w;
  double nu_x = 5.0;
  double nu_u = 5.0;
  double nu_du = 5.0;
};

/// Sum over t of  -((nu + n) / 2) * log(1 + q / nu)  for the x, u and du
/// terms, q the Mahalanobis form of the residual. Normalizing constants
/// are dropped, so a plan that tracks exactly with du = 0 scores 0.
double log_posterior(const CandidateTrajectory& traj, const References& refs, const TrackingNoise& noise);

/// Sum over t of the three quadratic forms (the cost J).
double nmpc_cost(const CandidateTrajectory& traj, const References& refs, const TrackingNoise& noise);

/// Feasibility requirements for candidates entering the equivalence check.
struct CandidateRequirements {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> dynamics;
  /// phi(x, u, du, t); every entry must be <= 0. Optional.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&, long)>
      constraints;
  double tolerance = 1e-10;
};

/// Throws DomainError when the candidate violates the dynamics, the
/// increment chain or a constraint.
void require_feasible(const CandidateTrajectory& traj, const CandidateRequirements& req);

struct DiscordantPair {
  std::size_t first = 0;
  std::size_t second = 0;
};

struct EquivalenceReport {
  std::vector<std::size_t> posterior_order;  ///< best first
  std::vector<std::size_t> cost_order;       ///< best first
  std::vector<DiscordantPair> discordant;
  std::vector<double> log_posteriors;
  std::vector<double> costs;

  [[nodiscard]] bool identical() const { return posterior_order == cost_order; }
};

/// Ranks candidates by log_posterior (descending) and by cost (ascending),
/// ties broken by index, and lists every pair the two rankings order
/// differently.
EquivalenceReport argmax_equivalence_check(const std::vector<CandidateTrajectory>& candidates,
                                           const References& refs, const TrackingNoise& noise,
                                           const CandidateRequirements& req);

}  // namespace bimp
