#include "bimp/nmpc_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bimp/errors.hpp"

namespace bimp {

namespace {

void require_shapes(const CandidateTrajectory& traj, const References& refs, const TrackingNoise& noise) {
  const Eigen::Index len = traj.length();
  if (traj.u.cols() != len || traj.du.cols() != len || refs.r.cols() != len || refs.s.cols() != len) {
    throw DomainError("candidate and references must cover the same time steps");
  }
  if (refs.r.rows() != traj.x.rows() || refs.s.rows() != traj.u.rows() || traj.du.rows() != traj.u.rows()) {
    throw DomainError("candidate and reference dimensions disagree");
  }
  if (noise.sigma_x.rows() != traj.x.rows() || noise.sigma_u.rows() != traj.u.rows() ||
      noise.sigma_w.rows() != traj.du.rows()) {
    throw DomainError("noise scale dimensions disagree with the candidate");
  }
}

// Column-wise quadratic forms e_t^T S^{-1} e_t.
Eigen::VectorXd quadratic_forms(const Eigen::MatrixXd& residuals, const Eigen::MatrixXd& scale) {
  const Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw DomainError("noise scale is not positive definite");
  const Eigen::MatrixXd y = llt.matrixL().solve(residuals);
  return y.colwise().squaredNorm().transpose();
}

double student_terms(const Eigen::VectorXd& q, double nu, Eigen::Index n) {
  double sum = 0.0;
  const double exponent = -0.5 * (nu + static_cast<double>(n));
  for (Eigen::Index t = 0; t < q.size(); ++t) sum += exponent * std::log1p(q[t] / nu);
  return sum;
}

}  // namespace

CandidateTrajectory rollout_candidate(
    const Eigen::VectorXd& x0, const Eigen::VectorXd& u_prev, const Eigen::MatrixXd& u,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>& f) {
  CandidateTrajectory c;
  const Eigen::Index len = u.cols();
  c.x.resize(x0.size(), len);
  c.u = u;
  c.du.resize(u.rows(), len);
  Eigen::VectorXd x = x0;
  Eigen::VectorXd last = u_prev;
  for (Eigen::Index t = 0; t < len; ++t) {
    c.x.col(t) = x;
    c.du.col(t) = u.col(t) - last;
    last = u.col(t);
    if (t + 1 < len) x = f(x, u.col(t));
  }
  return c;
}

double log_posterior(const CandidateTrajectory& traj, const References& refs, const TrackingNoise& noise) {
  require_shapes(traj, refs, noise);
  const double lx = student_terms(quadratic_forms(traj.x - refs.r, noise.sigma_x), noise.nu_x, traj.x.rows());
  const double lu = student_terms(quadratic_forms(traj.u - refs.s, noise.sigma_u), noise.nu_u, traj.u.rows());
  const double ld = student_terms(quadratic_forms(traj.du, noise.sigma_w), noise.nu_du, traj.du.rows());
  return lx + lu + ld;
}

double nmpc_cost(const CandidateTrajectory& traj, const References& refs, const TrackingNoise& noise) {
  require_shapes(traj, refs, noise);
  return quadratic_forms(traj.x - refs.r, noise.sigma_x).sum() + quadratic_forms(traj.u - refs.s, noise.sigma_u).sum() +
         quadratic_forms(traj.du, noise.sigma_w).sum();
}

void require_feasible(const CandidateTrajectory& traj, const CandidateRequirements& req) {
  const Eigen::Index len = traj.length();
  for (Eigen::Index t = 0; t + 1 < len; ++t) {
    if (req.dynamics) {
      const Eigen::VectorXd next = req.dynamics(traj.x.col(t), traj.u.col(t));
      if ((next - traj.x.col(t + 1)).cwiseAbs().maxCoeff() > req.tolerance) {
        std::ostringstream os;
        os << "candidate violates the dynamics at step " << t;
        throw DomainError(os.str());
      }
    }
    const Eigen::VectorXd chain = traj.u.col(t + 1) - traj.u.col(t) - traj.du.col(t + 1);
    if (chain.cwiseAbs().maxCoeff() > req.tolerance) {
      std::ostringstream os;
      os << "candidate increment chain broken at step " << t + 1;
      throw DomainError(os.str());
    }
  }
  if (req.constraints) {
    for (Eigen::Index t = 0; t < len; ++t) {
      const Eigen::VectorXd phi = req.constraints(traj.x.col(t), traj.u.col(t), traj.du.col(t), static_cast<long>(t));
      if (phi.size() > 0 && phi.maxCoeff() > 0.0) {
        std::ostringstream os;
        os << "candidate violates a constraint at step " << t;
        throw DomainError(os.str());
      }
    }
  }
}

EquivalenceReport argmax_equivalence_check(const std::vector<CandidateTrajectory>& candidates,
                                           const References& refs, const TrackingNoise& noise,
                                           const CandidateRequirements& req) {
  if (candidates.size() < 2) throw DomainError("argmax_equivalence_check: at least two candidates are required");
  EquivalenceReport report;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    try {
      require_feasible(candidates[i], req);
    } catch (const DomainError& e) {
      std::ostringstream os;
      os << "candidate " << i << " rejected: " << e.what();
      throw DomainError(os.str());
    }
    report.log_posteriors.push_back(log_posterior(candidates[i], refs, noise));
    report.costs.push_back(nmpc_cost(candidates[i], refs, noise));
  }
  const std::size_t n = candidates.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  report.posterior_order = idx;
  std::stable_sort(report.posterior_order.begin(), report.posterior_order.end(),
                   [&](std::size_t a, std::size_t b) { return report.log_posteriors[a] > report.log_posteriors[b]; });
  report.cost_order = idx;
  std::stable_sort(report.cost_order.begin(), report.cost_order.end(),
                   [&](std::size_t a, std::size_t b) { return report.costs[a] < report.costs[b]; });

  std::vector<std::size_t> rank_p(n), rank_c(n);
  for (std::size_t r = 0; r < n; ++r) {
    rank_p[report.posterior_order[r]] = r;
    rank_c[report.cost_order[r]] = r;
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if ((rank_p[a] < rank_p[b]) != (rank_c[a] < rank_c[b])) report.discordant.push_back({a, b});
    }
  }
  return report;
}

}  // namespace bimp
