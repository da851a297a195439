// Multivariate Student's-t primitives.
//
// A StudentT<Scalar> is parameterized by location, scale matrix S and
// degrees of freedom nu (> 2). Its covariance is nu / (nu - 2) * S.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "bimp/errors.hpp"

namespace bimp {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Diagonal jitter schedule for solves against sample covariances:
/// lambda * mean(diag) is added, lambda starts at `initial` and doubles
/// on factorization failure until it exceeds `maximum`.
template <typename Scalar>
struct Regularization {
  Scalar initial = Scalar(1e-8);
  Scalar maximum = Scalar(1e-2);
};

/// Cholesky factorization of S + jitter * I.
template <typename Scalar>
class RegularizedCholesky {
 public:
  RegularizedCholesky() = default;

  template <typename Derived>
  explicit RegularizedCholesky(const Eigen::MatrixBase<Derived>& s,
                               Regularization<Scalar> reg = {}) {
    compute(s, reg);
  }

  template <typename Derived>
  RegularizedCholesky& compute(const Eigen::MatrixBase<Derived>& s,
                               Regularization<Scalar> reg = {}) {
    if (s.rows() != s.cols()) throw DomainError("RegularizedCholesky: matrix is not square");
    const Eigen::Index n = s.rows();
    if (n == 0) {
      jitter_ = 0;
      llt_.compute(MatrixX<Scalar>(0, 0));
      return *this;
    }
    Scalar level = s.diagonal().mean();
    // An all-zero (or negative-trace) matrix still gets an absolute jitter.
    if (!(level > Scalar(0)) || !std::isfinite(static_cast<double>(level))) level = Scalar(1);
    MatrixX<Scalar> work = s;
    for (Scalar lambda = reg.initial; lambda <= reg.maximum; lambda *= Scalar(2)) {
      jitter_ = lambda * level;
      work.diagonal() = s.diagonal().array() + jitter_;
      llt_.compute(work);
      if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().minCoeff() > Scalar(0)) {
        return *this;
      }
    }
    throw NumericalError("RegularizedCholesky: matrix not positive definite after maximal jitter");
  }

  template <typename Rhs>
  [[nodiscard]] auto solve(const Eigen::MatrixBase<Rhs>& b) const {
    return llt_.solve(b);
  }

  [[nodiscard]] const Eigen::LLT<MatrixX<Scalar>>& llt() const { return llt_; }
  [[nodiscard]] Scalar jitter() const { return jitter_; }

 private:
  Eigen::LLT<MatrixX<Scalar>> llt_;
  Scalar jitter_ = 0;
};

template <typename Scalar>
void require_dof(Scalar dof, const char* where) {
  if (!(dof > Scalar(2)) || !std::isfinite(static_cast<double>(dof))) {
    std::ostringstream os;
    os << where << ": degrees of freedom must be finite and > 2, got " << dof;
    throw DomainError(os.str());
  }
}

/// Multivariate Student's-t distribution St(location, scale, dof).
template <typename Scalar>
class StudentT {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  StudentT(Vector location, Matrix scale, Scalar dof)
      : location_(std::move(location)), scale_(std::move(scale)), dof_(dof) {
    require_dof(dof_, "StudentT");
    if (scale_.rows() != scale_.cols() || scale_.rows() != location_.size()) {
      throw DomainError("StudentT: scale must be square and match the location dimension");
    }
    const Scalar magnitude = scale_.cwiseAbs().maxCoeff();
    if ((scale_ - scale_.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * magnitude) {
      throw DomainError("StudentT: scale matrix is not symmetric");
    }
    Eigen::LLT<Matrix> llt(scale_);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > Scalar(0))) {
      throw DomainError("StudentT: scale matrix is not positive definite");
    }
    factor_ = llt.matrixL();
  }

  [[nodiscard]] Eigen::Index dim() const { return location_.size(); }
  [[nodiscard]] const Vector& location() const { return location_; }
  [[nodiscard]] const Matrix& scale() const { return scale_; }
  [[nodiscard]] Scalar dof() const { return dof_; }
  /// Lower Cholesky factor L with L * L^T = scale.
  [[nodiscard]] const Matrix& factor() const { return factor_; }
  [[nodiscard]] Matrix covariance() const { return (dof_ / (dof_ - Scalar(2))) * scale_; }

 private:
  Vector location_;
  Matrix scale_;
  Matrix factor_;
  Scalar dof_;
};

/// ((dof - 2) / dof) * cov
template <typename Derived>
[[nodiscard]] auto scale_from_covariance(const Eigen::MatrixBase<Derived>& cov,
                                         typename Derived::Scalar dof) {
  using Scalar = typename Derived::Scalar;
  require_dof(dof, "scale_from_covariance");
  return MatrixX<Scalar>(((dof - Scalar(2)) / dof) * cov);
}

/// (dof / (dof - 2)) * scale
template <typename Derived>
[[nodiscard]] auto covariance_from_scale(const Eigen::MatrixBase<Derived>& scale,
                                         typename Derived::Scalar dof) {
  using Scalar = typename Derived::Scalar;
  require_dof(dof, "covariance_from_scale");
  return MatrixX<Scalar>((dof / (dof - Scalar(2))) * scale);
}

/// Draws one chi-square mixing factor sqrt(dof / g), g ~ chi2(dof).
template <typename Scalar, typename Engine>
Scalar draw_mixing_factor(Scalar dof, Engine& engine) {
  std::gamma_distribution<double> gamma(0.5 * static_cast<double>(dof), 2.0);
  const double g = gamma(engine);
  return static_cast<Scalar>(std::sqrt(static_cast<double>(dof) / g));
}

/// Samples location + factor * z * sqrt(dof / g) with z standard normal
/// and g ~ chi2(dof), one column per sample. Each sample consumes
/// factor.cols() normals followed by one chi-square draw.
///
/// This overload accepts any factor, including an all-zero one, so
/// degenerate (zero-spread) noise laws can be represented.
template <typename Scalar, typename Engine>
[[nodiscard]] MatrixX<Scalar> sample_mvt(const VectorX<Scalar>& location, const MatrixX<Scalar>& factor,
                                         Scalar dof, Eigen::Index count, Engine& engine) {
  require_dof(dof, "sample_mvt");
  if (factor.rows() != location.size()) throw DomainError("sample_mvt: factor rows must match location");
  MatrixX<Scalar> out(location.size(), std::max<Eigen::Index>(count, 0));
  std::normal_distribution<double> normal;
  VectorX<Scalar> z(factor.cols());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = static_cast<Scalar>(normal(engine));
    const Scalar w = draw_mixing_factor(dof, engine);
    out.col(j) = location + w * (factor * z);
  }
  return out;
}

template <typename Scalar, typename Engine>
[[nodiscard]] MatrixX<Scalar> sample_mvt(const StudentT<Scalar>& dist, Eigen::Index count, Engine& engine) {
  return sample_mvt(dist.location(), dist.factor(), dist.dof(), count, engine);
}

/// residual^T * matrix^{-1} * residual through a regularized Cholesky solve.
template <typename Scalar, typename Derived>
[[nodiscard]] Scalar mahalanobis_sq(const Eigen::MatrixBase<Derived>& residual,
                                    const RegularizedCholesky<Scalar>& factorization) {
  const VectorX<Scalar> r = residual;
  if (r.size() != factorization.llt().rows()) throw DomainError("mahalanobis_sq: dimension mismatch");
  if (r.size() == 0) return Scalar(0);
  const VectorX<Scalar> y = factorization.llt().matrixL().solve(r);
  return y.squaredNorm();
}

template <typename DerivedR, typename DerivedM>
[[nodiscard]] typename DerivedR::Scalar mahalanobis_sq(
    const Eigen::MatrixBase<DerivedR>& residual, const Eigen::MatrixBase<DerivedM>& matrix,
    Regularization<typename DerivedR::Scalar> reg = {}) {
  using Scalar = typename DerivedR::Scalar;
  if (matrix.rows() != residual.size()) throw DomainError("mahalanobis_sq: dimension mismatch");
  return mahalanobis_sq(residual, RegularizedCholesky<Scalar>(matrix, reg));
}

/// Joint distribution over a stacked vector (a, b).
template <typename Scalar>
class JointPartition {
 public:
  JointPartition(StudentT<Scalar> joint, Eigen::Index dim_a, Eigen::Index dim_b)
      : joint_(std::move(joint)), dim_a_(dim_a), dim_b_(dim_b) {
    if (dim_a < 0 || dim_b < 0 || dim_a + dim_b != joint_.dim()) {
      throw DomainError("JointPartition: dim_a + dim_b must equal the joint dimension");
    }
  }

  [[nodiscard]] const StudentT<Scalar>& joint() const { return joint_; }
  [[nodiscard]] Eigen::Index dim_a() const { return dim_a_; }
  [[nodiscard]] Eigen::Index dim_b() const { return dim_b_; }

  [[nodiscard]] auto mean_a() const { return joint_.location().head(dim_a_); }
  [[nodiscard]] auto mean_b() const { return joint_.location().tail(dim_b_); }
  [[nodiscard]] auto scale_aa() const { return joint_.scale().topLeftCorner(dim_a_, dim_a_); }
  [[nodiscard]] auto scale_ab() const { return joint_.scale().topRightCorner(dim_a_, dim_b_); }
  [[nodiscard]] auto scale_bb() const { return joint_.scale().bottomRightCorner(dim_b_, dim_b_); }

 private:
  StudentT<Scalar> joint_;
  Eigen::Index dim_a_;
  Eigen::Index dim_b_;
};

template <typename Scalar>
struct ConditionalUpdate {
  StudentT<Scalar> posterior;
  MatrixX<Scalar> gain;
  Scalar delta;
};

/// Posterior of a given b = observed_b under a joint Student's-t:
///   K = S_ab S_bb^{-1},  mean = m_a + K (b - m_b),
///   delta = (b - m_b)^T S_bb^{-1} (b - m_b),
///   scale = (nu + delta) / (nu + n_b) * (S_aa - K S_bb K^T),  dof = nu + n_b.
template <typename Scalar, typename Derived>
[[nodiscard]] ConditionalUpdate<Scalar> conditional_update(const JointPartition<Scalar>& joint,
                                                           const Eigen::MatrixBase<Derived>& observed_b,
                                                           Regularization<Scalar> reg = {}) {
  if (observed_b.size() != joint.dim_b()) throw DomainError("conditional_update: observation dimension mismatch");
  const Scalar nu = joint.joint().dof();
  const auto n = static_cast<Scalar>(joint.dim_b());
  const MatrixX<Scalar> s_bb = joint.scale_bb();
  const RegularizedCholesky<Scalar> chol(s_bb, reg);
  const VectorX<Scalar> innovation = observed_b - joint.mean_b();
  // K = S_ab S_bb^{-1}  <=>  S_bb K^T = S_ba
  const MatrixX<Scalar> gain = chol.solve(MatrixX<Scalar>(joint.scale_ab().transpose())).transpose();
  const Scalar delta = mahalanobis_sq(innovation, chol);
  VectorX<Scalar> mean = joint.mean_a() + gain * innovation;
  MatrixX<Scalar> schur = joint.scale_aa() - gain * s_bb * gain.transpose();
  schur = Scalar(0.5) * (schur + schur.transpose());
  MatrixX<Scalar> scale = ((nu + delta) / (nu + n)) * schur;
  return {StudentT<Scalar>(std::move(mean), std::move(scale), nu + n), gain, delta};
}

namespace detail {

/// log Gamma(a + h) - log Gamma(a), stable for large a.
template <typename Scalar>
Scalar lgamma_ratio(Scalar a, Scalar h) {
  if (a < Scalar(1e5)) return std::lgamma(a + h) - std::lgamma(a);
  // Stirling series difference.
  const Scalar b = a + h;
  const Scalar head = (a - Scalar(0.5)) * std::log1p(h / a) + h * std::log(b) - h;
  const Scalar tail = (Scalar(1) / b - Scalar(1) / a) / Scalar(12) -
                      (Scalar(1) / (b * b * b) - Scalar(1) / (a * a * a)) / Scalar(360);
  return head + tail;
}

}  // namespace detail

/// Exact log-density of the multivariate Student's-t.
template <typename Scalar, typename Derived>
[[nodiscard]] Scalar log_pdf(const StudentT<Scalar>& dist, const Eigen::MatrixBase<Derived>& point) {
  if (point.size() != dist.dim()) throw DomainError("log_pdf: dimension mismatch");
  const Scalar nu = dist.dof();
  const auto m = static_cast<Scalar>(dist.dim());
  const VectorX<Scalar> e = point - dist.location();
  const VectorX<Scalar> y = dist.factor().template triangularView<Eigen::Lower>().solve(e);
  const Scalar q = y.squaredNorm();
  const Scalar log_det = Scalar(2) * dist.factor().diagonal().array().log().sum();
  const Scalar pi = std::numbers::pi_v<Scalar>;
  return detail::lgamma_ratio(nu / Scalar(2), m / Scalar(2)) - (m / Scalar(2)) * std::log(nu * pi) -
         Scalar(0.5) * log_det - ((nu + m) / Scalar(2)) * std::log1p(q / nu);
}

}  // namespace bimp
