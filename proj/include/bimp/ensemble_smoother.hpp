// Single-pass ensemble smoother with Student's-t joints.
//
// The ensemble stores, for each of N samples, the whole smoothing block
// (x_k, x_{k+1}, ..., x_t) stacked into one column. Each horizon step
// appends a predicted block, forms sample statistics of the joint
// (block, measurement) and applies the Student's-t conditional update to
// every sample. With a very large dof this is the stochastic ensemble
// Kalman smoother.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bimp/errors.hpp"
#include "bimp/parallel.hpp"
#include "bimp/random.hpp"
#include "bimp/student_t.hpp"

namespace bimp {

enum class DofGrowth { kAccumulate, kResetPerStep };
enum class InnovationMode { kPerturbedObservation, kLiteral };

/// Zero-mean noise law St(0, factor * factor^T, dof). The factor may be
/// all zeros to express a noise-free channel.
template <typename Scalar>
struct NoiseBlock {
  MatrixX<Scalar> factor;
  Scalar dof = Scalar(1e10);

  static NoiseBlock from(const StudentT<Scalar>& dist) { return {dist.factor(), dist.dof()}; }
  static NoiseBlock zero(Eigen::Index dim, Scalar dof = Scalar(1e10)) {
    return {MatrixX<Scalar>::Zero(dim, dim), dof};
  }
  /// Diagonal scale with the given per-component scale variances.
  static NoiseBlock diagonal(const VectorX<Scalar>& scale_variances, Scalar dof) {
    return {MatrixX<Scalar>(scale_variances.cwiseSqrt().asDiagonal()), dof};
  }

  [[nodiscard]] Eigen::Index dim() const { return factor.rows(); }

  template <typename Engine>
  [[nodiscard]] VectorX<Scalar> draw(Engine& engine) const {
    return sample_mvt(VectorX<Scalar>::Zero(dim()).eval(), factor, dof, 1, engine).col(0);
  }
};

/// N samples of the stacked block (x_k, ..., x_t), one column per sample.
template <typename Scalar>
class TrajectoryEnsemble {
 public:
  using Matrix = MatrixX<Scalar>;

  TrajectoryEnsemble(Matrix initial_blocks, long start_index, Scalar dof)
      : samples_(std::move(initial_blocks)),
        block_dim_(samples_.rows()),
        start_index_(start_index),
        horizon_index_(start_index),
        dof_(dof) {
    if (samples_.cols() < 2) throw DomainError("TrajectoryEnsemble: at least two samples are required");
    if (block_dim_ < 1) throw DomainError("TrajectoryEnsemble: empty state block");
    require_dof(dof_, "TrajectoryEnsemble");
  }

  [[nodiscard]] Eigen::Index size() const { return samples_.cols(); }
  [[nodiscard]] Eigen::Index block_dim() const { return block_dim_; }
  [[nodiscard]] Eigen::Index block_count() const { return samples_.rows() / block_dim_; }
  [[nodiscard]] long start_index() const { return start_index_; }
  [[nodiscard]] long horizon_index() const { return horizon_index_; }
  [[nodiscard]] Scalar dof() const { return dof_; }

  [[nodiscard]] const Matrix& samples() const { return samples_; }
  [[nodiscard]] auto block(Eigen::Index b) const { return samples_.middleRows(b * block_dim_, block_dim_); }
  [[nodiscard]] auto newest() const { return samples_.bottomRows(block_dim_); }

  void append_block(const Matrix& block) {
    if (block.rows() != block_dim_ || block.cols() != size()) {
      throw DomainError("TrajectoryEnsemble: appended block has the wrong shape");
    }
    samples_.conservativeResize(samples_.rows() + block_dim_, Eigen::NoChange);
    samples_.bottomRows(block_dim_) = block;
    ++horizon_index_;
  }

  /// Adds `delta` to every sample (same shape as samples()).
  void shift(const Matrix& delta) { samples_ += delta; }
  void set_dof(Scalar dof) {
    require_dof(dof, "TrajectoryEnsemble::set_dof");
    dof_ = dof;
  }

 private:
  Matrix samples_;
  Eigen::Index block_dim_;
  long start_index_;
  long horizon_index_;
  Scalar dof_;
};

/// Transition and observation maps of the (augmented) state space model.
/// Both receive the time index of the state they produce or observe.
template <typename Scalar>
struct StateSpaceModel {
  using Vector = VectorX<Scalar>;
  std::function<Vector(long, const Vector&)> transition;
  std::function<Vector(long, const Vector&)> observe;
  /// Maps a process-noise draw w into the state: state noise = embedding * w.
  MatrixX<Scalar> noise_embedding;
  Eigen::Index measurement_dim = 0;
};

template <typename Scalar>
struct SmootherConfig {
  Eigen::Index ensemble_size = 50;
  Scalar dof_init = Scalar(5);
  DofGrowth dof_growth = DofGrowth::kResetPerStep;
  InnovationMode innovation_mode = InnovationMode::kPerturbedObservation;
  Regularization<Scalar> regularization{};
  NoiseBlock<Scalar> process_noise;
  /// Measurement noise, one independent block per channel group; the
  /// block dimensions add up to the measurement dimension.
  std::vector<NoiseBlock<Scalar>> measurement_noise;
  /// Compute the (otherwise skipped) posterior scale of every update.
  bool posterior_scale = false;
  /// Magnitude ceiling applied to non-finite or huge observation outputs.
  Scalar measurement_clamp = Scalar(1e8);
  int threads = 1;
};

namespace detail {

/// Column order sorting samples lexicographically by their stacked
/// columns of `a` then `b`. Sums taken in this order do not depend on
/// how the ensemble happens to be permuted.
template <typename Scalar>
std::vector<Eigen::Index> canonical_order(const MatrixX<Scalar>& a, const MatrixX<Scalar>* b = nullptr) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(a.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto less = [&](Eigen::Index i, Eigen::Index j) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if (a(r, i) != a(r, j)) return a(r, i) < a(r, j);
    }
    if (b != nullptr) {
      for (Eigen::Index r = 0; r < b->rows(); ++r) {
        if ((*b)(r, i) != (*b)(r, j)) return (*b)(r, i) < (*b)(r, j);
      }
    }
    return false;
  };
  std::stable_sort(order.begin(), order.end(), less);
  return order;
}

template <typename Scalar>
MatrixX<Scalar> permute_columns(const MatrixX<Scalar>& m, const std::vector<Eigen::Index>& order) {
  MatrixX<Scalar> out(m.rows(), m.cols());
  for (std::size_t j = 0; j < order.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(order[j]);
  return out;
}

template <typename Scalar>
VectorX<Scalar> ordered_mean(const MatrixX<Scalar>& ordered) {
  VectorX<Scalar> sum = VectorX<Scalar>::Zero(ordered.rows());
  for (Eigen::Index j = 0; j < ordered.cols(); ++j) sum += ordered.col(j);
  return sum / static_cast<Scalar>(ordered.cols());
}

template <typename Scalar>
Scalar scale_factor(Scalar dof, Eigen::Index n) {
  return (dof - Scalar(2)) / dof / static_cast<Scalar>(n);
}

inline std::string at_step(const std::string& what, long step) {
  std::ostringstream os;
  os << "horizon step " << step << ": " << what;
  return os.str();
}

}  // namespace detail

/// Initial ensemble at planning step k: center + embedding * w_j.
template <typename Scalar>
[[nodiscard]] TrajectoryEnsemble<Scalar> initialize_ensemble(const VectorX<Scalar>& center,
                                                             const MatrixX<Scalar>& embedding,
                                                             const NoiseBlock<Scalar>& noise, Eigen::Index count,
                                                             long start_index, Scalar dof, StreamKey key) {
  MatrixX<Scalar> blocks(center.size(), count);
  const StreamKey init_key = key.child(tag(StreamPurpose::kInitialization));
  for (Eigen::Index j = 0; j < count; ++j) {
    auto engine = init_key.child(static_cast<std::uint64_t>(j)).engine();
    blocks.col(j) = center + embedding * noise.draw(engine);
  }
  return TrajectoryEnsemble<Scalar>(std::move(blocks), start_index, dof);
}

/// Propagates the newest block of every sample: f(x_j) + embedding * w_j,
/// then appends it. Sample j draws w_j from key/process-noise/j.
template <typename Scalar>
[[nodiscard]] TrajectoryEnsemble<Scalar> predict(TrajectoryEnsemble<Scalar> ens,
                                                 const StateSpaceModel<Scalar>& model,
                                                 const NoiseBlock<Scalar>& noise, StreamKey key, int threads = 1) {
  const long t = ens.horizon_index() + 1;
  const Eigen::Index d = ens.block_dim();
  if (model.noise_embedding.rows() != d || model.noise_embedding.cols() != noise.dim()) {
    throw DomainError("predict: noise embedding does not match state and noise dimensions");
  }
  MatrixX<Scalar> next(d, ens.size());
  const MatrixX<Scalar> prev = ens.newest();
  const StreamKey noise_key = key.child(tag(StreamPurpose::kProcessNoise));
  parallel_for(static_cast<long>(ens.size()), threads, [&](long j) {
    auto engine = noise_key.child(static_cast<std::uint64_t>(j)).engine();
    VectorX<Scalar> x = model.transition(t, VectorX<Scalar>(prev.col(j)));
    if (x.size() != d) throw DomainError("predict: transition changed the state dimension");
    x += model.noise_embedding * noise.draw(engine);
    if (!x.allFinite()) {
      std::ostringstream os;
      os << "predict: non-finite state for sample " << j;
      throw PropagationError(os.str());
    }
    next.col(j) = x;
  });
  ens.append_block(next);
  return ens;
}

template <typename Scalar>
struct EnsembleStats {
  VectorX<Scalar> mean;
  MatrixX<Scalar> scale;
};

/// Sample mean and scale (1/N) * ((nu - 2) / nu) * sum of outer products.
template <typename Scalar>
[[nodiscard]] EnsembleStats<Scalar> ensemble_stats(const TrajectoryEnsemble<Scalar>& ens) {
  const auto order = detail::canonical_order<Scalar>(ens.samples());
  const MatrixX<Scalar> ordered = detail::permute_columns<Scalar>(ens.samples(), order);
  VectorX<Scalar> mean = detail::ordered_mean<Scalar>(ordered);
  const MatrixX<Scalar> dev = ordered.colwise() - mean;
  MatrixX<Scalar> scale = detail::scale_factor(ens.dof(), ens.size()) * (dev * dev.transpose());
  return {std::move(mean), std::move(scale)};
}

/// Predicted measurement ensemble and the joint sample statistics.
template <typename Scalar>
struct MeasurementEnsemble {
  MatrixX<Scalar> noiseless;  ///< h(x_j), one column per sample
  MatrixX<Scalar> predicted;  ///< h(x_j) + v_j
  VectorX<Scalar> mean;       ///< sample mean of predicted
  MatrixX<Scalar> scale_yy;   ///< measurement scale
  MatrixX<Scalar> scale_xy;   ///< cross scale between the full block and the measurement
  long step = 0;
};

namespace detail {

template <typename Scalar, typename Engine>
VectorX<Scalar> draw_blocks(const std::vector<NoiseBlock<Scalar>>& blocks, Eigen::Index dim, Engine& engine) {
  VectorX<Scalar> v(dim);
  Eigen::Index offset = 0;
  for (const auto& b : blocks) {
    v.segment(offset, b.dim()) = b.draw(engine);
    offset += b.dim();
  }
  if (offset != dim) throw DomainError("measurement noise blocks do not cover the measurement dimension");
  return v;
}

template <typename Scalar>
void clamp_measurement(VectorX<Scalar>& y, Scalar ceiling) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (std::isnan(y[i])) {
      y[i] = ceiling;
    } else {
      y[i] = std::clamp(y[i], -ceiling, ceiling);
    }
  }
}

}  // namespace detail

/// Observes the newest block of each sample, adds measurement noise drawn
/// from key/measurement-noise/j and forms the sample statistics.
template <typename Scalar>
[[nodiscard]] MeasurementEnsemble<Scalar> measurement_ensemble(const TrajectoryEnsemble<Scalar>& ens,
                                                               const StateSpaceModel<Scalar>& model,
                                                               const SmootherConfig<Scalar>& config,
                                                               StreamKey key) {
  const Eigen::Index n = model.measurement_dim;
  const Eigen::Index count = ens.size();
  MeasurementEnsemble<Scalar> out;
  out.step = ens.horizon_index();
  out.noiseless.resize(n, count);
  out.predicted.resize(n, count);
  const MatrixX<Scalar> newest = ens.newest();
  const StreamKey noise_key = key.child(tag(StreamPurpose::kMeasurementNoise));
  parallel_for(static_cast<long>(count), config.threads, [&](long j) {
    VectorX<Scalar> h = model.observe(out.step, VectorX<Scalar>(newest.col(j)));
    if (h.size() != n) throw DomainError("measurement_ensemble: observation has the wrong dimension");
    detail::clamp_measurement(h, config.measurement_clamp);
    auto engine = noise_key.child(static_cast<std::uint64_t>(j)).engine();
    out.noiseless.col(j) = h;
    out.predicted.col(j) = h + detail::draw_blocks(config.measurement_noise, n, engine);
  });

  const auto order = detail::canonical_order<Scalar>(ens.samples(), &out.predicted);
  const MatrixX<Scalar> xs = detail::permute_columns<Scalar>(ens.samples(), order);
  const MatrixX<Scalar> ys = detail::permute_columns<Scalar>(out.predicted, order);
  const VectorX<Scalar> x_mean = detail::ordered_mean<Scalar>(xs);
  out.mean = detail::ordered_mean<Scalar>(ys);
  const MatrixX<Scalar> x_dev = xs.colwise() - x_mean;
  const MatrixX<Scalar> y_dev = ys.colwise() - out.mean;
  const Scalar c = detail::scale_factor(ens.dof(), count);
  out.scale_yy = c * (y_dev * y_dev.transpose());
  out.scale_xy = c * (x_dev * y_dev.transpose());
  return out;
}

template <typename Scalar>
struct UpdateDiagnostics {
  long step = 0;
  Scalar delta = 0;            ///< average per-sample Mahalanobis term
  Scalar dof = 0;              ///< dof after the update
  Scalar innovation_norm = 0;  ///< |y - y_hat|
  Scalar gain_norm = 0;        ///< Frobenius norm of the gain
};

template <typename Scalar>
struct UpdateResult {
  TrajectoryEnsemble<Scalar> ensemble;
  MatrixX<Scalar> gain;
  UpdateDiagnostics<Scalar> diagnostics;
  std::optional<MatrixX<Scalar>> posterior_scale;
};

/// Mean of per-sample Mahalanobis terms; the terms are summed in sorted
/// order so the result is independent of sample order.
template <typename Scalar>
[[nodiscard]] Scalar average_mahalanobis(const MatrixX<Scalar>& residuals, const RegularizedCholesky<Scalar>& chol) {
  std::vector<Scalar> terms(static_cast<std::size_t>(residuals.cols()));
  for (Eigen::Index j = 0; j < residuals.cols(); ++j) {
    terms[static_cast<std::size_t>(j)] = mahalanobis_sq(residuals.col(j), chol);
  }
  std::sort(terms.begin(), terms.end());
  Scalar sum = 0;
  for (Scalar v : terms) sum += v;
  return terms.empty() ? Scalar(0) : sum / static_cast<Scalar>(terms.size());
}

/// Gain K = scale_xy * scale_yy^{-1} (regularized solve).
template <typename Scalar>
[[nodiscard]] MatrixX<Scalar> ensemble_gain(const MeasurementEnsemble<Scalar>& meas,
                                            const RegularizedCholesky<Scalar>& chol) {
  return chol.solve(MatrixX<Scalar>(meas.scale_xy.transpose())).transpose();
}

/// Conditions every sample on the actual virtual measurement.
///
/// Innovations per sample j, with fresh noise v_j from key/perturbation/j:
///   perturbed-observation: (y + v_j) - h(x_j)
///   literal:               (y + v_j) - y_hat
template <typename Scalar>
[[nodiscard]] UpdateResult<Scalar> update(TrajectoryEnsemble<Scalar> ens, const VectorX<Scalar>& actual_y,
                                          const MeasurementEnsemble<Scalar>& meas,
                                          const SmootherConfig<Scalar>& config, StreamKey key) {
  const Eigen::Index n = meas.mean.size();
  if (actual_y.size() != n) throw DomainError("update: observation has the wrong dimension");
  if (meas.scale_xy.rows() != ens.samples().rows() || meas.step != ens.horizon_index()) {
    throw DomainError("update: measurement statistics were not computed from this ensemble");
  }
  const RegularizedCholesky<Scalar> chol(meas.scale_yy, config.regularization);
  MatrixX<Scalar> gain = ensemble_gain(meas, chol);

  MatrixX<Scalar> innovations(n, ens.size());
  const StreamKey perturb_key = key.child(tag(StreamPurpose::kObservationPerturbation));
  for (Eigen::Index j = 0; j < ens.size(); ++j) {
    auto engine = perturb_key.child(static_cast<std::uint64_t>(j)).engine();
    const VectorX<Scalar> perturbed = actual_y + detail::draw_blocks(config.measurement_noise, n, engine);
    if (config.innovation_mode == InnovationMode::kPerturbedObservation) {
      innovations.col(j) = perturbed - meas.noiseless.col(j);
    } else {
      innovations.col(j) = perturbed - meas.mean;
    }
  }

  const Scalar nu = ens.dof();
  UpdateDiagnostics<Scalar> diag;
  diag.step = ens.horizon_index();
  diag.delta = average_mahalanobis(innovations, chol);
  diag.dof = nu + static_cast<Scalar>(n);
  diag.innovation_norm = (actual_y - meas.mean).norm();
  diag.gain_norm = gain.norm();

  std::optional<MatrixX<Scalar>> posterior;
  if (config.posterior_scale) {
    const MatrixX<Scalar> prior = ensemble_stats(ens).scale;
    MatrixX<Scalar> reduced = prior - gain * meas.scale_yy * gain.transpose();
    reduced = Scalar(0.5) * (reduced + reduced.transpose());
    posterior = ((nu + diag.delta) / (nu + static_cast<Scalar>(n))) * reduced;
  }

  ens.shift(gain * innovations);
  ens.set_dof(diag.dof);
  return {std::move(ens), std::move(gain), diag, std::move(posterior)};
}

template <typename Scalar>
struct SmootherResult {
  /// Smoothed mean, one column per time index k..k+H.
  MatrixX<Scalar> mean_trajectory;
  TrajectoryEnsemble<Scalar> ensemble;
  std::vector<UpdateDiagnostics<Scalar>> diagnostics;
  std::vector<MatrixX<Scalar>> posterior_scales;
};

/// Mean of the final ensemble reshaped to (block_dim x block_count).
template <typename Scalar>
[[nodiscard]] MatrixX<Scalar> mean_trajectory(const TrajectoryEnsemble<Scalar>& ens) {
  const auto order = detail::canonical_order<Scalar>(ens.samples());
  const VectorX<Scalar> mean = detail::ordered_mean<Scalar>(detail::permute_columns<Scalar>(ens.samples(), order));
  return Eigen::Map<const MatrixX<Scalar>>(mean.data(), ens.block_dim(), ens.block_count());
}

/// Forward pass over observations y_{k+1..k+H}. Step t draws all of its
/// noise below key.child(t).
template <typename Scalar>
[[nodiscard]] SmootherResult<Scalar> smooth_horizon(TrajectoryEnsemble<Scalar> ens,
                                                    const StateSpaceModel<Scalar>& model,
                                                    const std::vector<VectorX<Scalar>>& observations,
                                                    const SmootherConfig<Scalar>& config, StreamKey key) {
  if (ens.horizon_index() != ens.start_index()) {
    throw DomainError("smooth_horizon: the initial ensemble must hold a single block");
  }
  std::vector<UpdateDiagnostics<Scalar>> diagnostics;
  std::vector<MatrixX<Scalar>> posterior_scales;
  diagnostics.reserve(observations.size());
  for (const auto& y : observations) {
    const long t = ens.horizon_index() + 1;
    const StreamKey step_key = key.child(static_cast<std::uint64_t>(t));
    try {
      ens = predict(std::move(ens), model, config.process_noise, step_key, config.threads);
      const auto meas = measurement_ensemble(ens, model, config, step_key);
      auto result = update(std::move(ens), y, meas, config, step_key);
      ens = std::move(result.ensemble);
      diagnostics.push_back(result.diagnostics);
      if (result.posterior_scale) posterior_scales.push_back(std::move(*result.posterior_scale));
    } catch (const NumericalError& e) {
      throw NumericalError(detail::at_step(e.what(), t));
    } catch (const PropagationError& e) {
      throw PropagationError(detail::at_step(e.what(), t));
    }
  }
  MatrixX<Scalar> mean = mean_trajectory(ens);
  return {std::move(mean), std::move(ens), std::move(diagnostics), std::move(posterior_scales)};
}

}  // namespace bimp
