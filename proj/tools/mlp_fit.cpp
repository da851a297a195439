// Fits the residual MLP to one-step bicycle transitions and writes the
// weight file plus its manifest.
#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <exception>

#include "bimp/vehicle.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fit the 2x128 tanh MLP to the kinematic bicycle model"};
  std::string out = "data/bicycle_mlp.mlpw";
  bimp::BicycleParams params;
  bimp::MlpFitOptions options;
  app.add_option("--out", out, "weight file to write");
  app.add_option("--wheelbase", params.wheelbase, "bicycle wheelbase [m]");
  app.add_option("--dt", params.dt, "step length [s]");
  app.add_option("--samples", options.training_samples, "training transitions");
  app.add_option("--seed", options.seed, "fit seed");
  CLI11_PARSE(app, argc, argv);

  try {
    const bimp::MlpModel model = bimp::fit_mlp_to_bicycle(params, options);
    const bimp::FitReport report = bimp::validate_fit(model, params, options.domain);
    bimp::save_weights(model, out);
    const auto& d = options.domain;
    bimp::write_manifest(
        out, {{"generator", "mlp_fit"},
              {"target", "kinematic bicycle, explicit Euler"},
              {"wheelbase", fmt::format("{}", params.wheelbase)},
              {"dt", fmt::format("{}", params.dt)},
              {"hidden", "128,128"},
              {"activation", "tanh"},
              {"convention", "residual"},
              {"training_samples", fmt::format("{}", options.training_samples)},
              {"seed", fmt::format("{}", options.seed)},
              {"domain", fmt::format("speed [{}, {}], heading [{:.6f}, {:.6f}], accel [{}, {}], steer [{}, {}]",
                                     d.speed_min, d.speed_max, d.heading_min, d.heading_max, d.accel_min,
                                     d.accel_max, d.steer_min, d.steer_max)},
              {"validation_grid_points", fmt::format("{}", report.grid_points)},
              {"max_position_error_m", fmt::format("{:.6g}", report.max_position_error)},
              {"max_heading_error_rad", fmt::format("{:.6g}", report.max_heading_error)},
              {"max_speed_error_mps", fmt::format("{:.6g}", report.max_speed_error)},
              {"lipschitz_bound", fmt::format("{:.6g}", model.lipschitz_bound())}});
    fmt::print("wrote {}: max position error {:.4g} m, heading {:.4g} rad, speed {:.4g} m/s over {} points\n", out,
               report.max_position_error, report.max_heading_error, report.max_speed_error, report.grid_points);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mlp_fit: %s\n", e.what());
    return 1;
  }
  return 0;
}
