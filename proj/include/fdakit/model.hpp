#pragma once

// Functional regression with pointwise least squares, principal differential
// analysis and the auction-energy functional.

#include <fdakit/fdcore.hpp>

#include <string>
#include <utility>
#include <vector>

namespace fdakit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Regression coefficient as a function of time with a pointwise 95% band.
struct CoefficientCurve {
    std::string predictor;
    VectorXd grid;
    VectorXd beta;
    VectorXd se;
    VectorXd lower;
    VectorXd upper;
    int residual_df = 0;
};

/// Scalar design (n_curves x p), intercept column included by the caller.
struct Design {
    MatrixXd x;
    std::vector<std::string> names;
};

/// A functional covariate already evaluated on the analysis grid (n_curves x n_grid).
struct FunctionalCovariate {
    std::string name;
    MatrixXd values;
};

/// Two-sided 95% Student-t multiplier for the given degrees of freedom.
double t_quantile_975(int degrees_of_freedom);

/// n_curves x n_grid matrix of derivative values.
MatrixXd differentiate_sample(const FunctionalSample& sample, int deriv_order, const VectorXd& grid);

std::vector<CoefficientCurve> fit_fos(const MatrixXd& responses, const Design& design, const VectorXd& grid);
std::vector<CoefficientCurve> fit_fos(const FunctionalSample& responses, const Design& design, const VectorXd& grid,
                                      int deriv_order = 0);

/**
 * Concurrent model y_i(t) = sum_j beta_j(t) x_ij + sum_l gamma_l(t) z_il(t),
 * fit by ordinary least squares separately at each grid point.
 */
std::vector<CoefficientCurve> fit_concurrent(const MatrixXd& responses,
                                             const std::vector<FunctionalCovariate>& covariates,
                                             const Design& design, const VectorXd& grid);
std::vector<CoefficientCurve> fit_concurrent(const FunctionalSample& responses,
                                             const std::vector<std::pair<std::string, FunctionalSample>>& covariates,
                                             const Design& design, const VectorXd& grid);

enum class PdaWeightModel { constant, pointwise };

/**
 * Weights of L x = w_0 x + ... + w_{m-1} D^{m-1} x + D^m x fitted to a sample.
 * `weights` is m x n_grid (constant weights repeat along the row);
 * `forcing` is sum_i sum_t (L x_i)(t)^2 dt.
 */
struct PdaResult {
    int order = 0;
    PdaWeightModel model = PdaWeightModel::constant;
    VectorXd grid;
    MatrixXd weights;
    double forcing = 0.0;
};

/// `derivatives[j]` holds D^j of every curve on the grid, j = 0..m.
PdaResult pda_fit(const std::vector<MatrixXd>& derivatives, const VectorXd& grid, PdaWeightModel model);
PdaResult pda_fit(const FunctionalSample& sample, int order, const VectorXd& grid, PdaWeightModel model);

/// E(t) = f(t) * f'(t)^2 / 2.
VectorXd auction_energy(const VectorXd& price, const VectorXd& velocity);
VectorXd auction_energy(const FunctionalDatum& price, const VectorXd& grid);

}  // namespace fdakit
