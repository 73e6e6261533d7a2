#include <fdakit/explore.hpp>
#include <fdakit/model.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace fdakit {

namespace {

constexpr double kRankThreshold = 1e-10;

Eigen::ColPivHouseholderQR<MatrixXd> rank_revealing(const MatrixXd& x) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
    qr.setThreshold(kRankThreshold);
    return qr;
}

/// Names of columns that lie in the span of the columns before them.
std::vector<std::string> dependent_columns(const MatrixXd& x, const std::vector<std::string>& names) {
    std::vector<std::string> out;
    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        MatrixXd trial(x.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
        for (std::size_t i = 0; i < kept.size(); ++i) trial.col(static_cast<Eigen::Index>(i)) = x.col(kept[i]);
        trial.col(trial.cols() - 1) = x.col(j);
        if (rank_revealing(trial).rank() == trial.cols()) {
            kept.push_back(j);
        } else {
            out.push_back(j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)]
                                                                      : "column " + std::to_string(j));
        }
    }
    return out;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : ", ") + p;
    return out;
}

std::string format_times(const VectorXd& grid, const std::vector<Eigen::Index>& idx) {
    std::ostringstream os;
    os.precision(6);
    for (std::size_t i = 0; i < idx.size(); ++i) os << (i ? ", " : "") << grid(idx[i]);
    return os.str();
}

void check_design(const Design& design, Eigen::Index n_curves) {
    const Eigen::Index p = design.x.cols();
    if (design.x.rows() != n_curves) throw ParameterError("design rows do not match the number of curves");
    if (!design.names.empty() && static_cast<Eigen::Index>(design.names.size()) != p) {
        throw ParameterError("design column names do not match its width");
    }
    if (n_curves <= p) {
        throw InsufficientDataError("regression needs more curves (" + std::to_string(n_curves) +
                                    ") than predictors (" + std::to_string(p) + ")");
    }
}

std::string column_name(const std::vector<std::string>& names, Eigen::Index j) {
    return j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)] : "x" + std::to_string(j);
}

std::vector<CoefficientCurve> empty_curves(const std::vector<std::string>& names, const VectorXd& grid, int df) {
    std::vector<CoefficientCurve> out;
    const Eigen::Index g = grid.size();
    for (const auto& name : names) {
        out.push_back({name, grid, VectorXd(g), VectorXd(g), VectorXd(g), VectorXd(g), df});
    }
    return out;
}

void set_band(CoefficientCurve& curve, double multiplier) {
    curve.lower = curve.beta - multiplier * curve.se;
    curve.upper = curve.beta + multiplier * curve.se;
}

}  // namespace

double t_quantile_975(int degrees_of_freedom) {
    if (degrees_of_freedom < 1) throw ParameterError("t quantile needs at least one degree of freedom");
    const boost::math::students_t_distribution<double> dist(static_cast<double>(degrees_of_freedom));
    return boost::math::quantile(dist, 0.975);
}

MatrixXd differentiate_sample(const FunctionalSample& sample, int deriv_order, const VectorXd& grid) {
    if (deriv_order < 1) throw ParameterError("derivative order must be at least 1");
    if (sample.basis.family() == BasisFamily::bspline && deriv_order >= sample.basis.order()) {
        throw ParameterError("derivative order " + std::to_string(deriv_order) + " needs spline order > " +
                             std::to_string(deriv_order) + " (basis order " + std::to_string(sample.basis.order()) +
                             ")");
    }
    return sample.evaluate(grid, deriv_order);
}

std::vector<CoefficientCurve> fit_fos(const MatrixXd& responses, const Design& design, const VectorXd& grid) {
    const Eigen::Index n = responses.rows();
    const Eigen::Index p = design.x.cols();
    if (responses.cols() != grid.size()) throw ParameterError("response matrix does not match grid");
    check_design(design, n);
    const auto qr = rank_revealing(design.x);
    if (qr.rank() < p) {
        throw CollinearityError("design is rank deficient; dependent columns: " +
                                join(dependent_columns(design.x, design.names)));
    }

    const MatrixXd beta = qr.solve(responses);  // p x n_grid
    const MatrixXd resid = responses - design.x * beta;
    const int df = static_cast<int>(n - p);
    const VectorXd sigma2 = resid.colwise().squaredNorm().transpose() / static_cast<double>(df);
    const MatrixXd xtx = design.x.transpose() * design.x;
    const VectorXd inv_diag = xtx.ldlt().solve(MatrixXd::Identity(p, p)).diagonal();
    const double mult = t_quantile_975(df);

    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < p; ++j) names.push_back(column_name(design.names, j));
    auto out = empty_curves(names, grid, df);
    for (Eigen::Index j = 0; j < p; ++j) {
        auto& curve = out[static_cast<std::size_t>(j)];
        curve.beta = beta.row(j).transpose();
        curve.se = (sigma2 * inv_diag(j)).cwiseSqrt();
        set_band(curve, mult);
    }
    return out;
}

std::vector<CoefficientCurve> fit_fos(const FunctionalSample& responses, const Design& design, const VectorXd& grid,
                                      int deriv_order) {
    const MatrixXd y = deriv_order == 0 ? responses.evaluate(grid) : differentiate_sample(responses, deriv_order, grid);
    return fit_fos(y, design, grid);
}

std::vector<CoefficientCurve> fit_concurrent(const MatrixXd& responses,
                                             const std::vector<FunctionalCovariate>& covariates,
                                             const Design& design, const VectorXd& grid) {
    const Eigen::Index n = responses.rows();
    const Eigen::Index g = grid.size();
    const Eigen::Index p = design.x.cols();
    const auto q = static_cast<Eigen::Index>(covariates.size());
    if (responses.cols() != g) throw ParameterError("response matrix does not match grid");
    for (const auto& cov : covariates) {
        if (cov.values.rows() != n || cov.values.cols() != g) {
            throw ParameterError("functional covariate '" + cov.name + "' is not aligned with the responses");
        }
    }
    if (n <= p + q) {
        throw InsufficientDataError("concurrent regression needs more curves than predictors");
    }
    if (!design.names.empty() && static_cast<Eigen::Index>(design.names.size()) != p) {
        throw ParameterError("design column names do not match its width");
    }
    if (design.x.rows() != n) throw ParameterError("design rows do not match the number of curves");

    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < p; ++j) names.push_back(column_name(design.names, j));
    for (const auto& cov : covariates) names.push_back(cov.name);
    const int df = static_cast<int>(n - p - q);
    const double mult = t_quantile_975(df);
    auto out = empty_curves(names, grid, df);

    std::vector<Eigen::Index> singular;
    MatrixXd local(n, p + q);
    local.leftCols(p) = design.x;
    for (Eigen::Index t = 0; t < g; ++t) {
        for (Eigen::Index l = 0; l < q; ++l) local.col(p + l) = covariates[static_cast<std::size_t>(l)].values.col(t);
        const auto qr = rank_revealing(local);
        if (qr.rank() < p + q) {
            singular.push_back(t);
            continue;
        }
        const VectorXd y = responses.col(t);
        const VectorXd beta = qr.solve(y);
        const double sigma2 = (y - local * beta).squaredNorm() / static_cast<double>(df);
        const MatrixXd xtx = local.transpose() * local;
        const VectorXd inv_diag = xtx.ldlt().solve(MatrixXd::Identity(p + q, p + q)).diagonal();
        for (Eigen::Index j = 0; j < p + q; ++j) {
            auto& curve = out[static_cast<std::size_t>(j)];
            curve.beta(t) = beta(j);
            curve.se(t) = std::sqrt(sigma2 * inv_diag(j));
        }
    }
    if (!singular.empty()) {
        throw NumericalError("pointwise design is singular at t = " + format_times(grid, singular));
    }
    for (auto& curve : out) set_band(curve, mult);
    return out;
}

std::vector<CoefficientCurve> fit_concurrent(const FunctionalSample& responses,
                                             const std::vector<std::pair<std::string, FunctionalSample>>& covariates,
                                             const Design& design, const VectorXd& grid) {
    std::vector<FunctionalCovariate> evaluated;
    for (const auto& [name, sample] : covariates) {
        if (sample.ids != responses.ids) {
            throw IntegrityError("functional covariate '" + name + "' does not share the response record ids");
        }
        if (sample.basis.lower() != responses.basis.lower() || sample.basis.upper() != responses.basis.upper()) {
            throw ParameterError("functional covariate '" + name + "' lives on a different domain");
        }
        evaluated.push_back({name, sample.evaluate(grid)});
    }
    return fit_concurrent(responses.evaluate(grid), evaluated, design, grid);
}

PdaResult pda_fit(const std::vector<MatrixXd>& derivatives, const VectorXd& grid, PdaWeightModel model) {
    if (derivatives.size() < 2) throw ParameterError("PDA needs derivatives D^0..D^m with m >= 1");
    const auto m = static_cast<Eigen::Index>(derivatives.size()) - 1;
    const Eigen::Index n = derivatives.front().rows();
    const Eigen::Index g = grid.size();
    for (const auto& d : derivatives) {
        if (d.rows() != n || d.cols() != g) throw ParameterError("derivative matrices are not aligned");
    }
    const double dt = uniform_spacing(grid);
    const MatrixXd& top = derivatives.back();

    PdaResult out;
    out.order = static_cast<int>(m);
    out.model = model;
    out.grid = grid;
    out.weights = MatrixXd::Zero(m, g);

    if (model == PdaWeightModel::constant) {
        MatrixXd a(n * g, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            a.col(j) = derivatives[static_cast<std::size_t>(j)].reshaped();
        }
        const VectorXd b = top.reshaped();
        const auto qr = rank_revealing(a);
        if (qr.rank() < m) throw NumericalError("PDA least-squares system is rank deficient");
        const VectorXd w = -qr.solve(b);
        out.weights = w.replicate(1, g);
        out.forcing = (b + a * w).squaredNorm() * dt;
        return out;
    }

    if (n < m) throw InsufficientDataError("pointwise PDA needs at least m curves");
    std::vector<Eigen::Index> singular;
    double forcing = 0.0;
    MatrixXd a(n, m);
    for (Eigen::Index t = 0; t < g; ++t) {
        for (Eigen::Index j = 0; j < m; ++j) a.col(j) = derivatives[static_cast<std::size_t>(j)].col(t);
        const auto qr = rank_revealing(a);
        if (qr.rank() < m) {
            singular.push_back(t);
            continue;
        }
        const VectorXd b = top.col(t);
        const VectorXd w = -qr.solve(b);
        out.weights.col(t) = w;
        forcing += (b + a * w).squaredNorm() * dt;
    }
    if (!singular.empty()) {
        throw NumericalError("pointwise PDA system is rank deficient at t = " + format_times(grid, singular));
    }
    out.forcing = forcing;
    return out;
}

PdaResult pda_fit(const FunctionalSample& sample, int order, const VectorXd& grid, PdaWeightModel model) {
    if (order < 1) throw ParameterError("PDA order must be at least 1");
    if (sample.basis.family() == BasisFamily::bspline && order >= sample.basis.order()) {
        throw ParameterError("PDA order " + std::to_string(order) + " needs spline order > " + std::to_string(order));
    }
    std::vector<MatrixXd> derivatives;
    for (int j = 0; j <= order; ++j) derivatives.push_back(sample.evaluate(grid, j));
    return pda_fit(derivatives, grid, model);
}

VectorXd auction_energy(const VectorXd& price, const VectorXd& velocity) {
    if (price.size() != velocity.size()) throw ParameterError("price and velocity differ in length");
    return (price.array() * velocity.array().square() / 2.0).matrix();
}

VectorXd auction_energy(const FunctionalDatum& price, const VectorXd& grid) {
    if (price.basis.family() == BasisFamily::bspline && price.basis.order() < 2) {
        throw ParameterError("auction energy needs a basis with a first derivative");
    }
    return auction_energy(eval_curve(price, grid, 0), eval_curve(price, grid, 1));
}

}  // namespace fdakit
