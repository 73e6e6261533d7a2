#pragma once

// Reference implementations used to cross-check the library. They share no
// code with src/ beyond the public data types.

#include <fdakit/fdcore.hpp>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Textbook Cox-de Boor value of B_{i,k} (order k) at t, right-continuous, closed at the right end.
inline double cox_de_boor(const std::vector<double>& knots, int i, int k, double t) {
    if (k == 1) {
        const double lo = knots[static_cast<std::size_t>(i)];
        const double hi = knots[static_cast<std::size_t>(i + 1)];
        const double last = knots.back();
        if (lo < hi && ((t >= lo && t < hi) || (t == last && hi == last))) return 1.0;
        return 0.0;
    }
    double out = 0.0;
    const double d1 = knots[static_cast<std::size_t>(i + k - 1)] - knots[static_cast<std::size_t>(i)];
    const double d2 = knots[static_cast<std::size_t>(i + k)] - knots[static_cast<std::size_t>(i + 1)];
    if (d1 > 0) out += (t - knots[static_cast<std::size_t>(i)]) / d1 * cox_de_boor(knots, i, k - 1, t);
    if (d2 > 0) out += (knots[static_cast<std::size_t>(i + k)] - t) / d2 * cox_de_boor(knots, i + 1, k - 1, t);
    return out;
}

/// Derivative of B_{i,k} by the order-lowering difference formula, applied recursively.
inline double cox_de_boor_deriv(const std::vector<double>& knots, int i, int k, double t, int deriv) {
    if (deriv == 0) return cox_de_boor(knots, i, k, t);
    if (k == 1) return 0.0;
    double out = 0.0;
    const double d1 = knots[static_cast<std::size_t>(i + k - 1)] - knots[static_cast<std::size_t>(i)];
    const double d2 = knots[static_cast<std::size_t>(i + k)] - knots[static_cast<std::size_t>(i + 1)];
    if (d1 > 0) out += (k - 1) / d1 * cox_de_boor_deriv(knots, i, k - 1, t, deriv - 1);
    if (d2 > 0) out -= (k - 1) / d2 * cox_de_boor_deriv(knots, i + 1, k - 1, t, deriv - 1);
    return out;
}

/// Clamped knot vector with equally spaced interior knots.
inline std::vector<double> clamped_knots(double a, double b, int n_basis, int order) {
    std::vector<double> knots(static_cast<std::size_t>(order), a);
    const int interior = n_basis - order;
    for (int j = 1; j <= interior; ++j) knots.push_back(a + (b - a) * j / (interior + 1));
    knots.insert(knots.end(), static_cast<std::size_t>(order), b);
    return knots;
}

inline MatrixXd bspline_design(double a, double b, int n_basis, int order, const VectorXd& t, int deriv = 0) {
    const auto knots = clamped_knots(a, b, n_basis, order);
    MatrixXd out(t.size(), n_basis);
    for (Eigen::Index r = 0; r < t.size(); ++r) {
        for (int k = 0; k < n_basis; ++k) out(r, k) = cox_de_boor_deriv(knots, k, order, t(r), deriv);
    }
    return out;
}

/// Roughness penalty by Boost's fixed-order Gauss rule on each knot interval.
inline MatrixXd bspline_penalty(double a, double b, int n_basis, int order, int m) {
    const auto knots = clamped_knots(a, b, n_basis, order);
    MatrixXd r = MatrixXd::Zero(n_basis, n_basis);
    for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
        const double lo = knots[s];
        const double hi = knots[s + 1];
        if (!(hi > lo)) continue;
        for (int j = 0; j < n_basis; ++j) {
            for (int k = j; k < n_basis; ++k) {
                auto f = [&](double x) {
                    // stay inside the half-open interval so the piece is evaluated consistently
                    const double u = std::min(x, std::nextafter(hi, lo));
                    return cox_de_boor_deriv(knots, j, order, u, m) * cox_de_boor_deriv(knots, k, order, u, m);
                };
                const double v = boost::math::quadrature::gauss<double, 15>::integrate(f, lo, hi);
                r(j, k) += v;
                if (k != j) r(k, j) += v;
            }
        }
    }
    return r;
}

/// Dense ridge solve of the normal equations by full-pivot LU.
inline VectorXd ridge_solve(const MatrixXd& phi, const VectorXd& y, const MatrixXd& r, double lambda) {
    const MatrixXd a = phi.transpose() * phi + lambda * r;
    return a.fullPivLu().solve(phi.transpose() * y);
}

/// Per-grid-point OLS using the normal equations, returning (beta, se) as p x G matrices.
struct OlsOracle {
    MatrixXd beta;
    MatrixXd se;
};

inline OlsOracle pointwise_ols(const MatrixXd& y, const std::vector<MatrixXd>& designs) {
    const auto g = y.cols();
    const auto p = designs.front().cols();
    const auto n = y.rows();
    OlsOracle out{MatrixXd(p, g), MatrixXd(p, g)};
    for (Eigen::Index j = 0; j < g; ++j) {
        const MatrixXd& x = designs[static_cast<std::size_t>(j)];
        const MatrixXd xtx_inv = (x.transpose() * x).inverse();
        const VectorXd b = xtx_inv * x.transpose() * y.col(j);
        const VectorXd res = y.col(j) - x * b;
        const double s2 = res.squaredNorm() / static_cast<double>(n - p);
        out.beta.col(j) = b;
        out.se.col(j) = (s2 * xtx_inv.diagonal().array()).sqrt();
    }
    return out;
}

/// True iff the two labelings agree up to a bijective relabeling (labels < 64).
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> map(64, -1);
    std::vector<int> inv(64, -1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto x = static_cast<std::size_t>(a[i]);
        const auto y = static_cast<std::size_t>(b[i]);
        if (map[x] == -1 && inv[y] == -1) {
            map[x] = b[i];
            inv[y] = a[i];
        }
        if (map[x] != b[i] || inv[y] != a[i]) return false;
    }
    return true;
}

/// Symmetric eigenvalues of the sample covariance, descending, via Eigen's dense solver.
inline VectorXd covariance_eigenvalues(const MatrixXd& x) {
    const VectorXd mean = x.colwise().mean().transpose();
    const MatrixXd xc = x.rowwise() - mean.transpose();
    const MatrixXd cov = xc.transpose() * xc / static_cast<double>(x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    return es.eigenvalues().reverse();
}

/// Squared singular values of the centered matrix divided by n-1, descending.
inline VectorXd svd_eigenvalues(const MatrixXd& x) {
    const VectorXd mean = x.colwise().mean().transpose();
    const MatrixXd xc = x.rowwise() - mean.transpose();
    Eigen::JacobiSVD<MatrixXd> svd(xc);
    return svd.singularValues().array().square() / static_cast<double>(x.rows() - 1);
}

/// Largest principal angle between column spaces of a and b (orthonormalized first).
inline double max_subspace_angle(const MatrixXd& a, const MatrixXd& b) {
    const MatrixXd qa = Eigen::HouseholderQR<MatrixXd>(a).householderQ() * MatrixXd::Identity(a.rows(), a.cols());
    const MatrixXd qb = Eigen::HouseholderQR<MatrixXd>(b).householderQ() * MatrixXd::Identity(b.rows(), b.cols());
    // sine of the largest angle = norm of the part of qb outside span(qa)
    const MatrixXd resid = qb - qa * (qa.transpose() * qb);
    Eigen::JacobiSVD<MatrixXd> rs(resid);
    return std::asin(std::min(1.0, rs.singularValues().maxCoeff()));
}

}  // namespace oracle
