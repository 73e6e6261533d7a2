#pragma once

#include <fdakit/fdcore.hpp>

#include <Eigen/Eigenvalues>

namespace fdakit {

template <typename Scalar>
struct QuadratureRule {
    VectorX<Scalar> nodes;
    VectorX<Scalar> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Golub-Welsch).
template <typename Scalar>
QuadratureRule<Scalar> gauss_legendre(int n) {
    if (n < 1) throw ParameterError("quadrature needs at least one node");
    MatrixX<Scalar> jacobi = MatrixX<Scalar>::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const Scalar beta = Scalar(k) / std::sqrt(Scalar(4 * k * k - 1));
        jacobi(k, k - 1) = beta;
        jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(jacobi);
    QuadratureRule<Scalar> rule{solver.eigenvalues(), VectorX<Scalar>(n)};
    for (int k = 0; k < n; ++k) {
        const Scalar v = solver.eigenvectors()(0, k);
        rule.weights(k) = Scalar(2) * v * v;
    }
    return rule;
}

/// Rule on [lo, hi] obtained by mapping a reference rule on [-1, 1].
template <typename Scalar>
QuadratureRule<Scalar> map_rule(const QuadratureRule<Scalar>& ref, Scalar lo, Scalar hi) {
    const Scalar half = (hi - lo) / Scalar(2);
    const Scalar mid = (hi + lo) / Scalar(2);
    return {(mid + half * ref.nodes.array()).matrix(), (half * ref.weights.array()).matrix()};
}

/// Composite rule: `points_per_panel` Gauss nodes on each [breaks[i], breaks[i+1]].
template <typename Scalar>
QuadratureRule<Scalar> composite_rule(const std::vector<Scalar>& breaks, int points_per_panel) {
    const auto ref = gauss_legendre<Scalar>(points_per_panel);
    const auto panels = static_cast<Eigen::Index>(breaks.size()) - 1;
    QuadratureRule<Scalar> out{VectorX<Scalar>(panels * points_per_panel), VectorX<Scalar>(panels * points_per_panel)};
    for (Eigen::Index i = 0; i < panels; ++i) {
        const auto mapped = map_rule(ref, breaks[static_cast<std::size_t>(i)], breaks[static_cast<std::size_t>(i) + 1]);
        out.nodes.segment(i * points_per_panel, points_per_panel) = mapped.nodes;
        out.weights.segment(i * points_per_panel, points_per_panel) = mapped.weights;
    }
    return out;
}

/**
 * Roughness penalty R with R(j, k) = integral of D^m phi_j * D^m phi_k over the
 * domain. Splines are integrated per knot interval with enough Gauss nodes to
 * be exact; Fourier bases use 8 panels per function with 12 nodes each.
 */
template <typename Scalar>
MatrixX<Scalar> penalty_matrix(const BasicBasis<Scalar>& basis, int penalty_order) {
    if (penalty_order < 0) throw ParameterError("penalty order must be non-negative");
    QuadratureRule<Scalar> rule;
    if (basis.family() == BasisFamily::bspline) {
        rule = composite_rule(basis.breakpoints(), std::max(basis.order(), 1));
    } else {
        const int panels = 8 * basis.size();
        std::vector<Scalar> breaks;
        for (int i = 0; i <= panels; ++i) {
            breaks.push_back(basis.lower() + basis.period() * Scalar(i) / Scalar(panels));
        }
        breaks.back() = basis.upper();
        rule = composite_rule(breaks, 12);
    }
    const MatrixX<Scalar> d = eval_basis(basis, rule.nodes, penalty_order);
    MatrixX<Scalar> r = d.transpose() * rule.weights.asDiagonal() * d;
    return (r + r.transpose()) / Scalar(2);
}

}  // namespace fdakit
