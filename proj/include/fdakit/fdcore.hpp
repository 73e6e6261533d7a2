#pragma once

// Basis systems, functional data containers and linear summaries of curve
// samples. Everything here is templated on the scalar type and header-only.

#include <fdakit/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fdakit {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class BasisFamily { bspline, fourier };

inline const char* to_string(BasisFamily family) {
    return family == BasisFamily::bspline ? "bspline" : "fourier";
}

/**
 * A finite family of basis functions on a closed interval [a, b].
 *
 * B-spline bases carry a clamped knot vector of length size() + order();
 * Fourier bases hold 1, sin(k w t), cos(k w t) with w = 2 pi / (b - a) and an
 * odd number of functions. Construct with make_bspline_basis() or
 * make_fourier_basis().
 */
template <typename Scalar>
class BasicBasis {
  public:
    using Vector = VectorX<Scalar>;
    using Matrix = MatrixX<Scalar>;

    BasisFamily family() const noexcept { return family_; }
    Scalar lower() const noexcept { return lower_; }
    Scalar upper() const noexcept { return upper_; }
    int size() const noexcept { return size_; }
    /// Polynomial order (degree + 1); zero for Fourier bases.
    int order() const noexcept { return order_; }
    const std::vector<Scalar>& knots() const noexcept { return knots_; }
    Scalar period() const noexcept { return upper_ - lower_; }

    bool contains(Scalar t) const noexcept { return t >= lower_ && t <= upper_; }

    /// Highest derivative order that is not identically zero.
    int max_nonzero_derivative() const noexcept {
        return family_ == BasisFamily::bspline ? order_ - 1 : std::numeric_limits<int>::max();
    }

    /// Distinct breakpoints: unique knots for splines, the domain ends otherwise.
    std::vector<Scalar> breakpoints() const {
        if (family_ == BasisFamily::fourier) return {lower_, upper_};
        std::vector<Scalar> out(knots_.begin() + (order_ - 1), knots_.end() - (order_ - 1));
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// Values (or derivatives) of every basis function at t, written into `row`.
    void evaluate_into(Scalar t, int deriv_order, Eigen::Ref<Vector> row) const {
        if (!contains(t)) {
            throw DomainError("evaluation point " + std::to_string(static_cast<double>(t)) +
                              " outside basis domain [" + std::to_string(static_cast<double>(lower_)) +
                              ", " + std::to_string(static_cast<double>(upper_)) + "]");
        }
        if (deriv_order < 0) throw ParameterError("derivative order must be non-negative");
        row.setZero();
        if (family_ == BasisFamily::bspline) {
            bspline_into(t, deriv_order, row);
        } else {
            fourier_into(t, deriv_order, row);
        }
    }

    Vector evaluate(Scalar t, int deriv_order = 0) const {
        Vector row(size_);
        evaluate_into(t, deriv_order, row);
        return row;
    }

    /**
     * Curves (one per row of `coefficients`) evaluated on `grid`, returned as
     * n_curves x n_grid. Spline derivatives come from differenced coefficients,
     * so a constant curve has derivatives that are exactly zero.
     */
    Matrix evaluate_curves(const Matrix& coefficients, const Vector& grid, int deriv_order = 0) const {
        if (coefficients.cols() != size_) throw ParameterError("coefficient columns do not match basis size");
        if (deriv_order < 0) throw ParameterError("derivative order must be non-negative");
        Matrix out(coefficients.rows(), grid.size());
        Vector row(size_);
        const int p = order_ - 1;
        Vector d(std::max(p + 1, 1));
        for (Eigen::Index g = 0; g < grid.size(); ++g) {
            const Scalar t = grid(g);
            if (family_ == BasisFamily::fourier || deriv_order == 0) {
                evaluate_into(t, deriv_order, row);
                out.col(g) = coefficients * row;
                continue;
            }
            evaluate_into(t, 0, row);  // domain check
            if (deriv_order > p) {
                out.col(g).setZero();
                continue;
            }
            const int s = find_span(t);
            const Matrix ndu = lower_order_table(t, s);
            for (Eigen::Index c = 0; c < coefficients.rows(); ++c) {
                for (int j = 0; j <= p; ++j) d(j) = coefficients(c, s - p + j);
                for (int k = 1; k <= deriv_order; ++k) {
                    for (int j = p; j >= k; --j) {
                        d(j) = Scalar(p - k + 1) * (d(j) - d(j - 1)) / (knots_[s + j - k + 1] - knots_[s - p + j]);
                    }
                }
                Scalar sum(0);
                for (int j = 0; j <= p - deriv_order; ++j) sum += ndu(j, p - deriv_order) * d(j + deriv_order);
                out(c, g) = sum;
            }
        }
        return out;
    }

  private:
    template <typename S>
    friend BasicBasis<S> make_bspline_basis(S, S, int, int);
    template <typename S>
    friend BasicBasis<S> make_fourier_basis(S, S, int);

    BasicBasis() = default;

    int find_span(Scalar t) const {
        const int p = order_ - 1;
        if (t >= knots_[size_]) return size_ - 1;
        // largest i in [p, size_-1] with knots_[i] <= t
        auto first = knots_.begin() + p;
        auto last = knots_.begin() + size_;
        auto it = std::upper_bound(first, last, t);
        return static_cast<int>(it - knots_.begin()) - 1;
    }

    // Column q of the upper triangle holds the degree-q splines nonzero on the span;
    // the lower triangle holds knot differences.
    Matrix lower_order_table(Scalar t, int span) const {
        const int p = order_ - 1;
        Matrix ndu(p + 1, p + 1);
        Vector left(p + 1), right(p + 1);
        ndu(0, 0) = Scalar(1);
        for (int j = 1; j <= p; ++j) {
            left(j) = t - knots_[span + 1 - j];
            right(j) = knots_[span + j] - t;
            Scalar saved(0);
            for (int r = 0; r < j; ++r) {
                ndu(j, r) = right(r + 1) + left(j - r);
                const Scalar temp = ndu(r, j - 1) / ndu(j, r);
                ndu(r, j) = saved + right(r + 1) * temp;
                saved = left(j - r) * temp;
            }
            ndu(j, j) = saved;
        }
        return ndu;
    }

    // Derivatives of the nonzero B-splines at t by the triangular table of
    // lower-order splines and differenced coefficients.
    void bspline_into(Scalar t, int n, Eigen::Ref<Vector> row) const {
        const int p = order_ - 1;
        if (n > p) return;
        const int span = find_span(t);
        const Matrix ndu = lower_order_table(t, span);
        if (n == 0) {
            for (int j = 0; j <= p; ++j) row(span - p + j) = ndu(j, p);
            return;
        }
        Matrix a(2, p + 1);
        for (int r = 0; r <= p; ++r) {
            int s1 = 0, s2 = 1;
            a(0, 0) = Scalar(1);
            Scalar d(0);
            for (int k = 1; k <= n; ++k) {
                d = Scalar(0);
                const int rk = r - k;
                const int pk = p - k;
                if (r >= k) {
                    a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                    d = a(s2, 0) * ndu(rk, pk);
                }
                const int j1 = rk >= -1 ? 1 : -rk;
                const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
                for (int j = j1; j <= j2; ++j) {
                    a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                    d += a(s2, j) * ndu(rk + j, pk);
                }
                if (r <= pk) {
                    a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
                    d += a(s2, k) * ndu(r, pk);
                }
                std::swap(s1, s2);
            }
            row(span - p + r) = d;
        }
        Scalar factor(1);
        for (int k = 0; k < n; ++k) factor *= Scalar(p - k);
        row.segment(span - p, p + 1) *= factor;
    }

    void fourier_into(Scalar t, int n, Eigen::Ref<Vector> row) const {
        using std::cos;
        using std::pow;
        using std::sin;
        const Scalar omega = Scalar(2) * std::numbers::pi_v<Scalar> / period();
        row(0) = n == 0 ? Scalar(1) : Scalar(0);
        const Scalar shift = Scalar(n) * std::numbers::pi_v<Scalar> / Scalar(2);
        for (int k = 1; 2 * k <= size_ - 1; ++k) {
            const Scalar freq = Scalar(k) * omega;
            const Scalar scale = pow(freq, n);
            row(2 * k - 1) = scale * sin(freq * t + shift);
            row(2 * k) = scale * cos(freq * t + shift);
        }
    }

    BasisFamily family_ = BasisFamily::bspline;
    Scalar lower_{0};
    Scalar upper_{1};
    int size_ = 0;
    int order_ = 0;
    std::vector<Scalar> knots_;
};

using Basis = BasicBasis<double>;

/// Clamped B-spline basis with equally spaced interior knots.
template <typename Scalar>
BasicBasis<Scalar> make_bspline_basis(Scalar a, Scalar b, int n_basis, int order) {
    if (!(a < b)) throw ParameterError("degenerate basis domain: require a < b");
    if (order < 1) throw ParameterError("spline order must be at least 1");
    if (n_basis < order) {
        throw ParameterError("n_basis (" + std::to_string(n_basis) + ") must be >= order (" +
                             std::to_string(order) + ")");
    }
    BasicBasis<Scalar> basis;
    basis.family_ = BasisFamily::bspline;
    basis.lower_ = a;
    basis.upper_ = b;
    basis.size_ = n_basis;
    basis.order_ = order;
    const int n_interior = n_basis - order;
    basis.knots_.reserve(static_cast<std::size_t>(n_basis + order));
    for (int i = 0; i < order; ++i) basis.knots_.push_back(a);
    for (int i = 1; i <= n_interior; ++i) {
        basis.knots_.push_back(a + (b - a) * Scalar(i) / Scalar(n_interior + 1));
    }
    for (int i = 0; i < order; ++i) basis.knots_.push_back(b);
    return basis;
}

/// Unnormalized Fourier basis; an even request is rounded up to the next odd size.
template <typename Scalar>
BasicBasis<Scalar> make_fourier_basis(Scalar a, Scalar b, int n_basis) {
    if (!(a < b)) throw ParameterError("degenerate basis domain: require a < b");
    if (n_basis < 1) throw ParameterError("n_basis must be at least 1");
    BasicBasis<Scalar> basis;
    basis.family_ = BasisFamily::fourier;
    basis.lower_ = a;
    basis.upper_ = b;
    basis.size_ = n_basis % 2 == 0 ? n_basis + 1 : n_basis;
    basis.order_ = 0;
    return basis;
}

/// n equally spaced points from a to b inclusive; both ends are exact.
template <typename Scalar>
VectorX<Scalar> uniform_grid(Scalar a, Scalar b, int n) {
    if (n < 2) throw ParameterError("a grid needs at least two points");
    VectorX<Scalar> grid(n);
    for (int i = 0; i < n; ++i) grid(i) = a + (b - a) * Scalar(i) / Scalar(n - 1);
    grid(n - 1) = b;
    return grid;
}

template <typename Scalar>
VectorX<Scalar> uniform_grid(const BasicBasis<Scalar>& basis, int n) {
    return uniform_grid(basis.lower(), basis.upper(), n);
}

/// Evaluation matrix with entry (i, k) = (d/dt)^deriv_order phi_k(grid_i).
template <typename Scalar>
MatrixX<Scalar> eval_basis(const BasicBasis<Scalar>& basis, const VectorX<Scalar>& grid, int deriv_order = 0) {
    MatrixX<Scalar> phi(grid.size(), basis.size());
    VectorX<Scalar> row(basis.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        basis.evaluate_into(grid(i), deriv_order, row);
        phi.row(i) = row.transpose();
    }
    return phi;
}

/// Greville abscissae: interpolating a linear function at these points
/// gives coefficients that reproduce it exactly.
template <typename Scalar>
VectorX<Scalar> greville_abscissae(const BasicBasis<Scalar>& basis) {
    if (basis.family() != BasisFamily::bspline) throw ParameterError("Greville abscissae need a B-spline basis");
    const auto& knots = basis.knots();
    const int p = basis.order() - 1;
    VectorX<Scalar> out(basis.size());
    for (int k = 0; k < basis.size(); ++k) {
        if (p == 0) {
            out(k) = (knots[k] + knots[k + 1]) / Scalar(2);
            continue;
        }
        Scalar sum(0);
        for (int j = 1; j <= p; ++j) sum += knots[k + j];
        out(k) = sum / Scalar(p);
    }
    return out;
}

/// One curve: a coefficient expansion over a basis.
template <typename Scalar>
struct BasicFunctionalDatum {
    BasicBasis<Scalar> basis;
    VectorX<Scalar> coefficients;
    std::string record_id;

    BasicFunctionalDatum(BasicBasis<Scalar> b, VectorX<Scalar> c, std::string id = {})
        : basis(std::move(b)), coefficients(std::move(c)), record_id(std::move(id)) {
        if (coefficients.size() != basis.size()) {
            throw ParameterError("coefficient length " + std::to_string(coefficients.size()) +
                                 " does not match basis size " + std::to_string(basis.size()));
        }
        if (!coefficients.allFinite()) throw ParameterError("non-finite coefficient in record '" + record_id + "'");
    }
};

using FunctionalDatum = BasicFunctionalDatum<double>;

template <typename Scalar>
VectorX<Scalar> eval_curve(const BasicFunctionalDatum<Scalar>& datum, const VectorX<Scalar>& grid, int deriv_order = 0) {
    return datum.basis.evaluate_curves(datum.coefficients.transpose(), grid, deriv_order).transpose();
}

struct NumericColumn {
    std::string name;
    std::vector<double> values;
};

struct CategoricalColumn {
    std::string name;
    std::vector<std::string> values;
};

/// Cross-sectional attributes keyed by record id; columns are row-aligned with `ids`.
struct AttributeTable {
    std::vector<std::string> ids;
    std::vector<NumericColumn> numeric;
    std::vector<CategoricalColumn> categorical;

    std::optional<std::size_t> find(const std::string& id) const {
        const auto it = std::find(ids.begin(), ids.end(), id);
        if (it == ids.end()) return std::nullopt;
        return static_cast<std::size_t>(it - ids.begin());
    }

    const NumericColumn* numeric_column(const std::string& name) const {
        for (const auto& col : numeric) {
            if (col.name == name) return &col;
        }
        return nullptr;
    }
};

/**
 * A sample of curves sharing one basis. Row i of `coefficients` belongs to
 * `ids[i]`; every id has a row in `attributes`.
 */
template <typename Scalar>
struct BasicFunctionalSample {
    BasicBasis<Scalar> basis;
    MatrixX<Scalar> coefficients;
    std::vector<std::string> ids;
    AttributeTable attributes;

    BasicFunctionalSample(BasicBasis<Scalar> b, MatrixX<Scalar> c, std::vector<std::string> record_ids,
                          AttributeTable attrs)
        : basis(std::move(b)), coefficients(std::move(c)), ids(std::move(record_ids)), attributes(std::move(attrs)) {
        if (coefficients.cols() != basis.size()) throw ParameterError("coefficient rows do not match basis size");
        if (static_cast<std::size_t>(coefficients.rows()) != ids.size()) {
            throw ParameterError("coefficient row count does not match id count");
        }
        if (!coefficients.allFinite()) throw ParameterError("non-finite coefficient in sample");
        for (const auto& id : ids) {
            if (!attributes.find(id)) throw IntegrityError("record '" + id + "' has no attribute entry");
        }
    }

    /// Sample without cross-sectional columns.
    BasicFunctionalSample(BasicBasis<Scalar> b, MatrixX<Scalar> c, std::vector<std::string> record_ids)
        : BasicFunctionalSample(std::move(b), std::move(c), record_ids, AttributeTable{record_ids, {}, {}}) {}

    /// Sample with generated ids "0", "1", ...
    BasicFunctionalSample(BasicBasis<Scalar> b, MatrixX<Scalar> c)
        : BasicFunctionalSample(std::move(b), c, default_ids(c.rows())) {}

    Eigen::Index size() const noexcept { return coefficients.rows(); }

    BasicFunctionalDatum<Scalar> datum(Eigen::Index i) const {
        return {basis, coefficients.row(i).transpose(), ids[static_cast<std::size_t>(i)]};
    }

    /// n_curves x n_grid matrix of evaluated curves.
    MatrixX<Scalar> evaluate(const VectorX<Scalar>& grid, int deriv_order = 0) const {
        return basis.evaluate_curves(coefficients, grid, deriv_order);
    }

  private:
    static std::vector<std::string> default_ids(Eigen::Index n) {
        std::vector<std::string> out;
        for (Eigen::Index i = 0; i < n; ++i) out.push_back(std::to_string(i));
        return out;
    }
};

using FunctionalSample = BasicFunctionalSample<double>;

/// Componentwise coefficient mean, accumulated row by row in sample order.
template <typename Scalar>
BasicFunctionalDatum<Scalar> mean_curve(const BasicFunctionalSample<Scalar>& sample) {
    if (sample.size() == 0) throw EmptyInputError("mean of an empty sample");
    VectorX<Scalar> sum = VectorX<Scalar>::Zero(sample.basis.size());
    for (Eigen::Index i = 0; i < sample.size(); ++i) sum += sample.coefficients.row(i).transpose();
    return {sample.basis, sum / Scalar(sample.size()), "mean"};
}

/// Pointwise quantile surface of a sample of curves ("river plot").
template <typename Scalar>
struct BasicRiverPlot {
    VectorX<Scalar> grid;
    std::vector<Scalar> probs;
    MatrixX<Scalar> values;  ///< probs.size() x grid.size()
};

using RiverPlot = BasicRiverPlot<double>;

/// Quantile of sorted data by linear interpolation between order statistics.
template <typename Scalar>
Scalar sorted_quantile(const std::vector<Scalar>& sorted, Scalar prob) {
    const Scalar h = Scalar(sorted.size() - 1) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const Scalar frac = h - Scalar(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// River plot from curves already evaluated on `grid` (n_curves x n_grid).
template <typename Scalar>
BasicRiverPlot<Scalar> pointwise_quantiles(const MatrixX<Scalar>& values, const VectorX<Scalar>& grid,
                                           const std::vector<Scalar>& probs) {
    if (values.rows() < 1) throw EmptyInputError("river plot of an empty sample");
    if (values.cols() != grid.size()) throw ParameterError("value matrix does not match grid");
    for (const Scalar p : probs) {
        if (!(p > Scalar(0) && p < Scalar(1))) {
            throw ParameterError("quantile level " + std::to_string(static_cast<double>(p)) + " not in (0, 1)");
        }
    }
    for (Eigen::Index j = 1; j < grid.size(); ++j) {
        if (!(grid(j) > grid(j - 1))) throw ParameterError("river plot grid must be strictly increasing");
    }
    BasicRiverPlot<Scalar> out{grid, probs, MatrixX<Scalar>(static_cast<Eigen::Index>(probs.size()), grid.size())};
    std::vector<Scalar> column(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
        for (Eigen::Index i = 0; i < values.rows(); ++i) column[static_cast<std::size_t>(i)] = values(i, j);
        std::sort(column.begin(), column.end());
        for (std::size_t q = 0; q < probs.size(); ++q) {
            out.values(static_cast<Eigen::Index>(q), j) = sorted_quantile(column, probs[q]);
        }
    }
    return out;
}

template <typename Scalar>
BasicRiverPlot<Scalar> pointwise_quantiles(const BasicFunctionalSample<Scalar>& sample, const VectorX<Scalar>& grid,
                                           const std::vector<Scalar>& probs) {
    if (sample.size() < 1) throw EmptyInputError("river plot of an empty sample");
    return pointwise_quantiles(MatrixX<Scalar>(sample.evaluate(grid)), grid, probs);
}

}  // namespace fdakit
