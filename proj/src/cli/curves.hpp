#pragma once

#include <fdakit/fdcore.hpp>
#include <fdakit/smooth.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace fdakit::cli {

/**
 * Fitted curves as written by `smooth`: either linear basis expansions
 * (penalized fits) or monotone fits whose w functions share the basis.
 * Stored as basis.txt plus coefficients.csv in one directory.
 */
struct SmoothedCurves {
    explicit SmoothedCurves(Basis b) : basis(std::move(b)) {}

    Basis basis;
    bool monotone = false;
    std::vector<std::string> ids;
    MatrixXd coefficients;  ///< n x n_basis (c for penalized fits, w for monotone fits)
    VectorXd beta0;         ///< monotone only
    VectorXd gamma;         ///< monotone only

    Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(ids.size()); }
    int max_derivative() const;
    /// n x n_grid values of the deriv_order-th derivative.
    MatrixXd evaluate(const VectorXd& grid, int deriv_order) const;
    MonotoneFit monotone_fit(Eigen::Index i) const;
};

void save_curves(const std::filesystem::path& dir, const SmoothedCurves& curves);
SmoothedCurves load_curves(const std::filesystem::path& dir);

/// Reads a key=value file, skipping blank lines.
std::vector<std::pair<std::string, std::string>> read_key_values(const std::filesystem::path& path);

/// Round-trip exact rendering for fitted quantities.
std::string format_exact(double value);

}  // namespace fdakit::cli
