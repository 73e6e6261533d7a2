#pragma once

// Exploratory analysis of curve samples: grid-based functional PCA, the
// transposed (across-curve) PCA, k-means curve clustering and attribute
// profiles of the clusters.

#include <fdakit/fdcore.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace fdakit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/**
 * Functional PCA on a uniform grid. Components are normalized so that
 * sum(xi^2) * dt = 1; scores are dt-weighted projections of the centered
 * curves. `eigenvalues` are those of the grid sample covariance, descending.
 */
struct FpcaResult {
    VectorXd grid;
    VectorXd mean;
    MatrixXd components;  ///< k x n_grid
    MatrixXd scores;      ///< n_curves x k
    VectorXd eigenvalues;
    VectorXd fractions;   ///< k variance-explained fractions
    double total_variance = 0.0;
    std::vector<std::string> ids;
};

/// Grid spacing of a uniform grid; throws if the spacing is not uniform.
double uniform_spacing(const VectorXd& grid);

FpcaResult fpca(const MatrixXd& values, const VectorXd& grid, int n_components,
                std::vector<std::string> ids = {});
FpcaResult fpca(const FunctionalSample& sample, const VectorXd& grid, int n_components, int deriv_order = 0);

/**
 * PCA with the curves as the transformed dimension: eigen-analysis of the
 * n x n Gram matrix of the (column-centered) grid matrix. Nonzero eigenvalues
 * coincide with fpca().
 */
struct TransposePcaResult {
    VectorXd grid;
    MatrixXd loadings;  ///< k x n_curves, unit norm
    MatrixXd scores;    ///< n_grid x k, curve-space directions projected onto the grid
    VectorXd eigenvalues;
    VectorXd fractions;
    double total_variance = 0.0;
    std::vector<std::string> ids;
};

TransposePcaResult fpca_transpose(const MatrixXd& values, const VectorXd& grid, int n_components,
                                  std::vector<std::string> ids = {});
TransposePcaResult fpca_transpose(const FunctionalSample& sample, const VectorXd& grid, int n_components,
                                  int deriv_order = 0);

enum class ClusterRepresentation { coefficients, grid };

struct ClusterOptions {
    int k = 3;
    ClusterRepresentation representation = ClusterRepresentation::coefficients;
    int deriv_order = 0;  ///< grid representation only
    int n_restarts = 10;
    std::uint64_t seed = 42;
    int max_iterations = 100;
};

struct ClusterResult {
    int k = 0;
    std::vector<std::string> ids;
    std::vector<int> assignments;  ///< aligned with ids
    VectorXd grid;
    MatrixXd centroids;            ///< k x n_grid
    double sse = 0.0;
    std::uint64_t seed = 0;
    int n_restarts = 0;
    int best_restart = 0;
    std::vector<double> sse_history;  ///< per-iteration SSE of the winning restart
};

/// Raw k-means output on feature rows.
struct KMeansResult {
    std::vector<int> labels;
    MatrixXd centers;
    double sse = 0.0;
    int best_restart = 0;
    std::vector<double> sse_history;
};

/// k-means++ seeding, Lloyd iterations, best of n_restarts by (SSE, restart index).
KMeansResult kmeans(const MatrixXd& features, int k, int n_restarts, std::uint64_t seed, int max_iterations = 100);

ClusterResult cluster_curves(const FunctionalSample& sample, const VectorXd& grid, const ClusterOptions& options);

/// Clustering of curves given only their values on a uniform grid.
ClusterResult cluster_grid_values(const MatrixXd& values, const VectorXd& grid, std::vector<std::string> ids,
                                  const ClusterOptions& options);

struct NumericSummary {
    std::string column;
    double mean = 0.0;
    double sd = 0.0;  ///< sample standard deviation, 0 for singletons
};

struct CategoricalSummary {
    std::string column;
    std::string mode;  ///< ties resolve to the lexicographically smallest value
};

struct ClusterProfile {
    int cluster = 0;
    std::size_t count = 0;
    std::vector<NumericSummary> numeric;
    std::vector<CategoricalSummary> categorical;
};

std::vector<ClusterProfile> profile_clusters(const ClusterResult& result, const AttributeTable& attributes);

/// Chance-corrected agreement of two labelings; 1 for identical partitions.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace fdakit
