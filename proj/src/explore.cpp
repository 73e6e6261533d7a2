#include <fdakit/explore.hpp>
#include <fdakit/random.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace fdakit {

namespace {

/// Column means computed as first row + mean offset; identical rows center to exact zeros.
VectorXd column_mean(const MatrixXd& values) {
    const VectorXd anchor = values.row(0).transpose();
    VectorXd offset = VectorXd::Zero(values.cols());
    for (Eigen::Index i = 0; i < values.rows(); ++i) offset += values.row(i).transpose() - anchor;
    return anchor + offset / static_cast<double>(values.rows());
}

/// Flip each column so that its entry of largest magnitude is positive.
void fix_signs(MatrixXd& vectors) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        Eigen::Index arg = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&arg);
        if (vectors(arg, j) < 0.0) vectors.col(j) *= -1.0;
    }
}

struct SortedEigen {
    VectorXd values;   // descending, clamped at zero
    MatrixXd vectors;  // matching columns
};

SortedEigen descending_eigen(const MatrixXd& symmetric) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> solver(symmetric);
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
    const Eigen::Index n = symmetric.rows();
    SortedEigen out{VectorXd(n), MatrixXd(n, n)};
    for (Eigen::Index j = 0; j < n; ++j) {
        out.values(j) = std::max(solver.eigenvalues()(n - 1 - j), 0.0);
        out.vectors.col(j) = solver.eigenvectors().col(n - 1 - j);
    }
    return out;
}

std::vector<std::string> default_ids(Eigen::Index n) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < n; ++i) out.push_back(std::to_string(i));
    return out;
}

}  // namespace

double uniform_spacing(const VectorXd& grid) {
    if (grid.size() < 2) throw ParameterError("grid needs at least two points");
    const double dt = (grid(grid.size() - 1) - grid(0)) / static_cast<double>(grid.size() - 1);
    if (!(dt > 0.0)) throw ParameterError("grid must be increasing");
    for (Eigen::Index i = 1; i < grid.size(); ++i) {
        if (std::abs(grid(i) - grid(i - 1) - dt) > 1e-9 * dt) throw ParameterError("grid is not uniform");
    }
    return dt;
}

// ---------------------------------------------------------------------------
// Functional PCA

FpcaResult fpca(const MatrixXd& values, const VectorXd& grid, int n_components, std::vector<std::string> ids) {
    const Eigen::Index n = values.rows();
    const Eigen::Index g = grid.size();
    if (n < 2) throw ParameterError("functional PCA needs at least two curves");
    if (values.cols() != g) throw ParameterError("value matrix does not match grid");
    if (n_components < 1 || n_components > std::min<Eigen::Index>(n - 1, g)) {
        throw ParameterError("n_components must lie in [1, min(n_curves - 1, n_grid)] = [1, " +
                             std::to_string(std::min<Eigen::Index>(n - 1, g)) + "]");
    }
    const double dt = uniform_spacing(grid);
    if (ids.empty()) ids = default_ids(n);

    FpcaResult out;
    out.grid = grid;
    out.ids = std::move(ids);
    out.mean = column_mean(values);
    const MatrixXd centered = values.rowwise() - out.mean.transpose();
    const auto k = static_cast<Eigen::Index>(n_components);

    if (centered.squaredNorm() == 0.0) {
        out.components = MatrixXd::Zero(k, g);
        out.scores = MatrixXd::Zero(n, k);
        out.eigenvalues = VectorXd::Zero(g);
        out.fractions = VectorXd::Zero(k);
        return out;
    }

    const MatrixXd covariance = centered.transpose() * centered / static_cast<double>(n - 1);
    auto eig = descending_eigen(covariance);
    MatrixXd leading = eig.vectors.leftCols(k);
    fix_signs(leading);

    out.eigenvalues = eig.values;
    out.total_variance = eig.values.sum();
    out.fractions = eig.values.head(k) / out.total_variance;
    out.components = (leading / std::sqrt(dt)).transpose();
    out.scores = centered * out.components.transpose() * dt;
    return out;
}

FpcaResult fpca(const FunctionalSample& sample, const VectorXd& grid, int n_components, int deriv_order) {
    return fpca(sample.evaluate(grid, deriv_order), grid, n_components, sample.ids);
}

TransposePcaResult fpca_transpose(const MatrixXd& values, const VectorXd& grid, int n_components,
                                  std::vector<std::string> ids) {
    const Eigen::Index n = values.rows();
    if (n < 1) throw ParameterError("transpose PCA needs at least one curve");
    if (values.cols() != grid.size()) throw ParameterError("value matrix does not match grid");
    if (n_components < 1 || n_components > n) throw ParameterError("n_components must lie in [1, n_curves]");
    uniform_spacing(grid);
    if (ids.empty()) ids = default_ids(n);

    TransposePcaResult out;
    out.grid = grid;
    out.ids = std::move(ids);
    const VectorXd mean = column_mean(values);
    const MatrixXd centered = values.rowwise() - mean.transpose();
    const auto k = static_cast<Eigen::Index>(n_components);
    const double denom = static_cast<double>(std::max<Eigen::Index>(n - 1, 1));

    const MatrixXd gram = centered * centered.transpose() / denom;
    auto eig = descending_eigen(gram);
    MatrixXd leading = eig.vectors.leftCols(k);
    fix_signs(leading);

    out.eigenvalues = eig.values;
    out.total_variance = eig.values.sum();
    out.loadings = leading.transpose();
    out.scores = centered.transpose() * leading;
    out.fractions = out.total_variance > 0.0 ? VectorXd(eig.values.head(k) / out.total_variance) : VectorXd::Zero(k);
    return out;
}

TransposePcaResult fpca_transpose(const FunctionalSample& sample, const VectorXd& grid, int n_components,
                                  int deriv_order) {
    return fpca_transpose(sample.evaluate(grid, deriv_order), grid, n_components, sample.ids);
}

// ---------------------------------------------------------------------------
// k-means

namespace {

struct Run {
    std::vector<int> labels;
    MatrixXd centers;
    double sse = 0.0;
    std::vector<double> history;
};

MatrixXd seed_centers(const MatrixXd& x, int k, Rng& rng) {
    const Eigen::Index n = x.rows();
    std::vector<Eigen::Index> chosen{static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)))};
    VectorXd d2 = (x.rowwise() - x.row(chosen[0])).rowwise().squaredNorm();
    while (static_cast<int>(chosen.size()) < k) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) total += d2(i);
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (d2(i) <= 0.0) continue;
                cum += d2(i);
                pick = i;
                if (cum > target) break;
            }
        } else {
            for (Eigen::Index i = 0; i < n && pick < 0; ++i) {
                if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) pick = i;
            }
        }
        chosen.push_back(pick);
        d2 = d2.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
    }
    MatrixXd centers(k, x.cols());
    for (int c = 0; c < k; ++c) centers.row(c) = x.row(chosen[static_cast<std::size_t>(c)]);
    return centers;
}

std::vector<int> assign(const MatrixXd& x, const MatrixXd& centers) {
    std::vector<int> labels(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < centers.rows(); ++c) {
            const double d = (x.row(i) - centers.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[static_cast<std::size_t>(i)] = best;
    }
    return labels;
}

// Every empty cluster takes the point of the currently largest cluster that
// lies farthest from that cluster's center.
void repair_empty(const MatrixXd& x, const MatrixXd& centers, std::vector<int>& labels, int k) {
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (const int l : labels) ++counts[static_cast<std::size_t>(l)];
    for (int empty = 0; empty < k; ++empty) {
        if (counts[static_cast<std::size_t>(empty)] > 0) continue;
        const int largest = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        Eigen::Index far = -1;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (labels[static_cast<std::size_t>(i)] != largest) continue;
            const double d = (x.row(i) - centers.row(largest)).squaredNorm();
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        labels[static_cast<std::size_t>(far)] = empty;
        --counts[static_cast<std::size_t>(largest)];
        ++counts[static_cast<std::size_t>(empty)];
    }
}

MatrixXd cluster_means(const MatrixXd& x, const std::vector<int>& labels, int k) {
    MatrixXd sums = MatrixXd::Zero(k, x.cols());
    VectorXd counts = VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        sums.row(l) += x.row(i);
        counts(l) += 1.0;
    }
    for (int c = 0; c < k; ++c) sums.row(c) /= counts(c);
    return sums;
}

double total_sse(const MatrixXd& x, const MatrixXd& centers, const std::vector<int>& labels) {
    double sse = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) sse += (x.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    return sse;
}

Run lloyd(const MatrixXd& x, int k, Rng& rng, int max_iterations) {
    Run run;
    run.centers = seed_centers(x, k, rng);
    for (int iter = 0; iter < max_iterations; ++iter) {
        auto labels = assign(x, run.centers);
        repair_empty(x, run.centers, labels, k);
        run.centers = cluster_means(x, labels, k);
        run.sse = total_sse(x, run.centers, labels);
        run.history.push_back(run.sse);
        const bool stable = labels == run.labels;
        run.labels = std::move(labels);
        if (stable) break;
    }
    return run;
}

}  // namespace

KMeansResult kmeans(const MatrixXd& features, int k, int n_restarts, std::uint64_t seed, int max_iterations) {
    const auto n = features.rows();
    if (n < 1) throw EmptyInputError("clustering an empty sample");
    if (k < 1 || k > n) throw ParameterError("k must lie in [1, n_curves] = [1, " + std::to_string(n) + "]");
    if (n_restarts < 1) throw ParameterError("n_restarts must be at least 1");
    if (max_iterations < 1) throw ParameterError("max_iterations must be at least 1");

    KMeansResult best;
    best.sse = std::numeric_limits<double>::infinity();
    for (int r = 0; r < n_restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        Run run = lloyd(features, k, rng, max_iterations);
        if (run.sse < best.sse) {
            best.labels = std::move(run.labels);
            best.centers = std::move(run.centers);
            best.sse = run.sse;
            best.best_restart = r;
            best.sse_history = std::move(run.history);
        }
    }
    return best;
}

namespace {

ClusterResult to_cluster_result(KMeansResult km, const ClusterOptions& options, std::vector<std::string> ids,
                                const VectorXd& grid, MatrixXd centroids) {
    ClusterResult out;
    out.k = options.k;
    out.ids = std::move(ids);
    out.assignments = std::move(km.labels);
    out.grid = grid;
    out.centroids = std::move(centroids);
    out.sse = km.sse;
    out.seed = options.seed;
    out.n_restarts = options.n_restarts;
    out.best_restart = km.best_restart;
    out.sse_history = std::move(km.sse_history);
    return out;
}

}  // namespace

ClusterResult cluster_grid_values(const MatrixXd& values, const VectorXd& grid, std::vector<std::string> ids,
                                  const ClusterOptions& options) {
    if (values.cols() != grid.size()) throw ParameterError("value matrix does not match grid");
    const double root_dt = std::sqrt(uniform_spacing(grid));
    if (ids.empty()) ids = default_ids(values.rows());
    auto km = kmeans(values * root_dt, options.k, options.n_restarts, options.seed, options.max_iterations);
    MatrixXd centroids = km.centers / root_dt;
    return to_cluster_result(std::move(km), options, std::move(ids), grid, std::move(centroids));
}

ClusterResult cluster_curves(const FunctionalSample& sample, const VectorXd& grid, const ClusterOptions& options) {
    if (options.representation == ClusterRepresentation::grid) {
        return cluster_grid_values(sample.evaluate(grid, options.deriv_order), grid, sample.ids, options);
    }
    auto km = kmeans(sample.coefficients, options.k, options.n_restarts, options.seed, options.max_iterations);
    MatrixXd centroids = km.centers * eval_basis(sample.basis, grid).transpose();
    return to_cluster_result(std::move(km), options, sample.ids, grid, std::move(centroids));
}

// ---------------------------------------------------------------------------
// Profiles

std::vector<ClusterProfile> profile_clusters(const ClusterResult& result, const AttributeTable& attributes) {
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(result.k));
    for (std::size_t i = 0; i < result.ids.size(); ++i) {
        const auto row = attributes.find(result.ids[i]);
        if (!row) throw IntegrityError("record '" + result.ids[i] + "' has no attribute row");
        members[static_cast<std::size_t>(result.assignments[i])].push_back(*row);
    }

    std::vector<ClusterProfile> out;
    for (int c = 0; c < result.k; ++c) {
        const auto& rows = members[static_cast<std::size_t>(c)];
        ClusterProfile profile{c, rows.size(), {}, {}};
        const double count = static_cast<double>(rows.size());
        for (const auto& col : attributes.numeric) {
            double sum = 0.0;
            for (const auto r : rows) sum += col.values[r];
            const double mean = rows.empty() ? std::numeric_limits<double>::quiet_NaN() : sum / count;
            double ss = 0.0;
            for (const auto r : rows) ss += (col.values[r] - mean) * (col.values[r] - mean);
            const double sd = rows.size() > 1 ? std::sqrt(ss / (count - 1.0)) : (rows.empty() ? std::numeric_limits<double>::quiet_NaN() : 0.0);
            profile.numeric.push_back({col.name, mean, sd});
        }
        for (const auto& col : attributes.categorical) {
            std::map<std::string, std::size_t> tally;
            for (const auto r : rows) ++tally[col.values[r]];
            std::string mode;
            std::size_t best = 0;
            for (const auto& [value, n] : tally) {
                if (n > best) {
                    best = n;
                    mode = value;
                }
            }
            profile.categorical.push_back({col.name, mode});
        }
        out.push_back(std::move(profile));
    }
    return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ParameterError("labelings differ in length");
    if (a.empty()) throw EmptyInputError("adjusted Rand index of empty labelings");
    if (a.size() == 1) return 1.0;
    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, m] : table) index += pairs(m);
    for (const auto& [key, m] : rows) sum_rows += pairs(m);
    for (const auto& [key, m] : cols) sum_cols += pairs(m);
    const double expected = sum_rows * sum_cols / pairs(static_cast<double>(a.size()));
    const double maximum = 0.5 * (sum_rows + sum_cols);
    if (maximum == expected) return rows.size() == table.size() && cols.size() == table.size() ? 1.0 : 0.0;
    return (index - expected) / (maximum - expected);
}

}  // namespace fdakit
