#include <fdakit/quadrature.hpp>
#include <fdakit/smooth.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fdakit {

VectorXd EventSeries::times() const {
    VectorXd out(static_cast<Eigen::Index>(events.size()));
    for (std::size_t i = 0; i < events.size(); ++i) out(static_cast<Eigen::Index>(i)) = events[i].time;
    return out;
}

VectorXd EventSeries::values() const {
    VectorXd out(static_cast<Eigen::Index>(events.size()));
    for (std::size_t i = 0; i < events.size(); ++i) out(static_cast<Eigen::Index>(i)) = events[i].value;
    return out;
}

// ---------------------------------------------------------------------------
// Raw functionals

RawFunctional::RawFunctional(EventSeries series, RawRule rule, double pre_event_value)
    : series_(std::move(series)), rule_(rule), pre_value_(pre_event_value) {
    if (!std::is_sorted(series_.events.begin(), series_.events.end(),
                        [](const Event& a, const Event& b) { return a.time < b.time; })) {
        throw ParameterError("event times of '" + series_.record_id + "' are not sorted");
    }
}

double RawFunctional::operator()(double t) const {
    const auto& ev = series_.events;
    // first event with time > t
    const auto after = std::upper_bound(ev.begin(), ev.end(), t, [](double x, const Event& e) { return x < e.time; });
    if (after == ev.begin()) return pre_value_;
    const auto last = std::prev(after);
    if (rule_ == RawRule::step || after == ev.end()) return last->value;
    const double span = after->time - last->time;
    const double frac = (t - last->time) / span;
    return last->value + frac * (after->value - last->value);
}

VectorXd RawFunctional::operator()(const VectorXd& grid) const {
    VectorXd out(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) out(i) = (*this)(grid(i));
    return out;
}

RawFunctional interpolate_raw(const EventSeries& series, RawRule rule, double pre_event_value) {
    return {series, rule, pre_event_value};
}

// ---------------------------------------------------------------------------
// Penalized least squares

namespace {

// QR of the stacked least-squares system [Phi; sqrt(lambda) S] with R = S'S.
Eigen::ColPivHouseholderQR<MatrixXd> factor_or_throw(const MatrixXd& design, const MatrixXd& root, double lambda) {
    if (!(lambda >= 0.0)) throw ParameterError("lambda must be non-negative");
    MatrixXd stacked(design.rows() + root.rows(), design.cols());
    stacked << design, std::sqrt(lambda) * root;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(stacked);
    qr.setThreshold(1e-11);
    if (qr.rank() < design.cols()) {
        throw NumericalError("penalized least-squares system is numerically rank deficient at lambda=" +
                             std::to_string(lambda) + "; use lambda > 0 or a smaller basis");
    }
    return qr;
}

VectorXd solve_stacked(const Eigen::ColPivHouseholderQR<MatrixXd>& qr, const VectorXd& values) {
    VectorXd rhs = VectorXd::Zero(qr.rows());
    rhs.head(values.size()) = values;
    return qr.solve(rhs);
}

// Trace of the hat matrix: squared Frobenius norm of the data rows of the thin Q.
double hat_trace(const Eigen::ColPivHouseholderQR<MatrixXd>& qr, Eigen::Index n) {
    const MatrixXd q = qr.householderQ() * MatrixXd::Identity(qr.rows(), qr.cols());
    return q.topRows(n).squaredNorm();
}

// S with S'S = R, dropping the known null space of the roughness penalty
// (polynomials of degree < m for splines, constants for Fourier bases).
MatrixXd penalty_root(const MatrixXd& penalty, const Basis& basis, int penalty_order) {
    const Eigen::Index null_dim =
        basis.family() == BasisFamily::bspline ? penalty_order : std::min<Eigen::Index>(1, penalty.rows());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(penalty);
    const Eigen::Index keep = penalty.rows() - null_dim;
    const VectorXd d = es.eigenvalues().tail(keep).cwiseMax(0.0).cwiseSqrt();
    return d.asDiagonal() * es.eigenvectors().rightCols(keep).transpose();
}

}  // namespace

PenalizedSmoother::PenalizedSmoother(const VectorXd& times, const VectorXd& values, Basis basis, int penalty_order)
    : basis_(std::move(basis)), values_(values) {
    if (times.size() != values.size()) throw ParameterError("times and values differ in length");
    if (penalty_order < 1) throw ParameterError("penalty order must be at least 1");
    if (basis_.family() == BasisFamily::bspline && penalty_order >= basis_.order()) {
        throw ParameterError("penalty order " + std::to_string(penalty_order) + " needs spline order > " +
                             std::to_string(penalty_order));
    }
    std::vector<double> distinct(times.data(), times.data() + times.size());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw InsufficientDataError("penalized fit needs at least two distinct time points");

    design_ = eval_basis(basis_, times);
    penalty_ = penalty_matrix(basis_, penalty_order);
    root_ = penalty_root(penalty_, basis_, penalty_order);
}

VectorXd PenalizedSmoother::coefficients(double lambda) const {
    return solve_stacked(factor_or_throw(design_, root_, lambda), values_);
}

double PenalizedSmoother::degrees_of_freedom(double lambda) const {
    return hat_trace(factor_or_throw(design_, root_, lambda), design_.rows());
}

double PenalizedSmoother::sse(const VectorXd& coefficients) const {
    return (values_ - design_ * coefficients).squaredNorm();
}

GcvScore PenalizedSmoother::gcv(double lambda) const {
    const auto qr = factor_or_throw(design_, root_, lambda);
    const VectorXd coef = solve_stacked(qr, values_);
    return {coef, hat_trace(qr, design_.rows()), sse(coef)};
}

FunctionalDatum fit_penalized(const VectorXd& times, const VectorXd& values, const Basis& basis, double lambda,
                              int penalty_order) {
    const PenalizedSmoother smoother(times, values, basis, penalty_order);
    return {basis, smoother.coefficients(lambda)};
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ParameterError("invalid log-spaced grid");
    if (count == 1) return {lo};
    std::vector<double> out(static_cast<std::size_t>(count));
    const double llo = std::log10(lo);
    const double lhi = std::log10(hi);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, llo + (lhi - llo) * i / (count - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

GcvResult select_lambda_gcv(const VectorXd& times, const VectorXd& values, const Basis& basis,
                            const std::vector<double>& lambda_grid, int penalty_order) {
    if (lambda_grid.empty()) throw ParameterError("lambda grid is empty");
    const PenalizedSmoother smoother(times, values, basis, penalty_order);
    const double n = static_cast<double>(smoother.n_points());
    constexpr double inf = std::numeric_limits<double>::infinity();

    GcvResult out;
    out.lambdas = lambda_grid;
    double best = inf;
    for (const double lambda : lambda_grid) {
        if (!(lambda > 0.0)) throw ParameterError("GCV lambda grid must be positive");
        double score = inf;
        double df = std::numeric_limits<double>::quiet_NaN();
        try {
            const GcvScore fit = smoother.gcv(lambda);
            df = fit.df;
            const double resid_df = n - df;
            if (resid_df > 1e-8 * n) score = n * fit.sse / (resid_df * resid_df);
        } catch (const NumericalError&) {
        }
        out.scores.push_back(score);
        out.dfs.push_back(df);
        if (score < best) {
            best = score;
            out.lambda = lambda;
        }
    }
    if (best == inf) throw NumericalError("GCV undefined at every lambda (df >= n or singular system)");
    return out;
}

// ---------------------------------------------------------------------------
// Monotone smoothing

namespace {

constexpr int kNodesPerPanel = 6;

/**
 * Composite Gauss-Legendre integrals of exp(w) and exp(w) * phi_k from the
 * domain start to a fixed set of evaluation points.
 */
class ExpIntegrator {
  public:
    ExpIntegrator(const Basis& basis, const VectorXd& points) : basis_(basis) {
        const double a = basis.lower();
        width_ = basis.period() / kMonotonePanels;
        std::vector<double> breaks;
        for (int i = 0; i <= kMonotonePanels; ++i) breaks.push_back(a + basis.period() * i / kMonotonePanels);
        breaks.back() = basis.upper();
        const auto rule = composite_rule(breaks, kNodesPerPanel);
        node_weights_ = rule.weights;
        node_basis_ = eval_basis(basis, rule.nodes);

        const auto ref = gauss_legendre<double>(kNodesPerPanel);
        panel_.resize(points.size());
        part_weights_.resize(points.size() * kNodesPerPanel);
        VectorXd part_nodes(points.size() * kNodesPerPanel);
        for (Eigen::Index i = 0; i < points.size(); ++i) {
            const double t = points(i);
            if (!basis.contains(t)) throw DomainError("monotone fit point outside the w basis domain");
            int p = static_cast<int>(std::floor((t - a) / width_));
            p = std::clamp(p, 0, kMonotonePanels - 1);
            panel_[static_cast<std::size_t>(i)] = p;
            const auto mapped = map_rule(ref, breaks[static_cast<std::size_t>(p)], t);
            part_nodes.segment(i * kNodesPerPanel, kNodesPerPanel) = mapped.nodes;
            part_weights_.segment(i * kNodesPerPanel, kNodesPerPanel) = mapped.weights;
        }
        part_basis_ = eval_basis(basis, part_nodes);
    }

    /// h_i = integral_a^{t_i} exp(w); jacobian (optional) = d h / d c.
    VectorXd integrate(const VectorXd& c, MatrixXd* jacobian) const {
        const VectorXd weighted = node_weights_.array() * (node_basis_ * c).array().exp();
        const VectorXd part = part_weights_.array() * (part_basis_ * c).array().exp();
        // cumulative panel sums
        VectorXd cum(kMonotonePanels + 1);
        cum(0) = 0.0;
        for (int p = 0; p < kMonotonePanels; ++p) cum(p + 1) = cum(p) + weighted.segment(p * kNodesPerPanel, kNodesPerPanel).sum();

        const auto n = static_cast<Eigen::Index>(panel_.size());
        VectorXd h(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            h(i) = cum(panel_[static_cast<std::size_t>(i)]) + part.segment(i * kNodesPerPanel, kNodesPerPanel).sum();
        }
        if (jacobian != nullptr) {
            const Eigen::Index nb = node_basis_.cols();
            MatrixXd cum_j = MatrixXd::Zero(kMonotonePanels + 1, nb);
            for (int p = 0; p < kMonotonePanels; ++p) {
                cum_j.row(p + 1) = cum_j.row(p) + weighted.segment(p * kNodesPerPanel, kNodesPerPanel).transpose() *
                                                      node_basis_.middleRows(p * kNodesPerPanel, kNodesPerPanel);
            }
            jacobian->resize(n, nb);
            for (Eigen::Index i = 0; i < n; ++i) {
                jacobian->row(i) = cum_j.row(panel_[static_cast<std::size_t>(i)]) +
                                   part.segment(i * kNodesPerPanel, kNodesPerPanel).transpose() *
                                       part_basis_.middleRows(i * kNodesPerPanel, kNodesPerPanel);
            }
        }
        return h;
    }

  private:
    Basis basis_;
    double width_ = 0.0;
    VectorXd node_weights_;
    MatrixXd node_basis_;
    std::vector<int> panel_;
    VectorXd part_weights_;
    MatrixXd part_basis_;
};

constexpr double kMinSlope = 1e-8;

struct LinearPart {
    double beta0 = 0.0;
    double beta1 = kMinSlope;
};

/// Least squares of y on [1, h] with the slope held at or above kMinSlope.
LinearPart solve_linear_part(const VectorXd& h, const VectorXd& y) {
    const double hbar = h.mean();
    const double ybar = y.mean();
    const VectorXd hc = h.array() - hbar;
    const double shh = hc.squaredNorm();
    LinearPart out;
    if (shh > 0.0) out.beta1 = std::max(hc.dot(y.array().matrix() - VectorXd::Constant(y.size(), ybar)) / shh, kMinSlope);
    out.beta0 = ybar - out.beta1 * hbar;
    return out;
}

}  // namespace

MonotoneFit fit_monotone(const VectorXd& times, const VectorXd& values, const Basis& w_basis, double lambda) {
    if (times.size() != values.size()) throw ParameterError("times and values differ in length");
    if (times.size() < 3) throw InsufficientDataError("monotone smoothing needs at least 3 points");
    if (!(lambda >= 0.0)) throw ParameterError("lambda must be non-negative");
    if (!values.allFinite() || !times.allFinite()) throw ParameterError("non-finite monotone fit input");
    if (w_basis.family() == BasisFamily::bspline && w_basis.order() < 3) {
        throw ParameterError("monotone smoothing penalizes w'' and needs spline order >= 3");
    }

    const double tbar = times.mean();
    const double ybar = values.mean();
    const VectorXd tc = times.array() - tbar;
    const double stt = tc.squaredNorm();
    if (!(stt > 0.0)) throw InsufficientDataError("monotone smoothing needs distinct time points");
    const double slope = tc.dot((values.array() - ybar).matrix()) / stt;
    const double y_scale = std::max(1.0, values.cwiseAbs().maxCoeff());
    const double t_range = times.maxCoeff() - times.minCoeff();
    if (slope * t_range < -1e-10 * y_scale) {
        throw MonotoneDirectionError("least-squares trend is decreasing; negate the values to fit a monotone curve");
    }

    const ExpIntegrator integrator(w_basis, times);
    const MatrixXd penalty = penalty_matrix(w_basis, 2);
    const Eigen::Index nb = w_basis.size();

    auto objective = [&](const VectorXd& c, LinearPart& lin, VectorXd& resid, MatrixXd* jac) {
        const VectorXd h = integrator.integrate(c, jac);
        lin = solve_linear_part(h, values);
        resid = values - (lin.beta0 + lin.beta1 * h.array()).matrix();
        return resid.squaredNorm() + lambda * c.dot(penalty * c);
    };

    VectorXd c = VectorXd::Zero(nb);
    // starting linear part; replaced by the exact solve on the first pass
    LinearPart lin{values(0), std::max(slope, kMinSlope)};
    VectorXd resid;
    MatrixXd jac;
    double obj = objective(c, lin, resid, &jac);

    int iter = 0;
    for (; iter < kMonotoneMaxIterations; ++iter) {
        // Variable-projection Jacobian: the linear part is re-solved exactly
        // for every w, so project out span{1, h}.
        const VectorXd h = integrator.integrate(c, nullptr);
        MatrixXd basis_h(h.size(), 2);
        basis_h.col(0).setOnes();
        basis_h.col(1) = h;
        const Eigen::HouseholderQR<MatrixXd> qr(basis_h);
        const MatrixXd q = qr.householderQ() * MatrixXd::Identity(h.size(), 2);
        MatrixXd jr = lin.beta1 * jac;
        jr -= q * (q.transpose() * jr);

        MatrixXd system = jr.transpose() * jr + lambda * penalty;
        const double damping = 1e-10 * std::max(system.diagonal().maxCoeff(), 1e-300);
        system.diagonal().array() += damping;
        const VectorXd grad = jr.transpose() * resid - lambda * (penalty * c);
        VectorXd step = system.ldlt().solve(grad);
        if (!step.allFinite()) break;
        for (Eigen::Index k = 0; k < nb; ++k) {
            const bool at_upper = c(k) >= kMonotoneCoefficientBound && step(k) > 0.0;
            const bool at_lower = c(k) <= -kMonotoneCoefficientBound && step(k) < 0.0;
            if (at_upper || at_lower) step(k) = 0.0;
        }

        bool improved = false;
        double scale = 1.0;
        for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
            const VectorXd trial =
                (c + scale * step).cwiseMax(-kMonotoneCoefficientBound).cwiseMin(kMonotoneCoefficientBound);
            LinearPart trial_lin;
            VectorXd trial_resid;
            MatrixXd trial_jac;
            const double trial_obj = objective(trial, trial_lin, trial_resid, &trial_jac);
            if (trial_obj < obj) {
                const double gain = obj - trial_obj;
                c = trial;
                lin = trial_lin;
                resid = std::move(trial_resid);
                jac = std::move(trial_jac);
                obj = trial_obj;
                improved = gain >= 1e-10 * (1.0 + obj);
                break;
            }
        }
        if (!improved) {
            ++iter;
            break;
        }
    }

    return MonotoneFit{lin.beta0, std::log(lin.beta1), FunctionalDatum(w_basis, c, "w"), lambda, obj, iter};
}

VectorXd MonotoneFit::evaluate(const VectorXd& grid, int deriv_order) const {
    if (deriv_order < 0 || deriv_order > 3) throw ParameterError("monotone fits support derivative orders 0..3");
    const double beta1 = slope_scale();
    if (deriv_order == 0) {
        const ExpIntegrator integrator(w.basis, grid);
        return (beta0 + beta1 * integrator.integrate(w.coefficients, nullptr).array()).matrix();
    }
    const VectorXd first = beta1 * eval_curve(w, grid, 0).array().exp();
    if (deriv_order == 1) return first;
    const VectorXd w1 = eval_curve(w, grid, 1);
    if (deriv_order == 2) return first.cwiseProduct(w1);
    const VectorXd w2 = eval_curve(w, grid, 2);
    return first.array() * (w2.array() + w1.array().square());
}

// ---------------------------------------------------------------------------
// Clocks

Clock::Clock(ClockKind kind, std::vector<double> xs, std::vector<double> ys)
    : kind_(kind), xs_(std::move(xs)), ys_(std::move(ys)) {
    for (std::size_t i = 1; i < xs_.size(); ++i) {
        if (!(xs_[i] > xs_[i - 1]) || !(ys_[i] > ys_[i - 1])) {
            throw NumericalError("clock map is not strictly increasing");
        }
    }
}

Clock Clock::linear() { return {ClockKind::linear, {0.0, 1.0}, {0.0, 1.0}}; }

Clock Clock::activity(std::span<const double> pooled_normalized_times) {
    std::vector<double> sorted(pooled_normalized_times.begin(), pooled_normalized_times.end());
    for (const double u : sorted) {
        if (!(u >= 0.0 && u <= 1.0)) throw ParameterError("pooled event times must be normalized to [0, 1]");
    }
    std::sort(sorted.begin(), sorted.end());
    const double denom = static_cast<double>(sorted.size()) + 1.0;
    std::vector<double> xs{0.0};
    std::vector<double> ys{0.0};
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double u = sorted[i];
        if (u > 0.0 && u < 1.0) {
            xs.push_back(u);
            ys.push_back(static_cast<double>(j) / denom);
        }
        i = j;
    }
    xs.push_back(1.0);
    ys.push_back(1.0);
    return {ClockKind::activity, std::move(xs), std::move(ys)};
}

double Clock::operator()(double u) const {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), u);
    const auto hi = static_cast<std::size_t>(it - xs_.begin());
    const std::size_t lo = hi - 1;
    const double frac = (u - xs_[lo]) / (xs_[hi] - xs_[lo]);
    return ys_[lo] + frac * (ys_[hi] - ys_[lo]);
}

EventSeries time_rescale(const EventSeries& series, const Clock& clock) {
    if (!(series.duration > 0.0)) throw ParameterError("series duration must be positive");
    EventSeries out{series.record_id, {}, 1.0};
    out.events.reserve(series.events.size());
    double previous = -1.0;
    for (const auto& e : series.events) {
        const double mapped = clock(e.time / series.duration);
        if (mapped < previous) throw NumericalError("clock reordered events of '" + series.record_id + "'");
        previous = mapped;
        out.events.push_back({mapped, e.value});
    }
    return out;
}

}  // namespace fdakit
