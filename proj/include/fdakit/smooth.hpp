#pragma once

// Recovery of functional objects from irregular event series: raw
// interpolants, penalized least squares with GCV, monotone smoothing and
// time-axis clocks.

#include <fdakit/fdcore.hpp>

#include <span>
#include <string>
#include <vector>

namespace fdakit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Event {
    double time = 0.0;
    double value = 0.0;
};

/// One record's event stream on [0, duration], sorted by time.
struct EventSeries {
    std::string record_id;
    std::vector<Event> events;
    double duration = 1.0;

    VectorXd times() const;
    VectorXd values() const;
};

enum class RawRule { step, linear };

/**
 * Interpolant of an event series. The step rule carries the last observation
 * forward (right-continuous); the linear rule joins events with segments and
 * holds the last value. Before the first event the function equals the
 * caller-supplied pre-event value.
 */
class RawFunctional {
  public:
    RawFunctional(EventSeries series, RawRule rule, double pre_event_value);

    double operator()(double t) const;
    VectorXd operator()(const VectorXd& grid) const;

    const EventSeries& series() const noexcept { return series_; }
    RawRule rule() const noexcept { return rule_; }
    double pre_event_value() const noexcept { return pre_value_; }

  private:
    EventSeries series_;
    RawRule rule_;
    double pre_value_;
};

RawFunctional interpolate_raw(const EventSeries& series, RawRule rule, double pre_event_value);

/// Fit quantities at one lambda.
struct GcvScore {
    VectorXd coefficients;
    double df = 0.0;
    double sse = 0.0;
};

/**
 * Penalized least-squares smoother for fixed data and basis. Coefficients
 * solve (Phi' Phi + lambda R) c = Phi' y with R the integrated squared
 * m-th derivative Gram matrix.
 */
class PenalizedSmoother {
  public:
    PenalizedSmoother(const VectorXd& times, const VectorXd& values, Basis basis, int penalty_order);

    VectorXd coefficients(double lambda) const;
    /// Trace of the hat operator Phi (Phi' Phi + lambda R)^-1 Phi'.
    double degrees_of_freedom(double lambda) const;
    double sse(const VectorXd& coefficients) const;
    GcvScore gcv(double lambda) const;

    const Basis& basis() const noexcept { return basis_; }
    const MatrixXd& design() const noexcept { return design_; }
    const MatrixXd& penalty() const noexcept { return penalty_; }
    Eigen::Index n_points() const noexcept { return values_.size(); }

  private:
    Basis basis_;
    VectorXd values_;
    MatrixXd design_;
    MatrixXd penalty_;
    MatrixXd root_;  ///< S with S' S = R, penalty null space removed
};

FunctionalDatum fit_penalized(const VectorXd& times, const VectorXd& values, const Basis& basis, double lambda,
                              int penalty_order = 2);

struct GcvResult {
    double lambda = 0.0;
    std::vector<double> lambdas;
    std::vector<double> scores;  ///< +inf where df >= n or the system is singular
    std::vector<double> dfs;
};

/// Log-spaced values from lo to hi inclusive.
std::vector<double> log_spaced(double lo, double hi, int count);

/// GCV(lambda) = n SSE / (n - df)^2 over the grid; ties go to the smaller lambda.
GcvResult select_lambda_gcv(const VectorXd& times, const VectorXd& values, const Basis& basis,
                            const std::vector<double>& lambda_grid, int penalty_order = 2);

/**
 * Monotone smooth f(t) = beta0 + exp(gamma) * integral_a^t exp(w(u)) du.
 * `w` is expanded in its own basis and penalized by the integrated squared
 * second derivative.
 */
struct MonotoneFit {
    double beta0 = 0.0;
    double gamma = 0.0;
    FunctionalDatum w;
    double lambda = 0.0;
    double objective = 0.0;
    int iterations = 0;

    double slope_scale() const { return std::exp(gamma); }
    /// f or its derivatives (deriv_order <= 3) on the grid.
    VectorXd evaluate(const VectorXd& grid, int deriv_order = 0) const;
};

inline constexpr int kMonotonePanels = 200;
inline constexpr int kMonotoneMaxIterations = 200;
inline constexpr double kMonotoneCoefficientBound = 20.0;

MonotoneFit fit_monotone(const VectorXd& times, const VectorXd& values, const Basis& w_basis, double lambda);

enum class ClockKind { linear, activity };

/**
 * Strictly increasing map of normalized time u = t / duration onto [0, 1].
 * The activity clock is the pooled empirical CDF of normalized event times,
 * interpolated linearly between (0, 0), (u_(j), C_j / (n + 1)) and (1, 1).
 */
class Clock {
  public:
    static Clock linear();
    static Clock activity(std::span<const double> pooled_normalized_times);

    ClockKind kind() const noexcept { return kind_; }
    double operator()(double normalized_time) const;

    const std::vector<double>& abscissae() const noexcept { return xs_; }
    const std::vector<double>& ordinates() const noexcept { return ys_; }

  private:
    Clock(ClockKind kind, std::vector<double> xs, std::vector<double> ys);

    ClockKind kind_;
    std::vector<double> xs_;
    std::vector<double> ys_;
};

/// Maps event times through the clock; the result has duration 1.
EventSeries time_rescale(const EventSeries& series, const Clock& clock);

}  // namespace fdakit
