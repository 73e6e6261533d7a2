#include "oracles.hpp"

#include <fdakit/fdcore.hpp>
#include <fdakit/quadrature.hpp>

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace fdakit;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using std::numbers::pi;

TEST(BsplineBasis, InteriorKnotsEquallySpaced) {
    const Basis b = make_bspline_basis(0.0, 1.0, 6, 4);
    const auto& k = b.knots();
    ASSERT_EQ(k.size(), 10u);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(k[static_cast<std::size_t>(i)], 0.0);
        EXPECT_EQ(k[static_cast<std::size_t>(6 + i)], 1.0);
    }
    EXPECT_NEAR(k[4], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(k[5], 2.0 / 3.0, 1e-15);
}

TEST(BsplineBasis, CubicWithoutInteriorKnotsIsBernstein) {
    const Basis b = make_bspline_basis(0.0, 1.0, 4, 4);
    for (const double t : {0.0, 0.13, 0.5, 0.77, 1.0}) {
        const VectorXd v = b.evaluate(t);
        const double s = 1.0 - t;
        const double bern[4] = {s * s * s, 3 * t * s * s, 3 * t * t * s, t * t * t};
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(v(k), bern[k], 1e-15) << "t=" << t << " k=" << k;
    }
    const VectorXd mid = b.evaluate(0.5);
    EXPECT_NEAR(mid(0), 0.125, 1e-15);
    EXPECT_NEAR(mid(1), 0.375, 1e-15);
}

TEST(BsplineBasis, InvalidParameters) {
    EXPECT_THROW(make_bspline_basis(0.0, 1.0, 3, 4), ParameterError);
    EXPECT_THROW(make_bspline_basis(1.0, 1.0, 6, 4), ParameterError);
    EXPECT_THROW(make_bspline_basis(0.0, 1.0, 6, 0), ParameterError);
}

TEST(BsplineBasis, MatchesCoxDeBoorOracle) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int order = 1; order <= 6; ++order) {
        for (int nb = order; nb <= order + 7; ++nb) {
            const Basis b = make_bspline_basis(-1.0, 2.0, nb, order);
            VectorXd t(25);
            for (int i = 0; i < 25; ++i) t(i) = -1.0 + 3.0 * unif(gen);
            t(0) = -1.0;
            t(1) = 2.0;
            for (int d = 0; d < order; ++d) {
                const MatrixXd ours = eval_basis(b, t, d);
                const MatrixXd ref = oracle::bspline_design(-1.0, 2.0, nb, order, t, d);
                const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
                EXPECT_LE((ours - ref).cwiseAbs().maxCoeff(), 1e-11 * scale)
                    << "order " << order << " n_basis " << nb << " deriv " << d;
            }
        }
    }
}

TEST(BsplineBasis, PartitionOfUnityRandomDraws) {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> order_d(1, 6);
    std::uniform_int_distribution<int> extra_d(0, 15);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int draw = 0; draw < 1000; ++draw) {
        const int order = order_d(gen);
        const double a = -5.0 + 10.0 * unif(gen);
        const double b = a + 0.1 + 5.0 * unif(gen);
        const Basis basis = make_bspline_basis(a, b, order + extra_d(gen), order);
        const double t = a + (b - a) * unif(gen);
        const VectorXd v = basis.evaluate(t);
        EXPECT_LE(std::abs(v.sum() - 1.0), 1e-10);
        EXPECT_GE(v.minCoeff(), 0.0);
    }
}

TEST(BsplineBasis, DerivativeRowsSumToZeroAndHighOrderVanishes) {
    const Basis b = make_bspline_basis(0.0, 1.0, 9, 4);
    const VectorXd grid = uniform_grid(0.0, 1.0, 37);
    const MatrixXd d1 = eval_basis(b, grid, 1);
    EXPECT_LE(d1.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(eval_basis(b, grid, 4).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BsplineBasis, OutOfDomainIsError) {
    const Basis b = make_bspline_basis(0.0, 1.0, 6, 4);
    EXPECT_THROW(b.evaluate(1.0 + 1e-9), DomainError);
    EXPECT_THROW(b.evaluate(-1e-9), DomainError);
    VectorXd grid(2);
    grid << 0.5, 1.5;
    EXPECT_THROW(eval_basis(b, grid), DomainError);
}

TEST(BsplineBasis, CubicDerivativeExact) {
    // the cubic lies in the spline space, so least squares reproduces it exactly
    const Basis b = make_bspline_basis(0.0, 1.0, 10, 4);
    auto f = [](double t) { return 1.0 - 2.0 * t + 3.0 * t * t - 0.5 * t * t * t; };
    auto fp = [](double t) { return -2.0 + 6.0 * t - 1.5 * t * t; };
    const VectorXd pts = uniform_grid(0.0, 1.0, 40);
    VectorXd y(pts.size());
    for (Eigen::Index i = 0; i < pts.size(); ++i) y(i) = f(pts(i));
    const MatrixXd phi = eval_basis(b, pts);
    const FunctionalDatum d(b, phi.colPivHouseholderQr().solve(y));
    const VectorXd grid = uniform_grid(0.0, 1.0, 101);
    const VectorXd v = eval_curve(d, grid, 1);
    for (Eigen::Index i = 0; i < grid.size(); ++i) EXPECT_NEAR(v(i), fp(grid(i)), 1e-8);
}

TEST(FourierBasis, RoundsUpToOdd) {
    EXPECT_EQ(make_fourier_basis(0.0, 1.0, 4).size(), 5);
    EXPECT_EQ(make_fourier_basis(0.0, 1.0, 5).size(), 5);
    EXPECT_EQ(make_fourier_basis(0.0, 1.0, 1).size(), 1);
    EXPECT_THROW(make_fourier_basis(2.0, 2.0, 3), ParameterError);
}

TEST(FourierBasis, ValuesAtZero) {
    const VectorXd v = make_fourier_basis(0.0, 1.0, 3).evaluate(0.0);
    EXPECT_DOUBLE_EQ(v(0), 1.0);
    EXPECT_NEAR(v(1), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(v(2), 1.0);
}

TEST(FourierBasis, DerivativeOfSineAtQuarter) {
    const VectorXd v = make_fourier_basis(0.0, 1.0, 3).evaluate(0.25, 1);
    EXPECT_NEAR(v(1), 0.0, 1e-12);
    EXPECT_NEAR(v(2), -2.0 * pi, 1e-12);
    EXPECT_EQ(v(0), 0.0);
}

TEST(FourierBasis, Orthogonality) {
    const Basis b = make_fourier_basis(0.0, 1.0, 9);
    const auto rule = map_rule(gauss_legendre<double>(40), 0.0, 1.0);
    const MatrixXd phi = eval_basis(b, rule.nodes);
    const MatrixXd gram = phi.transpose() * rule.weights.asDiagonal() * phi;
    for (int j = 0; j < 9; ++j) {
        for (int k = 0; k < 9; ++k) {
            if (j != k) EXPECT_LE(std::abs(gram(j, k)), 1e-10);
        }
    }
    EXPECT_NEAR(gram(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(gram(1, 1), 0.5, 1e-12);
}

TEST(FourierBasis, DerivativesMatchFiniteDifferences) {
    const Basis b = make_fourier_basis(0.0, 2.0, 7);
    const double t = 0.731;
    const double h = 1e-5;
    for (int d = 1; d <= 3; ++d) {
        const VectorXd fd = (b.evaluate(t + h, d - 1) - b.evaluate(t - h, d - 1)) / (2 * h);
        const VectorXd ex = b.evaluate(t, d);
        EXPECT_LE((fd - ex).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, ex.cwiseAbs().maxCoeff()));
    }
}

TEST(FourierBasis, PeriodicityProperty) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int draw = 0; draw < 200; ++draw) {
        const double a = unif(gen);
        const double period = 0.5 + 2.0 * unif(gen);
        const Basis b = make_fourier_basis(a, a + period, 7);
        const double t = a + 0.999 * period * unif(gen);
        // t + period leaves the domain, so compare against the closed form directly
        const double omega = 2 * pi / period;
        const VectorXd v = b.evaluate(t);
        for (int k = 1; k <= 3; ++k) {
            EXPECT_NEAR(v(2 * k - 1), std::sin(k * omega * (t + period)), 1e-10);
            EXPECT_NEAR(v(2 * k), std::cos(k * omega * (t + period)), 1e-10);
        }
        EXPECT_LE((b.evaluate(a) - b.evaluate(a + period)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(EvalCurve, ConstantAndZeroCoefficients) {
    const Basis b = make_bspline_basis(0.0, 1.0, 8, 4);
    const VectorXd grid = uniform_grid(0.0, 1.0, 51);
    const VectorXd c = eval_curve(FunctionalDatum(b, VectorXd::Constant(8, 3.5)), grid);
    EXPECT_LE((c.array() - 3.5).abs().maxCoeff(), 1e-13);
    EXPECT_EQ(eval_curve(FunctionalDatum(b, VectorXd::Zero(8)), grid).cwiseAbs().maxCoeff(), 0.0);
}

TEST(EvalCurve, LinearityProperty) {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> norm;
    const Basis b = make_bspline_basis(0.0, 1.0, 12, 4);
    const VectorXd grid = uniform_grid(0.0, 1.0, 101);
    for (int draw = 0; draw < 100; ++draw) {
        VectorXd c1(12), c2(12);
        for (int k = 0; k < 12; ++k) {
            c1(k) = norm(gen);
            c2(k) = norm(gen);
        }
        const double alpha = norm(gen);
        for (int d = 0; d <= 2; ++d) {
            const VectorXd lhs = eval_curve(FunctionalDatum(b, alpha * c1 + c2), grid, d);
            const VectorXd rhs = alpha * eval_curve(FunctionalDatum(b, c1), grid, d) + eval_curve(FunctionalDatum(b, c2), grid, d);
            const double scale = d == 0 ? 1.0 : std::max(1.0, rhs.cwiseAbs().maxCoeff());
            EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * scale);
        }
    }
}

TEST(FunctionalDatum, RejectsBadCoefficients) {
    const Basis b = make_bspline_basis(0.0, 1.0, 6, 4);
    EXPECT_THROW(FunctionalDatum(b, VectorXd::Zero(5)), ParameterError);
    VectorXd c = VectorXd::Zero(6);
    c(2) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(FunctionalDatum(b, c), ParameterError);
}

TEST(MeanCurve, Cases) {
    const Basis b = make_bspline_basis(0.0, 1.0, 6, 4);
    MatrixXd c(1, 6);
    c << 1, 2, 3, 4, 5, 6;
    EXPECT_EQ(mean_curve(FunctionalSample(b, c)).coefficients, VectorXd(c.row(0).transpose()));

    MatrixXd pm(2, 6);
    pm.row(0) = c.row(0);
    pm.row(1) = -c.row(0);
    EXPECT_EQ(mean_curve(FunctionalSample(b, pm)).coefficients.cwiseAbs().maxCoeff(), 0.0);

    EXPECT_THROW(mean_curve(FunctionalSample(b, MatrixXd(0, 6))), EmptyInputError);
}

TEST(MeanCurve, CommutesWithEvaluation) {
    std::mt19937_64 gen(9);
    std::normal_distribution<double> norm;
    const Basis b = make_bspline_basis(0.0, 1.0, 10, 4);
    MatrixXd c(17, 10);
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = norm(gen);
    const FunctionalSample s(b, c);
    const VectorXd grid = uniform_grid(0.0, 1.0, 101);
    const VectorXd lhs = eval_curve(mean_curve(s), grid);
    const VectorXd rhs = s.evaluate(grid).colwise().mean().transpose();
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PointwiseQuantiles, Cases) {
    const Basis b = make_bspline_basis(0.0, 1.0, 5, 4);
    const VectorXd grid = uniform_grid(0.0, 1.0, 11);
    MatrixXd c(3, 5);
    c.row(0).setConstant(1.0);
    c.row(1).setConstant(3.0);
    c.row(2).setConstant(2.0);
    const RiverPlot rp = pointwise_quantiles(FunctionalSample(b, c), grid, {0.5});
    EXPECT_LE((rp.values.row(0).array() - 2.0).abs().maxCoeff(), 1e-13);

    const RiverPlot one = pointwise_quantiles(FunctionalSample(b, MatrixXd(c.topRows(1))), grid, {0.1, 0.5, 0.9});
    for (int q = 0; q < 3; ++q) EXPECT_LE((one.values.row(q).array() - 1.0).abs().maxCoeff(), 1e-13);

    EXPECT_THROW(pointwise_quantiles(FunctionalSample(b, c), grid, {0.0}), ParameterError);
    EXPECT_THROW(pointwise_quantiles(FunctionalSample(b, c), grid, {1.0}), ParameterError);
}

TEST(PointwiseQuantiles, LinearInterpolationAndMonotoneInProb) {
    std::mt19937_64 gen(13);
    std::normal_distribution<double> norm;
    MatrixXd v(23, 15);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = norm(gen);
    const VectorXd grid = uniform_grid(0.0, 1.0, 15);
    const std::vector<double> probs{0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95};
    const RiverPlot rp = pointwise_quantiles(v, grid, probs);
    for (Eigen::Index j = 0; j < 15; ++j) {
        std::vector<double> col(v.col(j).data(), v.col(j).data() + 23);
        std::sort(col.begin(), col.end());
        for (std::size_t q = 0; q < probs.size(); ++q) {
            const double h = 22 * probs[q];
            const auto lo = static_cast<std::size_t>(h);
            const double expect = col[lo] + (h - static_cast<double>(lo)) * (col[lo + 1] - col[lo]);
            EXPECT_NEAR(rp.values(static_cast<Eigen::Index>(q), j), expect, 1e-14);
            if (q > 0) EXPECT_GE(rp.values(static_cast<Eigen::Index>(q), j), rp.values(static_cast<Eigen::Index>(q) - 1, j));
        }
    }
}

TEST(Quadrature, GaussLegendreIntegratesPolynomials) {
    for (int n = 1; n <= 12; ++n) {
        const auto rule = gauss_legendre<double>(n);
        for (int deg = 0; deg < 2 * n; ++deg) {
            const double exact = deg % 2 == 1 ? 0.0 : 2.0 / (deg + 1);
            const double approx = (rule.nodes.array().pow(deg) * rule.weights.array()).sum();
            EXPECT_NEAR(approx, exact, 1e-13) << "n=" << n << " deg=" << deg;
        }
    }
}

TEST(Quadrature, PenaltyMatchesIndependentOracle) {
    for (int order = 3; order <= 5; ++order) {
        for (int m = 1; m < order; ++m) {
            const Basis b = make_bspline_basis(0.0, 2.0, order + 6, order);
            const MatrixXd ours = penalty_matrix(b, m);
            const MatrixXd ref = oracle::bspline_penalty(0.0, 2.0, order + 6, order, m);
            EXPECT_LE((ours - ref).norm(), 1e-10 * ref.norm()) << "order " << order << " m " << m;
        }
    }
}

TEST(Quadrature, FourierPenaltyIsDiagonal) {
    const Basis b = make_fourier_basis(0.0, 1.0, 7);
    const MatrixXd r = penalty_matrix(b, 2);
    for (int k = 1; k <= 3; ++k) {
        const double w = std::pow(2 * pi * k, 4) / 2.0;
        EXPECT_NEAR(r(2 * k - 1, 2 * k - 1), w, 1e-8 * w);
        EXPECT_NEAR(r(2 * k, 2 * k), w, 1e-8 * w);
    }
    EXPECT_LE(std::abs(r(1, 2)), 1e-8);
    EXPECT_EQ(r(0, 0), 0.0);
}

TEST(Templated, LongDoubleEvaluation) {
    const auto b = make_bspline_basis<long double>(0.0L, 1.0L, 7, 4);
    const auto v = b.evaluate(0.3L);
    EXPECT_NEAR(static_cast<double>(v.sum()), 1.0, 1e-15);
}

TEST(CurveEvaluation, DifferencedCoefficientsMatchCoxDeBoorOracle) {
    std::mt19937_64 gen(13);
    std::normal_distribution<double> norm;
    for (int order = 1; order <= 6; ++order) {
        const int nb = order + 5;
        const Basis b = make_bspline_basis(-1.0, 2.0, nb, order);
        MatrixXd c(3, nb);
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = norm(gen);
        const VectorXd grid = uniform_grid(-1.0, 2.0, 37);
        for (int r = 0; r <= order; ++r) {
            const MatrixXd got = FunctionalSample(b, c).evaluate(grid, r);
            const MatrixXd ref = c * oracle::bspline_design(-1.0, 2.0, nb, order, grid, r).transpose();
            EXPECT_LE((got - ref).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, ref.cwiseAbs().maxCoeff()))
                << "order " << order << " deriv " << r;
        }
    }
}

TEST(CurveEvaluation, ConstantCurveHasExactlyZeroDerivatives) {
    const Basis b = make_bspline_basis(0.0, 7.0, 12, 4);
    const FunctionalDatum f(b, VectorXd::Constant(12, 37.25));
    const VectorXd grid = uniform_grid(0.0, 7.0, 101);
    for (int r = 1; r <= 4; ++r) EXPECT_EQ(eval_curve(f, grid, r).cwiseAbs().maxCoeff(), 0.0) << r;
    EXPECT_THROW(eval_curve(f, grid, -1), ParameterError);
    VectorXd outside(1);
    outside << 7.5;
    EXPECT_THROW(eval_curve(f, outside, 1), DomainError);
}
