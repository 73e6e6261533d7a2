#include "commands.hpp"

#include "curves.hpp"
#include "svg.hpp"

#include <fdakit/dataio.hpp>
#include <fdakit/explore.hpp>
#include <fdakit/model.hpp>
#include <fdakit/smooth.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace fdakit::cli {

namespace fs = std::filesystem;

namespace {

/// Bad flag combination detected after parsing; maps to exit code 1.
class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class Manifest {
  public:
    template <typename T>
    void set(const std::string& key, const T& value) {
        std::ostringstream os;
        if constexpr (std::is_floating_point_v<T>) {
            os << format_number(value);
        } else {
            os << value;
        }
        entries_.emplace_back(key, os.str());
    }

    void write(const fs::path& dir) const {
        std::ofstream out(dir / "manifest.txt", std::ios::binary);
        for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
    }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

void prepare_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IntegrityError("cannot create output directory " + dir.string());
}

std::ofstream open_csv(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IntegrityError("cannot write " + path.string());
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_probs(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size() || !(v > 0.0 && v < 1.0)) {
            throw UsageError("--probs: \"" + item + "\" is not a probability in (0, 1)");
        }
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("--probs: at least one level is required");
    return out;
}

AttributeTable read_attributes(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IntegrityError("cannot open attributes file " + path.string());
    std::istringstream no_bids(std::string(kBidsHeader) + "\n");
    return parse_dataset(no_bids, in).attribute_table();
}

void require_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IntegrityError("missing input directory " + dir.string());
}

void require_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw IntegrityError("missing input file " + path.string());
}

// ---------------------------------------------------------------------------
// Option sets

struct SynthArgs {
    SynthConfig config;
    std::string out;
};

struct SmoothArgs {
    std::string bids;
    std::string attributes;
    std::string out;
    std::string basis = "bspline";
    int n_basis = 12;
    int order = 4;
    std::string lambda = "gcv";
    double lambda_min = 1e-8;
    double lambda_max = 1e2;
    int lambda_count = 21;
    int penalty_order = 2;
    int grid = 101;
    std::string clock = "linear";
    std::string method = "penalized";
    std::string raw = "step";
    double monotone_lambda = 1e-6;
};

struct AnalysisArgs {
    std::string smooth_dir;
    std::string attributes;
    std::string out;
    int grid = 101;
    int deriv_order = 0;
    // riverplot
    std::string probs = "0.1,0.25,0.5,0.75,0.9";
    // fpca
    int n_components = 3;
    // cluster
    int k = 3;
    int restarts = 10;
    std::uint64_t seed = 42;
    std::string representation = "grid";
    // regress
    std::string covariates = "opening_bid,seller_rating";
    // pda
    int order = 2;
    std::string weights = "constant";
};

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const SynthArgs& args, std::ostream& out) {
    const Dataset data = synth_dataset(args.config);
    const fs::path dir(args.out);
    prepare_out_dir(dir);
    write_dataset(dir / "bids.csv", dir / "attributes.csv", data);

    const auto& c = args.config;
    Manifest m;
    m.set("command", "synth");
    m.set("n_auctions", c.n_auctions);
    m.set("duration_days", c.duration_days);
    m.set("base_rate", c.base_rate);
    m.set("end_exponent", c.end_exponent);
    m.set("end_multiplier", c.end_multiplier);
    m.set("intensity", "base_rate*(1+end_multiplier*(t/duration)^end_exponent)");
    m.set("value_meanlog", c.value_meanlog);
    m.set("value_sdlog", c.value_sdlog);
    m.set("increment_fraction", c.increment_fraction);
    m.set("price_cap_factor", c.price_cap_factor);
    m.set("opening_bid", "uniform(0,value/2) rounded to cents");
    m.set("rating_meanlog", c.rating_meanlog);
    m.set("rating_sdlog", c.rating_sdlog);
    m.set("seller_rating", "round(exp(normal(rating_meanlog,rating_sdlog)))");
    m.set("end_day", "uniform over Mon..Sun");
    m.set("seed", c.seed);
    m.set("expected_bids_per_auction", expected_bid_count(c));
    m.set("out", args.out);
    m.write(dir);
    out << "synth: " << data.size() << " auctions, " << data.n_bids() << " bids -> " << args.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// smooth

int cmd_smooth(const SmoothArgs& args, std::ostream& out, std::ostream& err) {
    require_file(args.bids);
    require_file(args.attributes);
    const bool monotone = args.method == "monotone";
    bool use_gcv = args.lambda == "gcv";
    double fixed_lambda = 0.0;
    if (!use_gcv) {
        const auto [ptr, ec] = std::from_chars(args.lambda.data(), args.lambda.data() + args.lambda.size(), fixed_lambda);
        if (ec != std::errc() || ptr != args.lambda.data() + args.lambda.size() || !(fixed_lambda >= 0.0)) {
            throw UsageError("--lambda: expected \"gcv\" or a non-negative number, got \"" + args.lambda + "\"");
        }
    }
    if (!(args.lambda_min > 0.0) || args.lambda_max < args.lambda_min) {
        throw UsageError("--lambda-min/--lambda-max: need 0 < min <= max");
    }
    const double monotone_lambda = use_gcv ? args.monotone_lambda : fixed_lambda;

    const Dataset data = read_dataset(args.bids, args.attributes);
    const Dataset aligned = align_dataset(data, args.clock == "activity" ? ClockKind::activity : ClockKind::linear);
    const Basis basis = args.basis == "fourier" ? make_fourier_basis(0.0, 1.0, args.n_basis)
                                                : make_bspline_basis(0.0, 1.0, args.n_basis, args.order);
    const VectorXd grid = uniform_grid(basis, args.grid);
    const auto lambda_grid = log_spaced(args.lambda_min, args.lambda_max, args.lambda_count);
    const RawRule rule = args.raw == "linear" ? RawRule::linear : RawRule::step;

    struct Diagnostic {
        std::string id;
        std::string status;
        std::size_t n_events = 0;
        double lambda = 0.0;
        double df = 0.0;
        double sse = 0.0;
        int iterations = 0;
    };
    std::vector<Diagnostic> diagnostics;
    SmoothedCurves curves{basis};
    curves.monotone = monotone;
    std::vector<VectorXd> rows;
    std::vector<double> b0, gam;
    int failures = 0;

    for (std::size_t i = 0; i < aligned.size(); ++i) {
        const auto& attrs = aligned.auctions[i];
        const EventSeries price = live_price(aligned.series[i], attrs.opening_bid);
        const RawFunctional raw = interpolate_raw(price, rule, attrs.opening_bid);
        const VectorXd values = raw(grid);
        Diagnostic diag{attrs.auction_id, "ok", aligned.series[i].events.size()};
        try {
            if (monotone) {
                const MonotoneFit fit = fit_monotone(grid, values, basis, monotone_lambda);
                diag.lambda = monotone_lambda;
                diag.df = std::numeric_limits<double>::quiet_NaN();
                diag.sse = (values - fit.evaluate(grid)).squaredNorm();
                diag.iterations = fit.iterations;
                rows.push_back(fit.w.coefficients);
                b0.push_back(fit.beta0);
                gam.push_back(fit.gamma);
            } else {
                const PenalizedSmoother smoother(grid, values, basis, args.penalty_order);
                const double lambda = use_gcv ? select_lambda_gcv(grid, values, basis, lambda_grid, args.penalty_order).lambda
                                              : fixed_lambda;
                const VectorXd coef = smoother.coefficients(lambda);
                diag.lambda = lambda;
                diag.df = smoother.degrees_of_freedom(lambda);
                diag.sse = smoother.sse(coef);
                rows.push_back(coef);
            }
            curves.ids.push_back(attrs.auction_id);
        } catch (const fdakit::Error& e) {
            ++failures;
            diag.status = "failed";
            err << "smooth: auction " << attrs.auction_id << " failed: " << e.what() << '\n';
        }
        diagnostics.push_back(std::move(diag));
    }

    curves.coefficients.resize(static_cast<Eigen::Index>(rows.size()), basis.size());
    for (std::size_t i = 0; i < rows.size(); ++i) curves.coefficients.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    curves.beta0 = Eigen::Map<VectorXd>(b0.data(), static_cast<Eigen::Index>(b0.size()));
    curves.gamma = Eigen::Map<VectorXd>(gam.data(), static_cast<Eigen::Index>(gam.size()));
    const MatrixXd fitted = curves.evaluate(grid, 0);

    const fs::path dir(args.out);
    prepare_out_dir(dir);
    save_curves(dir, curves);
    {
        auto csv = open_csv(dir / "diagnostics.csv");
        csv << "auction_id,status,n_events,lambda,df,sse,iterations\n";
        for (const auto& d : diagnostics) {
            csv << d.id << ',' << d.status << ',' << d.n_events << ',';
            if (d.status == "ok") {
                csv << format_number(d.lambda) << ',' << (std::isnan(d.df) ? "NA" : format_number(d.df)) << ','
                    << format_number(d.sse) << ',' << d.iterations;
            } else {
                csv << "NA,NA,NA,NA";
            }
            csv << '\n';
        }
    }
    {
        auto csv = open_csv(dir / "fitted_curves.csv");
        csv << "auction_id,t,value\n";
        for (Eigen::Index i = 0; i < fitted.rows(); ++i) {
            for (Eigen::Index j = 0; j < grid.size(); ++j) {
                csv << curves.ids[static_cast<std::size_t>(i)] << ',' << format_number(grid(j)) << ','
                    << format_number(fitted(i, j)) << '\n';
            }
        }
    }
    SvgPlot plot("Price evolution (" + std::to_string(fitted.rows()) + " auctions)", "normalized time", "price");
    for (Eigen::Index i = 0; i < fitted.rows(); ++i) plot.add_curve(grid, fitted.row(i).transpose(), palette(static_cast<std::size_t>(i)));
    plot.write(dir / "curves.svg");

    Manifest m;
    m.set("command", "smooth");
    m.set("bids", args.bids);
    m.set("attributes", args.attributes);
    m.set("out", args.out);
    m.set("method", args.method);
    m.set("basis", args.basis);
    m.set("n_basis", basis.size());
    m.set("order", basis.order());
    m.set("lambda", args.lambda);
    m.set("lambda_min", args.lambda_min);
    m.set("lambda_max", args.lambda_max);
    m.set("lambda_count", args.lambda_count);
    m.set("monotone_lambda", monotone_lambda);
    m.set("penalty_order", args.penalty_order);
    m.set("grid", args.grid);
    m.set("clock", args.clock);
    m.set("raw", args.raw);
    m.set("raw_pre_event_value", "opening_bid");
    m.set("price", "running maximum of bids floored at opening_bid");
    m.set("fitted", static_cast<long>(curves.size()));
    m.set("failed", failures);
    m.write(dir);

    out << "smooth: fitted " << curves.size() << " of " << aligned.size() << " auctions -> " << args.out << '\n';
    return failures > 0 ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------------------------------
// analyses over smoothed curves

struct LoadedCurves {
    SmoothedCurves curves;
    VectorXd grid;
};

LoadedCurves load_for_analysis(const AnalysisArgs& args) {
    require_dir(args.smooth_dir);
    LoadedCurves loaded{load_curves(args.smooth_dir), {}};
    if (loaded.curves.size() == 0) throw IntegrityError("no fitted curves in " + args.smooth_dir);
    if (args.grid < 2) throw UsageError("--grid: need at least 2 points");
    loaded.grid = uniform_grid(loaded.curves.basis, args.grid);
    return loaded;
}

Manifest analysis_manifest(const std::string& command, const AnalysisArgs& args) {
    Manifest m;
    m.set("command", command);
    m.set("smooth_dir", args.smooth_dir);
    m.set("out", args.out);
    m.set("grid", args.grid);
    return m;
}

int cmd_riverplot(const AnalysisArgs& args, std::ostream& out) {
    const auto probs = parse_probs(args.probs);
    const auto loaded = load_for_analysis(args);
    const MatrixXd values = loaded.curves.evaluate(loaded.grid, args.deriv_order);
    const RiverPlot river = pointwise_quantiles(values, loaded.grid, probs);

    const fs::path dir(args.out);
    prepare_out_dir(dir);
    auto csv = open_csv(dir / "riverplot.csv");
    csv << 't';
    for (const double p : probs) csv << ",q" << format_number(p);
    csv << '\n';
    for (Eigen::Index j = 0; j < loaded.grid.size(); ++j) {
        csv << format_number(loaded.grid(j));
        for (Eigen::Index q = 0; q < river.values.rows(); ++q) csv << ',' << format_number(river.values(q, j));
        csv << '\n';
    }
    SvgPlot plot("River plot", "normalized time", args.deriv_order == 0 ? "price" : "derivative");
    for (Eigen::Index q = 0; q < river.values.rows(); ++q) {
        const bool median = std::abs(probs[static_cast<std::size_t>(q)] - 0.5) < 1e-12;
        plot.add_curve(loaded.grid, river.values.row(q).transpose(), median ? "#d62728" : "#1f77b4", median ? 2.0 : 1.0);
    }
    plot.write(dir / "riverplot.svg");
    auto m = analysis_manifest("riverplot", args);
    m.set("probs", args.probs);
    m.set("deriv_order", args.deriv_order);
    m.set("quantile_rule", "linear interpolation of order statistics");
    m.write(dir);
    out << "riverplot: " << probs.size() << " bands over " << loaded.curves.size() << " curves -> " << args.out << '\n';
    return kExitOk;
}

int cmd_fpca(const AnalysisArgs& args, std::ostream& out) {
    const auto loaded = load_for_analysis(args);
    const MatrixXd values = loaded.curves.evaluate(loaded.grid, args.deriv_order);
    const FpcaResult result = fpca(values, loaded.grid, args.n_components, loaded.curves.ids);
    const TransposePcaResult transposed = fpca_transpose(values, loaded.grid, args.n_components, loaded.curves.ids);
    const int k = args.n_components;

    const fs::path dir(args.out);
    prepare_out_dir(dir);
    {
        auto csv = open_csv(dir / "fpca_components.csv");
        csv << "t,mean";
        for (int c = 0; c < k; ++c) csv << ",pc" << c + 1;
        csv << '\n';
        for (Eigen::Index j = 0; j < loaded.grid.size(); ++j) {
            csv << format_number(loaded.grid(j)) << ',' << format_number(result.mean(j));
            for (int c = 0; c < k; ++c) csv << ',' << format_number(result.components(c, j));
            csv << '\n';
        }
    }
    {
        auto csv = open_csv(dir / "fpca_scores.csv");
        csv << "auction_id";
        for (int c = 0; c < k; ++c) csv << ",pc" << c + 1;
        csv << '\n';
        for (Eigen::Index i = 0; i < result.scores.rows(); ++i) {
            csv << result.ids[static_cast<std::size_t>(i)];
            for (int c = 0; c < k; ++c) csv << ',' << format_number(result.scores(i, c));
            csv << '\n';
        }
    }
    {
        auto csv = open_csv(dir / "fpca_fractions.csv");
        csv << "component,eigenvalue,fraction\n";
        for (int c = 0; c < k; ++c) {
            csv << c + 1 << ',' << format_number(result.eigenvalues(c)) << ',' << format_number(result.fractions(c)) << '\n';
        }
    }
    {
        auto csv = open_csv(dir / "fpca_transpose.csv");
        csv << "component,eigenvalue,fraction\n";
        for (int c = 0; c < k; ++c) {
            csv << c + 1 << ',' << format_number(transposed.eigenvalues(c)) << ','
                << format_number(transposed.fractions(c)) << '\n';
        }
    }
    SvgPlot plot("Functional principal components", "normalized time", "component");
    for (int c = 0; c < k; ++c) plot.add_curve(loaded.grid, result.components.row(c).transpose(), palette(static_cast<std::size_t>(c)), 1.5);
    plot.write(dir / "fpca.svg");
    auto m = analysis_manifest("fpca", args);
    m.set("n_components", k);
    m.set("deriv_order", args.deriv_order);
    m.set("normalization", "sum(xi^2)*dt=1; sign: largest-magnitude entry positive");
    m.write(dir);
    out << "fpca: " << k << " components, fraction explained " << format_number(result.fractions.sum()) << " -> "
        << args.out << '\n';
    return kExitOk;
}

int cmd_cluster(const AnalysisArgs& args, std::ostream& out) {
    require_file(args.attributes);
    const auto loaded = load_for_analysis(args);
    const AttributeTable attributes = read_attributes(args.attributes);
    ClusterOptions options;
    options.k = args.k;
    options.n_restarts = args.restarts;
    options.seed = args.seed;
    options.deriv_order = args.deriv_order;
    ClusterResult result;
    if (args.representation == "coefficients") {
        if (loaded.curves.monotone) throw UsageError("--representation coefficients needs penalized (linear) curves");
        if (args.deriv_order != 0) throw UsageError("--deriv-order applies to the grid representation only");
        options.representation = ClusterRepresentation::coefficients;
        const FunctionalSample sample(loaded.curves.basis, loaded.curves.coefficients, loaded.curves.ids);
        result = cluster_curves(sample, loaded.grid, options);
    } else {
        options.representation = ClusterRepresentation::grid;
        result = cluster_grid_values(loaded.curves.evaluate(loaded.grid, args.deriv_order), loaded.grid,
                                     loaded.curves.ids, options);
    }
    const auto profiles = profile_clusters(result, attributes);

    const fs::path dir(args.out);
    prepare_out_dir(dir);
    {
        auto csv = open_csv(dir / "cluster_assignments.csv");
        csv << "auction_id,cluster\n";
        for (std::size_t i = 0; i < result.ids.size(); ++i) csv << result.ids[i] << ',' << result.assignments[i] << '\n';
    }
    {
        auto csv = open_csv(dir / "cluster_centroids.csv");
        csv << 't';
        for (int c = 0; c < result.k; ++c) csv << ",cluster" << c;
        csv << '\n';
        for (Eigen::Index j = 0; j < result.grid.size(); ++j) {
            csv << format_number(result.grid(j));
            for (int c = 0; c < result.k; ++c) csv << ',' << format_number(result.centroids(c, j));
            csv << '\n';
        }
    }
    {
        auto csv = open_csv(dir / "cluster_profiles.csv");
        csv << "cluster,count";
        for (const auto& col : attributes.numeric) csv << ",mean_" << col.name << ",sd_" << col.name;
        for (const auto& col : attributes.categorical) csv << ",mode_" << col.name;
        csv << '\n';
        for (const auto& p : profiles) {
            csv << p.cluster << ',' << p.count;
            for (const auto& s : p.numeric) csv << ',' << format_number(s.mean) << ',' << format_number(s.sd);
            for (const auto& s : p.categorical) csv << ',' << s.mode;
            csv << '\n';
        }
    }
    {
        auto csv = open_csv(dir / "cluster_fit.csv");
        csv << "k,sse,seed,restarts,best_restart,iterations\n";
        csv << result.k << ',' << format_number(result.sse) << ',' << result.seed << ',' << result.n_restarts << ','
            << result.best_restart << ',' << result.sse_history.size() << '\n';
    }
    SvgPlot plot("Cluster centroids (k=" + std::to_string(result.k) + ")", "normalized time", "price");
    for (int c = 0; c < result.k; ++c) plot.add_curve(result.grid, result.centroids.row(c).transpose(), palette(static_cast<std::size_t>(c)), 2.0);
    plot.write(dir / "clusters.svg");
    auto m = analysis_manifest("cluster", args);
    m.set("attributes", args.attributes);
    m.set("k", args.k);
    m.set("restarts", args.restarts);
    m.set("seed", args.seed);
    m.set("representation", args.representation);
    m.set("deriv_order", args.deriv_order);
    m.set("initialization", "k-means++");
    m.write(dir);
    out << "cluster: k=" << result.k << " sse=" << format_number(result.sse) << " -> " << args.out << '\n';
    return kExitOk;
}

int cmd_regress(const AnalysisArgs& args, std::ostream& out) {
    require_file(args.attributes);
    const auto covariates = split_list(args.covariates);
    const auto loaded = load_for_analysis(args);
    const AttributeTable attributes = read_attributes(args.attributes);
    const Eigen::Index n = loaded.curves.size();

    Design design{MatrixXd(n, static_cast<Eigen::Index>(covariates.size()) + 1), {"intercept"}};
    design.x.col(0).setOnes();
    for (std::size_t c = 0; c < covariates.size(); ++c) {
        const NumericColumn* col = attributes.numeric_column(covariates[c]);
        if (col == nullptr) throw UsageError("--covariates: \"" + covariates[c] + "\" is not a numeric attribute column");
        design.names.push_back(covariates[c]);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto row = attributes.find(loaded.curves.ids[static_cast<std::size_t>(i)]);
            if (!row) throw IntegrityError("auction '" + loaded.curves.ids[static_cast<std::size_t>(i)] + "' has no attribute row");
            design.x(i, static_cast<Eigen::Index>(c) + 1) = col->values[*row];
        }
    }
    const MatrixXd responses = loaded.curves.evaluate(loaded.grid, args.deriv_order);
    const auto curves = fit_fos(responses, design, loaded.grid);

    const fs::path dir(args.out);
    prepare_out_dir(dir);
    auto csv = open_csv(dir / "regression.csv");
    csv << "predictor,t,beta,se,lo,hi\n";
    for (const auto& c : curves) {
        for (Eigen::Index j = 0; j < c.grid.size(); ++j) {
            csv << c.predictor << ',' << format_number(c.grid(j)) << ',' << format_number(c.beta(j)) << ','
                << format_number(c.se(j)) << ',' << format_number(c.lower(j)) << ',' << format_number(c.upper(j)) << '\n';
        }
    }
    static const char* kResponse[] = {"price", "velocity", "acceleration", "third derivative"};
    for (const auto& c : curves) {
        SvgPlot plot("Coefficient of " + c.predictor + " (" + kResponse[std::min(args.deriv_order, 3)] + ")",
                     "normalized time", "coefficient");
        plot.add_curve(c.grid, c.beta, "#1f77b4", 2.0);
        plot.add_curve(c.grid, c.lower, "#7f7f7f", 1.0);
        plot.add_curve(c.grid, c.upper, "#7f7f7f", 1.0);
        plot.write(dir / ("regression_" + c.predictor + ".svg"));
    }
    auto m = analysis_manifest("regress", args);
    m.set("attributes", args.attributes);
    m.set("covariates", args.covariates);
    m.set("deriv_order", args.deriv_order);
    m.set("band", "pointwise 95% t-interval");
    m.set("residual_df", curves.front().residual_df);
    m.write(dir);
    out << "regress: " << curves.size() << " coefficient curves -> " << args.out << '\n';
    return kExitOk;
}

int cmd_pda(const AnalysisArgs& args, std::ostream& out) {
    if (args.weights != "constant" && args.weights != "pointwise") throw UsageError("--weights: constant or pointwise");
    const auto loaded = load_for_analysis(args);
    if (args.order < 1) throw UsageError("--order: must be at least 1");
    if (args.order > loaded.curves.max_derivative()) {
        throw ParameterError("PDA order " + std::to_string(args.order) + " exceeds the derivatives the curves support");
    }
    std::vector<MatrixXd> derivatives;
    for (int j = 0; j <= args.order; ++j) derivatives.push_back(loaded.curves.evaluate(loaded.grid, j));
    const PdaResult result = pda_fit(derivatives, loaded.grid,
                                     args.weights == "pointwise" ? PdaWeightModel::pointwise : PdaWeightModel::constant);

    const fs::path dir(args.out);
    prepare_out_dir(dir);
    {
        auto csv = open_csv(dir / "pda_weights.csv");
        csv << 't';
        for (int j = 0; j < result.order; ++j) csv << ",w" << j;
        csv << '\n';
        for (Eigen::Index t = 0; t < loaded.grid.size(); ++t) {
            csv << format_number(loaded.grid(t));
            for (int j = 0; j < result.order; ++j) csv << ',' << format_number(result.weights(j, t));
            csv << '\n';
        }
    }
    {
        auto csv = open_csv(dir / "pda_forcing.csv");
        csv << "order,weight_model,forcing\n";
        csv << result.order << ',' << args.weights << ',' << format_number(result.forcing) << '\n';
    }
    SvgPlot plot("PDA weight functions", "normalized time", "weight");
    for (int j = 0; j < result.order; ++j) plot.add_curve(loaded.grid, result.weights.row(j).transpose(), palette(static_cast<std::size_t>(j)), 1.5);
    plot.write(dir / "pda.svg");
    auto m = analysis_manifest("pda", args);
    m.set("order", args.order);
    m.set("weights", args.weights);
    m.write(dir);
    out << "pda: order " << result.order << " forcing " << format_number(result.forcing) << " -> " << args.out << '\n';
    return kExitOk;
}

int cmd_energy(const AnalysisArgs& args, std::ostream& out) {
    const auto loaded = load_for_analysis(args);
    if (loaded.curves.max_derivative() < 1) throw ParameterError("auction energy needs differentiable curves");
    const MatrixXd price = loaded.curves.evaluate(loaded.grid, 0);
    const MatrixXd velocity = loaded.curves.evaluate(loaded.grid, 1);
    MatrixXd energy(price.rows(), price.cols());
    for (Eigen::Index i = 0; i < price.rows(); ++i) {
        energy.row(i) = auction_energy(VectorXd(price.row(i).transpose()), VectorXd(velocity.row(i).transpose())).transpose();
    }

    const fs::path dir(args.out);
    prepare_out_dir(dir);
    auto csv = open_csv(dir / "energy.csv");
    csv << "auction_id,t,price,velocity,energy\n";
    for (Eigen::Index i = 0; i < price.rows(); ++i) {
        for (Eigen::Index j = 0; j < loaded.grid.size(); ++j) {
            csv << loaded.curves.ids[static_cast<std::size_t>(i)] << ',' << format_number(loaded.grid(j)) << ','
                << format_number(price(i, j)) << ',' << format_number(velocity(i, j)) << ','
                << format_number(energy(i, j)) << '\n';
        }
    }
    SvgPlot plot("Auction energy", "normalized time", "energy");
    for (Eigen::Index i = 0; i < energy.rows(); ++i) plot.add_curve(loaded.grid, energy.row(i).transpose(), palette(static_cast<std::size_t>(i)));
    plot.write(dir / "energy.svg");
    auto m = analysis_manifest("energy", args);
    m.set("formula", "price*velocity^2/2");
    m.write(dir);
    out << "energy: " << energy.rows() << " curves -> " << args.out << '\n';
    return kExitOk;
}

void add_analysis_common(CLI::App* sub, AnalysisArgs& a) {
    sub->add_option("--smooth-dir", a.smooth_dir, "Directory written by `smooth`")->required();
    sub->add_option("--out", a.out, "Output directory")->required();
    sub->add_option("--grid", a.grid, "Number of grid points")->check(CLI::Range(2, 100000));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"fdakit: functional data analysis of auction price curves"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic auction dataset");
    s->add_option("--n-auctions", synth.config.n_auctions)->check(CLI::NonNegativeNumber);
    s->add_option("--duration", synth.config.duration_days, "Auction length in days")->check(CLI::PositiveNumber);
    s->add_option("--base-rate", synth.config.base_rate, "Baseline bids per day")->check(CLI::NonNegativeNumber);
    s->add_option("--end-exponent", synth.config.end_exponent)->check(CLI::NonNegativeNumber);
    s->add_option("--end-multiplier", synth.config.end_multiplier)->check(CLI::NonNegativeNumber);
    s->add_option("--value-meanlog", synth.config.value_meanlog);
    s->add_option("--value-sdlog", synth.config.value_sdlog)->check(CLI::NonNegativeNumber);
    s->add_option("--seed", synth.config.seed);
    s->add_option("--out", synth.out, "Output directory")->required();

    SmoothArgs smooth;
    auto* sm = app.add_subcommand("smooth", "Fit one functional object per auction");
    sm->add_option("--bids", smooth.bids)->required();
    sm->add_option("--attributes", smooth.attributes)->required();
    sm->add_option("--out", smooth.out)->required();
    sm->add_option("--basis", smooth.basis)->check(CLI::IsMember({"bspline", "fourier"}));
    sm->add_option("--n-basis", smooth.n_basis)->check(CLI::Range(1, 1000));
    sm->add_option("--order", smooth.order, "Spline order (degree + 1)")->check(CLI::Range(1, 20));
    sm->add_option("--lambda", smooth.lambda, "\"gcv\" or a fixed penalty weight");
    sm->add_option("--lambda-min", smooth.lambda_min)->check(CLI::PositiveNumber);
    sm->add_option("--lambda-max", smooth.lambda_max)->check(CLI::PositiveNumber);
    sm->add_option("--lambda-count", smooth.lambda_count)->check(CLI::Range(1, 1000));
    sm->add_option("--penalty-order", smooth.penalty_order)->check(CLI::Range(1, 19));
    sm->add_option("--grid", smooth.grid)->check(CLI::Range(2, 100000));
    sm->add_option("--clock", smooth.clock)->check(CLI::IsMember({"linear", "activity"}));
    sm->add_option("--method", smooth.method)->check(CLI::IsMember({"penalized", "monotone"}));
    sm->add_option("--raw", smooth.raw)->check(CLI::IsMember({"step", "linear"}));
    sm->add_option("--monotone-lambda", smooth.monotone_lambda, "Penalty used by --method monotone with --lambda gcv")
        ->check(CLI::NonNegativeNumber);

    AnalysisArgs river, pca, cluster, regress, pda, energy;
    auto* rv = app.add_subcommand("riverplot", "Pointwise quantile bands of the curves");
    add_analysis_common(rv, river);
    rv->add_option("--probs", river.probs);
    rv->add_option("--deriv-order", river.deriv_order)->check(CLI::Range(0, 3));

    auto* fp = app.add_subcommand("fpca", "Functional principal components");
    add_analysis_common(fp, pca);
    fp->add_option("--n-components", pca.n_components)->check(CLI::Range(1, 100000));
    fp->add_option("--deriv-order", pca.deriv_order)->check(CLI::Range(0, 3));

    auto* cl = app.add_subcommand("cluster", "k-means clustering of the curves");
    add_analysis_common(cl, cluster);
    cl->add_option("--attributes", cluster.attributes)->required();
    cl->add_option("--k", cluster.k)->check(CLI::Range(1, 100000));
    cl->add_option("--restarts", cluster.restarts)->check(CLI::Range(1, 100000));
    cl->add_option("--seed", cluster.seed);
    cl->add_option("--representation", cluster.representation)->check(CLI::IsMember({"coefficients", "grid"}));
    cl->add_option("--deriv-order", cluster.deriv_order)->check(CLI::Range(0, 3));

    auto* rg = app.add_subcommand("regress", "Function-on-scalar regression with pointwise bands");
    add_analysis_common(rg, regress);
    rg->add_option("--attributes", regress.attributes)->required();
    rg->add_option("--covariates", regress.covariates, "Comma-separated numeric attribute columns");
    rg->add_option("--deriv-order", regress.deriv_order, "0 price, 1 velocity, 2 acceleration")->check(CLI::Range(0, 3));

    auto* pd = app.add_subcommand("pda", "Principal differential analysis");
    add_analysis_common(pd, pda);
    pd->add_option("--order", pda.order)->check(CLI::Range(1, 3));
    pd->add_option("--weights", pda.weights)->check(CLI::IsMember({"constant", "pointwise"}));

    auto* en = app.add_subcommand("energy", "Auction energy price*velocity^2/2");
    add_analysis_common(en, energy);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (s->parsed()) return cmd_synth(synth, out);
        if (sm->parsed()) return cmd_smooth(smooth, out, err);
        if (rv->parsed()) return cmd_riverplot(river, out);
        if (fp->parsed()) return cmd_fpca(pca, out);
        if (cl->parsed()) return cmd_cluster(cluster, out);
        if (rg->parsed()) return cmd_regress(regress, out);
        if (pd->parsed()) return cmd_pda(pda, out);
        if (en->parsed()) return cmd_energy(energy, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParameterError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const IntegrityError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const RangeError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const fdakit::Error& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace fdakit::cli
