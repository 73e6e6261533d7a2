#include "curves.hpp"

#include <fdakit/dataio.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fdakit::cli {

namespace {

double to_double(const std::string& text, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw IntegrityError("malformed number \"" + text + "\" in " + where);
    }
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::string format_exact(double value) {
    if (value == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

int SmoothedCurves::max_derivative() const {
    if (monotone) return 3;
    return basis.family() == BasisFamily::bspline ? basis.order() - 1 : 16;
}

MonotoneFit SmoothedCurves::monotone_fit(Eigen::Index i) const {
    return MonotoneFit{beta0(i), gamma(i), FunctionalDatum(basis, coefficients.row(i).transpose(), ids[static_cast<std::size_t>(i)]),
                       0.0, 0.0, 0};
}

MatrixXd SmoothedCurves::evaluate(const VectorXd& grid, int deriv_order) const {
    if (deriv_order > max_derivative()) {
        throw ParameterError("derivative order " + std::to_string(deriv_order) + " exceeds what the fitted curves support (" +
                             std::to_string(max_derivative()) + ")");
    }
    if (!monotone) return coefficients * eval_basis(basis, grid, deriv_order).transpose();
    MatrixXd out(size(), grid.size());
    for (Eigen::Index i = 0; i < size(); ++i) out.row(i) = monotone_fit(i).evaluate(grid, deriv_order).transpose();
    return out;
}

void save_curves(const std::filesystem::path& dir, const SmoothedCurves& curves) {
    {
        std::ofstream out(dir / "basis.txt", std::ios::binary);
        out << "family=" << to_string(curves.basis.family()) << '\n'
            << "lower=" << format_exact(curves.basis.lower()) << '\n'
            << "upper=" << format_exact(curves.basis.upper()) << '\n'
            << "n_basis=" << curves.basis.size() << '\n'
            << "order=" << curves.basis.order() << '\n'
            << "representation=" << (curves.monotone ? "monotone" : "linear") << '\n';
    }
    std::ofstream out(dir / "coefficients.csv", std::ios::binary);
    out << "auction_id";
    if (curves.monotone) out << ",beta0,gamma";
    for (int k = 0; k < curves.basis.size(); ++k) out << (curves.monotone ? ",w" : ",c") << k;
    out << '\n';
    for (Eigen::Index i = 0; i < curves.size(); ++i) {
        out << curves.ids[static_cast<std::size_t>(i)];
        if (curves.monotone) out << ',' << format_exact(curves.beta0(i)) << ',' << format_exact(curves.gamma(i));
        for (Eigen::Index k = 0; k < curves.coefficients.cols(); ++k) out << ',' << format_exact(curves.coefficients(i, k));
        out << '\n';
    }
}

std::vector<std::pair<std::string, std::string>> read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IntegrityError("cannot open " + path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IntegrityError("malformed line \"" + line + "\" in " + path.string());
        out.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return out;
}

SmoothedCurves load_curves(const std::filesystem::path& dir) {
    const auto kv = read_key_values(dir / "basis.txt");
    auto get = [&](const std::string& key) {
        for (const auto& [k, v] : kv) {
            if (k == key) return v;
        }
        throw IntegrityError("basis.txt lacks key '" + key + "'");
    };
    const std::string family = get("family");
    const double lower = to_double(get("lower"), "basis.txt");
    const double upper = to_double(get("upper"), "basis.txt");
    const int n_basis = std::stoi(get("n_basis"));
    const int order = std::stoi(get("order"));
    SmoothedCurves curves{family == "fourier" ? make_fourier_basis(lower, upper, n_basis)
                                              : make_bspline_basis(lower, upper, n_basis, order)};
    curves.monotone = get("representation") == "monotone";

    std::ifstream in(dir / "coefficients.csv");
    if (!in) throw IntegrityError("cannot open " + (dir / "coefficients.csv").string());
    std::string line;
    std::getline(in, line);
    const std::size_t offset = curves.monotone ? 3 : 1;
    const std::size_t width = offset + static_cast<std::size_t>(curves.basis.size());
    if (split_csv(line).size() != width) throw IntegrityError("coefficients.csv header does not match basis.txt");

    std::vector<std::vector<double>> rows;
    std::vector<double> b0, g;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        const std::string where = "coefficients.csv line " + std::to_string(number);
        if (fields.size() != width) throw IntegrityError("wrong field count in " + where);
        curves.ids.push_back(fields[0]);
        if (curves.monotone) {
            b0.push_back(to_double(fields[1], where));
            g.push_back(to_double(fields[2], where));
        }
        std::vector<double> row;
        for (std::size_t k = offset; k < width; ++k) row.push_back(to_double(fields[k], where));
        rows.push_back(std::move(row));
    }
    curves.coefficients.resize(static_cast<Eigen::Index>(rows.size()), curves.basis.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < rows[i].size(); ++k) {
            curves.coefficients(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
    }
    curves.beta0 = Eigen::Map<const VectorXd>(b0.data(), static_cast<Eigen::Index>(b0.size()));
    curves.gamma = Eigen::Map<const VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    return curves;
}

}  // namespace fdakit::cli
