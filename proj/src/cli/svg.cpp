#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace fdakit::cli {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
constexpr int kTicksPerAxis = 5;

std::string escape(const std::string& text) {
    std::string out;
    for (const char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(ch);
        }
    }
    return out;
}

std::string num(double v, const char* fmt = "%.2f") {
    char buf[48];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::add_curve(const Eigen::VectorXd& x, const Eigen::VectorXd& y, std::string stroke, double width) {
    curves_.push_back({x, y, std::move(stroke), width});
}

std::string SvgPlot::render() const {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& c : curves_) {
        for (Eigen::Index i = 0; i < std::min(c.x.size(), c.y.size()); ++i) {
            if (!std::isfinite(c.x(i)) || !std::isfinite(c.y(i))) continue;
            xmin = std::min(xmin, c.x(i));
            xmax = std::max(xmax, c.x(i));
            ymin = std::min(ymin, c.y(i));
            ymax = std::max(ymax, c.y(i));
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
    auto sy = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
    os << "  <title>" << escape(title_) << "</title>\n";
    os << "  <rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
    os << "  <text x=\"400\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title_) << "</text>\n";
    // axes
    const double x0 = kLeft, y0 = kTop + plot_h;
    os << "  <line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0 + plot_w) << "\" y2=\""
       << num(y0) << "\" stroke=\"black\"/>\n";
    os << "  <line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(kTop)
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i < kTicksPerAxis; ++i) {
        const double f = static_cast<double>(i) / (kTicksPerAxis - 1);
        const double xv = xmin + f * (xmax - xmin);
        const double yv = ymin + f * (ymax - ymin);
        os << "  <text x=\"" << num(sx(xv)) << "\" y=\"" << num(y0 + 18) << "\" text-anchor=\"middle\" font-size=\"11\">"
           << num(xv, "%.4g") << "</text>\n";
        os << "  <text x=\"" << num(x0 - 6) << "\" y=\"" << num(sy(yv) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
           << num(yv, "%.4g") << "</text>\n";
    }
    os << "  <text x=\"" << num(x0 + plot_w / 2) << "\" y=\"" << num(kHeight - 10)
       << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(x_label_) << "</text>\n";
    if (!y_label_.empty()) {
        os << "  <text x=\"14\" y=\"" << num(kTop + plot_h / 2) << "\" font-size=\"12\" transform=\"rotate(-90 14 "
           << num(kTop + plot_h / 2) << ")\" text-anchor=\"middle\">" << escape(y_label_) << "</text>\n";
    }
    for (const auto& c : curves_) {
        os << "  <polyline fill=\"none\" stroke=\"" << escape(c.stroke) << "\" stroke-width=\"" << num(c.width)
           << "\" points=\"";
        bool first = true;
        for (Eigen::Index i = 0; i < std::min(c.x.size(), c.y.size()); ++i) {
            if (!std::isfinite(c.x(i)) || !std::isfinite(c.y(i))) continue;
            os << (first ? "" : " ") << num(sx(c.x(i))) << ',' << num(sy(c.y(i)));
            first = false;
        }
        os << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void SvgPlot::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    out << render();
}

std::string palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

}  // namespace fdakit::cli
