#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace fdakit::cli {

/// Static line plot: fixed 800x500 viewport, one polyline per curve, two axis lines and ten tick labels.
class SvgPlot {
  public:
    explicit SvgPlot(std::string title, std::string x_label = "t", std::string y_label = "");

    void add_curve(const Eigen::VectorXd& x, const Eigen::VectorXd& y, std::string stroke = "#1f77b4",
                   double width = 1.0);
    std::size_t n_curves() const noexcept { return curves_.size(); }

    std::string render() const;
    void write(const std::filesystem::path& path) const;

  private:
    struct Curve {
        Eigen::VectorXd x;
        Eigen::VectorXd y;
        std::string stroke;
        double width;
    };

    std::string title_;
    std::string x_label_;
    std::string y_label_;
    std::vector<Curve> curves_;
};

/// A categorical color for index i.
std::string palette(std::size_t i);

}  // namespace fdakit::cli
