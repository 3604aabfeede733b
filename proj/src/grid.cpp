#include "sqm/grid.hpp"

#include <cmath>
#include <string>

#include "sqm/errors.hpp"

namespace sqm {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n_cells)
    : x_min_(x_min), x_max_(x_max), n_cells_(n_cells), dx_((x_max - x_min) / static_cast<double>(n_cells)) {
    if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
        throw InvalidArgument("grid needs finite x_min < x_max");
    }
    if (n_cells < kMinCells) {
        throw InvalidArgument("grid needs at least " + std::to_string(kMinCells) + " cells, got " +
                              std::to_string(n_cells));
    }
}

Grid1D Grid1D::with_spacing(double x_min, double x_max, double dx) {
    if (!(dx > 0.0)) throw InvalidArgument("grid spacing must be positive");
    const double cells = (x_max - x_min) / dx;
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, rounded)) {
        throw InvalidArgument("grid span is not a multiple of the spacing");
    }
    return Grid1D(x_min, x_max, static_cast<std::size_t>(rounded));
}

double Grid1D::node(std::size_t i) const {
    if (i == n_cells_) return x_max_;
    return x_min_ + static_cast<double>(i) * dx_;
}

std::vector<double> Grid1D::nodes() const {
    std::vector<double> xs(size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = node(i);
    return xs;
}

double trapezoid(const Grid1D& grid, std::span<const double> values) {
    if (values.size() != grid.size()) throw InvalidArgument("value count does not match grid");
    double interior = 0.0;
    for (std::size_t i = 1; i + 1 < values.size(); ++i) interior += values[i];
    return grid.dx() * (interior + 0.5 * (values.front() + values.back()));
}

DensityField::DensityField(Grid1D grid, std::vector<double> values, double time)
    : grid_(grid), values_(std::move(values)), time_(time) {
    if (values_.size() != grid_.size()) throw InvalidArgument("value count does not match grid");
    for (double v : values_) {
        if (!std::isfinite(v)) throw InvalidArgument("density field contains a non-finite value");
    }
    initial_mass_ = trapezoid(grid_, values_);
}

double DensityField::interpolate(double x) const {
    if (x < grid_.x_min() || x > grid_.x_max()) return 0.0;
    const double s = (x - grid_.x_min()) / grid_.dx();
    auto i = static_cast<std::size_t>(std::floor(s));
    if (i >= grid_.n_cells()) return values_.back();
    const double f = s - static_cast<double>(i);
    return (1.0 - f) * values_[i] + f * values_[i + 1];
}

}  // namespace sqm
