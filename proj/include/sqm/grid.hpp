#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sqm {

/// Uniform 1-D node grid: n_cells + 1 nodes from x_min to x_max inclusive.
class Grid1D {
public:
    static constexpr std::size_t kMinCells = 16;

    Grid1D(double x_min, double x_max, std::size_t n_cells);

    /// Grid with the given spacing; (x_max - x_min) / dx must be an integer.
    static Grid1D with_spacing(double x_min, double x_max, double dx);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    std::size_t n_cells() const { return n_cells_; }
    std::size_t size() const { return n_cells_ + 1; }
    double dx() const { return dx_; }
    double node(std::size_t i) const;
    std::vector<double> nodes() const;

    /// Same domain, twice the cells.
    Grid1D refined() const { return Grid1D(x_min_, x_max_, 2 * n_cells_); }

    bool operator==(const Grid1D&) const = default;

private:
    double x_min_;
    double x_max_;
    std::size_t n_cells_;
    double dx_;
};

/// Composite trapezoid rule over all nodes of the grid.
double trapezoid(const Grid1D& grid, std::span<const double> values);

/// A gridded probability density (or any scalar field) at one time.
class DensityField {
public:
    DensityField(Grid1D grid, std::vector<double> values, double time);

    const Grid1D& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double time() const { return time_; }
    /// Trapezoid mass recorded when the field was created.
    double initial_mass() const { return initial_mass_; }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Linear interpolation; zero outside the grid.
    double interpolate(double x) const;

private:
    Grid1D grid_;
    std::vector<double> values_;
    double time_;
    double initial_mass_;
};

template <typename F>
DensityField sample_field(const Grid1D& grid, double time, F&& f) {
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = f(grid.node(i));
    return DensityField(grid, std::move(values), time);
}

}  // namespace sqm
