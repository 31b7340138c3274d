#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kslab/error.hpp"

namespace kslab {

// Space dimension N of the chemotaxis system; the radial reduction needs N >= 3.
class Dimension {
public:
    explicit Dimension(int n) : n_(n) {
        if (n < 3) throw Error(ErrorCode::InvalidArgument, "dimension must be >= 3");
    }
    int value() const noexcept { return n_; }
    double as_double() const noexcept { return static_cast<double>(n_); }
    friend bool operator==(Dimension a, Dimension b) = default;

private:
    int n_;
};

// Area of the unit sphere in R^N.
double unit_sphere_area(Dimension dim);

enum class Grading { Uniform, LogarithmicNearZero, Annulus };

std::string to_string(Grading g);

// Strictly increasing radial nodes r_0 < ... < r_M with M >= 16 intervals.
// r_0 == 0 unless the grading is Annulus.
class RadialGrid {
public:
    static constexpr std::size_t min_intervals = 16;

    static RadialGrid uniform(double r_max, std::size_t intervals);
    // Exponential node map r(x) = R (e^{bx} - 1)/(e^b - 1), b chosen so that the
    // first cell is h_min_fraction * R. Falls back to uniform when that is coarser.
    static RadialGrid log_graded(double r_max, std::size_t intervals, double h_min_fraction = 1e-4);
    static RadialGrid annulus(double r_min, double r_max, std::size_t intervals);
    // Arbitrary nodes; grading is inferred from nodes.front().
    static RadialGrid from_nodes(std::vector<double> nodes);

    std::span<const double> nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t intervals() const noexcept { return nodes_.size() - 1; }
    double operator[](std::size_t i) const { return nodes_[i]; }
    double r_min() const noexcept { return nodes_.front(); }
    double r_max() const noexcept { return nodes_.back(); }
    double smallest_cell() const;
    Grading grading() const noexcept { return grading_; }
    bool starts_at_origin() const noexcept { return nodes_.front() == 0.0; }

    friend bool operator==(const RadialGrid& a, const RadialGrid& b) { return a.nodes_ == b.nodes_; }

private:
    RadialGrid(std::vector<double> nodes, Grading grading);
    std::vector<double> nodes_;
    Grading grading_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr make_grid(RadialGrid grid);

// Sampled radial function (u, w, W, U, ...). Values are finite, one per node.
class RadialField {
public:
    RadialField(GridPtr grid, std::vector<double> values, std::optional<double> time = std::nullopt);

    const RadialGrid& grid() const noexcept { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& mutable_values() noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }
    std::optional<double> time() const noexcept { return time_; }
    void set_time(std::optional<double> t) { time_ = t; }
    double sup_norm() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
    std::optional<double> time_;
};

// Initial density families.
struct Gaussian {
    double amplitude = 1.0;  // A in A exp(-r^2 / sigma^2)
    double sigma = 1.0;
};
struct Plateau {
    double amplitude = 1.0;  // A/2 * erfc((r - R0) / width)
    double radius = 1.0;
    double edge_width = 0.1;
};
// k r^2 (r-1)^4 on [0,1], quintic bridge on (1,2), c exp(-lambda (r-2)) on [2,inf).
struct Bridged {
    double k = 64.0;
    double tail_decay = 1.0;
    double tail_amplitude = 1.0;
};
struct Constant {
    double value = 0.0;
};

struct InitialData {
    std::variant<Gaussian, Plateau, Bridged, Constant> family;
    bool require_nonincreasing = false;
};

// Continuous initial density at r (no sampling, no checks).
double evaluate_initial(const InitialData& data, double r);

RadialField build_initial(const InitialData& data, GridPtr grid);

// Ball average w(r) = r^{-N} int_0^r s^{N-1} u(s) ds. The integral is exact for the
// piecewise-linear interpolant of u. On an annulus the caller supplies
// int_0^{r_min} s^{N-1} u ds through inner_integral.
RadialField w_from_u(const RadialField& u, Dimension dim,
                     std::optional<double> inner_integral = std::nullopt);

// u = r w_r + N w with second-order finite differences.
RadialField u_from_w(const RadialField& w, Dimension dim);

// Node weights q_i with sum_i q_i u_i = |S^{N-1}| int r^{N-1} u_h dr over the grid.
std::vector<double> mass_weights(const RadialGrid& grid, Dimension dim);

double mass(const RadialField& u, Dimension dim);

// True iff f[i+1] - f[i] <= tol * max|f| for all i.
bool check_radially_nonincreasing(const RadialField& f, double tol = 0.0);
bool check_radially_nonincreasing(std::span<const double> values, double tol = 0.0);

// Cumulative int_0^{r_i} s^{N-1} u_h ds for the piecewise-linear interpolant u_h.
std::vector<double> cumulative_moment(const RadialGrid& grid, std::span<const double> u, Dimension dim);

}  // namespace kslab
