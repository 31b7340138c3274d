#include "kslab/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "kslab/numerics.hpp"

namespace kslab {

double unit_sphere_area(Dimension dim) {
    const double n = dim.as_double();
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

std::string to_string(Grading g) {
    switch (g) {
    case Grading::Uniform: return "uniform";
    case Grading::LogarithmicNearZero: return "log";
    case Grading::Annulus: return "annulus";
    }
    return "unknown";
}

RadialGrid::RadialGrid(std::vector<double> nodes, Grading grading)
    : nodes_(std::move(nodes)), grading_(grading) {
    if (nodes_.size() < 2) throw Error(ErrorCode::TooCoarse, "grid needs at least 2 nodes");
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
        if (!(nodes_[i + 1] > nodes_[i]) || !std::isfinite(nodes_[i + 1]))
            throw Error(ErrorCode::InvalidArgument, "grid nodes must be finite and strictly increasing");
    }
    if (nodes_.front() < 0.0) throw Error(ErrorCode::InvalidArgument, "grid nodes must be nonnegative");
    if (grading_ != Grading::Annulus && nodes_.front() != 0.0)
        throw Error(ErrorCode::InvalidArgument, "non-annulus grids start at r = 0");
}

RadialGrid RadialGrid::uniform(double r_max, std::size_t intervals) {
    if (intervals < min_intervals) throw Error(ErrorCode::TooCoarse, "grid needs at least 16 intervals");
    if (!(r_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "r_max must be positive");
    std::vector<double> r(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) r[i] = r_max * static_cast<double>(i) / static_cast<double>(intervals);
    r.back() = r_max;
    return RadialGrid(std::move(r), Grading::Uniform);
}

RadialGrid RadialGrid::log_graded(double r_max, std::size_t intervals, double h_min_fraction) {
    if (intervals < min_intervals) throw Error(ErrorCode::TooCoarse, "grid needs at least 16 intervals");
    if (!(r_max > 0.0) || !(h_min_fraction > 0.0))
        throw Error(ErrorCode::InvalidArgument, "r_max and h_min_fraction must be positive");
    const double m = static_cast<double>(intervals);
    if (h_min_fraction >= 1.0 / m) return uniform(r_max, intervals);
    auto first_cell = [m](double b) { return std::expm1(b / m) / std::expm1(b); };
    double lo = 1e-12, hi = 700.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (first_cell(mid) > h_min_fraction)
            lo = mid;
        else
            hi = mid;
    }
    const double b = 0.5 * (lo + hi);
    std::vector<double> r(intervals + 1);
    const double denom = std::expm1(b);
    for (std::size_t i = 0; i <= intervals; ++i) r[i] = r_max * std::expm1(b * static_cast<double>(i) / m) / denom;
    r.front() = 0.0;
    r.back() = r_max;
    return RadialGrid(std::move(r), Grading::LogarithmicNearZero);
}

RadialGrid RadialGrid::annulus(double r_min, double r_max, std::size_t intervals) {
    if (intervals < min_intervals) throw Error(ErrorCode::TooCoarse, "grid needs at least 16 intervals");
    if (!(r_min > 0.0) || !(r_max > r_min))
        throw Error(ErrorCode::InvalidArgument, "annulus needs 0 < r_min < r_max");
    std::vector<double> r(intervals + 1);
    const double h = (r_max - r_min) / static_cast<double>(intervals);
    for (std::size_t i = 0; i <= intervals; ++i) r[i] = r_min + h * static_cast<double>(i);
    r.back() = r_max;
    return RadialGrid(std::move(r), Grading::Annulus);
}

RadialGrid RadialGrid::from_nodes(std::vector<double> nodes) {
    if (nodes.empty()) throw Error(ErrorCode::TooCoarse, "grid needs nodes");
    const Grading g = nodes.front() == 0.0 ? Grading::Uniform : Grading::Annulus;
    return RadialGrid(std::move(nodes), g);
}

double RadialGrid::smallest_cell() const {
    double h = nodes_[1] - nodes_[0];
    for (std::size_t i = 1; i + 1 < nodes_.size(); ++i) h = std::min(h, nodes_[i + 1] - nodes_[i]);
    return h;
}

GridPtr make_grid(RadialGrid grid) {
    return std::make_shared<const RadialGrid>(std::move(grid));
}

RadialField::RadialField(GridPtr grid, std::vector<double> values, std::optional<double> time)
    : grid_(std::move(grid)), values_(std::move(values)), time_(time) {
    if (!grid_) throw Error(ErrorCode::InvalidArgument, "field without grid");
    if (values_.size() != grid_->size())
        throw Error(ErrorCode::InvalidArgument, "field needs one value per grid node");
    for (double v : values_)
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "field values must be finite");
}

double RadialField::sup_norm() const {
    double s = 0.0;
    for (double v : values_) s = std::max(s, std::abs(v));
    return s;
}

namespace {

struct Bridge {
    double a, b, c;
};

// x^3 (a + b x + c x^2) on x = r - 1 in [0, 1], matching the exponential tail
// value, slope and curvature at r = 2.
Bridge bridge_coefficients(const Bridged& p) {
    const double t0 = p.tail_amplitude;
    const double t1 = -p.tail_decay * p.tail_amplitude;
    const double t2 = p.tail_decay * p.tail_decay * p.tail_amplitude;
    // [1 1 1; 3 4 5; 6 12 20] [a b c]^T = [t0 t1 t2]^T
    std::array<std::array<double, 4>, 3> m{{{1, 1, 1, t0}, {3, 4, 5, t1}, {6, 12, 20, t2}}};
    for (int col = 0; col < 3; ++col) {
        for (int row = col + 1; row < 3; ++row) {
            const double f = m[row][col] / m[col][col];
            for (int k = col; k < 4; ++k) m[row][k] -= f * m[col][k];
        }
    }
    std::array<double, 3> x{};
    for (int row = 2; row >= 0; --row) {
        double acc = m[row][3];
        for (int k = row + 1; k < 3; ++k) acc -= m[row][k] * x[k];
        x[row] = acc / m[row][row];
    }
    return {x[0], x[1], x[2]};
}

double bridged_value(const Bridged& p, double r) {
    if (r <= 1.0) {
        const double q = (r - 1.0) * (r - 1.0);
        return p.k * r * r * q * q;
    }
    if (r < 2.0) {
        const Bridge br = bridge_coefficients(p);
        const double x = r - 1.0;
        return x * x * x * (br.a + br.b * x + br.c * x * x);
    }
    return p.tail_amplitude * std::exp(-p.tail_decay * (r - 2.0));
}

void validate(const InitialData& data) {
    std::visit(
        [](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            auto fail = [](const char* msg) { throw Error(ErrorCode::InvalidInitialData, msg); };
            if constexpr (std::is_same_v<T, Gaussian>) {
                if (!(f.amplitude >= 0.0) || !(f.sigma > 0.0)) fail("gaussian needs A >= 0, sigma > 0");
            } else if constexpr (std::is_same_v<T, Plateau>) {
                if (!(f.amplitude >= 0.0) || !(f.radius > 0.0) || !(f.edge_width > 0.0))
                    fail("plateau needs A >= 0, R0 > 0, width > 0");
            } else if constexpr (std::is_same_v<T, Bridged>) {
                if (!(f.k > 0.0) || !(f.tail_decay > 0.0) || !(f.tail_amplitude >= 0.0))
                    fail("bridged data need k > 0, decay > 0, tail amplitude >= 0");
                for (int i = 1; i < 400; ++i) {
                    if (bridged_value(f, 1.0 + i / 400.0) < 0.0) fail("bridged data go negative on the bridge");
                }
            } else {
                if (!(f.value >= 0.0)) fail("constant density must be >= 0");
            }
        },
        data.family);
}

}  // namespace

double evaluate_initial(const InitialData& data, double r) {
    return std::visit(
        [r](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return f.amplitude * std::exp(-(r * r) / (f.sigma * f.sigma));
            } else if constexpr (std::is_same_v<T, Plateau>) {
                return 0.5 * f.amplitude * std::erfc((r - f.radius) / f.edge_width);
            } else if constexpr (std::is_same_v<T, Bridged>) {
                return bridged_value(f, r);
            } else {
                return f.value;
            }
        },
        data.family);
}

RadialField build_initial(const InitialData& data, GridPtr grid) {
    validate(data);
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = evaluate_initial(data, (*grid)[i]);
        if (v[i] < 0.0) throw Error(ErrorCode::InvalidInitialData, "initial density is negative");
    }
    RadialField field(std::move(grid), std::move(v), 0.0);
    if (data.require_nonincreasing && !check_radially_nonincreasing(field, 1e-12))
        throw Error(ErrorCode::InvalidInitialData, "initial density is not radially nonincreasing");
    return field;
}

std::vector<double> cumulative_moment(const RadialGrid& grid, std::span<const double> u, Dimension dim) {
    const int n = dim.value();
    const auto [gx, gw] = num::gauss_legendre(n / 2 + 1);
    std::vector<double> acc(grid.size(), 0.0);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double a = grid[i];
        const double b = grid[i + 1];
        const double h = b - a;
        double cell = 0.0;
        for (std::size_t q = 0; q < gx.size(); ++q) {
            const double t = 0.5 * (gx[q] + 1.0);
            const double s = a + h * t;
            cell += gw[q] * std::pow(s, n - 1) * (u[i] * (1.0 - t) + u[i + 1] * t);
        }
        acc[i + 1] = acc[i] + 0.5 * h * cell;
    }
    return acc;
}

RadialField w_from_u(const RadialField& u, Dimension dim, std::optional<double> inner_integral) {
    const RadialGrid& grid = u.grid();
    if (!grid.starts_at_origin() && !inner_integral)
        throw Error(ErrorCode::MissingInnerMass, "annulus grid needs int_0^{r_min} s^{N-1} u ds");
    const std::vector<double> moment = cumulative_moment(grid, u.values(), dim);
    const double offset = grid.starts_at_origin() ? 0.0 : *inner_integral;
    const double n = dim.as_double();
    std::vector<double> w(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = grid[i];
        w[i] = r == 0.0 ? u[0] / n : (offset + moment[i]) / std::pow(r, n);
    }
    return RadialField(u.grid_ptr(), std::move(w), u.time());
}

RadialField u_from_w(const RadialField& w, Dimension dim) {
    const RadialGrid& grid = w.grid();
    if (grid.size() < 3) throw Error(ErrorCode::TooCoarse, "u_from_w needs at least 3 nodes");
    const std::vector<double> dw = num::first_derivative(grid.nodes(), w.values());
    const double n = dim.as_double();
    std::vector<double> u(grid.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = grid[i] * dw[i] + n * w[i];
    return RadialField(w.grid_ptr(), std::move(u), w.time());
}

std::vector<double> mass_weights(const RadialGrid& grid, Dimension dim) {
    const int n = dim.value();
    const auto [gx, gw] = num::gauss_legendre(n / 2 + 1);
    const double sigma = unit_sphere_area(dim);
    std::vector<double> q(grid.size(), 0.0);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double a = grid[i];
        const double h = grid[i + 1] - a;
        double left = 0.0, right = 0.0;
        for (std::size_t k = 0; k < gx.size(); ++k) {
            const double t = 0.5 * (gx[k] + 1.0);
            const double p = gw[k] * std::pow(a + h * t, n - 1);
            left += p * (1.0 - t);
            right += p * t;
        }
        q[i] += 0.5 * h * left * sigma;
        q[i + 1] += 0.5 * h * right * sigma;
    }
    return q;
}

double mass(const RadialField& u, Dimension dim) {
    const std::vector<double> moment = cumulative_moment(u.grid(), u.values(), dim);
    return unit_sphere_area(dim) * moment.back();
}

bool check_radially_nonincreasing(std::span<const double> values, double tol) {
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        if (values[i + 1] - values[i] > tol * scale) return false;
    return true;
}

bool check_radially_nonincreasing(const RadialField& f, double tol) {
    return check_radially_nonincreasing(f.values(), tol);
}

}  // namespace kslab
