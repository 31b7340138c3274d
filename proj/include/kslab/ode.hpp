#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

// One-step integrators used by the profile module: a 3-stage Radau IIA
// method for the stiff V-equation near s = 0 and Dormand-Prince 5(4) with
// dense output for the continuation in xi.
namespace kslab::ode {

using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;
// Row-major n x n Jacobian df/dy.
using Jacobian = std::function<void(double t, std::span<const double> y, std::span<double> jac)>;

struct Options {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 0.0;  // 0 picks a guess from the right-hand side
    double h_min = 1e-14;
    double h_max = std::numeric_limits<double>::infinity();
    double h_max_rel = 0.0;  // if > 0, |h| <= h_max_rel * |t|
    std::size_t max_steps = 2'000'000;
};

enum class Status { Completed, Interrupted, StepUnderflow, TooManySteps, NonFinite, NewtonFailure };

const char* to_string(Status s);

struct Result {
    Status status = Status::Completed;
    double t = 0.0;
    std::vector<double> y;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

struct RadauTableau {
    std::array<std::array<double, 3>, 3> a;
    std::array<double, 3> b;
    std::array<double, 3> c;
};
const RadauTableau& radau_iia3();

struct DopriTableau {
    std::array<std::array<double, 7>, 7> a;
    std::array<double, 7> b;      // fifth order
    std::array<double, 7> b_hat;  // embedded fourth order
    std::array<double, 7> c;
};
const DopriTableau& dopri5_tableau();

// Continuous extension of one accepted Dormand-Prince step (fifth order).
class DopriDense {
public:
    double t_old() const noexcept { return t_old_; }
    double t_new() const noexcept { return t_old_ + h_; }
    std::span<const double> y_new() const noexcept { return y_new_; }
    void eval(double t, std::span<double> out) const;
    double eval(double t, std::size_t component) const;

private:
    friend Result dopri5(const Rhs&, double, std::vector<double>, double, const Options&,
                         const std::function<bool(const DopriDense&)>&);
    double t_old_ = 0.0;
    double h_ = 0.0;
    std::vector<double> y_new_;
    std::array<std::vector<double>, 5> r_;
};

// Integrates from t0 to t1 (either direction). on_step sees every accepted
// step and may return false to stop (status Interrupted).
Result dopri5(const Rhs& f, double t0, std::vector<double> y0, double t1, const Options& opt,
              const std::function<bool(const DopriDense&)>& on_step = {});

// Radau IIA (order 5) with full Newton on the stage equations and a step
// doubling error estimate. on_step(t, y) sees every accepted step.
Result radau5(const Rhs& f, const Jacobian& jac, double t0, std::vector<double> y0, double t1,
              const Options& opt, const std::function<bool(double, std::span<const double>)>& on_step = {});

// Dense LU solve with partial pivoting; a is row-major n x n and is overwritten.
bool solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n);

}  // namespace kslab::ode
