#include <doctest.h>

#include <cmath>

#include "kslab/ode.hpp"

using namespace kslab;

TEST_CASE("Radau IIA tableau satisfies the simplifying conditions B(5) and C(3)") {
    const auto& t = ode::radau_iia3();
    for (int k = 1; k <= 5; ++k) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i) s += t.b[i] * std::pow(t.c[i], k - 1);
        CHECK(s == doctest::Approx(1.0 / k).epsilon(1e-14));
    }
    for (int i = 0; i < 3; ++i)
        for (int k = 1; k <= 3; ++k) {
            double s = 0.0;
            for (int j = 0; j < 3; ++j) s += t.a[i][j] * std::pow(t.c[j], k - 1);
            CHECK(s == doctest::Approx(std::pow(t.c[i], k) / k).epsilon(1e-14));
        }
    CHECK(t.c[2] == 1.0);
}

TEST_CASE("Dormand-Prince tableau satisfies its quadrature and row-sum conditions") {
    const auto& t = ode::dopri5_tableau();
    for (int i = 0; i < 7; ++i) {
        double row = 0.0;
        for (int j = 0; j < 7; ++j) row += t.a[i][j];
        CHECK(row == doctest::Approx(t.c[i]).epsilon(1e-14));
    }
    for (int k = 1; k <= 5; ++k) {
        double s = 0.0;
        for (int i = 0; i < 7; ++i) s += t.b[i] * std::pow(t.c[i], k - 1);
        CHECK(s == doctest::Approx(1.0 / k).epsilon(1e-14));
    }
    for (int k = 1; k <= 4; ++k) {
        double s = 0.0;
        for (int i = 0; i < 7; ++i) s += t.b_hat[i] * std::pow(t.c[i], k - 1);
        CHECK(s == doctest::Approx(1.0 / k).epsilon(1e-14));
    }
    // third-order tree sum b_i a_ij c_j = 1/6
    double s = 0.0;
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) s += t.b[i] * t.a[i][j] * t.c[j];
    CHECK(s == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
}

namespace {

const ode::Rhs decay = [](double, std::span<const double> y, std::span<double> d) { d[0] = -y[0]; };
const ode::Jacobian decay_jac = [](double, std::span<const double>, std::span<double> j) { j[0] = -1.0; };

ode::Options fixed_step(double h) {
    ode::Options o;
    o.rtol = o.atol = 1e3;
    o.h_init = o.h_max = h;
    return o;
}

}  // namespace

TEST_CASE("fixed-step convergence orders") {
    auto dopri_err = [](double h) {
        const auto r = ode::dopri5(decay, 0.0, {1.0}, 2.0, fixed_step(h));
        return std::abs(r.y[0] - std::exp(-2.0));
    };
    auto radau_err = [](double h) {
        const auto r = ode::radau5(decay, decay_jac, 0.0, {1.0}, 2.0, fixed_step(h));
        return std::abs(r.y[0] - std::exp(-2.0));
    };
    CHECK(std::log2(dopri_err(0.2) / dopri_err(0.1)) == doctest::Approx(5.0).epsilon(0.1));
    CHECK(std::log2(radau_err(0.4) / radau_err(0.2)) > 4.5);
}

TEST_CASE("adaptive integrators meet their tolerance in both directions") {
    ode::Options o;
    o.rtol = 1e-10;
    o.atol = 1e-12;
    const auto fwd = ode::dopri5(decay, 0.0, {1.0}, 3.0, o);
    CHECK(fwd.status == ode::Status::Completed);
    CHECK(fwd.y[0] == doctest::Approx(std::exp(-3.0)).epsilon(1e-8));
    const auto back = ode::dopri5(decay, 3.0, {std::exp(-3.0)}, 0.0, o);
    CHECK(back.y[0] == doctest::Approx(1.0).epsilon(1e-8));
    const auto rad = ode::radau5(decay, decay_jac, 0.0, {1.0}, 3.0, o);
    CHECK(rad.status == ode::Status::Completed);
    CHECK(rad.y[0] == doctest::Approx(std::exp(-3.0)).epsilon(1e-8));
}

TEST_CASE("Radau handles a stiff problem with few steps") {
    const double lam = -1e5;
    ode::Rhs f = [&](double t, std::span<const double> y, std::span<double> d) {
        d[0] = lam * (y[0] - std::cos(t)) - std::sin(t);
    };
    ode::Jacobian j = [&](double, std::span<const double>, std::span<double> jac) { jac[0] = lam; };
    ode::Options o;
    o.rtol = 1e-8;
    o.atol = 1e-10;
    const auto r = ode::radau5(f, j, 0.0, {1.0}, 1.0, o);
    CHECK(r.status == ode::Status::Completed);
    CHECK(r.y[0] == doctest::Approx(std::cos(1.0)).epsilon(1e-7));
    CHECK(r.accepted < 2000);
}

TEST_CASE("dense output is accurate inside each step") {
    ode::Options o;
    o.rtol = 1e-10;
    o.atol = 1e-12;
    double worst = 0.0;
    ode::dopri5(decay, 0.0, {1.0}, 2.0, o, [&](const ode::DopriDense& d) {
        const double mid = 0.5 * (d.t_old() + d.t_new());
        worst = std::max(worst, std::abs(d.eval(mid, 0) - std::exp(-mid)));
        return true;
    });
    CHECK(worst < 1e-9);
}

TEST_CASE("integrator status codes") {
    ode::Options o;
    const auto stop = ode::dopri5(decay, 0.0, {1.0}, 1.0, o, [](const ode::DopriDense&) { return false; });
    CHECK(stop.status == ode::Status::Interrupted);
    ode::Rhs nan = [](double, std::span<const double>, std::span<double> d) { d[0] = std::nan(""); };
    CHECK(ode::dopri5(nan, 0.0, {1.0}, 1.0, o).status == ode::Status::NonFinite);
    ode::Options few = o;
    few.max_steps = 3;
    few.h_max = 1e-3;
    CHECK(ode::dopri5(decay, 0.0, {1.0}, 1.0, few).status == ode::Status::TooManySteps);
    ode::Rhs blow = [](double, std::span<const double> y, std::span<double> d) { d[0] = y[0] * y[0]; };
    const auto r = ode::dopri5(blow, 0.0, {1.0}, 2.0, o);
    CHECK(r.status != ode::Status::Completed);
    CHECK(r.t < 1.0 + 1e-6);
}
