#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "geolab/numerics.hpp"

using namespace geolab;
using numerics::Rng;
using numerics::SeedSpec;

namespace {

// Independent normal-equations oracle for straight-line least squares.
std::pair<double, double> ols_oracle(const std::vector<double>& xs,
                                     const std::vector<double>& ys) {
    const int n = static_cast<int>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

}  // namespace

TEST_CASE("ols_loglog recovers an exact power law") {
    const auto fit = numerics::ols_loglog({1, 2, 4}, {1, 4, 16});
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(fit.r2 == doctest::Approx(1.0));
    CHECK(fit.stderr_slope == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ols_loglog constant series convention") {
    const auto fit = numerics::ols_loglog({1, 10, 100}, {5, 5, 5});
    CHECK(fit.slope == 0.0);
    CHECK(fit.r2 == 1.0);
    CHECK(fit.stderr_slope == 0.0);
}

TEST_CASE("ols_loglog noisy power law matches the normal-equations oracle") {
    Rng rng(SeedSpec{42, 0});
    std::vector<double> xs{1, 2, 3, 4}, ys;
    for (double x : xs) ys.push_back(2.0 * std::pow(x, -1.5) * (1.0 + 0.01 * rng.normal()));
    const auto fit = numerics::ols_loglog(xs, ys);
    CHECK(std::abs(fit.slope - (-1.5)) < 0.05);

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(ys[i]));
    }
    const auto [oslope, ointercept] = ols_oracle(lx, ly);
    CHECK(fit.slope == doctest::Approx(oslope).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(ointercept).epsilon(1e-12));
}

TEST_CASE("ols_loglog errors") {
    CHECK_THROWS_AS(numerics::ols_loglog({1, 2}, {1, 2}), ArityError);
    CHECK_THROWS_AS(numerics::ols_loglog({1, 2, -3}, {1, 2, 3}), DomainError);
    CHECK_THROWS_AS(numerics::ols_loglog({1, 2, 3}, {1, 0, 3}), DomainError);
}

TEST_CASE("ols_loglog is invariant to pair reordering") {
    std::vector<double> xs{1, 3, 7, 20, 55}, ys{2, 5, 13, 31, 90};
    const auto fit = numerics::ols_loglog(xs, ys);
    std::vector<std::size_t> perm{4, 2, 0, 1, 3};
    std::vector<double> xp, yp;
    for (auto i : perm) {
        xp.push_back(xs[i]);
        yp.push_back(ys[i]);
    }
    const auto fit2 = numerics::ols_loglog(xp, yp);
    CHECK(fit.slope == doctest::Approx(fit2.slope).epsilon(1e-13));
    CHECK(fit.r2 == doctest::Approx(fit2.r2).epsilon(1e-13));
}

TEST_CASE("power_iteration on a diagonal operator") {
    const auto matvec = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd y = x;
        y[0] *= 3.0;
        y[1] *= 1.0;
        y[2] *= 0.0;
        return y;
    };
    const auto res = numerics::power_iteration(matvec, 3, 1e-10, 10000, {1, 0});
    CHECK(res.converged);
    CHECK(res.value == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("power_iteration on a rank-1 operator") {
    Rng rng(SeedSpec{2, 0});
    Eigen::VectorXd v = rng.gaussian_vector(6);
    v *= std::sqrt(7.0) / v.norm();  // ||v||^2 = 7
    const auto matvec = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(v * v.dot(x)); };
    const auto res = numerics::power_iteration(matvec, 6, 1e-12, 10000, {3, 0});
    CHECK(res.converged);
    CHECK(res.value == doctest::Approx(7.0).epsilon(1e-10));
}

TEST_CASE("power_iteration matches a dense symmetric eigensolver") {
    Rng rng(SeedSpec{7, 0});
    Eigen::MatrixXd G(20, 20);
    for (int i = 0; i < 20; ++i) G.col(i) = rng.gaussian_vector(20);
    Eigen::MatrixXd A = G * G.transpose();  // PSD
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    const double oracle = es.eigenvalues().maxCoeff();

    const auto matvec = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(A * x); };
    const auto res = numerics::power_iteration(matvec, 20, 1e-12, 50000, {8, 0});
    CHECK(res.converged);
    CHECK(std::abs(res.value - oracle) / oracle < 1e-6);

    // scaling: c*A has estimate c*lambda
    const auto scaled = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.5 * (A * x)); };
    const auto res2 = numerics::power_iteration(scaled, 20, 1e-12, 50000, {8, 0});
    CHECK(res2.value / res.value == doctest::Approx(2.5).epsilon(1e-7));
}

TEST_CASE("power_iteration restarts when started orthogonal to the top eigenspace") {
    const int dim = 4;
    const auto matvec = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
        y[0] = 5.0 * x[0];
        return y;
    };
    Eigen::VectorXd start = Eigen::VectorXd::Zero(dim);
    start[1] = 1.0;
    const auto res = numerics::power_iteration(matvec, dim, 1e-10, 10000, {9, 0}, start);
    CHECK(res.converged);
    CHECK(res.value == doctest::Approx(5.0).epsilon(1e-8));
}

TEST_CASE("power_iteration errors and degenerate cases") {
    const auto zero = [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd(Eigen::VectorXd::Zero(x.size()));
    };
    CHECK_THROWS_AS(numerics::power_iteration(zero, 0, 1e-8, 10, {1, 0}), ArityError);
    const auto res = numerics::power_iteration(zero, 3, 1e-8, 100, {1, 0});
    CHECK(res.converged);
    CHECK(res.value == 0.0);
}

TEST_CASE("identical SeedSpec gives bitwise-identical streams, distinct ids differ") {
    Rng a(SeedSpec{123, 5});
    Rng b(SeedSpec{123, 5});
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(SeedSpec{123, 6});
    int same = 0;
    Rng a2(SeedSpec{123, 5});
    for (int i = 0; i < 1000; ++i)
        if (a2.next_u64() == c.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("derived streams are stable and distinct") {
    const SeedSpec base{9, 0};
    Rng a(base.stream(1));
    Rng b(base.stream(2));
    CHECK(a.next_u64() != b.next_u64());
    Rng a2(base.stream(1));
    Rng a3(base.stream(1));
    CHECK(a2.next_u64() == a3.next_u64());
}

TEST_CASE("rng distributions have sane moments") {
    Rng rng(SeedSpec{77, 0});
    double acc = 0, acc2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        acc += z;
        acc2 += z * z;
    }
    CHECK(std::abs(acc / n) < 0.01);
    CHECK(std::abs(acc2 / n - 1.0) < 0.02);

    std::vector<double> draws;
    for (int i = 0; i < 20000; ++i) draws.push_back(double(rng.poisson(4.0)));
    CHECK(std::abs(numerics::mean(draws) - 4.0) < 0.1);
    CHECK(std::abs(numerics::variance(draws) - 4.0) < 0.3);

    for (int i = 0; i < 10; ++i)
        CHECK(rng.on_sphere(5).norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 10; ++i) CHECK(rng.in_ball(5).norm() <= 1.0);
}

TEST_CASE("spearman ranks with ties") {
    CHECK(numerics::spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(numerics::spearman({1, 2, 3, 4}, {40, 30, 20, 10}) == doctest::Approx(-1.0));
    CHECK(numerics::spearman({1, 2, 3, 4}, {7, 7, 7, 7}) == 0.0);
    CHECK(numerics::spearman({1, 2, 3, 4, 5}, {1, 8, 27, 64, 125}) == doctest::Approx(1.0));
}
