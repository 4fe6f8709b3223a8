#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "geolab/curvature.hpp"
#include "geolab/flatnet.hpp"

using namespace geolab;
using data::DistSpec;
using numerics::Rng;
using numerics::SeedSpec;

namespace {

data::Dataset sphere_data(int n, int d, SeedSpec seed, double label_range = 1.0) {
    auto ds = data::sample_features(DistSpec::sphere(d), n, seed);
    Rng rng(seed.stream(3));
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) ds.y[i] = rng.uniform(-label_range, label_range);
    ds.recompute_bounds();
    return ds;
}

}  // namespace

TEST_CASE("all-zero labels build the empty, trivially flat network") {
    auto ds = data::sample_features(DistSpec::sphere(5), 10, {71, 0});
    ds.y = Eigen::VectorXd::Zero(10);
    ds.recompute_bounds();
    const auto report = flatnet::build_flat_interpolator(ds, true);
    CHECK(report.width == 0);
    CHECK(report.net.beta == 0.0);
    CHECK(report.max_interp_error == 0.0);
    // parameters reduce to the output bias: H = [1]
    CHECK(report.lambda_max == doctest::Approx(1.0));
    CHECK(report.lambda_max <= report.bound_rhs + 1e-6);

    const auto no_bias = flatnet::build_flat_interpolator(ds, false);
    CHECK(no_bias.lambda_max == 0.0);
}

TEST_CASE("hand-computed two-point construction on orthogonal inputs") {
    data::Dataset ds;
    ds.X.resize(2, 2);
    ds.X << 1, 0, 0, 1;
    ds.y.resize(2);
    ds.y << 1, -1;
    ds.recompute_bounds();

    const auto report = flatnet::build_flat_interpolator(ds, true);
    CHECK(report.width == 2);
    CHECK(report.rho[0] == doctest::Approx(0.0));
    CHECK(report.rho[1] == doctest::Approx(0.0));
    // b = 1/2, pre-rescale v = y/(1-b) = (2, -2); after rescale |v| = 1
    CHECK(report.net.v[0] == 1.0);
    CHECK(report.net.v[1] == -1.0);
    CHECK(report.net.W.row(0).norm() == doctest::Approx(2.0));
    const Eigen::VectorXd pred = model::forward(report.net, ds.X);
    CHECK(pred[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pred[1] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("antipodal pair has rho = -1 and unit margins") {
    data::Dataset ds;
    ds.X.resize(2, 3);
    ds.X << 1, 0, 0, -1, 0, 0;
    ds.y.resize(2);
    ds.y << 0.5, 0.5;
    ds.recompute_bounds();

    const auto report = flatnet::build_flat_interpolator(ds, true);
    CHECK(report.rho[0] == doctest::Approx(-1.0));
    CHECK(report.rho[1] == doctest::Approx(-1.0));
    // b = 0, pre-activation margins are +-|v_k| * 1
    const auto check = flatnet::verify_one_hot_activation(report, ds);
    CHECK(check.ok);
    CHECK(check.min_positive_margin == doctest::Approx(0.5));   // z_kk = |y_k|
    CHECK(check.max_negative_margin == doctest::Approx(-0.5));
}

TEST_CASE("post-rescale diagonal pre-activation equals |y_k|") {
    const auto ds = sphere_data(30, 8, {72, 0});
    const auto report = flatnet::build_flat_interpolator(ds, true);
    int idx = 0;
    for (int k : report.sample_of_neuron) {
        const double z = report.net.W.row(idx).dot(ds.X.row(k)) - report.net.b[idx];
        CHECK(z == doctest::Approx(std::abs(ds.y[k])).epsilon(1e-12));
        ++idx;
    }
}

TEST_CASE("interpolation, one-hot pattern, and the curvature bound on sphere data") {
    const auto ds = sphere_data(100, 10, {73, 0});
    const auto report = flatnet::build_flat_interpolator(ds, true);
    CHECK(report.width <= ds.n());
    CHECK(report.max_interp_error <= 1e-9);
    for (double rho : report.rho) CHECK(rho < 1.0);

    const auto one_hot = flatnet::verify_one_hot_activation(report, ds);
    CHECK(one_hot.ok);
    CHECK(one_hot.min_positive_margin > 0.0);
    CHECK(one_hot.max_negative_margin < 0.0);

    CHECK(report.lambda_max <= report.bound_rhs + 1e-6);
    CHECK(report.lambda_max_power <= report.lambda_max + 1e-9);
    CHECK(report.lambda_max_power >= 0.8 * report.lambda_max);

    const auto no_bias = flatnet::build_flat_interpolator(ds, false);
    CHECK(no_bias.bound_rhs == doctest::Approx(report.bound_rhs - 1.0));
    CHECK(no_bias.lambda_max <= no_bias.bound_rhs + 1e-6);
}

TEST_CASE("hessian equals the tangent Gram exactly at the construction") {
    const auto ds = sphere_data(25, 6, {74, 0});
    const auto report = flatnet::build_flat_interpolator(ds, true);
    const Eigen::MatrixXd H = curvature::dense_hessian(report.net, ds);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    CHECK(std::abs(es.eigenvalues().maxCoeff() - report.lambda_max) < 1e-8);
}

TEST_CASE("precondition violations are rejected") {
    // non-unit input
    data::Dataset off;
    off.X.resize(2, 2);
    off.X << 0.5, 0.0, 0.0, 1.0;
    off.y.resize(2);
    off.y << 1, 1;
    off.recompute_bounds();
    CHECK_THROWS_AS(flatnet::build_flat_interpolator(off, true), DomainError);

    // duplicate inputs
    data::Dataset dup;
    dup.X.resize(2, 2);
    dup.X << 1, 0, 1, 0;
    dup.y.resize(2);
    dup.y << 1, 2;
    dup.recompute_bounds();
    CHECK_THROWS_AS(flatnet::build_flat_interpolator(dup, true), DomainError);
}

TEST_CASE("report serializes to json") {
    const auto ds = sphere_data(12, 4, {75, 0});
    const auto report = flatnet::build_flat_interpolator(ds, true);
    const auto path = (std::filesystem::temp_directory_path() / "geolab_flat.json").string();
    flatnet::save_report_json(report, path);
    CHECK(std::filesystem::file_size(path) > 0);
}
