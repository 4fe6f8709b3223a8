#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "geolab/depth.hpp"

using namespace geolab;
using data::DistSpec;
using numerics::Rng;
using numerics::SeedSpec;

TEST_CASE("depth at the center of symmetric ball data is about 1/2") {
    const auto ds = data::sample_features(DistSpec::ball(3), 10000, {101, 0});
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(3);
    const double depth = depth::tukey_depth_approx(origin, ds, 512, {101, 1});
    CHECK(std::abs(depth - 0.5) < 0.05);
}

TEST_CASE("sphere data points have depth exactly 1/n with data directions") {
    const auto base = data::sample_features(DistSpec::sphere(6), 300, {102, 0});
    for (int i = 0; i < 20; ++i) {
        const double depth =
            depth::tukey_depth_approx(base.X.row(i).transpose(), base, 16, {102, 1}, true);
        CHECK(depth <= 1.0 / base.n() + 1e-12);
        CHECK(depth >= 1.0 / base.n() - 1e-12);  // its own halfspace keeps it
    }
    // excluding the point itself drops the depth to zero
    const double excl =
        depth::tukey_depth_approx(base.X.row(0).transpose(), base, 16, {102, 1}, false);
    CHECK(excl == 0.0);
}

TEST_CASE("points far outside the hull have zero depth") {
    const auto ds = data::sample_features(DistSpec::ball(4), 500, {103, 0});
    Eigen::VectorXd far = Eigen::VectorXd::Zero(4);
    far[0] = 10.0;
    CHECK(depth::tukey_depth_approx(far, ds, 64, {103, 1}) == 0.0);
}

TEST_CASE("depth estimates are deterministic and shrink with more directions") {
    const auto ds = data::sample_features(DistSpec::gaussian(5), 800, {104, 0});
    Rng rng(SeedSpec{104, 9});
    const Eigen::VectorXd x = 0.3 * rng.gaussian_vector(5);
    const double a = depth::tukey_depth_approx(x, ds, 128, {104, 1});
    const double b = depth::tukey_depth_approx(x, ds, 128, {104, 1});
    CHECK(a == b);
    // superset of candidate directions can only lower the minimum
    const double more = depth::tukey_depth_approx(x, ds, 256, {104, 1});
    CHECK(more <= a + 1e-15);
}

TEST_CASE("depth_error_scan on a constant net with constant labels") {
    auto ds = data::sample_features(DistSpec::ball(3), 200, {105, 0});
    ds.y = Eigen::VectorXd::Constant(200, 1.0);
    ds.clean_labels = Eigen::VectorXd::Constant(200, 1.0);
    ds.recompute_bounds();

    model::Network net;  // constant zero net (width 0)
    net.W.resize(0, 3);
    net.b.resize(0);
    net.v.resize(0);
    net.beta = 0.0;

    const auto report = depth::depth_error_scan(net, ds, 64, {105, 1});
    REQUIRE(report.quintiles.size() == 5);
    for (const auto& q : report.quintiles) {
        CHECK(q.mean_error == doctest::Approx(1.0));
        CHECK(q.median_error == doctest::Approx(1.0));
    }
    CHECK(report.spearman == 0.0);

    // depth requires clean labels
    ds.clean_labels.reset();
    CHECK_THROWS_AS(depth::depth_error_scan(net, ds, 16, {105, 2}), SpecError);
}

TEST_CASE("scan produces one scatter row per point and sorted quintiles") {
    auto ds = data::sample_features(DistSpec::ball(2), 100, {106, 0});
    ds.y = Eigen::VectorXd::Zero(100);
    ds.clean_labels = Eigen::VectorXd::Zero(100);
    model::Network net = model::init_network(2, 4, 1.0, true, {106, 1});
    const auto report = depth::depth_error_scan(net, ds, 64, {106, 2});
    CHECK(report.points.size() == 100);
    for (std::size_t q = 1; q < report.quintiles.size(); ++q)
        CHECK(report.quintiles[q].depth_lo >= report.quintiles[q - 1].depth_lo);
    for (const auto& pt : report.points) {
        CHECK(pt.depth >= 0.0);
        CHECK(pt.depth <= 1.0);
    }

    const auto dir = std::filesystem::temp_directory_path();
    depth::save_scatter_csv(report, (dir / "geolab_scatter.csv").string());
    depth::save_quintiles_csv(report, (dir / "geolab_quintiles.csv").string());
    CHECK(std::filesystem::file_size(dir / "geolab_scatter.csv") > 0);
}
