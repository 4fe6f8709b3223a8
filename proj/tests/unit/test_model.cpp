#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "geolab/data.hpp"
#include "geolab/model.hpp"

using namespace geolab;
using model::Network;
using numerics::Rng;
using numerics::SeedSpec;

namespace {

// Straightforward per-neuron double loop, kept independent of the
// vectorized forward path.
Eigen::VectorXd forward_oracle(const Network& net, const Eigen::MatrixXd& X) {
    Eigen::VectorXd out(X.rows());
    for (int i = 0; i < X.rows(); ++i) {
        double acc = net.beta;
        for (int k = 0; k < net.width(); ++k) {
            double z = -net.b[k];
            for (int c = 0; c < net.dim(); ++c) z += net.W(k, c) * X(i, c);
            acc += net.v[k] * std::max(z, 0.0);
        }
        out[i] = acc;
    }
    return out;
}

Network random_net(int K, int d, SeedSpec seed) {
    return model::init_network(d, K, 1.0, true, seed);
}

data::Dataset rand_dataset(int n, int d, SeedSpec seed) {
    auto ds = data::sample_features(data::DistSpec::ball(d), n, seed);
    Rng rng(seed.stream(99));
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) ds.y[i] = rng.normal();
    ds.recompute_bounds();
    return ds;
}

// Nudges biases until every pre-activation has margin >= tol.
Network with_margins(Network net, const Eigen::MatrixXd& X, double tol) {
    for (int k = 0; k < net.width(); ++k) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            bool ok = true;
            for (int i = 0; i < X.rows(); ++i) {
                const double z = net.W.row(k).dot(X.row(i)) - net.b[k];
                if (std::abs(z) < tol) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
            net.b[k] += 3.0 * tol;
        }
    }
    return net;
}

}  // namespace

TEST_CASE("forward constant and one-neuron arithmetic") {
    Network net;
    net.W = Eigen::MatrixXd::Zero(1, 2);
    net.W(0, 0) = 1.0;
    net.b = Eigen::VectorXd::Constant(1, 0.5);
    net.v = Eigen::VectorXd::Constant(1, 2.0);
    net.beta = 1.0;
    Eigen::MatrixXd X(1, 2);
    X << 1.0, 0.0;
    CHECK(model::forward(net, X)[0] == doctest::Approx(2.0));  // 2*relu(0.5)+1

    net.v[0] = 0.0;
    CHECK(model::forward(net, X)[0] == doctest::Approx(1.0));  // just beta
}

TEST_CASE("forward matches the per-neuron oracle") {
    const Network net = random_net(16, 4, {31, 0});
    const auto ds = rand_dataset(8, 4, {31, 1});
    const Eigen::VectorXd fast = model::forward(net, ds.X);
    const Eigen::VectorXd slow = forward_oracle(net, ds.X);
    CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gradient vanishes at an interpolating network") {
    const Network net = random_net(8, 3, {32, 0});
    auto ds = rand_dataset(20, 3, {32, 1});
    ds.y = model::forward(net, ds.X);  // force interpolation
    const auto lg = model::loss_and_grad(net, ds);
    CHECK(lg.loss == doctest::Approx(0.0));
    CHECK(lg.pack(true).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("gradient matches central finite differences away from kinks") {
    const auto ds = rand_dataset(12, 4, {33, 1});
    const Network net = with_margins(random_net(6, 4, {33, 0}), ds.X, 1e-3);
    const auto lg = model::loss_and_grad(net, ds);
    const Eigen::VectorXd grad = lg.pack(true);
    const Eigen::VectorXd theta = model::pack_params(net);

    const double h = 1e-5;
    Rng rng(SeedSpec{33, 7});
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd dir = rng.gaussian_vector(theta.size());
        dir.normalize();
        const auto fplus = model::unpack_params(theta + h * dir, 4, 6, true);
        const auto fminus = model::unpack_params(theta - h * dir, 4, 6, true);
        const double fd = (model::loss_and_grad(fplus, ds).loss -
                           model::loss_and_grad(fminus, ds).loss) /
                          (2.0 * h);
        const double an = grad.dot(dir);
        CHECK(std::abs(fd - an) / std::max(std::abs(an), 1e-8) < 1e-5);
    }
}

TEST_CASE("closed-form gradient for one active neuron on one sample") {
    // f(x) = v relu(w.x - b) + beta, residual r = f - y
    Network net;
    net.W = Eigen::MatrixXd::Zero(1, 2);
    net.W << 1.5, -0.5;
    net.b = Eigen::VectorXd::Constant(1, 0.2);
    net.v = Eigen::VectorXd::Constant(1, 2.0);
    net.beta = 0.3;
    Eigen::MatrixXd X(1, 2);
    X << 0.8, 0.4;
    Eigen::VectorXd y(1);
    y << 1.0;

    const double z = 1.5 * 0.8 - 0.5 * 0.4 - 0.2;  // 0.8, active
    const double f = 2.0 * z + 0.3;
    const double r = f - 1.0;
    const auto lg = model::loss_and_grad(net, X, y);
    CHECK(lg.loss == doctest::Approx(0.5 * r * r));
    CHECK(lg.gv[0] == doctest::Approx(r * z));
    CHECK(lg.gW(0, 0) == doctest::Approx(r * 2.0 * 0.8));
    CHECK(lg.gW(0, 1) == doctest::Approx(r * 2.0 * 0.4));
    CHECK(lg.gb[0] == doctest::Approx(-r * 2.0));
    CHECK(lg.gbeta == doctest::Approx(r));
}

TEST_CASE("loss equals half the mean squared residual of forward") {
    const Network net = random_net(5, 3, {34, 0});
    const auto ds = rand_dataset(17, 3, {34, 1});
    const Eigen::VectorXd r = model::forward(net, ds.X) - ds.y;
    const auto lg = model::loss_and_grad(net, ds);
    CHECK(lg.loss == doctest::Approx(0.5 * r.squaredNorm() / ds.n()).epsilon(1e-13));
}

TEST_CASE("homogeneous rescale preserves the function and the path norm") {
    Network net;
    net.W.resize(2, 3);
    net.W << 1, 0, 0, 0, 2, 1;
    net.b.resize(2);
    net.b << 0.1, -0.2;
    net.v.resize(2);
    net.v << 3.0, -2.0;
    net.beta = 0.4;

    const auto res = model::rescale_homogeneous(net);
    CHECK(res.dropped == 0);
    CHECK(res.net.v[0] == 1.0);
    CHECK(res.net.v[1] == -1.0);
    CHECK(res.net.W.row(0).norm() == doctest::Approx(3.0 * net.W.row(0).norm()));
    CHECK(res.net.b[1] == doctest::Approx(2.0 * net.b[1]));

    Rng rng(SeedSpec{35, 0});
    Eigen::MatrixXd X(10, 3);
    for (int i = 0; i < 10; ++i) X.row(i) = rng.in_ball(3).transpose();
    CHECK((model::forward(net, X) - model::forward(res.net, X)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(model::path_norm_unweighted(net) ==
          doctest::Approx(model::path_norm_unweighted(res.net)).epsilon(1e-12));

    // idempotence on an already normalized net
    const auto res2 = model::rescale_homogeneous(res.net);
    CHECK((res2.net.W - res.net.W).cwiseAbs().maxCoeff() == 0.0);

    // zero output weights are dropped with a count
    net.v[0] = 0.0;
    const auto dropped = model::rescale_homogeneous(net);
    CHECK(dropped.dropped == 1);
    CHECK(dropped.net.width() == 1);
}

TEST_CASE("positive 1-homogeneity of single neurons") {
    Network net = random_net(4, 3, {36, 0});
    Network scaled = net;
    const double c = 2.7;
    scaled.W.row(1) *= c;
    scaled.b[1] *= c;
    scaled.v[1] /= c;
    Rng rng(SeedSpec{36, 1});
    Eigen::MatrixXd X(7, 3);
    for (int i = 0; i < 7; ++i) X.row(i) = rng.in_ball(3).transpose();
    CHECK((model::forward(net, X) - model::forward(scaled, X)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unweighted path norm") {
    Network net;
    net.W.resize(2, 2);
    net.W << 2, 0, 0, 3;
    net.b = Eigen::VectorXd::Zero(2);
    net.v.resize(2);
    net.v << 1, -1;
    CHECK(model::path_norm_unweighted(net) == doctest::Approx(5.0));
    net.v.setZero();
    CHECK(model::path_norm_unweighted(net) == 0.0);
}

TEST_CASE("parameter packing round trip and layout") {
    const Network net = random_net(3, 4, {37, 0});
    const Eigen::VectorXd theta = model::pack_params(net);
    CHECK(theta.size() == 3 * (4 + 2) + 1);
    // layout: rows of W first
    CHECK(theta[0] == net.W(0, 0));
    CHECK(theta[4] == net.W(1, 0));
    CHECK(theta[3 * 4] == net.b[0]);
    CHECK(theta[3 * 4 + 3] == net.v[0]);
    CHECK(theta[theta.size() - 1] == net.beta);
    const Network back = model::unpack_params(theta, 4, 3, true);
    CHECK((back.W - net.W).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.beta == net.beta);
}

TEST_CASE("checkpoint round trip") {
    const Network net = random_net(4, 3, {38, 0});
    const auto path = (std::filesystem::temp_directory_path() / "geolab_ckpt.json").string();
    model::save_checkpoint(net, path, {"cafebabe", 38, 120});
    const auto cp = model::load_checkpoint(path);
    CHECK((cp.net.W - net.W).cwiseAbs().maxCoeff() == 0.0);
    CHECK((cp.net.v - net.v).cwiseAbs().maxCoeff() == 0.0);
    CHECK(cp.net.beta == net.beta);
    CHECK(cp.provenance.config_hash == "cafebabe");
    CHECK(cp.provenance.epoch == 120);
}

TEST_CASE("dimension mismatches raise arity errors") {
    const Network net = random_net(2, 3, {39, 0});
    Eigen::MatrixXd X(2, 5);
    X.setZero();
    CHECK_THROWS_AS(model::forward(net, X), ArityError);
    CHECK_THROWS_AS(model::unpack_params(Eigen::VectorXd::Zero(4), 3, 2, true), ArityError);
}
