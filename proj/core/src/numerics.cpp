#include "geolab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geolab::numerics {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    state += kGolden;
    return mix64(state);
}

SeedSpec SeedSpec::stream(std::uint64_t id) const {
    // stream(id) folds the extra id into the stream id; mixing keeps
    // nested derivations (a.stream(1).stream(2) vs a.stream(3)) distinct.
    return SeedSpec{master_seed, mix64(stream_id + kGolden * (id + 1))};
}

Rng::Rng(SeedSpec seed) {
    // Documented mixing function: the stream state is
    // mix(master + golden * (mix(stream_id) | 1)).
    state_ = mix64(seed.master_seed + kGolden * (mix64(seed.stream_id) | 1ULL));
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform01_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform01_open()));
    const double theta = 2.0 * M_PI * uniform01();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::poisson(double mean) {
    if (mean < 0.0) throw DomainError("poisson: negative mean");
    if (mean == 0.0) return 0;
    // Exact: count exponential arrivals until the running sum passes `mean`.
    std::uint64_t count = 0;
    double sum = 0.0;
    for (;;) {
        sum += -std::log(uniform01_open());
        if (sum > mean) return count;
        ++count;
    }
}

std::size_t Rng::categorical(const std::vector<double>& probs) {
    const double u = uniform01();
    double acc = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        acc += probs[j];
        if (u < acc) return j;
    }
    return probs.size() - 1;
}

Eigen::VectorXd Rng::gaussian_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
}

Eigen::VectorXd Rng::on_sphere(int dim) {
    for (;;) {
        Eigen::VectorXd v = gaussian_vector(dim);
        const double norm = v.norm();
        if (norm > 1e-300) return v / norm;
    }
}

Eigen::VectorXd Rng::in_ball(int dim) {
    const double radius = std::pow(uniform01(), 1.0 / dim);
    return radius * on_sphere(dim);
}

namespace {

SlopeFit fit_xy(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    SlopeFit fit;
    if (syy == 0.0) {
        // Constant series: slope 0, r2/stderr by convention.
        fit.slope = 0.0;
        fit.intercept = my;
        fit.r2 = 1.0;
        fit.stderr_slope = 0.0;
        return fit;
    }
    if (sxx <= 0.0) throw DomainError("ols: xs are all identical");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ssr += r * r;
    }
    ssr = std::max(ssr, 0.0);
    fit.r2 = std::clamp(1.0 - ssr / syy, 0.0, 1.0);
    fit.stderr_slope = n > 2 ? std::sqrt(ssr / (double(n) - 2.0) / sxx) : 0.0;
    return fit;
}

}  // namespace

SlopeFit ols_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw ArityError("ols_loglog: need >= 3 paired points");
    std::vector<double> lx(xs.size()), ly(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw DomainError("ols_loglog: entries must be strictly positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    return fit_xy(lx, ly);
}

SlopeFit ols_linear(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw ArityError("ols_linear: need >= 3 paired points");
    return fit_xy(xs, ys);
}

PowerIterResult power_iteration(const LinearOperator& matvec, int dim, double tol,
                                int max_iter, SeedSpec seed,
                                const std::optional<Eigen::VectorXd>& start) {
    if (dim <= 0) throw ArityError("power_iteration: dim must be positive");
    if (!(tol > 0.0)) throw DomainError("power_iteration: tol must be positive");

    Rng rng(seed);
    Eigen::VectorXd y = start ? *start : rng.on_sphere(dim);
    if (y.size() != dim) throw ArityError("power_iteration: start vector has wrong length");
    y.normalize();

    PowerIterResult result;
    double prev = std::numeric_limits<double>::quiet_NaN();
    bool restarted = false;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd w = matvec(y);
        if (!w.allFinite()) throw NumericError("power_iteration: non-finite matvec output");
        const double rayleigh = y.dot(w);
        result.value = rayleigh;
        result.iterations = it + 1;

        const double wn = w.norm();
        if (wn < 1e-300 || std::abs(rayleigh) < 1e-14) {
            // Collapsed iterate; either the operator is (numerically) zero or
            // the start was orthogonal to the top eigenspace. One restart.
            if (!restarted) {
                restarted = true;
                y = rng.on_sphere(dim);
                prev = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            result.converged = true;
            result.value = rayleigh;
            return result;
        }
        y = w / wn;

        if (std::isfinite(prev) &&
            std::abs(rayleigh - prev) / std::max(std::abs(rayleigh), 1e-12) <= tol) {
            result.converged = true;
            return result;
        }
        prev = rayleigh;
    }
    result.converged = false;
    return result;
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw ArityError("mean: empty input");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

double variance(const std::vector<double>& xs) {
    if (xs.size() < 2) throw ArityError("variance: need >= 2 values");
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / (double(xs.size()) - 1.0);
}

namespace {
std::vector<double> ranks_with_ties(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double avg = 0.5 * (double(i) + double(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}
}  // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw ArityError("spearman: need >= 2 paired values");
    const auto rx = ranks_with_ties(xs);
    const auto ry = ranks_with_ties(ys);
    const double mx = mean(rx), my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace geolab::numerics
