#include "geolab/shatter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <boost/math/special_functions/beta.hpp>
#include <nlohmann/json.hpp>

namespace geolab::shatter {

using numerics::Rng;
using numerics::SeedSpec;

namespace {

constexpr int kBatches = 10;

// Density of z = u.U for U uniform on S^{d-1}: C_d (1-z^2)^{(d-3)/2}.
double coord_density_const(int d) {
    return std::exp(std::lgamma(0.5 * d) - std::lgamma(0.5 * (d - 1))) / std::sqrt(M_PI);
}

// M_k(x) = int_x^1 z^k (1-z^2)^{(d-3)/2} dz for x in [0, 1].
double angular_moment(int k, int d, double x) {
    if (x >= 1.0) return 0.0;
    const double a = 0.5 * (k + 1);
    const double b = 0.5 * (d - 1);
    const double beta_ab = std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    return 0.5 * beta_ab * boost::math::ibetac(a, b, x * x);
}

// P(u.U > x) for U uniform on the sphere, x >= 0.
double sphere_cap_prob(int d, double x) {
    return coord_density_const(d) * angular_moment(0, d, x);
}

// E[(r z - c)_+^2] over the sphere coordinate z, given radius r.
double atom_sq_given_radius(int d, double c, double r) {
    if (r <= c) return 0.0;
    const double x = c / r;
    const double m0 = angular_moment(0, d, x);
    const double m1 = angular_moment(1, d, x);
    const double m2 = angular_moment(2, d, x);
    return coord_density_const(d) * (r * r * m2 - 2.0 * r * c * m1 + c * c * m0);
}

std::vector<double> beta_radial_radii(double alpha, int n_mc, SeedSpec seed) {
    Rng rng(seed.stream(51));
    std::vector<double> radii(n_mc);
    for (int i = 0; i < n_mc; ++i)
        radii[i] = 1.0 - std::pow(1.0 - rng.uniform01(), 1.0 / alpha);
    return radii;
}

McValue batched_mean(const std::vector<double>& contributions) {
    const int n = static_cast<int>(contributions.size());
    McValue out;
    double total = 0.0;
    for (double c : contributions) total += c;
    out.value = total / n;
    const int batch = n / kBatches;
    std::vector<double> means;
    for (int b = 0; b < kBatches; ++b) {
        double acc = 0.0;
        for (int i = b * batch; i < (b + 1) * batch; ++i) acc += contributions[i];
        means.push_back(acc / batch);
    }
    const double m = numerics::mean(means);
    double var = 0.0;
    for (double v : means) var += (v - m) * (v - m);
    out.stderr_est = std::sqrt(var / (kBatches - 1) / kBatches);
    return out;
}

McValue mass_from_radii(int d, double eps, const std::vector<double>& radii) {
    const double c = 1.0 - eps * eps;
    std::vector<double> contrib(radii.size(), 0.0);
    for (std::size_t i = 0; i < radii.size(); ++i)
        if (radii[i] > c) contrib[i] = sphere_cap_prob(d, c / radii[i]);
    return batched_mean(contrib);
}

McValue atom_sq_from_radii(int d, double eps, const std::vector<double>& radii) {
    const double c = 1.0 - eps * eps;
    std::vector<double> contrib(radii.size(), 0.0);
    for (std::size_t i = 0; i < radii.size(); ++i)
        if (radii[i] > c) contrib[i] = atom_sq_given_radius(d, c, radii[i]);
    return batched_mean(contrib);
}

void validate_eps(double eps) {
    if (!(eps > 0.0) || eps > 0.5) throw DomainError("eps must lie in (0, 1/2]");
}

}  // namespace

CapPacking pack_caps(int d, double eps, SeedSpec seed, int max_attempts) {
    validate_eps(eps);
    if (d < 2) throw ArityError("pack_caps: d must be >= 2");
    CapPacking packing;
    packing.eps = eps;
    packing.theta = std::acos(1.0 - eps * eps);

    if (d == 2) {
        // Exact: N equally spaced arcs, spacing 2*pi/N >= 2*theta.
        const int N = std::max(1, static_cast<int>(std::floor(M_PI / packing.theta)));
        packing.centers.resize(N, 2);
        for (int i = 0; i < N; ++i) {
            const double phi = 2.0 * M_PI * i / N;
            packing.centers(i, 0) = std::cos(phi);
            packing.centers(i, 1) = std::sin(phi);
        }
        return packing;
    }

    const double cos2theta = std::cos(2.0 * packing.theta);
    if (max_attempts <= 0) {
        const double expected = std::pow(eps, -(d - 1));
        max_attempts = static_cast<int>(std::ceil(10.0 * expected));
    }
    Rng rng(seed.stream(52));
    std::vector<Eigen::VectorXd> accepted;
    int consecutive_rejections = 0;
    while (consecutive_rejections < max_attempts) {
        Eigen::VectorXd cand = rng.on_sphere(d);
        bool ok = true;
        for (const auto& u : accepted) {
            if (u.dot(cand) > cos2theta) {
                ok = false;
                break;
            }
        }
        if (ok) {
            accepted.push_back(std::move(cand));
            consecutive_rejections = 0;
        } else {
            ++consecutive_rejections;
        }
    }
    packing.centers.resize(static_cast<int>(accepted.size()), d);
    for (std::size_t i = 0; i < accepted.size(); ++i)
        packing.centers.row(static_cast<int>(i)) = accepted[i];
    return packing;
}

void save_packing_json(const CapPacking& packing, const std::string& path) {
    nlohmann::json j;
    j["eps"] = packing.eps;
    j["theta"] = packing.theta;
    j["centers"] = nlohmann::json::array();
    for (int i = 0; i < packing.count(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < packing.dim(); ++c) row.push_back(packing.centers(i, c));
        j["centers"].push_back(std::move(row));
    }
    std::ofstream out(path);
    if (!out) throw IngestionError("save_packing_json: cannot write " + path);
    out << j.dump(2) << "\n";
}

double atom_eval(const Eigen::VectorXd& u, double eps, const Eigen::VectorXd& x,
                 bool normalized) {
    validate_eps(eps);
    if (std::abs(u.norm() - 1.0) > 1e-12) throw DomainError("atom_eval: u must be a unit vector");
    const double raw = std::max(0.0, u.dot(x) - (1.0 - eps * eps));
    return normalized ? raw / (eps * eps) : raw;
}

McValue cap_mass_mc(int d, double alpha, double eps, int n_mc, SeedSpec seed) {
    validate_eps(eps);
    return mass_from_radii(d, eps, beta_radial_radii(alpha, n_mc, seed));
}

McValue atom_l2sq_mc(int d, double alpha, double eps, int n_mc, SeedSpec seed) {
    validate_eps(eps);
    return atom_sq_from_radii(d, eps, beta_radial_radii(alpha, n_mc, seed));
}

CapScalingReport cap_scaling_report(int d, double alpha, const std::vector<double>& eps_grid,
                                    int n_mc, SeedSpec seed) {
    if (eps_grid.size() < 4) throw ArityError("cap_scaling_report: need >= 4 eps values");
    const auto radii = beta_radial_radii(alpha, n_mc, seed);  // shared across eps

    CapScalingReport report;
    std::vector<double> eps_vals, masses, norms;
    for (double eps : eps_grid) {
        validate_eps(eps);
        const McValue mass = mass_from_radii(d, eps, radii);
        const McValue sq = atom_sq_from_radii(d, eps, radii);
        if (mass.value <= 0.0 || sq.value <= 0.0)
            throw NumericError("cap_scaling_report: zero hits at eps = " + std::to_string(eps) +
                               "; increase n_mc");
        ScalingRow row;
        row.eps = eps;
        row.mass = mass.value;
        row.mass_se = mass.stderr_est;
        row.atom_l2 = std::sqrt(sq.value);
        row.atom_l2_se = sq.stderr_est / (2.0 * row.atom_l2);  // delta method
        report.rows.push_back(row);
        eps_vals.push_back(eps);
        masses.push_back(mass.value);
        norms.push_back(row.atom_l2);
    }
    report.mass_fit = numerics::ols_loglog(eps_vals, masses);
    report.atom_l2_fit = numerics::ols_loglog(eps_vals, norms);
    return report;
}

double choose_eps(int n, int d, double alpha, double target_lambda, SeedSpec seed, int n_mc) {
    if (n < 10) throw ArityError("choose_eps: n must be >= 10");
    if (!(target_lambda > 0.0)) throw DomainError("choose_eps: target_lambda must be > 0");
    const auto radii = beta_radial_radii(alpha, n_mc, seed);
    const auto lambda_at = [&](double eps) {
        return n * mass_from_radii(d, eps, radii).value;
    };
    double lo = 1e-3, hi = 0.5;
    if (lambda_at(hi) < target_lambda)
        throw NumericError("choose_eps: target unreachable, lambda(0.5) < target");
    if (lambda_at(lo) > target_lambda)
        throw NumericError("choose_eps: target unreachable, lambda(0.001) > target");
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (lambda_at(mid) < target_lambda)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

EmptyCapReport empty_cap_experiment(int n, int d, double alpha, int trials, SeedSpec seed,
                                    std::optional<double> eps) {
    if (trials < 10) throw ArityError("empty_cap_experiment: need >= 10 trials");
    if (n < 0) throw ArityError("empty_cap_experiment: n must be >= 0");
    EmptyCapReport report;
    report.eps = eps ? *eps : choose_eps(n, d, alpha, 1.0, seed.stream(61));
    validate_eps(report.eps);
    report.packing = pack_caps(d, report.eps, seed.stream(62));
    report.lambda_hat =
        n * cap_mass_mc(d, alpha, report.eps, 400000, seed.stream(63)).value;
    report.chernoff_reference = std::exp(-report.lambda_hat);

    const double threshold = 1.0 - report.eps * report.eps;
    const int n_caps = report.packing.count();
    const data::DistSpec dist = data::DistSpec::beta_radial(d, alpha);

    const auto run_trial = [&](long count, SeedSpec s, int t) {
        EmptyCapTrial trial;
        trial.trial = t;
        trial.n_points = count;
        if (count == 0) {
            trial.empty_count = n_caps;
            trial.fraction = 1.0;
            return trial;
        }
        const data::Dataset ds = data::sample_features(dist, static_cast<int>(count), s);
        Eigen::MatrixXd Z = ds.X * report.packing.centers.transpose();
        for (int i = 0; i < n_caps; ++i)
            if (!(Z.col(i).array() > threshold).any()) ++trial.empty_count;
        trial.fraction = double(trial.empty_count) / n_caps;
        return trial;
    };

    double acc = 0.0, acc_fixed = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(seed.stream(64).stream(t));
        const long n_poi = static_cast<long>(rng.poisson(double(n)));
        const EmptyCapTrial trial = run_trial(n_poi, seed.stream(65).stream(t), t);
        acc += trial.fraction;
        report.trials.push_back(trial);

        const EmptyCapTrial fixed = run_trial(n, seed.stream(66).stream(t), t);
        acc_fixed += fixed.fraction;
        report.fixed_trials.push_back(fixed);
    }
    report.mean_fraction = acc / trials;
    report.mean_fraction_fixed = acc_fixed / trials;
    return report;
}

AdversarialPair build_adversarial_pair(const Eigen::MatrixXd& sample_X,
                                       const CapPacking& packing) {
    if (packing.count() == 0) throw ArityError("build_adversarial_pair: empty packing");
    AdversarialPair pair;
    pair.packing = packing;
    pair.normalization = 1.0 / (packing.eps * packing.eps);
    const int N = packing.count();
    pair.xi.assign(N, 1);
    pair.xi_prime.assign(N, 1);

    const double threshold = 1.0 - packing.eps * packing.eps;
    std::vector<bool> occupied(N, false);
    if (sample_X.rows() > 0) {
        Eigen::MatrixXd Z = sample_X * packing.centers.transpose();
        for (int i = 0; i < N; ++i) occupied[i] = (Z.col(i).array() > threshold).any();
    }
    for (int i = 0; i < N; ++i) {
        if (!occupied[i]) {
            pair.empty_indices.push_back(i);
            pair.xi_prime[i] = -1;
        }
    }
    pair.degenerate = pair.empty_indices.empty();
    return pair;
}

Eigen::VectorXd pair_eval(const AdversarialPair& pair, const Eigen::MatrixXd& X, bool primed) {
    const auto& signs = primed ? pair.xi_prime : pair.xi;
    const double threshold = 1.0 - pair.packing.eps * pair.packing.eps;
    Eigen::MatrixXd Z = X * pair.packing.centers.transpose();
    Eigen::VectorXd out(X.rows());
    for (int r = 0; r < X.rows(); ++r) {
        double acc = 0.0;
        for (int i = 0; i < pair.packing.count(); ++i) {
            const double atom = std::max(0.0, Z(r, i) - threshold) * pair.normalization;
            acc += signs[i] * atom;
        }
        out[r] = acc;
    }
    return out;
}

SeparationEstimate pair_separation(const AdversarialPair& pair, double alpha, int n_mc,
                                   SeedSpec seed) {
    SeparationEstimate est;
    est.empty_count = static_cast<int>(pair.empty_indices.size());
    const int d = pair.packing.dim();

    const data::Dataset mc =
        data::sample_features(data::DistSpec::beta_radial(d, alpha), n_mc, seed.stream(71));
    const Eigen::VectorXd diff =
        pair_eval(pair, mc.X, false) - pair_eval(pair, mc.X, true);
    std::vector<double> contrib(n_mc);
    for (int i = 0; i < n_mc; ++i) contrib[i] = diff[i] * diff[i];
    const McValue mcv = batched_mean(contrib);
    est.mc = mcv.value;
    est.mc_se = mcv.stderr_est;

    const McValue sq = atom_l2sq_mc(d, alpha, pair.packing.eps, n_mc, seed.stream(72));
    est.formula = 4.0 * est.empty_count * pair.normalization * pair.normalization * sq.value;
    return est;
}

}  // namespace geolab::shatter
