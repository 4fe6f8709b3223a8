#include "geolab/weightfn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace geolab::weightfn {

using numerics::Rng;
using numerics::SeedSpec;

void DirectionThreshold::validate() const {
    if (u.size() == 0) throw ArityError("DirectionThreshold: empty direction");
    if (std::abs(u.norm() - 1.0) > 1e-12)
        throw DomainError("DirectionThreshold: direction must be a unit vector");
}

namespace {

GTildeParts tilde_from_projections(const Eigen::MatrixXd& X, const Eigen::VectorXd& proj,
                                   double t, bool negate) {
    const int n = static_cast<int>(proj.size());
    GTildeParts parts;
    int count = 0;
    double excess = 0.0;
    Eigen::VectorXd mean_vec = Eigen::VectorXd::Zero(X.cols());
    for (int i = 0; i < n; ++i) {
        const double z = negate ? -proj[i] : proj[i];
        if (z > t) {
            ++count;
            excess += z - t;
            mean_vec += X.row(i).transpose();  // conditional mean of X itself
        }
    }
    if (count == 0) return parts;  // empty activation: g~ := 0
    parts.p = double(count) / n;
    parts.e = excess / count;
    mean_vec /= double(count);
    parts.s = std::sqrt(1.0 + mean_vec.squaredNorm());
    parts.value = parts.p * parts.p * parts.e * parts.s;
    return parts;
}

}  // namespace

GParts g_parts(const data::Dataset& data, const DirectionThreshold& q) {
    if (data.n() == 0) throw ArityError("g_parts: empty dataset");
    q.validate();
    if (q.u.size() != data.dim()) throw ArityError("g_parts: direction dimension mismatch");
    const Eigen::VectorXd proj = data.X * q.u;
    GParts parts;
    parts.pos = tilde_from_projections(data.X, proj, q.t, false);
    parts.neg = tilde_from_projections(data.X, proj, -q.t, true);
    parts.g = std::min(parts.pos.value, parts.neg.value);
    return parts;
}

double g_empirical(const data::Dataset& data, const DirectionThreshold& q) {
    return g_parts(data, q).g;
}

WeightedNormReport weighted_path_norm(const model::Network& net, const data::Dataset& data) {
    net.validate();
    WeightedNormReport report;
    const auto stats = activation_rates(net, data);
    for (int k = 0; k < net.width(); ++k) {
        const double wnorm = net.W.row(k).norm();
        DirectionThreshold q;
        q.u = net.W.row(k).transpose() / wnorm;
        q.t = net.b[k] / wnorm;
        const GParts parts = g_parts(data, q);
        NeuronWeightRow row;
        row.k = k;
        row.a = std::abs(net.v[k]) * wnorm;
        row.t = q.t;
        row.g = parts.g;
        row.activation_rate = stats.rates[k];
        row.pos = parts.pos;
        row.neg = parts.neg;
        report.total += row.a * row.g;
        report.per_neuron.push_back(row);
    }
    return report;
}

void write_report_csv(const WeightedNormReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("write_report_csv: cannot write " + path);
    out << "k,a,t,g,activation_rate,p_pos,e_pos,s_pos,g_pos,p_neg,e_neg,s_neg,g_neg\n";
    char buf[64];
    const auto fmt = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    for (const auto& r : report.per_neuron) {
        out << r.k << ',' << fmt(r.a) << ',' << fmt(r.t) << ',' << fmt(r.g) << ','
            << fmt(r.activation_rate) << ',' << fmt(r.pos.p) << ',' << fmt(r.pos.e) << ','
            << fmt(r.pos.s) << ',' << fmt(r.pos.value) << ',' << fmt(r.neg.p) << ','
            << fmt(r.neg.e) << ',' << fmt(r.neg.s) << ',' << fmt(r.neg.value) << '\n';
    }
}

BoundCheck beos_bound_check(const model::Network& net, const data::Dataset& data, double eta,
                            std::optional<bool> beos_confirmed) {
    if (!(eta > 0.0)) throw DomainError("beos_bound_check: eta must be > 0");
    BoundCheck check;
    check.lhs = weighted_path_norm(net, data).total;
    const double loss = model::loss_and_grad(net, data).loss;
    check.rhs = 1.0 / eta - 0.5 + (data.R + 1.0) * std::sqrt(2.0 * loss);
    check.satisfied = check.lhs <= check.rhs + 1e-8;
    check.bound_implied = beos_confirmed.value_or(false);
    return check;
}

ActivationStats activation_rates(const model::Network& net, const data::Dataset& data) {
    if (data.n() == 0) throw ArityError("activation_rates: empty dataset");
    ActivationStats stats;
    const int K = net.width();
    stats.rates.resize(K, 0.0);
    if (K > 0) {
        Eigen::MatrixXd Z = data.X * net.W.transpose();
        Z.rowwise() -= net.b.transpose();
        for (int k = 0; k < K; ++k)
            stats.rates[k] = (Z.col(k).array() > 0.0).cast<double>().mean();
    }
    constexpr int kBins = 20;
    stats.hist_edges.resize(kBins + 1);
    for (int i = 0; i <= kBins; ++i) stats.hist_edges[i] = double(i) / kBins;
    stats.hist_counts.assign(kBins, 0);
    for (int k = 0; k < K; ++k) {
        int bin = std::min(kBins - 1, static_cast<int>(stats.rates[k] * kBins));
        ++stats.hist_counts[bin];
        stats.coef_vs_rate.emplace_back(stats.rates[k],
                                        std::abs(net.v[k]) * net.W.row(k).norm());
    }
    return stats;
}

McEstimate g_population_mc(const data::DistSpec& spec, const DirectionThreshold& q, int n_mc,
                           SeedSpec seed) {
    if (n_mc < 1000) throw ArityError("g_population_mc: n_mc must be >= 1000");
    q.validate();
    constexpr int kBatches = 10;
    const data::Dataset sample = data::sample_features(spec, n_mc, seed);

    McEstimate est;
    const GParts full = g_parts(sample, q);
    est.estimate = full.g;

    const int batch = n_mc / kBatches;
    std::vector<double> batch_vals;
    bool any_active = full.pos.p > 0.0 || full.neg.p > 0.0;
    for (int b = 0; b < kBatches; ++b) {
        data::Dataset part;
        part.X = sample.X.middleRows(b * batch, batch);
        part.y.resize(0);
        const GParts parts = g_parts(part, q);
        batch_vals.push_back(parts.g);
    }
    if (!any_active) return {0.0, 0.0};  // empty activation across all batches
    const double m = numerics::mean(batch_vals);
    double var = 0.0;
    for (double v : batch_vals) var += (v - m) * (v - m);
    var /= double(kBatches - 1);
    est.stderr_est = std::sqrt(var / kBatches);
    return est;
}

DominationResult g_domination_check(const data::DistSpec& spec, int component,
                                    const std::vector<DirectionThreshold>& probes, int n_mc,
                                    SeedSpec seed) {
    if (spec.kind != data::DistSpec::Kind::MixtureBalls)
        throw SpecError("g_domination_check: spec must be MixtureBalls");
    if (component < 0 || component >= spec.J)
        throw SpecError("g_domination_check: component out of range");
    if (n_mc < 1000) throw ArityError("g_domination_check: n_mc must be >= 1000");

    const double pj = spec.probs()[component];
    const double factor = pj * pj / std::sqrt(2.0);
    constexpr int kBatches = 10;

    DominationResult result;
    result.min_margin_raw = std::numeric_limits<double>::infinity();
    result.min_margin_slack = std::numeric_limits<double>::infinity();

    const data::Dataset global = data::sample_features(spec, n_mc, seed.stream(21));
    const data::Dataset local =
        data::sample_features_component(spec, component, n_mc, seed.stream(22));

    const auto batched = [&](const data::Dataset& sample,
                             const DirectionThreshold& q) -> McEstimate {
        McEstimate est;
        est.estimate = g_parts(sample, q).g;
        const int batch = n_mc / kBatches;
        std::vector<double> vals;
        for (int b = 0; b < kBatches; ++b) {
            data::Dataset part;
            part.X = sample.X.middleRows(b * batch, batch);
            part.y.resize(0);
            vals.push_back(g_parts(part, q).g);
        }
        const double m = numerics::mean(vals);
        double var = 0.0;
        for (double v : vals) var += (v - m) * (v - m);
        est.stderr_est = std::sqrt(var / (kBatches - 1) / kBatches);
        return est;
    };

    for (std::size_t i = 0; i < probes.size(); ++i) {
        const McEstimate g = batched(global, probes[i]);
        const McEstimate gj = batched(local, probes[i]);
        DominationRow row;
        row.probe = static_cast<int>(i);
        row.t = probes[i].t;
        row.g_global = g.estimate;
        row.g_global_se = g.stderr_est;
        row.g_local = gj.estimate;
        row.g_local_se = gj.stderr_est;
        row.margin_raw = g.estimate - factor * gj.estimate;
        const double se = std::sqrt(g.stderr_est * g.stderr_est +
                                    factor * factor * gj.stderr_est * gj.stderr_est);
        row.margin_slack = row.margin_raw + 3.0 * se;
        result.min_margin_raw = std::min(result.min_margin_raw, row.margin_raw);
        result.min_margin_slack = std::min(result.min_margin_slack, row.margin_slack);
        result.rows.push_back(row);
    }
    return result;
}

std::vector<DirectionThreshold> probe_grid(int d, double R, int count, SeedSpec seed) {
    if (count < 1) throw ArityError("probe_grid: count must be >= 1");
    Rng rng(seed.stream(31));
    const int n_thresh = std::min(count, 8);
    const int n_dirs = (count + n_thresh - 1) / n_thresh;
    std::vector<Eigen::VectorXd> dirs;
    for (int i = 0; i < n_dirs; ++i) dirs.push_back(rng.on_sphere(d));
    std::vector<DirectionThreshold> probes;
    for (int i = 0; i < count; ++i) {
        DirectionThreshold q;
        q.u = dirs[i / n_thresh];
        const int j = i % n_thresh;
        q.t = n_thresh == 1 ? 0.0 : -R + 2.0 * R * double(j) / (n_thresh - 1);
        probes.push_back(std::move(q));
    }
    return probes;
}

DeviationScan g_deviation_scan(const data::DistSpec& spec, const std::vector<int>& n_values,
                               int probes_per_n, SeedSpec seed, const DeviationScanOptions& opt) {
    if (n_values.size() < 3) throw ArityError("g_deviation_scan: need >= 3 sample sizes");
    for (std::size_t i = 1; i < n_values.size(); ++i)
        if (n_values[i] <= n_values[i - 1])
            throw DomainError("g_deviation_scan: n_values must be increasing");

    // Population reference: plug-in on one large seeded sample, shared by
    // every probe (its error is far below the empirical deviations tested).
    const data::Dataset pop = data::sample_features(spec, opt.pop_mc_samples, seed.stream(41));
    const auto probes = probe_grid(spec.d, std::max(pop.R, 1e-12), probes_per_n, seed.stream(42));
    std::vector<double> gpop(probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i) gpop[i] = g_empirical(pop, probes[i]);

    DeviationScan scan;
    std::vector<double> xs, ys;
    for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
        double acc = 0.0;
        for (int rep = 0; rep < opt.repeats; ++rep) {
            const data::Dataset ds = data::sample_features(
                spec, n_values[ni], seed.stream(43).stream(ni * 1000 + rep));
            double sup = 0.0;
            for (std::size_t i = 0; i < probes.size(); ++i)
                sup = std::max(sup, std::abs(g_empirical(ds, probes[i]) - gpop[i]));
            scan.rows.push_back({n_values[ni], rep, sup});
            acc += sup;
        }
        const double mean_dev = acc / opt.repeats;
        scan.mean_dev_per_n.push_back(mean_dev);
        xs.push_back(double(n_values[ni]));
        ys.push_back(std::max(mean_dev, 1e-300));
    }
    scan.fit = numerics::ols_loglog(xs, ys);
    return scan;
}

}  // namespace geolab::weightfn
