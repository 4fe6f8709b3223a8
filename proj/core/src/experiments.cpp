#include "geolab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "geolab/curvature.hpp"
#include "geolab/depth.hpp"
#include "geolab/flatnet.hpp"
#include "geolab/shatter.hpp"
#include "geolab/weightfn.hpp"

namespace geolab::experiments {

using harness::ExperimentConfig;
using harness::ExperimentResult;
using harness::Verdict;
using numerics::SeedSpec;
using numerics::SlopeFit;

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

Verdict make_verdict(const std::string& name, bool pass, double margin,
                     const std::string& details, int criterion, const std::string& table) {
    Verdict v;
    v.name = name;
    v.pass = pass;
    v.margin = margin;
    v.details = details;
    v.criterion = criterion;
    v.table = table;
    return v;
}

}  // namespace

data::TeacherSpec make_teacher(const harness::ExperimentConfig& cfg, int d) {
    const SeedSpec seed{cfg.teacher_seed, 0};
    if (cfg.teacher_kind == "relu")
        return data::TeacherSpec::random_relu(d, cfg.teacher_relu_width, cfg.noise_sigma,
                                              seed.stream(d));
    return data::TeacherSpec::random_quadratic(d, cfg.noise_sigma, seed.stream(d));
}

TrainRunResult run_training(const ExperimentConfig& cfg, const data::DistSpec& dist,
                            const data::TeacherSpec& teacher, int n, SeedSpec seed,
                            const model::Network* shared_init) {
    const data::Dataset ds = data::make_dataset(dist, teacher, n, seed);
    model::Network net0 =
        shared_init ? *shared_init
                    : model::init_network(dist.d, cfg.width, cfg.init_scale,
                                          cfg.has_output_bias, seed.stream(777));

    TrainRunResult out;
    out.net0 = net0;

    train::CurvatureProbe probe;
    std::vector<BeosCheckRow>* rows = &out.beos_rows;
    if (cfg.train.lambda_max_every) {
        const SeedSpec probe_seed = seed.stream(888);
        const double eta = cfg.train.eta;
        const data::Dataset* data_ptr = &ds;
        probe = [rows, probe_seed, eta, data_ptr](const model::Network& net) {
            const auto report =
                curvature::lambda_max(net, *data_ptr, 1e-9, 3000, probe_seed, eta);
            const auto check = weightfn::beos_bound_check(net, *data_ptr, eta,
                                                          report.beos.value_or(false));
            BeosCheckRow row;
            row.lambda_max = report.lambda_max;
            row.loss = model::loss_and_grad(net, *data_ptr).loss;
            row.lhs = check.lhs;
            row.rhs = check.rhs;
            row.beos = report.beos.value_or(false);
            row.satisfied = check.satisfied;
            rows->push_back(row);
            return report.lambda_max;
        };
    }

    out.traj = train::gd_train(net0, ds, cfg.train, probe);

    // Probes run in record order; attach epochs from the trajectory.
    std::size_t probe_idx = 0;
    for (const auto& rec : out.traj.records) {
        if (rec.lambda_max && probe_idx < out.beos_rows.size())
            out.beos_rows[probe_idx++].epoch = rec.epoch;
    }

    const auto& last = out.traj.records.back();
    out.final_loss = last.train_loss;
    out.final_true_mse = last.true_mse.value_or(0.0);
    return out;
}

std::string beos_rows_csv(const std::vector<BeosCheckRow>& rows) {
    std::string csv = "epoch,lambda_max,loss,lhs,rhs,beos,satisfied\n";
    for (const auto& r : rows) {
        csv += std::to_string(r.epoch) + ',' + fmt(r.lambda_max) + ',' + fmt(r.loss) + ',' +
               fmt(r.lhs) + ',' + fmt(r.rhs) + ',' + (r.beos ? "1" : "0") + ',' +
               (r.satisfied ? "1" : "0") + '\n';
    }
    return csv;
}

SlopeScanResult slope_scan(const ExperimentConfig& cfg,
                           const std::vector<SlopeScanGroup>& groups) {
    if (cfg.n_values.empty()) throw SpecError("slope_scan: sweep.n_values is empty");
    if (cfg.seeds.empty()) throw SpecError("slope_scan: seeds is empty");

    struct Task {
        int group = 0;
        int n = 0;
        std::uint64_t seed = 0;
    };
    std::vector<Task> tasks;
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (int n : cfg.n_values)
            for (std::uint64_t s : cfg.seeds) tasks.push_back({static_cast<int>(g), n, s});

    std::vector<SlopeScanRun> runs(tasks.size());
    const int workers = cfg.workers > 0 ? cfg.workers : harness::default_workers();
    harness::parallel_for(
        static_cast<int>(tasks.size()), workers, [&](int t) {
            const Task& task = tasks[t];
            SlopeScanRun run;
            run.group = groups[task.group].label;
            run.n = task.n;
            run.seed = task.seed;
            if (cfg.stub_exponent) {
                // Harness plumbing test mode: exact power law, no training.
                run.true_mse = cfg.stub_coefficient * std::pow(double(task.n), *cfg.stub_exponent);
                run.final_loss = 0.0;
            } else {
                const SeedSpec seed =
                    SeedSpec{task.seed, 0}.stream(task.group + 1).stream(task.n);
                const TrainRunResult res = run_training(cfg, groups[task.group].dist,
                                                        groups[task.group].teacher, task.n, seed);
                run.true_mse = res.final_true_mse;
                run.final_loss = res.final_loss;
            }
            runs[t] = run;
        });

    SlopeScanResult result;
    result.runs = runs;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        std::vector<double> xs, ys;
        for (int n : cfg.n_values) {
            double acc = 0.0;
            int count = 0;
            for (const auto& run : runs) {
                if (run.group == groups[g].label && run.n == n) {
                    acc += run.true_mse;
                    ++count;
                }
            }
            const double mean = acc / count;
            result.mean_rows.emplace_back(groups[g].label, n, mean);
            xs.push_back(double(n));
            ys.push_back(std::max(mean, 1e-300));
        }
        result.fits.emplace_back(groups[g].label, numerics::ols_loglog(xs, ys));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Recipes
// ---------------------------------------------------------------------------

namespace {

std::string slope_runs_csv(const std::vector<SlopeScanRun>& runs, const std::string& group_col) {
    std::string csv = group_col + ",n,seed,true_mse,final_loss\n";
    for (const auto& r : runs)
        csv += r.group + ',' + std::to_string(r.n) + ',' + std::to_string(r.seed) + ',' +
               fmt(r.true_mse) + ',' + fmt(r.final_loss) + '\n';
    return csv;
}

std::string mean_rows_csv(const std::vector<std::tuple<std::string, int, double>>& rows,
                          const std::string& group_col) {
    std::string csv = group_col + ",n,mean_true_mse\n";
    for (const auto& [g, n, mse] : rows)
        csv += g + ',' + std::to_string(n) + ',' + fmt(mse) + '\n';
    return csv;
}

ExperimentResult recipe_slope_vs_n(const ExperimentConfig& cfg) {
    ExperimentResult result;
    std::vector<SlopeScanGroup> groups;
    for (int d : cfg.d_values) {
        SlopeScanGroup g;
        g.label = std::to_string(d);
        g.dist = data::DistSpec::mixture_balls(d, cfg.dist.m, cfg.dist.J, cfg.dist.subspace_seed,
                                               cfg.dist.mix_probs, cfg.dist.affine_offsets);
        g.teacher = make_teacher(cfg, d);
        groups.push_back(std::move(g));
    }
    const SlopeScanResult scan = slope_scan(cfg, groups);
    result.tables["runs"] = slope_runs_csv(scan.runs, "d");
    result.tables["mse_vs_n"] = mean_rows_csv(scan.mean_rows, "d");

    std::vector<double> slopes;
    for (const auto& [label, fit] : scan.fits) {
        result.fits["slope_d" + label] = fit;
        slopes.push_back(fit.slope);
    }
    if (slopes.size() >= 2 && !cfg.stub_exponent) {
        const double gap = *std::max_element(slopes.begin(), slopes.end()) -
                           *std::min_element(slopes.begin(), slopes.end());
        result.verdicts.push_back(make_verdict(
            "slope_gap_across_d", gap <= 0.15, 0.15 - gap,
            "max pairwise slope gap " + fmt6(gap) + " (threshold 0.15)", 9, "mse_vs_n"));
        const double worst = *std::max_element(slopes.begin(), slopes.end());
        result.verdicts.push_back(make_verdict(
            "slopes_negative", worst <= -0.05, -0.05 - worst,
            "largest slope " + fmt6(worst) + " (threshold -0.05)", 9, "mse_vs_n"));
    }
    return result;
}

ExperimentResult recipe_alpha_sweep(const ExperimentConfig& cfg) {
    ExperimentResult result;
    std::vector<SlopeScanGroup> groups;
    for (double alpha : cfg.alpha_values) {
        SlopeScanGroup g;
        g.label = fmt6(alpha);
        g.dist = data::DistSpec::beta_radial(cfg.dist.d, alpha);
        g.teacher = make_teacher(cfg, cfg.dist.d);
        groups.push_back(std::move(g));
    }
    const SlopeScanResult scan = slope_scan(cfg, groups);
    result.tables["runs"] = slope_runs_csv(scan.runs, "alpha");
    result.tables["mse_vs_n"] = mean_rows_csv(scan.mean_rows, "alpha");
    for (const auto& [label, fit] : scan.fits) result.fits["slope_alpha" + label] = fit;

    if (cfg.alpha_values.size() >= 2 && !cfg.stub_exponent) {
        const auto [amin_it, amax_it] =
            std::minmax_element(cfg.alpha_values.begin(), cfg.alpha_values.end());
        const double slope_min = result.fits["slope_alpha" + fmt6(*amin_it)].slope;
        const double slope_max = result.fits["slope_alpha" + fmt6(*amax_it)].slope;
        const double diff = slope_max - slope_min;
        result.verdicts.push_back(make_verdict(
            "steeper_slope_at_larger_alpha", diff <= -0.05, -0.05 - diff,
            "slope(alpha=" + fmt6(*amax_it) + ") - slope(alpha=" + fmt6(*amin_it) + ") = " +
                fmt6(diff) + " (threshold -0.05)",
            10, "mse_vs_n"));
    }
    return result;
}

std::string activation_tables(const weightfn::ActivationStats& stats, ExperimentResult& result,
                              const std::string& suffix) {
    std::string hist = "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b + 1 < stats.hist_edges.size(); ++b)
        hist += fmt(stats.hist_edges[b]) + ',' + fmt(stats.hist_edges[b + 1]) + ',' +
                std::to_string(stats.hist_counts[b]) + '\n';
    result.tables["act_hist_" + suffix] = hist;

    std::string scatter = "rate,coef\n";
    for (const auto& [rate, coef] : stats.coef_vs_rate)
        scatter += fmt(rate) + ',' + fmt(coef) + '\n';
    result.tables["coef_vs_rate_" + suffix] = scatter;
    return hist;
}

ExperimentResult recipe_sphere_vs_lines(const ExperimentConfig& cfg) {
    ExperimentResult result;
    const int d = cfg.dist.d;
    const data::TeacherSpec teacher = make_teacher(cfg, d);
    const data::DistSpec sphere = data::DistSpec::sphere(d);
    const data::DistSpec lines =
        data::DistSpec::mixture_balls(d, cfg.dist.m, cfg.dist.J, cfg.dist.subspace_seed,
                                      cfg.dist.mix_probs, cfg.dist.affine_offsets);
    const SeedSpec base{cfg.seeds.at(0), 0};
    const model::Network net0 = model::init_network(d, cfg.width, cfg.init_scale,
                                                    cfg.has_output_bias, base.stream(777));

    std::vector<TrainRunResult> runs(2);
    const int workers = cfg.workers > 0 ? cfg.workers : harness::default_workers();
    harness::parallel_for(2, workers, [&](int i) {
        const data::DistSpec& dist = i == 0 ? sphere : lines;
        runs[i] = run_training(cfg, dist, teacher, cfg.n, base.stream(i + 1), &net0);
    });

    const char* names[2] = {"sphere", "lines"};
    for (int i = 0; i < 2; ++i) {
        result.tables[std::string("traj_") + names[i]] = train::trajectory_csv(runs[i].traj);
        result.tables[std::string("beos_check_") + names[i]] = beos_rows_csv(runs[i].beos_rows);
        const data::Dataset ds = data::make_dataset(i == 0 ? sphere : lines, teacher, cfg.n,
                                                    base.stream(i + 1));
        const auto stats = weightfn::activation_rates(runs[i].traj.final_net, ds);
        activation_tables(stats, result, names[i]);
    }

    const double sphere_mse = runs[0].final_true_mse;
    const double lines_mse = runs[1].final_true_mse;
    result.verdicts.push_back(make_verdict(
        "sphere_memorizes_noise", sphere_mse >= 0.85 && sphere_mse <= 1.15,
        std::min(sphere_mse - 0.85, 1.15 - sphere_mse),
        "sphere final true MSE " + fmt6(sphere_mse) + " (target [0.85, 1.15])", 11,
        "traj_sphere"));
    result.verdicts.push_back(make_verdict(
        "lines_resist_noise", lines_mse <= 0.3, 0.3 - lines_mse,
        "mixture-of-lines final true MSE " + fmt6(lines_mse) + " (threshold 0.3)", 11,
        "traj_lines"));

    double worst_bound_margin = std::numeric_limits<double>::infinity();
    bool all_ok = true;
    int checked = 0;
    for (int i = 0; i < 2; ++i) {
        for (const auto& row : runs[i].beos_rows) {
            if (!row.beos) continue;
            ++checked;
            worst_bound_margin = std::min(worst_bound_margin, row.rhs - row.lhs);
            if (!row.satisfied) all_ok = false;
        }
    }
    if (checked > 0) {
        result.verdicts.push_back(make_verdict(
            "beos_path_norm_bound", all_ok, worst_bound_margin,
            "weighted path norm bound held at " + std::to_string(checked) +
                " below-edge probes (worst margin " + fmt6(worst_bound_margin) + ")",
            4, "beos_check_lines"));
    }
    return result;
}

ExperimentResult recipe_depth_error(const ExperimentConfig& cfg) {
    ExperimentResult result;
    const int d = cfg.dist.d;
    const data::TeacherSpec teacher = make_teacher(cfg, d);
    const SeedSpec base{cfg.seeds.at(0), 0};
    const TrainRunResult run = run_training(cfg, cfg.dist, teacher, cfg.n, base.stream(1));

    const data::Dataset ds = data::make_dataset(cfg.dist, teacher, cfg.n, base.stream(1));
    const auto report =
        depth::depth_error_scan(run.traj.final_net, ds, cfg.depth_directions, base.stream(2));

    std::string scatter = "index,depth,error\n";
    for (const auto& pt : report.points)
        scatter += std::to_string(pt.index) + ',' + fmt(pt.depth) + ',' + fmt(pt.error) + '\n';
    result.tables["depth_scatter"] = scatter;

    std::string quint = "quintile,depth_lo,depth_hi,mean_error,median_error,count\n";
    for (const auto& q : report.quintiles)
        quint += std::to_string(q.quintile) + ',' + fmt(q.depth_lo) + ',' + fmt(q.depth_hi) +
                 ',' + fmt(q.mean_error) + ',' + fmt(q.median_error) + ',' +
                 std::to_string(q.count) + '\n';
    result.tables["depth_quintiles"] = quint;

    result.tables["traj"] = train::trajectory_csv(run.traj);
    result.verdicts.push_back(make_verdict(
        "shallow_points_err_more", report.spearman <= 0.0, -report.spearman,
        "Spearman(depth, error) = " + fmt6(report.spearman) + " (threshold 0)", 0,
        "depth_scatter"));
    return result;
}

ExperimentResult recipe_flat_check(const ExperimentConfig& cfg) {
    ExperimentResult result;
    const int d = cfg.dist.d;
    const int n = cfg.n;

    struct Row {
        std::uint64_t seed;
        int width;
        double interp_err, lambda_bias, bound_bias, lambda_nobias, bound_nobias;
        double min_margin, max_neg_margin;
        bool rates_ok;
    };
    std::vector<Row> rows(cfg.seeds.size());
    const int workers = cfg.workers > 0 ? cfg.workers : harness::default_workers();
    harness::parallel_for(
        static_cast<int>(cfg.seeds.size()), workers, [&](int i) {
            const SeedSpec seed{cfg.seeds[i], 0};
            data::Dataset ds = data::sample_features(data::DistSpec::sphere(d), n, seed);
            numerics::Rng rng(seed.stream(3));
            ds.y.resize(n);
            for (int j = 0; j < n; ++j) ds.y[j] = rng.uniform(-1.0, 1.0);
            ds.recompute_bounds();

            const auto with_bias = flatnet::build_flat_interpolator(ds, true);
            const auto no_bias = flatnet::build_flat_interpolator(ds, false);
            const auto one_hot = flatnet::verify_one_hot_activation(with_bias, ds);
            const auto rates = weightfn::activation_rates(with_bias.net, ds);
            bool rates_ok = true;
            for (double r : rates.rates)
                if (std::abs(r - 1.0 / n) > 1e-12) rates_ok = false;

            rows[i] = {cfg.seeds[i],
                       with_bias.width,
                       std::max(with_bias.max_interp_error, no_bias.max_interp_error),
                       with_bias.lambda_max,
                       with_bias.bound_rhs,
                       no_bias.lambda_max,
                       no_bias.bound_rhs,
                       one_hot.min_positive_margin,
                       one_hot.max_negative_margin,
                       rates_ok};
        });

    std::string csv =
        "seed,width,interp_err,lambda_bias,bound_bias,lambda_nobias,bound_nobias,"
        "min_margin,max_neg_margin,rates_ok\n";
    double worst_err = 0.0, worst_gap_bias = 1e300, worst_gap_nobias = 1e300;
    bool all_rates = true;
    int max_width = 0;
    for (const auto& r : rows) {
        csv += std::to_string(r.seed) + ',' + std::to_string(r.width) + ',' + fmt(r.interp_err) +
               ',' + fmt(r.lambda_bias) + ',' + fmt(r.bound_bias) + ',' + fmt(r.lambda_nobias) +
               ',' + fmt(r.bound_nobias) + ',' + fmt(r.min_margin) + ',' +
               fmt(r.max_neg_margin) + ',' + (r.rates_ok ? "1" : "0") + '\n';
        worst_err = std::max(worst_err, r.interp_err);
        worst_gap_bias = std::min(worst_gap_bias, r.bound_bias + 1e-6 - r.lambda_bias);
        worst_gap_nobias = std::min(worst_gap_nobias, r.bound_nobias + 1e-6 - r.lambda_nobias);
        all_rates = all_rates && r.rates_ok;
        max_width = std::max(max_width, r.width);
    }
    result.tables["flat_runs"] = csv;
    result.verdicts.push_back(make_verdict("interpolation_exact", worst_err <= 1e-9,
                                           1e-9 - worst_err,
                                           "max interpolation error " + fmt6(worst_err), 2,
                                           "flat_runs"));
    result.verdicts.push_back(make_verdict(
        "hessian_bound_with_bias", worst_gap_bias >= 0.0, worst_gap_bias,
        "min(bound + 1e-6 - lambda) = " + fmt6(worst_gap_bias) + " with output bias", 2,
        "flat_runs"));
    result.verdicts.push_back(make_verdict(
        "hessian_bound_without_bias", worst_gap_nobias >= 0.0, worst_gap_nobias,
        "min(bound + 1e-6 - lambda) = " + fmt6(worst_gap_nobias) + " without output bias", 2,
        "flat_runs"));
    result.verdicts.push_back(make_verdict(
        "width_at_most_n", max_width <= n, double(n - max_width),
        "max width " + std::to_string(max_width) + " over " + std::to_string(n) + " samples", 2,
        "flat_runs"));
    result.verdicts.push_back(make_verdict("one_hot_rates", all_rates, all_rates ? 1.0 : -1.0,
                                           "every constructed unit fires on exactly one sample",
                                           2, "flat_runs"));
    return result;
}

ExperimentResult recipe_shatter_rates(const ExperimentConfig& cfg) {
    ExperimentResult result;
    const int d = cfg.dist.d;
    const double alpha = cfg.dist.alpha;
    const SeedSpec base{cfg.seeds.at(0), 0};

    // Packing rate (d fixed) and the exact d=2 count.
    {
        const std::vector<double> eps_grid{0.4, 0.28, 0.2, 0.14, 0.1};
        std::string csv = "eps,theta,count\n";
        std::vector<double> inv_eps, counts;
        for (double eps : eps_grid) {
            const auto packing = shatter::pack_caps(d, eps, base.stream(1));
            csv += fmt(eps) + ',' + fmt(packing.theta) + ',' +
                   std::to_string(packing.count()) + '\n';
            inv_eps.push_back(1.0 / eps);
            counts.push_back(double(packing.count()));
        }
        result.tables["packing"] = csv;
        const SlopeFit fit = numerics::ols_loglog(inv_eps, counts);
        result.fits["packing_rate"] = fit;
        const double target = double(d - 1);
        result.verdicts.push_back(make_verdict(
            "packing_rate", std::abs(fit.slope - target) <= 0.4,
            0.4 - std::abs(fit.slope - target),
            "log N vs log(1/eps) slope " + fmt6(fit.slope) + " (target " + fmt6(target) +
                " +- 0.4)",
            6, "packing"));

        const double eps2 = 0.3;
        const auto circle = shatter::pack_caps(2, eps2, base.stream(2));
        const int expected = static_cast<int>(std::floor(M_PI / circle.theta));
        result.verdicts.push_back(make_verdict(
            "circle_packing_count", std::abs(circle.count() - expected) <= 1,
            1.0 - std::abs(circle.count() - expected),
            "d=2 count " + std::to_string(circle.count()) + " vs floor(pi/theta) = " +
                std::to_string(expected),
            6, "packing"));
    }

    // Cap mass and atom L2 scaling.
    {
        const auto report =
            shatter::cap_scaling_report(d, alpha, cfg.eps_values, cfg.mc_samples, base.stream(3));
        std::string csv = "eps,mass,mass_se,atom_l2,atom_l2_se\n";
        for (const auto& row : report.rows)
            csv += fmt(row.eps) + ',' + fmt(row.mass) + ',' + fmt(row.mass_se) + ',' +
                   fmt(row.atom_l2) + ',' + fmt(row.atom_l2_se) + '\n';
        result.tables["cap_scaling"] = csv;
        result.fits["cap_mass"] = report.mass_fit;
        result.fits["atom_l2"] = report.atom_l2_fit;
        const double mass_target = d - 1 + 2 * alpha;
        const double atom_target = 0.5 * (d + 3 + 2 * alpha);
        result.verdicts.push_back(make_verdict(
            "cap_mass_rate", std::abs(report.mass_fit.slope - mass_target) <= 0.3,
            0.3 - std::abs(report.mass_fit.slope - mass_target),
            "mass slope " + fmt6(report.mass_fit.slope) + " (target " + fmt6(mass_target) +
                " +- 0.3)",
            5, "cap_scaling"));
        result.verdicts.push_back(make_verdict(
            "atom_l2_rate", std::abs(report.atom_l2_fit.slope - atom_target) <= 0.3,
            0.3 - std::abs(report.atom_l2_fit.slope - atom_target),
            "atom L2 slope " + fmt6(report.atom_l2_fit.slope) + " (target " + fmt6(atom_target) +
                " +- 0.3)",
            5, "cap_scaling"));
    }

    // Calibration of eps against n.
    {
        const std::vector<int> ns{100, 1000, 10000};
        std::string csv = "n,eps,lambda_hat\n";
        std::vector<double> xs, ys;
        for (int n : ns) {
            const double eps = shatter::choose_eps(n, d, alpha, 1.0, base.stream(4));
            const double lam =
                n * shatter::cap_mass_mc(d, alpha, eps, 400000, base.stream(5)).value;
            csv += std::to_string(n) + ',' + fmt(eps) + ',' + fmt(lam) + '\n';
            xs.push_back(double(n));
            ys.push_back(eps);
        }
        result.tables["choose_eps"] = csv;
        const SlopeFit fit = numerics::ols_loglog(xs, ys);
        result.fits["eps_vs_n"] = fit;
        const double target = -1.0 / (d - 1 + 2 * alpha);
        result.verdicts.push_back(make_verdict(
            "eps_calibration_rate", std::abs(fit.slope - target) <= 0.15,
            0.15 - std::abs(fit.slope - target),
            "log eps vs log n slope " + fmt6(fit.slope) + " (target " + fmt6(target) +
                " +- 0.15)",
            0, "choose_eps"));
    }

    // Poissonized empty caps and the adversarial pair.
    {
        const auto report =
            shatter::empty_cap_experiment(cfg.n, d, alpha, cfg.mc_trials, base.stream(6));
        std::string csv = "trial,n_points,empty_count,fraction\n";
        int prop_event = 0;
        for (const auto& t : report.trials) {
            csv += std::to_string(t.trial) + ',' + std::to_string(t.n_points) + ',' +
                   std::to_string(t.empty_count) + ',' + fmt(t.fraction) + '\n';
            if (t.empty_count >=
                0.5 * report.chernoff_reference * report.packing.count())
                ++prop_event;
        }
        result.tables["empty_caps"] = csv;
        std::string fixed_csv = "trial,n_points,empty_count,fraction\n";
        for (const auto& t : report.fixed_trials)
            fixed_csv += std::to_string(t.trial) + ',' + std::to_string(t.n_points) + ',' +
                         std::to_string(t.empty_count) + ',' + fmt(t.fraction) + '\n';
        result.tables["empty_caps_fixed_n"] = fixed_csv;

        const double dev = std::abs(report.mean_fraction - report.chernoff_reference);
        result.verdicts.push_back(make_verdict(
            "empty_fraction_poisson", dev <= 0.05, 0.05 - dev,
            "mean empty fraction " + fmt6(report.mean_fraction) + " vs exp(-lambda) = " +
                fmt6(report.chernoff_reference) + " (lambda_hat " + fmt6(report.lambda_hat) + ")",
            7, "empty_caps"));
        const double event_rate = double(prop_event) / report.trials.size();
        result.verdicts.push_back(make_verdict(
            "abundant_empty_caps", event_rate >= 0.95, event_rate - 0.95,
            "empty count >= (1/2) e^{-lambda} N in " + fmt6(100 * event_rate) + "% of trials",
            7, "empty_caps"));

        // Pair agreement on every sample point in every trial, bit for bit.
        bool agree = true;
        int disagreements = 0;
        for (int t = 0; t < cfg.mc_trials; ++t) {
            numerics::Rng rng(base.stream(64).stream(t));
            const long n_poi = static_cast<long>(rng.poisson(double(cfg.n)));
            if (n_poi == 0) continue;
            const data::Dataset ds =
                data::sample_features(data::DistSpec::beta_radial(d, alpha),
                                      static_cast<int>(n_poi), base.stream(65).stream(t));
            const auto pair = shatter::build_adversarial_pair(ds.X, report.packing);
            const Eigen::VectorXd f = shatter::pair_eval(pair, ds.X, false);
            const Eigen::VectorXd fp = shatter::pair_eval(pair, ds.X, true);
            for (int i = 0; i < f.size(); ++i)
                if (f[i] != fp[i]) ++disagreements;
        }
        agree = disagreements == 0;
        result.verdicts.push_back(make_verdict(
            "pair_indistinguishable_on_data", agree, agree ? 1.0 : -double(disagreements),
            "adversarial pair evaluations bitwise equal on every sample in every trial", 7,
            "empty_caps"));
    }

    // Separation rate of the indistinguishable pair.
    {
        const std::vector<int> ns{100, 316, 1000, 3162, 10000};
        std::string csv = "n,eps,empty_count,sep_mc,sep_mc_se,sep_formula\n";
        std::vector<double> xs, ys;
        for (int n : ns) {
            const double eps = shatter::choose_eps(n, d, alpha, 1.0, base.stream(7));
            const auto packing = shatter::pack_caps(d, eps, base.stream(8));
            double sep_acc = 0.0;
            double sep_formula = 0.0;
            int empty_acc = 0;
            const int trials = 3;
            shatter::SeparationEstimate est;
            for (int t = 0; t < trials; ++t) {
                numerics::Rng rng(base.stream(9).stream(n).stream(t));
                const long n_poi = static_cast<long>(rng.poisson(double(n)));
                data::Dataset ds;
                if (n_poi > 0)
                    ds = data::sample_features(data::DistSpec::beta_radial(d, alpha),
                                               static_cast<int>(n_poi),
                                               base.stream(10).stream(n).stream(t));
                const auto pair = shatter::build_adversarial_pair(ds.X, packing);
                est = shatter::pair_separation(pair, alpha, 400000,
                                               base.stream(11).stream(n).stream(t));
                sep_acc += est.mc;
                sep_formula += est.formula;
                empty_acc += est.empty_count;
            }
            csv += std::to_string(n) + ',' + fmt(eps) + ',' + std::to_string(empty_acc / trials) +
                   ',' + fmt(sep_acc / trials) + ',' + fmt(est.mc_se) + ',' +
                   fmt(sep_formula / trials) + '\n';
            xs.push_back(double(n));
            ys.push_back(std::max(sep_acc / trials, 1e-300));
        }
        result.tables["separation"] = csv;
        const SlopeFit fit = numerics::ols_loglog(xs, ys);
        result.fits["separation_rate"] = fit;
        const double target = -2.0 * alpha / (d - 1 + 2 * alpha);
        result.verdicts.push_back(make_verdict(
            "separation_rate", std::abs(fit.slope - target) <= 0.3,
            0.3 - std::abs(fit.slope - target),
            "log sep^2 vs log n slope " + fmt6(fit.slope) + " (target " + fmt6(target) +
                " +- 0.3)",
            8, "separation"));
    }
    return result;
}

ExperimentResult recipe_g_suite(const ExperimentConfig& cfg) {
    ExperimentResult result;
    const SeedSpec base{cfg.seeds.at(0), 0};

    // Global-to-local weight domination on a two-component mixture.
    {
        const auto spec = data::DistSpec::mixture_balls(cfg.dist.d, cfg.dist.m, cfg.dist.J,
                                                        cfg.dist.subspace_seed);
        const auto probes = weightfn::probe_grid(spec.d, 1.0, cfg.mc_probes, base.stream(1));
        const auto res =
            weightfn::g_domination_check(spec, 0, probes, cfg.mc_samples, base.stream(2));
        std::string csv = "probe,t,g_global,g_global_se,g_local,g_local_se,margin_raw,margin_slack\n";
        for (const auto& r : res.rows)
            csv += std::to_string(r.probe) + ',' + fmt(r.t) + ',' + fmt(r.g_global) + ',' +
                   fmt(r.g_global_se) + ',' + fmt(r.g_local) + ',' + fmt(r.g_local_se) + ',' +
                   fmt(r.margin_raw) + ',' + fmt(r.margin_slack) + '\n';
        result.tables["domination"] = csv;
        result.verdicts.push_back(make_verdict(
            "weight_domination", res.passed(), res.min_margin_slack,
            "min slack-adjusted margin " + fmt6(res.min_margin_slack) + " over " +
                std::to_string(res.rows.size()) + " probes (raw " + fmt6(res.min_margin_raw) +
                ")",
            12, "domination"));
    }

    // Uniform deviation of the empirical weight function.
    {
        const auto spec = data::DistSpec::ball(3);
        const std::vector<int> ns{250, 500, 1000, 2000, 4000, 8000};
        const auto scan = weightfn::g_deviation_scan(spec, ns, 64, base.stream(3));
        std::string csv = "n,repeat,sup_dev\n";
        for (const auto& row : scan.rows)
            csv += std::to_string(row.n) + ',' + std::to_string(row.repeat) + ',' +
                   fmt(row.sup_dev) + '\n';
        result.tables["deviation"] = csv;
        result.fits["deviation_rate"] = scan.fit;
        const bool ok = scan.fit.slope >= -0.7 && scan.fit.slope <= -0.3;
        result.verdicts.push_back(make_verdict(
            "deviation_rate", ok,
            std::min(scan.fit.slope + 0.7, -0.3 - scan.fit.slope),
            "sup|g_D - g_P| slope " + fmt6(scan.fit.slope) + " (expected in [-0.7, -0.3])", 12,
            "deviation"));
    }

    // Population tail asymptotics of g along one direction.
    {
        const int d = 4;
        const double alpha = 1.0;
        const auto spec = data::DistSpec::beta_radial(d, alpha);
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(d);
        e1[0] = 1.0;
        const std::vector<double> ts{0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9};
        std::string csv = "t,one_minus_t,g,se\n";
        std::vector<double> xs, ys;
        for (double t : ts) {
            weightfn::DirectionThreshold q;
            q.u = e1;
            q.t = t;
            const auto est = weightfn::g_population_mc(spec, q, 2000000, base.stream(4));
            csv += fmt(t) + ',' + fmt(1.0 - t) + ',' + fmt(est.estimate) + ',' +
                   fmt(est.stderr_est) + '\n';
            xs.push_back(1.0 - t);
            ys.push_back(std::max(est.estimate, 1e-300));
        }
        result.tables["g_asymptotics"] = csv;
        const SlopeFit fit = numerics::ols_loglog(xs, ys);
        result.fits["g_tail_rate"] = fit;
        const double target = 2 * alpha + d;
        result.verdicts.push_back(make_verdict(
            "g_tail_rate", std::abs(fit.slope - target) <= 0.3,
            0.3 - std::abs(fit.slope - target),
            "log g vs log(1-t) slope " + fmt6(fit.slope) + " (target " + fmt6(target) +
                " +- 0.3)",
            12, "g_asymptotics"));
    }
    return result;
}

ExperimentResult recipe_csv_vs_gaussian(const ExperimentConfig& cfg) {
    if (cfg.csv_path.empty())
        throw SpecError("csv_vs_gaussian: csv.path is required");
    ExperimentResult result;
    data::Dataset csv_ds =
        data::load_csv_dataset(cfg.csv_path, cfg.csv_label_column, cfg.csv_normalize_scale);
    const int d = csv_ds.dim();
    const int n = csv_ds.n();

    // One ground-truth predictor for both datasets; the ingested labels are
    // replaced by teacher outputs plus noise so the comparison is like for
    // like.
    ExperimentConfig teacher_cfg = cfg;
    teacher_cfg.teacher_kind = "relu";
    const data::TeacherSpec teacher = make_teacher(teacher_cfg, d);
    const SeedSpec base{cfg.seeds.at(0), 0};
    data::gen_labels(teacher, csv_ds, base.stream(1));

    data::Dataset gauss_ds =
        data::sample_features(data::DistSpec::gaussian(d), n, base.stream(2));
    data::gen_labels(teacher, gauss_ds, base.stream(2));

    const model::Network net0 = model::init_network(d, cfg.width, cfg.init_scale,
                                                    cfg.has_output_bias, base.stream(777));

    struct Arm {
        const char* name;
        const data::Dataset* ds;
        train::Trajectory traj;
        std::vector<BeosCheckRow> rows;
    };
    std::vector<Arm> arms{{"csv", &csv_ds, {}, {}}, {"gaussian", &gauss_ds, {}, {}}};
    const int workers = cfg.workers > 0 ? cfg.workers : harness::default_workers();
    harness::parallel_for(2, workers, [&](int i) {
        Arm& arm = arms[i];
        std::vector<BeosCheckRow>* rows = &arm.rows;
        train::CurvatureProbe probe;
        if (cfg.train.lambda_max_every) {
            const SeedSpec probe_seed = base.stream(888).stream(i);
            const double eta = cfg.train.eta;
            const data::Dataset* ds = arm.ds;
            probe = [rows, probe_seed, eta, ds](const model::Network& net) {
                const auto report = curvature::lambda_max(net, *ds, 1e-9, 3000, probe_seed, eta);
                const auto check =
                    weightfn::beos_bound_check(net, *ds, eta, report.beos.value_or(false));
                BeosCheckRow row;
                row.lambda_max = report.lambda_max;
                row.loss = model::loss_and_grad(net, *ds).loss;
                row.lhs = check.lhs;
                row.rhs = check.rhs;
                row.beos = report.beos.value_or(false);
                row.satisfied = check.satisfied;
                rows->push_back(row);
                return report.lambda_max;
            };
        }
        arm.traj = train::gd_train(net0, *arm.ds, cfg.train, probe);
        std::size_t probe_idx = 0;
        for (const auto& rec : arm.traj.records)
            if (rec.lambda_max && probe_idx < arm.rows.size())
                arm.rows[probe_idx++].epoch = rec.epoch;
    });

    for (auto& arm : arms) {
        result.tables[std::string("traj_") + arm.name] = train::trajectory_csv(arm.traj);
        result.tables[std::string("beos_check_") + arm.name] = beos_rows_csv(arm.rows);
    }

    // Property checks on the ingested data (the numbers themselves are not
    // acceptance targets).
    {
        numerics::Rng rng(base.stream(5));
        const curvature::HvpOperator op(net0, csv_ds);
        double defect = 0.0;
        for (int rep = 0; rep < 10; ++rep) {
            const Eigen::VectorXd u = rng.gaussian_vector(net0.param_count());
            const Eigen::VectorXd v = rng.gaussian_vector(net0.param_count());
            defect = std::max(defect, std::abs(u.dot(op.apply(v)) - v.dot(op.apply(u))));
        }
        result.verdicts.push_back(make_verdict(
            "hvp_symmetry_on_csv", defect <= 1e-8, 1e-8 - defect,
            "max symmetry defect " + fmt6(defect) + " over 10 probes", 3, "traj_csv"));
    }
    bool bound_ok = true;
    double worst = std::numeric_limits<double>::infinity();
    int checked = 0;
    for (const auto& arm : arms) {
        for (const auto& row : arm.rows) {
            if (!row.beos) continue;
            ++checked;
            worst = std::min(worst, row.rhs - row.lhs);
            bound_ok = bound_ok && row.satisfied;
        }
    }
    if (checked > 0)
        result.verdicts.push_back(make_verdict(
            "beos_path_norm_bound", bound_ok, worst,
            "bound held at " + std::to_string(checked) + " below-edge probes", 4,
            "beos_check_csv"));
    return result;
}

using Recipe = ExperimentResult (*)(const ExperimentConfig&);

const std::vector<std::pair<std::string, Recipe>>& registry() {
    static const std::vector<std::pair<std::string, Recipe>> recipes = {
        {"slope_vs_n", recipe_slope_vs_n},
        {"alpha_sweep", recipe_alpha_sweep},
        {"sphere_vs_lines", recipe_sphere_vs_lines},
        {"depth_error", recipe_depth_error},
        {"flat_check", recipe_flat_check},
        {"shatter_rates", recipe_shatter_rates},
        {"g_suite", recipe_g_suite},
        {"csv_vs_gaussian", recipe_csv_vs_gaussian},
    };
    return recipes;
}

}  // namespace

}  // namespace geolab::experiments

namespace geolab::harness {

std::vector<std::string> registry_names() {
    std::vector<std::string> names;
    for (const auto& [name, fn] : geolab::experiments::registry()) names.push_back(name);
    return names;
}

ExperimentConfig default_config(const std::string& experiment) {
    ExperimentConfig cfg;
    cfg.experiment = experiment;
    cfg.train.eta = 0.4;
    cfg.train.clip_norm = 50.0;
    cfg.train.eval_every = 250;
    cfg.train.init_scale = 1.0;

    if (experiment == "slope_vs_n") {
        cfg.dist = data::DistSpec::mixture_balls(10, 1, 20, 7);
        cfg.d_values = {10, 50};
        cfg.n_values = {200, 400, 800, 1600, 3200};
        cfg.train.epochs = 2500;
        cfg.width = 256;
    } else if (experiment == "alpha_sweep") {
        cfg.dist = data::DistSpec::beta_radial(5, 1.0);
        cfg.alpha_values = {1.0, 10.0};
        cfg.n_values = {200, 400, 800, 1600, 3200};
        cfg.train.epochs = 2500;
        cfg.width = 256;
    } else if (experiment == "sphere_vs_lines") {
        cfg.dist = data::DistSpec::mixture_balls(50, 1, 20, 7);
        cfg.n = 2000;
        cfg.width = 512;
        cfg.train.epochs = 10000;
        cfg.train.eval_every = 200;
        cfg.train.lambda_max_every = 2500;
        cfg.seeds = {1};
    } else if (experiment == "depth_error") {
        cfg.dist = data::DistSpec::mixture_balls(10, 1, 20, 7);
        cfg.n = 1000;
        cfg.width = 256;
        cfg.train.epochs = 3000;
        cfg.seeds = {1};
        cfg.depth_directions = 256;
    } else if (experiment == "flat_check") {
        cfg.dist = data::DistSpec::sphere(20);
        cfg.n = 200;
        cfg.seeds.clear();
        for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);
    } else if (experiment == "shatter_rates") {
        cfg.dist = data::DistSpec::beta_radial(4, 1.0);
        cfg.eps_values = {0.05, 0.08, 0.125, 0.2, 0.3, 0.4};
        cfg.mc_samples = 1000000;
        cfg.mc_trials = 60;
        cfg.n = 2000;
        cfg.seeds = {1};
    } else if (experiment == "g_suite") {
        cfg.dist = data::DistSpec::mixture_balls(6, 2, 2, 7);
        cfg.mc_samples = 100000;
        cfg.mc_probes = 200;
        cfg.seeds = {1};
    } else if (experiment == "csv_vs_gaussian") {
        cfg.dist = data::DistSpec::gaussian(2);
        cfg.width = 256;
        cfg.train.eta = 0.2;
        cfg.train.epochs = 2000;
        cfg.train.eval_every = 100;
        cfg.train.lambda_max_every = 500;
        cfg.teacher_kind = "relu";
        cfg.seeds = {1};
    } else {
        std::string msg = "unknown experiment '" + experiment + "'. Registry:";
        for (const auto& name : registry_names()) msg += " " + name;
        throw SpecError(msg);
    }
    cfg.finalize();
    return cfg;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& [name, fn] : geolab::experiments::registry()) {
        if (name == cfg.experiment) {
            ExperimentResult result = fn(cfg);
            result.experiment = cfg.experiment;
            result.hash = cfg.hash;
            result.config_echo = cfg.config_echo;
            result.wall_time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return result;
        }
    }
    std::string msg = "unknown experiment '" + cfg.experiment + "'. Registry:";
    for (const auto& name : registry_names()) msg += " " + name;
    throw SpecError(msg);
}

}  // namespace geolab::harness
