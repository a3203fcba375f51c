// Acceptance suite: one pass/fail line per criterion, tolerances pinned below.
// Exit code equals the number of failed criteria.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "idl/baselines.hpp"
#include "idl/equilibrium.hpp"
#include "idl/harness.hpp"
#include "idl/sequence.hpp"
#include "idl/tasks.hpp"

using namespace idl;

namespace {

// pinned thresholds
constexpr double kGradTol = 1e-4;          // relative error vs finite differences
constexpr int kGradTrials = 20;            // kink-filtered trials per model kind
constexpr int kWellPosedModels = 100;      // random models for the solver suites
constexpr double kIdentityMseAt25 = 5.0;   // implicit identity MSE bound at shift 25
constexpr double kIdentityRatioAt80 = 100.0;  // MLP/implicit MSE ratio at shift 80
constexpr double kAddMseAt100 = 10.0;      // addition MSE bound at shift 100
constexpr double kSubMseAt100 = 5.0;       // subtraction MSE bound at shift 100
constexpr double kArgmaxAccAt100 = 0.85;   // median implicitRNN accuracy at shift 100
constexpr double kCopyFinalBand = 0.01;    // tolerance around 1 - 1/L
constexpr double kDepthRatio = 1.2;        // iteration growth factor shift 1000 vs 0
constexpr int kAblationWins = 3;           // of 5 paired seeds per metric
constexpr int kDepthWins = 4;              // of 5 seeds
constexpr int kSpikyWins = 2;              // of 3 seeds

int g_failures = 0;

void report(int number, const std::string& name, bool passed, const std::string& detail) {
    std::printf("[%s] criterion %d: %s — %s\n", passed ? "PASS" : "FAIL", number,
                name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!passed) ++g_failures;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Vector to_vec(std::span<const double> s) { return Vector(s.begin(), s.end()); }

// ---------------------------------------------------------------- criterion 1

void criterion_gradients() {
    bool ok = true;
    std::string detail;
    for (ModelKind kind : {ModelKind::implicit, ModelKind::implicit_rnn, ModelKind::mlp,
                           ModelKind::elman}) {
        const GradCheckReport r = gradcheck(kind, kGradTrials, kGradTol, 1234);
        ok = ok && r.passed;
        if (!detail.empty()) detail += ", ";
        detail += model_kind_name(kind) + " worst " + std::to_string(r.worst_relative_error);
    }
    report(1, "gradient oracle (20 trials per kind, rel err < 1e-4)", ok, detail);
}

// ---------------------------------------------------------------- criterion 2

void criterion_well_posedness() {
    int residual_ok = 0, path_ok = 0, contraction_ok = 0;
    for (int trial = 0; trial < kWellPosedModels; ++trial) {
        RngStream rng(2000 + static_cast<std::uint64_t>(trial), stream::init);
        const ImplicitModel m = init_implicit(8, 5, 3, rng);
        RngStream drng(3000 + static_cast<std::uint64_t>(trial), stream::data);
        const auto dist = DistributionSpec::uniform(-2.0, 2.0);
        const Vector u = to_vec(sample(dist, 1, 5, drng).row(0));

        const auto sol = solve_forward(m, u);
        if (!sol.converged) continue;

        // (a) residual at convergence
        Vector z = matvec(m.A, sol.x);
        axpy(z, 1.0, matvec(m.B, u));
        Vector fx(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) fx[i] = std::max(z[i], 0.0);
        if (inf_norm(vec_sub(fx, sol.x)) < m.epsilon) ++residual_ok;

        // (b) path independence from two random starts
        const Vector x1 = to_vec(sample(dist, 1, 8, drng).row(0));
        const Vector x2 = to_vec(sample(dist, 1, 8, drng).row(0));
        const auto s1 = solve_forward(m, u, x1);
        const auto s2 = solve_forward(m, u, x2);
        if (s1.converged && s2.converged &&
            inf_norm(vec_sub(s1.x, s2.x)) < 10 * m.epsilon)
            ++path_ok;

        // (c) empirical contraction factor over steps 1..5
        const double rho = inf_operator_norm(m.A);
        Vector x(8, 0.0);
        const Vector bu = matvec(m.B, u);
        double prev = -1.0;
        bool contracts = true;
        for (int k = 0; k < 6; ++k) {
            Vector pre = matvec(m.A, x);
            axpy(pre, 1.0, bu);
            Vector xn(pre.size());
            for (std::size_t i = 0; i < pre.size(); ++i) xn[i] = std::max(pre[i], 0.0);
            const double step = inf_norm(vec_sub(xn, x));
            if (prev > 1e-14 && step > rho * prev + 1e-14) contracts = false;
            prev = step;
            x = xn;
        }
        if (contracts && rho <= m.norm_bound * (1.0 + 1e-12)) ++contraction_ok;
    }
    const bool ok = residual_ok == kWellPosedModels && path_ok == kWellPosedModels &&
                    contraction_ok == kWellPosedModels;
    report(2, "well-posedness on 100 random constrained models", ok,
           "residual " + std::to_string(residual_ok) + "/100, path independence " +
               std::to_string(path_ok) + "/100, contraction " +
               std::to_string(contraction_ok) + "/100");
}

// ---------------------------------------------------------------- criterion 3

void criterion_no_feedback() {
    int exact_ok = 0;
    for (int trial = 0; trial < kWellPosedModels; ++trial) {
        const std::size_t n = 6;
        RngStream rng(4000 + static_cast<std::uint64_t>(trial), stream::init);
        const ImplicitModel m = init_implicit(n, 4, 2, rng, /*feedback=*/false);
        if (!is_strictly_upper(m.A)) continue;
        RngStream drng(5000 + static_cast<std::uint64_t>(trial), stream::data);
        const Vector u = to_vec(sample(DistributionSpec::uniform(-2.0, 2.0), 1, 4, drng).row(0));

        // n applications of the map reach the exact fixed point
        const Vector bu = matvec(m.B, u);
        Vector x(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            Vector pre = matvec(m.A, x);
            axpy(pre, 1.0, bu);
            for (std::size_t i = 0; i < n; ++i) x[i] = std::max(pre[i], 0.0);
        }
        Vector pre = matvec(m.A, x);
        axpy(pre, 1.0, bu);
        bool fixed = true;
        for (std::size_t i = 0; i < n; ++i)
            if (std::max(pre[i], 0.0) != x[i]) fixed = false;

        const auto sol = solve_forward(m, u);
        if (fixed && sol.converged && sol.iterations <= static_cast<int>(n) + 1) ++exact_ok;
    }

    // 50 optimizer steps with feedback off keep the lower triangle exactly zero
    const auto ds = gen_identity(50, 10, DistributionSpec::uniform(-5.0, 5.0), 77);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 1;  // one step per sample = 50 steps
    cfg.seed = 77;
    cfg.feedback = false;
    AnyModel model = make_model(ModelKind::implicit, TaskKind::identity, 77, false);
    train(model, ds, cfg);
    const bool mask_ok = is_strictly_upper(model.as<ImplicitModel>().A);

    report(3, "no-feedback exactness and mask invariance",
           exact_ok == kWellPosedModels && mask_ok,
           "exact fixed point in <= n iterations " + std::to_string(exact_ok) +
               "/100, lower triangle zero after 50 steps: " + (mask_ok ? "yes" : "no"));
}

// ---------------------------------------------------------------- criterion 4

TrainConfig base_config(std::uint64_t seed, int epochs, int batch = 128,
                        double lr = 1e-3) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.learning_rate = lr;
    return cfg;
}

void criterion_identity() {
    std::vector<double> imp25, imp80, mlp80;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ds = gen_task(TaskKind::identity, 10000,
                                 task_train_distribution(TaskKind::identity), seed);
        AnyModel imp = make_model(ModelKind::implicit, TaskKind::identity, seed);
        train(imp, ds, base_config(seed, 40));
        AnyModel mlp = make_model(ModelKind::mlp, TaskKind::identity, seed);
        train(mlp, ds, base_config(seed, 40));

        const auto imp_rep = sweep(imp, ds, {25.0, 80.0}, seed + 100, 3000);
        const auto mlp_rep = sweep(mlp, ds, {25.0, 80.0}, seed + 100, 3000);
        imp25.push_back(imp_rep.rows[0].metrics.at("mse"));
        imp80.push_back(imp_rep.rows[1].metrics.at("mse"));
        mlp80.push_back(mlp_rep.rows[1].metrics.at("mse"));
    }
    const double m25 = median(imp25), m80 = median(imp80), b80 = median(mlp80);
    const bool ok = m25 < kIdentityMseAt25 && m80 <= b80 / kIdentityRatioAt80;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "median implicit MSE: shift 25 = %.3g (< 5), shift 80 = %.3g vs MLP %.3g",
                  m25, m80, b80);
    report(4, "identity extrapolation, 5 seeds", ok, buf);
}

// ------------------------------------------------------------ criteria 5 + 8

void criterion_arithmetic_and_depth() {
    const std::vector<double> shifts{0.0, 10.0, 100.0, 1000.0};
    std::vector<double> add100, sub100;
    int slower_growth = 0, depth_wins = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (TaskKind task : {TaskKind::arithmetic_add, TaskKind::arithmetic_sub}) {
            const auto ds = gen_task(task, 10000, task_train_distribution(task), seed);
            AnyModel imp = make_model(ModelKind::implicit, task, seed);
            train(imp, ds, base_config(seed, 120));
            const auto rep = sweep(imp, ds, shifts, seed + 100, 3000);

            const double mse100 = rep.rows[2].metrics.at("mse");
            (task == TaskKind::arithmetic_add ? add100 : sub100).push_back(mse100);

            if (task == TaskKind::arithmetic_add) {
                // log-MSE growth vs the MLP baseline over shifts 10 -> 1000
                AnyModel mlp = make_model(ModelKind::mlp, task, seed);
                train(mlp, ds, base_config(seed, 120));
                const auto mrep = sweep(mlp, ds, shifts, seed + 100, 3000);
                const double imp_growth = rep.rows[3].metrics.at("log_mse") -
                                          rep.rows[1].metrics.at("log_mse");
                const double mlp_growth = mrep.rows[3].metrics.at("log_mse") -
                                          mrep.rows[1].metrics.at("log_mse");
                if (imp_growth < mlp_growth) ++slower_growth;

                // depth adaptability: forward iterations at shift 1000 vs 0
                if (rep.rows[3].iter_mean >= kDepthRatio * rep.rows[0].iter_mean)
                    ++depth_wins;
            }
        }
    }
    const double madd = median(add100), msub = median(sub100);
    const bool ok5 = madd < kAddMseAt100 && msub < kSubMseAt100 && slower_growth == 5;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "median MSE at shift 100: add %.3g (< 10), sub %.3g (< 5); "
                  "slower log-MSE growth than MLP in %d/5 seeds",
                  madd, msub, slower_growth);
    report(5, "arithmetic extrapolation, 5 seeds", ok5, buf);

    std::snprintf(buf, sizeof buf,
                  "iteration growth >= 1.2x from shift 0 to 1000 in %d/5 seeds", depth_wins);
    report(8, "depth adaptability on addition", depth_wins >= kDepthWins, buf);
}

// ---------------------------------------------------------------- criterion 6

void criterion_ablation() {
    auto run_task = [&](TaskKind task, ModelKind kind, const char* metric, bool higher_better,
                        const TrainConfig& cfg_proto, std::size_t train_n) {
        int wins = 0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            TrainConfig cfg = cfg_proto;
            cfg.seed = seed;
            const auto res = ablation_run(task, kind, {100.0}, cfg, seed, train_n, 2000);
            const double with = res.with_feedback.rows[0].metrics.at(metric);
            const double without = res.without_feedback.rows[0].metrics.at(metric);
            if (higher_better ? with > without : with < without) ++wins;
        }
        return wins;
    };
    const int sub_wins = run_task(TaskKind::arithmetic_sub, ModelKind::implicit, "mse", false,
                                  base_config(0, 60), 10000);
    const int avg_wins = run_task(TaskKind::rolling_average, ModelKind::implicit_rnn, "mse",
                                  false, base_config(0, 40, 64), 10000);
    const int argmax_wins = run_task(TaskKind::rolling_argmax, ModelKind::implicit_rnn,
                                     "accuracy", true, base_config(0, 10), 4000);
    const bool ok = sub_wins >= kAblationWins && avg_wins >= kAblationWins &&
                    argmax_wins >= kAblationWins;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "feedback beats no-feedback at shift 100: sub %d/5, rolling-avg %d/5, "
                  "argmax %d/5 (need >= 3 each)",
                  sub_wins, avg_wins, argmax_wins);
    report(6, "feedback ablation direction", ok, buf);
}

// ---------------------------------------------------------------- criterion 7

void criterion_argmax_accuracy() {
    std::vector<double> accs;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto ds = gen_task(TaskKind::rolling_argmax, 10000,
                                 task_train_distribution(TaskKind::rolling_argmax), seed);
        // wider cell (hidden 40) with a two-stage decaying step converges to
        // high accuracy within the runtime budget; the narrow default stalls
        // near 0.7
        AnyModel model = make_model(ModelKind::implicit_rnn, TaskKind::rolling_argmax, seed,
                                    /*feedback=*/true, 0.95, /*hidden_override=*/40);
        train(model, ds, base_config(seed, 20, 64, 3e-3));
        train(model, ds, base_config(seed + 10, 20, 64, 1e-3));
        const auto rep = sweep(model, ds, {100.0}, seed + 100, 3000);
        accs.push_back(rep.rows[0].metrics.at("accuracy"));
    }
    const double macc = median(accs);

    // copy-previous-final self-test on 1e4 uniform samples
    const std::size_t L = 10, N = 10000;
    const auto ds = gen_rolling_argmax(N, L, DistributionSpec::uniform(0.0, 1.0), 321);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < N; ++s) {
        auto arg_prefix = [&](std::size_t upto) {
            std::size_t best = 0;
            for (std::size_t t = 1; t < upto; ++t)
                if (ds.inputs(s, t) > ds.inputs(s, best)) best = t;
            return best;
        };
        if (arg_prefix(L - 1) == arg_prefix(L)) ++hits;
    }
    const double copy_acc = static_cast<double>(hits) / static_cast<double>(N);
    const bool copy_ok = std::abs(copy_acc - 0.9) <= kCopyFinalBand;

    const bool ok = macc >= kArgmaxAccAt100 && copy_ok;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "median accuracy at shift 100 = %.3f (>= 0.85); copy-previous-final "
                  "self-test %.3f (0.90 +/- 0.01)",
                  macc, copy_acc);
    report(7, "rolling argmax accuracy, 3 seeds", ok, buf);
}

// ---------------------------------------------------------------- criterion 9

void criterion_spiky() {
    int wins = 0;
    std::string detail;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const SpikySeries series = gen_spiky(7000, 3000, 20, 100, seed);
        const auto train_ds = window_series(series.train, SeriesWindowSpec{});
        const auto test_ds = window_series(series.test, SeriesWindowSpec{});

        // identical staged schedule for both models: warm-restart stages with
        // a decaying step keep the implicit model stable where a single long
        // run at the high rate diverges mid-training
        constexpr double kStageLr[6] = {3e-3, 3e-3, 3e-3, 1e-3, 1e-3, 3e-4};
        auto staged_train = [&](AnyModel& m) {
            for (int stage = 0; stage < 6; ++stage)
                train(m, train_ds,
                      base_config(seed + 10 * static_cast<std::uint64_t>(stage), 6, 16,
                                  kStageLr[stage]));
        };

        AnyModel imp = make_model(ModelKind::implicit_rnn, TaskKind::spiky, seed);
        staged_train(imp);
        const double imp_mse = evaluate(imp, test_ds).metrics.at("mse");

        AnyModel elman = make_model(ModelKind::elman, TaskKind::spiky, seed);
        staged_train(elman);
        const double elman_mse = evaluate(elman, test_ds).metrics.at("mse");

        if (imp_mse <= elman_mse) ++wins;
        char buf[80];
        std::snprintf(buf, sizeof buf, "%sseed %llu: %.4g vs %.4g",
                      detail.empty() ? "" : "; ",
                      static_cast<unsigned long long>(seed), imp_mse, elman_mse);
        detail += buf;
    }
    report(9, "spiky forecasting: implicitRNN vs Elman, 3 seeds", wins >= kSpikyWins,
           detail + " (implicitRNN better in " + std::to_string(wins) + "/3)");
}

// --------------------------------------------------------------- criterion 10

void criterion_generators() {
    bool ok = true;
    std::string why;

    // arithmetic against brute-force re-summation, 1e4 samples
    for (bool subtract : {false, true}) {
        const auto ds = gen_arithmetic(10000, 50, subtract,
                                       DistributionSpec::uniform(-1.0, 1.0), 55);
        const auto [i, j, k, l] = ds.segments;
        for (std::size_t s = 0; s < ds.size() && ok; ++s) {
            double a = 0.0, b = 0.0;
            for (int t = i; t <= j; ++t) a += ds.inputs(s, static_cast<std::size_t>(t - 1));
            for (int t = k; t <= l; ++t) b += ds.inputs(s, static_cast<std::size_t>(t - 1));
            const double y = subtract ? a - b : a + b;
            if (std::abs(ds.targets(s, 0) - y) > 1e-12) { ok = false; why = "arithmetic"; }
        }
    }

    // rolling targets against prefix scans
    {
        const auto avg = gen_rolling_average(10000, 10, DistributionSpec::normal(3.0, 1.0), 56);
        for (std::size_t s = 0; s < avg.size() && ok; ++s)
            for (std::size_t j = 0; j < 10; ++j) {
                double sum = 0.0;
                for (std::size_t t = 0; t <= j; ++t) sum += avg.inputs(s, t);
                if (std::abs(avg.targets(s, j) - sum / static_cast<double>(j + 1)) > 1e-12) {
                    ok = false;
                    why = "rolling average";
                }
            }
        const auto am = gen_rolling_argmax(10000, 10, DistributionSpec::uniform(0.0, 1.0), 57);
        for (std::size_t s = 0; s < am.size() && ok; ++s)
            for (std::size_t j = 0; j < 10; ++j) {
                std::size_t best = 0;
                for (std::size_t t = 1; t <= j; ++t)
                    if (am.inputs(s, t) > am.inputs(s, best)) best = t;
                if (am.targets(s, j * 10 + best) != 1.0) { ok = false; why = "argmax"; }
            }
    }

    // variance windows against a two-pass oracle
    {
        RngStream rng(58, stream::data);
        Vector series(10200);
        for (auto& v : series) v = rng.next_uniform(-1.0, 1.0);
        SeriesWindowSpec spec;
        spec.window = 60;
        spec.horizon = 10;
        spec.target_stat = TargetStat::variance;
        const auto ds = window_series(series, spec);
        for (std::size_t s = 0; s < ds.size() && ok; ++s) {
            double mean = 0.0;
            for (std::size_t h = 0; h < 10; ++h) mean += series[s + 60 + h];
            mean /= 10.0;
            double var = 0.0;
            for (std::size_t h = 0; h < 10; ++h) {
                const double d = series[s + 60 + h] - mean;
                var += d * d;
            }
            var /= 10.0;
            if (std::abs(ds.targets(s, 0) - var) > 1e-12) { ok = false; why = "variance"; }
        }
    }

    // byte-identical regeneration
    {
        const auto a = gen_arithmetic(1000, 50, false, DistributionSpec::uniform(-1.0, 1.0), 59);
        const auto b = gen_arithmetic(1000, 50, false, DistributionSpec::uniform(-1.0, 1.0), 59);
        if (!(a.inputs == b.inputs && a.targets == b.targets)) { ok = false; why = "regen"; }
    }

    report(10, "generator oracles on 1e4 samples", ok,
           ok ? "brute-force recomputation and regeneration all exact"
              : "mismatch in " + why);
}

}  // namespace

int main() {
    criterion_gradients();
    criterion_well_posedness();
    criterion_no_feedback();
    criterion_identity();
    criterion_arithmetic_and_depth();
    criterion_ablation();
    criterion_argmax_accuracy();
    criterion_spiky();
    criterion_generators();
    std::printf("%d of 10 criteria passed\n", 10 - g_failures);
    return g_failures;
}
