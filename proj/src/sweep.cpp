#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "idl/harness.hpp"

namespace idl {

namespace {
const std::vector<std::string> kMetricColumns = {"mse", "log_mse", "rmse", "mape",
                                                 "accuracy"};
}

std::string SweepReport::to_json() const {
    nlohmann::json j;
    j["model_kind"] = model_kind;
    j["task"] = task;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json r;
        r["kappa"] = row.kappa;
        for (const auto& [k, v] : row.metrics) r["metrics"][k] = v;
        r["iterations"] = {{"mean", row.iter_mean},
                           {"median", row.iter_median},
                           {"p95", row.iter_p95}};
        j["rows"].push_back(std::move(r));
    }
    return j.dump(2);
}

std::string SweepReport::to_csv() const {
    std::ostringstream out;
    out << "kappa";
    for (const auto& c : kMetricColumns) out << ',' << c;
    out << ",iter_mean,iter_median,iter_p95\n";
    out.precision(17);
    for (const auto& row : rows) {
        out << row.kappa;
        for (const auto& c : kMetricColumns) out << ',' << row.metrics.at(c);
        out << ',' << row.iter_mean << ',' << row.iter_median << ',' << row.iter_p95
            << '\n';
    }
    return out.str();
}

SweepReport sweep(const AnyModel& model, const TaskDataset& reference,
                  const std::vector<double>& shifts, std::uint64_t seed,
                  std::size_t test_n) {
    if (reference.kind == TaskKind::spiky)
        throw std::invalid_argument("sweep: the forecasting task has no shift sweep");
    for (std::size_t i = 1; i < shifts.size(); ++i)
        if (!(shifts[i] > shifts[i - 1]))
            throw std::invalid_argument("sweep: shifts must be strictly increasing");

    SweepReport report;
    report.model_kind = model_kind_name(model.kind());
    report.task = task_name(reference.kind);
    for (double kappa : shifts) {
        const auto dist = task_test_distribution(reference.kind, kappa);
        const TaskDataset test =
            gen_task(reference.kind, test_n, dist, seed, &reference.segments);
        const EvalResult eval = evaluate(model, test);
        SweepRow row;
        row.kappa = kappa;
        row.metrics = eval.metrics;
        row.iter_mean = eval.iter_mean;
        row.iter_median = eval.iter_median;
        row.iter_p95 = eval.iter_p95;
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string AblationResult::comparison_csv() const {
    std::ostringstream out;
    out << "kappa";
    for (const auto& c : kMetricColumns) out << ',' << c << "_feedback," << c << "_no_feedback";
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < with_feedback.rows.size(); ++i) {
        out << with_feedback.rows[i].kappa;
        for (const auto& c : kMetricColumns)
            out << ',' << with_feedback.rows[i].metrics.at(c) << ','
                << without_feedback.rows[i].metrics.at(c);
        out << '\n';
    }
    return out.str();
}

AblationResult ablation_run(TaskKind task, ModelKind model_kind,
                            const std::vector<double>& shifts,
                            const TrainConfig& config, std::uint64_t seed,
                            std::size_t train_n, std::size_t test_n) {
    const TaskDataset train_ds =
        gen_task(task, train_n, task_train_distribution(task), seed);

    AblationResult result;
    for (bool feedback : {true, false}) {
        AnyModel model = make_model(model_kind, task, seed, feedback, config.norm_bound);
        TrainConfig cfg = config;
        cfg.seed = seed;
        cfg.feedback = feedback;
        train(model, train_ds, cfg);
        SweepReport rep = sweep(model, train_ds, shifts, seed + 1, test_n);
        (feedback ? result.with_feedback : result.without_feedback) = std::move(rep);
    }
    return result;
}

std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold_split: k must be >= 2");
    if (k > n) throw std::invalid_argument("kfold_split: k exceeds dataset size");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    RngStream rng(seed, stream::shuffle);
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1],
                  order[static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(i) - 1))]);

    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds;
    for (std::size_t f = 0; f < k; ++f) {
        // fold f takes the f-th contiguous slice of the shuffled order
        const std::size_t lo = f * n / k, hi = (f + 1) * n / k;
        std::vector<std::size_t> val(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                     order.begin() + static_cast<std::ptrdiff_t>(hi));
        std::vector<std::size_t> train_idx;
        train_idx.reserve(n - val.size());
        train_idx.insert(train_idx.end(), order.begin(),
                         order.begin() + static_cast<std::ptrdiff_t>(lo));
        train_idx.insert(train_idx.end(), order.begin() + static_cast<std::ptrdiff_t>(hi),
                         order.end());
        folds.emplace_back(std::move(train_idx), std::move(val));
    }
    return folds;
}

}  // namespace idl
