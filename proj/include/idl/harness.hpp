#pragma once

#include <map>
#include <optional>
#include <string>

#include "idl/model.hpp"
#include "idl/tasks.hpp"

namespace idl {

enum class OptimizerKind { sgd, adam };
enum class LossKind { mse, softmax_cross_entropy };

LossKind task_loss(TaskKind kind);

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 20;
    int batch_size = 128;
    OptimizerKind optimizer = OptimizerKind::adam;
    double momentum = 0.9;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::mse;
    bool feedback = true;
    double norm_bound = 0.95;
    int max_iterations = 500;
    bool warm_start = false;
    // rolling tasks: train on every step by default, score the final element
    bool final_step_loss_only = false;

    void validate() const;
};

struct RunRecord {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_iter_mean;    // forward iterations, implicit kinds
    std::vector<double> epoch_iter_median;
    double wall_seconds = 0.0;
    TrainConfig config;
    std::uint64_t seed = 0;
};

/// Builds a model of the given kind sized for the task (per-task default
/// architectures; hidden_override > 0 replaces the main hidden/state size).
AnyModel make_model(ModelKind kind, TaskKind task, std::uint64_t seed,
                    bool feedback = true, double norm_bound = 0.95,
                    std::size_t hidden_override = 0);

/// Minibatch training: forward, loss, backward, feedback mask, optimizer
/// update, constraint projection. Deterministic for a fixed (config, seed)
/// regardless of thread count (per-sample gradients are reduced in a fixed
/// order).
RunRecord train(AnyModel& model, const TaskDataset& dataset, const TrainConfig& config);

struct EvalResult {
    std::map<std::string, double> metrics;  // mse, log_mse, rmse, mape, accuracy
    std::size_t mape_excluded = 0;
    double iter_mean = 0.0, iter_median = 0.0, iter_p95 = 0.0;
};

EvalResult evaluate(const AnyModel& model, const TaskDataset& dataset);

struct SweepRow {
    double kappa = 0.0;
    std::map<std::string, double> metrics;
    double iter_mean = 0.0, iter_median = 0.0, iter_p95 = 0.0;
};

struct SweepReport {
    std::string model_kind;
    std::string task;
    std::vector<SweepRow> rows;

    std::string to_json() const;
    std::string to_csv() const;
};

/// Regenerates a kappa-shifted test set per entry of `shifts` (arithmetic
/// segment bounds held fixed from the reference dataset) and evaluates the
/// model on each. shifts must be strictly increasing.
SweepReport sweep(const AnyModel& model, const TaskDataset& reference,
                  const std::vector<double>& shifts, std::uint64_t seed,
                  std::size_t test_n = 3000);

struct AblationResult {
    SweepReport with_feedback;
    SweepReport without_feedback;
    std::string comparison_csv() const;
};

/// Trains two models from the same seed and data, feedback on/off, otherwise
/// identical, and sweeps both.
AblationResult ablation_run(TaskKind task, ModelKind model_kind,
                            const std::vector<double>& shifts,
                            const TrainConfig& config, std::uint64_t seed,
                            std::size_t train_n = 10000, std::size_t test_n = 3000);

/// k disjoint folds covering all indices, deterministic in seed.
std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

struct GradCheckReport {
    bool passed = false;
    double worst_relative_error = 0.0;
    int trials = 0;
};

/// Compares every analytic parameter gradient against central finite
/// differences of the full pipeline on random small instances; trials where
/// any pre-activation sits within 1e-3 of a ReLU kink are redrawn.
GradCheckReport gradcheck(ModelKind kind, int trials, double tolerance,
                          std::uint64_t seed);

}  // namespace idl
