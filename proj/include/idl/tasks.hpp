#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include "idl/matrix.hpp"
#include "idl/rng.hpp"

namespace idl {

enum class TaskKind {
    identity,
    arithmetic_add,
    arithmetic_sub,
    rolling_average,
    rolling_argmax,
    spiky,
};

std::string task_name(TaskKind kind);
TaskKind task_from_name(const std::string& name);

struct TaskDataset {
    Matrix inputs;   // N x p (sequence tasks flatten steps row-major)
    Matrix targets;  // N x q, or N x (seq_len * step_target_dim) per-step
    TaskKind kind = TaskKind::identity;
    DistributionSpec dist;
    std::uint64_t seed = 0;
    std::size_t seq_len = 0;  // 0 for non-sequence tasks
    std::size_t input_dim = 0;
    std::size_t step_target_dim = 0;
    // arithmetic segment bounds (i, j, k, l), 1-based inclusive
    std::array<int, 4> segments{0, 0, 0, 0};

    std::size_t size() const { return inputs.rows(); }
    bool is_sequence() const { return seq_len > 0; }
};

// Training distributions and kappa-shifted test distributions per task.
// kappa = 0 returns the training distribution.
DistributionSpec task_train_distribution(TaskKind kind);
DistributionSpec task_test_distribution(TaskKind kind, double kappa);

TaskDataset gen_identity(std::size_t n, std::size_t dim, const DistributionSpec& dist,
                         std::uint64_t seed);

/// Draws segment bounds i<j and k<l from 1..len once per dataset seed (or
/// reuses `fixed_segments` so a whole shift sweep scores one fixed function),
/// then per sample a = sum u_i..u_j, b = sum u_k..u_l, y = a+b or a-b.
TaskDataset gen_arithmetic(std::size_t n, std::size_t len, bool subtract,
                           const DistributionSpec& dist, std::uint64_t seed,
                           const std::array<int, 4>* fixed_segments = nullptr);

/// Per-step target: mean of u_1..u_j.
TaskDataset gen_rolling_average(std::size_t n, std::size_t L,
                                const DistributionSpec& dist, std::uint64_t seed);

/// Per-step target: one-hot (length L) index of max(u_1..u_j), ties to the
/// earliest index.
TaskDataset gen_rolling_argmax(std::size_t n, std::size_t L,
                               const DistributionSpec& dist, std::uint64_t seed);

/// Generates a task dataset with the per-task default dimensions.
TaskDataset gen_task(TaskKind kind, std::size_t n, const DistributionSpec& dist,
                     std::uint64_t seed,
                     const std::array<int, 4>* fixed_segments = nullptr);

struct SpikySeries {
    Vector train, test;
    std::vector<std::size_t> train_region_starts, test_region_starts;
    std::size_t region_len = 0;
    double x_step = 0.0;
};

/// Sine base series with additive noise and non-overlapping high-frequency
/// spiky regions; the test series continues the same x grid with a
/// proportionate number of regions.
SpikySeries gen_spiky(std::size_t train_n = 7000, std::size_t test_n = 3000,
                      std::size_t regions = 20, std::size_t region_len = 100,
                      std::uint64_t seed = 0, double x_step = 0.01);

enum class TargetStat { next_value, variance };

struct SeriesWindowSpec {
    std::size_t window = 50;
    std::size_t horizon = 1;
    TargetStat target_stat = TargetStat::next_value;
};

/// Sliding windows over a series. next_value targets the first value after
/// the window; variance targets the population variance of the next
/// `horizon` values.
TaskDataset window_series(const Vector& series, const SeriesWindowSpec& spec);

/// Chronological split at floor(fraction * N); windows never cross the cutoff.
std::pair<TaskDataset, TaskDataset> chrono_split(const TaskDataset& ds,
                                                 double train_fraction);

Vector load_csv_series(const std::filesystem::path& path, const std::string& column);
void save_series_csv(const Vector& series, const std::filesystem::path& path,
                     const std::string& column = "v");

// Dataset container: inputs.bin / targets.bin plus a JSON sidecar manifest.
void save_dataset(const TaskDataset& ds, const std::filesystem::path& dir);
TaskDataset load_dataset(const std::filesystem::path& dir);

}  // namespace idl
