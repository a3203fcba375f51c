#include "idl/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "idl/io.hpp"

namespace idl {

std::string task_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::identity: return "identity";
        case TaskKind::arithmetic_add: return "add";
        case TaskKind::arithmetic_sub: return "sub";
        case TaskKind::rolling_average: return "rolling-avg";
        case TaskKind::rolling_argmax: return "rolling-argmax";
        case TaskKind::spiky: return "spiky";
    }
    throw std::invalid_argument("task_name: unknown kind");
}

TaskKind task_from_name(const std::string& name) {
    if (name == "identity") return TaskKind::identity;
    if (name == "add") return TaskKind::arithmetic_add;
    if (name == "sub") return TaskKind::arithmetic_sub;
    if (name == "rolling-avg") return TaskKind::rolling_average;
    if (name == "rolling-argmax") return TaskKind::rolling_argmax;
    if (name == "spiky") return TaskKind::spiky;
    throw std::invalid_argument("unknown task: " + name);
}

DistributionSpec task_train_distribution(TaskKind kind) {
    switch (kind) {
        case TaskKind::identity: return DistributionSpec::uniform(-5.0, 5.0);
        case TaskKind::arithmetic_add:
        case TaskKind::arithmetic_sub: return DistributionSpec::uniform(-1.0, 1.0);
        case TaskKind::rolling_average: return DistributionSpec::normal(3.0, 1.0);
        case TaskKind::rolling_argmax: return DistributionSpec::uniform(0.0, 1.0);
        case TaskKind::spiky: break;
    }
    throw std::invalid_argument("task_train_distribution: task has no sampled distribution");
}

DistributionSpec task_test_distribution(TaskKind kind, double kappa) {
    if (kappa < 0.0) throw std::invalid_argument("task_test_distribution: kappa must be >= 0");
    if (kappa == 0.0) return task_train_distribution(kind);
    switch (kind) {
        case TaskKind::identity: return DistributionSpec::uniform(-kappa, kappa, kappa);
        case TaskKind::arithmetic_add:
        case TaskKind::arithmetic_sub:
            return DistributionSpec::uniform(-kappa / 2.0, kappa / 2.0, kappa);
        case TaskKind::rolling_average:
            return DistributionSpec::normal(3.0 + kappa, 1.0, kappa);
        case TaskKind::rolling_argmax:
            return DistributionSpec::uniform(0.0, kappa, kappa);
        case TaskKind::spiky: break;
    }
    throw std::invalid_argument("task_test_distribution: task has no shifted distribution");
}

TaskDataset gen_identity(std::size_t n, std::size_t dim, const DistributionSpec& dist,
                         std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("gen_identity: dim must be >= 1");
    RngStream rng(seed, stream::data);
    TaskDataset ds;
    ds.kind = TaskKind::identity;
    ds.dist = dist;
    ds.seed = seed;
    ds.inputs = sample(dist, n, dim, rng);
    ds.targets = ds.inputs;
    return ds;
}

TaskDataset gen_arithmetic(std::size_t n, std::size_t len, bool subtract,
                           const DistributionSpec& dist, std::uint64_t seed,
                           const std::array<int, 4>* fixed_segments) {
    if (len < 2) throw std::invalid_argument("gen_arithmetic: len must be >= 2");
    TaskDataset ds;
    ds.kind = subtract ? TaskKind::arithmetic_sub : TaskKind::arithmetic_add;
    ds.dist = dist;
    ds.seed = seed;
    if (fixed_segments) {
        ds.segments = *fixed_segments;
    } else {
        RngStream seg_rng(seed, stream::segments);
        auto draw_pair = [&](int& lo, int& hi) {
            do {
                lo = static_cast<int>(seg_rng.next_int(1, static_cast<std::int64_t>(len)));
                hi = static_cast<int>(seg_rng.next_int(1, static_cast<std::int64_t>(len)));
            } while (lo >= hi);
        };
        draw_pair(ds.segments[0], ds.segments[1]);
        draw_pair(ds.segments[2], ds.segments[3]);
    }
    const auto [i, j, k, l] = ds.segments;

    RngStream rng(seed, stream::data);
    ds.inputs = sample(dist, n, len, rng);
    ds.targets = Matrix(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
        double a = 0.0, b = 0.0;
        for (int t = i; t <= j; ++t) a += ds.inputs(r, static_cast<std::size_t>(t - 1));
        for (int t = k; t <= l; ++t) b += ds.inputs(r, static_cast<std::size_t>(t - 1));
        ds.targets(r, 0) = subtract ? a - b : a + b;
    }
    return ds;
}

TaskDataset gen_rolling_average(std::size_t n, std::size_t L,
                                const DistributionSpec& dist, std::uint64_t seed) {
    if (L < 1) throw std::invalid_argument("gen_rolling_average: L must be >= 1");
    RngStream rng(seed, stream::data);
    TaskDataset ds;
    ds.kind = TaskKind::rolling_average;
    ds.dist = dist;
    ds.seed = seed;
    ds.seq_len = L;
    ds.input_dim = 1;
    ds.step_target_dim = 1;
    ds.inputs = sample(dist, n, L, rng);
    ds.targets = Matrix(n, L);
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t t = 0; t < L; ++t) {
            s += ds.inputs(r, t);
            ds.targets(r, t) = s / static_cast<double>(t + 1);
        }
    }
    return ds;
}

TaskDataset gen_rolling_argmax(std::size_t n, std::size_t L,
                               const DistributionSpec& dist, std::uint64_t seed) {
    if (L < 2) throw std::invalid_argument("gen_rolling_argmax: L must be >= 2");
    RngStream rng(seed, stream::data);
    TaskDataset ds;
    ds.kind = TaskKind::rolling_argmax;
    ds.dist = dist;
    ds.seed = seed;
    ds.seq_len = L;
    ds.input_dim = 1;
    ds.step_target_dim = L;
    ds.inputs = sample(dist, n, L, rng);
    ds.targets = Matrix(n, L * L);
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t best = 0;
        for (std::size_t t = 0; t < L; ++t) {
            if (ds.inputs(r, t) > ds.inputs(r, best)) best = t;  // ties to earliest
            ds.targets(r, t * L + best) = 1.0;
        }
    }
    return ds;
}

TaskDataset gen_task(TaskKind kind, std::size_t n, const DistributionSpec& dist,
                     std::uint64_t seed, const std::array<int, 4>* fixed_segments) {
    switch (kind) {
        case TaskKind::identity: return gen_identity(n, 10, dist, seed);
        case TaskKind::arithmetic_add:
            return gen_arithmetic(n, 50, false, dist, seed, fixed_segments);
        case TaskKind::arithmetic_sub:
            return gen_arithmetic(n, 50, true, dist, seed, fixed_segments);
        case TaskKind::rolling_average: return gen_rolling_average(n, 10, dist, seed);
        case TaskKind::rolling_argmax: return gen_rolling_argmax(n, 10, dist, seed);
        case TaskKind::spiky: break;
    }
    throw std::invalid_argument("gen_task: spiky uses gen_spiky + window_series");
}

namespace {
std::vector<std::size_t> place_regions(std::size_t series_len, std::size_t regions,
                                       std::size_t region_len, RngStream& rng) {
    if (regions * region_len > series_len)
        throw std::invalid_argument("gen_spiky: regions do not fit in the series");
    std::vector<std::size_t> starts;
    const std::size_t max_start = series_len - region_len;
    int attempts = 0;
    while (starts.size() < regions) {
        if (++attempts > 100000)
            throw std::invalid_argument("gen_spiky: could not place non-overlapping regions");
        const auto s = static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(max_start)));
        bool ok = true;
        for (std::size_t other : starts)
            if (s < other + region_len && other < s + region_len) { ok = false; break; }
        if (ok) starts.push_back(s);
    }
    std::sort(starts.begin(), starts.end());
    return starts;
}

double spike_value(double x) {
    return 5.0 * (std::sin(2.0 * x) + std::sin(23.0 * x) + std::sin(78.0 * x) +
                  std::sin(100.0 * x));
}
}  // namespace

SpikySeries gen_spiky(std::size_t train_n, std::size_t test_n, std::size_t regions,
                      std::size_t region_len, std::uint64_t seed, double x_step) {
    SpikySeries out;
    out.region_len = region_len;
    out.x_step = x_step;

    RngStream layout_rng(seed, stream::layout);
    out.train_region_starts = place_regions(train_n, regions, region_len, layout_rng);
    const auto test_regions = static_cast<std::size_t>(std::llround(
        static_cast<double>(regions) * static_cast<double>(test_n) / static_cast<double>(train_n)));
    out.test_region_starts = place_regions(test_n, test_regions, region_len, layout_rng);

    RngStream noise_rng(seed, stream::data);
    auto build = [&](std::size_t count, std::size_t t_offset,
                     const std::vector<std::size_t>& starts) {
        Vector series(count);
        std::vector<bool> spiky(count, false);
        for (std::size_t s : starts)
            for (std::size_t t = s; t < s + region_len; ++t) spiky[t] = true;
        for (std::size_t t = 0; t < count; ++t) {
            const double x = static_cast<double>(t + t_offset) * x_step;
            series[t] = spiky[t] ? spike_value(x)
                                 : std::sin(x) + noise_rng.next_normal(0.0, 0.5);
        }
        return series;
    };
    out.train = build(train_n, 0, out.train_region_starts);
    out.test = build(test_n, train_n, out.test_region_starts);
    return out;
}

TaskDataset window_series(const Vector& series, const SeriesWindowSpec& spec) {
    if (spec.window < 1 || spec.horizon < 1)
        throw std::invalid_argument("window_series: window and horizon must be >= 1");
    if (series.size() < spec.window + spec.horizon)
        throw std::invalid_argument("window_series: series shorter than window + horizon");

    const std::size_t n = series.size() - spec.window - spec.horizon + 1;
    TaskDataset ds;
    ds.kind = TaskKind::spiky;
    ds.seq_len = spec.window;
    ds.input_dim = 1;
    ds.step_target_dim = 0;  // scored on the single forecast target
    ds.inputs = Matrix(n, spec.window);
    ds.targets = Matrix(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t t = 0; t < spec.window; ++t) ds.inputs(r, t) = series[r + t];
        if (spec.target_stat == TargetStat::next_value) {
            ds.targets(r, 0) = series[r + spec.window];
        } else {
            double mean = 0.0;
            for (std::size_t h = 0; h < spec.horizon; ++h)
                mean += series[r + spec.window + h];
            mean /= static_cast<double>(spec.horizon);
            double var = 0.0;
            for (std::size_t h = 0; h < spec.horizon; ++h) {
                const double d = series[r + spec.window + h] - mean;
                var += d * d;
            }
            ds.targets(r, 0) = var / static_cast<double>(spec.horizon);
        }
    }
    return ds;
}

std::pair<TaskDataset, TaskDataset> chrono_split(const TaskDataset& ds,
                                                 double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("chrono_split: fraction must be in (0, 1)");
    const auto cut = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(ds.size())));
    auto slice = [&](std::size_t lo, std::size_t hi) {
        TaskDataset part = ds;
        part.inputs = Matrix(hi - lo, ds.inputs.cols());
        part.targets = Matrix(hi - lo, ds.targets.cols());
        for (std::size_t r = lo; r < hi; ++r) {
            std::copy(ds.inputs.row(r).begin(), ds.inputs.row(r).end(),
                      part.inputs.row(r - lo).begin());
            std::copy(ds.targets.row(r).begin(), ds.targets.row(r).end(),
                      part.targets.row(r - lo).begin());
        }
        return part;
    };
    return {slice(0, cut), slice(cut, ds.size())};
}

Vector load_csv_series(const std::filesystem::path& path, const std::string& column) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_csv_series: cannot open " + path.string());
    std::string header;
    if (!std::getline(f, header))
        throw std::runtime_error("load_csv_series: empty file " + path.string());

    std::vector<std::string> names;
    {
        std::stringstream ss(header);
        std::string cell;
        while (std::getline(ss, cell, ',')) names.push_back(cell);
    }
    const auto it = std::find(names.begin(), names.end(), column);
    if (it == names.end())
        throw std::runtime_error("load_csv_series: column '" + column + "' not found in " +
                                 path.string());
    const auto col = static_cast<std::size_t>(std::distance(names.begin(), it));

    Vector series;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        bool found = false;
        while (std::getline(ss, cell, ',')) {
            if (c++ == col) {
                std::size_t pos = 0;
                double v = 0.0;
                try {
                    v = std::stod(cell, &pos);
                } catch (const std::exception&) {
                    pos = 0;
                }
                if (pos != cell.size())
                    throw std::runtime_error("load_csv_series: non-numeric value '" + cell +
                                             "' at line " + std::to_string(line_no));
                series.push_back(v);
                found = true;
                break;
            }
        }
        if (!found)
            throw std::runtime_error("load_csv_series: missing column at line " +
                                     std::to_string(line_no));
    }
    if (series.empty())
        throw std::runtime_error("load_csv_series: no data rows in " + path.string());
    return series;
}

void save_series_csv(const Vector& series, const std::filesystem::path& path,
                     const std::string& column) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_series_csv: cannot open " + path.string());
    f << "t," << column << '\n' << std::setprecision(17);
    for (std::size_t t = 0; t < series.size(); ++t) f << t << ',' << series[t] << '\n';
}

namespace {
nlohmann::json dist_to_json(const DistributionSpec& d) {
    return {{"family", d.family == DistFamily::uniform ? "uniform" : "normal"},
            {"a", d.a},
            {"b", d.b},
            {"shift", d.shift}};
}

DistributionSpec dist_from_json(const nlohmann::json& j) {
    DistributionSpec d;
    d.family = j.at("family") == "uniform" ? DistFamily::uniform : DistFamily::normal;
    d.a = j.at("a");
    d.b = j.at("b");
    d.shift = j.at("shift");
    return d;
}
}  // namespace

void save_dataset(const TaskDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_matrix(ds.inputs, dir / "inputs.bin");
    save_matrix(ds.targets, dir / "targets.bin");
    nlohmann::json j{{"task_kind", task_name(ds.kind)},
                     {"dist", dist_to_json(ds.dist)},
                     {"seed", ds.seed},
                     {"n", ds.size()},
                     {"seq_len", ds.seq_len},
                     {"input_dim", ds.input_dim},
                     {"step_target_dim", ds.step_target_dim},
                     {"segments", ds.segments}};
    std::ofstream f(dir / "dataset.json");
    f << j.dump(2) << '\n';
}

TaskDataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream f(dir / "dataset.json");
    if (!f) throw std::runtime_error("load_dataset: cannot open " + (dir / "dataset.json").string());
    nlohmann::json j;
    f >> j;
    TaskDataset ds;
    ds.kind = task_from_name(j.at("task_kind"));
    ds.dist = dist_from_json(j.at("dist"));
    ds.seed = j.at("seed");
    ds.seq_len = j.at("seq_len");
    ds.input_dim = j.at("input_dim");
    ds.step_target_dim = j.at("step_target_dim");
    ds.segments = j.at("segments");
    ds.inputs = load_matrix(dir / "inputs.bin");
    ds.targets = load_matrix(dir / "targets.bin");
    return ds;
}

}  // namespace idl
