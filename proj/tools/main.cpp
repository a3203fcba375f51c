#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "idl/harness.hpp"
#include "idl/io.hpp"
#include "idl/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join_args(int argc, char** argv) {
    std::ostringstream out;
    for (int i = 0; i < argc; ++i) {
        if (i) out << ' ';
        out << argv[i];
    }
    return out.str();
}

std::vector<double> parse_shifts(const std::string& csv) {
    std::vector<double> shifts;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) shifts.push_back(std::stod(cell));
    if (shifts.empty()) throw std::invalid_argument("--shifts: empty list");
    return shifts;
}

struct TrainFlags {
    std::string task, data_dir, model = "implicit", out_dir;
    std::string optimizer = "adam";
    double lr = 1e-3, norm_bound = 0.95, momentum = 0.9;
    int epochs = 20, batch = 128, max_iter = 500;
    std::uint64_t seed = 0;
    std::size_t hidden = 0, train_n = 10000;
    bool no_feedback = false, warm_start = false, final_step_only = false;

    idl::TrainConfig to_config() const {
        idl::TrainConfig cfg;
        cfg.learning_rate = lr;
        cfg.epochs = epochs;
        cfg.batch_size = batch;
        cfg.optimizer = optimizer == "sgd" ? idl::OptimizerKind::sgd : idl::OptimizerKind::adam;
        cfg.momentum = momentum;
        cfg.seed = seed;
        cfg.feedback = !no_feedback;
        cfg.norm_bound = norm_bound;
        cfg.max_iterations = max_iter;
        cfg.warm_start = warm_start;
        cfg.final_step_loss_only = final_step_only;
        return cfg;
    }

    json to_json() const {
        return {{"task", task},         {"data", data_dir},
                {"model", model},       {"optimizer", optimizer},
                {"learning_rate", lr},  {"epochs", epochs},
                {"batch_size", batch},  {"seed", seed},
                {"hidden", hidden},     {"train_n", train_n},
                {"feedback", !no_feedback}, {"norm_bound", norm_bound},
                {"max_iterations", max_iter}, {"warm_start", warm_start},
                {"final_step_loss_only", final_step_only}};
    }
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--task", f.task, "task to generate training data for");
    cmd->add_option("--data", f.data_dir, "directory with a generated dataset");
    cmd->add_option("--model", f.model, "implicit|implicit-rnn|mlp|elman");
    cmd->add_option("--optimizer", f.optimizer, "adam|sgd");
    cmd->add_option("--lr", f.lr, "learning rate");
    cmd->add_option("--momentum", f.momentum, "sgd momentum");
    cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--batch", f.batch, "minibatch size");
    cmd->add_option("--seed", f.seed, "run seed");
    cmd->add_option("--hidden", f.hidden, "override hidden/state size");
    cmd->add_option("--train-n", f.train_n, "generated training set size");
    cmd->add_option("--norm-bound", f.norm_bound, "infinity-norm radius for A");
    cmd->add_option("--max-iter", f.max_iter, "forward solver iteration cap");
    cmd->add_flag("--no-feedback", f.no_feedback, "enforce strictly upper triangular A");
    cmd->add_flag("--warm-start", f.warm_start, "carry equilibrium states across epochs");
    cmd->add_flag("--final-step-only", f.final_step_only,
                  "train rolling tasks on the final element only");
}

// config file values fill in any train flag the user did not pass explicitly
void apply_config_file(CLI::App* cmd, const std::string& config_path, TrainFlags& f) {
    if (config_path.empty()) return;
    std::ifstream cf(config_path);
    if (!cf) throw std::runtime_error("cannot open config file " + config_path);
    json j;
    cf >> j;
    auto take = [&](const char* flag, const char* key, auto& target) {
        if (cmd->count(flag) == 0 && j.contains(key)) target = j.at(key);
    };
    take("--model", "model", f.model);
    take("--optimizer", "optimizer", f.optimizer);
    take("--lr", "learning_rate", f.lr);
    take("--momentum", "momentum", f.momentum);
    take("--epochs", "epochs", f.epochs);
    take("--batch", "batch_size", f.batch);
    take("--seed", "seed", f.seed);
    take("--hidden", "hidden", f.hidden);
    take("--train-n", "train_n", f.train_n);
    take("--norm-bound", "norm_bound", f.norm_bound);
    take("--max-iter", "max_iterations", f.max_iter);
    if (cmd->count("--no-feedback") == 0 && j.contains("feedback"))
        f.no_feedback = !j.at("feedback").get<bool>();
    if (cmd->count("--warm-start") == 0 && j.contains("warm_start"))
        f.warm_start = j.at("warm_start").get<bool>();
    if (cmd->count("--final-step-only") == 0 && j.contains("final_step_loss_only"))
        f.final_step_only = j.at("final_step_loss_only").get<bool>();
}

idl::TaskDataset make_training_data(const TrainFlags& f) {
    if (!f.data_dir.empty()) return idl::load_dataset(f.data_dir);
    if (f.task.empty())
        throw std::invalid_argument("train: pass --task or --data");
    const idl::TaskKind kind = idl::task_from_name(f.task);
    if (kind == idl::TaskKind::spiky) {
        const idl::SpikySeries series = idl::gen_spiky(7000, 3000, 20, 100, f.seed);
        return idl::window_series(series.train, idl::SeriesWindowSpec{});
    }
    return idl::gen_task(kind, f.train_n, idl::task_train_distribution(kind), f.seed);
}

json run_record_json(const idl::RunRecord& rec) {
    return {{"epoch_loss", rec.epoch_loss},
            {"epoch_iter_mean", rec.epoch_iter_mean},
            {"epoch_iter_median", rec.epoch_iter_median},
            {"wall_seconds", rec.wall_seconds},
            {"seed", rec.seed}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    f << text;
}

json eval_json(const idl::EvalResult& eval) {
    json j;
    for (const auto& [k, v] : eval.metrics) j["metrics"][k] = v;
    j["mape_excluded"] = eval.mape_excluded;
    j["iterations"] = {{"mean", eval.iter_mean},
                       {"median", eval.iter_median},
                       {"p95", eval.iter_p95}};
    return j;
}

int cmd_gen_data(const std::string& cmdline, const std::string& task, std::size_t n,
                 std::uint64_t seed, double shift, const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out);
    idl::RunManifest manifest;
    manifest.command_line = cmdline;
    manifest.seed = seed;
    manifest.config_json =
        json{{"task", task}, {"n", n}, {"seed", seed}, {"shift", shift}}.dump();

    const idl::TaskKind kind = idl::task_from_name(task);
    if (kind == idl::TaskKind::spiky) {
        const idl::SpikySeries series = idl::gen_spiky(7000, 3000, 20, 100, seed);
        idl::save_series_csv(series.train, out / "train_series.csv");
        idl::save_series_csv(series.test, out / "test_series.csv");
        json layout{{"regions", series.train_region_starts.size()},
                    {"region_len", series.region_len},
                    {"x_step", series.x_step},
                    {"train_region_starts", series.train_region_starts},
                    {"test_region_starts", series.test_region_starts}};
        write_text(out / "layout.json", layout.dump(2) + "\n");
        idl::save_dataset(idl::window_series(series.train, idl::SeriesWindowSpec{}),
                          out / "train");
        idl::save_dataset(idl::window_series(series.test, idl::SeriesWindowSpec{}),
                          out / "test");
        manifest.outputs = {out / "train_series.csv", out / "test_series.csv",
                            out / "layout.json", out / "train" / "inputs.bin",
                            out / "train" / "targets.bin", out / "test" / "inputs.bin",
                            out / "test" / "targets.bin"};
    } else {
        const auto dist = idl::task_test_distribution(kind, shift);
        idl::save_dataset(idl::gen_task(kind, n, dist, seed), out);
        manifest.outputs = {out / "inputs.bin", out / "targets.bin", out / "dataset.json"};
    }
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.write(out);
    std::cout << "wrote dataset to " << out << "\n";
    return 0;
}

int cmd_train(const std::string& cmdline, const TrainFlags& f) {
    if (f.out_dir.empty()) throw std::invalid_argument("train: --out is required");
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(f.out_dir);

    const idl::TaskDataset ds = make_training_data(f);
    idl::AnyModel model =
        idl::make_model(idl::model_kind_from_name(f.model), ds.kind, f.seed,
                        !f.no_feedback, f.norm_bound, f.hidden);
    const idl::RunRecord rec = idl::train(model, ds, f.to_config());

    const fs::path out(f.out_dir);
    idl::save_checkpoint(model, f.seed, out / "checkpoint.bin");
    write_text(out / "run.json", run_record_json(rec).dump(2) + "\n");

    idl::RunManifest manifest;
    manifest.command_line = cmdline;
    manifest.seed = f.seed;
    manifest.config_json = f.to_json().dump();
    manifest.outputs = {out / "checkpoint.bin", out / "run.json"};
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.write(out);
    std::cout << "final train loss " << (rec.epoch_loss.empty() ? 0.0 : rec.epoch_loss.back())
              << ", checkpoint at " << (out / "checkpoint.bin") << "\n";
    return 0;
}

int cmd_eval(const std::string& cmdline, const std::string& model_file,
             const std::string& data_dir, const std::string& metrics_csv,
             const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [model, seed] = idl::load_checkpoint(model_file);
    const idl::TaskDataset ds = idl::load_dataset(data_dir);
    const idl::EvalResult eval = idl::evaluate(model, ds);

    json j = eval_json(eval);
    std::vector<std::string> wanted;
    if (!metrics_csv.empty()) {
        std::stringstream ss(metrics_csv);
        std::string cell;
        while (std::getline(ss, cell, ',')) wanted.push_back(cell);
        for (const auto& name : wanted)
            if (!eval.metrics.contains(name))
                throw std::invalid_argument("eval: unknown metric " + name);
    }
    for (const auto& [k, v] : eval.metrics)
        if (wanted.empty() ||
            std::find(wanted.begin(), wanted.end(), k) != wanted.end())
            std::cout << k << " = " << v << "\n";

    if (!out.empty()) {
        fs::create_directories(out);
        write_text(out / "metrics.json", j.dump(2) + "\n");
        std::ostringstream csv;
        csv << "metric,value\n";
        for (const auto& [k, v] : eval.metrics) csv << k << ',' << v << '\n';
        write_text(out / "metrics.csv", csv.str());
        idl::RunManifest manifest;
        manifest.command_line = cmdline;
        manifest.seed = seed;
        manifest.outputs = {out / "metrics.json", out / "metrics.csv"};
        manifest.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest.write(out);
    }
    return 0;
}

int cmd_sweep(const std::string& cmdline, const std::string& model_file,
              const std::string& task, const std::string& data_dir,
              const std::string& shifts_csv, std::uint64_t seed, std::size_t test_n,
              const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out);
    const auto [model, init_seed] = idl::load_checkpoint(model_file);
    idl::TaskDataset reference;
    if (!data_dir.empty()) {
        reference = idl::load_dataset(data_dir);
    } else {
        if (task.empty()) throw std::invalid_argument("sweep: pass --task or --data");
        const idl::TaskKind kind = idl::task_from_name(task);
        reference = idl::gen_task(kind, 1, idl::task_train_distribution(kind), seed);
    }
    const idl::SweepReport report =
        idl::sweep(model, reference, parse_shifts(shifts_csv), seed, test_n);
    write_text(out / "sweep.json", report.to_json() + "\n");
    write_text(out / "sweep.csv", report.to_csv());

    idl::RunManifest manifest;
    manifest.command_line = cmdline;
    manifest.seed = seed;
    manifest.config_json =
        json{{"task", report.task}, {"shifts", shifts_csv}, {"test_n", test_n}}.dump();
    manifest.outputs = {out / "sweep.json", out / "sweep.csv"};
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.write(out);
    std::cout << report.to_csv();
    return 0;
}

int cmd_ablate(const std::string& cmdline, const TrainFlags& f,
               const std::string& shifts_csv, std::size_t test_n) {
    if (f.out_dir.empty()) throw std::invalid_argument("ablate: --out is required");
    if (f.task.empty()) throw std::invalid_argument("ablate: --task is required");
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(f.out_dir);

    const idl::AblationResult result = idl::ablation_run(
        idl::task_from_name(f.task), idl::model_kind_from_name(f.model),
        parse_shifts(shifts_csv), f.to_config(), f.seed, f.train_n, test_n);

    const fs::path out(f.out_dir);
    write_text(out / "feedback_sweep.json", result.with_feedback.to_json() + "\n");
    write_text(out / "feedback_sweep.csv", result.with_feedback.to_csv());
    write_text(out / "no_feedback_sweep.json", result.without_feedback.to_json() + "\n");
    write_text(out / "no_feedback_sweep.csv", result.without_feedback.to_csv());
    write_text(out / "comparison.csv", result.comparison_csv());

    idl::RunManifest manifest;
    manifest.command_line = cmdline;
    manifest.seed = f.seed;
    manifest.config_json = f.to_json().dump();
    manifest.outputs = {out / "feedback_sweep.json", out / "feedback_sweep.csv",
                        out / "no_feedback_sweep.json", out / "no_feedback_sweep.csv",
                        out / "comparison.csv"};
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.write(out);
    std::cout << result.comparison_csv();
    return 0;
}

int cmd_gradcheck(const std::string& model, int trials, double tol, std::uint64_t seed) {
    const idl::GradCheckReport report =
        idl::gradcheck(idl::model_kind_from_name(model), trials, tol, seed);
    std::cout << (report.passed ? "PASS" : "FAIL") << ": " << model << ", "
              << report.trials << " trials, max relative error "
              << report.worst_relative_error << " (tolerance " << tol << ")\n";
    return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"equilibrium-model extrapolation benchmark toolkit"};
    app.require_subcommand(1);
    const std::string cmdline = join_args(argc, argv);

    // gen-data
    std::string gd_task;
    std::size_t gd_n = 10000;
    std::uint64_t gd_seed = 0;
    double gd_shift = 0.0;
    std::string gd_out;
    auto* gen = app.add_subcommand("gen-data", "generate a benchmark dataset");
    gen->add_option("--task", gd_task)->required();
    gen->add_option("--n", gd_n);
    gen->add_option("--seed", gd_seed);
    gen->add_option("--shift", gd_shift, "distribution shift kappa (0 = training dist)");
    gen->add_option("--out", gd_out)->required();

    // train
    TrainFlags tf;
    std::string tf_config;
    auto* tr = app.add_subcommand("train", "train a model");
    add_train_flags(tr, tf);
    tr->add_option("--config", tf_config, "JSON config file (flags override it)");
    tr->add_option("--out", tf.out_dir)->required();

    // eval
    std::string ev_model, ev_data, ev_metrics, ev_out;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    ev->add_option("--model-file", ev_model)->required();
    ev->add_option("--data", ev_data)->required();
    ev->add_option("--metrics", ev_metrics, "comma-separated metric names");
    ev->add_option("--out", ev_out);

    // sweep
    std::string sw_model, sw_task, sw_data, sw_shifts, sw_out;
    std::uint64_t sw_seed = 0;
    std::size_t sw_test_n = 3000;
    auto* sw = app.add_subcommand("sweep", "distribution-shift sweep for a checkpoint");
    sw->add_option("--model-file", sw_model)->required();
    sw->add_option("--task", sw_task);
    sw->add_option("--data", sw_data, "training dataset dir (fixes arithmetic segments)");
    sw->add_option("--shifts", sw_shifts)->required();
    sw->add_option("--seed", sw_seed);
    sw->add_option("--test-n", sw_test_n);
    sw->add_option("--out", sw_out)->required();

    // ablate
    TrainFlags af;
    af.model = "implicit";
    std::string ab_shifts, af_config;
    std::size_t ab_test_n = 3000;
    auto* ab = app.add_subcommand("ablate", "paired feedback on/off training runs");
    add_train_flags(ab, af);
    ab->add_option("--config", af_config, "JSON config file (flags override it)");
    ab->add_option("--shifts", ab_shifts)->required();
    ab->add_option("--test-n", ab_test_n);
    ab->add_option("--out", af.out_dir)->required();

    // gradcheck
    std::string gc_model = "implicit";
    int gc_trials = 20;
    double gc_tol = 1e-4;
    std::uint64_t gc_seed = 0;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
    gc->add_option("--model", gc_model);
    gc->add_option("--trials", gc_trials);
    gc->add_option("--tol", gc_tol);
    gc->add_option("--seed", gc_seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen_data(cmdline, gd_task, gd_n, gd_seed, gd_shift, gd_out);
        if (*tr) {
            apply_config_file(tr, tf_config, tf);
            return cmd_train(cmdline, tf);
        }
        if (*ev) return cmd_eval(cmdline, ev_model, ev_data, ev_metrics, ev_out);
        if (*sw)
            return cmd_sweep(cmdline, sw_model, sw_task, sw_data, sw_shifts, sw_seed,
                             sw_test_n, sw_out);
        if (*ab) {
            apply_config_file(ab, af_config, af);
            return cmd_ablate(cmdline, af, ab_shifts, ab_test_n);
        }
        if (*gc) return cmd_gradcheck(gc_model, gc_trials, gc_tol, gc_seed);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
