#include "idl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "idl/param_views.hpp"

namespace idl {

LossKind task_loss(TaskKind kind) {
    return kind == TaskKind::rolling_argmax ? LossKind::softmax_cross_entropy
                                            : LossKind::mse;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (!(norm_bound > 0.0 && norm_bound < 1.0))
        throw std::invalid_argument("TrainConfig: norm_bound must be in (0, 1)");
    if (max_iterations < 1) throw std::invalid_argument("TrainConfig: max_iterations must be >= 1");
}

ParamViews params_of(AnyModel& model) {
    ParamViews p;
    switch (model.kind()) {
        case ModelKind::implicit: {
            auto& m = model.as<ImplicitModel>();
            p.mats = {&m.A, &m.B, &m.C, &m.D};
            break;
        }
        case ModelKind::implicit_rnn: {
            auto& m = model.as<ImplicitRnn>();
            p.mats = {&m.core.A, &m.core.B, &m.core.C, &m.core.D};
            if (m.has_readout) {
                p.mats.push_back(&m.readout_w);
                p.vecs.push_back(&m.readout_b);
            }
            break;
        }
        case ModelKind::mlp: {
            auto& m = model.as<MlpModel>();
            for (auto& w : m.weights) p.mats.push_back(&w);
            for (auto& b : m.biases) p.vecs.push_back(&b);
            break;
        }
        case ModelKind::elman: {
            auto& m = model.as<ElmanRnn>();
            p.mats = {&m.w_xh, &m.w_hh, &m.w_hy};
            p.vecs = {&m.b_h, &m.b_y};
            break;
        }
    }
    return p;
}

void GradBuffer::init_like(const ParamViews& p) {
    mats.clear();
    vecs.clear();
    for (const Matrix* m : p.mats) mats.emplace_back(m->rows(), m->cols());
    for (const Vector* v : p.vecs) vecs.emplace_back(v->size(), 0.0);
}

void GradBuffer::add(const GradBuffer& other) {
    for (std::size_t i = 0; i < mats.size(); ++i)
        for (std::size_t k = 0; k < mats[i].size(); ++k)
            mats[i].data()[k] += other.mats[i].data()[k];
    for (std::size_t i = 0; i < vecs.size(); ++i)
        for (std::size_t k = 0; k < vecs[i].size(); ++k) vecs[i][k] += other.vecs[i][k];
}

void GradBuffer::scale(double s) {
    for (auto& m : mats)
        for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] *= s;
    for (auto& v : vecs)
        for (double& x : v) x *= s;
}

void Optimizer::init(const ParamViews& params) {
    m1.init_like(params);
    m2.init_like(params);
    t = 0;
}

void Optimizer::step(ParamViews& params, const GradBuffer& grads,
                     const TrainConfig& cfg) {
    ++t;
    auto update = [&](double& w, double g, double& s1, double& s2) {
        if (cfg.optimizer == OptimizerKind::sgd) {
            s1 = cfg.momentum * s1 + g;
            w -= cfg.learning_rate * s1;
        } else {
            s1 = cfg.beta1 * s1 + (1.0 - cfg.beta1) * g;
            s2 = cfg.beta2 * s2 + (1.0 - cfg.beta2) * g * g;
            const double mh = s1 / (1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
            const double vh = s2 / (1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
            w -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.adam_eps);
        }
    };
    for (std::size_t i = 0; i < params.mats.size(); ++i)
        for (std::size_t k = 0; k < params.mats[i]->size(); ++k)
            update(params.mats[i]->data()[k], grads.mats[i].data()[k],
                   m1.mats[i].data()[k], m2.mats[i].data()[k]);
    for (std::size_t i = 0; i < params.vecs.size(); ++i)
        for (std::size_t k = 0; k < params.vecs[i]->size(); ++k)
            update((*params.vecs[i])[k], grads.vecs[i][k], m1.vecs[i][k], m2.vecs[i][k]);
}

AnyModel make_model(ModelKind kind, TaskKind task, std::uint64_t seed, bool feedback,
                    double norm_bound, std::size_t hidden_override) {
    RngStream rng(seed, stream::init);
    const std::size_t h = hidden_override;
    AnyModel model;
    switch (kind) {
        case ModelKind::implicit: {
            std::size_t n = 0, p = 0, q = 0;
            switch (task) {
                case TaskKind::identity: n = h ? h : 4; p = 10; q = 10; break;
                case TaskKind::arithmetic_add:
                case TaskKind::arithmetic_sub: n = h ? h : 20; p = 50; q = 1; break;
                case TaskKind::rolling_average: n = h ? h : 32; p = 10; q = 10; break;
                case TaskKind::rolling_argmax: n = h ? h : 36; p = 10; q = 10; break;
                case TaskKind::spiky:
                    throw std::invalid_argument("make_model: spiky needs a recurrent model");
            }
            model.value = init_implicit(n, p, q, rng, feedback, norm_bound);
            break;
        }
        case ModelKind::implicit_rnn: {
            switch (task) {
                case TaskKind::rolling_argmax:
                    model.value = init_implicit_rnn(1, h ? h : 21, 22, 10, rng, feedback, norm_bound);
                    break;
                case TaskKind::rolling_average:
                    model.value = init_implicit_rnn(1, h ? h : 21, 21, 1, rng, feedback, norm_bound);
                    break;
                case TaskKind::spiky:
                    model.value = init_implicit_rnn(1, h ? h : 20, 20, 1, rng, feedback, norm_bound);
                    break;
                default:
                    throw std::invalid_argument("make_model: implicit-rnn needs a sequence task");
            }
            break;
        }
        case ModelKind::mlp: {
            switch (task) {
                case TaskKind::identity:
                    model.value = init_mlp({10, h ? h : 9, h ? h : 9, 10}, rng);
                    break;
                case TaskKind::arithmetic_add:
                case TaskKind::arithmetic_sub:
                    model.value = init_mlp({50, h ? h : 10, h ? h : 10, 1}, rng);
                    break;
                case TaskKind::rolling_average:
                    model.value = init_mlp({10, h ? h : 18, h ? h : 18, 10}, rng);
                    break;
                case TaskKind::rolling_argmax:
                    model.value = init_mlp({10, h ? h : 21, h ? h : 21, 10}, rng);
                    break;
                case TaskKind::spiky:
                    model.value = init_mlp({50, h ? h : 20, h ? h : 20, 1}, rng);
                    break;
            }
            break;
        }
        case ModelKind::elman: {
            switch (task) {
                case TaskKind::rolling_average:
                    model.value = init_elman(1, h ? h : 18, 1, rng);
                    break;
                case TaskKind::rolling_argmax:
                    model.value = init_elman(1, h ? h : 21, 10, rng);
                    break;
                case TaskKind::spiky:
                    model.value = init_elman(1, h ? h : 20, 1, rng);
                    break;
                default:
                    throw std::invalid_argument("make_model: elman needs a sequence task");
            }
            break;
        }
    }
    return model;
}

namespace {

std::vector<Vector> row_to_sequence(const TaskDataset& ds, std::size_t row) {
    std::vector<Vector> seq(ds.seq_len);
    const auto r = ds.inputs.row(row);
    for (std::size_t t = 0; t < ds.seq_len; ++t)
        seq[t].assign(r.begin() + static_cast<std::ptrdiff_t>(t * ds.input_dim),
                      r.begin() + static_cast<std::ptrdiff_t>((t + 1) * ds.input_dim));
    return seq;
}

// loss value and gradient on one output vector
double loss_and_grad(LossKind loss, std::span<const double> pred,
                     std::span<const double> target, Vector& grad) {
    grad.assign(pred.size(), 0.0);
    if (loss == LossKind::mse) {
        double acc = 0.0;
        const double inv = 1.0 / static_cast<double>(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double e = pred[i] - target[i];
            acc += e * e * inv;
            grad[i] = 2.0 * e * inv;
        }
        return acc;
    }
    // softmax cross-entropy against a one-hot target
    double zmax = pred[0];
    for (double z : pred) zmax = std::max(zmax, z);
    double denom = 0.0;
    for (double z : pred) denom += std::exp(z - zmax);
    double loss_val = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::exp(pred[i] - zmax) / denom;
        grad[i] = p - target[i];
        if (target[i] > 0.5) loss_val = -(pred[i] - zmax - std::log(denom));
    }
    return loss_val;
}

// scored target for flat (non-sequence-model) prediction: the final one-hot
// block for rolling argmax, the full row otherwise
Vector flat_target(const TaskDataset& ds, std::size_t row) {
    const auto r = ds.targets.row(row);
    if (ds.kind == TaskKind::rolling_argmax) {
        const std::size_t L = ds.step_target_dim;
        return Vector(r.end() - static_cast<std::ptrdiff_t>(L), r.end());
    }
    return Vector(r.begin(), r.end());
}

Vector step_target(const TaskDataset& ds, std::size_t row, std::size_t t) {
    const auto r = ds.targets.row(row);
    const std::size_t d = ds.step_target_dim;
    return Vector(r.begin() + static_cast<std::ptrdiff_t>(t * d),
                  r.begin() + static_cast<std::ptrdiff_t>((t + 1) * d));
}

struct SampleResult {
    GradBuffer grads;
    double loss = 0.0;
    std::vector<int> iterations;  // forward solves, implicit kinds only
};

SampleResult sample_gradient(const AnyModel& model, const TaskDataset& ds,
                             std::size_t row, const TrainConfig& cfg,
                             Vector* warm_state) {
    SampleResult out;
    Vector grad;
    switch (model.kind()) {
        case ModelKind::implicit: {
            const auto& m = model.as<ImplicitModel>();
            const auto u = ds.inputs.row(row);
            EquilibriumSolution sol;
            if (warm_state && !warm_state->empty())
                sol = solve_forward(m, u, *warm_state);
            else
                sol = solve_forward(m, u);
            if (!sol.converged)
                throw std::runtime_error("forward solve did not converge");
            if (warm_state) *warm_state = sol.x;
            out.iterations.push_back(sol.iterations);
            const Vector pred = predict_from(m, u, sol);
            Vector target = flat_target(ds, row);
            out.loss = loss_and_grad(cfg.loss, pred, target, grad);
            if (ds.kind == TaskKind::rolling_average && cfg.final_step_loss_only) {
                // keep only the final element's contribution
                for (std::size_t i = 0; i + 1 < grad.size(); ++i) grad[i] = 0.0;
                grad.back() *= static_cast<double>(grad.size());
                const double e = pred.back() - target.back();
                out.loss = e * e;
            }
            const BackwardResult res = solve_backward(m, u, sol, grad);
            out.grads.mats = {res.grads.dA, res.grads.dB, res.grads.dC, res.grads.dD};
            break;
        }
        case ModelKind::implicit_rnn: {
            const auto& m = model.as<ImplicitRnn>();
            const auto seq = row_to_sequence(ds, row);
            const SequenceTrace trace = rnn_forward(m, seq);
            for (const auto& step : trace.steps) out.iterations.push_back(step.sol.iterations);

            const std::size_t T = trace.length();
            std::vector<Vector> dL(T);
            const bool final_only = cfg.final_step_loss_only || ds.step_target_dim == 0;
            double total = 0.0;
            std::size_t scored = 0;
            for (std::size_t t = 0; t < T; ++t) {
                const Vector& o = trace.steps[t].output;
                if (final_only && t + 1 < T) {
                    dL[t].assign(o.size(), 0.0);
                    continue;
                }
                const Vector target = ds.step_target_dim == 0
                                          ? Vector(ds.targets.row(row).begin(),
                                                   ds.targets.row(row).end())
                                          : step_target(ds, row, t);
                total += loss_and_grad(cfg.loss, o, target, grad);
                dL[t] = grad;
                ++scored;
            }
            out.loss = total / static_cast<double>(scored);
            const double inv = 1.0 / static_cast<double>(scored);
            for (auto& g : dL)
                for (double& x : g) x *= inv;

            const RnnGradientSet g = rnn_backward(m, trace, dL);
            out.grads.mats = {g.core.dA, g.core.dB, g.core.dC, g.core.dD};
            if (m.has_readout) {
                out.grads.mats.push_back(g.d_readout_w);
                out.grads.vecs.push_back(g.d_readout_b);
            }
            break;
        }
        case ModelKind::mlp: {
            const auto& m = model.as<MlpModel>();
            MlpCache cache;
            const Vector pred = mlp_forward(m, ds.inputs.row(row), &cache);
            Vector target = flat_target(ds, row);
            out.loss = loss_and_grad(cfg.loss, pred, target, grad);
            const MlpGradients g = mlp_backward(m, cache, grad);
            out.grads.mats.assign(g.d_weights.begin(), g.d_weights.end());
            out.grads.vecs.assign(g.d_biases.begin(), g.d_biases.end());
            break;
        }
        case ModelKind::elman: {
            const auto& m = model.as<ElmanRnn>();
            const auto seq = row_to_sequence(ds, row);
            const ElmanCache cache = elman_forward(m, seq);
            const std::size_t T = cache.outputs.size();
            std::vector<Vector> dL(T);
            const bool final_only = cfg.final_step_loss_only || ds.step_target_dim == 0;
            double total = 0.0;
            std::size_t scored = 0;
            for (std::size_t t = 0; t < T; ++t) {
                const Vector& o = cache.outputs[t];
                if (final_only && t + 1 < T) {
                    dL[t].assign(o.size(), 0.0);
                    continue;
                }
                const Vector target = ds.step_target_dim == 0
                                          ? Vector(ds.targets.row(row).begin(),
                                                   ds.targets.row(row).end())
                                          : step_target(ds, row, t);
                total += loss_and_grad(cfg.loss, o, target, grad);
                dL[t] = grad;
                ++scored;
            }
            out.loss = total / static_cast<double>(scored);
            const double inv = 1.0 / static_cast<double>(scored);
            for (auto& g : dL)
                for (double& x : g) x *= inv;

            const ElmanGradients g = elman_backward(m, cache, dL);
            out.grads.mats = {g.d_w_xh, g.d_w_hh, g.d_w_hy};
            out.grads.vecs = {g.d_b_h, g.d_b_y};
            break;
        }
    }
    return out;
}

double median_of(std::vector<int> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RunRecord train(AnyModel& model, const TaskDataset& dataset, const TrainConfig& config) {
    config.validate();
    TrainConfig cfg = config;
    cfg.loss = task_loss(dataset.kind);
    const auto t_start = std::chrono::steady_clock::now();

    // solver/constraint settings follow the config for implicit kinds
    ImplicitModel* core = nullptr;
    if (model.kind() == ModelKind::implicit) core = &model.as<ImplicitModel>();
    if (model.kind() == ModelKind::implicit_rnn) core = &model.as<ImplicitRnn>().core;
    if (core) {
        core->feedback = cfg.feedback;
        core->norm_bound = cfg.norm_bound;
        core->max_iterations = cfg.max_iterations;
        apply_constraints(*core);
    }

    ParamViews params = params_of(model);
    Optimizer opt;
    opt.kind = cfg.optimizer;
    opt.init(params);

    const std::size_t n = dataset.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    RngStream shuffle_rng(cfg.seed, stream::shuffle);

    std::vector<Vector> warm(cfg.warm_start && model.kind() == ModelKind::implicit ? n : 0);

    RunRecord rec;
    rec.config = config;
    rec.seed = cfg.seed;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<std::size_t>(shuffle_rng.next_int(0, static_cast<std::int64_t>(i) - 1))]);

        double epoch_loss = 0.0;
        std::vector<int> epoch_iters;
        std::size_t batch_index = 0;

        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
            const std::size_t count = std::min<std::size_t>(cfg.batch_size, n - start);
            std::vector<SampleResult> results(count);
            std::vector<std::string> errors(count);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (count > 1)
#endif
            for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(count); ++b) {
                const std::size_t row = order[start + static_cast<std::size_t>(b)];
                try {
                    results[static_cast<std::size_t>(b)] = sample_gradient(
                        model, dataset, row, cfg, warm.empty() ? nullptr : &warm[row]);
                } catch (const std::exception& e) {
                    errors[static_cast<std::size_t>(b)] = e.what();
                }
            }
            for (std::size_t b = 0; b < count; ++b)
                if (!errors[b].empty())
                    throw std::runtime_error("train: epoch " + std::to_string(epoch) +
                                             " batch " + std::to_string(batch_index) + ": " +
                                             errors[b]);

            // fixed-order reduction: identical result for any thread count
            GradBuffer total = std::move(results[0].grads);
            epoch_loss += results[0].loss;
            epoch_iters.insert(epoch_iters.end(), results[0].iterations.begin(),
                               results[0].iterations.end());
            for (std::size_t b = 1; b < count; ++b) {
                total.add(results[b].grads);
                epoch_loss += results[b].loss;
                epoch_iters.insert(epoch_iters.end(), results[b].iterations.begin(),
                                   results[b].iterations.end());
            }
            total.scale(1.0 / static_cast<double>(count));
            if (!std::isfinite(epoch_loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch));

            if (core && !cfg.feedback) mask_strictly_upper(total.mats[0]);
            opt.step(params, total, cfg);
            if (core) apply_constraints(*core);
        }

        rec.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
        if (!epoch_iters.empty()) {
            rec.epoch_iter_mean.push_back(
                std::accumulate(epoch_iters.begin(), epoch_iters.end(), 0.0) /
                static_cast<double>(epoch_iters.size()));
            rec.epoch_iter_median.push_back(median_of(epoch_iters));
        } else {
            rec.epoch_iter_mean.push_back(0.0);
            rec.epoch_iter_median.push_back(0.0);
        }
    }

    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rec;
}

EvalResult evaluate(const AnyModel& model, const TaskDataset& dataset) {
    const std::size_t n = dataset.size();
    if (n == 0) throw std::invalid_argument("evaluate: empty dataset");

    struct PerSample {
        double sq_sum = 0.0;
        std::size_t count = 0;
        double ape_sum = 0.0;
        std::size_t ape_count = 0, ape_excluded = 0;
        bool correct = false;
        std::vector<int> iterations;
        std::string error;
    };
    std::vector<PerSample> acc(n);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n); ++r) {
        PerSample& s = acc[static_cast<std::size_t>(r)];
        try {
            const auto row = static_cast<std::size_t>(r);
            Vector pred, target;
            switch (model.kind()) {
                case ModelKind::implicit: {
                    const auto& m = model.as<ImplicitModel>();
                    const EquilibriumSolution sol = solve_forward(m, dataset.inputs.row(row));
                    s.iterations.push_back(sol.iterations);
                    pred = predict_from(m, dataset.inputs.row(row), sol);
                    target = flat_target(dataset, row);
                    if (dataset.kind == TaskKind::rolling_average) {
                        pred = {pred.back()};
                        target = {target.back()};
                    }
                    break;
                }
                case ModelKind::mlp: {
                    pred = mlp_forward(model.as<MlpModel>(), dataset.inputs.row(row));
                    target = flat_target(dataset, row);
                    if (dataset.kind == TaskKind::rolling_average) {
                        pred = {pred.back()};
                        target = {target.back()};
                    }
                    break;
                }
                case ModelKind::implicit_rnn: {
                    const auto& m = model.as<ImplicitRnn>();
                    const SequenceTrace trace = rnn_forward(m, row_to_sequence(dataset, row));
                    for (const auto& st : trace.steps) s.iterations.push_back(st.sol.iterations);
                    pred = trace.steps.back().output;
                    target = dataset.step_target_dim == 0
                                 ? Vector(dataset.targets.row(row).begin(),
                                          dataset.targets.row(row).end())
                                 : step_target(dataset, row, dataset.seq_len - 1);
                    break;
                }
                case ModelKind::elman: {
                    const ElmanCache cache =
                        elman_forward(model.as<ElmanRnn>(), row_to_sequence(dataset, row));
                    pred = cache.outputs.back();
                    target = dataset.step_target_dim == 0
                                 ? Vector(dataset.targets.row(row).begin(),
                                          dataset.targets.row(row).end())
                                 : step_target(dataset, row, dataset.seq_len - 1);
                    break;
                }
            }
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const double e = pred[i] - target[i];
                s.sq_sum += e * e;
                ++s.count;
                if (std::abs(target[i]) < 1e-12) {
                    ++s.ape_excluded;
                } else {
                    s.ape_sum += std::abs(e) / std::abs(target[i]);
                    ++s.ape_count;
                }
            }
            const auto amax = [](const Vector& v) {
                return std::distance(v.begin(), std::max_element(v.begin(), v.end()));
            };
            s.correct = amax(pred) == amax(target);
        } catch (const std::exception& e) {
            s.error = e.what();
        }
    }

    for (const auto& s : acc)
        if (!s.error.empty()) throw std::runtime_error("evaluate: " + s.error);

    double sq = 0.0, ape = 0.0;
    std::size_t count = 0, ape_count = 0, ape_excluded = 0, correct = 0;
    std::vector<int> iters;
    for (const auto& s : acc) {
        sq += s.sq_sum;
        count += s.count;
        ape += s.ape_sum;
        ape_count += s.ape_count;
        ape_excluded += s.ape_excluded;
        correct += s.correct ? 1 : 0;
        iters.insert(iters.end(), s.iterations.begin(), s.iterations.end());
    }

    EvalResult out;
    const double mse = sq / static_cast<double>(count);
    out.metrics["mse"] = mse;
    out.metrics["rmse"] = std::sqrt(mse);
    out.metrics["log_mse"] = std::log10(std::max(mse, 1e-300));
    out.metrics["mape"] = ape_count ? 100.0 * ape / static_cast<double>(ape_count) : 0.0;
    out.metrics["accuracy"] = static_cast<double>(correct) / static_cast<double>(n);
    out.mape_excluded = ape_excluded;
    if (!iters.empty()) {
        out.iter_mean = std::accumulate(iters.begin(), iters.end(), 0.0) /
                        static_cast<double>(iters.size());
        out.iter_median = median_of(iters);
        std::sort(iters.begin(), iters.end());
        out.iter_p95 = iters[std::min(iters.size() - 1,
                                      static_cast<std::size_t>(0.95 * static_cast<double>(iters.size())))];
    }
    return out;
}

}  // namespace idl
