#include <cmath>
#include <functional>
#include <stdexcept>

#include "idl/harness.hpp"
#include "idl/param_views.hpp"

namespace idl {

namespace {

constexpr double kKinkMargin = 1e-3;  // reject trials with pre-activations this close to 0
constexpr double kFdStep = 1e-5;

double sq_loss(std::span<const double> pred, std::span<const double> target,
               Vector* grad = nullptr) {
    double acc = 0.0;
    if (grad) grad->assign(pred.size(), 0.0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - target[i];
        acc += e * e;
        if (grad) (*grad)[i] = 2.0 * e;
    }
    return acc;
}

// worst relative error between analytic and central finite differences over
// every parameter entry; near-zero pairs are compared absolutely
bool compare_fd(AnyModel model, const std::function<double(const AnyModel&)>& loss_fn,
                const GradBuffer& analytic, double tol, double& worst) {
    ParamViews params = params_of(model);
    bool ok = true;
    auto check_entry = [&](double& w, double g) {
        const double saved = w;
        const double h = kFdStep * std::max(1.0, std::abs(saved));
        w = saved + h;
        const double lp = loss_fn(model);
        w = saved - h;
        const double lm = loss_fn(model);
        w = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double denom = std::max(std::abs(g), std::abs(fd));
        if (denom < 1e-6) {
            if (std::abs(g - fd) > 1e-8) ok = false;
        } else {
            const double rel = std::abs(g - fd) / denom;
            worst = std::max(worst, rel);
            if (rel > tol) ok = false;
        }
    };
    for (std::size_t i = 0; i < params.mats.size(); ++i)
        for (std::size_t k = 0; k < params.mats[i]->size(); ++k)
            check_entry(params.mats[i]->data()[k], analytic.mats[i].data()[k]);
    for (std::size_t i = 0; i < params.vecs.size(); ++i)
        for (std::size_t k = 0; k < params.vecs[i]->size(); ++k)
            check_entry((*params.vecs[i])[k], analytic.vecs[i][k]);
    return ok;
}

void tighten(ImplicitModel& m) {
    m.epsilon = 1e-12;
    m.max_iterations = 20000;
}

bool away_from_kinks(std::span<const double> pre_activation) {
    for (double z : pre_activation)
        if (std::abs(z) < kKinkMargin) return false;
    return true;
}

}  // namespace

GradCheckReport gradcheck(ModelKind kind, int trials, double tolerance,
                          std::uint64_t seed) {
    GradCheckReport report;
    report.passed = true;
    const auto u01 = DistributionSpec::uniform(-1.0, 1.0);

    int done = 0, attempts = 0;
    while (done < trials) {
        if (++attempts > trials * 100)
            throw std::runtime_error("gradcheck: could not find enough kink-free trials");
        RngStream rng(seed, 1000 + static_cast<std::uint64_t>(attempts));

        switch (kind) {
            case ModelKind::implicit: {
                ImplicitModel m = init_implicit(8, 5, 3, rng);
                tighten(m);
                const Matrix u = sample(u01, 1, 5, rng);
                const Matrix y = sample(u01, 1, 3, rng);
                const Vector uv(u.row(0).begin(), u.row(0).end());
                const Vector yv(y.row(0).begin(), y.row(0).end());

                const EquilibriumSolution sol = solve_forward(m, uv);
                if (!sol.converged || !away_from_kinks(sol.pre_activation)) continue;
                Vector dLdy;
                sq_loss(predict_from(m, uv, sol), yv, &dLdy);
                const BackwardResult res = solve_backward(m, uv, sol, dLdy);
                GradBuffer analytic;
                analytic.mats = {res.grads.dA, res.grads.dB, res.grads.dC, res.grads.dD};

                AnyModel wrapped;
                wrapped.value = m;
                auto loss_fn = [&uv, &yv](const AnyModel& mm) {
                    return sq_loss(predict(mm.as<ImplicitModel>(), uv), yv);
                };
                if (!compare_fd(wrapped, loss_fn, analytic, tolerance,
                                report.worst_relative_error))
                    report.passed = false;
                break;
            }
            case ModelKind::implicit_rnn: {
                ImplicitRnn m = init_implicit_rnn(3, 6, 5, 2, rng);
                tighten(m.core);
                const std::size_t T = 4;
                std::vector<Vector> seq, targets;
                for (std::size_t t = 0; t < T; ++t) {
                    const Matrix s = sample(u01, 1, 3, rng);
                    const Matrix y = sample(u01, 1, 2, rng);
                    seq.emplace_back(s.row(0).begin(), s.row(0).end());
                    targets.emplace_back(y.row(0).begin(), y.row(0).end());
                }
                const SequenceTrace trace = rnn_forward(m, seq);
                bool clean = true;
                for (const auto& st : trace.steps)
                    clean = clean && away_from_kinks(st.sol.pre_activation);
                if (!clean) continue;

                std::vector<Vector> dL(T);
                for (std::size_t t = 0; t < T; ++t)
                    sq_loss(trace.steps[t].output, targets[t], &dL[t]);
                const RnnGradientSet g = rnn_backward(m, trace, dL);
                GradBuffer analytic;
                analytic.mats = {g.core.dA, g.core.dB, g.core.dC, g.core.dD, g.d_readout_w};
                analytic.vecs = {g.d_readout_b};

                AnyModel wrapped;
                wrapped.value = m;
                auto loss_fn = [&seq, &targets](const AnyModel& mm) {
                    const SequenceTrace tr = rnn_forward(mm.as<ImplicitRnn>(), seq);
                    double acc = 0.0;
                    for (std::size_t t = 0; t < tr.length(); ++t)
                        acc += sq_loss(tr.steps[t].output, targets[t]);
                    return acc;
                };
                if (!compare_fd(wrapped, loss_fn, analytic, tolerance,
                                report.worst_relative_error))
                    report.passed = false;
                break;
            }
            case ModelKind::mlp: {
                MlpModel m = init_mlp({5, 7, 6, 3}, rng);
                const Matrix u = sample(u01, 1, 5, rng);
                const Matrix y = sample(u01, 1, 3, rng);
                const Vector uv(u.row(0).begin(), u.row(0).end());
                const Vector yv(y.row(0).begin(), y.row(0).end());

                MlpCache cache;
                const Vector pred = mlp_forward(m, uv, &cache);
                bool clean = true;
                for (std::size_t l = 0; l + 1 < cache.pre_activations.size(); ++l)
                    clean = clean && away_from_kinks(cache.pre_activations[l]);
                if (!clean) continue;

                Vector dLdy;
                sq_loss(pred, yv, &dLdy);
                const MlpGradients g = mlp_backward(m, cache, dLdy);
                GradBuffer analytic;
                analytic.mats.assign(g.d_weights.begin(), g.d_weights.end());
                analytic.vecs.assign(g.d_biases.begin(), g.d_biases.end());

                AnyModel wrapped;
                wrapped.value = m;
                auto loss_fn = [&uv, &yv](const AnyModel& mm) {
                    return sq_loss(mlp_forward(mm.as<MlpModel>(), uv), yv);
                };
                if (!compare_fd(wrapped, loss_fn, analytic, tolerance,
                                report.worst_relative_error))
                    report.passed = false;
                break;
            }
            case ModelKind::elman: {
                ElmanRnn m = init_elman(3, 6, 2, rng);
                const std::size_t T = 4;
                std::vector<Vector> seq, targets;
                for (std::size_t t = 0; t < T; ++t) {
                    const Matrix s = sample(u01, 1, 3, rng);
                    const Matrix y = sample(u01, 1, 2, rng);
                    seq.emplace_back(s.row(0).begin(), s.row(0).end());
                    targets.emplace_back(y.row(0).begin(), y.row(0).end());
                }
                const ElmanCache cache = elman_forward(m, seq);
                std::vector<Vector> dL(T);
                for (std::size_t t = 0; t < T; ++t)
                    sq_loss(cache.outputs[t], targets[t], &dL[t]);
                const ElmanGradients g = elman_backward(m, cache, dL);
                GradBuffer analytic;
                analytic.mats = {g.d_w_xh, g.d_w_hh, g.d_w_hy};
                analytic.vecs = {g.d_b_h, g.d_b_y};

                AnyModel wrapped;
                wrapped.value = m;
                auto loss_fn = [&seq, &targets](const AnyModel& mm) {
                    const ElmanCache c = elman_forward(mm.as<ElmanRnn>(), seq);
                    double acc = 0.0;
                    for (std::size_t t = 0; t < c.outputs.size(); ++t)
                        acc += sq_loss(c.outputs[t], targets[t]);
                    return acc;
                };
                if (!compare_fd(wrapped, loss_fn, analytic, tolerance,
                                report.worst_relative_error))
                    report.passed = false;
                break;
            }
        }
        ++done;
    }
    report.trials = done;
    return report;
}

}  // namespace idl
