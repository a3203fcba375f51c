#include "idl/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace idl {

MlpModel init_mlp(const std::vector<std::size_t>& layer_sizes, RngStream& rng) {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("init_mlp: need at least input and output sizes");
    MlpModel m;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const std::size_t in = layer_sizes[l], out = layer_sizes[l + 1];
        const auto dist = DistributionSpec::normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
        m.weights.push_back(sample(dist, out, in, rng));
        m.biases.emplace_back(out, 0.0);
    }
    return m;
}

Vector mlp_forward(const MlpModel& m, std::span<const double> u, MlpCache* cache) {
    if (u.size() != m.input_dim())
        throw std::invalid_argument("mlp_forward: input dimension mismatch");
    Vector a(u.begin(), u.end());
    if (cache) {
        cache->input = a;
        cache->pre_activations.clear();
        cache->activations.clear();
    }
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        Vector z = matvec(m.weights[l], a);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += m.biases[l][i];
        const bool last = (l + 1 == m.weights.size());
        Vector act = z;
        if (!last)
            for (double& v : act) v = v > 0.0 ? v : 0.0;
        if (cache) {
            cache->pre_activations.push_back(z);
            cache->activations.push_back(act);
        }
        a = std::move(act);
    }
    return a;
}

MlpGradients mlp_backward(const MlpModel& m, const MlpCache& cache,
                          std::span<const double> dL_dy) {
    const std::size_t L = m.weights.size();
    if (cache.activations.size() != L)
        throw std::invalid_argument("mlp_backward: incomplete cache");
    MlpGradients g;
    g.d_weights.resize(L);
    g.d_biases.resize(L);

    Vector delta(dL_dy.begin(), dL_dy.end());
    for (std::size_t l = L; l-- > 0;) {
        const Vector& in = l == 0 ? cache.input : cache.activations[l - 1];
        g.d_weights[l] = outer(delta, in);
        g.d_biases[l] = delta;
        if (l > 0) {
            Vector prev = matvec_transposed(m.weights[l], delta);
            for (std::size_t i = 0; i < prev.size(); ++i)
                if (cache.pre_activations[l - 1][i] <= 0.0) prev[i] = 0.0;
            delta = std::move(prev);
        }
    }
    return g;
}

ElmanRnn init_elman(std::size_t input_dim, std::size_t hidden_dim,
                    std::size_t output_dim, RngStream& rng) {
    const auto dist =
        DistributionSpec::normal(0.0, 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
    ElmanRnn m;
    m.w_xh = sample(dist, hidden_dim, input_dim, rng);
    m.w_hh = sample(dist, hidden_dim, hidden_dim, rng);
    m.w_hy = sample(dist, output_dim, hidden_dim, rng);
    m.b_h.assign(hidden_dim, 0.0);
    m.b_y.assign(output_dim, 0.0);
    return m;
}

ElmanCache elman_forward(const ElmanRnn& m, const std::vector<Vector>& seq) {
    ElmanCache cache;
    Vector h(m.hidden_dim(), 0.0);
    for (const Vector& s : seq) {
        if (s.size() != m.input_dim())
            throw std::invalid_argument("elman_forward: step input dimension mismatch");
        Vector z = matvec(m.w_xh, s);
        const Vector rec = matvec(m.w_hh, h);
        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] = std::tanh(z[i] + rec[i] + m.b_h[i]);
        h = z;
        Vector y = matvec(m.w_hy, h);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += m.b_y[i];
        cache.inputs.push_back(s);
        cache.hidden.push_back(h);
        cache.outputs.push_back(std::move(y));
    }
    return cache;
}

ElmanGradients elman_backward(const ElmanRnn& m, const ElmanCache& cache,
                              const std::vector<Vector>& dL_dy) {
    const std::size_t T = cache.hidden.size();
    if (dL_dy.size() != T)
        throw std::invalid_argument("elman_backward: gradient list length mismatch");
    ElmanGradients g{Matrix(m.w_xh.rows(), m.w_xh.cols()),
                     Matrix(m.w_hh.rows(), m.w_hh.cols()),
                     Matrix(m.w_hy.rows(), m.w_hy.cols()),
                     Vector(m.b_h.size(), 0.0), Vector(m.b_y.size(), 0.0)};

    Vector carried(m.hidden_dim(), 0.0);
    for (std::size_t t = T; t-- > 0;) {
        const Vector& h = cache.hidden[t];
        add_outer(g.d_w_hy, dL_dy[t], h);
        for (std::size_t i = 0; i < g.d_b_y.size(); ++i) g.d_b_y[i] += dL_dy[t][i];

        Vector dh = matvec_transposed(m.w_hy, dL_dy[t]);
        for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += carried[i];
        // through tanh
        for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= 1.0 - h[i] * h[i];

        const Vector h_prev = t == 0 ? Vector(m.hidden_dim(), 0.0) : cache.hidden[t - 1];
        add_outer(g.d_w_xh, dh, cache.inputs[t]);
        add_outer(g.d_w_hh, dh, h_prev);
        for (std::size_t i = 0; i < g.d_b_h.size(); ++i) g.d_b_h[i] += dh[i];

        carried = matvec_transposed(m.w_hh, dh);
    }
    return g;
}

}  // namespace idl
