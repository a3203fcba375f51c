#pragma once

#include "idl/matrix.hpp"
#include "idl/rng.hpp"

namespace idl {

/// Feed-forward network, ReLU hidden activations, linear output.
struct MlpModel {
    std::vector<Matrix> weights;  // layer l: out_l x in_l
    std::vector<Vector> biases;

    std::size_t input_dim() const { return weights.front().cols(); }
    std::size_t output_dim() const { return weights.back().rows(); }
};

struct MlpCache {
    Vector input;
    std::vector<Vector> pre_activations;  // per layer
    std::vector<Vector> activations;      // per layer (post-ReLU, last is linear)
};

struct MlpGradients {
    std::vector<Matrix> d_weights;
    std::vector<Vector> d_biases;
};

MlpModel init_mlp(const std::vector<std::size_t>& layer_sizes, RngStream& rng);
Vector mlp_forward(const MlpModel& m, std::span<const double> u, MlpCache* cache = nullptr);
MlpGradients mlp_backward(const MlpModel& m, const MlpCache& cache,
                          std::span<const double> dL_dy);

/// Elman recurrent network: h_i = tanh(Wxh s_i + Whh h_{i-1} + bh),
/// y_i = Why h_i + by. Stand-in explicit recurrent baseline.
struct ElmanRnn {
    Matrix w_xh, w_hh, w_hy;
    Vector b_h, b_y;

    std::size_t input_dim() const { return w_xh.cols(); }
    std::size_t hidden_dim() const { return w_hh.rows(); }
    std::size_t output_dim() const { return w_hy.rows(); }
};

struct ElmanCache {
    std::vector<Vector> inputs;
    std::vector<Vector> hidden;   // h_1..h_T
    std::vector<Vector> outputs;  // y_1..y_T
};

struct ElmanGradients {
    Matrix d_w_xh, d_w_hh, d_w_hy;
    Vector d_b_h, d_b_y;
};

ElmanRnn init_elman(std::size_t input_dim, std::size_t hidden_dim,
                    std::size_t output_dim, RngStream& rng);
ElmanCache elman_forward(const ElmanRnn& m, const std::vector<Vector>& seq);
ElmanGradients elman_backward(const ElmanRnn& m, const ElmanCache& cache,
                              const std::vector<Vector>& dL_dy);

}  // namespace idl
