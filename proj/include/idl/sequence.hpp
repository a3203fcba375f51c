#pragma once

#include "idl/equilibrium.hpp"

namespace idl {

/// Recurrent variant: the recurrent cell is an equilibrium layer. At step i
/// the cell input is u_i = (s_i; h_{i-1}) and the new hidden state is the
/// cell prediction h_i = C x* + D u_i. An optional affine readout maps h_i
/// to the task output.
struct ImplicitRnn {
    ImplicitModel core;  // p = input_dim + hidden_dim, q = hidden_dim
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    bool has_readout = false;
    Matrix readout_w;  // output_dim x hidden_dim
    Vector readout_b;  // output_dim

    std::size_t output_dim() const {
        return has_readout ? readout_w.rows() : hidden_dim;
    }
    void check_invariants() const;
};

struct SequenceStep {
    Vector u;  // (s_i; h_{i-1})
    EquilibriumSolution sol;
    Vector h;       // cell output h_i
    Vector output;  // readout output (== h when no readout)
};

struct SequenceTrace {
    std::vector<SequenceStep> steps;
    std::size_t length() const { return steps.size(); }
};

struct RnnGradientSet {
    GradientSet core;
    Matrix d_readout_w;
    Vector d_readout_b;
};

ImplicitRnn init_implicit_rnn(std::size_t input_dim, std::size_t state_dim,
                              std::size_t hidden_dim,
                              std::size_t readout_dim,  // 0 = no readout
                              RngStream& rng, bool feedback = true,
                              double norm_bound = 0.95);

/// Runs the cell over s_1..s_T from h_0 = 0, caching everything the backward
/// pass needs. Throws if any step fails to converge.
SequenceTrace rnn_forward(const ImplicitRnn& model,
                          const std::vector<Vector>& seq);

/// Backpropagation through time. dL_dout[i] is the loss gradient at step i's
/// output (readout output when present, h_i otherwise); parameter gradients
/// are summed over steps and the hidden-state gradient is threaded backwards
/// through the input coordinates of each step.
RnnGradientSet rnn_backward(const ImplicitRnn& model, const SequenceTrace& trace,
                            const std::vector<Vector>& dL_dout);

void apply_constraints(ImplicitRnn& model);

}  // namespace idl
