#include "idl/sequence.hpp"

#include <cmath>
#include <stdexcept>

namespace idl {

void ImplicitRnn::check_invariants() const {
    core.check_invariants();
    if (core.input_dim() != input_dim + hidden_dim)
        throw std::invalid_argument("ImplicitRnn: core p != input_dim + hidden_dim");
    if (core.output_dim() != hidden_dim)
        throw std::invalid_argument("ImplicitRnn: core q != hidden_dim");
    if (has_readout && readout_w.cols() != hidden_dim)
        throw std::invalid_argument("ImplicitRnn: readout shape mismatch");
}

ImplicitRnn init_implicit_rnn(std::size_t input_dim, std::size_t state_dim,
                              std::size_t hidden_dim, std::size_t readout_dim,
                              RngStream& rng, bool feedback, double norm_bound) {
    ImplicitRnn m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.core = init_implicit(state_dim, input_dim + hidden_dim, hidden_dim, rng,
                           feedback, norm_bound);
    if (readout_dim > 0) {
        m.has_readout = true;
        const auto dist =
            DistributionSpec::normal(0.0, 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
        m.readout_w = sample(dist, readout_dim, hidden_dim, rng);
        m.readout_b.assign(readout_dim, 0.0);
    }
    return m;
}

SequenceTrace rnn_forward(const ImplicitRnn& model, const std::vector<Vector>& seq) {
    SequenceTrace trace;
    trace.steps.reserve(seq.size());
    Vector h(model.hidden_dim, 0.0);  // h_0 = 0
    for (const Vector& s : seq) {
        if (s.size() != model.input_dim)
            throw std::invalid_argument("rnn_forward: step input dimension mismatch");
        SequenceStep step;
        step.u.reserve(model.input_dim + model.hidden_dim);
        step.u.insert(step.u.end(), s.begin(), s.end());
        step.u.insert(step.u.end(), h.begin(), h.end());
        step.sol = solve_forward(model.core, step.u);
        if (!step.sol.converged)
            throw std::runtime_error("rnn_forward: equilibrium solve did not converge");
        step.h = predict_from(model.core, step.u, step.sol);
        if (model.has_readout) {
            step.output = matvec(model.readout_w, step.h);
            for (std::size_t i = 0; i < step.output.size(); ++i)
                step.output[i] += model.readout_b[i];
        } else {
            step.output = step.h;
        }
        h = step.h;
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

RnnGradientSet rnn_backward(const ImplicitRnn& model, const SequenceTrace& trace,
                            const std::vector<Vector>& dL_dout) {
    if (dL_dout.size() != trace.length())
        throw std::invalid_argument("rnn_backward: gradient list length mismatch");
    const std::size_t n = model.core.state_dim();
    const std::size_t p = model.core.input_dim();
    const std::size_t q = model.core.output_dim();

    RnnGradientSet out;
    out.core.dA = Matrix(n, n);
    out.core.dB = Matrix(n, p);
    out.core.dC = Matrix(q, n);
    out.core.dD = Matrix(q, p);
    if (model.has_readout) {
        out.d_readout_w = Matrix(model.readout_w.rows(), model.readout_w.cols());
        out.d_readout_b.assign(model.readout_b.size(), 0.0);
    }

    Vector carried(model.hidden_dim, 0.0);  // dL/dh_i arriving from step i+1
    for (std::size_t i = trace.length(); i-- > 0;) {
        const SequenceStep& step = trace.steps[i];
        Vector dh = carried;
        if (model.has_readout) {
            const Vector& dout = dL_dout[i];
            if (dout.size() != model.readout_w.rows())
                throw std::invalid_argument("rnn_backward: output gradient dimension mismatch");
            add_outer(out.d_readout_w, dout, step.h);
            for (std::size_t k = 0; k < dout.size(); ++k) out.d_readout_b[k] += dout[k];
            const Vector back = matvec_transposed(model.readout_w, dout);
            for (std::size_t k = 0; k < dh.size(); ++k) dh[k] += back[k];
        } else {
            for (std::size_t k = 0; k < dh.size(); ++k) dh[k] += dL_dout[i][k];
        }

        const BackwardResult res = solve_backward(model.core, step.u, step.sol, dh);
        out.core.dA = add(out.core.dA, res.grads.dA);
        out.core.dB = add(out.core.dB, res.grads.dB);
        out.core.dC = add(out.core.dC, res.grads.dC);
        out.core.dD = add(out.core.dD, res.grads.dD);

        // hidden coordinates of the step input carry the gradient backwards
        carried.assign(res.du.begin() + static_cast<std::ptrdiff_t>(model.input_dim),
                       res.du.end());
    }
    return out;
}

void apply_constraints(ImplicitRnn& model) { apply_constraints(model.core); }

}  // namespace idl
