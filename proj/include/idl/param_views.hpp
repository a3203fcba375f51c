#pragma once

#include "idl/harness.hpp"
#include "idl/model.hpp"

namespace idl {

/// Flat views over a model's trainable tensors, in a fixed per-kind order.
struct ParamViews {
    std::vector<Matrix*> mats;
    std::vector<Vector*> vecs;
};

ParamViews params_of(AnyModel& model);

struct GradBuffer {
    std::vector<Matrix> mats;
    std::vector<Vector> vecs;

    void init_like(const ParamViews& p);
    void add(const GradBuffer& other);
    void scale(double s);
};

struct Optimizer {
    OptimizerKind kind = OptimizerKind::adam;
    GradBuffer m1, m2;  // momentum / first moment, second moment
    long t = 0;

    void init(const ParamViews& params);
    void step(ParamViews& params, const GradBuffer& grads, const TrainConfig& cfg);
};

}  // namespace idl
