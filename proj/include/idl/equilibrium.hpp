#pragma once

#include <cstdint>

#include "idl/matrix.hpp"
#include "idl/rng.hpp"

namespace idl {

enum class Activation { relu };

/// Equilibrium model: the state x solves x = phi(Ax + Bu), the prediction is
/// y = Cx + Du. Well-posedness is maintained by keeping the infinity operator
/// norm of A strictly below 1 (see apply_constraints). With feedback disabled
/// A is kept strictly upper triangular.
struct ImplicitModel {
    Matrix A;  // n x n
    Matrix B;  // n x p
    Matrix C;  // q x n
    Matrix D;  // q x p
    Activation activation = Activation::relu;
    double epsilon = 3e-6;
    int max_iterations = 500;
    double norm_bound = 0.95;
    bool feedback = true;

    std::size_t state_dim() const { return A.rows(); }
    std::size_t input_dim() const { return B.cols(); }
    std::size_t output_dim() const { return C.rows(); }
    void check_invariants() const;
};

struct EquilibriumSolution {
    Vector x;               // hidden state at termination
    Vector pre_activation;  // z = Ax + Bu at termination
    int iterations = 0;
    bool converged = false;
    double final_step_inf_norm = 0.0;
};

struct GradientSet {
    Matrix dA, dB, dC, dD;
};

struct BackwardResult {
    GradientSet grads;
    Vector du;  // gradient with respect to the input u (B^T v + D^T dL_dy)
};

/// Entries of A, B, C, D drawn i.i.d. normal(0, 1/sqrt(n)), then constrained.
ImplicitModel init_implicit(std::size_t n, std::size_t p, std::size_t q,
                            RngStream& rng, bool feedback = true,
                            double norm_bound = 0.95);

/// Iterates x <- phi(Ax + Bu) from x0 until the infinity norm of the step
/// drops below model.epsilon or max_iterations is hit. Throws on NaN.
EquilibriumSolution solve_forward(const ImplicitModel& model,
                                  std::span<const double> u,
                                  std::span<const double> x0);
EquilibriumSolution solve_forward(const ImplicitModel& model,
                                  std::span<const double> u);

/// y = C x* + D u with x* from a zero start
Vector predict(const ImplicitModel& model, std::span<const double> u);
Vector predict_from(const ImplicitModel& model, std::span<const double> u,
                    const EquilibriumSolution& sol);

/// ReLU derivative at the converged pre-activation: 1 where z > 0 else 0
Vector activation_derivative_mask(std::span<const double> pre_activation);

/// Adjoint pass: solves z = A^T Phi z + g (g = C^T dL_dy) by fixed-point
/// iteration with the model's epsilon, then reads off all four parameter
/// gradients from v = Phi z. Requires sol.converged; throws if the adjoint
/// iteration fails to converge.
BackwardResult solve_backward(const ImplicitModel& model, std::span<const double> u,
                              const EquilibriumSolution& sol,
                              std::span<const double> dL_dy);

/// Masks A strictly upper triangular when feedback is off, then projects A
/// onto the infinity-norm ball of radius norm_bound. B, C, D untouched.
void apply_constraints(ImplicitModel& model);

/// Zeroes the diagonal and lower triangle (used on dA when feedback is off).
void mask_strictly_upper(Matrix& m);
bool is_strictly_upper(const Matrix& m);

}  // namespace idl
