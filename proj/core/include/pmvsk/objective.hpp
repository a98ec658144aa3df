/**
 * @file objective.hpp
 * @brief MVSK objective, its convex / non-convex split, derivatives and the DC shift.
 *
 *   f(w)      = f_cvx(w) + f_ncvx(w)
 *   f_cvx(w)  = -l1 * w'mu + l2 * w'Sigma w
 *   f_ncvx(w) = -l3 * w'Phi(w(x)w) + l4 * w'Psi(w(x)w(x)w)
 *   f_p(w)    = f(w) + rho * (||w||_1 - ||w||_[k])
 *
 * tau_dc bounds the spectral radius of the f_ncvx Hessian on the box
 * [-alpha, alpha]^N, so (tau_dc/2)||w||^2 - f_ncvx(w) is convex there.
 */

#pragma once

#include <Eigen/Dense>

#include "pmvsk/data_io.hpp"
#include "pmvsk/moments.hpp"

namespace pmvsk
{

/// Scalar knobs of the penalized problem. Weights may be zero here (used by
/// reduced test problems); resolve_lambdas() enforces positivity for user input.
struct ModelParams
{
    MomentWeights lambdas;
    double alpha = 0.2;
    int k = 1;
    double rho = 0.0;
    double tau_dc = 0.0;
    double tau_w = 1e-10;
};

void validate(const ModelParams& params, Index n_assets);

/// Resolves the weights from config and computes tau_dc from the model.
ModelParams make_params(const SolverConfig& config, const MomentModel& model);

struct ObjectiveValue
{
    double convex = 0.0;
    double nonconvex = 0.0;
    /// convex + nonconvex, summed in that order
    double total() const { return convex + nonconvex; }
};

ObjectiveValue eval_f_split(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w);
double eval_f(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w);

struct ObjectiveGradient
{
    Eigen::VectorXd convex;
    Eigen::VectorXd nonconvex;
    Eigen::VectorXd total() const { return convex + nonconvex; }
};

ObjectiveGradient grad_f_split(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w);
Eigen::VectorXd grad_f(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w);

/// Value and gradient from one pass over the tensors; the solvers' hot path.
struct Evaluation
{
    ObjectiveValue value;
    ObjectiveGradient gradient;
};

Evaluation evaluate(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w);

/**
 * -6 l3 Phi(I(x)w) + 12 l4 Psi(I(x)w(x)w), symmetrized. Throws std::logic_error
 * if the assembled matrix is asymmetric beyond 1e-10 relative, which would
 * indicate tensors that do not follow the flattening convention.
 */
Eigen::MatrixXd hess_ncvx(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w);

/// 6 alpha l3 max_i sum_j |Phi_ij| + 12 alpha^2 l4 max_i sum_j |Psi_ij|
double tau_dc_bound(const MomentModel& model, const ModelParams& params);

double eval_fp(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w);

} // namespace pmvsk
