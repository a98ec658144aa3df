/**
 * @file solvers.hpp
 * @brief Outer algorithms for the cardinality-penalized MVSK problem.
 *
 *   minimize  f(w) + rho * (||w||_1 - ||w||_[k])
 *   s.t.      1'w = 1,  -alpha <= w <= alpha
 *
 * pdca   linearizes (tau_dc/2)||w||^2 - f_ncvx and ||w||_[k] at w^j.
 * pdcae  linearizes the smooth concave part at the extrapolated point
 *        y^j = w^j + beta_j (w^j - w^{j-1}) (FISTA coefficients, no restart);
 *        the largest-k subgradient is still taken at w^j.
 * sca    replaces f_ncvx by a strongly convex quadratic model built from the
 *        PSD-projected Hessian plus tau_w I, then backtracks along the
 *        subproblem direction (Armijo-type test on the linearized penalty).
 *
 * Every subproblem is a capped_simplex_qp with the l1 term lifted through
 * auxiliary variables u >= |w|.
 */

#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pmvsk/data_io.hpp"
#include "pmvsk/moments.hpp"
#include "pmvsk/objective.hpp"
#include "pmvsk/qp.hpp"

namespace pmvsk
{

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kSupportThreshold = 1e-6;

/// Record 0 describes w^0; record j >= 1 describes w^j and the step that produced it.
struct IterationRecord
{
    int iter = 0;
    double fp = 0.0;
    double f = 0.0;
    double step_norm = 0.0;                         ///< ||w^j - w^{j-1}||_2
    double stationarity_gap = kNotApplicable;       ///< SCA only
    double gamma = kNotApplicable;                  ///< SCA only
    double beta = kNotApplicable;                   ///< pDCAe only, beta_{j-1}
    double elapsed = 0.0;                           ///< seconds since the solve started
};

enum class Termination
{
    tolerance_met,
    max_iter
};

std::string_view to_string(Termination termination);

struct SolveReport
{
    Algorithm algorithm = Algorithm::sca;
    Eigen::VectorXd w_star;
    std::vector<IterationRecord> trace;
    Termination termination = Termination::max_iter;
    int iterations = 0;
    Index support_count = 0; ///< hard_support_count(w_star, kSupportThreshold)
    double f_final = 0.0;
    double fp_final = 0.0;
    bool heuristic = false; ///< set for the relax-and-project baseline
};

/// A subproblem or line search failed; partial() holds the trace up to the failure.
class SolverError : public std::runtime_error
{
public:
    SolverError(const std::string& what, SolveReport partial);
    const SolveReport& partial() const noexcept { return partial_; }

private:
    SolveReport partial_;
};

/// Called with (j, w^j) for the start point and every accepted iterate.
using IterateObserver = std::function<void(int, const Eigen::VectorXd&)>;

SolveReport pdca(const MomentModel& model, const ModelParams& params, const SolverConfig& config,
                 const Eigen::VectorXd& w0, const IterateObserver& observer = {});

SolveReport pdcae(const MomentModel& model, const ModelParams& params, const SolverConfig& config,
                  const Eigen::VectorXd& w0, const IterateObserver& observer = {});

SolveReport sca(const MomentModel& model, const ModelParams& params, const SolverConfig& config,
                const Eigen::VectorXd& w0, const IterateObserver& observer = {});

/// Frobenius-nearest PSD matrix: eigenvalues clipped at zero. Symmetrizes
/// inputs whose asymmetry is at most 1e-10 relative, rejects the rest.
Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& h);

/// Quadratic model of f_ncvx around an anchor point.
struct ScaSurrogate
{
    Eigen::VectorXd anchor;
    double anchor_value = 0.0;  ///< f_ncvx(anchor)
    Eigen::VectorXd gradient;   ///< grad f_ncvx(anchor)
    Eigen::MatrixXd curvature;  ///< nearest_psd(hess_ncvx(anchor)) + tau_w I

    double value(const Eigen::VectorXd& w) const;
    Eigen::VectorXd grad(const Eigen::VectorXd& w) const;
};

ScaSurrogate sca_surrogate(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w_j);

struct LineSearchResult
{
    double gamma = 1.0;
    int m = 0;
};

/**
 * Smallest m >= 0 such that, with d = w_hat - w_j and gamma = beta^m,
 *
 *   f(w_j + gamma d) - gamma rho d's + gamma rho (||w_hat||_1 - ||w_j||_1)
 *     <= f(w_j) + c gamma [d'(grad f(w_j) - rho s) + rho (||w_hat||_1 - ||w_j||_1)].
 *
 * Throws std::runtime_error once m exceeds max_backtracks.
 */
LineSearchResult sca_line_search(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w_j,
                                 const Eigen::VectorXd& w_hat, const Eigen::VectorXd& s_j, double c, double beta,
                                 int max_backtracks = 60);

/// Absolute SCA gap of one subproblem solved at w (with params.tau_w).
double stationarity_residual(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w);

/// Columns: iter,fp,f,step_norm,stationarity_gap,gamma,beta,elapsed; empty cell = not applicable.
void write_trace_csv(const std::vector<IterationRecord>& trace, std::ostream& out);
std::vector<IterationRecord> read_trace_csv(std::istream& in);

} // namespace pmvsk
