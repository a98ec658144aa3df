/**
 * @file qp.hpp
 * @brief Dense convex QP solver for the portfolio subproblems.
 *
 * Solves
 *
 *     minimize    1/2 x'Px + q'x
 *     subject to  A_eq x  = b_eq
 *                 A_in x <= b_in
 *
 * with a primal-dual interior-point method (Mehrotra predictor-corrector).
 * Each iteration factors the reduced matrix P + A_in' diag(z/s) A_in with a
 * dense Cholesky and eliminates the equality rows through a small Schur
 * complement. When the Cholesky fails (P singular on the null space of the
 * inequalities) the full KKT system is factored with partial-pivot LU.
 *
 * Steps are accepted only if they decrease the merit
 *     ||r_dual||_inf + ||r_eq||_inf + ||r_in||_inf + z's/m_in,
 * falling back to the uncorrected centering direction when the corrected one
 * does not, so the merit history is monotone.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "pmvsk/data_io.hpp"

namespace pmvsk
{

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct QpProblem
{
    Eigen::MatrixXd P; ///< symmetric PSD, n x n
    Eigen::VectorXd q;
    SparseRows A_eq; ///< m_e x n
    Eigen::VectorXd b_eq;
    SparseRows A_in; ///< m_i x n, rows read A_in x <= b_in
    Eigen::VectorXd b_in;

    Index variables() const { return q.size(); }
};

/// Dimension checks; with check_psd also verifies P's spectrum (debug use).
void validate(const QpProblem& problem, bool check_psd = false);

enum class QpStatus
{
    optimal,
    max_iter,
    infeasible
};

const char* to_string(QpStatus status);

struct KktResiduals
{
    double primal = 0.0;          ///< max(||A_eq x - b_eq||_inf, max_i (A_in x - b_in)_i^+)
    double dual = 0.0;            ///< ||Px + q + A_eq'y + A_in'z||_inf
    double complementarity = 0.0; ///< |z'(A_in x - b_in)|
};

struct QpSolution
{
    Eigen::VectorXd x;
    Eigen::VectorXd y; ///< equality multipliers
    Eigen::VectorXd z; ///< inequality multipliers, >= 0
    double obj = 0.0;
    KktResiduals kkt;
    int iterations = 0;
    QpStatus status = QpStatus::max_iter;
    std::vector<double> merit; ///< merit at every accepted iterate, starting point first
};

struct QpSettings
{
    double tol = 1e-10;
    int max_iter = 20000;
};

/// Reusable, single-threaded solver; keeps its factorization workspace between calls.
class QpSolver
{
public:
    explicit QpSolver(QpSettings settings = {});

    /// x0, when given, seeds the primal iterate (warm start).
    QpSolution solve(const QpProblem& problem, const Eigen::VectorXd* x0 = nullptr);

    const QpSettings& settings() const { return settings_; }

private:
    QpSettings settings_;
    Eigen::MatrixXd normal_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

QpSolution solve_qp(const QpProblem& problem, double tol = 1e-10, int max_iter = 20000);

/// Residuals recomputed from (x, y, z) alone; independent of the solver loop.
KktResiduals kkt_residuals(const QpProblem& problem, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& z);

double qp_objective(const QpProblem& problem, const Eigen::VectorXd& x);

/**
 * The subproblem shape shared by all outer algorithms:
 *
 *     minimize    1/2 w'Qw + c'w + l1_weight * 1'u
 *     subject to  1'w = 1,  -alpha <= w <= alpha,  -u <= w <= u
 *
 * The u block (and its two constraint rows per asset) is only present when
 * l1_weight > 0; variables are ordered [w; u].
 */
QpProblem capped_simplex_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, double alpha, double l1_weight = 0.0);

/// Starting point for capped_simplex_qp: w followed (if lifted) by u = |w| + margin.
Eigen::VectorXd capped_simplex_start(const Eigen::VectorXd& w, bool lifted);

/**
 * Euclidean projection of target onto {1'w = 1, -alpha <= w <= alpha}, solved
 * as a QP. When N*alpha == 1 the set is the single point alpha*1 and that
 * point is returned directly. Throws if the set is empty or the QP fails.
 */
Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& target, double alpha);

/// Uniform draw in the box followed by project_capped_simplex.
Eigen::VectorXd build_feasible_init(Index n, double alpha, std::uint64_t seed);

/// Plain-text dump of a problem (dimensions, then P, q, A_eq, b_eq, A_in, b_in row by row).
void dump_qp_problem(const QpProblem& problem, std::ostream& out);

} // namespace pmvsk
