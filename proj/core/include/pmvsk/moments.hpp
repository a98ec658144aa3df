/**
 * @file moments.hpp
 * @brief Sample co-moment tensors and portfolio moments.
 *
 * Flattening convention (0-based): the co-skewness matrix phi is N x N^2 with
 * column j*N + l holding E[r r_j r_l]; the co-kurtosis matrix psi is N x N^3
 * with column (j*N + l)*N + m holding E[r r_j r_l r_m]. This is the column
 * order of the Kronecker products w (x) w and w (x) w (x) w, so
 * phi * kron(w, w) is the third-moment gradient direction. Every module uses
 * col_index() for this mapping.
 */

#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>

#include <Eigen/Dense>

#include "pmvsk/data_io.hpp"

namespace pmvsk
{

/// Immutable after construction; safe to share between threads.
struct MomentModel
{
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    Eigen::MatrixXd phi; ///< N x N^2 co-skewness
    Eigen::MatrixXd psi; ///< N x N^3 co-kurtosis

    Index assets() const { return mu.size(); }
};

/// 0-based flat column of the pair (j, l): j*N + l.
Index col_index(Index n, Index j, Index l);
/// 0-based flat column of the triple (j, l, m): j*N^2 + l*N + m.
Index col_index(Index n, Index j, Index l, Index m);

/**
 * Plain sample moments with divisor T (not T-1):
 * mu = column means, and with centered rows r_t,
 * sigma = 1/T sum r_t r_t', phi = 1/T sum r_t (r_t (x) r_t)',
 * psi = 1/T sum r_t (r_t (x) r_t (x) r_t)'.
 *
 * Sums over t run in increasing t inside each matrix product; the result is
 * deterministic for a given panel.
 */
MomentModel estimate_moments(const ReturnPanel& panel);
MomentModel estimate_moments(const Eigen::MatrixXd& returns);

/// Throws std::invalid_argument when the tensor shapes disagree with mu.
void check_dimensions(const MomentModel& model);

struct PortfolioMoments
{
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0; ///< third central moment, not standardized
    double kurtosis = 0.0; ///< fourth central moment, not standardized
};

PortfolioMoments portfolio_moments(const MomentModel& model, const Eigen::VectorXd& w);

// Tensor contractions. Entries of w that are exactly zero are skipped, which
// turns the O(N^4) kurtosis products into O(N k^3) once w is k-sparse.

/// phi (w (x) w)
Eigen::VectorXd coskewness_product(const MomentModel& model, const Eigen::VectorXd& w);
/// psi (w (x) w (x) w)
Eigen::VectorXd cokurtosis_product(const MomentModel& model, const Eigen::VectorXd& w);
/// phi (I (x) w), N x N
Eigen::MatrixXd coskewness_matrix(const MomentModel& model, const Eigen::VectorXd& w);
/// psi (I (x) w (x) w), N x N
Eigen::MatrixXd cokurtosis_matrix(const MomentModel& model, const Eigen::VectorXd& w);

/**
 * Binary moment dump, little-endian:
 *   8 bytes  magic "PMVSKMOM"
 *   uint32   format version (1)
 *   uint64   N
 *   double   mu[N], then sigma, phi, psi, each row-major.
 */
void save_moment_model(const MomentModel& model, const std::filesystem::path& path);
MomentModel load_moment_model(const std::filesystem::path& path);

} // namespace pmvsk
