#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pmvsk/data_io.hpp"

namespace pmvsk
{

/// Sum of the k largest |w_i|. Requires 1 <= k <= N.
double largest_k_norm(const Eigen::VectorXd& w, int k);

struct SubgradientResult
{
    Eigen::VectorXd s;          ///< entries in {-1, 0, +1}
    std::vector<Index> support; ///< the k selected indices, in selection order
};

/**
 * Subgradient of the largest-k norm at w: sort |w| in decreasing order and
 * take sign(w_i) on the first k positions. Ties at the boundary go to the
 * lower index. A zero entry that lands in the top k gets s_i = 0, which keeps
 * s'w equal to the norm and stays inside the subdifferential.
 */
SubgradientResult subgrad_largest_k(const Eigen::VectorXd& w, int k);

/// ||w||_1 - ||w||_[k]; zero exactly when w has at most k nonzeros.
double cardinality_gap(const Eigen::VectorXd& w, int k);

/// Number of entries with |w_i| > threshold.
Index hard_support_count(const Eigen::VectorXd& w, double threshold);

} // namespace pmvsk
