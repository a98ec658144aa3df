#include "pmvsk/sparsity.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace pmvsk
{

namespace
{

void require_k(const Eigen::VectorXd& w, int k)
{
    if (k < 1 || k > w.size())
        throw std::invalid_argument("k = " + std::to_string(k) + " outside [1, " + std::to_string(w.size()) + "]");
}

// Indices ordered by decreasing |w_i|, ties by increasing index.
std::vector<Index> magnitude_order(const Eigen::VectorXd& w)
{
    std::vector<Index> order(static_cast<std::size_t>(w.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(w[a]) > std::abs(w[b]); });
    return order;
}

} // namespace

double largest_k_norm(const Eigen::VectorXd& w, int k)
{
    require_k(w, k);
    const auto order = magnitude_order(w);
    double sum = 0.0;
    for (int i = 0; i < k; ++i)
        sum += std::abs(w[order[static_cast<std::size_t>(i)]]);
    return sum;
}

SubgradientResult subgrad_largest_k(const Eigen::VectorXd& w, int k)
{
    require_k(w, k);
    const auto order = magnitude_order(w);
    SubgradientResult result;
    result.s = Eigen::VectorXd::Zero(w.size());
    result.support.assign(order.begin(), order.begin() + k);
    for (Index i : result.support)
    {
        if (w[i] > 0.0)
            result.s[i] = 1.0;
        else if (w[i] < 0.0)
            result.s[i] = -1.0;
    }
    return result;
}

double cardinality_gap(const Eigen::VectorXd& w, int k)
{
    require_k(w, k);
    const auto order = magnitude_order(w);
    // summing the tail directly keeps the gap exactly zero for k-sparse w
    double tail = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k); i < order.size(); ++i)
        tail += std::abs(w[order[i]]);
    return tail;
}

Index hard_support_count(const Eigen::VectorXd& w, double threshold)
{
    if (threshold < 0.0)
        throw std::invalid_argument("support threshold must be non-negative");
    return (w.array().abs() > threshold).count();
}

} // namespace pmvsk
