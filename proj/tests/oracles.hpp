// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's numerical kernels.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle
{

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// T x N panel: Gaussian noise plus a sparse negative jump, so third and fourth moments are non-trivial.
inline MatrixXd random_returns(int t, int n, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MatrixXd r(t, n);
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < n; ++j)
            r(i, j) = scale * (0.1 * g(rng) + (u(rng) < 0.2 ? -0.3 + 0.2 * g(rng) : 0.05));
    return r;
}

inline VectorXd uniform_vector(int n, double lo, double hi, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(lo, hi);
    VectorXd v(n);
    for (int i = 0; i < n; ++i)
        v[i] = u(rng);
    return v;
}

/// (1/T) sum_t (w'(r_t - rbar))^q, evaluated in long double.
inline double scalar_central_moment(const MatrixXd& returns, const VectorXd& w, int q)
{
    const auto t = returns.rows();
    std::vector<long double> port(static_cast<std::size_t>(t));
    long double mean = 0;
    for (Eigen::Index i = 0; i < t; ++i)
    {
        long double s = 0;
        for (Eigen::Index j = 0; j < returns.cols(); ++j)
            s += static_cast<long double>(w[j]) * returns(i, j);
        port[static_cast<std::size_t>(i)] = s;
        mean += s;
    }
    mean /= t;
    long double acc = 0;
    for (auto p : port)
        acc += std::pow(p - mean, q);
    return static_cast<double>(acc / t);
}

inline double scalar_mean(const MatrixXd& returns, const VectorXd& w)
{
    return (returns * w).mean();
}

/// -l1 m1 + l2 m2 - l3 m3 + l4 m4 from the raw panel.
inline double scalar_objective(const MatrixXd& returns, const VectorXd& w, const double (&l)[4])
{
    return -l[0] * scalar_mean(returns, w) + l[1] * scalar_central_moment(returns, w, 2) -
           l[2] * scalar_central_moment(returns, w, 3) + l[3] * scalar_central_moment(returns, w, 4);
}

inline VectorXd central_difference(const std::function<double(const VectorXd&)>& fn, const VectorXd& w, double h)
{
    VectorXd g(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
    {
        VectorXd a = w, b = w;
        a[i] += h;
        b[i] -= h;
        g[i] = (fn(a) - fn(b)) / (2 * h);
    }
    return g;
}

inline MatrixXd central_difference_jacobian(const std::function<VectorXd(const VectorXd&)>& fn, const VectorXd& w,
                                            double h)
{
    MatrixXd jac(w.size(), w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
    {
        VectorXd a = w, b = w;
        a[i] += h;
        b[i] -= h;
        jac.col(i) = (fn(a) - fn(b)) / (2 * h);
    }
    return jac;
}

/// Calls fn on every k-subset of {0..n-1} in lexicographic order.
inline void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& fn)
{
    if (k > n || k < 0)
        return;
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        idx[static_cast<std::size_t>(i)] = i;
    while (true)
    {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i)
            --i;
        if (i < 0)
            return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

/// max over k-subsets of the subset's l1 mass.
inline double largest_k_by_subsets(const VectorXd& w, int k)
{
    double best = 0.0;
    for_each_subset(static_cast<int>(w.size()), k, [&](const std::vector<int>& idx) {
        double s = 0;
        for (int i : idx)
            s += std::abs(w[i]);
        best = std::max(best, s);
    });
    return best;
}

inline double largest_k_by_sort(const VectorXd& w, int k)
{
    std::vector<double> a(static_cast<std::size_t>(w.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i)
        a[static_cast<std::size_t>(i)] = std::abs(w[i]);
    std::sort(a.begin(), a.end(), std::greater<>());
    double s = 0;
    for (int i = 0; i < k; ++i)
        s += a[static_cast<std::size_t>(i)];
    return s;
}

/// Dense problem min 1/2 x'Px + q'x s.t. Ae x = be, Ai x <= bi.
struct DenseQp
{
    MatrixXd P;
    VectorXd q;
    MatrixXd Ae;
    VectorXd be;
    MatrixXd Ai;
    VectorXd bi;

    double objective(const VectorXd& x) const { return 0.5 * x.dot(P * x) + q.dot(x); }
};

struct EnumerationResult
{
    bool found = false;
    double obj = std::numeric_limits<double>::infinity();
    VectorXd x;
};

/**
 * Exhaustive active-set search: for every subset of inequality rows treated as
 * equalities, solve the equality-constrained KKT system, keep consistent and
 * primal-feasible solutions with non-negative multipliers on the active rows,
 * return the best objective. Rows listed in exclusive_pairs are never active together.
 */
inline EnumerationResult enumerate_active_sets(const DenseQp& qp,
                                               const std::vector<std::pair<int, int>>& exclusive_pairs = {},
                                               double feas_tol = 1e-9)
{
    const auto n = qp.P.rows();
    const auto me = qp.Ae.rows();
    const auto mi = qp.Ai.rows();
    EnumerationResult best;
    const std::uint64_t subsets = std::uint64_t{1} << mi;
    for (std::uint64_t mask = 0; mask < subsets; ++mask)
    {
        bool skip = false;
        for (auto [a, b] : exclusive_pairs)
            if ((mask >> a & 1) && (mask >> b & 1))
                skip = true;
        if (skip)
            continue;
        std::vector<Eigen::Index> active;
        for (Eigen::Index r = 0; r < mi; ++r)
            if (mask >> r & 1)
                active.push_back(r);
        const auto ma = static_cast<Eigen::Index>(active.size());
        if (me + ma > n)
            continue;
        const auto m = me + ma;
        MatrixXd kkt = MatrixXd::Zero(n + m, n + m);
        VectorXd rhs(n + m);
        kkt.topLeftCorner(n, n) = qp.P;
        rhs.head(n) = -qp.q;
        for (Eigen::Index r = 0; r < me; ++r)
        {
            kkt.block(n + r, 0, 1, n) = qp.Ae.row(r);
            kkt.block(0, n + r, n, 1) = qp.Ae.row(r).transpose();
            rhs[n + r] = qp.be[r];
        }
        for (Eigen::Index a = 0; a < ma; ++a)
        {
            kkt.block(n + me + a, 0, 1, n) = qp.Ai.row(active[static_cast<std::size_t>(a)]);
            kkt.block(0, n + me + a, n, 1) = qp.Ai.row(active[static_cast<std::size_t>(a)]).transpose();
            rhs[n + me + a] = qp.bi[active[static_cast<std::size_t>(a)]];
        }
        const VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        if ((kkt * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))
            continue;
        const VectorXd x = sol.head(n);
        if (mi > 0 && (qp.Ai * x - qp.bi).maxCoeff() > feas_tol)
            continue;
        bool dual_ok = true;
        for (Eigen::Index a = 0; a < ma; ++a)
            if (sol[n + me + a] < -1e-9)
                dual_ok = false;
        if (!dual_ok)
            continue;
        const double obj = qp.objective(x);
        if (obj < best.obj)
        {
            best.found = true;
            best.obj = obj;
            best.x = x;
        }
    }
    return best;
}

/// Residuals of a claimed primal-dual solution, recomputed with dense algebra.
struct Residuals
{
    double primal = 0;
    double dual = 0;
    double complementarity = 0;
    double min_multiplier = 0;
};

inline Residuals recheck_kkt(const DenseQp& qp, const VectorXd& x, const VectorXd& y, const VectorXd& z)
{
    Residuals r;
    if (qp.Ae.rows() > 0)
        r.primal = (qp.Ae * x - qp.be).lpNorm<Eigen::Infinity>();
    if (qp.Ai.rows() > 0)
    {
        const VectorXd slack = qp.Ai * x - qp.bi;
        r.primal = std::max(r.primal, std::max(0.0, slack.maxCoeff()));
        r.complementarity = std::abs(z.dot(slack));
        r.min_multiplier = z.minCoeff();
    }
    VectorXd grad = qp.P * x + qp.q;
    if (qp.Ae.rows() > 0)
        grad += qp.Ae.transpose() * y;
    if (qp.Ai.rows() > 0)
        grad += qp.Ai.transpose() * z;
    r.dual = grad.lpNorm<Eigen::Infinity>();
    return r;
}

/// Largest |eigenvalue| of a symmetric matrix.
inline double spectral_radius(const MatrixXd& h)
{
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace oracle
