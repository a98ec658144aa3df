// Random problem generators shared by the unit and acceptance tests.

#pragma once

#include <random>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "pmvsk/qp.hpp"

namespace instances
{

struct RandomQp
{
    oracle::DenseQp dense;
    pmvsk::QpProblem problem;
    std::vector<std::pair<int, int>> exclusive_rows;
};

inline pmvsk::SparseRows to_sparse(const Eigen::MatrixXd& m)
{
    pmvsk::SparseRows s = m.sparseView();
    s.makeCompressed();
    return s;
}

inline pmvsk::QpProblem to_problem(const oracle::DenseQp& d)
{
    pmvsk::QpProblem pb;
    pb.P = d.P;
    pb.q = d.q;
    pb.A_eq = to_sparse(d.Ae);
    pb.b_eq = d.be;
    pb.A_in = to_sparse(d.Ai);
    pb.b_in = d.bi;
    return pb;
}

inline oracle::DenseQp to_dense(const pmvsk::QpProblem& pb)
{
    oracle::DenseQp d;
    d.P = pb.P;
    d.q = pb.q;
    d.Ae = Eigen::MatrixXd(pb.A_eq);
    d.be = pb.b_eq;
    d.Ai = Eigen::MatrixXd(pb.A_in);
    d.bi = pb.b_in;
    return d;
}

/**
 * min 1/2 x'Px + q'x over {1'x = 1, -a <= x <= a} plus up to two extra random
 * half-spaces that keep the uniform point feasible. P = BB' with rank n or n-1.
 */
inline RandomQp random_box_simplex_qp(int n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> extra_rows(0, 2);

    const int rank = n > 1 && u(rng) < 0.3 ? n - 1 : n;
    Eigen::MatrixXd b(n, rank);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < rank; ++j)
            b(i, j) = g(rng);

    oracle::DenseQp d;
    d.P = b * b.transpose();
    d.P = 0.5 * (d.P + d.P.transpose()).eval();
    d.q = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i)
        d.q[i] = 2.0 * g(rng);
    d.Ae = Eigen::MatrixXd::Ones(1, n);
    d.be = Eigen::VectorXd::Ones(1);

    const double a = 1.0 / n + 0.05 + 1.2 * u(rng);
    const int extra = extra_rows(rng);
    d.Ai = Eigen::MatrixXd::Zero(2 * n + extra, n);
    d.bi = Eigen::VectorXd::Constant(2 * n + extra, a);
    RandomQp out;
    for (int i = 0; i < n; ++i)
    {
        d.Ai(i, i) = 1.0;
        d.Ai(n + i, i) = -1.0;
        out.exclusive_rows.emplace_back(i, n + i);
    }
    const Eigen::VectorXd centre = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (int r = 0; r < extra; ++r)
    {
        for (int i = 0; i < n; ++i)
            d.Ai(2 * n + r, i) = g(rng);
        d.bi[2 * n + r] = d.Ai.row(2 * n + r).dot(centre) + 0.5 * u(rng);
    }
    out.dense = d;
    out.problem = to_problem(d);
    return out;
}

/// capped_simplex_qp with the l1 lift, random PSD curvature; 2n variables, 4n rows.
inline RandomQp random_lifted_qp(int n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            b(i, j) = g(rng);
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i)
        c[i] = g(rng);
    const double alpha = 1.0 / n + 0.1 + u(rng);
    RandomQp out;
    out.problem = pmvsk::capped_simplex_qp(b * b.transpose(), c, alpha, 0.05 + u(rng));
    out.problem.P = 0.5 * (out.problem.P + out.problem.P.transpose()).eval();
    out.dense = to_dense(out.problem);
    for (int i = 0; i < n; ++i)
        out.exclusive_rows.emplace_back(i, n + i);
    return out;
}

} // namespace instances
