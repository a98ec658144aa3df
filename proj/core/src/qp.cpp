#include "pmvsk/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace pmvsk
{

namespace
{

double inf_norm(const Eigen::VectorXd& v)
{
    return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
}

// Largest step in (0, 1] keeping v + step * dv strictly positive, with a
// fraction-to-boundary factor.
double step_to_boundary(const Eigen::VectorXd& v, const Eigen::VectorXd& dv, double fraction)
{
    double limit = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0)
            limit = std::min(limit, -v[i] / dv[i]);
    return std::isinf(limit) ? 1.0 : std::min(1.0, fraction * limit);
}

struct Iterate
{
    Eigen::VectorXd x, y, z, s;
};

struct Direction
{
    Eigen::VectorXd dx, dy, dz, ds;
};

struct Residuals
{
    Eigen::VectorXd dual, eq, in;
    double mu = 0.0;

    double merit() const { return inf_norm(dual) + inf_norm(eq) + inf_norm(in) + mu; }
};

Residuals residuals(const QpProblem& pb, const Iterate& it)
{
    Residuals r;
    r.dual = pb.P * it.x + pb.q;
    if (pb.A_eq.rows() > 0)
        r.dual.noalias() += pb.A_eq.transpose() * it.y;
    if (pb.A_in.rows() > 0)
    {
        r.dual.noalias() += pb.A_in.transpose() * it.z;
        r.in = pb.A_in * it.x + it.s - pb.b_in;
        r.mu = it.z.dot(it.s) / static_cast<double>(pb.A_in.rows());
    }
    else
    {
        r.in.resize(0);
    }
    r.eq = pb.A_eq.rows() > 0 ? Eigen::VectorXd(pb.A_eq * it.x - pb.b_eq) : Eigen::VectorXd();
    return r;
}

} // namespace

const char* to_string(QpStatus status)
{
    switch (status)
    {
    case QpStatus::optimal:
        return "optimal";
    case QpStatus::max_iter:
        return "max_iter";
    case QpStatus::infeasible:
        return "infeasible";
    }
    return "unknown";
}

void validate(const QpProblem& pb, bool check_psd)
{
    const Index n = pb.q.size();
    if (n < 1)
        throw std::invalid_argument("QP needs at least one variable");
    if (pb.P.rows() != n || pb.P.cols() != n)
        throw std::invalid_argument("QP matrix P has the wrong shape");
    if (pb.A_eq.rows() != pb.b_eq.size() || (pb.A_eq.rows() > 0 && pb.A_eq.cols() != n))
        throw std::invalid_argument("QP equality block has inconsistent dimensions");
    if (pb.A_in.rows() != pb.b_in.size() || (pb.A_in.rows() > 0 && pb.A_in.cols() != n))
        throw std::invalid_argument("QP inequality block has inconsistent dimensions");
    if (!pb.P.allFinite() || !pb.q.allFinite() || !pb.b_eq.allFinite() || !pb.b_in.allFinite())
        throw std::invalid_argument("QP data contains non-finite values");
    if (check_psd)
    {
        const double scale = std::max(pb.P.cwiseAbs().maxCoeff(), 1e-300);
        if ((pb.P - pb.P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw std::invalid_argument("QP matrix P is not symmetric");
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pb.P, Eigen::EigenvaluesOnly);
        const auto& ev = eig.eigenvalues();
        if (ev.minCoeff() < -1e-10 * std::max(ev.maxCoeff(), 0.0))
            throw std::invalid_argument("QP matrix P is not positive semidefinite");
    }
}

KktResiduals kkt_residuals(const QpProblem& pb, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& z)
{
    KktResiduals k;
    Eigen::VectorXd stationarity = pb.P * x + pb.q;
    if (pb.A_eq.rows() > 0)
    {
        stationarity += pb.A_eq.transpose() * y;
        k.primal = inf_norm(pb.A_eq * x - pb.b_eq);
    }
    if (pb.A_in.rows() > 0)
    {
        stationarity += pb.A_in.transpose() * z;
        const Eigen::VectorXd slack = pb.A_in * x - pb.b_in;
        k.primal = std::max(k.primal, std::max(slack.maxCoeff(), 0.0));
        k.complementarity = std::abs(z.dot(slack));
        // a negative multiplier counts as dual infeasibility
        k.dual = std::max(k.dual, std::max(-z.minCoeff(), 0.0));
    }
    k.dual = std::max(k.dual, inf_norm(stationarity));
    return k;
}

double qp_objective(const QpProblem& pb, const Eigen::VectorXd& x)
{
    return 0.5 * x.dot(pb.P * x) + pb.q.dot(x);
}

QpSolver::QpSolver(QpSettings settings) : settings_(settings)
{
    if (!(settings_.tol > 0.0) || settings_.max_iter < 1)
        throw std::invalid_argument("QP tolerance and iteration cap must be positive");
}

QpSolution QpSolver::solve(const QpProblem& pb, const Eigen::VectorXd* x0)
{
    validate(pb);
    const Index n = pb.variables();
    const Index me = pb.A_eq.rows();
    const Index mi = pb.A_in.rows();
    const double tol = settings_.tol;

    Iterate it;
    it.x = x0 ? *x0 : Eigen::VectorXd::Zero(n);
    if (it.x.size() != n)
        throw std::invalid_argument("QP warm start has the wrong length");
    it.y = Eigen::VectorXd::Zero(me);
    it.z = Eigen::VectorXd::Ones(mi);
    it.s = mi > 0 ? Eigen::VectorXd((pb.b_in - pb.A_in * it.x).cwiseMax(x0 ? 1e-2 : 1.0)) : Eigen::VectorXd();

    const Eigen::MatrixXd eq_t = Eigen::MatrixXd(pb.A_eq.transpose());
    Eigen::MatrixXd eq_solve; // normal^{-1} A_eq'
    Eigen::LDLT<Eigen::MatrixXd> schur;
    Eigen::PartialPivLU<Eigen::MatrixXd> kkt_lu;
    bool use_cholesky = true;

    auto factor = [&]() {
        normal_ = pb.P;
        for (Index r = 0; r < mi; ++r)
        {
            const double weight = it.z[r] / it.s[r];
            for (SparseRows::InnerIterator a(pb.A_in, r); a; ++a)
                for (SparseRows::InnerIterator b(pb.A_in, r); b; ++b)
                    normal_(a.col(), b.col()) += weight * a.value() * b.value();
        }
        llt_.compute(normal_);
        use_cholesky = llt_.info() == Eigen::Success;
        if (use_cholesky)
        {
            if (me > 0)
            {
                eq_solve = llt_.solve(eq_t);
                schur.compute(Eigen::MatrixXd(pb.A_eq * eq_solve));
                use_cholesky = schur.info() == Eigen::Success && schur.isPositive();
            }
        }
        if (!use_cholesky)
        {
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + me, n + me);
            kkt.topLeftCorner(n, n) = normal_;
            kkt.topRightCorner(n, me) = eq_t;
            kkt.bottomLeftCorner(me, n) = eq_t.transpose();
            kkt_lu.compute(kkt);
        }
    };

    // Newton step for the complementarity right-hand side rc (S dz + Z ds = -rc).
    auto newton = [&](const Residuals& res, const Eigen::VectorXd& rc) {
        Direction d;
        Eigen::VectorXd rhs = -res.dual;
        Eigen::VectorXd shift;
        if (mi > 0)
        {
            shift = (it.z.cwiseQuotient(it.s)).cwiseProduct(res.in) - rc.cwiseQuotient(it.s);
            rhs.noalias() -= pb.A_in.transpose() * shift;
        }
        if (use_cholesky)
        {
            const Eigen::VectorXd dx0 = llt_.solve(rhs);
            if (me > 0)
            {
                d.dy = schur.solve(Eigen::VectorXd(pb.A_eq * dx0 + res.eq));
                d.dx = dx0 - eq_solve * d.dy;
            }
            else
            {
                d.dx = dx0;
                d.dy.resize(0);
            }
        }
        else
        {
            Eigen::VectorXd full(n + me);
            full.head(n) = rhs;
            if (me > 0)
                full.tail(me) = -res.eq;
            const Eigen::VectorXd sol = kkt_lu.solve(full);
            d.dx = sol.head(n);
            d.dy = sol.tail(me);
        }
        if (mi > 0)
        {
            d.dz = it.z.cwiseQuotient(it.s).cwiseProduct(pb.A_in * d.dx + res.in) - rc.cwiseQuotient(it.s);
            d.ds = -(rc + it.s.cwiseProduct(d.dz)).cwiseQuotient(it.z);
        }
        return d;
    };

    auto advance = [&](const Direction& d, double step) {
        Iterate next = it;
        next.x += step * d.dx;
        if (me > 0)
            next.y += step * d.dy;
        if (mi > 0)
        {
            next.z += step * d.dz;
            next.s += step * d.ds;
        }
        return next;
    };

    auto max_step = [&](const Direction& d, double fraction) {
        if (mi == 0)
            return 1.0;
        return std::min(step_to_boundary(it.z, d.dz, fraction), step_to_boundary(it.s, d.ds, fraction));
    };

    QpSolution sol;
    Residuals res = residuals(pb, it);
    double merit = res.merit();
    sol.merit.push_back(merit);
    bool converged = false;
    bool stalled = false;
    int iter = 0;

    for (; iter < settings_.max_iter; ++iter)
    {
        const KktResiduals kkt = kkt_residuals(pb, it.x, it.y, it.z);
        if (kkt.primal <= tol && kkt.dual <= tol && kkt.complementarity <= tol)
        {
            converged = true;
            break;
        }
        if (inf_norm(it.z) > 1e14 || inf_norm(it.y) > 1e14 || !it.x.allFinite())
        {
            stalled = true;
            break;
        }
        if (iter >= 100 && merit > 0.999 * sol.merit[static_cast<std::size_t>(iter - 50)])
        {
            stalled = true;
            break;
        }

        factor();

        Eigen::VectorXd rc = mi > 0 ? Eigen::VectorXd(it.z.cwiseProduct(it.s)) : Eigen::VectorXd();
        Direction d = newton(res, rc);
        double sigma = 0.0;
        if (mi > 0)
        {
            const double step_aff = max_step(d, 1.0);
            const double mu_aff =
                (it.z + step_aff * d.dz).dot(it.s + step_aff * d.ds) / static_cast<double>(mi);
            sigma = std::clamp(std::pow(mu_aff / res.mu, 3.0), 0.0, 1.0);
            const Eigen::VectorXd corrected =
                rc + d.dz.cwiseProduct(d.ds) - Eigen::VectorXd::Constant(mi, sigma * res.mu);
            d = newton(res, corrected);
        }

        // Backtrack on the merit; fall back to the plain centering direction.
        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt)
        {
            if (attempt == 1)
            {
                if (mi == 0)
                    break;
                const Eigen::VectorXd centering =
                    rc - Eigen::VectorXd::Constant(mi, std::max(sigma, 0.1) * res.mu);
                d = newton(res, centering);
            }
            double step = max_step(d, 0.995);
            for (int halving = 0; halving < 40; ++halving, step *= 0.5)
            {
                Iterate next = advance(d, step);
                Residuals next_res = residuals(pb, next);
                const double next_merit = next_res.merit();
                if (next_merit < merit && std::isfinite(next_merit))
                {
                    it = std::move(next);
                    res = std::move(next_res);
                    merit = next_merit;
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted)
        {
            stalled = true;
            break;
        }
        sol.merit.push_back(merit);
    }

    sol.x = it.x;
    sol.y = it.y;
    sol.z = it.z;
    sol.iterations = iter;
    sol.obj = qp_objective(pb, sol.x);
    sol.kkt = kkt_residuals(pb, sol.x, sol.y, sol.z);
    if (converged)
        sol.status = QpStatus::optimal;
    else if (stalled && sol.kkt.primal > 1e-6)
        sol.status = QpStatus::infeasible;
    else
        sol.status = QpStatus::max_iter;
    return sol;
}

QpSolution solve_qp(const QpProblem& problem, double tol, int max_iter)
{
    QpSolver solver(QpSettings{tol, max_iter});
    return solver.solve(problem);
}

QpProblem capped_simplex_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, double alpha, double l1_weight)
{
    const Index n = c.size();
    if (Q.rows() != n || Q.cols() != n)
        throw std::invalid_argument("subproblem curvature has the wrong shape");
    if (!(alpha > 0.0) || !(l1_weight >= 0.0))
        throw std::invalid_argument("subproblem needs alpha > 0 and l1_weight >= 0");
    const bool lifted = l1_weight > 0.0;
    const Index vars = lifted ? 2 * n : n;

    QpProblem pb;
    pb.P = Eigen::MatrixXd::Zero(vars, vars);
    pb.P.topLeftCorner(n, n) = Q;
    pb.q = Eigen::VectorXd::Zero(vars);
    pb.q.head(n) = c;
    if (lifted)
        pb.q.tail(n).setConstant(l1_weight);

    pb.A_eq.resize(1, vars);
    {
        std::vector<Eigen::Triplet<double>> t;
        for (Index i = 0; i < n; ++i)
            t.emplace_back(0, i, 1.0);
        pb.A_eq.setFromTriplets(t.begin(), t.end());
    }
    pb.b_eq = Eigen::VectorXd::Ones(1);

    const Index rows = lifted ? 4 * n : 2 * n;
    pb.A_in.resize(rows, vars);
    pb.b_in = Eigen::VectorXd::Zero(rows);
    std::vector<Eigen::Triplet<double>> t;
    for (Index i = 0; i < n; ++i)
    {
        t.emplace_back(i, i, 1.0); // w_i <= alpha
        pb.b_in[i] = alpha;
        t.emplace_back(n + i, i, -1.0); // -w_i <= alpha
        pb.b_in[n + i] = alpha;
        if (lifted)
        {
            t.emplace_back(2 * n + i, i, 1.0); // w_i - u_i <= 0
            t.emplace_back(2 * n + i, n + i, -1.0);
            t.emplace_back(3 * n + i, i, -1.0); // -w_i - u_i <= 0
            t.emplace_back(3 * n + i, n + i, -1.0);
        }
    }
    pb.A_in.setFromTriplets(t.begin(), t.end());
    return pb;
}

Eigen::VectorXd capped_simplex_start(const Eigen::VectorXd& w, bool lifted)
{
    if (!lifted)
        return w;
    Eigen::VectorXd x(2 * w.size());
    x.head(w.size()) = w;
    x.tail(w.size()) = w.cwiseAbs().array() + 1e-3;
    return x;
}

Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& target, double alpha)
{
    const Index n = target.size();
    const double capacity = static_cast<double>(n) * alpha;
    if (n < 1 || !(alpha > 0.0) || capacity < 1.0 - 1e-12)
        throw std::invalid_argument("capped simplex is empty (N * alpha < 1)");
    if (capacity <= 1.0 + 1e-12)
        return Eigen::VectorXd::Constant(n, alpha);

    // x(tau) = clamp(target - tau, -alpha, alpha); 1'x(tau) is piecewise linear and nonincreasing in tau
    const auto clamped = [&](double tau) -> Eigen::VectorXd {
        return (target.array() - tau).cwiseMax(-alpha).cwiseMin(alpha).matrix();
    };
    std::vector<double> knots;
    knots.reserve(static_cast<std::size_t>(2 * n));
    for (Index i = 0; i < n; ++i)
    {
        knots.push_back(target[i] - alpha);
        knots.push_back(target[i] + alpha);
    }
    std::sort(knots.begin(), knots.end());
    std::size_t lo = 0, hi = knots.size() - 1; // sum >= 1 at knots[lo], < 1 at knots[hi]
    while (hi - lo > 1)
    {
        const std::size_t mid = (lo + hi) / 2;
        (clamped(knots[mid]).sum() >= 1.0 ? lo : hi) = mid;
    }
    const double g_lo = clamped(knots[lo]).sum();
    const double g_hi = clamped(knots[hi]).sum();
    const double tau = g_lo > g_hi ? knots[lo] + (g_lo - 1.0) * (knots[hi] - knots[lo]) / (g_lo - g_hi) : knots[lo];
    return clamped(tau);
}

Eigen::VectorXd build_feasible_init(Index n, double alpha, std::uint64_t seed)
{
    if (n < 1 || static_cast<double>(n) * alpha < 1.0 - 1e-12)
        throw std::invalid_argument("no feasible initial point: N * alpha < 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(-alpha, alpha);
    Eigen::VectorXd raw(n);
    for (Index i = 0; i < n; ++i)
        raw[i] = box(rng);
    return project_capped_simplex(raw, alpha);
}

void dump_qp_problem(const QpProblem& pb, std::ostream& out)
{
    const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, " ", "\n");
    out << "n " << pb.variables() << " m_eq " << pb.A_eq.rows() << " m_in " << pb.A_in.rows() << '\n';
    out << "P\n" << pb.P.format(fmt) << "\nq\n" << pb.q.transpose().format(fmt) << '\n';
    out << "A_eq\n" << Eigen::MatrixXd(pb.A_eq).format(fmt) << "\nb_eq\n" << pb.b_eq.transpose().format(fmt) << '\n';
    out << "A_in\n" << Eigen::MatrixXd(pb.A_in).format(fmt) << "\nb_in\n" << pb.b_in.transpose().format(fmt) << '\n';
}

} // namespace pmvsk
