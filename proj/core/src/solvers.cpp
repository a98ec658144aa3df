#include "pmvsk/solvers.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <Eigen/Eigenvalues>

#include "pmvsk/sparsity.hpp"

namespace pmvsk
{

namespace
{

class Stopwatch
{
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void check_start(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w0)
{
    check_dimensions(model);
    validate(params, model.assets());
    if (w0.size() != model.assets())
        throw std::invalid_argument("initial point has the wrong length");
    if (!w0.allFinite() || std::abs(w0.sum() - 1.0) > 1e-8 || w0.cwiseAbs().maxCoeff() > params.alpha + 1e-8)
        throw std::invalid_argument("initial point is not feasible (1'w = 1, |w_i| <= alpha)");
}

double penalized(const ModelParams& params, double f, const Eigen::VectorXd& w)
{
    return f + params.rho * cardinality_gap(w, params.k);
}

IterationRecord make_record(int iter, double fp, double f, double step, double elapsed)
{
    IterationRecord r;
    r.iter = iter;
    r.fp = fp;
    r.f = f;
    r.step_norm = step;
    r.elapsed = elapsed;
    return r;
}

void finish(SolveReport& report, const Eigen::VectorXd& w, double f, double fp, Termination termination)
{
    report.w_star = w;
    report.f_final = f;
    report.fp_final = fp;
    report.termination = termination;
    report.iterations = static_cast<int>(report.trace.size()) - 1;
    report.support_count = hard_support_count(w, kSupportThreshold);
}

Eigen::VectorXd solve_subproblem(QpSolver& solver, const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                                 const ModelParams& params, const Eigen::VectorXd& warm, SolveReport& partial)
{
    const bool lifted = params.rho > 0.0;
    const QpProblem pb = capped_simplex_qp(Q, c, params.alpha, params.rho);
    const Eigen::VectorXd x0 = capped_simplex_start(warm, lifted);
    const QpSolution sol = solver.solve(pb, &x0);
    if (sol.status != QpStatus::optimal)
    {
        const int iter = static_cast<int>(partial.trace.size());
        partial.iterations = iter - 1;
        throw SolverError("subproblem at outer iteration " + std::to_string(iter) + " ended with status " +
                              to_string(sol.status) + " (primal " + std::to_string(sol.kkt.primal) + ", dual " +
                              std::to_string(sol.kkt.dual) + ")",
                          partial);
    }
    return sol.x.head(c.size());
}

// Gradient of f_ncvx only; pDCAe needs it at the extrapolated point.
Eigen::VectorXd nonconvex_gradient(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w)
{
    return (-3.0 * params.lambdas.skewness) * coskewness_product(model, w) +
           (4.0 * params.lambdas.kurtosis) * cokurtosis_product(model, w);
}

SolveReport dc_iterations(const MomentModel& model, const ModelParams& params, const SolverConfig& config,
                          const Eigen::VectorXd& w0, bool extrapolate, const IterateObserver& observer)
{
    check_start(model, params, w0);
    const Stopwatch clock;
    const Index n = model.assets();
    const auto& l = params.lambdas;
    const double eps = config.epsilon;
    const int max_iters = config.max_iters.value_or(5000);

    // f_cvx + (tau_dc/2)||w||^2 has constant curvature across iterations
    const Eigen::MatrixXd Q =
        (2.0 * l.variance) * model.sigma + params.tau_dc * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd linear_cvx = -l.mean * model.mu;

    SolveReport report;
    report.algorithm = extrapolate ? Algorithm::pdcae : Algorithm::pdca;
    QpSolver solver;

    Eigen::VectorXd w = w0;
    Eigen::VectorXd w_prev = w0;
    Evaluation ev = evaluate(model, params, w);
    double f = ev.value.total();
    double fp = penalized(params, f, w);
    report.trace.push_back(make_record(0, fp, f, 0.0, clock.seconds()));
    if (observer)
        observer(0, w);

    double theta_prev = 1.0;
    double theta = 1.0;
    Termination termination = Termination::max_iter;

    for (int j = 0; j < max_iters; ++j)
    {
        double beta = 0.0;
        Eigen::VectorXd anchor = w;
        Eigen::VectorXd anchor_grad = ev.gradient.nonconvex;
        if (extrapolate)
        {
            beta = (theta_prev - 1.0) / theta;
            const double theta_next = (1.0 + std::sqrt(1.0 + 4.0 * theta * theta)) / 2.0;
            theta_prev = theta;
            theta = theta_next;
            if (beta != 0.0)
            {
                anchor = w + beta * (w - w_prev);
                anchor_grad = nonconvex_gradient(model, params, anchor);
            }
        }

        const Eigen::VectorXd s = subgrad_largest_k(w, params.k).s;
        const Eigen::VectorXd c = linear_cvx - (params.tau_dc * anchor - anchor_grad + params.rho * s);
        Eigen::VectorXd w_next = solve_subproblem(solver, Q, c, params, w, report);

        Evaluation ev_next = evaluate(model, params, w_next);
        const double f_next = ev_next.value.total();
        const double fp_next = penalized(params, f_next, w_next);
        const double step = (w_next - w).norm();

        IterationRecord rec = make_record(j + 1, fp_next, f_next, step, clock.seconds());
        if (extrapolate)
            rec.beta = beta;
        report.trace.push_back(rec);

        const bool converged =
            step / (1.0 + w.norm()) < eps && std::abs(fp_next - fp) / (1.0 + std::abs(fp_next)) < eps;
        w_prev = std::move(w);
        w = std::move(w_next);
        if (observer)
            observer(j + 1, w);
        ev = std::move(ev_next);
        f = f_next;
        fp = fp_next;
        if (converged)
        {
            termination = Termination::tolerance_met;
            break;
        }
    }
    finish(report, w, f, fp, termination);
    return report;
}

struct ScaStep
{
    Eigen::VectorXd w_hat;
    Eigen::VectorXd s;
    double gap = 0.0;
};

// One SCA subproblem at w; ev must be evaluate(model, params, w).
ScaStep sca_step(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w,
                 const Evaluation& ev, QpSolver& solver, SolveReport& partial)
{
    const auto& l = params.lambdas;
    ScaStep step;
    step.s = subgrad_largest_k(w, params.k).s;

    Eigen::MatrixXd curvature = nearest_psd(hess_ncvx(model, params, w));
    curvature.diagonal().array() += params.tau_w;
    const Eigen::MatrixXd Q = (2.0 * l.variance) * model.sigma + curvature;
    const Eigen::VectorXd c =
        -l.mean * model.mu + ev.gradient.nonconvex - curvature * w - params.rho * step.s;
    step.w_hat = solve_subproblem(solver, Q, c, params, w, partial);

    const Eigen::VectorXd d = step.w_hat - w;
    const Eigen::VectorXd grad = ev.gradient.total();
    step.gap = d.dot(grad - params.rho * step.s) +
               params.rho * (step.w_hat.lpNorm<1>() - w.lpNorm<1>());
    return step;
}

struct LineSearchOutcome
{
    LineSearchResult result;
    Eigen::VectorXd point;
    Evaluation eval;
};

LineSearchOutcome backtrack(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w_j,
                            double f_j, const Eigen::VectorXd& grad_j, const Eigen::VectorXd& w_hat,
                            const Eigen::VectorXd& s_j, double c, double beta, int max_backtracks)
{
    if (!(c > 0.0 && c < 1.0) || !(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("line search needs 0 < c < 1 and 0 < beta < 1");
    const Eigen::VectorXd d = w_hat - w_j;
    const double l1_change = w_hat.lpNorm<1>() - w_j.lpNorm<1>();
    const double d_dot_s = d.dot(s_j);
    const double model_decrease = d.dot(grad_j - params.rho * s_j) + params.rho * l1_change;

    double gamma = 1.0;
    for (int m = 0; m <= max_backtracks; ++m, gamma *= beta)
    {
        LineSearchOutcome out;
        out.point = w_j + gamma * d;
        out.eval = evaluate(model, params, out.point);
        const double lhs =
            out.eval.value.total() - gamma * params.rho * d_dot_s + gamma * params.rho * l1_change;
        const double rhs = f_j + c * gamma * model_decrease;
        if (lhs <= rhs)
        {
            out.result = {gamma, m};
            return out;
        }
    }
    throw std::runtime_error("line search exceeded " + std::to_string(max_backtracks) +
                             " backtracks; the subproblem direction is not a descent direction");
}

} // namespace

std::string_view to_string(Termination termination)
{
    return termination == Termination::tolerance_met ? "tolerance_met" : "max_iter";
}

SolverError::SolverError(const std::string& what, SolveReport partial)
    : std::runtime_error(what), partial_(std::move(partial))
{
}

SolveReport pdca(const MomentModel& model, const ModelParams& params, const SolverConfig& config,
                 const Eigen::VectorXd& w0, const IterateObserver& observer)
{
    return dc_iterations(model, params, config, w0, false, observer);
}

SolveReport pdcae(const MomentModel& model, const ModelParams& params, const SolverConfig& config,
                  const Eigen::VectorXd& w0, const IterateObserver& observer)
{
    return dc_iterations(model, params, config, w0, true, observer);
}

Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& h)
{
    if (h.rows() != h.cols())
        throw std::invalid_argument("nearest_psd needs a square matrix");
    if (h.size() == 0)
        return h;
    const double scale = h.cwiseAbs().maxCoeff();
    if (!std::isfinite(scale))
        throw std::invalid_argument("nearest_psd input is not finite");
    if (scale == 0.0)
        return h;
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("nearest_psd input is not symmetric");
    const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed in nearest_psd");
    if (eig.eigenvalues().minCoeff() >= 0.0)
        return sym;
    const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd& u = eig.eigenvectors();
    Eigen::MatrixXd out = u * clipped.asDiagonal() * u.transpose();
    return 0.5 * (out + out.transpose());
}

double ScaSurrogate::value(const Eigen::VectorXd& w) const
{
    const Eigen::VectorXd d = w - anchor;
    return anchor_value + gradient.dot(d) + 0.5 * d.dot(curvature * d);
}

Eigen::VectorXd ScaSurrogate::grad(const Eigen::VectorXd& w) const
{
    return gradient + curvature * (w - anchor);
}

ScaSurrogate sca_surrogate(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w_j)
{
    const Evaluation ev = evaluate(model, params, w_j);
    ScaSurrogate sur;
    sur.anchor = w_j;
    sur.anchor_value = ev.value.nonconvex;
    sur.gradient = ev.gradient.nonconvex;
    sur.curvature = nearest_psd(hess_ncvx(model, params, w_j));
    sur.curvature.diagonal().array() += params.tau_w;
    return sur;
}

LineSearchResult sca_line_search(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w_j,
                                 const Eigen::VectorXd& w_hat, const Eigen::VectorXd& s_j, double c, double beta,
                                 int max_backtracks)
{
    const Evaluation ev = evaluate(model, params, w_j);
    return backtrack(model, params, w_j, ev.value.total(), ev.gradient.total(), w_hat, s_j, c, beta,
                     max_backtracks)
        .result;
}

SolveReport sca(const MomentModel& model, const ModelParams& params, const SolverConfig& config,
                const Eigen::VectorXd& w0, const IterateObserver& observer)
{
    check_start(model, params, w0);
    const Stopwatch clock;
    const int max_iters = config.max_iters.value_or(1000);

    SolveReport report;
    report.algorithm = Algorithm::sca;
    QpSolver solver;

    Eigen::VectorXd w = w0;
    Evaluation ev = evaluate(model, params, w);
    double f = ev.value.total();
    double fp = penalized(params, f, w);
    report.trace.push_back(make_record(0, fp, f, 0.0, clock.seconds()));
    if (observer)
        observer(0, w);
    Termination termination = Termination::max_iter;

    for (int j = 0; j < max_iters; ++j)
    {
        const ScaStep step = sca_step(model, params, w, ev, solver, report);
        LineSearchOutcome ls;
        try
        {
            ls = backtrack(model, params, w, f, ev.gradient.total(), step.w_hat, step.s, config.line_search_c,
                           config.line_search_beta, 60);
        }
        catch (const std::runtime_error& e)
        {
            report.iterations = static_cast<int>(report.trace.size()) - 1;
            throw SolverError(e.what(), report);
        }

        const double f_next = ls.eval.value.total();
        const double fp_next = penalized(params, f_next, ls.point);
        IterationRecord rec = make_record(j + 1, fp_next, f_next, (ls.point - w).norm(), clock.seconds());
        rec.stationarity_gap = step.gap;
        rec.gamma = ls.result.gamma;
        report.trace.push_back(rec);

        w = std::move(ls.point);
        ev = std::move(ls.eval);
        if (observer)
            observer(j + 1, w);
        f = f_next;
        fp = fp_next;
        if (std::abs(step.gap) < config.epsilon)
        {
            termination = Termination::tolerance_met;
            break;
        }
    }
    finish(report, w, f, fp, termination);
    return report;
}

double stationarity_residual(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w)
{
    check_start(model, params, w);
    QpSolver solver;
    SolveReport scratch;
    const Evaluation ev = evaluate(model, params, w);
    return std::abs(sca_step(model, params, w, ev, solver, scratch).gap);
}

void write_trace_csv(const std::vector<IterationRecord>& trace, std::ostream& out)
{
    auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    out << "iter,fp,f,step_norm,stationarity_gap,gamma,beta,elapsed\n";
    for (const auto& r : trace)
        out << r.iter << ',' << cell(r.fp) << ',' << cell(r.f) << ',' << cell(r.step_norm) << ','
            << cell(r.stationarity_gap) << ',' << cell(r.gamma) << ',' << cell(r.beta) << ',' << cell(r.elapsed)
            << '\n';
}

std::vector<IterationRecord> read_trace_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("iter,fp,f,step_norm", 0) != 0)
        throw ParseError("missing trace header", 1, 1);
    std::vector<IterationRecord> trace;
    std::size_t row = 1;
    while (std::getline(in, line))
    {
        ++row;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 8)
            throw ParseError("expected 8 trace columns", row, cells.size());
        double v[8];
        for (std::size_t c = 0; c < 8; ++c)
        {
            if (cells[c].empty())
            {
                v[c] = kNotApplicable;
                continue;
            }
            const auto parsed = parse_double(cells[c]);
            if (!parsed)
                throw ParseError("non-numeric trace cell", row, c + 1);
            v[c] = *parsed;
        }
        IterationRecord r;
        r.iter = static_cast<int>(v[0]);
        r.fp = v[1];
        r.f = v[2];
        r.step_norm = v[3];
        r.stationarity_gap = v[4];
        r.gamma = v[5];
        r.beta = v[6];
        r.elapsed = v[7];
        trace.push_back(r);
    }
    return trace;
}

} // namespace pmvsk
