// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "instances.hpp"
#include "oracles.hpp"
#include "pmvsk/bench.hpp"
#include "pmvsk/sparsity.hpp"

using namespace pmvsk;

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

std::string fmt_time(double seconds, double limit)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "  [%.1fs / limit %.0fs]", seconds, limit);
    return buf;
}

void report(int id, const char* name, bool ok, const std::string& details, double seconds, double limit)
{
    const bool in_time = limit <= 0 || seconds < limit;
    std::string timing = limit > 0 ? fmt_time(seconds, limit) : "";
    if (!in_time)
        ok = false;
    failures += ok ? 0 : 1;
    std::printf("criterion %d: %s  %-28s %s%s\n", id, ok ? "PASS" : "FAIL", name, details.c_str(), timing.c_str());
    std::fflush(stdout);
}

std::string format(const char* fmt, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

ModelParams random_params(int n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.2, 3.0);
    ModelParams p;
    p.lambdas = {u(rng), u(rng), u(rng), u(rng)};
    p.alpha = std::uniform_real_distribution<double>(1.0 / n, 1.0)(rng);
    p.k = std::max(1, n / 2);
    p.rho = 0.01;
    return p;
}

void derivative_correctness()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> pick_n(2, 6);
    double worst_grad = 0.0, worst_hess = 0.0;
    for (int rep = 0; rep < 50; ++rep)
    {
        const int n = pick_n(rng);
        const MomentModel m = estimate_moments(oracle::random_returns(10 * n, n, rng));
        const ModelParams p = random_params(n, rng);
        const Eigen::VectorXd w = oracle::uniform_vector(n, -1, 1, rng);

        const Eigen::VectorXd g = grad_f(m, p, w);
        const Eigen::VectorXd fd =
            oracle::central_difference([&](const Eigen::VectorXd& x) { return eval_f(m, p, x); }, w, 1e-5);
        worst_grad = std::max(worst_grad, (g - fd).lpNorm<Eigen::Infinity>() / g.lpNorm<Eigen::Infinity>());

        const Eigen::MatrixXd h = hess_ncvx(m, p, w);
        const Eigen::MatrixXd fdh = oracle::central_difference_jacobian(
            [&](const Eigen::VectorXd& x) { return grad_f_split(m, p, x).nonconvex; }, w, 1e-5);
        worst_hess = std::max(worst_hess, (h - fdh).cwiseAbs().maxCoeff() / h.cwiseAbs().maxCoeff());
    }
    report(1, "derivative correctness", worst_grad <= 1e-6 && worst_hess <= 1e-5,
           format("50 instances, max rel err grad %.2e (tol 1e-6), hess %.2e (tol 1e-5)", worst_grad, worst_hess),
           seconds_since(start), 10.0);
}

void curvature_certificate()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> pick_n(2, 10);
    int violations = 0;
    double worst_ratio = 0.0;
    for (int model = 0; model < 10; ++model)
    {
        const int n = model == 0 ? 10 : pick_n(rng);
        const MomentModel m = estimate_moments(oracle::random_returns(10 * n, n, rng));
        const ModelParams p = random_params(n, rng);
        const double tau = tau_dc_bound(m, p);
        for (int s = 0; s < 1000; ++s)
        {
            const Eigen::VectorXd w = oracle::uniform_vector(n, -p.alpha, p.alpha, rng);
            const double radius = oracle::spectral_radius(hess_ncvx(m, p, w));
            worst_ratio = std::max(worst_ratio, radius / tau);
            violations += radius > tau;
        }
    }
    report(2, "curvature bound certificate", violations == 0,
           format("10 models x 1000 points, violations %d, max radius/tau_dc %.3f", violations, worst_ratio),
           seconds_since(start), 30.0);
}

void dc_identity()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<int> pick_n(1, 12);
    std::bernoulli_distribution zero(0.4);
    int mismatches = 0, checks = 0;
    for (int rep = 0; rep < 10000; ++rep)
    {
        const int n = pick_n(rng);
        Eigen::VectorXd w = oracle::uniform_vector(n, -1, 1, rng);
        for (int i = 0; i < n; ++i)
            if (zero(rng))
                w[i] = 0.0;
        const int nnz = static_cast<int>((w.array() != 0.0).count());
        for (int k = 1; k <= n; ++k, ++checks)
            mismatches += (cardinality_gap(w, k) == 0.0) != (nnz <= k);
    }
    int inequality_failures = 0;
    for (int rep = 0; rep < 1000; ++rep)
    {
        const int n = pick_n(rng);
        const int k = std::uniform_int_distribution<int>(1, n)(rng);
        const Eigen::VectorXd w = oracle::uniform_vector(n, -1, 1, rng);
        const Eigen::VectorXd v = oracle::uniform_vector(n, -1, 1, rng);
        const Eigen::VectorXd s = subgrad_largest_k(w, k).s;
        inequality_failures += largest_k_norm(v, k) < largest_k_norm(w, k) + s.dot(v - w) - 1e-14;
    }
    report(3, "DC identity", mismatches == 0 && inequality_failures == 0,
           format("%d gap checks with %d mismatches; subgradient inequality failures %d/1000", checks, mismatches,
                  inequality_failures),
           seconds_since(start), 5.0);
}

void qp_equivalence()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<int> pick_n(1, 6);
    int instances_run = 0, not_optimal = 0, objective_misses = 0, kkt_failures = 0;
    double worst_obj = 0.0, worst_kkt = 0.0;
    auto check = [&](const instances::RandomQp& inst) {
        ++instances_run;
        const QpSolution sol = solve_qp(inst.problem);
        if (sol.status != QpStatus::optimal)
        {
            ++not_optimal;
            return;
        }
        const auto ref = oracle::enumerate_active_sets(inst.dense, inst.exclusive_rows);
        const double err = std::abs(sol.obj - ref.obj) / (1 + std::abs(ref.obj));
        worst_obj = std::max(worst_obj, err);
        objective_misses += !ref.found || err > 1e-8;
        const auto r = oracle::recheck_kkt(inst.dense, sol.x, sol.y, sol.z);
        const double kkt = std::max({r.primal, r.dual, r.complementarity, std::max(0.0, -r.min_multiplier)});
        worst_kkt = std::max(worst_kkt, kkt);
        kkt_failures += kkt > 1e-10;
    };
    for (int rep = 0; rep < 200; ++rep)
        check(instances::random_box_simplex_qp(pick_n(rng), rng));
    std::uniform_int_distribution<int> pick_lifted(1, 3);
    for (int rep = 0; rep < 50; ++rep)
        check(instances::random_lifted_qp(pick_lifted(rng), rng));
    report(4, "QP oracle equivalence", not_optimal == 0 && objective_misses == 0 && kkt_failures == 0,
           format("%d instances, non-optimal %d, objective misses %d (max rel %.1e), KKT failures %d (max %.1e)",
                  instances_run, not_optimal, objective_misses, worst_obj, kkt_failures, worst_kkt),
           seconds_since(start), 60.0);
}

struct SuiteRun
{
    double xi = 0.0;
    ExperimentSpec spec;
    MomentModel model;
    ExperimentResult result;
    double seconds = 0.0;

    const RunRecord& run(int rep, Algorithm a) const
    {
        for (const RunRecord& r : result.runs)
            if (r.repetition == rep && r.algorithm == a)
                return r;
        throw std::logic_error("missing run");
    }
    const SolveReport& solve(int rep, Algorithm a) const
    {
        for (std::size_t i = 0; i < result.runs.size(); ++i)
            if (result.runs[i].repetition == rep && result.runs[i].algorithm == a)
                return result.reports[i];
        throw std::logic_error("missing run");
    }
};

constexpr int kReps = 5;
constexpr Algorithm kPenalized[] = {Algorithm::pdca, Algorithm::pdcae, Algorithm::sca};

SuiteRun standard_suite(double xi)
{
    SuiteRun s;
    s.xi = xi;
    s.spec.data.synthetic = {50, 250, 1};
    s.spec.config.risk_aversion = xi;
    s.spec.config.alpha = 0.2;
    s.spec.config.k = 10;
    s.spec.config.rho = 4e-3;
    s.spec.config.epsilon = 1e-8;
    s.spec.config.tau_w = 1e-10;
    s.spec.repetitions = kReps;
    const auto start = Clock::now();
    s.model = load_model(s.spec.data);
    s.result = run_experiment(s.spec, s.model);
    s.seconds = seconds_since(start);
    return s;
}

void descent(const std::vector<SuiteRun>& suites, double seconds)
{
    int pdca_violations = 0, sca_violations = 0, pdca_steps = 0, sca_steps = 0, unconverged = 0;
    double worst_pdca_rise = -INFINITY;
    for (const SuiteRun& s : suites)
        for (int rep = 0; rep < kReps; ++rep)
        {
            const auto& pd = s.solve(rep, Algorithm::pdca);
            unconverged += pd.termination != Termination::tolerance_met;
            for (std::size_t j = 1; j < pd.trace.size(); ++j, ++pdca_steps)
            {
                const double rise = pd.trace[j].fp - pd.trace[j - 1].fp;
                worst_pdca_rise = std::max(worst_pdca_rise, rise);
                pdca_violations += rise > 1e-10;
            }
            // the step on which the stopping test fires is not required to decrease
            const auto& sc = s.solve(rep, Algorithm::sca);
            unconverged += sc.termination != Termination::tolerance_met;
            const std::size_t last = sc.termination == Termination::tolerance_met ? sc.trace.size() - 1 : sc.trace.size();
            for (std::size_t j = 1; j < last; ++j, ++sca_steps)
                sca_violations += !(sc.trace[j].fp < sc.trace[j - 1].fp);
        }
    report(5, "descent properties", pdca_violations == 0 && sca_violations == 0 && unconverged == 0,
           format("pDCA %d/%d steps rise > 1e-10 (max rise %.1e); SCA %d/%d steps not strictly decreasing; "
                  "unconverged %d",
                  pdca_violations, pdca_steps, worst_pdca_rise, sca_violations, sca_steps, unconverged),
           seconds, 300.0);
}

void convergence_ordering(const std::vector<SuiteRun>& suites)
{
    bool ok = true;
    std::string details;
    for (const SuiteRun& s : suites)
    {
        int iter_ok = 0, time_ok = 0;
        std::string iters;
        for (int rep = 0; rep < kReps; ++rep)
        {
            const auto& p = s.run(rep, Algorithm::pdca);
            const auto& e = s.run(rep, Algorithm::pdcae);
            const auto& c = s.run(rep, Algorithm::sca);
            iter_ok += c.iterations <= e.iterations && e.iterations <= p.iterations;
            time_ok += c.cpu_seconds < e.cpu_seconds && c.cpu_seconds < p.cpu_seconds;
            iters += format("%s%d/%d/%d", rep ? " " : "", c.iterations, e.iterations, p.iterations);
        }
        ok = ok && iter_ok >= 4 && time_ok >= 4;
        details += format("%sxi=%g: iterations %d/5 [sca/pdcae/pdca %s], SCA fastest %d/5", details.empty() ? "" : "; ",
                          s.xi, iter_ok, iters.c_str(), time_ok);
    }
    report(6, "convergence ordering", ok, details, 0, 0);
}

void sparsity_vs_baseline(const std::vector<SuiteRun>& suites, double seconds)
{
    bool ok = true;
    int support_violations = 0;
    std::string details;
    for (const SuiteRun& s : suites)
    {
        std::string per_method;
        int all_beat = 0, best_beat = 0;
        for (Algorithm a : kPenalized)
        {
            int beat = 0;
            for (int rep = 0; rep < kReps; ++rep)
            {
                const auto& r = s.run(rep, a);
                beat += r.f < s.run(rep, Algorithm::relax_project).f;
                if (r.cardinality_gap <= 1e-8 && hard_support_count(r.w_star, 1e-6) > s.spec.config.k)
                    ++support_violations;
            }
            ok = ok && beat >= 4;
            per_method += format("%s %d/5, ", std::string(to_string(a)).c_str(), beat);
        }
        for (int rep = 0; rep < kReps; ++rep)
        {
            const double baseline = s.run(rep, Algorithm::relax_project).f;
            bool all = true;
            double best = INFINITY;
            for (Algorithm a : kPenalized)
            {
                all = all && s.run(rep, a).f < baseline;
                best = std::min(best, s.run(rep, a).f);
            }
            all_beat += all;
            best_beat += best < baseline;
        }
        details += format("xi=%g: beat baseline %s(all three %d/5, best %d/5); ", s.xi, per_method.c_str(), all_beat,
                          best_beat);
    }
    details += format("support violations %d", support_violations);
    report(7, "sparsity vs relax-and-project", ok && support_violations == 0, details, seconds, 600.0);
}

void stationarity(const std::vector<SuiteRun>& suites)
{
    double worst = 0.0;
    int over = 0, checked = 0;
    for (const SuiteRun& s : suites)
    {
        const ModelParams params = make_params(s.spec.config, s.model);
        for (int rep = 0; rep < kReps; ++rep)
            for (Algorithm a : kPenalized)
            {
                const double r = stationarity_residual(s.model, params, s.run(rep, a).w_star);
                worst = std::max(worst, r);
                over += r > 10 * s.spec.config.epsilon;
                ++checked;
            }
    }
    report(8, "stationarity", over == 0,
           format("%d solutions, max residual %.2e (tol 1e-7), over tolerance %d", checked, worst, over), 0, 0);
}

void determinism(const std::vector<SuiteRun>& suites)
{
    int mismatches = 0, compared = 0;
    for (const SuiteRun& s : suites)
    {
        const SuiteRun again = standard_suite(s.xi);
        const auto& a = s.result.summary;
        const auto& b = again.result.summary;
        mismatches += a.size() != b.size();
        for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i, ++compared)
            mismatches += a[i].algorithm != b[i].algorithm || a[i].runs != b[i].runs ||
                          a[i].converged != b[i].converged || a[i].mean_f != b[i].mean_f ||
                          a[i].mean_fp != b[i].mean_fp || a[i].mean_iterations != b[i].mean_iterations ||
                          a[i].mean_support_count != b[i].mean_support_count;
        for (std::size_t i = 0; i < s.result.runs.size(); ++i)
            mismatches += s.result.runs[i].w_star != again.result.runs[i].w_star;
    }
    report(9, "determinism", mismatches == 0,
           format("%d summary rows and all w_star re-run, mismatches %d (CPU seconds excluded)", compared, mismatches),
           0, 0);
}

} // namespace

int main()
{
    try
    {
        derivative_correctness();
        curvature_certificate();
        dc_identity();
        qp_equivalence();

        std::vector<SuiteRun> suites;
        double suite_seconds = 0.0;
        for (double xi : {5.0, 10.0})
        {
            suites.push_back(standard_suite(xi));
            suite_seconds += suites.back().seconds;
        }
        descent(suites, suite_seconds);
        convergence_ordering(suites);
        sparsity_vs_baseline(suites, suite_seconds);
        stationarity(suites);
        determinism(suites);
    }
    catch (const std::exception& e)
    {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
