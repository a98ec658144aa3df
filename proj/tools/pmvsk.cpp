// pmvsk command-line front end: solve, bench, sweep-rho.
//
// Exit codes: 0 all runs reached tolerance, 1 some run hit max_iters,
// 2 bad input, 3 solver failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmvsk/bench.hpp"

namespace
{

using namespace pmvsk;

struct CommonOptions
{
    std::string data;
    std::string moments;
    std::string synthetic;
    std::string config_file;
    std::string algo;
    std::optional<double> xi;
    std::string lambdas;
    std::optional<double> alpha;
    std::optional<int> k;
    std::optional<double> rho;
    std::optional<double> eps;
    std::optional<double> tau_w;
    std::optional<int> max_iters;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string save_moments;
};

void add_common(CLI::App& app, CommonOptions& o)
{
    auto* src = app.add_option_group("data source");
    src->add_option("--data", o.data, "Return panel CSV (header of asset ids, one row per period)");
    src->add_option("--moments", o.moments, "Binary moment dump written by --save-moments");
    src->add_option("--synthetic", o.synthetic, "Synthetic panel N,T[,SEED] (default 50,250,1)");
    src->require_option(0, 1);

    app.add_option("--config", o.config_file, "key = value config file; flags override it");
    app.add_option("--algo", o.algo, "pdca | pdcae | sca | relax_project");
    auto* xi = app.add_option("--xi", o.xi, "Risk aversion xi");
    auto* lam = app.add_option("--lambdas", o.lambdas, "Explicit weights l1,l2,l3,l4");
    xi->excludes(lam);
    app.add_option("--alpha", o.alpha, "Per-asset bound");
    app.add_option("--k", o.k, "Cardinality target");
    app.add_option("--rho", o.rho, "Penalty coefficient");
    app.add_option("--eps", o.eps, "Termination tolerance");
    app.add_option("--tau-w", o.tau_w, "SCA surrogate regularizer");
    app.add_option("--max-iters", o.max_iters, "Outer iteration cap");
    app.add_option("--seed", o.seed, "Initialization seed");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--save-moments", o.save_moments, "Write the estimated moments to this file");
}

MomentWeights parse_lambdas(const std::string& text)
{
    const auto cells = split_csv_line(text);
    if (cells.size() != 4)
        throw std::invalid_argument("--lambdas needs four comma-separated values");
    double v[4];
    for (std::size_t i = 0; i < 4; ++i)
    {
        const auto d = parse_double(cells[i]);
        if (!d)
            throw std::invalid_argument("--lambdas: bad number '" + cells[i] + "'");
        v[i] = *d;
    }
    return {v[0], v[1], v[2], v[3]};
}

ExperimentSpec build_spec(const CommonOptions& o)
{
    ExperimentSpec spec;
    if (!o.config_file.empty())
        spec.config = load_solver_config(o.config_file);
    SolverConfig& c = spec.config;
    if (o.xi)
    {
        c.risk_aversion = *o.xi;
        c.lambdas.reset();
    }
    if (!o.lambdas.empty())
    {
        c.lambdas = parse_lambdas(o.lambdas);
        c.risk_aversion.reset();
    }
    if (!c.lambdas && !c.risk_aversion)
        c.risk_aversion = 10.0;
    if (!o.algo.empty())
        c.algorithm = parse_algorithm(o.algo);
    if (o.alpha)
        c.alpha = *o.alpha;
    if (o.k)
        c.k = *o.k;
    if (o.rho)
        c.rho = *o.rho;
    if (o.eps)
        c.epsilon = *o.eps;
    if (o.tau_w)
        c.tau_w = *o.tau_w;
    if (o.max_iters)
        c.max_iters = *o.max_iters;
    if (o.seed)
        c.seed = *o.seed;

    if (!o.data.empty())
    {
        spec.data.kind = DataSource::Kind::panel_file;
        spec.data.path = o.data;
    }
    else if (!o.moments.empty())
    {
        spec.data.kind = DataSource::Kind::moment_dump;
        spec.data.path = o.moments;
    }
    else if (!o.synthetic.empty())
    {
        const auto cells = split_csv_line(o.synthetic);
        if (cells.size() < 2 || cells.size() > 3)
            throw std::invalid_argument("--synthetic expects N,T[,SEED]");
        spec.data.synthetic.n_assets = std::stoll(cells[0]);
        spec.data.synthetic.n_periods = std::stoll(cells[1]);
        if (cells.size() == 3)
            spec.data.synthetic.seed = std::stoull(cells[2]);
    }
    spec.output_dir = o.out;
    return spec;
}

MomentModel prepare_model(const ExperimentSpec& spec, const CommonOptions& o)
{
    MomentModel model = load_model(spec.data);
    validate(spec.config, model.assets());
    if (!o.save_moments.empty())
        save_moment_model(model, o.save_moments);
    return model;
}

void print_summary(const std::vector<SummaryRow>& rows)
{
    std::printf("%-14s %5s %9s %14s %14s %10s %10s %8s\n", "algorithm", "runs", "converged", "mean_f", "mean_fp",
                "cpu_s", "iters", "support");
    for (const auto& r : rows)
        std::printf("%-14s %5d %9d %14.6e %14.6e %10.4f %10.1f %8.2f\n", std::string(to_string(r.algorithm)).c_str(),
                    r.runs, r.converged, r.mean_f, r.mean_fp, r.mean_cpu_seconds, r.mean_iterations,
                    r.mean_support_count);
}

int run_solve(const CommonOptions& o)
{
    ExperimentSpec spec = build_spec(o);
    spec.repetitions = 1;
    spec.algorithms = {spec.config.algorithm};
    const MomentModel model = prepare_model(spec, o);
    const ExperimentResult result = run_experiment(spec, model);
    const RunRecord& run = result.runs.front();
    print_summary(result.summary);
    if (!spec.output_dir.empty())
    {
        std::ofstream out(spec.output_dir / "weights.csv");
        out << "index,weight\n";
        for (Index i = 0; i < run.w_star.size(); ++i)
            out << i << ',' << format_double(run.w_star[i]) << '\n';
    }
    return result.all_converged() ? 0 : 1;
}

int run_bench(const CommonOptions& o, int reps, const std::vector<std::string>& algos)
{
    ExperimentSpec spec = build_spec(o);
    spec.repetitions = reps;
    if (!algos.empty())
    {
        spec.algorithms.clear();
        for (const auto& a : algos)
            spec.algorithms.push_back(parse_algorithm(a));
    }
    const MomentModel model = prepare_model(spec, o);
    const ExperimentResult result = run_experiment(spec, model);
    print_summary(result.summary);
    return result.all_converged() ? 0 : 1;
}

int run_sweep(const CommonOptions& o, const std::string& grid_text)
{
    ExperimentSpec spec = build_spec(o);
    std::vector<double> grid = default_rho_grid();
    if (!grid_text.empty())
    {
        grid.clear();
        for (const auto& cell : split_csv_line(grid_text))
        {
            const auto v = parse_double(cell);
            if (!v)
                throw std::invalid_argument("--rho-grid: bad number '" + cell + "'");
            grid.push_back(*v);
        }
    }
    const MomentModel model = prepare_model(spec, o);
    const SweepReport report = rho_sweep(spec, model, grid);
    std::printf("%-10s %14s %6s %14s %12s %8s\n", "rho", "termination", "iters", "f", "card_gap", "support");
    bool converged = true;
    for (const auto& p : report.points)
    {
        std::printf("%-10g %14s %6d %14.6e %12.3e %8lld\n", p.rho, std::string(to_string(p.termination)).c_str(),
                    p.iterations, p.f, p.cardinality_gap, static_cast<long long>(p.support_count));
        converged = converged && p.termination == Termination::tolerance_met;
    }
    if (report.smallest_sparse_rho)
        std::printf("smallest rho with cardinality gap <= 1e-8: %g\n", *report.smallest_sparse_rho);
    else
        std::printf("no grid rho reached cardinality gap <= 1e-8\n");
    return converged ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse mean-variance-skewness-kurtosis portfolio solver"};
    app.require_subcommand(1);

    CommonOptions solve_opts, bench_opts, sweep_opts;
    int reps = 5;
    std::vector<std::string> bench_algos;
    std::string grid_text;

    auto* solve = app.add_subcommand("solve", "Run one algorithm once");
    add_common(*solve, solve_opts);

    auto* bench = app.add_subcommand("bench", "Repeated runs of several algorithms from shared starts");
    add_common(*bench, bench_opts);
    bench->add_option("--reps", reps, "Repetitions (distinct initial points)")->check(CLI::PositiveNumber);
    bench->add_option("--algos", bench_algos, "Subset of algorithms (default: all four)")->delimiter(',');

    auto* sweep = app.add_subcommand("sweep-rho", "Run one algorithm over a grid of penalty values");
    add_common(*sweep, sweep_opts);
    sweep->add_option("--rho-grid", grid_text, "Comma-separated rho values");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (solve->parsed())
            return run_solve(solve_opts);
        if (bench->parsed())
            return run_bench(bench_opts, reps, bench_algos);
        return run_sweep(sweep_opts, grid_text);
    }
    catch (const SolverError& e)
    {
        std::cerr << "solver error: " << e.what() << '\n';
        return 3;
    }
    catch (const ParseError& e)
    {
        std::cerr << "parse error at row " << e.row() << ", column " << e.column() << ": " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
