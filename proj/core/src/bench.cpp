#include "pmvsk/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "pmvsk/qp.hpp"
#include "pmvsk/sparsity.hpp"

namespace pmvsk
{

namespace
{

const std::vector<Algorithm> kTableOrder{Algorithm::pdca, Algorithm::pdcae, Algorithm::sca,
                                         Algorithm::relax_project};

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

double cell_number(const std::vector<std::string>& cells, std::size_t c, std::size_t row)
{
    const auto v = parse_double(cells.at(c));
    if (!v)
        throw ParseError("non-numeric cell '" + cells[c] + "'", row, c + 1);
    return *v;
}

Termination parse_termination(const std::string& text, std::size_t row, std::size_t col)
{
    if (text == "tolerance_met")
        return Termination::tolerance_met;
    if (text == "max_iter")
        return Termination::max_iter;
    throw ParseError("unknown termination '" + text + "'", row, col);
}

template <class RowFn>
void read_csv(std::istream& in, std::string_view header, std::size_t columns, RowFn on_row)
{
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != split_csv_line(header))
        throw ParseError("unexpected header, expected '" + std::string(header) + "'", 1, 1);
    std::size_t row = 1;
    while (std::getline(in, line))
    {
        ++row;
        if (line.empty() || line == "\r")
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != columns)
            throw ParseError("expected " + std::to_string(columns) + " columns", row, cells.size());
        on_row(cells, row);
    }
}

constexpr std::string_view kSummaryHeader =
    "algorithm,runs,converged,mean_f,mean_fp,mean_cpu_seconds,mean_iterations,mean_support_count";
constexpr std::string_view kRunsHeader =
    "algorithm,repetition,init_seed,termination,iterations,f,fp,cardinality_gap,support_count,cpu_seconds";
constexpr std::string_view kSweepHeader = "rho,termination,iterations,f,fp,cardinality_gap,support_count";

void write_outputs(const ExperimentSpec& spec, const ExperimentResult& result)
{
    if (spec.output_dir.empty())
        return;
    {
        auto out = open_output(spec.output_dir / "summary.csv");
        write_summary_csv(result.summary, out);
    }
    auto out = open_output(spec.output_dir / "runs.csv");
    write_runs_csv(result.runs, out);
}

void write_trace_file(const ExperimentSpec& spec, Algorithm algorithm, int repetition,
                      const std::vector<IterationRecord>& trace)
{
    if (spec.output_dir.empty())
        return;
    auto out = open_output(spec.output_dir /
                           ("trace_" + std::string(to_string(algorithm)) + "_rep" + std::to_string(repetition) +
                            ".csv"));
    write_trace_csv(trace, out);
}

} // namespace

MomentModel load_model(const DataSource& source)
{
    switch (source.kind)
    {
    case DataSource::Kind::synthetic:
        return estimate_moments(generate_synthetic_panel(source.synthetic.n_assets, source.synthetic.n_periods,
                                                         source.synthetic.seed));
    case DataSource::Kind::panel_file:
        return estimate_moments(load_return_panel(source.path));
    case DataSource::Kind::moment_dump:
        return load_moment_model(source.path);
    }
    throw std::logic_error("unknown data source");
}

SolveReport run_algorithm(const MomentModel& model, const ModelParams& params, const SolverConfig& config,
                          const Eigen::VectorXd& w0)
{
    switch (config.algorithm)
    {
    case Algorithm::pdca:
        return pdca(model, params, config, w0);
    case Algorithm::pdcae:
        return pdcae(model, params, config, w0);
    case Algorithm::sca:
        return sca(model, params, config, w0);
    case Algorithm::relax_project:
        return relax_and_project(model, params, config, w0);
    }
    throw std::logic_error("unknown algorithm");
}

Eigen::VectorXd project_to_top_k_support(const Eigen::VectorXd& w_tilde, int k, double alpha)
{
    const Index n = w_tilde.size();
    if (k < 1 || k > n)
        throw std::invalid_argument("k outside [1, N]");
    const bool feasible = std::abs(w_tilde.sum() - 1.0) <= 1e-10 && w_tilde.cwiseAbs().maxCoeff() <= alpha + 1e-10;
    if (feasible && cardinality_gap(w_tilde, k) == 0.0)
        return w_tilde;

    const auto support = subgrad_largest_k(w_tilde, k).support;
    Eigen::VectorXd target(k);
    for (int i = 0; i < k; ++i)
        target[i] = w_tilde[support[static_cast<std::size_t>(i)]];
    const Eigen::VectorXd projected = project_capped_simplex(target, alpha);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < k; ++i)
        w[support[static_cast<std::size_t>(i)]] = projected[i];
    return w;
}

ProjectionComparison projection_suboptimality(const Eigen::VectorXd& w_tilde, int k, double alpha)
{
    const Index n = w_tilde.size();
    if (k < 1 || k > n)
        throw std::invalid_argument("k outside [1, N]");
    ProjectionComparison cmp;
    cmp.heuristic = 0.5 * (project_to_top_k_support(w_tilde, k, alpha) - w_tilde).squaredNorm();
    cmp.best = std::numeric_limits<double>::infinity();

    // walk all k-subsets in lexicographic order
    std::vector<Index> subset(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        subset[static_cast<std::size_t>(i)] = i;
    while (true)
    {
        Eigen::VectorXd target(k);
        for (int i = 0; i < k; ++i)
            target[i] = w_tilde[subset[static_cast<std::size_t>(i)]];
        const Eigen::VectorXd projected = project_capped_simplex(target, alpha);
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < k; ++i)
            w[subset[static_cast<std::size_t>(i)]] = projected[i];
        const double obj = 0.5 * (w - w_tilde).squaredNorm();
        if (obj < cmp.best)
        {
            cmp.best = obj;
            cmp.best_support = subset;
        }

        int i = k - 1;
        while (i >= 0 && subset[static_cast<std::size_t>(i)] == n - k + i)
            --i;
        if (i < 0)
            break;
        ++subset[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
    }
    return cmp;
}

SolveReport relax_and_project(const MomentModel& model, const ModelParams& params, const SolverConfig& config,
                              const Eigen::VectorXd& w0)
{
    ModelParams relaxed = params;
    relaxed.rho = 0.0;
    SolverConfig relaxed_config = config;
    relaxed_config.rho = 0.0;
    relaxed_config.algorithm = Algorithm::sca;

    SolveReport report = sca(model, relaxed, relaxed_config, w0);
    const Eigen::VectorXd w = project_to_top_k_support(report.w_star, params.k, params.alpha);
    report.algorithm = Algorithm::relax_project;
    report.heuristic = true;
    report.w_star = w;
    report.f_final = eval_f(model, params, w);
    report.fp_final = eval_fp(model, params, w);
    report.support_count = hard_support_count(w, kSupportThreshold);
    return report;
}

bool ExperimentResult::all_converged() const
{
    return std::all_of(runs.begin(), runs.end(),
                       [](const RunRecord& r) { return r.termination == Termination::tolerance_met; });
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs, const std::vector<Algorithm>& order)
{
    std::vector<SummaryRow> rows;
    for (Algorithm a : order)
    {
        SummaryRow row;
        row.algorithm = a;
        for (const auto& r : runs)
        {
            if (r.algorithm != a)
                continue;
            ++row.runs;
            row.converged += r.termination == Termination::tolerance_met ? 1 : 0;
            row.mean_f += r.f;
            row.mean_fp += r.fp;
            row.mean_cpu_seconds += r.cpu_seconds;
            row.mean_iterations += r.iterations;
            row.mean_support_count += static_cast<double>(r.support_count);
        }
        if (row.runs == 0)
            continue;
        const double count = row.runs;
        row.mean_f /= count;
        row.mean_fp /= count;
        row.mean_cpu_seconds /= count;
        row.mean_iterations /= count;
        row.mean_support_count /= count;
        rows.push_back(row);
    }
    return rows;
}

ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    return run_experiment(spec, load_model(spec.data));
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const MomentModel& model)
{
    if (spec.repetitions < 1)
        throw std::invalid_argument("repetitions must be at least 1");
    if (spec.algorithms.empty())
        throw std::invalid_argument("no algorithms selected");
    const ModelParams params = make_params(spec.config, model);
    if (!spec.output_dir.empty())
        std::filesystem::create_directories(spec.output_dir);

    std::vector<Algorithm> order;
    for (Algorithm a : kTableOrder)
        if (std::find(spec.algorithms.begin(), spec.algorithms.end(), a) != spec.algorithms.end())
            order.push_back(a);

    ExperimentResult result;
    for (int rep = 0; rep < spec.repetitions; ++rep)
    {
        const std::uint64_t seed = spec.config.seed + static_cast<std::uint64_t>(rep);
        const Eigen::VectorXd w0 = build_feasible_init(model.assets(), spec.config.alpha, seed);
        for (Algorithm a : order)
        {
            SolverConfig config = spec.config;
            config.algorithm = a;
            const auto start = std::chrono::steady_clock::now();
            SolveReport report;
            try
            {
                report = run_algorithm(model, params, config, w0);
            }
            catch (const SolverError& e)
            {
                write_trace_file(spec, a, rep, e.partial().trace);
                result.summary = summarize(result.runs, order);
                write_outputs(spec, result);
                throw;
            }
            RunRecord run;
            run.algorithm = a;
            run.repetition = rep;
            run.init_seed = seed;
            run.termination = report.termination;
            run.iterations = report.iterations;
            run.f = report.f_final;
            run.fp = report.fp_final;
            run.cardinality_gap = cardinality_gap(report.w_star, params.k);
            run.support_count = report.support_count;
            run.cpu_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            run.w_star = report.w_star;
            write_trace_file(spec, a, rep, report.trace);
            result.runs.push_back(std::move(run));
            result.reports.push_back(std::move(report));
        }
    }
    result.summary = summarize(result.runs, order);
    write_outputs(spec, result);
    return result;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out)
{
    out << kSummaryHeader << '\n';
    for (const auto& r : rows)
        out << to_string(r.algorithm) << ',' << r.runs << ',' << r.converged << ',' << format_double(r.mean_f) << ','
            << format_double(r.mean_fp) << ',' << format_double(r.mean_cpu_seconds) << ','
            << format_double(r.mean_iterations) << ',' << format_double(r.mean_support_count) << '\n';
}

std::vector<SummaryRow> read_summary_csv(std::istream& in)
{
    std::vector<SummaryRow> rows;
    read_csv(in, kSummaryHeader, 8, [&](const std::vector<std::string>& c, std::size_t row) {
        SummaryRow r;
        r.algorithm = parse_algorithm(c[0]);
        r.runs = static_cast<int>(cell_number(c, 1, row));
        r.converged = static_cast<int>(cell_number(c, 2, row));
        r.mean_f = cell_number(c, 3, row);
        r.mean_fp = cell_number(c, 4, row);
        r.mean_cpu_seconds = cell_number(c, 5, row);
        r.mean_iterations = cell_number(c, 6, row);
        r.mean_support_count = cell_number(c, 7, row);
        rows.push_back(r);
    });
    return rows;
}

void write_runs_csv(const std::vector<RunRecord>& runs, std::ostream& out)
{
    out << kRunsHeader << '\n';
    for (const auto& r : runs)
        out << to_string(r.algorithm) << ',' << r.repetition << ',' << r.init_seed << ',' << to_string(r.termination)
            << ',' << r.iterations << ',' << format_double(r.f) << ',' << format_double(r.fp) << ','
            << format_double(r.cardinality_gap) << ',' << r.support_count << ',' << format_double(r.cpu_seconds)
            << '\n';
}

std::vector<RunRecord> read_runs_csv(std::istream& in)
{
    std::vector<RunRecord> runs;
    read_csv(in, kRunsHeader, 10, [&](const std::vector<std::string>& c, std::size_t row) {
        RunRecord r;
        r.algorithm = parse_algorithm(c[0]);
        r.repetition = static_cast<int>(cell_number(c, 1, row));
        r.init_seed = std::stoull(c[2]);
        r.termination = parse_termination(c[3], row, 4);
        r.iterations = static_cast<int>(cell_number(c, 4, row));
        r.f = cell_number(c, 5, row);
        r.fp = cell_number(c, 6, row);
        r.cardinality_gap = cell_number(c, 7, row);
        r.support_count = static_cast<Index>(cell_number(c, 8, row));
        r.cpu_seconds = cell_number(c, 9, row);
        runs.push_back(std::move(r));
    });
    return runs;
}

std::vector<double> default_rho_grid()
{
    return {0.0, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2};
}

SweepReport rho_sweep(const ExperimentSpec& spec, const std::vector<double>& rho_grid)
{
    return rho_sweep(spec, load_model(spec.data), rho_grid);
}

SweepReport rho_sweep(const ExperimentSpec& spec, const MomentModel& model, const std::vector<double>& rho_grid)
{
    if (rho_grid.empty())
        throw std::invalid_argument("rho grid is empty");
    std::vector<double> grid = rho_grid;
    std::sort(grid.begin(), grid.end());
    if (grid.front() < 0.0)
        throw std::invalid_argument("rho grid entries must be non-negative");

    SweepReport report;
    report.algorithm = spec.config.algorithm;
    const Eigen::VectorXd w0 = build_feasible_init(model.assets(), spec.config.alpha, spec.config.seed);
    for (double rho : grid)
    {
        SolverConfig config = spec.config;
        config.rho = rho;
        const ModelParams params = make_params(config, model);
        const SolveReport solve = run_algorithm(model, params, config, w0);
        SweepPoint p;
        p.rho = rho;
        p.termination = solve.termination;
        p.iterations = solve.iterations;
        p.f = solve.f_final;
        p.fp = solve.fp_final;
        p.cardinality_gap = cardinality_gap(solve.w_star, params.k);
        p.support_count = solve.support_count;
        if (!report.smallest_sparse_rho && p.cardinality_gap <= 1e-8)
            report.smallest_sparse_rho = rho;
        report.points.push_back(p);
    }
    if (!spec.output_dir.empty())
    {
        std::filesystem::create_directories(spec.output_dir);
        auto out = open_output(spec.output_dir / "sweep.csv");
        write_sweep_csv(report, out);
    }
    return report;
}

void write_sweep_csv(const SweepReport& report, std::ostream& out)
{
    out << kSweepHeader << '\n';
    for (const auto& p : report.points)
        out << format_double(p.rho) << ',' << to_string(p.termination) << ',' << p.iterations << ','
            << format_double(p.f) << ',' << format_double(p.fp) << ',' << format_double(p.cardinality_gap) << ','
            << p.support_count << '\n';
}

SweepReport read_sweep_csv(std::istream& in)
{
    SweepReport report;
    read_csv(in, kSweepHeader, 7, [&](const std::vector<std::string>& c, std::size_t row) {
        SweepPoint p;
        p.rho = cell_number(c, 0, row);
        p.termination = parse_termination(c[1], row, 2);
        p.iterations = static_cast<int>(cell_number(c, 2, row));
        p.f = cell_number(c, 3, row);
        p.fp = cell_number(c, 4, row);
        p.cardinality_gap = cell_number(c, 5, row);
        p.support_count = static_cast<Index>(cell_number(c, 6, row));
        if (!report.smallest_sparse_rho && p.cardinality_gap <= 1e-8)
            report.smallest_sparse_rho = p.rho;
        report.points.push_back(p);
    });
    return report;
}

} // namespace pmvsk
