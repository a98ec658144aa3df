/**
 * @file bench.hpp
 * @brief Experiment harness: repeated solves, the relax-and-project baseline and rho sweeps.
 *
 * Output files (comma separated, header row first):
 *   summary.csv  algorithm,runs,converged,mean_f,mean_fp,mean_cpu_seconds,mean_iterations,mean_support_count
 *   runs.csv     algorithm,repetition,init_seed,termination,iterations,f,fp,cardinality_gap,support_count,cpu_seconds
 *   trace_<algorithm>_rep<r>.csv   per-iteration trace (see write_trace_csv)
 *   sweep.csv    rho,termination,iterations,f,fp,cardinality_gap,support_count
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pmvsk/data_io.hpp"
#include "pmvsk/moments.hpp"
#include "pmvsk/objective.hpp"
#include "pmvsk/solvers.hpp"

namespace pmvsk
{

struct SyntheticSource
{
    Index n_assets = 50;
    Index n_periods = 250;
    std::uint64_t seed = 1;
};

struct DataSource
{
    enum class Kind
    {
        synthetic,
        panel_file,
        moment_dump
    };

    Kind kind = Kind::synthetic;
    SyntheticSource synthetic;
    std::filesystem::path path; ///< panel file or moment dump
};

MomentModel load_model(const DataSource& source);

struct ExperimentSpec
{
    DataSource data;
    SolverConfig config;
    std::vector<Algorithm> algorithms{Algorithm::pdca, Algorithm::pdcae, Algorithm::sca, Algorithm::relax_project};
    /// Repetition r starts every algorithm from build_feasible_init(N, alpha, config.seed + r).
    int repetitions = 5;
    /// Empty path: nothing is written.
    std::filesystem::path output_dir;
};

/// Dispatches on config.algorithm.
SolveReport run_algorithm(const MomentModel& model, const ModelParams& params, const SolverConfig& config,
                          const Eigen::VectorXd& w0);

/**
 * Baseline: SCA with rho = 0 (cardinality dropped), then the l0-constrained
 * projection approximated by keeping the k largest |w| (ties to the lower
 * index) and projecting onto the capped simplex on that support.
 */
SolveReport relax_and_project(const MomentModel& model, const ModelParams& params, const SolverConfig& config,
                              const Eigen::VectorXd& w0);

/// Stage two of relax_and_project. Feasible k-sparse inputs are returned unchanged.
Eigen::VectorXd project_to_top_k_support(const Eigen::VectorXd& w_tilde, int k, double alpha);

/// Stage-two objective 1/2||w - w_tilde||^2 of the heuristic versus the best support found by enumerating
/// all C(N, k) supports. Intended for N <= ~12.
struct ProjectionComparison
{
    double heuristic = 0.0;
    double best = 0.0;
    std::vector<Index> best_support;

    double gap() const { return heuristic - best; }
};

ProjectionComparison projection_suboptimality(const Eigen::VectorXd& w_tilde, int k, double alpha);

struct RunRecord
{
    Algorithm algorithm = Algorithm::sca;
    int repetition = 0;
    std::uint64_t init_seed = 0;
    Termination termination = Termination::max_iter;
    int iterations = 0;
    double f = 0.0;
    double fp = 0.0;
    double cardinality_gap = 0.0;
    Index support_count = 0;
    double cpu_seconds = 0.0;
    Eigen::VectorXd w_star;
};

struct SummaryRow
{
    Algorithm algorithm = Algorithm::sca;
    int runs = 0;
    int converged = 0;
    double mean_f = 0.0;
    double mean_fp = 0.0;
    double mean_cpu_seconds = 0.0;
    double mean_iterations = 0.0;
    double mean_support_count = 0.0;
};

struct ExperimentResult
{
    std::vector<RunRecord> runs;      ///< ordered by repetition, then algorithm
    std::vector<SummaryRow> summary;  ///< one row per algorithm, in table order (pdca, pdcae, sca, relax_project)
    std::vector<SolveReport> reports; ///< parallel to runs

    bool all_converged() const;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);
ExperimentResult run_experiment(const ExperimentSpec& spec, const MomentModel& model);

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs, const std::vector<Algorithm>& order);

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);
std::vector<SummaryRow> read_summary_csv(std::istream& in);
void write_runs_csv(const std::vector<RunRecord>& runs, std::ostream& out);
std::vector<RunRecord> read_runs_csv(std::istream& in);

struct SweepPoint
{
    double rho = 0.0;
    Termination termination = Termination::max_iter;
    int iterations = 0;
    double f = 0.0;
    double fp = 0.0;
    double cardinality_gap = 0.0;
    Index support_count = 0;
};

struct SweepReport
{
    Algorithm algorithm = Algorithm::sca;
    std::vector<SweepPoint> points; ///< sorted by rho
    /// Smallest grid rho whose solution has cardinality gap <= 1e-8.
    std::optional<double> smallest_sparse_rho;
};

/// 0, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2
std::vector<double> default_rho_grid();

/// Runs spec.config.algorithm once per rho from the repetition-0 initial point.
SweepReport rho_sweep(const ExperimentSpec& spec, const std::vector<double>& rho_grid);
SweepReport rho_sweep(const ExperimentSpec& spec, const MomentModel& model, const std::vector<double>& rho_grid);

void write_sweep_csv(const SweepReport& report, std::ostream& out);
SweepReport read_sweep_csv(std::istream& in);

} // namespace pmvsk
