/**
 * @file data_io.hpp
 * @brief Return-panel ingestion, synthetic panel generation and solver configuration.
 *
 * Panel file format (UTF-8, comma separated, '.' decimal separator):
 *
 *     asset_1,asset_2,...,asset_N
 *     r_11,r_12,...,r_1N
 *     ...
 *     r_T1,r_T2,...,r_TN
 *
 * Config file format: one `key = value` pair per line, `#` starts a comment.
 * Keys mirror the SolverConfig fields one-to-one; unknown keys are rejected.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace pmvsk
{

using Index = Eigen::Index;

/// T x N matrix of simple per-period returns with one label per asset column.
struct ReturnPanel
{
    Eigen::MatrixXd returns;
    std::vector<std::string> asset_ids;

    Index periods() const { return returns.rows(); }
    Index assets() const { return returns.cols(); }
};

/// Throws std::invalid_argument if the panel is empty, has non-finite entries,
/// or its labels are not N distinct strings.
void validate(const ReturnPanel& panel);

/// Parse failure with 1-based location. Row 1 is the header line.
class ParseError : public std::runtime_error
{
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column);

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

ReturnPanel parse_return_panel(std::istream& in);
ReturnPanel load_return_panel(const std::filesystem::path& path);

/// Writes the canonical form: shortest round-trip decimal for every entry, '\n' line ends.
void write_return_panel(const ReturnPanel& panel, std::ostream& out);
void write_return_panel(const ReturnPanel& panel, const std::filesystem::path& path);

/**
 * Deterministic synthetic panel with skewed, heavy-tailed returns.
 *
 * r_ti = loading_i * f_t + e_ti, where f_t is a Gaussian market factor and
 * e_ti is a two-component mixture: with probability 0.85 a small-variance
 * Gaussian, with probability 0.15 a negative-mean Gaussian with larger
 * variance. Per-asset parameters are drawn from the same seeded stream, so
 * the panel is a pure function of (n_assets, n_periods, seed).
 *
 * Writes a warning to std::clog when n_periods < 5 * n_assets.
 */
ReturnPanel generate_synthetic_panel(Index n_assets, Index n_periods, std::uint64_t seed);

enum class Algorithm
{
    pdca,
    pdcae,
    sca,
    relax_project
};

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

/// The four objective weights: -l1*mean + l2*variance - l3*skewness + l4*kurtosis.
struct MomentWeights
{
    double mean = 1.0;
    double variance = 1.0;
    double skewness = 1.0;
    double kurtosis = 1.0;

    friend bool operator==(const MomentWeights&, const MomentWeights&) = default;
};

struct SolverConfig
{
    // Exactly one of these two must be set.
    std::optional<MomentWeights> lambdas;
    std::optional<double> risk_aversion;

    double alpha = 0.2;
    int k = 10;
    double rho = 4e-3;
    double epsilon = 1e-8;
    double tau_w = 1e-10;
    /// Unset means the per-algorithm default (5000 for pDCA/pDCAe, 1000 for SCA).
    std::optional<int> max_iters;
    double line_search_c = 1e-4;
    double line_search_beta = 0.5;
    std::uint64_t seed = 0;
    Algorithm algorithm = Algorithm::sca;
};

/// Field-level checks plus the feasibility conditions k*alpha >= 1 and N*alpha >= 1.
void validate(const SolverConfig& config, Index n_assets);

/// Explicit weights pass through; risk aversion xi maps to
/// (1, xi/2, xi(xi+1)/6, xi(xi+1)(xi+2)/24).
MomentWeights resolve_lambdas(const SolverConfig& config);

int effective_max_iters(const SolverConfig& config);

SolverConfig parse_solver_config(std::istream& in);
SolverConfig load_solver_config(const std::filesystem::path& path);
void write_solver_config(const SolverConfig& config, std::ostream& out);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
/// Strict full-string parse; returns nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);

/// Splits one line on commas; no quoting.
std::vector<std::string> split_csv_line(std::string_view line);

} // namespace pmvsk
