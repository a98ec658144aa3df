#include "pmvsk/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <unordered_set>

namespace pmvsk
{

namespace
{

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true)
    {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos)
        {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

std::string strip_line_end(std::string line)
{
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    return line;
}

} // namespace

ParseError::ParseError(const std::string& what, std::size_t row, std::size_t column)
    : std::runtime_error("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
      row_(row),
      column_(column)
{
}

std::string format_double(double value)
{
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

std::optional<double> parse_double(std::string_view text)
{
    text = trim(text);
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    if (text.empty())
        return std::nullopt;
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc{} || result.ptr != text.data() + text.size())
        return std::nullopt;
    return value;
}

std::vector<std::string> split_csv_line(std::string_view line)
{
    if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
    std::vector<std::string> cells;
    for (auto cell : split_commas(line))
        cells.emplace_back(cell);
    return cells;
}

void validate(const ReturnPanel& panel)
{
    if (panel.periods() < 1 || panel.assets() < 1)
        throw std::invalid_argument("return panel must have at least one period and one asset");
    if (static_cast<Index>(panel.asset_ids.size()) != panel.assets())
        throw std::invalid_argument("return panel has " + std::to_string(panel.asset_ids.size()) +
                                    " labels for " + std::to_string(panel.assets()) + " assets");
    if (!panel.returns.allFinite())
        throw std::invalid_argument("return panel contains non-finite entries");
    std::unordered_set<std::string> seen;
    for (const auto& id : panel.asset_ids)
        if (!seen.insert(id).second)
            throw std::invalid_argument("duplicate asset id '" + id + "'");
}

ReturnPanel parse_return_panel(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("empty input, expected a header row", 1, 1);
    line = strip_line_end(std::move(line));

    ReturnPanel panel;
    {
        std::unordered_set<std::string> seen;
        std::size_t col = 0;
        for (auto cell : split_commas(line))
        {
            ++col;
            std::string id(trim(cell));
            if (id.empty())
                throw ParseError("empty asset id", 1, col);
            if (!seen.insert(id).second)
                throw ParseError("duplicate asset id '" + id + "'", 1, col);
            panel.asset_ids.push_back(std::move(id));
        }
    }
    const std::size_t n = panel.asset_ids.size();

    std::vector<double> values;
    std::size_t row = 1;
    std::size_t periods = 0;
    while (std::getline(in, line))
    {
        ++row;
        line = strip_line_end(std::move(line));
        if (trim(line).empty())
            continue;
        const auto cells = split_commas(line);
        if (cells.size() != n)
            throw ParseError("expected " + std::to_string(n) + " cells, found " + std::to_string(cells.size()),
                             row, std::min(cells.size(), n) + 1);
        for (std::size_t c = 0; c < n; ++c)
        {
            const auto value = parse_double(cells[c]);
            if (!value)
                throw ParseError("non-numeric cell '" + std::string(trim(cells[c])) + "'", row, c + 1);
            if (!std::isfinite(*value))
                throw ParseError("non-finite cell", row, c + 1);
            values.push_back(*value);
        }
        ++periods;
    }
    if (periods == 0)
        throw ParseError("no data rows after header", 2, 1);

    panel.returns.resize(static_cast<Index>(periods), static_cast<Index>(n));
    for (std::size_t t = 0; t < periods; ++t)
        for (std::size_t c = 0; c < n; ++c)
            panel.returns(static_cast<Index>(t), static_cast<Index>(c)) = values[t * n + c];
    return panel;
}

ReturnPanel load_return_panel(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open return panel file '" + path.string() + "'");
    return parse_return_panel(in);
}

void write_return_panel(const ReturnPanel& panel, std::ostream& out)
{
    validate(panel);
    for (std::size_t c = 0; c < panel.asset_ids.size(); ++c)
        out << (c ? "," : "") << panel.asset_ids[c];
    out << '\n';
    for (Index t = 0; t < panel.periods(); ++t)
    {
        for (Index c = 0; c < panel.assets(); ++c)
            out << (c ? "," : "") << format_double(panel.returns(t, c));
        out << '\n';
    }
}

void write_return_panel(const ReturnPanel& panel, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write return panel file '" + path.string() + "'");
    write_return_panel(panel, out);
}

ReturnPanel generate_synthetic_panel(Index n_assets, Index n_periods, std::uint64_t seed)
{
    if (n_assets < 1 || n_periods < 1)
        throw std::invalid_argument("synthetic panel needs n_assets >= 1 and n_periods >= 1");
    if (n_periods < 5 * n_assets)
        std::clog << "warning: synthetic panel with " << n_periods << " periods for " << n_assets
                  << " assets (fewer than 5 periods per asset)\n";

    constexpr double kJumpProbability = 0.15;
    constexpr double kFactorMean = 3e-4;
    constexpr double kFactorSd = 0.012;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    std::normal_distribution<double> gauss(0.0, 1.0);

    struct AssetParams
    {
        double loading, calm_mean, calm_sd, jump_mean, jump_sd;
    };
    std::vector<AssetParams> params(static_cast<std::size_t>(n_assets));
    for (auto& p : params)
    {
        p.loading = uniform(0.6, 1.4);
        p.calm_sd = uniform(0.006, 0.014);
        p.jump_mean = -uniform(1.5, 3.0) * p.calm_sd;
        p.jump_sd = uniform(2.0, 3.5) * p.calm_sd;
        const double drift = uniform(-3e-4, 1.2e-3);
        // mixture mean equals the drift
        p.calm_mean = (drift - kJumpProbability * p.jump_mean) / (1.0 - kJumpProbability);
    }

    ReturnPanel panel;
    panel.returns.resize(n_periods, n_assets);
    for (Index t = 0; t < n_periods; ++t)
    {
        const double factor = kFactorMean + kFactorSd * gauss(rng);
        for (Index i = 0; i < n_assets; ++i)
        {
            const auto& p = params[static_cast<std::size_t>(i)];
            const bool jump = unit(rng) < kJumpProbability;
            const double shock = jump ? p.jump_mean + p.jump_sd * gauss(rng) : p.calm_mean + p.calm_sd * gauss(rng);
            panel.returns(t, i) = p.loading * factor + shock;
        }
    }
    panel.asset_ids.reserve(static_cast<std::size_t>(n_assets));
    for (Index i = 0; i < n_assets; ++i)
        panel.asset_ids.push_back("asset_" + std::to_string(i + 1));
    return panel;
}

std::string_view to_string(Algorithm algorithm)
{
    switch (algorithm)
    {
    case Algorithm::pdca:
        return "pdca";
    case Algorithm::pdcae:
        return "pdcae";
    case Algorithm::sca:
        return "sca";
    case Algorithm::relax_project:
        return "relax_project";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name)
{
    for (auto a : {Algorithm::pdca, Algorithm::pdcae, Algorithm::sca, Algorithm::relax_project})
        if (to_string(a) == name)
            return a;
    throw std::invalid_argument("unknown algorithm '" + std::string(name) +
                                "' (expected pdca, pdcae, sca or relax_project)");
}

void validate(const SolverConfig& config, Index n_assets)
{
    auto require = [](bool ok, const std::string& msg) {
        if (!ok)
            throw std::invalid_argument(msg);
    };
    (void)resolve_lambdas(config);
    require(config.alpha > 0.0 && std::isfinite(config.alpha), "alpha must be positive");
    require(config.rho >= 0.0 && std::isfinite(config.rho), "rho must be non-negative");
    require(config.epsilon > 0.0, "epsilon must be positive");
    require(config.tau_w > 0.0, "tau_w must be positive");
    require(!config.max_iters || *config.max_iters > 0, "max_iters must be positive");
    require(config.line_search_c > 0.0 && config.line_search_c < 1.0, "line_search_c must lie in (0, 1)");
    require(config.line_search_beta > 0.0 && config.line_search_beta < 1.0, "line_search_beta must lie in (0, 1)");
    require(config.k >= 1, "k must be at least 1");
    if (n_assets > 0)
    {
        require(config.k < n_assets, "k must be smaller than the number of assets");
        require(static_cast<double>(n_assets) * config.alpha >= 1.0 - 1e-12,
                "N * alpha < 1: the box-constrained simplex is empty");
    }
    require(static_cast<double>(config.k) * config.alpha >= 1.0 - 1e-12,
            "k * alpha < 1: no k-sparse portfolio fits the box");
}

MomentWeights resolve_lambdas(const SolverConfig& config)
{
    if (config.lambdas.has_value() == config.risk_aversion.has_value())
        throw std::invalid_argument("exactly one of explicit lambdas or risk aversion must be given");
    MomentWeights w;
    if (config.lambdas)
    {
        w = *config.lambdas;
    }
    else
    {
        const double xi = *config.risk_aversion;
        if (!(xi > 0.0))
            throw std::invalid_argument("risk aversion must be positive");
        w.mean = 1.0;
        w.variance = xi / 2.0;
        w.skewness = xi * (xi + 1.0) / 6.0;
        w.kurtosis = xi * (xi + 1.0) * (xi + 2.0) / 24.0;
    }
    for (double v : {w.mean, w.variance, w.skewness, w.kurtosis})
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("all moment weights must be positive and finite");
    return w;
}

int effective_max_iters(const SolverConfig& config)
{
    if (config.max_iters)
        return *config.max_iters;
    return config.algorithm == Algorithm::pdca || config.algorithm == Algorithm::pdcae ? 5000 : 1000;
}

SolverConfig parse_solver_config(std::istream& in)
{
    SolverConfig config;
    std::string line;
    std::size_t row = 0;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line))
    {
        ++row;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos)
            view = view.substr(0, hash);
        view = trim(view);
        if (view.empty())
            continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("expected 'key = value'", row, 1);
        const std::string key(trim(view.substr(0, eq)));
        const std::string_view value = trim(view.substr(eq + 1));
        if (!seen.insert(key).second)
            throw ParseError("duplicate key '" + key + "'", row, 1);

        auto number = [&]() {
            const auto v = parse_double(value);
            if (!v)
                throw ParseError("key '" + key + "' expects a number, got '" + std::string(value) + "'", row,
                                 eq + 2);
            return *v;
        };
        auto integer = [&]() -> long long {
            long long v = 0;
            const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
            if (r.ec != std::errc{} || r.ptr != value.data() + value.size())
                throw ParseError("key '" + key + "' expects an integer, got '" + std::string(value) + "'", row,
                                 eq + 2);
            return v;
        };

        if (key == "lambdas")
        {
            const auto cells = split_commas(value);
            if (cells.size() != 4)
                throw ParseError("lambdas expects four comma-separated numbers", row, eq + 2);
            double v[4];
            for (int i = 0; i < 4; ++i)
            {
                const auto parsed = parse_double(cells[static_cast<std::size_t>(i)]);
                if (!parsed)
                    throw ParseError("lambdas entry is not a number", row, eq + 2);
                v[i] = *parsed;
            }
            config.lambdas = MomentWeights{v[0], v[1], v[2], v[3]};
        }
        else if (key == "risk_aversion")
            config.risk_aversion = number();
        else if (key == "alpha")
            config.alpha = number();
        else if (key == "k")
            config.k = static_cast<int>(integer());
        else if (key == "rho")
            config.rho = number();
        else if (key == "epsilon")
            config.epsilon = number();
        else if (key == "tau_w")
            config.tau_w = number();
        else if (key == "max_iters")
            config.max_iters = static_cast<int>(integer());
        else if (key == "line_search_c")
            config.line_search_c = number();
        else if (key == "line_search_beta")
            config.line_search_beta = number();
        else if (key == "seed")
            config.seed = static_cast<std::uint64_t>(integer());
        else if (key == "algorithm")
            config.algorithm = parse_algorithm(value);
        else
            throw ParseError("unknown key '" + key + "'", row, 1);
    }
    return config;
}

SolverConfig load_solver_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file '" + path.string() + "'");
    return parse_solver_config(in);
}

void write_solver_config(const SolverConfig& config, std::ostream& out)
{
    if (config.lambdas)
        out << "lambdas = " << format_double(config.lambdas->mean) << ',' << format_double(config.lambdas->variance)
            << ',' << format_double(config.lambdas->skewness) << ',' << format_double(config.lambdas->kurtosis)
            << '\n';
    if (config.risk_aversion)
        out << "risk_aversion = " << format_double(*config.risk_aversion) << '\n';
    out << "alpha = " << format_double(config.alpha) << '\n'
        << "k = " << config.k << '\n'
        << "rho = " << format_double(config.rho) << '\n'
        << "epsilon = " << format_double(config.epsilon) << '\n'
        << "tau_w = " << format_double(config.tau_w) << '\n';
    if (config.max_iters)
        out << "max_iters = " << *config.max_iters << '\n';
    out << "line_search_c = " << format_double(config.line_search_c) << '\n'
        << "line_search_beta = " << format_double(config.line_search_beta) << '\n'
        << "seed = " << config.seed << '\n'
        << "algorithm = " << to_string(config.algorithm) << '\n';
}

} // namespace pmvsk
