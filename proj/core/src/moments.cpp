#include "pmvsk/moments.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace pmvsk
{

namespace
{

std::vector<Index> nonzero_indices(const Eigen::VectorXd& w)
{
    std::vector<Index> nz;
    nz.reserve(static_cast<std::size_t>(w.size()));
    for (Index i = 0; i < w.size(); ++i)
        if (w[i] != 0.0)
            nz.push_back(i);
    return nz;
}

void require_length(const MomentModel& model, const Eigen::VectorXd& w)
{
    if (w.size() != model.assets())
        throw std::invalid_argument("weight vector has length " + std::to_string(w.size()) + ", model has " +
                                    std::to_string(model.assets()) + " assets");
}

constexpr char kMagic[8] = {'P', 'M', 'V', 'S', 'K', 'M', 'O', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

void write_row_major(std::ofstream& out, const Eigen::MatrixXd& m)
{
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
}

Eigen::MatrixXd read_row_major(std::ifstream& in, Index rows, Index cols)
{
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (!in)
        throw std::runtime_error("moment dump is truncated");
    return rm;
}

} // namespace

Index col_index(Index n, Index j, Index l)
{
    if (j < 0 || j >= n || l < 0 || l >= n)
        throw std::out_of_range("co-skewness index out of range");
    return j * n + l;
}

Index col_index(Index n, Index j, Index l, Index m)
{
    if (j < 0 || j >= n || l < 0 || l >= n || m < 0 || m >= n)
        throw std::out_of_range("co-kurtosis index out of range");
    return (j * n + l) * n + m;
}

MomentModel estimate_moments(const ReturnPanel& panel)
{
    validate(panel);
    return estimate_moments(panel.returns);
}

MomentModel estimate_moments(const Eigen::MatrixXd& returns)
{
    const Index t = returns.rows();
    const Index n = returns.cols();
    if (t < 2)
        throw std::invalid_argument("moment estimation needs at least two periods");
    if (n < 1)
        throw std::invalid_argument("moment estimation needs at least one asset");
    if (!returns.allFinite())
        throw std::invalid_argument("return panel contains non-finite entries");

    const double inv_t = 1.0 / static_cast<double>(t);
    MomentModel model;
    model.mu = returns.colwise().mean().transpose();
    const Eigen::MatrixXd r = returns.rowwise() - model.mu.transpose();

    model.sigma = (r.transpose() * r) * inv_t;

    model.phi.resize(n, n * n);
    for (Index j = 0; j < n; ++j)
        model.phi.middleCols(j * n, n).noalias() = (r.transpose() * (r.col(j).asDiagonal() * r)) * inv_t;

    // psi blocks (j, l) and (l, j) coincide; compute each unordered pair once.
    model.psi.resize(n, n * n * n);
    Eigen::MatrixXd weighted(t, n);
    for (Index j = 0; j < n; ++j)
    {
        for (Index l = j; l < n; ++l)
        {
            weighted.noalias() = r.col(j).cwiseProduct(r.col(l)).asDiagonal() * r;
            auto block = model.psi.middleCols(col_index(n, j, l, 0), n);
            block.noalias() = (r.transpose() * weighted) * inv_t;
            if (l != j)
                model.psi.middleCols(col_index(n, l, j, 0), n) = block;
        }
    }
    return model;
}

void check_dimensions(const MomentModel& model)
{
    const Index n = model.assets();
    if (n < 1 || model.sigma.rows() != n || model.sigma.cols() != n || model.phi.rows() != n ||
        model.phi.cols() != n * n || model.psi.rows() != n || model.psi.cols() != n * n * n)
        throw std::invalid_argument("moment model has inconsistent dimensions");
}

Eigen::VectorXd coskewness_product(const MomentModel& model, const Eigen::VectorXd& w)
{
    require_length(model, w);
    const Index n = model.assets();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    const auto nz = nonzero_indices(w);
    for (Index j : nz)
        for (Index l : nz)
            out.noalias() += (w[j] * w[l]) * model.phi.col(col_index(n, j, l));
    return out;
}

Eigen::VectorXd cokurtosis_product(const MomentModel& model, const Eigen::VectorXd& w)
{
    require_length(model, w);
    const Index n = model.assets();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    const auto nz = nonzero_indices(w);
    const bool dense = static_cast<Index>(nz.size()) == n;
    for (Index j : nz)
    {
        for (Index l : nz)
        {
            const double c = w[j] * w[l];
            const Index base = col_index(n, j, l, 0);
            if (dense)
            {
                out.noalias() += model.psi.middleCols(base, n) * (c * w);
            }
            else
            {
                for (Index m : nz)
                    out.noalias() += (c * w[m]) * model.psi.col(base + m);
            }
        }
    }
    return out;
}

Eigen::MatrixXd coskewness_matrix(const MomentModel& model, const Eigen::VectorXd& w)
{
    require_length(model, w);
    const Index n = model.assets();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    const auto nz = nonzero_indices(w);
    for (Index j = 0; j < n; ++j)
        for (Index l : nz)
            out.col(j).noalias() += w[l] * model.phi.col(col_index(n, j, l));
    return out;
}

Eigen::MatrixXd cokurtosis_matrix(const MomentModel& model, const Eigen::VectorXd& w)
{
    require_length(model, w);
    const Index n = model.assets();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    const auto nz = nonzero_indices(w);
    const bool dense = static_cast<Index>(nz.size()) == n;
    for (Index j = 0; j < n; ++j)
    {
        for (Index l : nz)
        {
            const Index base = col_index(n, j, l, 0);
            if (dense)
            {
                out.col(j).noalias() += model.psi.middleCols(base, n) * (w[l] * w);
            }
            else
            {
                for (Index m : nz)
                    out.col(j).noalias() += (w[l] * w[m]) * model.psi.col(base + m);
            }
        }
    }
    return out;
}

PortfolioMoments portfolio_moments(const MomentModel& model, const Eigen::VectorXd& w)
{
    require_length(model, w);
    PortfolioMoments pm;
    pm.mean = w.dot(model.mu);
    pm.variance = w.dot(model.sigma * w);
    pm.skewness = w.dot(coskewness_product(model, w));
    pm.kurtosis = w.dot(cokurtosis_product(model, w));
    return pm;
}

void save_moment_model(const MomentModel& model, const std::filesystem::path& path)
{
    static_assert(std::endian::native == std::endian::little, "moment dump assumes a little-endian host");
    check_dimensions(model);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write moment dump '" + path.string() + "'");
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t version = kFormatVersion;
    const std::uint64_t n = static_cast<std::uint64_t>(model.assets());
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(model.mu.data()),
              static_cast<std::streamsize>(model.mu.size() * sizeof(double)));
    write_row_major(out, model.sigma);
    write_row_major(out, model.phi);
    write_row_major(out, model.psi);
    if (!out)
        throw std::runtime_error("failed writing moment dump '" + path.string() + "'");
}

MomentModel load_moment_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open moment dump '" + path.string() + "'");
    char magic[8];
    std::uint32_t version = 0;
    std::uint64_t n64 = 0;
    in.read(magic, sizeof(magic));
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&n64), sizeof(n64));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("'" + path.string() + "' is not a moment dump");
    if (version != kFormatVersion)
        throw std::runtime_error("unsupported moment dump version " + std::to_string(version));
    if (n64 == 0 || n64 > 1000)
        throw std::runtime_error("moment dump has implausible dimension " + std::to_string(n64));
    const Index n = static_cast<Index>(n64);

    MomentModel model;
    model.mu.resize(n);
    in.read(reinterpret_cast<char*>(model.mu.data()), static_cast<std::streamsize>(n * sizeof(double)));
    model.sigma = read_row_major(in, n, n);
    model.phi = read_row_major(in, n, n * n);
    model.psi = read_row_major(in, n, n * n * n);
    return model;
}

} // namespace pmvsk
