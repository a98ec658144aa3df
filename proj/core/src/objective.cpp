#include "pmvsk/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "pmvsk/sparsity.hpp"

namespace pmvsk
{

namespace
{

void require_match(const MomentModel& model, const Eigen::VectorXd& w)
{
    if (w.size() != model.assets())
        throw std::invalid_argument("weight vector has length " + std::to_string(w.size()) + ", model has " +
                                    std::to_string(model.assets()) + " assets");
}

ObjectiveValue combine_values(const ModelParams& p, double m1, double m2, double m3, double m4)
{
    const auto& l = p.lambdas;
    return {-l.mean * m1 + l.variance * m2, -l.skewness * m3 + l.kurtosis * m4};
}

} // namespace

void validate(const ModelParams& params, Index n_assets)
{
    const auto& l = params.lambdas;
    for (double v : {l.mean, l.variance, l.skewness, l.kurtosis})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("moment weights must be finite and non-negative");
    if (!(params.alpha > 0.0))
        throw std::invalid_argument("alpha must be positive");
    if (params.k < 1 || params.k > n_assets)
        throw std::invalid_argument("k outside [1, N]");
    if (!(params.rho >= 0.0) || !(params.tau_dc >= 0.0) || !(params.tau_w >= 0.0))
        throw std::invalid_argument("rho, tau_dc and tau_w must be non-negative");
}

ModelParams make_params(const SolverConfig& config, const MomentModel& model)
{
    check_dimensions(model);
    validate(config, model.assets());
    ModelParams params;
    params.lambdas = resolve_lambdas(config);
    params.alpha = config.alpha;
    params.k = config.k;
    params.rho = config.rho;
    params.tau_w = config.tau_w;
    params.tau_dc = tau_dc_bound(model, params);
    return params;
}

ObjectiveValue eval_f_split(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w)
{
    const auto pm = portfolio_moments(model, w);
    return combine_values(params, pm.mean, pm.variance, pm.skewness, pm.kurtosis);
}

double eval_f(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w)
{
    return eval_f_split(model, params, w).total();
}

Evaluation evaluate(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w)
{
    require_match(model, w);
    const auto& l = params.lambdas;
    const Eigen::VectorXd sigma_w = model.sigma * w;
    const Eigen::VectorXd phi_ww = coskewness_product(model, w);
    const Eigen::VectorXd psi_www = cokurtosis_product(model, w);

    Evaluation e;
    e.value = combine_values(params, w.dot(model.mu), w.dot(sigma_w), w.dot(phi_ww), w.dot(psi_www));
    e.gradient.convex = -l.mean * model.mu + (2.0 * l.variance) * sigma_w;
    e.gradient.nonconvex = (-3.0 * l.skewness) * phi_ww + (4.0 * l.kurtosis) * psi_www;
    return e;
}

ObjectiveGradient grad_f_split(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w)
{
    return evaluate(model, params, w).gradient;
}

Eigen::VectorXd grad_f(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w)
{
    return grad_f_split(model, params, w).total();
}

Eigen::MatrixXd hess_ncvx(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w)
{
    require_match(model, w);
    const auto& l = params.lambdas;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(model.assets(), model.assets());
    if (l.skewness != 0.0)
        h += (-6.0 * l.skewness) * coskewness_matrix(model, w);
    if (l.kurtosis != 0.0)
        h += (12.0 * l.kurtosis) * cokurtosis_matrix(model, w);

    const double scale = h.cwiseAbs().maxCoeff();
    const double defect = (h - h.transpose()).cwiseAbs().maxCoeff();
    if (defect > 1e-10 * scale)
        throw std::logic_error("non-convex Hessian asymmetric (defect " + std::to_string(defect / scale) +
                               " relative); tensors do not follow the flattening convention");
    return 0.5 * (h + h.transpose());
}

double tau_dc_bound(const MomentModel& model, const ModelParams& params)
{
    check_dimensions(model);
    const auto& l = params.lambdas;
    const double phi_rows = model.phi.cwiseAbs().rowwise().sum().maxCoeff();
    const double psi_rows = model.psi.cwiseAbs().rowwise().sum().maxCoeff();
    return 6.0 * params.alpha * l.skewness * phi_rows + 12.0 * params.alpha * params.alpha * l.kurtosis * psi_rows;
}

double eval_fp(const MomentModel& model, const ModelParams& params, const Eigen::VectorXd& w)
{
    return eval_f(model, params, w) + params.rho * cardinality_gap(w, params.k);
}

} // namespace pmvsk
