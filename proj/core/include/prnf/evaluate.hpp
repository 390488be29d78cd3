#pragma once

#include "prnf/flow.hpp"
#include "prnf/problems.hpp"

#include <functional>
#include <string>

namespace prnf {

// Draws n conditional samples (rows) given a conditioning point. Lets the
// metric pipelines run on either a trained model or an exact sampler of the
// true conditional (the Monte Carlo noise-floor oracle).
using CondSampler =
    std::function<Matrix(const std::vector<double>& cond, long n, std::uint64_t seed)>;

CondSampler model_sampler(const PrNfModel& m);
CondSampler exact_sampler_1d(const Problem1D& p);
CondSampler exact_sampler_hd(const ProblemHD& p);

// Evaluation y-grid: [min − 4·max_scale, max + 4·max_scale] over the observed
// targets, where max_scale is the largest noise scale over the domain.
GridSpec default_y_grid(const Problem1D& p, const Matrix& targets, long count = 2000);

struct Eval1DPoint {
    double x = 0.0;
    double kl = 0.0;
    bool excluded = false; // heteroscedastic zero of f within 1e-3
};

// Per-x KL(true p(y|x) ‖ KDE of sampler draws) on the y-grid.
std::vector<Eval1DPoint> eval_forward_1d(const CondSampler& sampler, const Problem1D& p,
                                         const std::vector<double>& xs, long n_samples,
                                         const GridSpec& y_grid, std::uint64_t seed);

struct EvalInvPoint {
    double y = 0.0;
    double kl = 0.0;
    std::vector<double> oracle_log; // log p(x|y) at the x-grid cells
    std::vector<double> kde_log;    // log KDE of sampler draws at the cells
};

// Inverse direction: the sampler conditions on y and draws x.
std::vector<EvalInvPoint> eval_inverse_1d(const CondSampler& sampler, const Problem1D& p,
                                          const std::vector<double>& ys, long n_samples,
                                          const GridSpec& x_grid, std::uint64_t seed);

// Indices of local maxima of a sampled density whose prominence exceeds
// min_prominence_frac · max(values).
std::vector<long> find_local_maxima(const std::vector<double>& values,
                                    double min_prominence_frac);

struct HdPoint {
    std::vector<double> x;
    double err_mean = 0.0;
    double err_std = 0.0;
    double err_cov = 0.0;
    double kl = 0.0;
    double kl_se = 0.0; // Monte Carlo path only
};

struct HdEval {
    std::vector<HdPoint> points;
    double err_mean = 0.0, err_std = 0.0, err_cov = 0.0, avg_kl = 0.0;
    std::string kl_estimator; // "gaussian-closed-form" or "monte-carlo-mixture"
    bool has_cov = false;     // correlated noise: Err_cov is the headline metric
};

// High-dim metrics: per test point x ~ U[0,1]^d, err_mean = ||mu_true - mu_hat||
// / ||mu_true||, err_std = ||sigma_true - sigma_hat|| / sqrt(s), err_cov =
// ||Sigma_true - Sigma_hat||_F / s; avg_kl by closed-form Gaussian KL against the
// moment-matched sample fit, or Monte Carlo against model_logpdf for mixture
// noise (a grid quadrature in 20 dimensions is infeasible).
using CondLogPdf = std::function<double(const std::vector<double>& cond, const double* y)>;

HdEval eval_hd(const CondSampler& sampler, const ProblemHD& p, long n_test, long n_samples,
               std::uint64_t seed, const CondLogPdf& model_logpdf = nullptr);

} // namespace prnf
