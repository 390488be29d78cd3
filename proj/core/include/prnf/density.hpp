#pragma once

#include "prnf/matrix.hpp"
#include "prnf/rng.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace prnf {

enum class NoiseFamily { Gaussian, Laplace, GaussianMixture2, CorrelatedGaussian };
enum class ScaleMode { Homoscedastic, Heteroscedastic };

// Additive noise law for y = f(x) + ε. `scale` is the standard deviation for
// Gaussian noise and the scale b for Laplace; heteroscedastic mode reads it
// as the coefficient in scale·|f(x)| per coordinate. Multivariate families
// use an explicit covariance: `sigma` for CorrelatedGaussian and isotropic
// variance `mix_var` for the two mixture components.
struct NoiseSpec {
    NoiseFamily family = NoiseFamily::Gaussian;
    ScaleMode mode = ScaleMode::Homoscedastic;
    int dim = 1;
    double scale = 0.15;
    Matrix sigma;                              // CorrelatedGaussian only
    std::uint64_t sigma_seed = 0;              // seed Σ was built from, for provenance
    std::vector<double> mix_mean1, mix_mean2;  // GaussianMixture2 only
    double mix_var = 0.1;
};

// Random covariance for the correlated family: entries of B drawn from N(0,1),
// then Sigma = B*B^T/s + 0.05*I to force positive definiteness (the construction,
// with its seed, is recorded in dataset provenance).
Matrix correlated_sigma(int s, std::uint64_t seed);

NoiseSpec noise_gaussian(double std_dev, ScaleMode mode = ScaleMode::Homoscedastic, int dim = 1);
NoiseSpec noise_laplace(double b, ScaleMode mode = ScaleMode::Homoscedastic);
NoiseSpec noise_mixture2(int dim, double component_mean, double component_var);
NoiseSpec noise_correlated(Matrix sigma);
NoiseSpec noise_correlated_seeded(int s, std::uint64_t sigma_seed);

// log p(y | center f_value) under the noise law.
double noise_logpdf(const NoiseSpec& spec, const std::vector<double>& f_value,
                    const std::vector<double>& y);

// One draw y = f_value + ε. The stateful form advances a caller-owned engine
// (and reuses a precomputed Cholesky factor for correlated noise).
std::vector<double> noise_sample(const NoiseSpec& spec, const std::vector<double>& f_value,
                                 std::uint64_t seed);
void noise_sample_into(const NoiseSpec& spec, const Matrix& chol_or_empty,
                       const std::vector<double>& f_value, Rng& rng, double* out);

// True per-coordinate std vector and covariance of ε at center f_value.
std::vector<double> noise_std(const NoiseSpec& spec, const std::vector<double>& f_value);
Matrix noise_cov(const NoiseSpec& spec, const std::vector<double>& f_value);

// Gaussian product-kernel density estimate.
struct KdeModel {
    Matrix samples;                 // n × dim
    std::vector<double> bandwidth;  // per coordinate, > 0
};

enum class BandwidthRule { Scott, Fixed };

// Scott: h_i = σ̂_i · n^(−1/(dim+4)). Fixed takes the bandwidths verbatim.
KdeModel kde_fit(const Matrix& samples, BandwidthRule rule,
                 const std::vector<double>& fixed_bandwidth = {});

// Log of the averaged product kernel, log-sum-exp inside, floored at −745.
double kde_logpdf(const KdeModel& kde, const double* point);

// Uniform evaluation grid; 1-D helpers use dimension 0.
struct GridSpec {
    std::vector<double> lo, hi;
    std::vector<long> count;

    static GridSpec linear(double lo, double hi, long count);
    // Midpoint of cell i along dimension dim.
    double point(int dim, long i) const;
    double step(int dim) const;
};

// Midpoint-rule KL ∫ p log(p/q) over a 1-D grid; p = 0 contributes 0, q is
// floored at 1e-300 where p > 0.
double kl_riemann_1d(const std::function<double(double)>& p_log,
                     const std::function<double(double)>& q_log, const GridSpec& grid);

double kl_gaussian_closed(const std::vector<double>& mean1, const Matrix& cov1,
                          const std::vector<double>& mean2, const Matrix& cov2);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// (1/n) Σ [p_log − q_log] at draws from p.
McEstimate kl_monte_carlo(const std::function<double(const double*)>& p_log,
                          const std::function<double(const double*)>& q_log,
                          const std::function<void(Rng&, double*)>& p_sampler,
                          int dim, long n, std::uint64_t seed);

} // namespace prnf
