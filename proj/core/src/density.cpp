#include "prnf/density.hpp"

#include "prnf/error.hpp"
#include "prnf/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace prnf {

namespace {
const double kLog2Pi = std::log(2.0 * 3.14159265358979323846);
const double kLogFloorQ = std::log(1e-300);
const double kKdeLogFloor = -745.0;

void check_dims(const NoiseSpec& spec, const std::vector<double>& f_value,
                const std::vector<double>& y) {
    if (static_cast<int>(f_value.size()) != spec.dim || static_cast<int>(y.size()) != spec.dim)
        throw ShapeError("noise: dimension mismatch");
}

double hetero_scale(const NoiseSpec& spec, double f_j) {
    const double s = spec.scale * std::fabs(f_j);
    if (s == 0.0)
        throw DegenerateDensityError("noise: heteroscedastic scale is zero at f(x) = 0");
    return s;
}

double coord_scale(const NoiseSpec& spec, double f_j) {
    return spec.mode == ScaleMode::Homoscedastic ? spec.scale : hetero_scale(spec, f_j);
}

double iso_gaussian_logpdf(const std::vector<double>& r, const std::vector<double>& mean,
                           double var) {
    double q = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double d = r[j] - mean[j];
        q += d * d;
    }
    const double n = static_cast<double>(r.size());
    return -0.5 * q / var - 0.5 * n * (kLog2Pi + std::log(var));
}
} // namespace

Matrix correlated_sigma(int s, std::uint64_t seed) {
    Rng rng(seed);
    Matrix b(s, s);
    double* p = b.data();
    for (std::size_t i = 0; i < b.size(); ++i) p[i] = rng.normal();
    Matrix sigma = matmul_nt(b, b);
    double* sp = sigma.data();
    for (std::size_t i = 0; i < sigma.size(); ++i) sp[i] /= s;
    for (int i = 0; i < s; ++i) sigma(i, i) += 0.05;
    return sigma;
}

NoiseSpec noise_gaussian(double std_dev, ScaleMode mode, int dim) {
    if (std_dev <= 0.0) throw Error("noise_gaussian: scale must be > 0");
    NoiseSpec n;
    n.family = NoiseFamily::Gaussian;
    n.mode = mode;
    n.dim = dim;
    n.scale = std_dev;
    return n;
}

NoiseSpec noise_laplace(double b, ScaleMode mode) {
    if (b <= 0.0) throw Error("noise_laplace: scale must be > 0");
    NoiseSpec n;
    n.family = NoiseFamily::Laplace;
    n.mode = mode;
    n.dim = 1;
    n.scale = b;
    return n;
}

NoiseSpec noise_mixture2(int dim, double component_mean, double component_var) {
    if (component_var <= 0.0) throw Error("noise_mixture2: variance must be > 0");
    NoiseSpec n;
    n.family = NoiseFamily::GaussianMixture2;
    n.dim = dim;
    n.mix_mean1.assign(dim, component_mean);
    n.mix_mean2.assign(dim, -component_mean);
    n.mix_var = component_var;
    return n;
}

NoiseSpec noise_correlated(Matrix sigma) {
    NoiseSpec n;
    n.family = NoiseFamily::CorrelatedGaussian;
    n.dim = sigma.rows();
    cholesky(sigma); // reject non-PD input now rather than at first use
    n.sigma = std::move(sigma);
    return n;
}

NoiseSpec noise_correlated_seeded(int s, std::uint64_t sigma_seed) {
    NoiseSpec n = noise_correlated(correlated_sigma(s, sigma_seed));
    n.sigma_seed = sigma_seed;
    return n;
}

double noise_logpdf(const NoiseSpec& spec, const std::vector<double>& f_value,
                    const std::vector<double>& y) {
    check_dims(spec, f_value, y);
    switch (spec.family) {
    case NoiseFamily::Gaussian: {
        double lp = 0.0;
        for (int j = 0; j < spec.dim; ++j) {
            const double s = coord_scale(spec, f_value[j]);
            const double z = (y[j] - f_value[j]) / s;
            lp += -0.5 * z * z - 0.5 * kLog2Pi - std::log(s);
        }
        return lp;
    }
    case NoiseFamily::Laplace: {
        double lp = 0.0;
        for (int j = 0; j < spec.dim; ++j) {
            const double b = coord_scale(spec, f_value[j]);
            lp += -std::log(2.0 * b) - std::fabs(y[j] - f_value[j]) / b;
        }
        return lp;
    }
    case NoiseFamily::GaussianMixture2: {
        std::vector<double> r(spec.dim);
        for (int j = 0; j < spec.dim; ++j) r[j] = y[j] - f_value[j];
        const double a = iso_gaussian_logpdf(r, spec.mix_mean1, spec.mix_var);
        const double b = iso_gaussian_logpdf(r, spec.mix_mean2, spec.mix_var);
        const double m = std::max(a, b);
        return std::log(0.5) + m + std::log(std::exp(a - m) + std::exp(b - m));
    }
    case NoiseFamily::CorrelatedGaussian: {
        const Matrix l = cholesky(spec.sigma);
        std::vector<double> r(spec.dim), u(spec.dim);
        for (int j = 0; j < spec.dim; ++j) r[j] = y[j] - f_value[j];
        forward_subst(l, r.data(), u.data());
        double q = 0.0, logdet = 0.0;
        for (int j = 0; j < spec.dim; ++j) {
            q += u[j] * u[j];
            logdet += std::log(l(j, j));
        }
        return -0.5 * q - 0.5 * spec.dim * kLog2Pi - logdet;
    }
    }
    throw Error("noise_logpdf: unknown family");
}

void noise_sample_into(const NoiseSpec& spec, const Matrix& chol_or_empty,
                       const std::vector<double>& f_value, Rng& rng, double* out) {
    switch (spec.family) {
    case NoiseFamily::Gaussian:
        for (int j = 0; j < spec.dim; ++j) {
            double s = spec.scale;
            if (spec.mode == ScaleMode::Heteroscedastic) {
                s = spec.scale * std::fabs(f_value[j]);
                if (s == 0.0) { // degenerate point: y = f(x) exactly, no draw
                    out[j] = f_value[j];
                    continue;
                }
            }
            out[j] = f_value[j] + s * rng.normal();
        }
        return;
    case NoiseFamily::Laplace:
        for (int j = 0; j < spec.dim; ++j) {
            double b = spec.scale;
            if (spec.mode == ScaleMode::Heteroscedastic) {
                b = spec.scale * std::fabs(f_value[j]);
                if (b == 0.0) {
                    out[j] = f_value[j];
                    continue;
                }
            }
            double u;
            do {
                u = rng.uniform01();
            } while (u == 0.0);
            const double w = u - 0.5;
            out[j] = f_value[j] - b * (w >= 0.0 ? 1.0 : -1.0) * std::log(1.0 - 2.0 * std::fabs(w));
        }
        return;
    case NoiseFamily::GaussianMixture2: {
        const std::vector<double>& mean =
            rng.uniform01() < 0.5 ? spec.mix_mean1 : spec.mix_mean2;
        const double sd = std::sqrt(spec.mix_var);
        for (int j = 0; j < spec.dim; ++j) out[j] = f_value[j] + mean[j] + sd * rng.normal();
        return;
    }
    case NoiseFamily::CorrelatedGaussian: {
        const Matrix l = chol_or_empty.empty() ? cholesky(spec.sigma) : chol_or_empty;
        std::vector<double> u(spec.dim);
        for (int j = 0; j < spec.dim; ++j) u[j] = rng.normal();
        for (int j = 0; j < spec.dim; ++j) {
            double e = 0.0;
            for (int k = 0; k <= j; ++k) e += l(j, k) * u[k];
            out[j] = f_value[j] + e;
        }
        return;
    }
    }
    throw Error("noise_sample: unknown family");
}

std::vector<double> noise_sample(const NoiseSpec& spec, const std::vector<double>& f_value,
                                 std::uint64_t seed) {
    if (static_cast<int>(f_value.size()) != spec.dim)
        throw ShapeError("noise_sample: dimension mismatch");
    Rng rng(seed);
    std::vector<double> out(spec.dim);
    noise_sample_into(spec, Matrix(), f_value, rng, out.data());
    return out;
}

std::vector<double> noise_std(const NoiseSpec& spec, const std::vector<double>& f_value) {
    std::vector<double> s(spec.dim);
    switch (spec.family) {
    case NoiseFamily::Gaussian:
        for (int j = 0; j < spec.dim; ++j)
            s[j] = spec.mode == ScaleMode::Homoscedastic ? spec.scale
                                                         : spec.scale * std::fabs(f_value[j]);
        return s;
    case NoiseFamily::Laplace:
        for (int j = 0; j < spec.dim; ++j) {
            const double b = spec.mode == ScaleMode::Homoscedastic
                                 ? spec.scale
                                 : spec.scale * std::fabs(f_value[j]);
            s[j] = b * std::sqrt(2.0);
        }
        return s;
    case NoiseFamily::GaussianMixture2:
        for (int j = 0; j < spec.dim; ++j) {
            const double d = 0.5 * (spec.mix_mean1[j] - spec.mix_mean2[j]);
            s[j] = std::sqrt(spec.mix_var + d * d);
        }
        return s;
    case NoiseFamily::CorrelatedGaussian:
        for (int j = 0; j < spec.dim; ++j) s[j] = std::sqrt(spec.sigma(j, j));
        return s;
    }
    throw Error("noise_std: unknown family");
}

Matrix noise_cov(const NoiseSpec& spec, const std::vector<double>& f_value) {
    Matrix c(spec.dim, spec.dim);
    switch (spec.family) {
    case NoiseFamily::Gaussian:
    case NoiseFamily::Laplace: {
        const std::vector<double> s = noise_std(spec, f_value);
        for (int j = 0; j < spec.dim; ++j) c(j, j) = s[j] * s[j];
        return c;
    }
    case NoiseFamily::GaussianMixture2: {
        for (int i = 0; i < spec.dim; ++i) {
            const double di = 0.5 * (spec.mix_mean1[i] - spec.mix_mean2[i]);
            for (int j = 0; j < spec.dim; ++j) {
                const double dj = 0.5 * (spec.mix_mean1[j] - spec.mix_mean2[j]);
                c(i, j) = di * dj + (i == j ? spec.mix_var : 0.0);
            }
        }
        return c;
    }
    case NoiseFamily::CorrelatedGaussian:
        return spec.sigma;
    }
    throw Error("noise_cov: unknown family");
}

KdeModel kde_fit(const Matrix& samples, BandwidthRule rule,
                 const std::vector<double>& fixed_bandwidth) {
    if (samples.rows() < 2) throw Error("kde_fit: need >= 2 samples");
    KdeModel kde;
    kde.samples = samples;
    const int dim = samples.cols();
    if (rule == BandwidthRule::Fixed) {
        if (static_cast<int>(fixed_bandwidth.size()) != dim)
            throw ShapeError("kde_fit: fixed bandwidth length mismatch");
        for (double h : fixed_bandwidth) {
            if (h <= 0.0) throw DegenerateDensityError("kde_fit: bandwidth must be > 0");
        }
        kde.bandwidth = fixed_bandwidth;
        return kde;
    }
    std::vector<double> mean, sd;
    column_mean_std(samples, mean, sd);
    const double factor = std::pow(static_cast<double>(samples.rows()),
                                   -1.0 / (dim + 4));
    kde.bandwidth.resize(dim);
    for (int j = 0; j < dim; ++j) {
        if (sd[j] == 0.0)
            throw DegenerateDensityError("kde_fit: zero sample variance in a coordinate");
        kde.bandwidth[j] = sd[j] * factor;
    }
    return kde;
}

double kde_logpdf(const KdeModel& kde, const double* point) {
    const int n = kde.samples.rows();
    const int dim = kde.samples.cols();
    double norm = -std::log(static_cast<double>(n)) - 0.5 * dim * kLog2Pi;
    for (double h : kde.bandwidth) norm -= std::log(h);

    // Two passes: max exponent, then the shifted sum.
    double emax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        const double* row = kde.samples.row_ptr(k);
        double q = 0.0;
        for (int j = 0; j < dim; ++j) {
            const double z = (point[j] - row[j]) / kde.bandwidth[j];
            q += z * z;
        }
        emax = std::max(emax, -0.5 * q);
    }
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const double* row = kde.samples.row_ptr(k);
        double q = 0.0;
        for (int j = 0; j < dim; ++j) {
            const double z = (point[j] - row[j]) / kde.bandwidth[j];
            q += z * z;
        }
        acc += std::exp(-0.5 * q - emax);
    }
    const double lp = norm + emax + std::log(acc);
    return std::max(lp, kKdeLogFloor);
}

GridSpec GridSpec::linear(double lo, double hi, long count) {
    if (hi <= lo || count < 2) throw Error("GridSpec: need hi > lo and count >= 2");
    GridSpec g;
    g.lo = {lo};
    g.hi = {hi};
    g.count = {count};
    return g;
}

double GridSpec::step(int dim) const { return (hi[dim] - lo[dim]) / count[dim]; }

double GridSpec::point(int dim, long i) const { return lo[dim] + (i + 0.5) * step(dim); }

double kl_riemann_1d(const std::function<double(double)>& p_log,
                     const std::function<double(double)>& q_log, const GridSpec& grid) {
    if (grid.count.size() != 1) throw ShapeError("kl_riemann_1d: grid must be 1-D");
    double kl = 0.0;
    for (long i = 0; i < grid.count[0]; ++i) {
        const double y = grid.point(0, i);
        const double pl = p_log(y);
        const double p = std::exp(pl);
        if (p == 0.0) continue;
        const double ql = std::max(q_log(y), kLogFloorQ);
        kl += p * (pl - ql);
    }
    return kl * grid.step(0);
}

double kl_gaussian_closed(const std::vector<double>& mean1, const Matrix& cov1,
                          const std::vector<double>& mean2, const Matrix& cov2) {
    const int k = cov1.rows();
    if (cov2.rows() != k || static_cast<int>(mean1.size()) != k ||
        static_cast<int>(mean2.size()) != k)
        throw ShapeError("kl_gaussian_closed: dimension mismatch");
    const Matrix inv2 = spd_inverse(cov2);
    double trace = 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) trace += inv2(i, j) * cov1(j, i);
    double quad = 0.0;
    for (int i = 0; i < k; ++i) {
        double row = 0.0;
        for (int j = 0; j < k; ++j) row += inv2(i, j) * (mean2[j] - mean1[j]);
        quad += (mean2[i] - mean1[i]) * row;
    }
    return 0.5 * (trace + quad - k + log_det_spd(cov2) - log_det_spd(cov1));
}

McEstimate kl_monte_carlo(const std::function<double(const double*)>& p_log,
                          const std::function<double(const double*)>& q_log,
                          const std::function<void(Rng&, double*)>& p_sampler,
                          int dim, long n, std::uint64_t seed) {
    if (n < 1) throw Error("kl_monte_carlo: n must be >= 1");
    Rng rng(seed);
    std::vector<double> x(dim);
    double mean = 0.0, m2 = 0.0;
    for (long i = 0; i < n; ++i) {
        p_sampler(rng, x.data());
        const double v = p_log(x.data()) - q_log(x.data());
        const double delta = v - mean;
        mean += delta / (i + 1);
        m2 += delta * (v - mean);
    }
    McEstimate e;
    e.value = mean;
    if (n > 1) e.std_error = std::sqrt(m2 / (n - 1) / n);
    return e;
}

} // namespace prnf
