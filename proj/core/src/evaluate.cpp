#include "prnf/evaluate.hpp"

#include "prnf/error.hpp"
#include "prnf/rng.hpp"

#include <algorithm>
#include <cmath>

namespace prnf {

namespace {
const double kLogFloorQ = std::log(1e-300);

double max_abs_f(Func1D f) {
    double m = 0.0;
    for (int i = 0; i <= 1000; ++i) m = std::max(m, std::fabs(f1d(f, i / 1000.0)));
    return m;
}

double max_noise_scale(const Problem1D& p) {
    if (p.noise.mode == ScaleMode::Homoscedastic) return p.noise.scale;
    return p.noise.scale * max_abs_f(p.function);
}
} // namespace

CondSampler model_sampler(const PrNfModel& m) {
    return [&m](const std::vector<double>& cond, long n, std::uint64_t seed) {
        return sample_conditional(m, cond, n, seed);
    };
}

CondSampler exact_sampler_1d(const Problem1D& p) {
    return [p](const std::vector<double>& cond, long n, std::uint64_t seed) {
        Rng rng(seed);
        const std::vector<double> f{f1d(p.function, cond.at(0))};
        Matrix out(static_cast<int>(n), 1);
        for (long i = 0; i < n; ++i)
            noise_sample_into(p.noise, Matrix(), f, rng, out.row_ptr(static_cast<int>(i)));
        return out;
    };
}

CondSampler exact_sampler_hd(const ProblemHD& p) {
    return [p](const std::vector<double>& cond, long n, std::uint64_t seed) {
        Rng rng(seed);
        const std::vector<double> f = f_hd(p, cond);
        const Matrix chol = p.noise.family == NoiseFamily::CorrelatedGaussian
                                ? cholesky(p.noise.sigma)
                                : Matrix();
        Matrix out(static_cast<int>(n), p.s);
        for (long i = 0; i < n; ++i)
            noise_sample_into(p.noise, chol, f, rng, out.row_ptr(static_cast<int>(i)));
        return out;
    };
}

GridSpec default_y_grid(const Problem1D& p, const Matrix& targets, long count) {
    if (targets.cols() != 1 || targets.rows() < 1)
        throw ShapeError("default_y_grid: targets must be a nonempty column");
    double lo = targets(0, 0), hi = targets(0, 0);
    for (int i = 1; i < targets.rows(); ++i) {
        lo = std::min(lo, targets(i, 0));
        hi = std::max(hi, targets(i, 0));
    }
    const double pad = 4.0 * max_noise_scale(p);
    return GridSpec::linear(lo - pad, hi + pad, count);
}

std::vector<Eval1DPoint> eval_forward_1d(const CondSampler& sampler, const Problem1D& p,
                                         const std::vector<double>& xs, long n_samples,
                                         const GridSpec& y_grid, std::uint64_t seed) {
    const std::vector<double> zeros =
        p.noise.mode == ScaleMode::Heteroscedastic ? f1d_zeros(p.function)
                                                   : std::vector<double>{};
    std::vector<Eval1DPoint> out;
    out.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Eval1DPoint pt;
        pt.x = xs[i];
        for (double z : zeros) {
            if (std::fabs(pt.x - z) < 1e-3) pt.excluded = true;
        }
        if (pt.excluded) {
            out.push_back(pt);
            continue;
        }
        const Matrix samples = sampler({pt.x}, n_samples, split_seed(seed, i));
        const KdeModel kde = kde_fit(samples, BandwidthRule::Scott);
        const std::vector<double> f{f1d(p.function, pt.x)};
        auto p_log = [&](double y) {
            return noise_logpdf(p.noise, f, std::vector<double>{y});
        };
        auto q_log = [&](double y) { return kde_logpdf(kde, &y); };
        pt.kl = kl_riemann_1d(p_log, q_log, y_grid);
        out.push_back(pt);
    }
    return out;
}

std::vector<EvalInvPoint> eval_inverse_1d(const CondSampler& sampler, const Problem1D& p,
                                          const std::vector<double>& ys, long n_samples,
                                          const GridSpec& x_grid, std::uint64_t seed) {
    if (x_grid.count.size() != 1) throw ShapeError("eval_inverse_1d: grid must be 1-D");
    std::vector<EvalInvPoint> out;
    out.reserve(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
        EvalInvPoint pt;
        pt.y = ys[i];
        pt.oracle_log = true_inverse_1d(p, pt.y, x_grid);
        const Matrix samples = sampler({pt.y}, n_samples, split_seed(seed, 500 + i));
        const KdeModel kde = kde_fit(samples, BandwidthRule::Scott);
        const long n = x_grid.count[0];
        pt.kde_log.resize(n);
        double kl = 0.0;
        for (long k = 0; k < n; ++k) {
            const double x = x_grid.point(0, k);
            pt.kde_log[k] = kde_logpdf(kde, &x);
            const double pv = std::exp(pt.oracle_log[k]);
            if (pv == 0.0) continue;
            kl += pv * (pt.oracle_log[k] - std::max(pt.kde_log[k], kLogFloorQ));
        }
        pt.kl = kl * x_grid.step(0);
        out.push_back(std::move(pt));
    }
    return out;
}

std::vector<long> find_local_maxima(const std::vector<double>& values,
                                    double min_prominence_frac) {
    const long n = static_cast<long>(values.size());
    std::vector<long> peaks;
    if (n < 3) return peaks;
    double vmax = values[0];
    for (double v : values) vmax = std::max(vmax, v);

    for (long i = 1; i + 1 < n; ++i) {
        if (!(values[i] > values[i - 1] && values[i] >= values[i + 1])) continue;
        // Prominence: drop to the lowest saddle separating this peak from any
        // higher ground on either side (side minimum if nothing higher).
        double side_ref = -std::numeric_limits<double>::infinity();
        for (int dir = -1; dir <= 1; dir += 2) {
            double valley = values[i];
            for (long j = i + dir; j >= 0 && j < n; j += dir) {
                valley = std::min(valley, values[j]);
                if (values[j] > values[i]) break;
            }
            side_ref = std::max(side_ref, valley);
        }
        const double prominence = values[i] - side_ref;
        if (prominence > min_prominence_frac * vmax) peaks.push_back(i);
    }
    return peaks;
}

namespace {

void sample_moments(const Matrix& samples, std::vector<double>& mean,
                    std::vector<double>& sd, Matrix& cov) {
    const int n = samples.rows(), s = samples.cols();
    column_mean_std(samples, mean, sd);
    cov = Matrix(s, s);
    for (int r = 0; r < n; ++r) {
        const double* row = samples.row_ptr(r);
        for (int i = 0; i < s; ++i) {
            const double di = row[i] - mean[i];
            for (int j = 0; j <= i; ++j) cov(i, j) += di * (row[j] - mean[j]);
        }
    }
    for (int i = 0; i < s; ++i)
        for (int j = 0; j <= i; ++j) {
            cov(i, j) /= n;
            cov(j, i) = cov(i, j);
        }
}

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

HdEval eval_hd(const CondSampler& sampler, const ProblemHD& p, long n_test, long n_samples,
               std::uint64_t seed, const CondLogPdf& model_logpdf) {
    if (n_test < 1 || n_samples < 2) throw Error("eval_hd: need n_test >= 1, n_samples >= 2");
    const bool mixture = p.noise.family == NoiseFamily::GaussianMixture2;
    if (mixture && !model_logpdf)
        throw Error("eval_hd: mixture-noise KL needs a model log-density");

    HdEval out;
    out.has_cov = p.noise.family == NoiseFamily::CorrelatedGaussian;
    out.kl_estimator = mixture ? "monte-carlo-mixture" : "gaussian-closed-form";
    out.points.reserve(n_test);

    Rng point_rng(split_seed(seed, 0));
    const Matrix noise_chol = p.noise.family == NoiseFamily::CorrelatedGaussian
                                  ? cholesky(p.noise.sigma)
                                  : Matrix();

    for (long t = 0; t < n_test; ++t) {
        HdPoint pt;
        pt.x.resize(p.d);
        for (int j = 0; j < p.d; ++j) pt.x[j] = point_rng.uniform01();

        const std::vector<double> f = f_hd(p, pt.x);
        std::vector<double> mu_true = f;
        if (mixture) {
            for (int j = 0; j < p.s; ++j)
                mu_true[j] += 0.5 * (p.noise.mix_mean1[j] + p.noise.mix_mean2[j]);
        }
        const std::vector<double> sd_true = noise_std(p.noise, f);
        const Matrix cov_true = noise_cov(p.noise, f);

        const Matrix samples = sampler(pt.x, n_samples, split_seed(seed, 1000 + t));
        std::vector<double> mu_hat, sd_hat;
        Matrix cov_hat;
        sample_moments(samples, mu_hat, sd_hat, cov_hat);

        std::vector<double> dmu(p.s), dsd(p.s);
        for (int j = 0; j < p.s; ++j) {
            dmu[j] = mu_true[j] - mu_hat[j];
            dsd[j] = sd_true[j] - sd_hat[j];
        }
        pt.err_mean = l2_norm(dmu) / l2_norm(mu_true);
        pt.err_std = l2_norm(dsd) / std::sqrt(static_cast<double>(p.s));
        double fro = 0.0;
        for (int i = 0; i < p.s; ++i)
            for (int j = 0; j < p.s; ++j) {
                const double d = cov_true(i, j) - cov_hat(i, j);
                fro += d * d;
            }
        pt.err_cov = std::sqrt(fro) / p.s;

        if (mixture) {
            auto p_log = [&](const double* y) {
                return noise_logpdf(p.noise, f, std::vector<double>(y, y + p.s));
            };
            auto q_log = [&](const double* y) { return model_logpdf(pt.x, y); };
            auto p_draw = [&](Rng& rng, double* y) {
                noise_sample_into(p.noise, noise_chol, f, rng, y);
            };
            const McEstimate e = kl_monte_carlo(p_log, q_log, p_draw, p.s, n_samples,
                                                split_seed(seed, 2000 + t));
            pt.kl = e.value;
            pt.kl_se = e.std_error;
        } else {
            pt.kl = kl_gaussian_closed(mu_true, cov_true, mu_hat, cov_hat);
        }
        out.points.push_back(std::move(pt));
    }

    for (const HdPoint& pt : out.points) {
        out.err_mean += pt.err_mean;
        out.err_std += pt.err_std;
        out.err_cov += pt.err_cov;
        out.avg_kl += pt.kl;
    }
    const double inv = 1.0 / static_cast<double>(n_test);
    out.err_mean *= inv;
    out.err_std *= inv;
    out.err_cov *= inv;
    out.avg_kl *= inv;
    return out;
}

} // namespace prnf
