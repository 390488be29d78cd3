#include "prnf/problems.hpp"

#include "prnf/error.hpp"

#include <cmath>

namespace prnf {

namespace {
const double kPi = 3.14159265358979323846;

std::string u64_str(std::uint64_t v) { return std::to_string(v); }

std::string noise_desc(const NoiseSpec& n) {
    switch (n.family) {
    case NoiseFamily::Gaussian:
        return n.mode == ScaleMode::Homoscedastic ? "gaussian" : "gaussian-hetero";
    case NoiseFamily::Laplace:
        return n.mode == ScaleMode::Homoscedastic ? "laplace" : "laplace-hetero";
    case NoiseFamily::GaussianMixture2: return "mixture2";
    case NoiseFamily::CorrelatedGaussian: return "correlated";
    }
    return "?";
}
} // namespace

double f1d(Func1D f, double x) {
    switch (f) {
    case Func1D::Quadratic: return 4.0 * (x - 0.5) * (x - 0.5);
    case Func1D::Sin: return std::sin(2.0 * kPi * x);
    }
    throw Error("f1d: unknown function");
}

const char* f1d_name(Func1D f) {
    return f == Func1D::Quadratic ? "quadratic" : "sin";
}

std::vector<double> f1d_zeros(Func1D f) {
    if (f == Func1D::Quadratic) return {0.5};
    return {0.0, 0.5, 1.0};
}

ProblemHD make_problem_hd(int d, int s, std::uint64_t a_seed, NoiseSpec noise) {
    if (d < 1 || s < 1) throw Error("make_problem_hd: dimensions must be >= 1");
    if (noise.dim != s) throw ShapeError("make_problem_hd: noise dimension != s");
    ProblemHD p;
    p.d = d;
    p.s = s;
    p.a_seed = a_seed;
    p.noise = std::move(noise);
    Rng rng(a_seed);
    p.a = Matrix(s, d);
    double* ap = p.a.data();
    for (std::size_t i = 0; i < p.a.size(); ++i) ap[i] = rng.uniform01();
    return p;
}

std::vector<double> f_hd(const ProblemHD& p, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != p.d) throw ShapeError("f_hd: input length mismatch");
    std::vector<double> y(p.s, 0.0);
    for (int i = 0; i < p.s; ++i) {
        const double* row = p.a.row_ptr(i);
        double acc = 0.0;
        for (int j = 0; j < p.d; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

Dataset gen_1d(const Problem1D& p, long n, std::uint64_t seed) {
    if (n < 1) throw Error("gen_1d: n must be >= 1");
    Dataset d;
    d.cond = Matrix(static_cast<int>(n), 1);
    d.target = Matrix(static_cast<int>(n), 1);
    Rng rng(seed);
    std::vector<double> f(1), y(1);
    for (long i = 0; i < n; ++i) {
        const double x = rng.uniform01();
        f[0] = f1d(p.function, x);
        noise_sample_into(p.noise, Matrix(), f, rng, y.data());
        d.cond(static_cast<int>(i), 0) = x;
        d.target(static_cast<int>(i), 0) = y[0];
    }
    d.provenance = {
        {"kind", "1d"},
        {"function", f1d_name(p.function)},
        {"noise", noise_desc(p.noise)},
        {"noise_scale", std::to_string(p.noise.scale)},
        {"n", std::to_string(n)},
        {"seed", u64_str(seed)},
    };
    return d;
}

Dataset gen_hd(const ProblemHD& p, long n, std::uint64_t seed) {
    if (n < 1) throw Error("gen_hd: n must be >= 1");
    Dataset d;
    d.cond = Matrix(static_cast<int>(n), p.d);
    d.target = Matrix(static_cast<int>(n), p.s);
    Rng rng(seed);
    const Matrix chol = p.noise.family == NoiseFamily::CorrelatedGaussian
                            ? cholesky(p.noise.sigma)
                            : Matrix();
    std::vector<double> x(p.d), f(p.s);
    for (long i = 0; i < n; ++i) {
        for (int j = 0; j < p.d; ++j) x[j] = rng.uniform01();
        f = f_hd(p, x);
        double* xr = d.cond.row_ptr(static_cast<int>(i));
        for (int j = 0; j < p.d; ++j) xr[j] = x[j];
        noise_sample_into(p.noise, chol, f, rng, d.target.row_ptr(static_cast<int>(i)));
    }
    d.provenance = {
        {"kind", "hd"},
        {"d", std::to_string(p.d)},
        {"s", std::to_string(p.s)},
        {"a_seed", u64_str(p.a_seed)},
        {"noise", noise_desc(p.noise)},
        {"n", std::to_string(n)},
        {"seed", u64_str(seed)},
    };
    switch (p.noise.family) {
    case NoiseFamily::Gaussian:
    case NoiseFamily::Laplace:
        d.provenance["noise_scale"] = std::to_string(p.noise.scale);
        break;
    case NoiseFamily::GaussianMixture2:
        d.provenance["mix_mean"] = std::to_string(p.noise.mix_mean1.empty() ? 0.0 : p.noise.mix_mean1[0]);
        d.provenance["mix_var"] = std::to_string(p.noise.mix_var);
        break;
    case NoiseFamily::CorrelatedGaussian:
        d.provenance["sigma_seed"] = u64_str(p.noise.sigma_seed);
        break;
    }
    return d;
}

Dataset swap_direction(const Dataset& data) {
    Dataset out;
    out.cond = data.target;
    out.target = data.cond;
    out.direction = data.direction == Direction::Forward ? Direction::Inverse
                                                         : Direction::Forward;
    out.provenance = data.provenance;
    out.provenance["swapped"] = "1";
    return out;
}

std::vector<double> true_conditional_1d(const Problem1D& p, double x, const GridSpec& grid) {
    if (grid.count.size() != 1) throw ShapeError("true_conditional_1d: grid must be 1-D");
    const std::vector<double> f{f1d(p.function, x)};
    std::vector<double> lp(grid.count[0]);
    std::vector<double> y(1);
    for (long i = 0; i < grid.count[0]; ++i) {
        y[0] = grid.point(0, i);
        lp[i] = noise_logpdf(p.noise, f, y);
    }
    return lp;
}

std::vector<double> true_inverse_1d(const Problem1D& p, double y, const GridSpec& grid) {
    if (grid.count.size() != 1) throw ShapeError("true_inverse_1d: grid must be 1-D");
    const long n = grid.count[0];
    std::vector<double> lp(n);
    const std::vector<double> yv{y};
    std::vector<double> f(1);
    double emax = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < n; ++i) {
        const double x = grid.point(0, i);
        f[0] = f1d(p.function, x);
        lp[i] = noise_logpdf(p.noise, f, yv); // uniform prior on [0,1]
        emax = std::max(emax, lp[i]);
    }
    if (emax == -std::numeric_limits<double>::infinity())
        throw DegenerateDensityError("true_inverse_1d: y is unreachable");
    double acc = 0.0;
    for (long i = 0; i < n; ++i) acc += std::exp(lp[i] - emax);
    const double log_norm = emax + std::log(acc * grid.step(0));
    if (log_norm < std::log(1e-300))
        throw DegenerateDensityError("true_inverse_1d: normalizer below 1e-300");
    for (long i = 0; i < n; ++i) lp[i] -= log_norm;
    return lp;
}

} // namespace prnf
