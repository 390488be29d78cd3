#include "prnf/flow.hpp"

#include "prnf/error.hpp"
#include "prnf/rng.hpp"

#include <cmath>

namespace prnf {

namespace {
const double kLog2Pi = std::log(2.0 * 3.14159265358979323846);

Matrix hcat_values(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), a.cols() + b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        double* row = out.row_ptr(i);
        const double* ar = a.row_ptr(i);
        const double* br = b.row_ptr(i);
        for (int j = 0; j < a.cols(); ++j) row[j] = ar[j];
        for (int j = 0; j < b.cols(); ++j) row[a.cols() + j] = br[j];
    }
    return out;
}

std::vector<double> normalize_vec(const std::vector<double>& v, const std::vector<double>& mean,
                                  const std::vector<double>& std_dev) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean[i]) / std_dev[i];
    return out;
}

} // namespace

double NormStats::sum_log_y_std() const {
    double s = 0.0;
    for (double v : y_std) s += std::log(v);
    return s;
}

NormStats fit_normalization(const Matrix& cond, const Matrix& target) {
    if (cond.rows() != target.rows() || cond.rows() < 2)
        throw Error("fit_normalization: need >= 2 paired rows");
    NormStats n;
    column_mean_std(cond, n.x_mean, n.x_std);
    column_mean_std(target, n.y_mean, n.y_std);
    for (double& s : n.x_std) {
        if (s == 0.0) s = 1.0; // constant conditioning coordinate is legal
    }
    for (double s : n.y_std) {
        if (s == 0.0)
            throw DegenerateDensityError("fit_normalization: target coordinate has zero variance");
    }
    return n;
}

Matrix normalize_cond(const NormStats& n, const Matrix& cond) {
    if (cond.cols() != n.d()) throw ShapeError("normalize_cond: width mismatch");
    Matrix out = cond;
    for (int i = 0; i < out.rows(); ++i) {
        double* row = out.row_ptr(i);
        for (int j = 0; j < out.cols(); ++j) row[j] = (row[j] - n.x_mean[j]) / n.x_std[j];
    }
    return out;
}

Matrix normalize_target(const NormStats& n, const Matrix& target) {
    if (target.cols() != n.s()) throw ShapeError("normalize_target: width mismatch");
    Matrix out = target;
    for (int i = 0; i < out.rows(); ++i) {
        double* row = out.row_ptr(i);
        for (int j = 0; j < out.cols(); ++j) row[j] = (row[j] - n.y_mean[j]) / n.y_std[j];
    }
    return out;
}

PrNfModel make_model(int d, int s, int hidden_dim, double lambda, Direction direction,
                     NormStats norm, std::uint64_t seed) {
    if (d < 1 || s < 1 || hidden_dim < 1) throw Error("make_model: dimensions must be >= 1");
    if (lambda < 0.0) throw Error("make_model: lambda must be nonnegative");
    if (norm.d() != d || norm.s() != s) throw ShapeError("make_model: normalization shape mismatch");
    PrNfModel m;
    m.d = d;
    m.s = s;
    m.lambda = lambda;
    m.direction = direction;
    m.norm = std::move(norm);
    MlpSpec spec{d + s, hidden_dim, s, Activation::Tanh};
    m.theta_h = mlp_init(spec, split_seed(seed, 0));
    m.theta_g = mlp_init(spec, split_seed(seed, 1));
    return m;
}

LatentSample encode(const PrNfModel& m, const std::vector<double>& cond,
                    const std::vector<double>& target) {
    if (static_cast<int>(cond.size()) != m.d || static_cast<int>(target.size()) != m.s)
        throw ShapeError("encode: input length mismatch");
    LatentSample z;
    z.z1 = cond;
    std::vector<double> w = normalize_vec(cond, m.norm.x_mean, m.norm.x_std);
    std::vector<double> yn = normalize_vec(target, m.norm.y_mean, m.norm.y_std);
    w.insert(w.end(), yn.begin(), yn.end());
    Matrix out = mlp_forward(m.theta_h, Matrix::row_vector(w));
    z.z2.assign(out.data(), out.data() + m.s);
    return z;
}

std::pair<std::vector<double>, std::vector<double>> decode(const PrNfModel& m,
                                                           const LatentSample& z) {
    if (static_cast<int>(z.z1.size()) != m.d || static_cast<int>(z.z2.size()) != m.s)
        throw ShapeError("decode: latent length mismatch");
    std::vector<double> in = normalize_vec(z.z1, m.norm.x_mean, m.norm.x_std);
    in.insert(in.end(), z.z2.begin(), z.z2.end());
    Matrix out = mlp_forward(m.theta_g, Matrix::row_vector(in));
    std::vector<double> target_hat(m.s);
    for (int j = 0; j < m.s; ++j) target_hat[j] = out(0, j) * m.norm.y_std[j] + m.norm.y_mean[j];
    return {z.z1, target_hat};
}

namespace {
const double kLogSingularFloor = std::log(1e-300);

// log|det| + sign of a square block, or sign 0 when under the floor.
std::pair<double, int> block_logdet(const Matrix& j) {
    QrFactors qr = householder_qr(j);
    const double ld = qr.log_abs_det();
    const int sign = qr.det_sign();
    if (sign == 0 || ld < kLogSingularFloor) return {0.0, 0};
    return {ld, sign};
}
} // namespace

double logabsdet_jh(const PrNfModel& m, const std::vector<double>& cond,
                    const std::vector<double>& target) {
    std::vector<double> w = normalize_vec(cond, m.norm.x_mean, m.norm.x_std);
    std::vector<double> yn = normalize_vec(target, m.norm.y_mean, m.norm.y_std);
    w.insert(w.end(), yn.begin(), yn.end());
    Matrix j = mlp_input_jacobian_block(m.theta_h, w.data(), m.d, m.d + m.s);
    auto [ld, sign] = block_logdet(j);
    if (sign == 0) throw SingularJacobianError("logabsdet_jh: determinant below 1e-300");
    return ld - m.norm.sum_log_y_std();
}

double logabsdet_jg(const PrNfModel& m, const LatentSample& z) {
    std::vector<double> in = normalize_vec(z.z1, m.norm.x_mean, m.norm.x_std);
    in.insert(in.end(), z.z2.begin(), z.z2.end());
    Matrix j = mlp_input_jacobian_block(m.theta_g, in.data(), m.d, m.d + m.s);
    auto [ld, sign] = block_logdet(j);
    if (sign == 0) throw SingularJacobianError("logabsdet_jg: determinant below 1e-300");
    return ld + m.norm.sum_log_y_std();
}

Matrix sample_conditional(const PrNfModel& m, const std::vector<double>& cond,
                          long n, std::uint64_t seed) {
    if (n < 1) throw Error("sample_conditional: n must be >= 1");
    if (static_cast<int>(cond.size()) != m.d) throw ShapeError("sample_conditional: cond length");
    Rng rng(seed);
    std::vector<double> xn = normalize_vec(cond, m.norm.x_mean, m.norm.x_std);
    Matrix in(static_cast<int>(n), m.d + m.s);
    for (long i = 0; i < n; ++i) {
        double* row = in.row_ptr(static_cast<int>(i));
        for (int j = 0; j < m.d; ++j) row[j] = xn[j];
        for (int j = 0; j < m.s; ++j) row[m.d + j] = rng.normal();
    }
    Matrix out = mlp_forward(m.theta_g, in);
    for (int i = 0; i < out.rows(); ++i) {
        double* row = out.row_ptr(i);
        for (int j = 0; j < m.s; ++j) row[j] = row[j] * m.norm.y_std[j] + m.norm.y_mean[j];
    }
    return out;
}

double log_density(const PrNfModel& m, const std::vector<double>& cond,
                   const std::vector<double>& target) {
    LatentSample z = encode(m, cond, target);
    double quad = 0.0;
    for (double v : z.z2) quad += v * v;
    return -0.5 * quad - 0.5 * m.s * kLog2Pi + logabsdet_jh(m, cond, target);
}

Matrix& param_ref(PrNfModel& m, int param_id) {
    switch (param_id) {
    case kHW1: return m.theta_h.w1;
    case kHB1: return m.theta_h.b1;
    case kHW2: return m.theta_h.w2;
    case kHB2: return m.theta_h.b2;
    case kGW1: return m.theta_g.w1;
    case kGB1: return m.theta_g.b1;
    case kGW2: return m.theta_g.w2;
    case kGB2: return m.theta_g.b2;
    default: throw Error("param_ref: bad parameter id");
    }
}

const Matrix& param_ref(const PrNfModel& m, int param_id) {
    return param_ref(const_cast<PrNfModel&>(m), param_id);
}

LossGraph build_loss_graph(Tape& tape, const PrNfModel& m, const Matrix& xn,
                           const Matrix& yn, long row_offset, Singularity policy,
                           bool want_l1, bool want_l2) {
    if (xn.rows() != yn.rows() || xn.rows() == 0)
        throw ShapeError("build_loss_graph: bad batch shape");
    if (xn.cols() != m.d || yn.cols() != m.s)
        throw ShapeError("build_loss_graph: batch width mismatch");
    if (!want_l1 && !want_l2) throw Error("build_loss_graph: nothing requested");

    const int n = xn.rows();
    const NodeId xc = tape.constant(xn);
    const NodeId yc = tape.constant(yn);
    const NodeId wc = tape.constant(hcat_values(xn, yn));

    const MlpTapeNodes enc = mlp_forward_taped(tape, m.theta_h, wc, kHW1);
    MlpTapeNodes dec;
    if (want_l2) {
        const NodeId dec_in = tape.record_hcat(xc, enc.out);
        dec = mlp_forward_taped(tape, m.theta_g, dec_in, kGW1);
    }

    // Per-sample determinant nodes. A singular sample under SkipSample drops
    // out of every sum; under Abort the error names the absolute row.
    std::vector<unsigned char> keep(n, 1);
    std::vector<NodeId> ldh_nodes, det_terms;
    ldh_nodes.reserve(n);
    if (want_l2) det_terms.reserve(n);
    long skipped = 0;

    for (int i = 0; i < n; ++i) {
        const NodeId jh = tape.record_jacobian_block(enc.hidden, enc.w1, enc.w2, i, m.d, m.d + m.s);
        std::optional<LogDet> ldh;
        if (policy == Singularity::Abort) {
            ldh = tape.record_logabsdet(jh, row_offset + i);
        } else {
            ldh = tape.try_record_logabsdet(jh);
        }
        std::optional<LogDet> ldg;
        if (ldh && want_l2) {
            const NodeId jg = tape.record_jacobian_block(dec.hidden, dec.w1, dec.w2, i, m.d, m.d + m.s);
            if (policy == Singularity::Abort) {
                ldg = tape.record_logabsdet(jg, row_offset + i);
            } else {
                ldg = tape.try_record_logabsdet(jg);
            }
            if (!ldg) ldh.reset();
        }
        if (!ldh) {
            keep[i] = 0;
            ++skipped;
            continue;
        }
        ldh_nodes.push_back(ldh->node);
        if (want_l2) {
            // |sign_h·sign_g·det_h·det_g − 1| via the log-domain product; the
            // normalization constants of jh and jg cancel in the sum.
            const NodeId t = tape.record_add(ldh->node, ldg->node);
            const NodeId e = tape.record_exp(t);
            const NodeId se = tape.record_scale(e, static_cast<double>(ldh->sign * ldg->sign));
            det_terms.push_back(tape.record_abs(tape.record_add_const(se, -1.0)));
        }
    }

    LossGraph out;
    out.included = n - skipped;
    out.skipped = skipped;
    if (out.included == 0)
        throw SingularJacobianError("build_loss_graph: every sample in the batch is singular",
                                    row_offset);

    const bool any_skip = skipped > 0;
    if (want_l1) {
        const NodeId ssq_z2 = any_skip ? tape.record_sum_squares(enc.out, keep)
                                       : tape.record_sum_squares(enc.out);
        const double constant =
            out.included * (0.5 * m.s * kLog2Pi + m.norm.sum_log_y_std());
        out.l1_sum = tape.record_add_const(
            tape.record_add(tape.record_scale(ssq_z2, 0.5),
                            tape.record_scale(tape.record_sum(ldh_nodes), -1.0)),
            constant);
    }
    if (want_l2) {
        const NodeId resid = tape.record_sub(dec.out, yc);
        const NodeId recon = any_skip ? tape.record_sum_squares(resid, keep)
                                      : tape.record_sum_squares(resid);
        out.l2_sum = tape.record_add(recon, tape.record_sum(det_terms));
    }
    return out;
}

} // namespace prnf
