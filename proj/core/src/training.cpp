#include "prnf/training.hpp"

#include "prnf/error.hpp"
#include "prnf/parallel.hpp"
#include "prnf/rng.hpp"

#include <algorithm>
#include <cmath>

namespace prnf {

namespace {

constexpr int kChunkRows = 256;

struct ChunkResult {
    double l1_sum = 0.0;
    double l2_sum = 0.0;
    long included = 0;
    long skipped = 0;
    GradientBundle grads;
};

Matrix take_rows(const Matrix& src, const std::vector<int>& order, long lo, long hi) {
    Matrix out(static_cast<int>(hi - lo), src.cols());
    for (long i = lo; i < hi; ++i) {
        const double* srow = src.row_ptr(order[i]);
        double* drow = out.row_ptr(static_cast<int>(i - lo));
        for (int j = 0; j < src.cols(); ++j) drow[j] = srow[j];
    }
    return out;
}

Matrix slice_rows(const Matrix& src, long lo, long hi) {
    Matrix out(static_cast<int>(hi - lo), src.cols());
    for (long i = lo; i < hi; ++i) {
        const double* srow = src.row_ptr(static_cast<int>(i));
        double* drow = out.row_ptr(static_cast<int>(i - lo));
        for (int j = 0; j < src.cols(); ++j) drow[j] = srow[j];
    }
    return out;
}

// Loss sums and parameter gradients of one batch, chunked so per-chunk tapes
// stay small and threads never share a tape. The reduction walks chunks in
// index order, so values are independent of the thread count.
struct BatchLoss {
    double l1 = 0.0, l2 = 0.0;
    long included = 0, skipped = 0;
    GradientBundle grads; // of L = L1 + λ·L2, already divided by included
};

BatchLoss batch_loss_and_grad(const PrNfModel& m, const Matrix& xn, const Matrix& yn,
                              double lambda, Singularity policy, int threads,
                              bool want_grads) {
    const long n = xn.rows();
    const int chunks = static_cast<int>((n + kChunkRows - 1) / kChunkRows);
    std::vector<ChunkResult> slots(chunks);

    parallel_for_chunks(chunks, threads, [&](int c) {
        const long lo = static_cast<long>(c) * kChunkRows;
        const long hi = std::min(n, lo + kChunkRows);
        Tape tape;
        const Matrix xc = slice_rows(xn, lo, hi);
        const Matrix yc = slice_rows(yn, lo, hi);
        const LossGraph g = build_loss_graph(tape, m, xc, yc, lo, policy);
        ChunkResult& r = slots[c];
        r.l1_sum = tape.scalar_value(g.l1_sum);
        r.l2_sum = tape.scalar_value(g.l2_sum);
        r.included = g.included;
        r.skipped = g.skipped;
        if (want_grads) {
            const NodeId root = tape.record_add(g.l1_sum, tape.record_scale(g.l2_sum, lambda));
            r.grads = tape.backward(root);
        }
    });

    BatchLoss out;
    double l1_sum = 0.0, l2_sum = 0.0;
    for (const ChunkResult& r : slots) {
        l1_sum += r.l1_sum;
        l2_sum += r.l2_sum;
        out.included += r.included;
        out.skipped += r.skipped;
    }
    if (out.included == 0)
        throw SingularJacobianError("batch loss: every sample skipped as singular");
    const double inv = 1.0 / static_cast<double>(out.included);
    out.l1 = l1_sum * inv;
    out.l2 = l2_sum * inv;
    if (want_grads) {
        for (const ChunkResult& r : slots) out.grads.add_scaled(r.grads, inv);
    }
    return out;
}

struct AdamState {
    std::vector<Matrix> m, v;
    long t = 0;
};

void adam_step(PrNfModel& model, AdamState& st, const GradientBundle& grads,
               const TrainConfig& cfg) {
    if (st.m.empty()) {
        st.m.resize(kParamCount);
        st.v.resize(kParamCount);
        for (int id = 0; id < kParamCount; ++id) {
            const Matrix& p = param_ref(model, id);
            st.m[id] = Matrix(p.rows(), p.cols());
            st.v[id] = Matrix(p.rows(), p.cols());
        }
    }
    ++st.t;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(st.t));
    for (int id = 0; id < kParamCount; ++id) {
        Matrix& p = param_ref(model, id);
        const Matrix& g = grads.at(id);
        double* mp = st.m[id].data();
        double* vp = st.v[id].data();
        double* pp = p.data();
        const double* gp = g.data();
        for (std::size_t i = 0; i < p.size(); ++i) {
            mp[i] = cfg.adam_beta1 * mp[i] + (1.0 - cfg.adam_beta1) * gp[i];
            vp[i] = cfg.adam_beta2 * vp[i] + (1.0 - cfg.adam_beta2) * gp[i] * gp[i];
            const double mhat = mp[i] / bc1;
            const double vhat = vp[i] / bc2;
            pp[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    }
}

} // namespace

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
    if (data.cond.rows() < 2) throw Error("train: dataset must have >= 2 rows");
    if (cfg.epochs < 1) throw Error("train: epochs must be >= 1");
    if (cfg.learning_rate <= 0.0) throw Error("train: learning rate must be > 0");

    const int d = data.cond.cols();
    const int s = data.target.cols();
    TrainResult result;
    result.model = make_model(d, s, cfg.hidden_dim, cfg.lambda, data.direction,
                              fit_normalization(data.cond, data.target),
                              split_seed(cfg.seed, 0));
    PrNfModel& model = result.model;

    const Matrix xn = normalize_cond(model.norm, data.cond);
    const Matrix yn = normalize_target(model.norm, data.target);
    const long n = xn.rows();
    const long batch = cfg.batch_size > 0 ? std::min(cfg.batch_size, n) : n;

    AdamState adam;
    Rng shuffle_rng(split_seed(cfg.seed, 1));
    std::vector<int> order(n);
    for (long i = 0; i < n; ++i) order[i] = static_cast<int>(i);

    result.history.reserve(cfg.epochs);
    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
        double l1_acc = 0.0, l2_acc = 0.0;
        long included_acc = 0, skipped_acc = 0;
        try {
            if (batch == n) {
                const BatchLoss bl =
                    batch_loss_and_grad(model, xn, yn, cfg.lambda, cfg.singularity,
                                        cfg.threads, true);
                adam_step(model, adam, bl.grads, cfg);
                l1_acc = bl.l1 * bl.included;
                l2_acc = bl.l2 * bl.included;
                included_acc = bl.included;
                skipped_acc = bl.skipped;
            } else {
                // Fisher-Yates reshuffle per epoch, then fixed-size slices.
                for (long i = n - 1; i > 0; --i) {
                    const long j = shuffle_rng.uniform_int(static_cast<int>(i + 1));
                    std::swap(order[i], order[j]);
                }
                for (long lo = 0; lo < n; lo += batch) {
                    const long hi = std::min(n, lo + batch);
                    const Matrix xb = take_rows(xn, order, lo, hi);
                    const Matrix yb = take_rows(yn, order, lo, hi);
                    const BatchLoss bl = batch_loss_and_grad(model, xb, yb, cfg.lambda,
                                                             cfg.singularity, cfg.threads, true);
                    adam_step(model, adam, bl.grads, cfg);
                    l1_acc += bl.l1 * bl.included;
                    l2_acc += bl.l2 * bl.included;
                    included_acc += bl.included;
                    skipped_acc += bl.skipped;
                }
            }
        } catch (const SingularJacobianError& e) {
            throw TrainingError(std::string("train: ") + e.what(), epoch);
        }

        LossRecord rec;
        rec.epoch = epoch;
        rec.l1 = l1_acc / included_acc;
        rec.l2 = l2_acc / included_acc;
        rec.total = rec.l1 + cfg.lambda * rec.l2;
        rec.skipped = skipped_acc;
        if (!std::isfinite(rec.total))
            throw TrainingError("train: non-finite loss", epoch);
        result.history.push_back(rec);
    }
    return result;
}

LossRecord evaluate_loss(const PrNfModel& m, const Matrix& cond, const Matrix& target,
                         Singularity policy) {
    const Matrix xn = normalize_cond(m.norm, cond);
    const Matrix yn = normalize_target(m.norm, target);
    const BatchLoss bl = batch_loss_and_grad(m, xn, yn, m.lambda, policy, 1, false);
    LossRecord rec;
    rec.l1 = bl.l1;
    rec.l2 = bl.l2;
    rec.total = bl.l1 + m.lambda * bl.l2;
    rec.skipped = bl.skipped;
    return rec;
}

NodeId loss_nll(Tape& tape, const PrNfModel& m, const Matrix& cond, const Matrix& target,
                Singularity policy) {
    const Matrix xn = normalize_cond(m.norm, cond);
    const Matrix yn = normalize_target(m.norm, target);
    const LossGraph g = build_loss_graph(tape, m, xn, yn, 0, policy, true, false);
    return tape.record_scale(g.l1_sum, 1.0 / static_cast<double>(g.included));
}

NodeId loss_rev(Tape& tape, const PrNfModel& m, const Matrix& cond, const Matrix& target,
                Singularity policy) {
    const Matrix xn = normalize_cond(m.norm, cond);
    const Matrix yn = normalize_target(m.norm, target);
    const LossGraph g = build_loss_graph(tape, m, xn, yn, 0, policy, false, true);
    return tape.record_scale(g.l2_sum, 1.0 / static_cast<double>(g.included));
}

double kde_cross_entropy(const PrNfModel& m, const Dataset& data, long m_samples,
                         std::uint64_t seed) {
    if (m_samples < 100) throw Error("kde_cross_entropy: need >= 100 samples");
    const int d = m.d, s = m.s;

    // Conditioning draws are uniform over the training set's bounding box,
    // which matches the generating domain for the built-in problems.
    std::vector<double> lo(d), hi(d);
    for (int j = 0; j < d; ++j) {
        lo[j] = hi[j] = data.cond(0, j);
        for (int i = 1; i < data.cond.rows(); ++i) {
            lo[j] = std::min(lo[j], data.cond(i, j));
            hi[j] = std::max(hi[j], data.cond(i, j));
        }
    }

    Rng rng(seed);
    Matrix joint(static_cast<int>(m_samples), d + s);
    std::vector<double> z1(d);
    LatentSample z;
    z.z2.resize(s);
    for (long i = 0; i < m_samples; ++i) {
        for (int j = 0; j < d; ++j) z1[j] = rng.uniform(lo[j], hi[j]);
        z.z1 = z1;
        for (int j = 0; j < s; ++j) z.z2[j] = rng.normal();
        const auto [cond_hat, target_hat] = decode(m, z);
        double* row = joint.row_ptr(static_cast<int>(i));
        for (int j = 0; j < d; ++j) row[j] = cond_hat[j];
        for (int j = 0; j < s; ++j) row[d + j] = target_hat[j];
    }

    const KdeModel kde = kde_fit(joint, BandwidthRule::Scott);
    std::vector<double> point(d + s);
    double h = 0.0;
    for (int i = 0; i < data.cond.rows(); ++i) {
        for (int j = 0; j < d; ++j) point[j] = data.cond(i, j);
        for (int j = 0; j < s; ++j) point[d + j] = data.target(i, j);
        h -= kde_logpdf(kde, point.data());
    }
    return h / data.cond.rows();
}

LambdaGrid tune_lambda(const Dataset& data, const std::vector<double>& grid,
                       const TrainConfig& cfg, long m_samples) {
    if (grid.empty()) throw Error("tune_lambda: empty grid");
    LambdaGrid out;
    out.lambdas = grid;
    out.cross_entropy.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        TrainConfig c = cfg;
        c.lambda = grid[j];
        const TrainResult r = train(data, c);
        out.cross_entropy[j] =
            kde_cross_entropy(r.model, data, m_samples, split_seed(cfg.seed, 1000 + j));
    }
    out.argmin = 0;
    for (std::size_t j = 1; j < grid.size(); ++j) {
        if (out.cross_entropy[j] < out.cross_entropy[out.argmin]) out.argmin = static_cast<int>(j);
    }
    return out;
}

} // namespace prnf
