#pragma once

#include "prnf/flow.hpp"
#include "prnf/problems.hpp"

#include <cstdint>
#include <vector>

namespace prnf {

struct TrainConfig {
    long epochs = 2000;
    long batch_size = 0; // 0 = full batch
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
    double lambda = 80.0;
    int hidden_dim = 256;
    Singularity singularity = Singularity::SkipSample;
    int threads = 1;
};

struct LossRecord {
    long epoch = 0;
    double l1 = 0.0;
    double l2 = 0.0;
    double total = 0.0; // l1 + lambda·l2, exactly as computed
    long skipped = 0;   // singular samples dropped this epoch
};

struct TrainResult {
    PrNfModel model;
    std::vector<LossRecord> history;
};

// Adam on L = L1 + λ·L2 over the (already direction-resolved) dataset.
// Deterministic in (dataset, config): chunked per-sample work may run on
// several threads but reduction order is fixed.
TrainResult train(const Dataset& data, const TrainConfig& cfg);

// Mean losses of a model on a raw-units batch, recorded on the given tape:
// loss_nll = −(1/N)Σ[log N(z2;0,I) + log|det Jh|] (raw-unit densities),
// loss_rev = (1/N)Σ[‖w − g(h(w))‖²_norm + |det Jg·det Jh − 1|].
NodeId loss_nll(Tape& tape, const PrNfModel& m, const Matrix& cond, const Matrix& target,
                Singularity policy = Singularity::Abort);
NodeId loss_rev(Tape& tape, const PrNfModel& m, const Matrix& cond, const Matrix& target,
                Singularity policy = Singularity::Abort);

// Batch loss values without a caller-visible tape (evaluation helper).
LossRecord evaluate_loss(const PrNfModel& m, const Matrix& cond, const Matrix& target,
                         Singularity policy = Singularity::SkipSample);

struct LambdaGrid {
    std::vector<double> lambdas;
    std::vector<double> cross_entropy; // H(λ_j)
    int argmin = -1;
};

// Trains one model per candidate λ from scratch, scores each by the KDE
// cross-entropy of the training set under model-generated joint samples, and
// returns the argmin.
LambdaGrid tune_lambda(const Dataset& data, const std::vector<double>& grid,
                       const TrainConfig& cfg, long m_samples);

// H(λ) for one trained model: draw m joint samples (cond uniform over the
// training set's conditioning bounding box, z2 standard normal, decoded), fit
// a KDE on them, return −(1/N) Σ log p_KDE over the training rows.
double kde_cross_entropy(const PrNfModel& m, const Dataset& data, long m_samples,
                         std::uint64_t seed);

} // namespace prnf
