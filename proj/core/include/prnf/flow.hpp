#pragma once

#include "prnf/mlp.hpp"
#include "prnf/tape.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace prnf {

enum class Direction { Forward, Inverse };

// What to do when a per-sample Jacobian determinant falls under the
// singularity floor during loss evaluation.
enum class Singularity { SkipSample, Abort };

// Per-coordinate z-score statistics fitted on the training set. A constant
// conditioning coordinate degrades to (mean, std 1); a constant target
// coordinate has no density and is rejected.
struct NormStats {
    std::vector<double> x_mean, x_std;
    std::vector<double> y_mean, y_std;

    int d() const { return static_cast<int>(x_mean.size()); }
    int s() const { return static_cast<int>(y_mean.size()); }
    double sum_log_y_std() const;
};

NormStats fit_normalization(const Matrix& cond, const Matrix& target);

Matrix normalize_cond(const NormStats& n, const Matrix& cond);
Matrix normalize_target(const NormStats& n, const Matrix& target);

struct LatentSample {
    std::vector<double> z1; // conditioning input, raw units, copied through
    std::vector<double> z2; // h2 output in the normalized latent space
};

// Two independent single-hidden-layer nets over the normalized joint space:
// encoder h = (identity on x, h2) and decoder g = (identity on z1, g2).
struct PrNfModel {
    int d = 0, s = 0;
    double lambda = 0.0;
    Direction direction = Direction::Forward;
    NormStats norm;
    MlpParams theta_h; // (d+s) -> s
    MlpParams theta_g; // (d+s) -> s
};

PrNfModel make_model(int d, int s, int hidden_dim, double lambda, Direction direction,
                     NormStats norm, std::uint64_t seed);

LatentSample encode(const PrNfModel& m, const std::vector<double>& cond,
                    const std::vector<double>& target);

// Returns (cond_hat, target_hat) in raw units; cond_hat == z.z1 bitwise.
std::pair<std::vector<double>, std::vector<double>> decode(const PrNfModel& m,
                                                           const LatentSample& z);

// log|det ∂z2/∂target| in raw units: the s×s network block minus Σ log σ of
// the target normalization. Throws SingularJacobianError below the floor.
double logabsdet_jh(const PrNfModel& m, const std::vector<double>& cond,
                    const std::vector<double>& target);

// log|det ∂target_hat/∂z2| in raw units (network block plus Σ log σ).
double logabsdet_jg(const PrNfModel& m, const LatentSample& z);

// n draws of the conditional generator: z2 ~ N(0, I_s), decoded. Rows are
// samples in raw units. Deterministic in seed.
Matrix sample_conditional(const PrNfModel& m, const std::vector<double>& cond,
                          long n, std::uint64_t seed);

// log p(target | cond) = log N(z2; 0, I) + logabsdet_jh, raw units.
double log_density(const PrNfModel& m, const std::vector<double>& cond,
                   const std::vector<double>& target);

// Leaf ids shared by every loss tape; Adam walks the same order.
enum ParamId : int {
    kHW1 = 0, kHB1, kHW2, kHB2,
    kGW1, kGB1, kGW2, kGB2,
    kParamCount
};

Matrix& param_ref(PrNfModel& m, int param_id);
const Matrix& param_ref(const PrNfModel& m, int param_id);

// Loss graph over one pre-normalized batch slice. The sums run over included
// samples only; dividing by the global included count happens outside so
// multi-chunk reductions stay exact. Either half may be omitted (l1/l2 = -1).
struct LossGraph {
    NodeId l1_sum = -1; // Σ [ ½‖z2‖² + (s/2)log 2π − log|det Jh|_norm + Σ log σ_y ]
    NodeId l2_sum = -1; // Σ [ ‖y − g2(h(w))‖²_norm + |sign·exp(ldh+ldg) − 1| ]
    long included = 0;
    long skipped = 0;
};

LossGraph build_loss_graph(Tape& tape, const PrNfModel& m, const Matrix& xn,
                           const Matrix& yn, long row_offset, Singularity policy,
                           bool want_l1 = true, bool want_l2 = true);

} // namespace prnf
