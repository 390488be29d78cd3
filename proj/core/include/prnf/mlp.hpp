#pragma once

#include "prnf/matrix.hpp"
#include "prnf/tape.hpp"

#include <cstdint>

namespace prnf {

enum class Activation { Tanh };

struct MlpSpec {
    int input_dim = 1;
    int hidden_dim = 1;
    int output_dim = 1;
    Activation activation = Activation::Tanh;
};

// Single-hidden-layer net y = tanh(x·W1ᵀ + b1)·W2ᵀ + b2. Biases are stored as
// row vectors. Immutable by convention once training hands them out.
struct MlpParams {
    MlpSpec spec;
    Matrix w1; // hidden × input
    Matrix b1; // 1 × hidden
    Matrix w2; // output × hidden
    Matrix b2; // 1 × output
};

// Glorot-uniform weights (a = sqrt(6/(fan_in+fan_out))), zero biases. W1 is
// drawn first, then W2, each row-major, so streams are stable.
MlpParams mlp_init(const MlpSpec& spec, std::uint64_t seed);

// Batch forward: input rows are samples.
Matrix mlp_forward(const MlpParams& p, const Matrix& input);

// Analytic Jacobian of the output with respect to input coordinates
// [col_lo, col_hi) at a single input point (length input_dim):
// W2 · diag(1 − tanh²(W1 x + b1)) · W1[:, col_lo:col_hi].
Matrix mlp_input_jacobian_block(const MlpParams& p, const double* input,
                                int col_lo, int col_hi);

// Tape-recorded forward over a batch node. Registers the four parameter
// leaves under ids param_base+0..3 (W1, b1, W2, b2) and returns the node
// handles needed downstream; `hidden` feeds record_jacobian_block.
struct MlpTapeNodes {
    NodeId w1 = -1, b1 = -1, w2 = -1, b2 = -1;
    NodeId hidden = -1; // tanh activations, batch × hidden
    NodeId out = -1;    // batch × output
};
MlpTapeNodes mlp_forward_taped(Tape& tape, const MlpParams& p, NodeId input, int param_base);

} // namespace prnf
