#include "prnf/mlp.hpp"

#include "prnf/error.hpp"
#include "prnf/rng.hpp"

#include <cmath>

namespace prnf {

MlpParams mlp_init(const MlpSpec& spec, std::uint64_t seed) {
    if (spec.input_dim < 1 || spec.hidden_dim < 1 || spec.output_dim < 1)
        throw Error("mlp_init: dimensions must be >= 1");
    Rng rng(seed);
    MlpParams p;
    p.spec = spec;
    p.w1 = Matrix(spec.hidden_dim, spec.input_dim);
    p.b1 = Matrix(1, spec.hidden_dim);
    p.w2 = Matrix(spec.output_dim, spec.hidden_dim);
    p.b2 = Matrix(1, spec.output_dim);

    const double a1 = std::sqrt(6.0 / (spec.input_dim + spec.hidden_dim));
    double* w = p.w1.data();
    for (std::size_t i = 0; i < p.w1.size(); ++i) w[i] = rng.uniform(-a1, a1);
    const double a2 = std::sqrt(6.0 / (spec.hidden_dim + spec.output_dim));
    w = p.w2.data();
    for (std::size_t i = 0; i < p.w2.size(); ++i) w[i] = rng.uniform(-a2, a2);
    return p;
}

Matrix mlp_forward(const MlpParams& p, const Matrix& input) {
    if (input.cols() != p.spec.input_dim) throw ShapeError("mlp_forward: input width mismatch");
    Matrix h(input.rows(), p.spec.hidden_dim);
    for (int i = 0; i < h.rows(); ++i) {
        const double* b = p.b1.row_ptr(0);
        double* row = h.row_ptr(i);
        for (int j = 0; j < h.cols(); ++j) row[j] = b[j];
    }
    add_matmul_nt(h, input, p.w1);
    double* hp = h.data();
    for (std::size_t i = 0; i < h.size(); ++i) hp[i] = std::tanh(hp[i]);

    Matrix out(input.rows(), p.spec.output_dim);
    for (int i = 0; i < out.rows(); ++i) {
        const double* b = p.b2.row_ptr(0);
        double* row = out.row_ptr(i);
        for (int j = 0; j < out.cols(); ++j) row[j] = b[j];
    }
    add_matmul_nt(out, h, p.w2);
    return out;
}

Matrix mlp_input_jacobian_block(const MlpParams& p, const double* input,
                                int col_lo, int col_hi) {
    const int in = p.spec.input_dim;
    const int hidden = p.spec.hidden_dim;
    const int out = p.spec.output_dim;
    if (col_lo < 0 || col_hi > in || col_lo >= col_hi)
        throw ShapeError("mlp_input_jacobian_block: bad column range");

    const int k = col_hi - col_lo;
    Matrix j(out, k);
    for (int h = 0; h < hidden; ++h) {
        double z = p.b1(0, h);
        const double* w1row = p.w1.row_ptr(h);
        for (int c = 0; c < in; ++c) z += w1row[c] * input[c];
        const double t = std::tanh(z);
        const double dh = 1.0 - t * t;
        if (dh == 0.0) continue;
        for (int a = 0; a < out; ++a) {
            const double wa = p.w2(a, h) * dh;
            double* jrow = j.row_ptr(a);
            for (int b = 0; b < k; ++b) jrow[b] += wa * w1row[col_lo + b];
        }
    }
    return j;
}

MlpTapeNodes mlp_forward_taped(Tape& tape, const MlpParams& p, NodeId input, int param_base) {
    MlpTapeNodes n;
    n.w1 = tape.leaf(param_base + 0, p.w1);
    n.b1 = tape.leaf(param_base + 1, p.b1);
    n.w2 = tape.leaf(param_base + 2, p.w2);
    n.b2 = tape.leaf(param_base + 3, p.b2);
    n.hidden = tape.record_tanh(tape.record_affine_nt(input, n.w1, n.b1));
    n.out = tape.record_affine_nt(n.hidden, n.w2, n.b2);
    return n;
}

} // namespace prnf
