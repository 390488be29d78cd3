#pragma once

#include "prnf/linalg.hpp"
#include "prnf/matrix.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace prnf {

using NodeId = int;

// log|det A| node handle plus the sign of det A (+1/-1). The sign is a
// locally constant factor, so it travels alongside the node as a plain value
// rather than on the tape.
struct LogDet {
    NodeId node = -1;
    int sign = 0;
};

// Gradients keyed by leaf parameter id. Every leaf registered on the tape is
// present after backward, with zeros when the root does not depend on it.
class GradientBundle {
public:
    void accumulate(int param_id, const Matrix& g);
    void add_zero(int param_id, int rows, int cols);
    void add_scaled(const GradientBundle& other, double c); // this += c * other
    void scale(double c);
    const Matrix& at(int param_id) const;
    bool contains(int param_id) const;
    bool all_finite() const;
    const std::map<int, Matrix>& entries() const { return grads_; }

private:
    std::map<int, Matrix> grads_;
};

// Reverse-mode tape over Matrix values. Nodes are appended in evaluation
// order (inputs always precede consumers); backward runs one reverse sweep.
// A tape is single-owner while recording; independent tapes may run on
// different threads.
class Tape {
public:
    NodeId constant(Matrix value);
    NodeId leaf(int param_id, Matrix value);

    NodeId record_matmul(NodeId a, NodeId b);        // A·B
    NodeId record_matmul_nt(NodeId a, NodeId b);     // A·Bᵀ
    NodeId record_affine_nt(NodeId x, NodeId w, NodeId b); // X·Wᵀ + 1·b (b a row vector)
    NodeId record_tanh(NodeId a);
    NodeId record_add(NodeId a, NodeId b);
    NodeId record_sub(NodeId a, NodeId b);
    NodeId record_scale(NodeId a, double c);
    NodeId record_add_const(NodeId a, double c);
    NodeId record_exp(NodeId a);
    NodeId record_abs(NodeId a);                     // subgradient 0 at 0
    NodeId record_hcat(NodeId a, NodeId b);
    NodeId record_sum_squares(NodeId a);             // scalar Σ a_ij²
    NodeId record_sum_squares(NodeId a, std::vector<unsigned char> row_mask);
    NodeId record_sum(const std::vector<NodeId>& scalars);

    // Per-sample Jacobian of a single-hidden-layer tanh net restricted to
    // input columns [col_lo, col_hi): W2 · diag(1 − t²) · W1[:, col_lo:col_hi]
    // where t is row `row` of the hidden activation node. Differentiable with
    // respect to the activation row, W1 and W2.
    NodeId record_jacobian_block(NodeId activations, NodeId w1, NodeId w2,
                                 int row, int col_lo, int col_hi);

    // log|det A| via Householder QR. Returns nothing when |det| falls below
    // the singularity floor (1e-300); record_logabsdet throws
    // SingularJacobianError carrying `sample_index` instead.
    std::optional<LogDet> try_record_logabsdet(NodeId a);
    LogDet record_logabsdet(NodeId a, long sample_index = -1);

    const Matrix& value(NodeId id) const;
    double scalar_value(NodeId id) const { return value(id).scalar(); }
    long size() const { return static_cast<long>(nodes_.size()); }

    // Reverse sweep from a scalar root. Leaves keep registered shapes even
    // when untouched by the root.
    GradientBundle backward(NodeId root, double seed = 1.0) const;

private:
    enum class Op {
        Constant, Leaf, MatMul, MatMulNT, AffineNT, Tanh, Add, Sub, Scale,
        AddConst, Exp, Abs, HCat, SumSquares, Sum, JacobianBlock, LogAbsDet
    };

    struct Node {
        Op op;
        Matrix value;
        std::vector<NodeId> inputs;
        double c = 0.0;                 // Scale / AddConst payload
        int param_id = -1;              // Leaf
        int row = -1, col_lo = -1, col_hi = -1; // JacobianBlock
        int sign = 0;                   // LogAbsDet
        std::vector<unsigned char> row_mask;    // SumSquares
        std::unique_ptr<QrFactors> qr;  // LogAbsDet cached factors
    };

    NodeId push(Node n);
    const Node& node(NodeId id) const;

    std::vector<Node> nodes_;
};

// Central-difference gradient of f over every entry of every parameter: the
// independent oracle the test suite compares backward() against.
GradientBundle finite_difference_gradient(
    const std::function<double(const std::map<int, Matrix>&)>& f,
    const std::map<int, Matrix>& params, double step);

} // namespace prnf
