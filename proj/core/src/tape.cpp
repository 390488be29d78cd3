#include "prnf/tape.hpp"

#include "prnf/error.hpp"

#include <cmath>

namespace prnf {

void GradientBundle::accumulate(int param_id, const Matrix& g) {
    auto it = grads_.find(param_id);
    if (it == grads_.end()) {
        grads_.emplace(param_id, g);
    } else {
        axpy(it->second, 1.0, g);
    }
}

void GradientBundle::add_zero(int param_id, int rows, int cols) {
    if (!grads_.count(param_id)) grads_.emplace(param_id, Matrix(rows, cols));
}

void GradientBundle::add_scaled(const GradientBundle& other, double c) {
    for (const auto& [id, g] : other.grads_) {
        auto it = grads_.find(id);
        if (it == grads_.end()) {
            grads_.emplace(id, prnf::scale(g, c));
        } else {
            axpy(it->second, c, g);
        }
    }
}

void GradientBundle::scale(double c) {
    for (auto& [id, g] : grads_) {
        double* p = g.data();
        for (std::size_t i = 0; i < g.size(); ++i) p[i] *= c;
    }
}

const Matrix& GradientBundle::at(int param_id) const {
    auto it = grads_.find(param_id);
    if (it == grads_.end()) throw Error("GradientBundle: unknown parameter id");
    return it->second;
}

bool GradientBundle::contains(int param_id) const { return grads_.count(param_id) != 0; }

bool GradientBundle::all_finite() const {
    for (const auto& [id, g] : grads_) {
        if (!g.all_finite()) return false;
    }
    return true;
}

NodeId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

const Tape::Node& Tape::node(NodeId id) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) throw Error("Tape: bad node id");
    return nodes_[id];
}

const Matrix& Tape::value(NodeId id) const { return node(id).value; }

NodeId Tape::constant(Matrix value) {
    Node n;
    n.op = Op::Constant;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::leaf(int param_id, Matrix value) {
    Node n;
    n.op = Op::Leaf;
    n.param_id = param_id;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::record_matmul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::MatMul;
    n.inputs = {a, b};
    n.value = matmul(value(a), value(b));
    return push(std::move(n));
}

NodeId Tape::record_matmul_nt(NodeId a, NodeId b) {
    Node n;
    n.op = Op::MatMulNT;
    n.inputs = {a, b};
    n.value = matmul_nt(value(a), value(b));
    return push(std::move(n));
}

NodeId Tape::record_affine_nt(NodeId x, NodeId w, NodeId b) {
    const Matrix& xv = value(x);
    const Matrix& wv = value(w);
    const Matrix& bv = value(b);
    if (bv.rows() != 1 || bv.cols() != wv.rows()) throw ShapeError("affine_nt: bias shape mismatch");
    Node n;
    n.op = Op::AffineNT;
    n.inputs = {x, w, b};
    Matrix out(xv.rows(), wv.rows());
    for (int i = 0; i < out.rows(); ++i) {
        double* row = out.row_ptr(i);
        for (int j = 0; j < out.cols(); ++j) row[j] = bv(0, j);
    }
    add_matmul_nt(out, xv, wv);
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::record_tanh(NodeId a) {
    Node n;
    n.op = Op::Tanh;
    n.inputs = {a};
    n.value = value(a);
    double* p = n.value.data();
    for (std::size_t i = 0; i < n.value.size(); ++i) p[i] = std::tanh(p[i]);
    return push(std::move(n));
}

NodeId Tape::record_add(NodeId a, NodeId b) {
    Node n;
    n.op = Op::Add;
    n.inputs = {a, b};
    n.value = add(value(a), value(b));
    return push(std::move(n));
}

NodeId Tape::record_sub(NodeId a, NodeId b) {
    Node n;
    n.op = Op::Sub;
    n.inputs = {a, b};
    n.value = sub(value(a), value(b));
    return push(std::move(n));
}

NodeId Tape::record_scale(NodeId a, double c) {
    Node n;
    n.op = Op::Scale;
    n.inputs = {a};
    n.c = c;
    n.value = prnf::scale(value(a), c);
    return push(std::move(n));
}

NodeId Tape::record_add_const(NodeId a, double c) {
    Node n;
    n.op = Op::AddConst;
    n.inputs = {a};
    n.c = c;
    n.value = value(a);
    double* p = n.value.data();
    for (std::size_t i = 0; i < n.value.size(); ++i) p[i] += c;
    return push(std::move(n));
}

NodeId Tape::record_exp(NodeId a) {
    Node n;
    n.op = Op::Exp;
    n.inputs = {a};
    n.value = value(a);
    double* p = n.value.data();
    for (std::size_t i = 0; i < n.value.size(); ++i) p[i] = std::exp(p[i]);
    return push(std::move(n));
}

NodeId Tape::record_abs(NodeId a) {
    Node n;
    n.op = Op::Abs;
    n.inputs = {a};
    n.value = value(a);
    double* p = n.value.data();
    for (std::size_t i = 0; i < n.value.size(); ++i) p[i] = std::fabs(p[i]);
    return push(std::move(n));
}

NodeId Tape::record_hcat(NodeId a, NodeId b) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (av.rows() != bv.rows()) throw ShapeError("hcat: row counts differ");
    Node n;
    n.op = Op::HCat;
    n.inputs = {a, b};
    Matrix out(av.rows(), av.cols() + bv.cols());
    for (int i = 0; i < av.rows(); ++i) {
        double* row = out.row_ptr(i);
        const double* ar = av.row_ptr(i);
        const double* br = bv.row_ptr(i);
        for (int j = 0; j < av.cols(); ++j) row[j] = ar[j];
        for (int j = 0; j < bv.cols(); ++j) row[av.cols() + j] = br[j];
    }
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::record_sum_squares(NodeId a) { return record_sum_squares(a, {}); }

NodeId Tape::record_sum_squares(NodeId a, std::vector<unsigned char> row_mask) {
    const Matrix& av = value(a);
    if (!row_mask.empty() && static_cast<int>(row_mask.size()) != av.rows())
        throw ShapeError("sum_squares: mask length != rows");
    Node n;
    n.op = Op::SumSquares;
    n.inputs = {a};
    n.row_mask = std::move(row_mask);
    double s = 0.0;
    for (int i = 0; i < av.rows(); ++i) {
        if (!n.row_mask.empty() && !n.row_mask[i]) continue;
        const double* row = av.row_ptr(i);
        for (int j = 0; j < av.cols(); ++j) s += row[j] * row[j];
    }
    n.value = Matrix(1, 1, s);
    return push(std::move(n));
}

NodeId Tape::record_sum(const std::vector<NodeId>& scalars) {
    Node n;
    n.op = Op::Sum;
    n.inputs = scalars;
    double s = 0.0;
    for (NodeId id : scalars) {
        if (!value(id).is_scalar()) throw ShapeError("sum: non-scalar input");
        s += value(id).scalar();
    }
    n.value = Matrix(1, 1, s);
    return push(std::move(n));
}

NodeId Tape::record_jacobian_block(NodeId activations, NodeId w1, NodeId w2,
                                   int row, int col_lo, int col_hi) {
    const Matrix& t = value(activations);
    const Matrix& w1v = value(w1);
    const Matrix& w2v = value(w2);
    const int hidden = t.cols();
    if (row < 0 || row >= t.rows()) throw ShapeError("jacobian_block: row out of range");
    if (w1v.rows() != hidden || w2v.cols() != hidden)
        throw ShapeError("jacobian_block: hidden dimension mismatch");
    if (col_lo < 0 || col_hi > w1v.cols() || col_lo >= col_hi)
        throw ShapeError("jacobian_block: bad column range");

    Node n;
    n.op = Op::JacobianBlock;
    n.inputs = {activations, w1, w2};
    n.row = row;
    n.col_lo = col_lo;
    n.col_hi = col_hi;

    const int out = w2v.rows();
    const int k = col_hi - col_lo;
    const double* trow = t.row_ptr(row);
    Matrix j(out, k);
    for (int h = 0; h < hidden; ++h) {
        const double dh = 1.0 - trow[h] * trow[h];
        if (dh == 0.0) continue;
        const double* w1row = w1v.row_ptr(h) + col_lo;
        for (int a = 0; a < out; ++a) {
            const double wa = w2v(a, h) * dh;
            double* jrow = j.row_ptr(a);
            for (int b = 0; b < k; ++b) jrow[b] += wa * w1row[b];
        }
    }
    n.value = std::move(j);
    return push(std::move(n));
}

namespace {
const double kLogSingularFloor = std::log(1e-300);
}

std::optional<LogDet> Tape::try_record_logabsdet(NodeId a) {
    const Matrix& av = value(a);
    if (av.rows() != av.cols()) throw ShapeError("logabsdet: matrix not square");
    auto qr = std::make_unique<QrFactors>(householder_qr(av));
    const double ld = qr->log_abs_det();
    const int sign = qr->det_sign();
    if (sign == 0 || ld < kLogSingularFloor) return std::nullopt;

    Node n;
    n.op = Op::LogAbsDet;
    n.inputs = {a};
    n.sign = sign;
    n.qr = std::move(qr);
    n.value = Matrix(1, 1, ld);
    return LogDet{push(std::move(n)), sign};
}

LogDet Tape::record_logabsdet(NodeId a, long sample_index) {
    auto r = try_record_logabsdet(a);
    if (!r) throw SingularJacobianError("logabsdet: Jacobian determinant below 1e-300", sample_index);
    return *r;
}

GradientBundle Tape::backward(NodeId root, double seed) const {
    const Node& root_node = node(root);
    if (!root_node.value.is_scalar()) throw Error("backward: root is not a scalar node");

    std::vector<Matrix> adj(nodes_.size());
    auto bump = [&](NodeId id) -> Matrix& {
        Matrix& m = adj[id];
        if (m.empty()) m = Matrix(nodes_[id].value.rows(), nodes_[id].value.cols());
        return m;
    };
    bump(root)(0, 0) = seed;

    for (NodeId id = root; id >= 0; --id) {
        const Node& n = nodes_[id];
        const Matrix& g = adj[id];
        if (g.empty()) continue;
        switch (n.op) {
        case Op::Constant:
        case Op::Leaf:
            break;
        case Op::MatMul: {
            add_matmul_nt(bump(n.inputs[0]), g, value(n.inputs[1]));
            add_matmul_tn(bump(n.inputs[1]), value(n.inputs[0]), g);
            break;
        }
        case Op::MatMulNT: {
            add_matmul(bump(n.inputs[0]), g, value(n.inputs[1]));
            add_matmul_tn(bump(n.inputs[1]), g, value(n.inputs[0]));
            break;
        }
        case Op::AffineNT: {
            add_matmul(bump(n.inputs[0]), g, value(n.inputs[1]));
            add_matmul_tn(bump(n.inputs[1]), g, value(n.inputs[0]));
            Matrix& db = bump(n.inputs[2]);
            for (int i = 0; i < g.rows(); ++i) {
                const double* grow = g.row_ptr(i);
                double* brow = db.row_ptr(0);
                for (int j = 0; j < g.cols(); ++j) brow[j] += grow[j];
            }
            break;
        }
        case Op::Tanh: {
            Matrix& da = bump(n.inputs[0]);
            const double* t = n.value.data();
            const double* gp = g.data();
            double* dp = da.data();
            for (std::size_t i = 0; i < da.size(); ++i) dp[i] += gp[i] * (1.0 - t[i] * t[i]);
            break;
        }
        case Op::Add:
            axpy(bump(n.inputs[0]), 1.0, g);
            axpy(bump(n.inputs[1]), 1.0, g);
            break;
        case Op::Sub:
            axpy(bump(n.inputs[0]), 1.0, g);
            axpy(bump(n.inputs[1]), -1.0, g);
            break;
        case Op::Scale:
            axpy(bump(n.inputs[0]), n.c, g);
            break;
        case Op::AddConst:
            axpy(bump(n.inputs[0]), 1.0, g);
            break;
        case Op::Exp: {
            Matrix& da = bump(n.inputs[0]);
            const double* e = n.value.data();
            const double* gp = g.data();
            double* dp = da.data();
            for (std::size_t i = 0; i < da.size(); ++i) dp[i] += gp[i] * e[i];
            break;
        }
        case Op::Abs: {
            Matrix& da = bump(n.inputs[0]);
            const Matrix& x = value(n.inputs[0]);
            const double* xp = x.data();
            const double* gp = g.data();
            double* dp = da.data();
            for (std::size_t i = 0; i < da.size(); ++i) {
                if (xp[i] > 0.0) dp[i] += gp[i];
                else if (xp[i] < 0.0) dp[i] -= gp[i];
            }
            break;
        }
        case Op::HCat: {
            Matrix& da = bump(n.inputs[0]);
            Matrix& db = bump(n.inputs[1]);
            const int ca = da.cols();
            for (int i = 0; i < g.rows(); ++i) {
                const double* grow = g.row_ptr(i);
                double* ar = da.row_ptr(i);
                double* br = db.row_ptr(i);
                for (int j = 0; j < ca; ++j) ar[j] += grow[j];
                for (int j = 0; j < db.cols(); ++j) br[j] += grow[ca + j];
            }
            break;
        }
        case Op::SumSquares: {
            Matrix& da = bump(n.inputs[0]);
            const Matrix& x = value(n.inputs[0]);
            const double gs = 2.0 * g.scalar();
            for (int i = 0; i < x.rows(); ++i) {
                if (!n.row_mask.empty() && !n.row_mask[i]) continue;
                const double* xr = x.row_ptr(i);
                double* dr = da.row_ptr(i);
                for (int j = 0; j < x.cols(); ++j) dr[j] += gs * xr[j];
            }
            break;
        }
        case Op::Sum: {
            const double gs = g.scalar();
            for (NodeId in : n.inputs) bump(in)(0, 0) += gs;
            break;
        }
        case Op::JacobianBlock: {
            const Matrix& t = value(n.inputs[0]);
            const Matrix& w1 = value(n.inputs[1]);
            const Matrix& w2 = value(n.inputs[2]);
            Matrix& dt = bump(n.inputs[0]);
            Matrix& dw1 = bump(n.inputs[1]);
            Matrix& dw2 = bump(n.inputs[2]);
            const int hidden = t.cols();
            const int out = w2.rows();
            const int k = n.col_hi - n.col_lo;
            const double* trow = t.row_ptr(n.row);
            double* dtrow = dt.row_ptr(n.row);
            // J = W2 diag(d) B with d_h = 1 - t_h^2, B = W1[:, lo:hi].
            // dW2 = (G Bᵀ) column-scaled by d; dB = diag(d) W2ᵀ G;
            // dd_h = Σ_a W2[a,h] (G Bᵀ)[a,h]; dt_h = -2 t_h dd_h.
            for (int h = 0; h < hidden; ++h) {
                const double dh = 1.0 - trow[h] * trow[h];
                const double* w1row = w1.row_ptr(h) + n.col_lo;
                double m_dot_w2 = 0.0;
                double* dw1row = dw1.row_ptr(h) + n.col_lo;
                for (int a = 0; a < out; ++a) {
                    const double* grow = g.row_ptr(a);
                    double m = 0.0;
                    for (int b = 0; b < k; ++b) m += grow[b] * w1row[b];
                    dw2(a, h) += dh * m;
                    m_dot_w2 += w2(a, h) * m;
                    const double w2dh = w2(a, h) * dh;
                    for (int b = 0; b < k; ++b) dw1row[b] += w2dh * grow[b];
                }
                dtrow[h] += -2.0 * trow[h] * m_dot_w2;
            }
            break;
        }
        case Op::LogAbsDet: {
            Matrix contrib = n.qr->inverse_transpose_scaled(g.scalar());
            axpy(bump(n.inputs[0]), 1.0, contrib);
            break;
        }
        }
    }

    GradientBundle bundle;
    for (NodeId id = 0; id < static_cast<NodeId>(nodes_.size()); ++id) {
        const Node& n = nodes_[id];
        if (n.op != Op::Leaf) continue;
        if (!adj[id].empty()) {
            bundle.accumulate(n.param_id, adj[id]);
        } else {
            bundle.add_zero(n.param_id, n.value.rows(), n.value.cols());
        }
    }
    return bundle;
}

GradientBundle finite_difference_gradient(
    const std::function<double(const std::map<int, Matrix>&)>& f,
    const std::map<int, Matrix>& params, double step) {
    if (step <= 0.0) throw Error("finite_difference_gradient: step must be > 0");
    GradientBundle out;
    std::map<int, Matrix> work = params;
    for (const auto& [id, m] : params) {
        Matrix g(m.rows(), m.cols());
        Matrix& slot = work.at(id);
        for (std::size_t k = 0; k < m.size(); ++k) {
            const double saved = slot.data()[k];
            slot.data()[k] = saved + step;
            const double hi = f(work);
            slot.data()[k] = saved - step;
            const double lo = f(work);
            slot.data()[k] = saved;
            g.data()[k] = (hi - lo) / (2.0 * step);
        }
        out.accumulate(id, g);
    }
    return out;
}

} // namespace prnf
