#include "doctest.h"

#include "prnf/mlp.hpp"
#include "prnf/rng.hpp"
#include "prnf/tape.hpp"

#include "oracles.hpp"

#include <cmath>
#include <cstring>
#include <vector>

using namespace prnf;

namespace {

MlpParams random_net(int in, int hid, int out, std::uint64_t seed) {
    return mlp_init({in, hid, out, Activation::Tanh}, seed);
}

} // namespace

TEST_CASE("init draws Glorot-uniform weights and zero biases") {
    MlpSpec spec{3, 64, 2, Activation::Tanh};
    MlpParams p = mlp_init(spec, 123);
    REQUIRE(p.w1.rows() == 64);
    REQUIRE(p.w1.cols() == 3);
    REQUIRE(p.w2.rows() == 2);
    REQUIRE(p.w2.cols() == 64);
    CHECK(frobenius_sq(p.b1) == 0.0);
    CHECK(frobenius_sq(p.b2) == 0.0);

    const double a1 = std::sqrt(6.0 / (3 + 64));
    const double a2 = std::sqrt(6.0 / (64 + 2));
    double max1 = 0.0, max2 = 0.0;
    for (std::size_t i = 0; i < p.w1.size(); ++i) max1 = std::max(max1, std::fabs(p.w1.data()[i]));
    for (std::size_t i = 0; i < p.w2.size(); ++i) max2 = std::max(max2, std::fabs(p.w2.data()[i]));
    CHECK(max1 <= a1);
    CHECK(max2 <= a2);
    // Bounds are actually reached somewhere near them, i.e. the scale is not
    // accidentally shrunk.
    CHECK(max1 > 0.5 * a1);
    CHECK(max2 > 0.5 * a2);

    MlpParams q = mlp_init(spec, 123);
    CHECK(std::memcmp(p.w1.data(), q.w1.data(), p.w1.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(p.w2.data(), q.w2.data(), p.w2.size() * sizeof(double)) == 0);
    MlpParams r = mlp_init(spec, 124);
    CHECK(std::memcmp(p.w1.data(), r.w1.data(), p.w1.size() * sizeof(double)) != 0);
}

TEST_CASE("batch forward agrees with a straight-line reimplementation") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const int in = 1 + rng.uniform_int(5), hid = 1 + rng.uniform_int(16),
                  out = 1 + rng.uniform_int(4);
        MlpParams p = random_net(in, hid, out, 1000 + static_cast<std::uint64_t>(trial));
        // Give the zero biases something to do.
        for (std::size_t i = 0; i < p.b1.size(); ++i) p.b1.data()[i] = rng.uniform(-0.5, 0.5);
        for (std::size_t i = 0; i < p.b2.size(); ++i) p.b2.data()[i] = rng.uniform(-0.5, 0.5);
        const int batch = 1 + rng.uniform_int(6);
        Matrix x = oracle::random_matrix(batch, in, rng, -2.0, 2.0);
        Matrix y = mlp_forward(p, x);
        REQUIRE(y.rows() == batch);
        REQUIRE(y.cols() == out);
        for (int r = 0; r < batch; ++r) {
            std::vector<double> row(x.row_ptr(r), x.row_ptr(r) + in);
            std::vector<double> want = oracle::mlp_forward_slow(p, row);
            for (int c = 0; c < out; ++c)
                CHECK(y(r, c) == doctest::Approx(want[static_cast<std::size_t>(c)]).epsilon(1e-13));
        }
    }
}

TEST_CASE("taped forward reproduces the plain forward bitwise") {
    Rng rng(32);
    MlpParams p = random_net(4, 12, 3, 77);
    Matrix x = oracle::random_matrix(5, 4, rng);
    Matrix plain = mlp_forward(p, x);
    Tape tape;
    MlpTapeNodes nodes = mlp_forward_taped(tape, p, tape.constant(x), 0);
    const Matrix& taped = tape.value(nodes.out);
    REQUIRE(taped.same_shape(plain));
    CHECK(std::memcmp(taped.data(), plain.data(), plain.size() * sizeof(double)) == 0);
    CHECK(tape.value(nodes.hidden).rows() == 5);
    CHECK(tape.value(nodes.hidden).cols() == 12);
}

TEST_CASE("analytic input Jacobian block matches finite differences") {
    Rng rng(33);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int in = 1 + rng.uniform_int(8), hid = 1 + rng.uniform_int(16),
                  out = 1 + rng.uniform_int(8);
        MlpParams p = random_net(in, hid, out, 500 + static_cast<std::uint64_t>(trial));
        for (std::size_t i = 0; i < p.b1.size(); ++i) p.b1.data()[i] = rng.uniform(-0.3, 0.3);
        std::vector<double> x(static_cast<std::size_t>(in));
        for (auto& v : x) v = rng.uniform(-1.5, 1.5);
        const int col_lo = rng.uniform_int(in);
        const int col_hi = col_lo + 1 + rng.uniform_int(in - col_lo);

        Matrix jac = mlp_input_jacobian_block(p, x.data(), col_lo, col_hi);
        REQUIRE(jac.rows() == out);
        REQUIRE(jac.cols() == col_hi - col_lo);

        const double h = 1e-6;
        for (int j = col_lo; j < col_hi; ++j) {
            std::vector<double> hi = x, lo = x;
            hi[static_cast<std::size_t>(j)] += h;
            lo[static_cast<std::size_t>(j)] -= h;
            std::vector<double> fh = oracle::mlp_forward_slow(p, hi);
            std::vector<double> fl = oracle::mlp_forward_slow(p, lo);
            for (int o = 0; o < out; ++o) {
                const double fd = (fh[static_cast<std::size_t>(o)] - fl[static_cast<std::size_t>(o)]) / (2 * h);
                worst = std::max(worst, oracle::rel_err(jac(o, j - col_lo), fd));
            }
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("taped parameter leaves line up with the param_base convention") {
    MlpParams p = random_net(3, 8, 2, 9);
    Matrix x = Matrix(4, 3, 0.25);
    Tape tape;
    MlpTapeNodes nodes = mlp_forward_taped(tape, p, tape.constant(x), 40);
    GradientBundle g = tape.backward(tape.record_sum_squares(nodes.out));
    for (int id = 40; id < 44; ++id) REQUIRE(g.contains(id));
    CHECK(g.at(40).same_shape(p.w1));
    CHECK(g.at(41).same_shape(p.b1));
    CHECK(g.at(42).same_shape(p.w2));
    CHECK(g.at(43).same_shape(p.b2));
    CHECK(g.all_finite());
}
