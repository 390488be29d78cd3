#pragma once

#include "prnf/density.hpp"
#include "prnf/flow.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace prnf {

// y = f(x) + ε(x) on the domain [0, 1].
enum class Func1D { Quadratic, Sin };

struct Problem1D {
    Func1D function = Func1D::Sin;
    NoiseSpec noise; // dim 1
};

double f1d(Func1D f, double x);
const char* f1d_name(Func1D f);
// Zeros of f inside [0,1] (where heteroscedastic noise degenerates).
std::vector<double> f1d_zeros(Func1D f);

// y = A·x + ε with A entries drawn uniform [0,1] from a_seed.
struct ProblemHD {
    int d = 20, s = 5;
    std::uint64_t a_seed = 0;
    Matrix a; // s × d
    NoiseSpec noise;
};

ProblemHD make_problem_hd(int d, int s, std::uint64_t a_seed, NoiseSpec noise);
std::vector<double> f_hd(const ProblemHD& p, const std::vector<double>& x);

// Paired training rows plus everything needed to regenerate them bitwise.
struct Dataset {
    Matrix cond;    // N × d
    Matrix target;  // N × s
    Direction direction = Direction::Forward;
    std::map<std::string, std::string> provenance;
};

Dataset gen_1d(const Problem1D& p, long n, std::uint64_t seed);
Dataset gen_hd(const ProblemHD& p, long n, std::uint64_t seed);

// The inverse-direction view: conditioning and target blocks switch places.
Dataset swap_direction(const Dataset& data);

// Analytic log p(y|x) over the grid cells.
std::vector<double> true_conditional_1d(const Problem1D& p, double x, const GridSpec& grid);

// Grid oracle for p(x|y) on [0,1]: Bayes with uniform prior, normalized by
// the Riemann sum. Throws when y is unreachable (normalizer under 1e-300).
std::vector<double> true_inverse_1d(const Problem1D& p, double y, const GridSpec& grid);

} // namespace prnf
