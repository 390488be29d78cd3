#pragma once

#include <cstdint>
#include <random>

namespace prnf {

// mt19937_64 engine with explicit output mappings. The standard library's
// distribution objects are allowed to differ between implementations, so the
// uniform and normal transforms live here to keep streams reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Standard normal via polar Box-Muller; the second variate is cached.
    double normal();

    double normal(double mean, double std_dev) { return mean + std_dev * normal(); }

    // Uniform integer in [0, n).
    int uniform_int(int n);

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derives an independent stream seed (splitmix64 of seed and stream index).
// Used to give each dataset/model/noise source its own engine without the
// draws of one perturbing the others.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace prnf
