#ifndef QDMAE_RNG_HPP
#define QDMAE_RNG_HPP

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace qdmae {

// One splitmix64 step. Used for seed mixing only, never as the main generator.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic substream derivation: stream 0 is the scheduler stream of a
// trial, streams 1..E are the emitter streams. Trial seeds are derived the
// same way from (experiment seed, trial index).
inline std::uint64_t substream_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

    // Uniform integer in [0, n). n must be positive.
    long uniform_index(long n) {
        return std::uniform_int_distribution<long>(0, n - 1)(engine_);
    }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal_(engine_);
        return v;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace qdmae

#endif
