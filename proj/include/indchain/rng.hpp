#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace indchain {

/// Deterministic counter-based random stream (splitmix64 core).
///
/// All randomness in a run is drawn from streams derived from one master
/// seed, so identical seeds give bit-identical runs regardless of how many
/// diagnostic streams are consumed elsewhere. Sampling avoids
/// std::uniform_real_distribution on purpose: the raw-bits-to-double mapping
/// below is fixed by this code, not by the standard library.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Index sampled from an unnormalized nonnegative weight vector.
    int sample_categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = next_double() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

  private:
    std::uint64_t state_;
};

/// Derives purpose-specific seeds from a master seed. Each (purpose, index)
/// pair maps to a stable seed, so adding a new consumer never perturbs the
/// streams of existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose, std::uint64_t index) {
    RngStream s(master ^ (purpose * 0xd6e8feb86659fd93ULL) ^ (index * 0xa5a3564e4ab3d9b1ULL));
    s.next_u64();
    return s.next_u64();
}

namespace seed_purpose {
constexpr std::uint64_t kAction = 1;   // per-player action sampling
constexpr std::uint64_t kKernel = 2;   // per-player next-state sampling
constexpr std::uint64_t kBatch = 3;    // per-run seeds in a multi-seed batch
constexpr std::uint64_t kMisc = 4;
}  // namespace seed_purpose

}  // namespace indchain
