#pragma once

#include <cstdint>

#include "deepsic/complex_linalg.hpp"

namespace deepsic {

/// Deterministic random stream addressed by (seed, stream_id). Distinct
/// stream_ids give statistically independent sequences, so Monte-Carlo sweeps
/// can hand one stream per worker without sequence coupling.
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    /// Standard normal via Box-Muller (portable, bit-stable).
    double gaussian();
    /// Circularly-symmetric complex Gaussian scalar, E|z|^2 = variance.
    cplx complex_gaussian(double variance);
    /// Uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n);

  private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// i.i.d. CN(0, variance) entries; variance must be > 0.
CVec draw_complex_gaussian(SeededRng& rng, std::size_t dim, double variance);

}  // namespace deepsic
