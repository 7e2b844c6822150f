#include "deepsic/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace deepsic {

namespace {
std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id) {
    // Mix seed and stream into one 64-bit state; streams land far apart.
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = stream_id ^ 0x6a09e667f3bcc909ULL;
    std::uint64_t b = splitmix64(s);
    state_ = a ^ (b * 0x2545f4914f6cdd1dULL);
    if (state_ == 0) state_ = 0x853c49e6748fea9bULL;
}

std::uint64_t SeededRng::next_u64() { return splitmix64(state_); }

double SeededRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

cplx SeededRng::complex_gaussian(double variance) {
    const double s = std::sqrt(variance / 2.0);
    return {s * gaussian(), s * gaussian()};
}

std::uint64_t SeededRng::uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below(0)");
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

CVec draw_complex_gaussian(SeededRng& rng, std::size_t dim, double variance) {
    if (variance <= 0.0) throw std::invalid_argument("draw_complex_gaussian: variance must be > 0");
    CVec v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = rng.complex_gaussian(variance);
    return v;
}

}  // namespace deepsic
