#include "idl/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace idl {

namespace {
// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}
}  // namespace

std::uint64_t RngStream::next_u64() {
    const std::uint64_t key = mix64(seed_ ^ (0x9e3779b97f4a7c15ULL * (stream_ + 1)));
    return mix64(key + 0xbf58476d1ce4e5b9ULL * ++counter_);
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

double RngStream::next_normal(double mean, double stddev) {
    // Box-Muller; u1 shifted away from zero so log() stays finite
    const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t RngStream::next_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("next_int: lo > hi");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
}

DistributionSpec DistributionSpec::uniform(double lo, double hi, double shift) {
    DistributionSpec d{DistFamily::uniform, lo, hi, shift};
    d.validate();
    return d;
}

DistributionSpec DistributionSpec::normal(double mean, double stddev, double shift) {
    DistributionSpec d{DistFamily::normal, mean, stddev, shift};
    d.validate();
    return d;
}

void DistributionSpec::validate() const {
    if (shift < 0.0) throw std::invalid_argument("DistributionSpec: shift must be >= 0");
    if (family == DistFamily::uniform && !(a < b))
        throw std::invalid_argument("DistributionSpec: uniform requires lo < hi");
    if (family == DistFamily::normal && !(b > 0.0))
        throw std::invalid_argument("DistributionSpec: normal requires stddev > 0");
}

double sample_scalar(const DistributionSpec& dist, RngStream& rng) {
    return dist.family == DistFamily::uniform ? rng.next_uniform(dist.a, dist.b)
                                              : rng.next_normal(dist.a, dist.b);
}

Matrix sample(const DistributionSpec& dist, std::size_t rows, std::size_t cols,
              RngStream& rng) {
    dist.validate();
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = sample_scalar(dist, rng);
    return out;
}

}  // namespace idl
