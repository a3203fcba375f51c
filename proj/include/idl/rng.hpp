#pragma once

#include <cstdint>

#include "idl/matrix.hpp"

namespace idl {

/// Named sub-streams so dataset generation, weight init and shuffling draw
/// from independent sequences regardless of call order.
namespace stream {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t init = 2;
inline constexpr std::uint64_t shuffle = 3;
inline constexpr std::uint64_t segments = 4;
inline constexpr std::uint64_t layout = 5;
}  // namespace stream

/// Counter-based generator: every output is a hash of (seed, stream, counter),
/// so equal (seed, stream) pairs produce bit-identical sequences across runs
/// and platforms and distinct streams can be drawn from concurrently.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_(stream_id) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    std::uint64_t next_u64();
    /// uniform in [0, 1)
    double next_double();
    double next_uniform(double lo, double hi);
    /// Box-Muller; consumes two uniforms per call
    double next_normal(double mean, double stddev);
    /// uniform integer in [lo, hi] inclusive
    std::int64_t next_int(std::int64_t lo, std::int64_t hi);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

enum class DistFamily { uniform, normal };

struct DistributionSpec {
    DistFamily family = DistFamily::uniform;
    double a = 0.0;  // lo (uniform) or mean (normal)
    double b = 1.0;  // hi (uniform) or stddev (normal)
    double shift = 0.0;  // distribution-shift parameter kappa, >= 0

    static DistributionSpec uniform(double lo, double hi, double shift = 0.0);
    static DistributionSpec normal(double mean, double stddev, double shift = 0.0);
    void validate() const;
};

double sample_scalar(const DistributionSpec& dist, RngStream& rng);
Matrix sample(const DistributionSpec& dist, std::size_t rows, std::size_t cols,
              RngStream& rng);

}  // namespace idl
