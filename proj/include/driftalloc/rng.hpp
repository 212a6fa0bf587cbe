#pragma once

#include <array>
#include <cstdint>

namespace driftalloc {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3"). Stateless: output is a pure function of (counter, key).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept;

// Purposes partition a cycle's substream so that independent draws (duration,
// schedule coin) never alias each other.
enum class StreamPurpose : std::uint32_t { Duration = 0, ScheduleChoice = 1, Auxiliary = 2 };

// A caller-owned substream: key = root seed, counter = (index, purpose, draw#).
// Two streams with the same (seed, index, purpose) produce identical sequences.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t index,
              StreamPurpose purpose = StreamPurpose::Duration) noexcept;

    std::uint64_t next_u64() noexcept;
    // Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t index() const noexcept { return index_; }

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t index_;
    std::uint32_t purpose_;
    std::uint32_t block_ = 0;
    PhiloxCounter buffer_{};
    int used_ = 4;
};

}  // namespace driftalloc
