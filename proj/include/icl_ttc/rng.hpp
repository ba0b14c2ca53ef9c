#pragma once

#include <array>
#include <cstdint>

namespace icl_ttc {

// Identifier of an independent random stream. Child streams are derived by
// hashing (parent, index), so any stream can be reconstructed without
// replaying its siblings.
struct StreamKey {
    std::uint64_t value = 0;

    friend bool operator==(StreamKey, StreamKey) = default;
};

StreamKey derive(StreamKey parent, std::uint64_t index);
StreamKey derive(StreamKey parent, std::uint64_t a, std::uint64_t b);

std::uint64_t splitmix64(std::uint64_t x);

// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Counter-mode generator over one StreamKey. Normal variates use Box-Muller so
// the sequence does not depend on the standard library implementation.
class Stream {
public:
    explicit Stream(StreamKey key);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on {0, ..., bound - 1}; bound must be positive.
    std::uint64_t uniform_index(std::uint64_t bound);
    double normal();

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace icl_ttc
