#pragma once

#include <array>
#include <cstdint>

namespace qpe {

//! Philox4x32-10 block function: counter and key in, 128 random bits out.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

//! Counter-based stream keyed by (seed, stream). Draw i of a stream depends
//! only on (seed, stream, i), so trials can run in any order on any thread.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    //! Uniform on the open interval (0, 1).
    double uniform();
    bool bernoulli(double p) { return uniform() < p; }

  private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
};

} // namespace qpe
