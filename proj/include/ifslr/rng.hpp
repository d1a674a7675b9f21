#pragma once

#include <array>
#include <cstdint>

namespace ifslr {

// Philox4x32-10 counter-based generator. Every 128-bit counter block is an
// independent random function of (key, counter), so replicas and positions
// can be generated out of order and still reproduce bit-identically.
struct Philox4x32 {
  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<uint32_t, 4> block(const std::array<uint32_t, 4>& counter,
                                       const std::array<uint32_t, 2>& key) {
    std::array<uint32_t, 4> x = counter;
    std::array<uint32_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
      const uint64_t p0 = uint64_t(kMul0) * x[0];
      const uint64_t p1 = uint64_t(kMul1) * x[2];
      const uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
      const uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
      x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    return x;
  }
};

// One logical random stream, addressed by (seed, stream id, replica index).
// Words are consumed sequentially but any position could be regenerated
// directly; the whole state is the position counter.
class RandomStream {
 public:
  RandomStream(uint64_t seed, uint32_t stream_id, uint64_t replica)
      : key_{uint32_t(seed), uint32_t(seed >> 32)},
        base_{0u, stream_id, uint32_t(replica), uint32_t(replica >> 32)} {}

  uint32_t next_u32() {
    if (have_ == 0) refill();
    return buf_[--have_];
  }

  // 53-bit uniform in [0, 1).
  double next_double() {
    const uint64_t hi = next_u32();
    const uint64_t lo = next_u32();
    return double(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

 private:
  void refill() {
    std::array<uint32_t, 4> ctr = base_;
    ctr[0] = uint32_t(block_index_);
    ctr[1] ^= uint32_t(block_index_ >> 32) << 8;  // stream id uses the low byte
    buf_ = Philox4x32::block(ctr, key_);
    ++block_index_;
    have_ = 4;
  }

  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 4> base_;
  std::array<uint32_t, 4> buf_{};
  uint64_t block_index_ = 0;
  int have_ = 0;
};

// Reserved stream ids; keeps logically distinct draws from ever sharing a
// counter block.
namespace stream_id {
inline constexpr uint32_t kSymbols = 1;
inline constexpr uint32_t kTail = 2;
inline constexpr uint32_t kQuantile = 3;
}  // namespace stream_id

}  // namespace ifslr
