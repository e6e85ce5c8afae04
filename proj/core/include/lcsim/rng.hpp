#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace lcsim {

namespace detail {

// Philox-4x32-10 block function (counter-based, stateless).
std::array<uint32_t, 4> philox4x32_10(const std::array<uint32_t, 4>& counter,
                                      const std::array<uint32_t, 2>& key);

// splitmix64 finalizer, used to derive stream identities from tags.
uint64_t mix64(uint64_t z);

}  // namespace detail

// Purpose tags for derived streams. Combined with an index via
// RngStream::tag(), they give every (run, iteration, purpose) tuple in an
// experiment its own stream, so draws never collide across contexts.
enum class StreamPurpose : uint64_t {
  kInit = 1,    // parameter initialization
  kBatch = 2,   // fresh (U, V) batch at one iteration
  kNoise = 3,   // noise-injection draws at one iteration
  kRun = 4,     // one run of an ensemble / one paired Monte-Carlo sample
  kChunk = 5,   // one fixed-size chunk of a parallel Monte-Carlo loop
  kMisc = 6,
};

// Seeded random stream backed by Philox-4x32-10.
//
// A stream is a (key, stream-id) pair plus a 64-bit block counter; distinct
// stream ids own disjoint counter spaces under the same generator, so child
// streams can be handed to parallel workers without coordination. Children
// are derived by hashing a caller-chosen tag into both the key and the id.
//
// normal() produces standard normals via Box-Muller, two per Philox block.
// All sequences are reproducible from the root seed and the tag path alone.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(uint64_t seed);

  // Derived stream for `tag`. Same parent + same tag -> same stream.
  RngStream child(uint64_t tag) const;
  RngStream child(StreamPurpose purpose, uint64_t index = 0) const {
    return child(tag(purpose, index));
  }

  static uint64_t tag(StreamPurpose purpose, uint64_t index) {
    return (static_cast<uint64_t>(purpose) << 56) | index;
  }

  // Raw 64-bit draw (one per call; each Philox block yields two).
  uint64_t next_u64();

  // Uniform on the open interval (0, 1).
  double uniform();

  // Standard normal draw.
  double normal();
  void fill_normal(std::span<double> out);

 private:
  std::array<uint32_t, 4> next_block();

  uint64_t key_;
  uint64_t stream_;
  uint64_t block_ = 0;
  uint64_t pending_u64_ = 0;
  bool has_pending_u64_ = false;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

}  // namespace lcsim
