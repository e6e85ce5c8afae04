#include "lcsim/rng.hpp"

#include <cmath>

namespace lcsim {

namespace detail {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline std::array<uint32_t, 4> philox_round(const std::array<uint32_t, 4>& c,
                                            const std::array<uint32_t, 2>& k) {
  const uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * c[0];
  const uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * c[2];
  return {static_cast<uint32_t>(p1 >> 32) ^ c[1] ^ k[0],
          static_cast<uint32_t>(p1),
          static_cast<uint32_t>(p0 >> 32) ^ c[3] ^ k[1],
          static_cast<uint32_t>(p0)};
}

}  // namespace

std::array<uint32_t, 4> philox4x32_10(const std::array<uint32_t, 4>& counter,
                                      const std::array<uint32_t, 2>& key) {
  std::array<uint32_t, 4> c = counter;
  std::array<uint32_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kPhiloxW0;
      k[1] += kPhiloxW1;
    }
    c = philox_round(c, k);
  }
  return c;
}

uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

RngStream::RngStream(uint64_t seed)
    : key_(detail::mix64(seed)),
      stream_(detail::mix64(seed ^ 0xA3EC647659359ACDull)) {}

RngStream RngStream::child(uint64_t tag) const {
  RngStream c;
  c.key_ = detail::mix64(key_ ^ detail::mix64(tag ^ 0x8E9FBC4E6C4F1B2Aull));
  c.stream_ = detail::mix64(stream_ + detail::mix64(tag));
  c.block_ = 0;
  c.has_pending_u64_ = false;
  c.has_spare_normal_ = false;
  return c;
}

std::array<uint32_t, 4> RngStream::next_block() {
  const std::array<uint32_t, 4> counter = {
      static_cast<uint32_t>(block_), static_cast<uint32_t>(block_ >> 32),
      static_cast<uint32_t>(stream_), static_cast<uint32_t>(stream_ >> 32)};
  const std::array<uint32_t, 2> key = {static_cast<uint32_t>(key_),
                                       static_cast<uint32_t>(key_ >> 32)};
  ++block_;
  return detail::philox4x32_10(counter, key);
}

uint64_t RngStream::next_u64() {
  if (has_pending_u64_) {
    has_pending_u64_ = false;
    return pending_u64_;
  }
  const auto b = next_block();
  pending_u64_ = (static_cast<uint64_t>(b[2]) << 32) | b[3];
  has_pending_u64_ = true;
  return (static_cast<uint64_t>(b[0]) << 32) | b[1];
}

double RngStream::uniform() {
  // 53-bit mantissa, offset by half an ulp so the result stays in (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_normal_ = r * std::sin(a);
  has_spare_normal_ = true;
  return r * std::cos(a);
}

void RngStream::fill_normal(std::span<double> out) {
  for (double& x : out) {
    x = normal();
  }
}

}  // namespace lcsim
