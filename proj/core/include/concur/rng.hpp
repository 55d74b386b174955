#pragma once

#include <cstdint>
#include <random>

namespace concur {

// Deterministic random source identified by (seed, stream_id).
//
// The engine is std::mt19937_64 seeded through std::seed_seq, and every
// variate below is generated by code in this library rather than by the
// <random> distributions, whose algorithms are implementation-defined. Equal
// (seed, stream_id) therefore gives bit-identical draws on every platform.
//
// Independent streams are derived by counter: substream(i) hashes
// (stream_id, i) into a fresh stream id. A stream is never split mid-way, so a
// replicate's draws do not depend on how many replicates ran before it or on
// which worker thread ran it.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  SeededRng substream(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  double normal();
  double exponential();
  // Gamma(shape, 1), Marsaglia-Tsang.
  double gamma(double shape);
  double student_t(double dof);

private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

} // namespace concur
