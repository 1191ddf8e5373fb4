#pragma once

#include <cstdint>
#include <random>

namespace dnsaml::sim
{

/// Logical clock in whole seconds; nothing in the lab reads wall time.
class SimClock
{
public:
  std::uint64_t now() const noexcept { return now_; }
  void advance(std::uint64_t seconds) noexcept { now_ += seconds; }

private:
  std::uint64_t now_{0};
};

/// Seeded generator with a portable Bernoulli draw (std distributions are
/// implementation-defined, so transcripts would differ across libraries).
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p)
  {
    if (p >= 1.0)
      return true;
    if (p <= 0.0)
      return false;
    return uniform() < p;
  }

  /// Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n)
  {
    if (n <= 1)
      return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do
      x = engine_();
    while (x >= limit);
    return x % n;
  }

private:
  std::mt19937_64 engine_;
};

} // namespace dnsaml::sim
