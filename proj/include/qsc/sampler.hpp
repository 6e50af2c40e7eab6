#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace qsc {

/// Seeded pseudo-random source. Identical (seed, stream) pairs produce
/// identical sequences; independent sub-streams are derived with split().
class SeededSampler {
 public:
  explicit SeededSampler(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t next_u64() { return engine_(); }
  std::mt19937_64& engine() noexcept { return engine_; }

  /// Child sampler on a sub-stream; does not consume from this sampler.
  SeededSampler split(std::uint64_t child) const {
    return SeededSampler(seed_, mix(stream_ ^ mix(child + 0x9e3779b97f4a7c15ULL)));
  }

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Samples per Monte Carlo chunk. Chunk k always draws from sub-stream k of
/// the run's base sampler, so totals do not depend on the worker count.
inline constexpr std::size_t kChunkSize = 1u << 16;

/// Runs `body(chunk_sampler, begin, end) -> Acc` over fixed-size chunks of
/// [0, n) and folds the per-chunk results in chunk order with `combine`.
template <class Acc, class Body, class Combine>
Acc parallel_chunks(std::size_t n, const SeededSampler& base, unsigned workers, Acc init,
                    Body body, Combine combine) {
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<Acc> partial(chunks, init);
  auto run_range = [&](std::size_t first_chunk, std::size_t stride) {
    for (std::size_t c = first_chunk; c < chunks; c += stride) {
      SeededSampler sampler = base.split(c);
      const std::size_t begin = c * kChunkSize;
      const std::size_t end = std::min(n, begin + kChunkSize);
      partial[c] = body(sampler, begin, end);
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1 || chunks <= 1) {
    run_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    const auto used = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
    pool.reserve(used);
    for (unsigned w = 0; w < used; ++w) pool.emplace_back(run_range, w, used);
    for (auto& t : pool) t.join();
  }
  Acc acc = init;
  for (auto& p : partial) acc = combine(acc, p);
  return acc;
}

}  // namespace qsc
