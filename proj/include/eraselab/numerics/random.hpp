#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace eraselab::numerics {

// Seeded 64-bit Mersenne Twister with the draws the pipeline needs.
// Independent substreams are derived from (seed, stream tag) so that
// consumers which must stay aligned across runs never share a stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const noexcept { return seed_; }

  double normal() { return normal_(engine_); }
  // Uniform on the open interval (0, 1).
  double uniform_open();
  std::size_t uniform_index(std::size_t n);
  // Standard Gumbel(0, 1) draw.
  double gumbel();

  std::vector<double> normal_vector(std::size_t n);
  std::vector<double> gumbel_vector(std::size_t n);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace eraselab::numerics
