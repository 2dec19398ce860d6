#include "eraselab/numerics/random.hpp"

#include <cmath>

#include "eraselab/errors.hpp"

namespace eraselab::numerics {

Rng Rng::substream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  std::uint64_t mixed = 0;
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  mixed = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return Rng(mixed);
}

double Rng::uniform_open() {
  double u;
  do {
    u = std::generate_canonical<double, 53>(engine_);
  } while (u <= 0.0 || u >= 1.0);
  return u;
}

std::size_t Rng::uniform_index(std::size_t n) {
  require(n > 0, ErrorKind::Parameter, "uniform_index over an empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

double Rng::gumbel() { return -std::log(-std::log(uniform_open())); }

std::vector<double> Rng::normal_vector(std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = normal();
  return v;
}

std::vector<double> Rng::gumbel_vector(std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = gumbel();
  return v;
}

}  // namespace eraselab::numerics
