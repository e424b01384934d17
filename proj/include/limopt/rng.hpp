#pragma once

#include <cstdint>
#include <random>

#include "limopt/vec.hpp"

namespace limopt {

// Reproducible random stream addressed by (master_seed, stream_index).
// Distinct stream indices give independent streams that can run concurrently.
// The engine (mt19937_64, bit-exact per the C++ standard) and every
// distribution transform are pinned here instead of taken from <random>,
// whose distributions are implementation-defined, so a stream replays the
// same sequence regardless of standard library.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double next_double();

  // Standard normal draw (Marsaglia polar method).
  double next_gaussian();

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// d i.i.d. N(0, sigma^2) entries. sigma == 0 yields the zero vector while
// consuming the same number of draws, so downstream stream state is
// independent of sigma.
ParamVector gaussian_vector(RngStream& rng, std::size_t d, double sigma);

}  // namespace limopt
