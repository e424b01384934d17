#include "limopt/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace limopt {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Hashes (master, index) into one well-dispersed engine seed. splitmix64 is a
// bijection of its state, so distinct states give distinct seeds.
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1 | b >> 63);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_seed_(master_seed),
      stream_index_(stream_index),
      engine_(derive_stream_seed(master_seed, stream_index)) {}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::next_double() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * next_double() - 1.0;
    v = 2.0 * next_double() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

ParamVector gaussian_vector(RngStream& rng, std::size_t d, double sigma) {
  if (sigma < 0.0) {
    throw std::invalid_argument("gaussian_vector: sigma must be >= 0, got " +
                                std::to_string(sigma));
  }
  if (d == 0) {
    throw std::invalid_argument("gaussian_vector: d must be >= 1");
  }
  ParamVector out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = sigma * rng.next_gaussian();
  return out;
}

}  // namespace limopt
