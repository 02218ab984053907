#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace wormpimc {

// Reproducible per-chain random stream. All draws go through uniform() so the
// sequence depends only on the mt19937_64 state, not on libstdc++ distribution
// internals.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t chain) {
    std::seed_seq seq{seed, chain, std::uint64_t{0x77b54f5d86a9024dULL}};
    gen_.seed(seq);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // integer in [0, n), exact via rejection
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= lim);
    return x % n;
  }

  bool coin() { return (gen_() & 1u) != 0; }

  std::string save() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }
  void restore(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
  }

  bool operator==(const RngStream& o) const { return gen_ == o.gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace wormpimc
