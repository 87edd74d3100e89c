#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace decor {

// Error taxonomy. The CLI maps these onto process exit codes
// (config 2, format 3, numerical 4).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct shape_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Format errors carry the byte offset where parsing stopped making sense.
struct format_error : std::runtime_error {
  std::size_t offset;
  format_error(const std::string& msg, std::size_t at)
      : std::runtime_error(msg + " (at byte offset " + std::to_string(at) + ")"),
        offset(at) {}
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic xoshiro256** stream. All randomized code in the library
// draws from one of these, forked by (seed, tag) so that independent
// stages never share a stream and results do not depend on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : origin_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  // Derives an independent stream. fork(a).fork(b) differs from fork(b).fork(a).
  Rng fork(std::uint64_t tag) const {
    std::uint64_t sm = origin_ ^ (0x94d049bb133111ebull + tag);
    splitmix64(sm);
    return Rng(splitmix64(sm));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1), 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0,n), n > 0 (Lemire rejection).
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t x = next_u64();
    __uint128_t m = (__uint128_t)x * n;
    std::uint64_t l = (std::uint64_t)m;
    if (l < n) {
      std::uint64_t t = (-n) % n;
      while (l < t) {
        x = next_u64();
        m = (__uint128_t)x * n;
        l = (std::uint64_t)m;
      }
    }
    return (std::uint64_t)(m >> 64);
  }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0,1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = (std::size_t)below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t origin() const { return origin_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t origin_;
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Worker cap: DECOR_THREADS wins over hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("DECOR_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : (int)hw;
}

// Runs f(i) for i in [0,n). Results must be written to disjoint
// preallocated slots; chunk boundaries are fixed so output placement
// never depends on the number of workers.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  int workers = worker_count();
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  workers = (int)std::min<std::size_t>((std::size_t)workers, n);
  std::vector<std::thread> pool;
  pool.reserve((std::size_t)workers);
  std::size_t chunk = (n + (std::size_t)workers - 1) / (std::size_t)workers;
  for (int w = 0; w < workers; ++w) {
    std::size_t lo = (std::size_t)w * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &f] {
      for (std::size_t i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace decor
