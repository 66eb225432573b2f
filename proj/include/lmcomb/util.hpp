#ifndef LMCOMB_UTIL_HPP
#define LMCOMB_UTIL_HPP

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lmcomb {

// Error raised by all modules for invalid input or malformed files.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string strprintf(const char* fmt, ...);

// log10 probability arithmetic.  -99 is the conventional "zero probability"
// sentinel used in ARPA files; 10^-99 underflows all sums we care about.
inline constexpr double kLog10Zero = -99.0;

// log10(10^a + 10^b), stable for widely separated magnitudes.
inline double log10_add(double a, double b) {
  if (a < b) std::swap(a, b);
  return a + std::log10(1.0 + std::pow(10.0, b - a));
}

// ln(e^a + e^b)
inline double ln_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

double ln_sum(const std::vector<double>& xs);

// Deterministic RNG.  Distributions are derived from raw mt19937_64 draws so
// that generated fixtures are byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next();                       // raw 64-bit draw
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal(double mean = 0.0, double stddev = 1.0);
  uint64_t below(uint64_t n);            // [0, n)
  // Sample an index from unnormalized non-negative weights.
  size_t categorical(const std::vector<double>& weights);

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Runs fn(begin, end) over [0, n) split into contiguous chunks, one per
// worker.  Results must be written to per-index slots so the outcome is
// independent of the thread count.
void parallel_for(size_t n, int threads, const std::function<void(size_t, size_t)>& fn);

std::vector<std::string> split_whitespace(std::string_view line);
std::vector<std::string> split_on(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::vector<std::string> read_lines(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace lmcomb

#endif  // LMCOMB_UTIL_HPP
