#pragma once

// Shared plumbing: deterministic RNG, seed derivation, a small dense matrix
// type, error taxonomy, logging. Everything downstream assumes the RNG is
// bit-reproducible across platforms, so no std::*_distribution is used.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace biovita {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto exit codes (usage/config=1, io=2,
// infeasible-data=3), so library code should pick the matching type.
// ---------------------------------------------------------------------------
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// RNG: splitmix64 core. All randomness in a run flows from one root seed;
// subsystems get independent streams via derive_seed(root, label) so adding
// a consumer never perturbs the draws of another.
// ---------------------------------------------------------------------------
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) with 53 bits of mantissa.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0,n) by rejection.
  uint64_t below(uint64_t n) {
    if (n == 0) throw ValidationError("Rng::below called with n=0");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // Box-Muller. Two uniforms per call; no cached spare, so the stream
  // position is a simple function of the call count.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0,n), order randomized. Partial Fisher-Yates.
  std::vector<uint32_t> sample_without_replacement(uint32_t n, uint32_t k) {
    if (k > n) throw ValidationError("sample_without_replacement: k > n");
    std::vector<uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    for (uint32_t i = 0; i < k; ++i) {
      uint32_t j = i + uint32_t(below(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  uint64_t state_;
};

// FNV-1a over the label folded into the root seed, then one splitmix round
// to decorrelate nearby labels.
inline uint64_t derive_seed(uint64_t root, std::string_view label) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : label) {
    h ^= uint8_t(c);
    h *= 0x100000001b3ull;
  }
  Rng mix(root ^ h);
  mix.next_u64();
  return mix.next_u64();
}

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles. Biases are 1xN matrices so the
// optimizer and checkpoint writer can treat every parameter uniformly.
// ---------------------------------------------------------------------------
struct Mat {
  size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(size_t i, size_t j) { return a[i * cols + j]; }
  double operator()(size_t i, size_t j) const { return a[i * cols + j]; }
  size_t size() const { return a.size(); }
  bool empty() const { return a.empty(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

inline double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double l2_norm(const Vec& x) { return std::sqrt(dot(x, x)); }

// y = M x
inline Vec matvec(const Mat& m, const Vec& x) {
  Vec y(m.rows, 0.0);
  for (size_t i = 0; i < m.rows; ++i) {
    const double* row = &m.a[i * m.cols];
    double s = 0.0;
    for (size_t j = 0; j < m.cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

// y = M^T x
inline Vec matvec_transpose(const Mat& m, const Vec& x) {
  Vec y(m.cols, 0.0);
  for (size_t i = 0; i < m.rows; ++i) {
    const double* row = &m.a[i * m.cols];
    for (size_t j = 0; j < m.cols; ++j) y[j] += row[j] * x[i];
  }
  return y;
}

// acc += u v^T
inline void add_outer(Mat& acc, const Vec& u, const Vec& v) {
  for (size_t i = 0; i < u.size(); ++i) {
    double ui = u[i];
    double* row = &acc.a[i * acc.cols];
    for (size_t j = 0; j < v.size(); ++j) row[j] += ui * v[j];
  }
}

inline void add_scaled(Vec& acc, const Vec& x, double c) {
  for (size_t i = 0; i < x.size(); ++i) acc[i] += c * x[i];
}

// ---------------------------------------------------------------------------
// Deterministic parallel-for: contiguous chunks, each worker writes only its
// own output slots, so results are identical for any thread count.
// ---------------------------------------------------------------------------
inline void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  size_t workers = std::min<size_t>(size_t(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  size_t chunk = (n + workers - 1) / workers;
  for (size_t w = 0; w < workers; ++w) {
    size_t lo = w * chunk;
    size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Logging. BIOVITA_LOG in {debug, info, warn, error}; default info.
// ---------------------------------------------------------------------------
enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

inline LogLevel log_level() {
  static LogLevel lvl = [] {
    const char* env = std::getenv("BIOVITA_LOG");
    if (!env) return LogLevel::Info;
    std::string_view s(env);
    if (s == "debug") return LogLevel::Debug;
    if (s == "warn") return LogLevel::Warn;
    if (s == "error") return LogLevel::Error;
    return LogLevel::Info;
  }();
  return lvl;
}

inline void log_msg(LogLevel lvl, const std::string& msg) {
  if (int(lvl) < int(log_level())) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::fprintf(stderr, "[biovita %s] %s\n", names[int(lvl)], msg.c_str());
}

inline void log_debug(const std::string& m) { log_msg(LogLevel::Debug, m); }
inline void log_info(const std::string& m) { log_msg(LogLevel::Info, m); }
inline void log_warn(const std::string& m) { log_msg(LogLevel::Warn, m); }
inline void log_error(const std::string& m) { log_msg(LogLevel::Error, m); }

}  // namespace biovita
