#pragma once

#include <cstdint>
#include <cmath>

#include "hfi/common.hpp"

namespace hfi {

/// Deterministic random stream with explicit substreams.
///
/// Each (seed, stream) pair yields an independent, reproducible sequence.
/// Replication loops hand stream = replication index to every worker, so
/// results cannot depend on thread scheduling. The uniform and normal
/// transforms are implemented here rather than taken from <random> so the
/// draw sequence does not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    // splitmix64 over (seed, stream) to decorrelate nearby substreams
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    for (int i = 0; i < 4; ++i) z = mix_(z);
    state_ = z == 0 ? 0x853c49e6748fea9bULL : z;
  }

  std::uint64_t next_u64() {
    state_ = mix_(state_ + 0x9e3779b97f4a7c15ULL);
    return state_;
  }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the polar method (rejection is deterministic
  /// given the stream).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // rejection to avoid modulo bias
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

 private:
  static std::uint64_t mix_(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hfi
