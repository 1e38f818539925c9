#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "ccch/errors.hpp"

namespace ccch {

/// Uniform periodic grid on [-L, L) standing in for the real line.
class Grid {
 public:
  Grid(double half_length, std::size_t n_points) {
    if (!(half_length > 0.0) || !std::isfinite(half_length)) {
      throw ConfigError("grid half_length must be positive and finite, got " +
                        std::to_string(half_length));
    }
    if (n_points < 16 || (n_points & (n_points - 1)) != 0) {
      throw ConfigError("grid n_points must be a power of two >= 16, got " +
                        std::to_string(n_points));
    }
    half_length_ = half_length;
    n_points_ = n_points;
    spacing_ = 2.0 * half_length / static_cast<double>(n_points);
  }

  double half_length() const { return half_length_; }
  std::size_t size() const { return n_points_; }
  double spacing() const { return spacing_; }
  double length() const { return 2.0 * half_length_; }

  double node(std::size_t j) const {
    return -half_length_ + static_cast<double>(j) * spacing_;
  }

  /// Angular wavenumber of FFT bin j (standard FFT ordering).
  double wavenumber(std::size_t j) const {
    const auto n = static_cast<long>(n_points_);
    long s = static_cast<long>(j);
    if (s > n / 2) s -= n;
    return 2.0 * M_PI * static_cast<double>(s) / length();
  }

  bool is_nyquist(std::size_t j) const { return j == n_points_ / 2; }

  /// Map x onto [-L, L).
  double wrap(double x) const {
    double y = std::fmod(x + half_length_, length());
    if (y < 0.0) y += length();
    return y - half_length_;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.half_length_ == b.half_length_ && a.n_points_ == b.n_points_;
  }

 private:
  double half_length_ = 0.0;
  std::size_t n_points_ = 0;
  double spacing_ = 0.0;
};

inline Grid make_grid(double half_length, std::size_t n_points) {
  return Grid(half_length, n_points);
}

}  // namespace ccch
