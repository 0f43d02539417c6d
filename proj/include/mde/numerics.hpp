// mde/numerics.hpp

// Copyright 2026  MDE Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MDE_NUMERICS_HPP_
#define MDE_NUMERICS_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mde {

// Validation failures (bad arguments, violated contracts). Mapped to exit
// code 1 at the CLI boundary.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string &msg) : std::runtime_error(msg) {}
};

// Filesystem and format failures. Mapped to exit code 2 at the CLI boundary.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string &msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string &msg) {
  if (!cond) throw ValidationError(msg);
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Dense row-major matrix of doubles. All linear algebra at desk scale runs
// through this one type; a 1xN Mat doubles as a row vector.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
    require(r >= 0 && c >= 0, "Mat: negative dimension");
  }

  double &at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<size_t>(r) * cols + c];
  }
  std::span<double> row(int r) {
    return std::span<double>(data.data() + static_cast<size_t>(r) * cols,
                             cols);
  }
  std::span<const double> row(int r) const {
    return std::span<const double>(data.data() + static_cast<size_t>(r) * cols,
                                   cols);
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Mat &o) const {
    return rows == o.rows && cols == o.cols;
  }
  bool all_finite() const;
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// out = a * b, shapes (m x k)(k x n).
Mat matmul(const Mat &a, const Mat &b);
// c += a * b without allocating.
void matmul_acc(const Mat &a, const Mat &b, Mat *c);
// out = a^T
Mat transpose(const Mat &a);

// log sum_i exp(x_i), max-shifted. Errors on empty input; returns -inf when
// every element is -inf.
double logsumexp(std::span<const double> xs);

// out_t = exp(gamma*e_t) / sum_u exp(gamma*e_u). gamma must be positive and
// every energy finite.
std::vector<double> sharpened_softmax(std::span<const double> energies,
                                      double gamma);
void sharpened_softmax(std::span<const double> energies, double gamma,
                       std::span<double> out);

// Deterministic 64-bit generator. Same seed, same draw sequence, on every
// platform: the uniform/normal/int transforms are fixed here rather than
// delegated to implementation-defined std::distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // [0, 1)
  double uniform();
  // standard normal via Box-Muller
  double normal();
  // uniform integer in [lo, hi], inclusive
  int uniform_int(int lo, int hi);
  uint64_t seed() const { return seed_; }
  // Independent stream derived from this generator's seed and a key.
  Rng child(uint64_t key) const;

 private:
  uint64_t seed_;
  uint64_t state_;
};

// 64-bit FNV-1a, used for inventory hashes and string-keyed Rng children.
uint64_t fnv1a64(std::string_view s);

// Max over coordinates of |central_diff_i - grad_i| / max(|grad_i|, 1e-8).
// eps must lie in [1e-7, 1e-3]; f must evaluate finite at the probe points.
double finite_diff_check(
    const std::function<double(std::span<const double>)> &f,
    std::span<const double> x, std::span<const double> grad, double eps);

// Same check restricted to a subset of coordinates.
double finite_diff_check_subset(
    const std::function<double(std::span<const double>)> &f,
    std::span<const double> x, std::span<const double> grad, double eps,
    std::span<const int> coords);

}  // namespace mde

#endif  // MDE_NUMERICS_HPP_
