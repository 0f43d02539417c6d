// mde/numerics.cpp

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

#include "mde/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace mde {

bool Mat::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Mat matmul(const Mat &a, const Mat &b) {
  Mat c(a.rows, b.cols);
  matmul_acc(a, b, &c);
  return c;
}

void matmul_acc(const Mat &a, const Mat &b, Mat *c) {
  require(a.cols == b.rows && c->rows == a.rows && c->cols == b.cols,
          "matmul: shape mismatch (" + std::to_string(a.rows) + "x" +
              std::to_string(a.cols) + ")*(" + std::to_string(b.rows) + "x" +
              std::to_string(b.cols) + ")");
  for (int i = 0; i < a.rows; ++i) {
    const double *arow = a.data.data() + static_cast<size_t>(i) * a.cols;
    double *crow = c->data.data() + static_cast<size_t>(i) * c->cols;
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double *brow = b.data.data() + static_cast<size_t>(k) * b.cols;
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
}

Mat transpose(const Mat &a) {
  Mat t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

double logsumexp(std::span<const double> xs) {
  require(!xs.empty(), "logsumexp: empty input");
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

std::vector<double> sharpened_softmax(std::span<const double> energies,
                                      double gamma) {
  std::vector<double> out(energies.size());
  sharpened_softmax(energies, gamma, out);
  return out;
}

void sharpened_softmax(std::span<const double> energies, double gamma,
                       std::span<double> out) {
  require(!energies.empty(), "sharpened_softmax: empty input");
  require(gamma > 0.0, "sharpened_softmax: gamma must be positive");
  require(out.size() == energies.size(), "sharpened_softmax: bad output size");
  double m = kNegInf;
  for (double e : energies) {
    require(std::isfinite(e), "sharpened_softmax: non-finite energy");
    m = std::max(m, gamma * e);
  }
  double z = 0.0;
  for (size_t i = 0; i < energies.size(); ++i) {
    out[i] = std::exp(gamma * energies[i] - m);
    z += out[i];
  }
  for (size_t i = 0; i < energies.size(); ++i) out[i] /= z;
}

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed), state_(splitmix64(seed)) {
  if (state_ == 0) state_ = 0x6a09e667f3bcc909ULL;
}

uint64_t Rng::next_u64() {
  // xorshift64* on a splitmix-initialized state
  uint64_t x = state_;
  x ^= x >> 12;
  x ^= x << 25;
  x ^= x >> 27;
  state_ = x;
  return x * 0x2545f4914f6cdd1dULL;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  double u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log1p(-u1));
  return r * std::cos(2.0 * M_PI * u2);
}

int Rng::uniform_int(int lo, int hi) {
  require(lo <= hi, "uniform_int: empty range");
  uint64_t range = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
  uint64_t bound = UINT64_MAX - UINT64_MAX % range;
  uint64_t draw;
  do {
    draw = next_u64();
  } while (draw >= bound);
  return lo + static_cast<int>(draw % range);
}

Rng Rng::child(uint64_t key) const {
  return Rng(splitmix64(seed_ ^ (key * 0x9e3779b97f4a7c15ULL + 1)));
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double finite_diff_check(
    const std::function<double(std::span<const double>)> &f,
    std::span<const double> x, std::span<const double> grad, double eps) {
  std::vector<int> coords(x.size());
  for (size_t i = 0; i < x.size(); ++i) coords[i] = static_cast<int>(i);
  return finite_diff_check_subset(f, x, grad, eps, coords);
}

double finite_diff_check_subset(
    const std::function<double(std::span<const double>)> &f,
    std::span<const double> x, std::span<const double> grad, double eps,
    std::span<const int> coords) {
  require(eps >= 1e-7 && eps <= 1e-3, "finite_diff_check: eps out of range");
  require(x.size() == grad.size(), "finite_diff_check: size mismatch");
  std::vector<double> xp(x.begin(), x.end());
  double worst = 0.0;
  for (int i : coords) {
    require(i >= 0 && static_cast<size_t>(i) < x.size(),
            "finite_diff_check: coordinate out of range");
    const double orig = xp[i];
    xp[i] = orig + eps;
    double fp = f(xp);
    xp[i] = orig - eps;
    double fm = f(xp);
    xp[i] = orig;
    require(std::isfinite(fp) && std::isfinite(fm),
            "finite_diff_check: non-finite objective");
    double cd = (fp - fm) / (2.0 * eps);
    double err = std::abs(cd - grad[i]) / std::max(std::abs(grad[i]), 1e-8);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace mde
