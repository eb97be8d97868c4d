#include "getzler/curvature.hpp"

#include <random>
#include <stdexcept>

namespace getzler {

CurvatureIndeterminate CurvatureIndeterminate::from_code(uint16_t c) {
  CurvatureIndeterminate r;
  r.m = c % 8;
  c /= 8;
  r.l = c % 8;
  c /= 8;
  r.k = c % 8;
  c /= 8;
  r.j = c % 8;
  c /= 8;
  r.i = static_cast<uint8_t>(c);
  return r;
}

std::string CurvatureIndeterminate::str() const {
  std::string s = "R[" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) +
                  "," + std::to_string(l);
  if (m) s += ";" + std::to_string(m);
  return s + "]";
}

CanonicalCurvature canonicalize_curvature(int i, int j, int k, int l,
                                          const std::vector<int>& deriv, int n) {
  auto in_range = [n](int v) { return v >= 1 && v <= n; };
  if (n < 1 || n > kMaxDim) throw std::out_of_range("dimension out of range");
  if (!in_range(i) || !in_range(j) || !in_range(k) || !in_range(l))
    throw std::out_of_range("curvature index out of range");
  if (deriv.size() > 1) throw std::invalid_argument("only first covariant derivatives supported");
  int m = deriv.empty() ? 0 : deriv[0];
  if (m && !in_range(m)) throw std::out_of_range("derivative index out of range");
  CanonicalCurvature out;
  if (i == j || k == l) return out;
  int sign = 1;
  if (i > j) std::swap(i, j), sign = -sign;
  if (k > l) std::swap(k, l), sign = -sign;
  if (std::pair(i, j) > std::pair(k, l)) std::swap(i, k), std::swap(j, l);
  out.sign = sign;
  out.r = {static_cast<uint8_t>(i), static_cast<uint8_t>(j), static_cast<uint8_t>(k),
           static_cast<uint8_t>(l), static_cast<uint8_t>(m)};
  return out;
}

Scalar CurvatureTensor::ricci(int k, int l) const {
  Scalar s;
  for (int i = 1; i <= n; ++i) s += at(i, k, l, i);
  return s;
}

Scalar CurvatureTensor::scalar_curvature() const {
  Scalar s;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) s += at(i, j, j, i);
  return s;
}

namespace {

using Tensor = std::vector<Scalar>;

Tensor bianchi_part(const Tensor& t, int n) {
  // b(R)_{ijkl} = (R_{ijkl} + R_{iklj} + R_{iljk}) / 3
  auto idx = [n](int i, int j, int k, int l) { return ((i * n + j) * n + k) * n + l; };
  Tensor b(t.size());
  Scalar third = Scalar::frac(1, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          b[idx(i, j, k, l)] =
              (t[idx(i, j, k, l)] + t[idx(i, k, l, j)] + t[idx(i, l, j, k)]) * third;
  return b;
}

Tensor project_bianchi(const Tensor& t, int n) {
  Tensor b = bianchi_part(t, n);
  Tensor out(t.size());
  for (size_t a = 0; a < t.size(); ++a) out[a] = t[a] - b[a];
  return out;
}

}  // namespace

CurvatureTensor random_curvature_any_dim(int n, uint64_t seed) {
  if (n < 2 || n > kMaxDim) throw std::invalid_argument("dimension must be in 2..6");
  std::mt19937_64 rng(seed);
  auto idx = [n](int i, int j, int k, int l) { return ((i * n + j) * n + k) * n + l; };
  size_t N = static_cast<size_t>(n) * n * n * n;
  Tensor raw(N);
  for (auto& v : raw) v = Scalar(static_cast<long>(rng() % 9) - 4);
  // antisymmetrize both pairs, then symmetrize the pair exchange
  Tensor t(N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          auto A = [&](int a, int b, int c, int d) {
            return raw[idx(a, b, c, d)] - raw[idx(b, a, c, d)] - raw[idx(a, b, d, c)] +
                   raw[idx(b, a, d, c)];
          };
          t[idx(i, j, k, l)] = A(i, j, k, l) + A(k, l, i, j);
        }
  Tensor p = project_bianchi(t, n);
  // the projection must be idempotent on monoterm-symmetric input
  if (project_bianchi(p, n) != p) throw std::logic_error("Bianchi projection not idempotent");
  CurvatureTensor out;
  out.n = n;
  out.R = std::move(p);
  if (!has_monoterm_symmetries(out) || !satisfies_bianchi(out))
    throw std::logic_error("random curvature failed its symmetry checks");
  return out;
}

CurvatureTensor random_curvature(int n, uint64_t seed) {
  if (n % 2 != 0) throw std::invalid_argument("random_curvature requires even dimension");
  return random_curvature_any_dim(n, seed);
}

bool has_monoterm_symmetries(const CurvatureTensor& t) {
  int n = t.n;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l) {
          const Scalar& r = t.at(i, j, k, l);
          if (r != -t.at(j, i, k, l) || r != -t.at(i, j, l, k) || r != t.at(k, l, i, j))
            return false;
        }
  return true;
}

bool satisfies_bianchi(const CurvatureTensor& t) {
  int n = t.n;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l)
          if (!(t.at(i, j, k, l) + t.at(i, k, l, j) + t.at(i, l, j, k)).is_zero()) return false;
  return true;
}

}  // namespace getzler
