#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "getzler/scalar.hpp"

namespace getzler {

constexpr int kMaxDim = 6;

// R_{ijkl} or R_{ijkl;m}; m == 0 means no covariant derivative.
// Packed into 15 bits so that integer order equals (i,j,k,l,m) lexicographic order.
struct CurvatureIndeterminate {
  uint8_t i = 0, j = 0, k = 0, l = 0, m = 0;

  uint16_t code() const {
    return static_cast<uint16_t>((((i * 8 + j) * 8 + k) * 8 + l) * 8 + m);
  }
  static CurvatureIndeterminate from_code(uint16_t c);
  bool has_derivative() const { return m != 0; }
  std::string str() const;  // "R[1,2,1,2]" or "R[1,2,1,2;3]"
  friend bool operator==(const CurvatureIndeterminate& a, const CurvatureIndeterminate& b) {
    return a.code() == b.code();
  }
};

struct CanonicalCurvature {
  int sign = 0;  // 0: forced to vanish
  CurvatureIndeterminate r;
};

// Monoterm symmetries only. deriv holds at most one index.
CanonicalCurvature canonicalize_curvature(int i, int j, int k, int l,
                                          const std::vector<int>& deriv, int n);

// Numeric curvature data at p. R is mandatory; dR (nabla R, last index is the
// derivative slot) is optional and left symbolic when empty.
struct CurvatureTensor {
  int n = 0;
  std::vector<Scalar> R;   // n^4, 0-based ((i*n+j)*n+k)*n+l
  std::vector<Scalar> dR;  // n^5 or empty

  const Scalar& at(int i, int j, int k, int l) const {  // 1-based
    return R[(((i - 1) * n + (j - 1)) * n + (k - 1)) * n + (l - 1)];
  }
  Scalar& at(int i, int j, int k, int l) {
    return R[(((i - 1) * n + (j - 1)) * n + (k - 1)) * n + (l - 1)];
  }
  const Scalar& d_at(int i, int j, int k, int l, int m) const {
    return dR[((((i - 1) * n + (j - 1)) * n + (k - 1)) * n + (l - 1)) * n + (m - 1)];
  }
  bool has_derivative() const { return !dR.empty(); }
  Scalar ricci(int k, int l) const;  // sum_i R_{ikli}
  Scalar scalar_curvature() const;   // sum_{ij} R_{ijji}
};

// Random algebraic curvature tensor with exact rational entries. Even n only;
// the any-n variant backs odd-dimensional tests.
CurvatureTensor random_curvature(int n, uint64_t seed);
CurvatureTensor random_curvature_any_dim(int n, uint64_t seed);

bool has_monoterm_symmetries(const CurvatureTensor& t);
bool satisfies_bianchi(const CurvatureTensor& t);

}  // namespace getzler
