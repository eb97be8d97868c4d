#include "getzler/exterior.hpp"

#include <algorithm>
#include <array>
#include <mutex>

namespace getzler {

std::vector<int> subset_indices(Subset s) {
  std::vector<int> v;
  for (int k = 1; s; ++k, s >>= 1)
    if (s & 1) v.push_back(k);
  return v;
}

Subset subset_from_indices(const std::vector<int>& idx) {
  Subset s = 0;
  for (int k : idx) {
    if (k < 1 || k > 6) throw std::out_of_range("subset index out of range");
    if (s & single(k)) throw std::invalid_argument("repeated subset index");
    s |= single(k);
  }
  return s;
}

const std::vector<Subset>& basis_order(int n) {
  static std::array<std::vector<Subset>, 7> cache;
  static std::once_flag once;
  std::call_once(once, [] {
    for (int d = 0; d <= 6; ++d) {
      auto& v = cache[d];
      for (Subset s = 0; s < (Subset(1) << d); ++s) v.push_back(s);
      std::sort(v.begin(), v.end(), [](Subset a, Subset b) {
        if (subset_size(a) != subset_size(b)) return subset_size(a) < subset_size(b);
        return subset_indices(a) < subset_indices(b);
      });
    }
  });
  if (n < 0 || n > 6) throw std::out_of_range("dimension out of range");
  return cache[n];
}

std::string subset_label(Subset s, const char* sep) {
  if (!s) return "1";
  std::string out;
  for (int k : subset_indices(s)) {
    if (!out.empty()) out += sep;
    out += "e" + std::to_string(k);
  }
  return out;
}

namespace {

// number of pairs (i in a, j in b) with i > j
int inversions(Subset a, Subset b) {
  int count = 0;
  for (Subset bb = b; bb; bb &= bb - 1) {
    int j = std::countr_zero(bb);
    count += std::popcount(a >> (j + 1));
  }
  return count;
}

}  // namespace

int wedge_sign(Subset a, Subset b) {
  if (a & b) return 0;
  return inversions(a, b) % 2 ? -1 : 1;
}

int clifford_sign(Subset a, Subset b) {
  int e = inversions(a, b) + std::popcount(a & b);
  return e % 2 ? -1 : 1;
}

EndoMatrix<Scalar> contraction_matrix(int n, int k) {
  EndoMatrix<Scalar> e(n);
  Subset v = single(k);
  for (Subset J = 0; J < e.dim; ++J) {
    if (!(J & v)) continue;
    // e^k ^ e^{J\k} = sign e^J, so iota_k e^J = sign e^{J\k}
    e(J ^ v, J) = Scalar(wedge_sign(v, J ^ v));
  }
  return e;
}

EndoMatrix<Scalar> wedge_basis_matrix(int n, int k) {
  return wedge_matrix(FormElement<Scalar>::basis(n, single(k)));
}

EndoMatrix<PolyExpr> getzler_conjugate_inline(const EndoMatrix<PolyExpr>& q) {
  EndoMatrix<PolyExpr> r(q.n);
  for (size_t row = 0; row < q.dim; ++row)
    for (size_t col = 0; col < q.dim; ++col) {
      if (q(row, col).is_zero()) continue;
      r(row, col) = q(row, col).times_lambda(subset_size(Subset(col)) - subset_size(Subset(row)));
    }
  return r;
}

SMatrix SMatrix::identity(size_t d) {
  SMatrix m(d);
  for (size_t k = 0; k < d; ++k) m(k, k) = 1;
  return m;
}

SMatrix operator*(const SMatrix& x, const SMatrix& y) {
  SMatrix r(x.dim);
  for (size_t i = 0; i < x.dim; ++i)
    for (size_t k = 0; k < x.dim; ++k) {
      if (x(i, k).is_zero()) continue;
      for (size_t j = 0; j < x.dim; ++j)
        if (!y(k, j).is_zero()) r(i, j) += x(i, k) * y(k, j);
    }
  return r;
}

SMatrix operator+(const SMatrix& x, const SMatrix& y) {
  SMatrix r = x;
  for (size_t k = 0; k < r.a.size(); ++k) r.a[k] += y.a[k];
  return r;
}

SMatrix operator*(const Scalar& s, const SMatrix& x) {
  SMatrix r = x;
  for (auto& v : r.a) v *= s;
  return r;
}

Scalar SMatrix::trace() const {
  Scalar t;
  for (size_t k = 0; k < dim; ++k) t += (*this)(k, k);
  return t;
}

size_t SMatrix::rank() const {
  SMatrix w = *this;
  size_t rk = 0;
  for (size_t col = 0; col < dim && rk < dim; ++col) {
    size_t piv = rk;
    while (piv < dim && w(piv, col).is_zero()) ++piv;
    if (piv == dim) continue;
    for (size_t c = 0; c < dim; ++c) std::swap(w(piv, c), w(rk, c));
    for (size_t r = 0; r < dim; ++r) {
      if (r == rk || w(r, col).is_zero()) continue;
      Scalar f = w(r, col) / w(rk, col);
      for (size_t c = 0; c < dim; ++c) w(r, c) -= f * w(rk, c);
    }
    ++rk;
  }
  return rk;
}

SMatrix SpinorRep::word(Subset I) const {
  SMatrix m = SMatrix::identity(dim);
  for (int k : subset_indices(I)) m = m * gamma[k - 1];
  return m;
}

SMatrix SpinorRep::represent(const CliffordElement<Scalar>& a) const {
  SMatrix m(dim);
  for (Subset I = 0; I < a.c.size(); ++I)
    if (!a.c[I].is_zero()) m = m + a.c[I] * word(I);
  return m;
}

SpinorRep build_spinor_rep(int n) {
  if (n % 2 != 0 || n < 2 || n > 6) throw std::invalid_argument("spinor module needs even n in 2..6");
  int modes = n / 2;
  SpinorRep rep;
  rep.n = n;
  rep.dim = size_t(1) << modes;
  // Fock space Lambda(C^{n/2}); occupation bitmask basis
  auto creation = [&](int k) {
    SMatrix m(rep.dim);
    for (Subset s = 0; s < rep.dim; ++s) {
      if (s & single(k)) continue;
      int sign = std::popcount(s & (single(k) - 1)) % 2 ? -1 : 1;
      m(s | single(k), s) = sign;
    }
    return m;
  };
  for (int k = 1; k <= modes; ++k) {
    SMatrix ad = creation(k);
    SMatrix a(rep.dim);  // annihilation = transpose of creation
    for (size_t r = 0; r < rep.dim; ++r)
      for (size_t c = 0; c < rep.dim; ++c) a(c, r) = ad(r, c);
    rep.gamma.push_back(ad + Scalar(-1) * a);
    rep.gamma.push_back(Scalar::i() * (ad + a));
  }
  Scalar ipow = Scalar::i().pow(modes);
  rep.omega = ipow * rep.word(full_subset(n));
  SMatrix id = SMatrix::identity(rep.dim);
  rep.proj_plus = Scalar::frac(1, 2) * (id + rep.omega);
  rep.proj_minus = Scalar::frac(1, 2) * (id + Scalar(-1) * rep.omega);
  return rep;
}

Scalar supertrace(const CliffordElement<Scalar>& a, const SpinorRep& rep) {
  if (a.n != rep.n) throw std::invalid_argument("dimension mismatch");
  SMatrix m = rep.represent(a);
  return (rep.proj_plus * m * rep.proj_plus).trace() - (rep.proj_minus * m * rep.proj_minus).trace();
}

Scalar minus_two_i_power(int e) { return (Scalar(-2) * Scalar::i()).pow(e); }

Scalar supertrace_berezin(const CliffordElement<Scalar>& a) {
  return minus_two_i_power(a.n / 2) * berezin(symbol_map(a));
}

}  // namespace getzler
