#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "getzler/lambda_graded.hpp"
#include "getzler/poly.hpp"
#include "getzler/scalar.hpp"

namespace getzler {

// Index subsets of {1..n} as bitmasks, bit k-1 <-> index k.
using Subset = uint32_t;

inline int subset_size(Subset s) { return std::popcount(s); }
inline Subset full_subset(int n) { return (Subset(1) << n) - 1; }
inline Subset single(int k) { return Subset(1) << (k - 1); }
std::vector<int> subset_indices(Subset s);
Subset subset_from_indices(const std::vector<int>& idx);
// subsets sorted by (size, lexicographic index list); the documented basis order
const std::vector<Subset>& basis_order(int n);
std::string subset_label(Subset s, const char* sep = "^");  // "1", "e1^e2"

// e^A e^B = clifford_sign * e^{A xor B}; e^A ^ e^B = wedge_sign * e^{A|B}
int wedge_sign(Subset a, Subset b);
int clifford_sign(Subset a, Subset b);

namespace detail {
template <class C>
bool is_zero(const C& c) {
  return c.is_zero();
}
template <class C>
C signed_copy(const C& c, int s) {
  return s > 0 ? c : -c;
}
}  // namespace detail

// Shared dense storage over the 2^n subsets.
template <class C, class Derived>
struct SubsetVector {
  int n = 0;
  std::vector<C> c;

  SubsetVector() = default;
  explicit SubsetVector(int dim) : n(dim), c(size_t(1) << dim) {
    if (dim < 0 || dim > 6) throw std::invalid_argument("dimension must be in 0..6");
  }
  static Derived basis(int dim, Subset s, const C& coef = C(1)) {
    Derived d(dim);
    d.c[s] = coef;
    return d;
  }
  const C& operator[](Subset s) const { return c[s]; }
  C& operator[](Subset s) { return c[s]; }
  bool is_zero() const {
    for (const auto& v : c)
      if (!detail::is_zero(v)) return false;
    return true;
  }
  Derived& operator+=(const Derived& o) {
    check(o);
    for (size_t s = 0; s < c.size(); ++s)
      if (!detail::is_zero(o.c[s])) c[s] += o.c[s];
    return self();
  }
  Derived& operator-=(const Derived& o) {
    check(o);
    for (size_t s = 0; s < c.size(); ++s)
      if (!detail::is_zero(o.c[s])) c[s] += -o.c[s];
    return self();
  }
  friend Derived operator+(Derived a, const Derived& b) { return a += b; }
  friend Derived operator-(Derived a, const Derived& b) { return a -= b; }
  Derived operator-() const {
    Derived d(n);
    for (size_t s = 0; s < c.size(); ++s)
      if (!detail::is_zero(c[s])) d.c[s] = -c[s];
    return d;
  }
  friend bool operator==(const SubsetVector& a, const SubsetVector& b) { return a.n == b.n && a.c == b.c; }
  Derived degree_part(int k) const {
    Derived d(n);
    for (size_t s = 0; s < c.size(); ++s)
      if (subset_size(Subset(s)) == k) d.c[s] = c[s];
    return d;
  }
  template <class F>
  Derived map(F&& f) const {
    Derived d(n);
    for (size_t s = 0; s < c.size(); ++s)
      if (!detail::is_zero(c[s])) d.c[s] = f(c[s]);
    return d;
  }

 protected:
  void check(const SubsetVector& o) const {
    if (o.n != n) throw std::invalid_argument("dimension mismatch");
  }
  Derived& self() { return static_cast<Derived&>(*this); }
};

template <class C>
struct FormElement : SubsetVector<C, FormElement<C>> {
  using SubsetVector<C, FormElement<C>>::SubsetVector;
  friend FormElement operator*(const FormElement& a, const FormElement& b) { return wedge(a, b); }
  static FormElement wedge(const FormElement& a, const FormElement& b) {
    if (a.n != b.n) throw std::invalid_argument("dimension mismatch");
    FormElement r(a.n);
    for (size_t i = 0; i < a.c.size(); ++i) {
      if (detail::is_zero(a.c[i])) continue;
      for (size_t j = 0; j < b.c.size(); ++j) {
        if (detail::is_zero(b.c[j])) continue;
        int s = wedge_sign(Subset(i), Subset(j));
        if (!s) continue;
        r.c[i | j] += detail::signed_copy(a.c[i] * b.c[j], s);
      }
    }
    return r;
  }
  const C& top() const { return this->c.back(); }
};

template <class C>
struct CliffordElement : SubsetVector<C, CliffordElement<C>> {
  using SubsetVector<C, CliffordElement<C>>::SubsetVector;
  friend CliffordElement operator*(const CliffordElement& a, const CliffordElement& b) {
    if (a.n != b.n) throw std::invalid_argument("dimension mismatch");
    CliffordElement r(a.n);
    for (size_t i = 0; i < a.c.size(); ++i) {
      if (detail::is_zero(a.c[i])) continue;
      for (size_t j = 0; j < b.c.size(); ++j) {
        if (detail::is_zero(b.c[j])) continue;
        r.c[i ^ j] += detail::signed_copy(a.c[i] * b.c[j], clifford_sign(Subset(i), Subset(j)));
      }
    }
    return r;
  }
  bool is_even() const {
    for (size_t s = 0; s < this->c.size(); ++s)
      if (subset_size(Subset(s)) % 2 && !detail::is_zero(this->c[s])) return false;
    return true;
  }
};

// Endomorphism of Lambda V; entry (row, col) is the coefficient of e^row in Q(e^col).
template <class C>
struct EndoMatrix {
  int n = 0;
  size_t dim = 0;
  std::vector<C> m;

  EndoMatrix() = default;
  explicit EndoMatrix(int nn) : n(nn), dim(size_t(1) << nn), m(dim * dim) {
    if (nn < 0 || nn > 6) throw std::invalid_argument("dimension must be in 0..6");
  }
  static EndoMatrix identity(int nn, const C& one = C(1)) {
    EndoMatrix e(nn);
    for (size_t k = 0; k < e.dim; ++k) e.m[k * e.dim + k] = one;
    return e;
  }
  const C& operator()(size_t r, size_t c) const { return m[r * dim + c]; }
  C& operator()(size_t r, size_t c) { return m[r * dim + c]; }
  bool is_zero() const {
    for (const auto& v : m)
      if (!detail::is_zero(v)) return false;
    return true;
  }
  EndoMatrix& operator+=(const EndoMatrix& o) {
    if (o.n != n) throw std::invalid_argument("dimension mismatch");
    for (size_t k = 0; k < m.size(); ++k)
      if (!detail::is_zero(o.m[k])) m[k] += o.m[k];
    return *this;
  }
  EndoMatrix& operator-=(const EndoMatrix& o) { return *this += -o; }
  friend EndoMatrix operator+(EndoMatrix a, const EndoMatrix& b) { return a += b; }
  friend EndoMatrix operator-(EndoMatrix a, const EndoMatrix& b) { return a -= b; }
  EndoMatrix operator-() const {
    EndoMatrix r(n);
    for (size_t k = 0; k < m.size(); ++k)
      if (!detail::is_zero(m[k])) r.m[k] = -m[k];
    return r;
  }
  friend EndoMatrix operator*(const EndoMatrix& a, const EndoMatrix& b) {
    if (a.n != b.n) throw std::invalid_argument("dimension mismatch");
    EndoMatrix r(a.n);
    size_t d = a.dim;
    for (size_t i = 0; i < d; ++i)
      for (size_t k = 0; k < d; ++k) {
        const C& x = a.m[i * d + k];
        if (detail::is_zero(x)) continue;
        for (size_t j = 0; j < d; ++j) {
          const C& y = b.m[k * d + j];
          if (detail::is_zero(y)) continue;
          r.m[i * d + j] += x * y;
        }
      }
    return r;
  }
  friend bool operator==(const EndoMatrix& a, const EndoMatrix& b) { return a.n == b.n && a.m == b.m; }
  FormElement<C> apply(const FormElement<C>& v) const {
    FormElement<C> r(n);
    for (size_t i = 0; i < dim; ++i)
      for (size_t j = 0; j < dim; ++j)
        if (!detail::is_zero(m[i * dim + j]) && !detail::is_zero(v.c[j])) r.c[i] += m[i * dim + j] * v.c[j];
    return r;
  }
  template <class F>
  auto map(F&& f) const {
    using D = decltype(f(m[0]));
    EndoMatrix<D> r(n);
    for (size_t k = 0; k < m.size(); ++k)
      if (!detail::is_zero(m[k])) r.m[k] = f(m[k]);
    return r;
  }
};

// c^g(a) on Lambda V in the orthonormal frame: c(e^I) e^J = sign(I,J) e^{I xor J}.
template <class C>
EndoMatrix<C> clifford_map(const CliffordElement<C>& a) {
  EndoMatrix<C> e(a.n);
  for (size_t I = 0; I < a.c.size(); ++I) {
    if (detail::is_zero(a.c[I])) continue;
    for (size_t J = 0; J < e.dim; ++J)
      e(I ^ J, J) += detail::signed_copy(a.c[I], clifford_sign(Subset(I), Subset(J)));
  }
  return e;
}

// s^g(a) = c^g(a) 1
template <class C>
FormElement<C> symbol_map(const CliffordElement<C>& a) {
  FormElement<C> one = FormElement<C>::basis(a.n, 0);
  return clifford_map(a).apply(one);
}

template <class C>
C berezin(const FormElement<C>& w) {
  return w.top();
}

// epsilon(w): left wedge multiplication by w
template <class C>
EndoMatrix<C> wedge_matrix(const FormElement<C>& w) {
  EndoMatrix<C> e(w.n);
  for (size_t I = 0; I < w.c.size(); ++I) {
    if (detail::is_zero(w.c[I])) continue;
    for (size_t J = 0; J < e.dim; ++J) {
      int s = wedge_sign(Subset(I), Subset(J));
      if (s) e(I | J, J) += detail::signed_copy(w.c[I], s);
    }
  }
  return e;
}

// interior product by the k-th dual vector
EndoMatrix<Scalar> contraction_matrix(int n, int k);
EndoMatrix<Scalar> wedge_basis_matrix(int n, int k);

// U_lambda on forms: degree-k part scaled by lambda^{-k}
template <class C>
LambdaGraded<FormElement<C>> getzler_on_forms(const FormElement<C>& w) {
  LambdaGraded<FormElement<C>> g;
  for (int k = 0; k <= w.n; ++k) g.add(-k, w.degree_part(k));
  return g;
}

// U_lambda Q U_lambda^{-1}: entry (row J, col I) has lambda-degree |I| - |J|
template <class C>
LambdaGraded<EndoMatrix<C>> getzler_conjugate(const EndoMatrix<C>& q) {
  LambdaGraded<EndoMatrix<C>> g;
  std::map<int, EndoMatrix<C>> parts;
  for (size_t r = 0; r < q.dim; ++r)
    for (size_t c = 0; c < q.dim; ++c) {
      if (detail::is_zero(q(r, c))) continue;
      int d = subset_size(Subset(c)) - subset_size(Subset(r));
      auto it = parts.try_emplace(d, EndoMatrix<C>(q.n)).first;
      it->second(r, c) = q(r, c);
    }
  for (auto& [d, v] : parts) g.add(d, v);
  return g;
}

// same grading carried by the formal lambda variable
EndoMatrix<PolyExpr> getzler_conjugate_inline(const EndoMatrix<PolyExpr>& q);

// ---- spinor module ----

struct SMatrix {
  size_t dim = 0;
  std::vector<Scalar> a;
  SMatrix() = default;
  explicit SMatrix(size_t d) : dim(d), a(d * d) {}
  static SMatrix identity(size_t d);
  const Scalar& operator()(size_t r, size_t c) const { return a[r * dim + c]; }
  Scalar& operator()(size_t r, size_t c) { return a[r * dim + c]; }
  friend SMatrix operator*(const SMatrix& x, const SMatrix& y);
  friend SMatrix operator+(const SMatrix& x, const SMatrix& y);
  friend SMatrix operator*(const Scalar& s, const SMatrix& x);
  friend bool operator==(const SMatrix& x, const SMatrix& y) { return x.a == y.a; }
  Scalar trace() const;
  size_t rank() const;  // exact Gaussian elimination
};

struct SpinorRep {
  int n = 0;
  size_t dim = 0;
  std::vector<SMatrix> gamma;  // gamma[k] represents e^{k+1}
  SMatrix omega;               // i^{n/2} gamma_1 ... gamma_n
  SMatrix proj_plus, proj_minus;

  SMatrix word(Subset I) const;  // product over increasing indices
  SMatrix represent(const CliffordElement<Scalar>& a) const;
};

SpinorRep build_spinor_rep(int n);

// tr_{S+} - tr_{S-} computed in the representation
Scalar supertrace(const CliffordElement<Scalar>& a, const SpinorRep& rep);
// (-2i)^{n/2} T(s(a))
Scalar supertrace_berezin(const CliffordElement<Scalar>& a);
Scalar minus_two_i_power(int e);  // (-2i)^e

}  // namespace getzler
