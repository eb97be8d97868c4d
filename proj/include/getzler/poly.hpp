#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "getzler/curvature.hpp"
#include "getzler/scalar.hpp"

namespace getzler {

// Monomial in x^1..x^n, xi_1..xi_n, z, lambda (Laurent) and commuting curvature
// indeterminates. The symbol-calculus variables share the key so one
// polynomial type serves jets, symbols and graded families.
struct Monomial {
  std::array<uint8_t, kMaxDim> x{};
  std::array<uint8_t, kMaxDim> xi{};
  uint8_t z = 0;
  int8_t lam = 0;
  uint8_t nc = 0;
  std::array<uint16_t, kMaxDim> c{};  // sorted curvature codes, first nc used

  int xdeg() const;
  int xideg() const;
  bool operator==(const Monomial&) const = default;
  auto operator<=>(const Monomial&) const = default;
};

struct MonomialHash {
  size_t operator()(const Monomial& m) const;
};

Monomial operator*(const Monomial& a, const Monomial& b);

class PolyExpr {
 public:
  using Term = std::pair<Monomial, Scalar>;

  PolyExpr() = default;
  PolyExpr(const Scalar& c);
  PolyExpr(int c) : PolyExpr(Scalar(c)) {}

  static PolyExpr x(int k);
  static PolyExpr xi(int k);
  static PolyExpr zvar();
  static PolyExpr lambda(int e = 1);
  // canonicalized R_{ijkl} (m == 0) or R_{ijkl;m}; may be zero
  static PolyExpr curvature(int i, int j, int k, int l, int m, int n);
  static PolyExpr monomial(const Monomial& m, const Scalar& c);
  // builds from unsorted terms, combining duplicates
  static PolyExpr from_terms(std::vector<Term> terms);

  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Scalar constant_term() const;
  size_t size() const { return terms_.size(); }

  PolyExpr& operator+=(const PolyExpr& o);
  PolyExpr& operator-=(const PolyExpr& o);
  PolyExpr& operator*=(const Scalar& s);
  friend PolyExpr operator+(PolyExpr a, const PolyExpr& b) { return a += b; }
  friend PolyExpr operator-(PolyExpr a, const PolyExpr& b) { return a -= b; }
  friend PolyExpr operator*(PolyExpr a, const Scalar& s) { return a *= s; }
  friend PolyExpr operator*(const Scalar& s, PolyExpr a) { return a *= s; }
  friend PolyExpr operator*(const PolyExpr& a, const PolyExpr& b) { return mul(a, b); }
  PolyExpr& operator*=(const PolyExpr& o) { return *this = mul(*this, o); }
  PolyExpr operator-() const;
  friend bool operator==(const PolyExpr& a, const PolyExpr& b) { return a.terms_ == b.terms_; }
  friend bool operator!=(const PolyExpr& a, const PolyExpr& b) { return !(a == b); }

  // product keeping only x-degree <= max_xdeg (negative: no cutoff)
  static PolyExpr mul(const PolyExpr& a, const PolyExpr& b, int max_xdeg = -1);

  PolyExpr truncate_x(int max_xdeg) const;
  PolyExpr x_homogeneous(int d) const;
  std::optional<int> min_xdeg() const;
  int max_xdeg() const;  // -1 when zero

  PolyExpr dx(int k) const;
  PolyExpr dxi(int k) const;
  PolyExpr dz() const;
  PolyExpr subst_z(const Scalar& v) const;
  PolyExpr at_origin() const { return x_homogeneous(0); }
  PolyExpr subst_x(const std::vector<Scalar>& point) const;  // x -> numeric point

  // x -> lambda^w x (w per unit of x-degree), xi -> lambda^{wxi} xi
  PolyExpr scale_lambda(int wx, int wxi = 0) const;
  PolyExpr times_lambda(int e) const;
  PolyExpr lambda_coefficient(int e) const;  // coefficient of lambda^e, lambda removed
  std::optional<std::pair<int, int>> lambda_range() const;

  // substitute numeric values for R (and for nabla R when available)
  PolyExpr instantiate(const CurvatureTensor& t) const;
  bool has_curvature() const;

  template <class F>
  PolyExpr map_terms(F&& f) const {  // f(Monomial&, Scalar&) -> bool keep
    std::vector<Term> out;
    out.reserve(terms_.size());
    for (auto t : terms_)
      if (f(t.first, t.second) && !t.second.is_zero()) out.push_back(std::move(t));
    return from_terms(std::move(out));
  }

  std::string str() const;

 private:
  std::vector<Term> terms_;  // sorted by Monomial, no zero coefficients
};

std::string monomial_str(const Monomial& m);

struct Valuation {
  int value = 0;
  bool infinite = false;          // zero polynomial
  bool truncation_limited = false;  // true lower bound is >= value
  std::string str() const;
};

// Valuation of a jet known exactly through x-degree `prec` (K).
Valuation valuation(const PolyExpr& p, int prec);

// Normal form modulo the first Bianchi identity (on R and nabla R) and the
// second one (on nabla R): dependent components are rewritten in terms of
// lexicographically smaller ones.
PolyExpr reduce_bianchi(const PolyExpr& p, int n);
// independent (R, nabla R) components left after reduction
std::pair<int, int> bianchi_free_counts(int n);

}  // namespace getzler
