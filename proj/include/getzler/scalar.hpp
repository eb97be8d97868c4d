#pragma once

#include <gmpxx.h>

#include <complex>
#include <string>

namespace getzler {

// Gaussian rational re + i*im, exact.
class Scalar {
 public:
  Scalar() = default;
  Scalar(int v) : re_(v) {}
  Scalar(long v) : re_(v) {}
  Scalar(mpq_class re, mpq_class im = 0);

  static Scalar frac(long p, long q);
  static Scalar i() { return Scalar(mpq_class(0), mpq_class(1)); }
  // parses "p/q", "i", "-3/2*i", "1/2-3*i", "(1+i)"
  static Scalar parse(const std::string& s);

  const mpq_class& re() const { return re_; }
  const mpq_class& im() const { return im_; }

  bool is_zero() const { return sgn(re_) == 0 && sgn(im_) == 0; }
  bool is_real() const { return sgn(im_) == 0; }
  bool is_one() const { return re_ == 1 && sgn(im_) == 0; }

  Scalar conj() const { return Scalar(re_, -im_); }
  Scalar pow(int e) const;

  Scalar& operator+=(const Scalar& o);
  Scalar& operator-=(const Scalar& o);
  Scalar& operator*=(const Scalar& o);
  Scalar& operator/=(const Scalar& o);

  friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
  friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
  friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
  friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }
  Scalar operator-() const { return Scalar(-re_, -im_); }

  friend bool operator==(const Scalar& a, const Scalar& b) {
    return a.re_ == b.re_ && a.im_ == b.im_;
  }
  friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

  std::complex<double> to_complex() const { return {re_.get_d(), im_.get_d()}; }

  // canonical text: "0", "-1/3", "i", "-2*i", "1/2-3*i"
  std::string str() const;
  // true when str() needs parentheses inside a product
  bool is_compound() const { return sgn(re_) != 0 && sgn(im_) != 0; }

 private:
  mpq_class re_, im_;
};

std::string rational_str(const mpq_class& q);

}  // namespace getzler
