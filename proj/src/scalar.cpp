#include "getzler/scalar.hpp"

#include <stdexcept>

namespace getzler {

Scalar::Scalar(mpq_class re, mpq_class im) : re_(std::move(re)), im_(std::move(im)) {
  re_.canonicalize();
  im_.canonicalize();
}

Scalar Scalar::frac(long p, long q) {
  if (q == 0) throw std::domain_error("zero denominator");
  mpq_class r(p, q);
  r.canonicalize();
  return Scalar(r);
}

Scalar Scalar::pow(int e) const {
  if (e < 0) return (Scalar(1) / *this).pow(-e);
  Scalar r(1), b = *this;
  while (e) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

Scalar& Scalar::operator+=(const Scalar& o) {
  re_ += o.re_;
  im_ += o.im_;
  return *this;
}

Scalar& Scalar::operator-=(const Scalar& o) {
  re_ -= o.re_;
  im_ -= o.im_;
  return *this;
}

Scalar& Scalar::operator*=(const Scalar& o) {
  if (sgn(im_) == 0 && sgn(o.im_) == 0) {
    re_ *= o.re_;
    return *this;
  }
  mpq_class r = re_ * o.re_ - im_ * o.im_;
  mpq_class i = re_ * o.im_ + im_ * o.re_;
  re_ = std::move(r);
  im_ = std::move(i);
  return *this;
}

Scalar& Scalar::operator/=(const Scalar& o) {
  if (o.is_zero()) throw std::domain_error("division by zero scalar");
  mpq_class d = o.re_ * o.re_ + o.im_ * o.im_;
  Scalar num = *this * o.conj();
  re_ = num.re_ / d;
  im_ = num.im_ / d;
  return *this;
}

std::string rational_str(const mpq_class& q) { return q.get_str(); }

std::string Scalar::str() const {
  if (sgn(im_) == 0) return rational_str(re_);
  std::string imag;
  if (im_ == 1)
    imag = "i";
  else if (im_ == -1)
    imag = "-i";
  else
    imag = rational_str(im_) + "*i";
  if (sgn(re_) == 0) return imag;
  std::string s = rational_str(re_);
  if (imag[0] != '-') s += "+";
  return s + imag;
}

namespace {

mpq_class parse_rational(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty rational");
  mpq_class q;
  if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
  q.canonicalize();
  return q;
}

// one signed summand: "3/2", "-i", "2*i", "i"
Scalar parse_summand(const std::string& t) {
  std::string s = t;
  bool neg = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    neg = s[0] == '-';
    s = s.substr(1);
  }
  Scalar v;
  if (!s.empty() && s.back() == 'i') {
    std::string c = s.substr(0, s.size() - 1);
    if (!c.empty() && c.back() == '*') c.pop_back();
    v = Scalar(mpq_class(0), c.empty() ? mpq_class(1) : parse_rational(c));
  } else {
    v = Scalar(parse_rational(s));
  }
  return neg ? -v : v;
}

}  // namespace

Scalar Scalar::parse(const std::string& in) {
  std::string s;
  for (char c : in)
    if (c != ' ' && c != '(' && c != ')') s += c;
  if (s.empty()) throw std::invalid_argument("empty scalar");
  Scalar out;
  size_t start = 0;
  for (size_t k = 1; k <= s.size(); ++k) {
    if (k == s.size() || ((s[k] == '+' || s[k] == '-') && s[k - 1] != '/')) {
      out += parse_summand(s.substr(start, k - start));
      start = k;
    }
  }
  return out;
}

}  // namespace getzler
