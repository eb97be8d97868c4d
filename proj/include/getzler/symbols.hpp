#pragma once

#include <climits>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "getzler/exterior.hpp"
#include "getzler/operators.hpp"

namespace getzler {

// Symbol coefficients: End(Lambda V) with polynomial entries in x, xi, z and
// lambda. fiber_n = 0 is the scalar case (1 x 1).
using SymMatrix = EndoMatrix<PolyExpr>;

// coeff(x, xi) * |xi|^(norm_power + z_coef * z)
struct HomogTerm {
  SymMatrix coeff;
  int norm_power = 0;
  int z_coef = 0;
};

struct PhgSymbol {
  int n = 0;
  int fiber_n = 0;
  int order = 0;    // constant part of the order
  int order_z = 0;  // order = order + order_z * z
  std::map<int, std::vector<HomogTerm>> comps;  // j -> component of degree order - j
  int known = INT_MAX;                          // components j < known are determined
  std::optional<SymMatrix> log_marker;          // coefficient of log|xi|

  PhgSymbol() = default;
  PhgSymbol(int nn, int fn, int ord, int ord_z = 0) : n(nn), fiber_n(fn), order(ord), order_z(ord_z) {}

  // merges terms with the same |xi| exponent
  void add(int j, const HomogTerm& t);
  const std::vector<HomogTerm>& component(int j) const;
  // every monomial has xi-degree + norm_power = order - j and z_coef = order_z
  bool homogeneous(std::string* why = nullptr) const;
  template <class F>
  PhgSymbol map(F&& f) const {
    PhgSymbol r(n, fiber_n, order, order_z);
    r.known = known;
    for (const auto& [j, ts] : comps)
      for (const auto& t : ts) r.add(j, {t.coeff.map(f), t.norm_power, t.z_coef});
    if (log_marker) r.log_marker = log_marker->map(f);
    return r;
  }
};

// restriction of a component to |xi| = 1, reduced modulo sum xi_i^2 = 1
SymMatrix on_sphere(const std::vector<HomogTerm>& comp, int n);
// equality of components j < depth as homogeneous functions
bool same_components(const PhgSymbol& a, const PhgSymbol& b, int depth);

// full symbol sum_gamma P_gamma (i xi)^gamma
PhgSymbol symbol_of(const FormOperator& P);

// sum over alpha of (-i)^|alpha| / alpha! d_xi^alpha a . d_x^alpha b, components j < depth
PhgSymbol star_product(const PhgSymbol& a, const PhgSymbol& b, int depth);

// ---- resolvent in the representation by r^ = (|xi|^2 - mu)^{-1} ----
using RComponent = std::map<int, SymMatrix>;  // power of r^ -> coefficient

struct ResolventSymbol {
  int n = 0;
  int fiber_n = 0;
  std::vector<RComponent> b;  // b[j]: degree -2-j under (xi, mu) -> (t xi, t^2 mu)
  bool homogeneous(std::string* why = nullptr) const;
};

// sigma((P - mu)^{-1}) for Laplace-type P (sigma_2 = |xi|^2 Id), components j < depth
ResolventSymbol resolvent_symbol(const PhgSymbol& P, int depth);
// components of sigma(R) * (sigma(P) - mu) - Id, j < depth
std::vector<RComponent> resolvent_identity_residual(const ResolventSymbol& R, const PhgSymbol& P, int depth);

// C(z,k) with (i/2pi) int_Gamma mu^z (r - mu)^{-k} dmu = C(z,k) r^{z-k+1}, as a polynomial in z
PolyExpr contour_coefficient(int k);
std::complex<double> contour_coefficient_value(int k, std::complex<double> z);
// z -> z + s
PolyExpr shift_z(const PolyExpr& p, int s);

// sigma(P^{z+shift}); order 2 shift + 2z
PhgSymbol complex_power_symbol(const ResolventSymbol& R, int shift = 0);
// sigma(P^e) for an integer e (z substituted)
PhgSymbol power_symbol_at(const ResolventSymbol& R, int e);
// sigma(log P): log marker 2 Id, classical components from d/dz at z = 0
PhgSymbol log_symbol(const ResolventSymbol& R);
std::vector<HomogTerm> log_symbol_component(const ResolventSymbol& R, int j);

// ---- densities ----
// coeff * pi^(pi_half / 2)
struct DensityValue {
  PolyExpr coeff;
  int pi_half = 0;
  std::string form_label = "Res";

  bool is_zero() const { return coeff.is_zero(); }
  std::string exact() const;                    // "1/2 * pi^-1"
  std::optional<std::complex<double>> to_complex() const;  // when coeff is a number
  DensityValue at_origin() const;
  DensityValue times(const PolyExpr& f) const;
  friend bool operator==(const DensityValue& a, const DensityValue& b);
};

// int_{S^{n-1}} p(xi) d_S xi, x and other variables carried along
DensityValue sphere_integrate(const PolyExpr& p, int n);
DensityValue sphere_volume(int n);

enum class TraceMode { Tr, Str, Berezin };
enum class Grading { Forms, Spinors };
std::string to_string(TraceMode m);
TraceMode trace_mode_from_string(const std::string& s);

// (2 pi)^{-n} int_{|xi|=1} {tr | str | [. 1]_[n]} sigma_{-n}(Q) d_S xi.
// Str with Grading::Spinors reads each coefficient as c^g(a) and takes the
// supertrace of a on spinors; jacobian multiplies the Berezin mode.
DensityValue residue_density(const PhgSymbol& Q, TraceMode mode, Grading g = Grading::Forms,
                             const PolyExpr* jacobian = nullptr);

// symbol of f_lambda^# Q: x -> lambda x, xi -> xi / lambda (formal lambda)
PhgSymbol pullback_symbol(const PhgSymbol& Q);
// U_lambda^# on every coefficient (formal lambda)
PhgSymbol getzler_symbol_conjugate(const PhgSymbol& Q);
// density as a function of x with x -> lambda x
DensityValue compose_contraction(const DensityValue& d);

// ---- localization reports ----
enum class LocalizationVariant { Scalar, Forms, Spinors };
std::string to_string(LocalizationVariant v);
LocalizationVariant localization_variant_from_string(const std::string& s);

struct LocalizationReport {
  LocalizationVariant variant = LocalizationVariant::Scalar;
  DensityValue left;    // density of log P at p
  DensityValue right;   // density of log of the frozen or limit operator
  DensityValue left_family;  // density of log of the rescaled family at x, lambda formal
  bool agree = false;
  bool asserted = false;  // the scalar variant is reported only
  std::vector<std::string> ledger;
};

// P: Laplace-type operator near p (exact coefficients); limit: the rescaled
// limit for the forms and spinors variants (frozen P|_p is used for scalar).
LocalizationReport localization_check(const FormOperator& P, LocalizationVariant v,
                                      const FormOperator* limit = nullptr);

// P|_p: top-order part with coefficients frozen at x = 0
FormOperator frozen_at_origin(const FormOperator& P);

}  // namespace getzler
