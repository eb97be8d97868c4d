#include "getzler/reports.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "getzler/exterior.hpp"
#include "getzler/jets.hpp"
#include "getzler/operators.hpp"
#include "getzler/symbols.hpp"

namespace getzler::reports {

namespace {

const char* kCommands[] = {"clifford-check", "jets", "op", "residue"};

[[noreturn]] void usage(const std::string& msg) { throw UsageError(msg); }

int get_int(const json& o, const char* key, int def, int lo, int hi) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_number_integer()) usage(std::string(key) + " must be an integer");
  long long x = v.get<long long>();
  if (x < lo || x > hi) usage(std::string(key) + " must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return int(x);
}

std::string get_str(const json& o, const char* key, const std::string& def, std::initializer_list<const char*> allowed = {}) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_string()) usage(std::string(key) + " must be a string");
  std::string s = v.get<std::string>();
  if (allowed.size() && std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return s == a; })) {
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    usage(std::string(key) + " must be one of: " + list);
  }
  return s;
}

void reject_unknown(const json& o, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = o.begin(); it != o.end(); ++it)
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      usage("unknown key '" + it.key() + "' in " + where);
}

std::string scalar_str(const json& v, const char* what) {
  std::string s = v.is_string() ? v.get<std::string>() : v.is_number_integer() ? std::to_string(v.get<long long>()) : "";
  if (s.empty()) usage(std::string(what) + " must be a rational string");
  try {
    return Scalar::parse(s).str();
  } catch (const std::exception& e) {
    usage(std::string(what) + ": " + e.what());
  }
}

// potential: a constant or a list of {"coef", "x": [exponents]}
json normalize_potential(const json& v, int n) {
  json out = json::array();
  if (!v.is_array()) {
    out.push_back({{"coef", scalar_str(v, "potential")}, {"x", std::vector<int>(n, 0)}});
    return out;
  }
  for (const auto& t : v) {
    if (!t.is_object()) usage("potential terms must be objects");
    reject_unknown(t, {"coef", "x"}, "potential term");
    std::vector<int> x(n, 0);
    if (t.contains("x")) {
      const json& e = t.at("x");
      if (!e.is_array() || int(e.size()) > n) usage("potential exponents must be a list of at most n integers");
      for (size_t k = 0; k < e.size(); ++k) {
        if (!e[k].is_number_integer() || e[k].get<int>() < 0 || e[k].get<int>() > 8)
          usage("potential exponents must be integers in [0, 8]");
        x[k] = e[k].get<int>();
      }
    }
    out.push_back({{"coef", scalar_str(t.value("coef", json("1")), "potential coefficient")}, {"x", x}});
  }
  return out;
}

PolyExpr potential_poly(const json& terms) {
  PolyExpr V;
  for (const auto& t : terms) {
    PolyExpr m(Scalar::parse(t.at("coef").get<std::string>()));
    const auto& x = t.at("x");
    for (size_t k = 0; k < x.size(); ++k)
      for (int e = 0; e < x[k].get<int>(); ++e) m = m * PolyExpr::x(int(k) + 1);
    V += m;
  }
  return V;
}

std::string fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- curvature input

void put_symmetric(std::vector<Scalar>& R, int n, int i, int j, int k, int l, int m, const Scalar& v) {
  auto idx = [&](int a, int b, int c, int d) {
    size_t r = (((size_t(a - 1) * n + (b - 1)) * n + (c - 1)) * n + (d - 1));
    return m ? r * n + (m - 1) : r;
  };
  struct Img {
    int a, b, c, d, s;
  };
  const Img imgs[] = {{i, j, k, l, 1},  {j, i, k, l, -1}, {i, j, l, k, -1}, {j, i, l, k, 1},
                      {k, l, i, j, 1},  {l, k, i, j, -1}, {k, l, j, i, -1}, {l, k, j, i, 1}};
  for (const auto& im : imgs) {
    Scalar w = im.s > 0 ? v : -v;
    Scalar& slot = R[idx(im.a, im.b, im.c, im.d)];
    if (!slot.is_zero() && !(slot == w)) usage("curvature components contradict the symmetries");
    slot = w;
  }
}

CurvatureTensor load_curvature(const std::string& path, int n) {
  std::ifstream f(path);
  if (!f) usage("cannot read curvature file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const std::exception& e) {
    usage("curvature file: " + std::string(e.what()));
  }
  if (j.value("schema", 1) != 1) usage("curvature file: unsupported schema");
  if (j.value("n", n) != n) usage("curvature file dimension differs from --dim");
  CurvatureTensor t;
  t.n = n;
  t.R.assign(size_t(n) * n * n * n, Scalar(0));
  auto read = [&](const char* key, std::vector<Scalar>& dst, size_t arity) {
    if (!j.contains(key)) return;
    for (const auto& c : j.at(key)) {
      const auto& ix = c.at("index");
      if (!ix.is_array() || ix.size() != arity) usage(std::string("curvature file: bad index in ") + key);
      std::vector<int> v;
      for (const auto& e : ix) {
        int q = e.get<int>();
        if (q < 1 || q > n) usage("curvature file: index out of range");
        v.push_back(q);
      }
      put_symmetric(dst, n, v[0], v[1], v[2], v[3], arity == 5 ? v[4] : 0, Scalar::parse(scalar_str(c.at("value"), "value")));
    }
  };
  read("R", t.R, 4);
  if (j.contains("dR")) {
    t.dR.assign(t.R.size() * n, Scalar(0));
    read("dR", t.dR, 5);
  }
  if (!satisfies_bianchi(t)) usage("curvature file violates the first Bianchi identity");
  return t;
}

JetContext make_context(const json& cfg) {
  int n = cfg.at("n"), K = cfg.at("K");
  const json& c = cfg.at("curvature");
  std::string mode = c.at("mode");
  try {
    if (mode == "flat") return JetContext::flat(n, K);
    if (mode == "random") {
      uint64_t seed = c.at("seed").get<uint64_t>();
      return JetContext::numeric(n % 2 == 0 ? random_curvature(n, seed) : random_curvature_any_dim(n, seed), K);
    }
    if (mode == "explicit") return JetContext::numeric(load_curvature(c.at("file"), n), K);
    return JetContext::symbolic(n, K);
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    usage(e.what());
  }
}

// ---------------------------------------------------------------- serialization helpers

json jet_json(const Jet& j) {
  json o{{"value", j.p.str()}};
  o["known_through_degree"] = j.is_exact() ? json(nullptr) : json(j.prec);
  return o;
}

json square_json(const SquareMat<Jet>& m) {
  json rows = json::array();
  for (int i = 1; i <= m.n; ++i) {
    json r = json::array();
    for (int j = 1; j <= m.n; ++j) r.push_back(m(i, j).p.str());
    rows.push_back(r);
  }
  return rows;
}

int square_prec(const SquareMat<Jet>& m) {
  int p = kExact;
  for (const auto& j : m.v) p = std::min(p, j.prec);
  return p;
}

json prec_json(int p) { return p >= kExact ? json(nullptr) : json(p); }

json multi_json(const Multi& g, int n) {
  std::vector<int> v(g.begin(), g.begin() + n);
  return v;
}

json geom_op_json(const GeomDiffOp& P) {
  int n = P.n();
  size_t dim = size_t(1) << n;
  json terms = json::array();
  for (const auto& [g, v] : P.terms) {
    json rows = json::array();
    for (size_t a = 0; a < v.size(); ++a) {
      const GeomPoly& c = v[a];
      if (c.is_zero()) continue;
      json r;
      if (P.bundle == Bundle::Forms) {
        r["out"] = subset_label(Subset(a / dim));
        r["in"] = subset_label(Subset(a % dim));
      } else if (P.bundle == Bundle::Spinors) {
        r["word"] = subset_label(Subset(a), "");
      }
      r["coef"] = c.jet.p.str();
      r["known_through_degree"] = prec_json(c.jet.prec);
      r["gilkey"] = c.gilkey;
      rows.push_back(r);
    }
    if (!rows.empty()) terms.push_back({{"gamma", multi_json(g, n)}, {"derivative", multi_str(g)}, {"rows", rows}});
  }
  return {{"bundle", to_string(P.bundle)}, {"n", n}, {"K", P.jets->ctx.K}, {"order", P.order}, {"terms", terms}};
}

json form_op_json(const FormOperator& L, Bundle b) {
  json terms = json::array();
  for (const auto& [g, m] : L.terms) {
    json rows = json::array();
    for (size_t r = 0; r < m.dim; ++r)
      for (size_t c = 0; c < m.dim; ++c) {
        if (m(r, c).is_zero()) continue;
        json e;
        if (L.fiber_n) {
          e["out"] = subset_label(Subset(r));
          e["in"] = subset_label(Subset(c));
        }
        e["coef"] = m(r, c).str();
        rows.push_back(e);
      }
    if (!rows.empty()) terms.push_back({{"gamma", multi_json(g, L.n)}, {"derivative", multi_str(g)}, {"rows", rows}});
  }
  json o{{"bundle", to_string(b)}, {"n", L.n}, {"acts_on", L.fiber_n ? "exterior algebra" : "functions"}, {"terms", terms}};
  if (auto w = L.wedge_coefficients()) {
    json words = json::array();
    for (const auto& [g, f] : *w)
      for (size_t I = 0; I < f.c.size(); ++I)
        if (!f.c[I].is_zero()) words.push_back({{"derivative", multi_str(g)}, {"wedge", subset_label(Subset(I))}, {"coef", f.c[I].str()}});
    o["wedge_words"] = words;
  }
  return o;
}

json complex_json(const std::optional<std::complex<double>>& z) {
  if (!z) return nullptr;
  return json::array({z->real(), z->imag()});
}

json density_json(const DensityValue& d, TraceMode mode, const std::string& id, const json& ledger) {
  DensityValue p = d.at_origin();
  return {{"form_label", d.form_label},   {"exact", d.exact()},       {"exact_at_p", p.exact()},
          {"float", complex_json(p.to_complex())}, {"trace_mode", to_string(mode)}, {"operator_id", id},
          {"lambda_ledger", ledger}};
}

std::string verdict_key(Verdict v) {
  switch (v) {
    case Verdict::Rescalable:
      return "rescalable";
    case Verdict::NotRescalable:
      return "not_rescalable";
    default:
      return "indeterminate";
  }
}

// ---------------------------------------------------------------- commands

CliffordElement<Scalar> random_clifford(std::mt19937_64& rng, int n) {
  CliffordElement<Scalar> a(n);
  for (auto& c : a.c) {
    if (rng() % 2) continue;
    c = Scalar::frac(long(rng() % 11) - 5, long(rng() % 4) + 1);
    if (rng() % 2) c += Scalar::i() * Scalar::frac(long(rng() % 7) - 3, long(rng() % 3) + 1);
  }
  return a;
}

Outcome clifford_check(const json& cfg) {
  int n = cfg.at("n");
  if (n % 2) usage("clifford-check needs an even dimension");
  int samples = cfg.at("options").at("samples");
  std::mt19937_64 rng(cfg.at("seed").get<uint64_t>());
  std::vector<CliffordElement<Scalar>> xs;
  for (int s = 0; s < samples; ++s) xs.push_back(random_clifford(rng, n));
  SpinorRep rep = build_spinor_rep(n);
  std::vector<Scalar> lhs(xs.size()), rhs(xs.size());
  int T = std::max(1, std::min(thread_cap(), samples));
  std::vector<std::thread> pool;
  for (int t = 0; t < T; ++t)
    pool.emplace_back([&, t] {
      for (size_t k = t; k < xs.size(); k += T) {
        lhs[k] = supertrace(xs[k], rep);
        rhs[k] = supertrace_berezin(xs[k]);
      }
    });
  for (auto& th : pool) th.join();

  Outcome out;
  json res{{"n", n}, {"samples", samples}};
  int failed = 0;
  for (size_t k = 0; k < xs.size(); ++k) {
    if (lhs[k] == rhs[k]) continue;
    if (!failed) {
      json coeffs = json::object();
      for (size_t I = 0; I < xs[k].c.size(); ++I)
        if (!xs[k].c[I].is_zero()) coeffs[subset_label(Subset(I), "")] = xs[k].c[I].str();
      res["counterexample"] = {{"sample", k}, {"element", coeffs}, {"str", lhs[k].str()}, {"berezin_side", rhs[k].str()}};
    }
    ++failed;
  }
  // every basis word, and the top word as the witness
  bool basis_ok = true;
  for (Subset I = 0; I < (Subset(1) << n); ++I) {
    auto e = CliffordElement<Scalar>::basis(n, I, Scalar(1));
    basis_ok = basis_ok && supertrace(e, rep) == supertrace_berezin(e);
  }
  Subset top = Subset((1u << n) - 1);
  auto e = CliffordElement<Scalar>::basis(n, top, Scalar(1));
  res["witness"] = {{"word", subset_label(top, "")},
                    {"str", supertrace(e, rep).str()},
                    {"factor", "(-2i)^" + std::to_string(n / 2)},
                    {"factor_value", minus_two_i_power(n / 2).str()}};
  res["passed"] = samples - failed;
  res["failed"] = failed;
  res["basis_words_pass"] = basis_ok;
  res["flags"] = samples == 0 ? json::array({"no samples"}) : json::array();
  bool ok = failed == 0 && basis_ok;
  out.report["results"] = res;
  out.report["verdicts"] = {{"supertrace_identity", ok ? "pass" : "fail"}};
  out.status = ok ? Status::Ok : Status::Negative;
  return out;
}

Outcome jets_cmd(const json& cfg) {
  JetContext ctx = make_context(cfg);
  int n = ctx.n, K = ctx.K;
  MetricJet m = metric_expansion(ctx);
  VielbeinJet v = vielbein_expansion(ctx);
  auto gam = christoffel(ctx);
  auto frame = christoffel_frame(ctx);
  auto neu = neumann_inverse(m.g, K);

  json res;
  res["metric"] = {{"g", square_json(m.g)}, {"g_inv", square_json(m.g_inv)}, {"j_g", jet_json(m.j_g)},
                   {"known_through_degree", prec_json(square_prec(m.g))}};
  res["vielbein"] = {{"a", square_json(v.a)}, {"b", square_json(v.b)}, {"known_through_degree", prec_json(square_prec(v.a))}};
  auto list3 = [&](const std::vector<Jet>& J, const char* a, const char* b, const char* c) {
    json out = json::array();
    for (int p = 1; p <= n; ++p)
      for (int q = 1; q <= n; ++q)
        for (int r = 1; r <= n; ++r) {
          const Jet& x = J[(size_t(p - 1) * n + (q - 1)) * n + (r - 1)];
          if (!x.is_zero()) out.push_back({{a, p}, {b, q}, {c, r}, {"value", x.p.str()}, {"known_through_degree", prec_json(x.prec)}});
        }
    return out;
  };
  res["christoffel"] = list3(gam, "k", "i", "j");
  res["frame_christoffel"] = list3(frame, "l", "s", "t");

  // displayed coefficients
  bool q_g = true, q_ginv = true, c_g = true, q_a = true, q_b = true, c_a = true, c_b = true, lin_gam = true, lin_frame = true;
  bool aat = true, btb = true, neumann = true, flat_ok = true;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      PolyExpr q, c;
      for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l) {
          PolyExpr xx = PolyExpr::x(k) * PolyExpr::x(l);
          q += ctx.R(i, k, l, j) * xx;
          if (K >= 3)
            for (int t = 1; t <= n; ++t) c += ctx.dR(i, k, l, j, t) * xx * PolyExpr::x(t);
        }
      q_g = q_g && m.g(i, j).p.x_homogeneous(2) == q * Scalar::frac(-1, 3);
      q_ginv = q_ginv && m.g_inv(i, j).p.x_homogeneous(2) == q * Scalar::frac(1, 3);
      q_a = q_a && v.a(i, j).p.x_homogeneous(2) == q * Scalar::frac(-1, 6);
      q_b = q_b && v.b(i, j).p.x_homogeneous(2) == q * Scalar::frac(1, 6);
      if (K >= 3) {
        c_g = c_g && m.g(i, j).p.x_homogeneous(3) == c * Scalar::frac(-1, 6);
        c_a = c_a && v.a(i, j).p.x_homogeneous(3) == c * Scalar::frac(-1, 12);
        c_b = c_b && v.b(i, j).p.x_homogeneous(3) == c * Scalar::frac(1, 12);
      }
      Jet s, t, d = Jet::exact(PolyExpr(i == j ? 1 : 0));
      for (int l = 1; l <= n; ++l) {
        s += v.a(i, l) * v.a(j, l);
        t += v.b(l, i) * v.b(l, j);
      }
      aat = aat && s.agrees_with(m.g(i, j));
      btb = btb && t.agrees_with(m.g_inv(i, j));
      neumann = neumann && neu(i, j).agrees_with(m.g_inv(i, j));
      if (ctx.mode == CurvatureMode::Flat) flat_ok = flat_ok && m.g(i, j) == d && v.a(i, j) == d && v.b(i, j) == d;
      for (int k = 1; k <= n; ++k) {
        size_t a = (size_t(k - 1) * n + (i - 1)) * n + (j - 1);
        lin_gam = lin_gam && gam[a].p.x_homogeneous(1) == christoffel_leading_printed(ctx, k, i, j);
        lin_frame = lin_frame && frame[a].p.x_homogeneous(1) == frame_leading_printed(ctx, k, i, j);
        if (ctx.mode == CurvatureMode::Flat) flat_ok = flat_ok && gam[a].is_zero() && frame[a].is_zero();
      }
    }
  json regs = json::array();
  bool all = true;
  auto reg = [&](const char* name, const char* coef, bool ok, bool applies = true) {
    regs.push_back({{"name", name}, {"coefficient", coef}, {"result", applies ? (ok ? "pass" : "fail") : "skipped"}});
    if (applies) all = all && ok;
  };
  reg("metric_quadratic", "-1/3", q_g);
  reg("inverse_metric_quadratic", "1/3", q_ginv);
  reg("metric_cubic", "-1/6", c_g, K >= 3);
  reg("vielbein_a_quadratic", "-1/6", q_a);
  reg("vielbein_b_quadratic", "1/6", q_b);
  reg("vielbein_a_cubic", "-1/12", c_a, K >= 3);
  reg("vielbein_b_cubic", "1/12", c_b, K >= 3);
  reg("christoffel_linear", "1/3", lin_gam);
  reg("frame_christoffel_linear", "-1/2", lin_frame);
  reg("a_at_equals_g", "", aat);
  reg("bt_b_equals_g_inv", "", btb);
  reg("neumann_inverse", "", neumann);
  reg("flat_entries", "", flat_ok, ctx.mode == CurvatureMode::Flat);
  res["regressions"] = regs;

  Outcome out;
  out.report["results"] = res;
  out.report["verdicts"] = {{"regressions", all ? "pass" : "fail"}};
  out.status = all ? Status::Ok : Status::Negative;
  return out;
}

Outcome op_cmd(const json& cfg) {
  const json& o = cfg.at("options");
  std::string name = o.at("name"), action = o.at("action");
  const auto& names = named_operators();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& s : names) list += (list.empty() ? "" : ", ") + s;
    usage("unknown operator '" + name + "'; known: " + list);
  }
  int n = cfg.at("n");
  if ((name.find("dirac") != std::string::npos || name.find("spinors") != std::string::npos) && n % 2)
    usage("spinor operators need an even dimension");
  JetContext ctx = make_context(cfg);
  auto jets = operator_jets(ctx);
  GeomDiffOp P = build_named(name, jets);

  Outcome out;
  json res{{"operator_id", name}};
  if (action == "show") {
    auto chk = check_geometric(P);
    res["operator"] = geom_op_json(P);
    res["geometric"] = chk.ok;
    if (!chk.ok) res["detail"] = chk.detail;
    out.report["results"] = res;
    out.report["verdicts"] = {{"geometric", chk.ok ? "pass" : "fail"}};
    out.status = chk.ok ? Status::Ok : Status::Negative;
    return out;
  }
  RescaleReport rep = rescalability(P);
  json ws = json::array();
  for (const auto& w : rep.witnesses) {
    json j{{"gamma", multi_json(w.gamma, n)}, {"needed", w.needed}, {"text", w.str()}};
    j[P.bundle == Bundle::Spinors ? "word" : "in"] = subset_label(w.I);
    if (w.J) j["out"] = subset_label(*w.J);
    j["theta"] = w.theta ? json(*w.theta) : json(nullptr);
    j["lambda_degree"] = w.lambda_degree ? json(*w.lambda_degree) : json(nullptr);
    ws.push_back(j);
  }
  res["verdict"] = verdict_key(rep.verdict);
  res["theta_verdict"] = verdict_key(rep.theta_verdict);
  res["decomposition_flag"] = rep.decomposition_flag;
  res["reliable_through"] = rep.reliable_through == INT_MAX ? json(nullptr) : json(rep.reliable_through);
  res["witnesses"] = ws;
  if (!rep.note.empty()) res["note"] = rep.note;
  out.report["verdicts"] = {{"lambda_grading", verdict_key(rep.verdict)}, {"theta", verdict_key(rep.theta_verdict)}};
  if (rep.verdict != Verdict::Rescalable) {
    out.report["results"] = res;
    out.status = Status::Negative;
    return out;
  }
  if (action == "limit") {
    if (!rep.limit) throw std::domain_error("truncation too low to extract the limit: " + rep.note);
    const FormOperator& L = *rep.limit;
    res["limit"] = form_op_json(L, P.bundle);
    res["limit"]["pretty"] = L.pretty();
    if (name == "dirac_squared") {
      bool same = L.reduced(n) == dirac_square_limit_expected(ctx).reduced(n);
      res["limit"]["matches_harmonic_oscillator"] = same;
      out.report["verdicts"]["limit_formula"] = same ? "pass" : "fail";
      if (!same) out.status = Status::Negative;
    }
  }
  out.report["results"] = res;
  return out;
}

FormOperator neg_laplacian(int n, int fn) {
  FormOperator r(n, fn);
  for (int i = 1; i <= n; ++i) r += scalar_term(n, fn, unit_multi(i) + unit_multi(i), PolyExpr(-1));
  return r;
}

Outcome residue_cmd(const json& cfg) {
  const json& o = cfg.at("options");
  int n = cfg.at("n");
  std::string model = o.at("model");
  TraceMode mode = trace_mode_from_string(o.at("trace_mode"));
  int fn = o.at("fiber") == "forms" ? n : 0;
  Grading grading = model == "limit_log" ? Grading::Spinors : Grading::Forms;
  if (mode == TraceMode::Berezin && fn != n) usage("berezin mode needs the forms fiber");
  if (mode == TraceMode::Str && grading == Grading::Spinors && n % 2) usage("spinor supertrace needs an even dimension");

  FormOperator P;
  PhgSymbol Q;
  std::string id;
  std::optional<LocalizationReport> loc;
  if (model == "flat_power") {
    int e = o.at("exponent");
    P = neg_laplacian(n, fn);
    int depth = std::max(n + 1, 2 * e + n + 1);
    Q = power_symbol_at(resolvent_symbol(symbol_of(P), depth), e);
    id = "(-Delta)^" + std::to_string(e);
  } else if (model == "schrodinger_log") {
    PolyExpr V = potential_poly(o.at("potential"));
    P = neg_laplacian(n, fn) + scalar_term(n, fn, Multi{}, V);
    Q = log_symbol(resolvent_symbol(symbol_of(P), n + 1));
    id = "log(-Delta + V), V = " + V.str();
    if (fn == 0) loc = localization_check(P, LocalizationVariant::Scalar);
  } else {
    if (n % 2) usage("limit_log needs an even dimension");
    JetContext ctx = make_context(cfg);
    P = dirac_square_limit_expected(ctx);
    Q = log_symbol(resolvent_symbol(symbol_of(P), n + 1));
    id = "log(lim D^2)";
    loc = localization_check(P, localization_variant_from_string(o.at("variant")), &P);
  }
  DensityValue d = residue_density(Q, mode, grading);

  json ledger = json::array();
  bool ok = true;
  PolyExpr ln = PolyExpr::lambda(n);
  {
    DensityValue f = residue_density(pullback_symbol(Q), mode, grading);
    bool eq = f == compose_contraction(d).times(ln);
    ok = ok && eq;
    ledger.push_back({{"identity", "f_lambda^#: omega(x) -> lambda^" + std::to_string(n) + " omega(lambda x)"},
                      {"value", f.exact()}, {"asserted", true}, {"holds", eq}});
  }
  if (mode == TraceMode::Berezin) {
    DensityValue u = residue_density(getzler_symbol_conjugate(Q), mode, grading);
    DensityValue uf = residue_density(getzler_symbol_conjugate(pullback_symbol(Q)), mode, grading);
    bool e1 = u == d.times(PolyExpr::lambda(-n)), e2 = uf == compose_contraction(d);
    ok = ok && e1 && e2;
    ledger.push_back({{"identity", "U_lambda^#: tilde-omega -> lambda^-" + std::to_string(n) + " tilde-omega"},
                      {"value", u.exact()}, {"asserted", true}, {"holds", e1}});
    ledger.push_back({{"identity", "U_lambda^# f_lambda^#: tilde-omega(x) -> tilde-omega(lambda x)"},
                      {"value", uf.exact()}, {"asserted", true}, {"holds", e2}});
  }
  json res{{"model", model}, {"density", density_json(d, mode, id, ledger)}};
  if (loc) {
    res["localization"] = {{"variant", to_string(loc->variant)}, {"left", loc->left.exact()}, {"right", loc->right.exact()},
                           {"left_family", loc->left_family.exact()}, {"agree", loc->agree},
                           {"asserted", loc->asserted}, {"ledger", loc->ledger}};
    if (loc->asserted) ok = ok && loc->agree;
  }
  Outcome out;
  out.report["results"] = res;
  out.report["verdicts"] = {{"asserted_identities", ok ? "pass" : "fail"}};
  out.status = ok ? Status::Ok : Status::Negative;
  return out;
}

}  // namespace

int thread_cap() {
  int hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("GETZLER_THREADS");
  if (!env || !*env) return hw;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (*end || v < 1) return 1;
  return int(std::min<long>(v, hw));
}

json normalize_config(const json& in) {
  if (!in.is_object()) usage("config must be a JSON object");
  reject_unknown(in, {"schema", "command", "n", "K", "seed", "curvature", "options"}, "config");
  if (in.contains("schema") && in.at("schema") != 1) usage("unsupported schema; expected 1");
  if (!in.contains("command")) usage("missing command");
  std::string cmd = get_str(in, "command", "", {kCommands[0], kCommands[1], kCommands[2], kCommands[3]});
  json c;
  c["schema"] = 1;
  c["command"] = cmd;
  c["n"] = get_int(in, "n", 2, 1, kMaxDim);
  c["K"] = get_int(in, "K", 3, 2, 3);
  if (in.contains("seed") && !in.at("seed").is_number_unsigned()) usage("seed must be a non-negative integer");
  c["seed"] = in.value("seed", uint64_t(1));
  int n = c["n"];

  json cv = in.value("curvature", json::object());
  if (!cv.is_object()) usage("curvature must be an object");
  reject_unknown(cv, {"mode", "seed", "file"}, "curvature");
  json cn{{"mode", get_str(cv, "mode", "symbolic", {"symbolic", "flat", "random", "explicit"})}};
  if (cn["mode"] == "random") {
    if (cv.contains("seed") && !cv.at("seed").is_number_unsigned()) usage("curvature seed must be a non-negative integer");
    cn["seed"] = cv.value("seed", c["seed"].get<uint64_t>());
  }
  if (cn["mode"] == "explicit") {
    if (!cv.contains("file") || !cv.at("file").is_string()) usage("explicit curvature needs a file");
    cn["file"] = cv.at("file");
  }
  c["curvature"] = cn;

  json opt = in.value("options", json::object());
  if (!opt.is_object()) usage("options must be an object");
  json on;
  on["timing"] = opt.value("timing", false);
  if (!on["timing"].is_boolean()) usage("timing must be a boolean");
  if (cmd == "clifford-check") {
    reject_unknown(opt, {"samples", "timing"}, "options");
    on["samples"] = get_int(opt, "samples", 100, 0, 1000000);
  } else if (cmd == "jets") {
    reject_unknown(opt, {"timing"}, "options");
  } else if (cmd == "op") {
    reject_unknown(opt, {"name", "action", "timing"}, "options");
    if (!opt.contains("name")) usage("op needs an operator name");
    on["name"] = get_str(opt, "name", "");
    on["action"] = get_str(opt, "action", "show", {"show", "rescalable", "limit"});
  } else {
    reject_unknown(opt, {"model", "exponent", "potential", "trace_mode", "fiber", "variant", "timing"}, "options");
    if (!opt.contains("model")) usage("residue needs a model");
    std::string model = get_str(opt, "model", "", {"flat_power", "schrodinger_log", "limit_log"});
    on["model"] = model;
    if (model == "flat_power") {
      if (!opt.contains("exponent") && n % 2) usage("odd dimension: give an integer exponent");
      on["exponent"] = get_int(opt, "exponent", -n / 2, -8, 4);
    } else if (opt.contains("exponent")) {
      usage("exponent applies to flat_power only");
    }
    if (model == "schrodinger_log") on["potential"] = normalize_potential(opt.value("potential", json("1")), n);
    else if (opt.contains("potential")) usage("potential applies to schrodinger_log only");
    if (model == "limit_log") {
      on["variant"] = get_str(opt, "variant", "spinors", {"forms", "spinors"});
      on["fiber"] = get_str(opt, "fiber", "forms", {"forms"});
    } else {
      if (opt.contains("variant")) usage("variant applies to limit_log only");
      on["fiber"] = get_str(opt, "fiber", "scalar", {"scalar", "forms"});
    }
    on["trace_mode"] = get_str(opt, "trace_mode", model == "limit_log" ? "berezin" : "tr", {"tr", "str", "berezin"});
  }
  c["options"] = on;
  return c;
}

std::string canonical(const json& cfg) { return cfg.dump(2) + "\n"; }

Outcome run(const json& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  std::string cmd = cfg.at("command");
  Outcome out;
  if (cmd == "clifford-check")
    out = clifford_check(cfg);
  else if (cmd == "jets")
    out = jets_cmd(cfg);
  else if (cmd == "op")
    out = op_cmd(cfg);
  else
    out = residue_cmd(cfg);
  json r;
  r["schema"] = 1;
  r["command"] = cfg;
  r["inputs_digest"] = "fnv1a64:" + fnv1a(canonical(cfg));
  r["results"] = out.report.at("results");
  r["verdicts"] = out.report.at("verdicts");
  r["status"] = out.status == Status::Ok ? "ok" : "negative";
  // timing breaks byte-identical reports, so it is opt-in
  if (cfg.at("options").at("timing").get<bool>())
    r["timing"] = {{"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
  else
    r["timing"] = nullptr;
  out.report = std::move(r);
  return out;
}

}  // namespace getzler::reports
