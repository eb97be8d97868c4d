#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "getzler/getzler.h"
#include "json.hpp"

using json = nlohmann::json;

namespace {

struct Run {
  getzler_status status = GETZLER_ERR_INTERNAL;
  json report;
  std::string text;
  std::string error;
};

Run run(const json& cfg) {
  Run r;
  getzler_config* c = nullptr;
  r.status = getzler_config_parse(cfg.dump().c_str(), &c);
  if (r.status != GETZLER_OK) {
    r.error = getzler_last_error();
    return r;
  }
  getzler_report* rep = nullptr;
  r.status = getzler_run(c, &rep);
  getzler_config_free(c);
  if (!rep) {
    r.error = getzler_last_error();
    return r;
  }
  r.text = getzler_report_json(rep);
  r.report = json::parse(r.text);
  getzler_report_free(rep);
  return r;
}

std::string normalized(const std::string& text) {
  getzler_config* c = nullptr;
  REQUIRE(getzler_config_parse(text.c_str(), &c) == GETZLER_OK);
  std::string s = getzler_config_json(c);
  getzler_config_free(c);
  return s;
}

}  // namespace

TEST_CASE("config normalization round-trips byte-identically") {
  const char* inputs[] = {
      R"({"command": "clifford-check"})",
      R"({"command": "jets", "n": 3, "K": 2, "curvature": {"mode": "flat"}})",
      R"({"command": "op", "n": 4, "options": {"name": "dirac_squared", "action": "limit"}})",
      R"({"command": "residue", "options": {"model": "schrodinger_log", "potential": [{"coef": "1/2", "x": [1]}]}})",
      R"({"command": "residue", "n": 4, "seed": 9, "curvature": {"mode": "random"}, "options": {"model": "limit_log"}})",
  };
  for (const char* in : inputs) {
    std::string once = normalized(in);
    CHECK(normalized(once) == once);
    CHECK(json::parse(once)["schema"] == 1);
  }
  auto r = json::parse(normalized(R"({"command": "residue", "n": 4, "options": {"model": "flat_power"}})"));
  CHECK(r["options"]["exponent"] == -2);
  CHECK(r["options"]["trace_mode"] == "tr");
  CHECK(json::parse(normalized(R"({"command": "residue", "options": {"model": "limit_log"}})"))["options"]["trace_mode"] ==
        "berezin");
}

TEST_CASE("malformed configs are usage errors") {
  const char* bad[] = {
      "not json",
      R"({"n": 2})",
      R"({"command": "dance"})",
      R"({"command": "jets", "schema": 2})",
      R"({"command": "jets", "K": 4})",
      R"({"command": "jets", "n": 7})",
      R"({"command": "jets", "colour": 1})",
      R"({"command": "op"})",
      R"({"command": "op", "options": {"name": "d", "action": "paint"}})",
      R"({"command": "residue", "options": {"model": "flat_power", "potential": "1"}})",
      R"({"command": "residue", "n": 3, "options": {"model": "flat_power"}})",
      R"({"command": "jets", "curvature": {"mode": "explicit"}})",
  };
  for (const char* b : bad) {
    getzler_config* c = nullptr;
    CHECK_MESSAGE(getzler_config_parse(b, &c) == GETZLER_ERR_USAGE, b);
    CHECK(c == nullptr);
    CHECK(std::string(getzler_last_error()).size() > 0);
  }
  CHECK(getzler_exit_code(GETZLER_ERR_USAGE) == 1);
  CHECK(getzler_exit_code(GETZLER_ERR_DOMAIN) == 1);
  CHECK(getzler_exit_code(GETZLER_NEGATIVE) == 2);
  CHECK(getzler_exit_code(GETZLER_OK) == 0);
}

TEST_CASE("reports are deterministic") {
  json cfgs[] = {
      {{"command", "clifford-check"}, {"n", 4}, {"seed", 3}, {"options", {{"samples", 30}}}},
      {{"command", "op"}, {"n", 2}, {"options", {{"name", "dirac_squared"}, {"action", "limit"}}}},
      {{"command", "residue"}, {"n", 2}, {"curvature", {{"mode", "random"}}}, {"options", {{"model", "limit_log"}}}},
  };
  for (const auto& c : cfgs) {
    Run a = run(c), b = run(c);
    REQUIRE(a.status == GETZLER_OK);
    CHECK(a.text == b.text);
    CHECK(a.report["timing"].is_null());
    CHECK(a.report["schema"] == 1);
  }
  // thread count does not change the output
  json c = cfgs[0];
  setenv("GETZLER_THREADS", "1", 1);
  std::string one = run(c).text;
  setenv("GETZLER_THREADS", "4", 1);
  CHECK(run(c).text == one);
  unsetenv("GETZLER_THREADS");
  CHECK(getzler_thread_cap() >= 1);
}

TEST_CASE("clifford-check") {
  Run r = run({{"command", "clifford-check"}, {"n", 2}});
  REQUIRE(r.status == GETZLER_OK);
  CHECK(r.report["results"]["passed"] == 100);
  CHECK(r.report["results"]["witness"]["word"] == "e1e2");
  CHECK(r.report["results"]["witness"]["str"] == "-2*i");
  Run odd = run({{"command", "clifford-check"}, {"n", 3}});
  CHECK(odd.status == GETZLER_ERR_USAGE);
  Run none = run({{"command", "clifford-check"}, {"n", 4}, {"options", {{"samples", 0}}}});
  CHECK(none.status == GETZLER_OK);
  CHECK(none.report["results"]["flags"][0] == "no samples");
}

TEST_CASE("jets reports") {
  Run r = run({{"command", "jets"}, {"n", 2}, {"K", 2}});
  REQUIRE(r.status == GETZLER_OK);
  CHECK(r.report["results"]["metric"]["g"][0][1] == "-1/3*R[1,2,1,2]*x1*x2");
  for (const auto& reg : r.report["results"]["regressions"]) CHECK(reg["result"] != "fail");
  Run flat = run({{"command", "jets"}, {"n", 3}, {"curvature", {{"mode", "flat"}}}});
  REQUIRE(flat.status == GETZLER_OK);
  CHECK(flat.report["results"]["metric"]["g"][0][1] == "0");
  CHECK(flat.report["results"]["christoffel"].empty());
  Run cubic = run({{"command", "jets"}, {"n", 4}, {"K", 3}});
  CHECK(cubic.report["results"]["metric"]["g"][0][0].get<std::string>().find(";") != std::string::npos);
}

TEST_CASE("explicit curvature files") {
  std::string path = "capi_curvature.json";
  {
    std::ofstream f(path);
    f << R"({"schema": 1, "n": 2, "R": [{"index": [1, 2, 1, 2], "value": "-1"}]})";
  }
  Run r = run({{"command", "op"},
               {"n", 2},
               {"curvature", {{"mode", "explicit"}, {"file", path}}},
               {"options", {{"name", "dirac_squared"}, {"action", "limit"}}}});
  REQUIRE(r.status == GETZLER_OK);
  CHECK(r.report["results"]["limit"]["matches_harmonic_oscillator"] == true);
  CHECK(r.report["results"]["limit"]["pretty"] == "-d_1^2 - d_2^2 - 1/2*x2 e1^e2^ d_1 + 1/2*x1 e1^e2^ d_2");
  {
    std::ofstream f(path);
    f << R"({"schema": 1, "n": 4, "R": [{"index": [1, 2, 3, 4], "value": "1"}]})";
  }
  Run bad = run({{"command", "jets"}, {"n", 4}, {"curvature", {{"mode", "explicit"}, {"file", path}}}});
  CHECK(bad.status == GETZLER_ERR_USAGE);
  std::remove(path.c_str());
}

TEST_CASE("operator verdicts and exit codes") {
  Run d = run({{"command", "op"}, {"n", 2}, {"options", {{"name", "d"}, {"action", "rescalable"}}}});
  CHECK(d.status == GETZLER_NEGATIVE);
  CHECK(d.report["results"]["verdict"] == "not_rescalable");
  bool witness = false;
  for (const auto& w : d.report["results"]["witnesses"]) witness = witness || (w["needed"] == 1 && w["theta"] == 0);
  CHECK(witness);
  Run lim = run({{"command", "op"}, {"n", 2}, {"options", {{"name", "dirac"}, {"action", "limit"}}}});
  CHECK(lim.status == GETZLER_NEGATIVE);
  CHECK(!lim.report["results"]["witnesses"].empty());
  CHECK(lim.report["results"].count("limit") == 0);
  Run h = run({{"command", "op"}, {"n", 3}, {"options", {{"name", "hodge_laplacian"}, {"action", "limit"}}}});
  REQUIRE(h.status == GETZLER_OK);
  CHECK(h.report["results"]["limit"]["pretty"] == "-d_1^2 - d_2^2 - d_3^2");
  Run s = run({{"command", "op"}, {"n", 3}, {"options", {{"name", "dirac"}}}});
  CHECK(s.status == GETZLER_ERR_USAGE);
  Run show = run({{"command", "op"}, {"n", 2}, {"options", {{"name", "scalar_laplacian"}}}});
  REQUIRE(show.status == GETZLER_OK);
  CHECK(show.report["results"]["geometric"] == true);
  CHECK(show.report["results"]["operator"]["bundle"] == "scalar");
}

TEST_CASE("residue models") {
  Run f = run({{"command", "residue"}, {"n", 2}, {"options", {{"model", "flat_power"}, {"exponent", -1}}}});
  REQUIRE(f.status == GETZLER_OK);
  CHECK(f.report["results"]["density"]["exact"] == "1/2 * pi^-1");
  Run q = run({{"command", "residue"}, {"n", 2}, {"options", {{"model", "schrodinger_log"}, {"potential", "q"}}}});
  CHECK(q.status == GETZLER_ERR_USAGE);
  Run s = run({{"command", "residue"}, {"n", 2}, {"options", {{"model", "schrodinger_log"}, {"potential", "3"}}}});
  REQUIRE(s.status == GETZLER_OK);
  CHECK(s.report["results"]["density"]["exact"] == "3/2 * pi^-1");
  CHECK(s.report["results"]["localization"]["asserted"] == false);
  for (const char* mode : {"tr", "str", "berezin"}) {
    Run z = run({{"command", "residue"},
                 {"n", 2},
                 {"options", {{"model", "schrodinger_log"}, {"potential", "0"}, {"fiber", "forms"}, {"trace_mode", mode}}}});
    REQUIRE(z.status == GETZLER_OK);
    CHECK(z.report["results"]["density"]["exact"] == "0");
  }
  Run b = run({{"command", "residue"}, {"n", 2}, {"options", {{"model", "flat_power"}, {"trace_mode", "berezin"}}}});
  CHECK(b.status == GETZLER_ERR_USAGE);
  Run l = run({{"command", "residue"}, {"n", 4}, {"options", {{"model", "limit_log"}}}});
  REQUIRE(l.status == GETZLER_OK);
  CHECK(l.report["results"]["localization"]["agree"] == true);
  CHECK(l.report["results"]["density"]["lambda_ledger"].size() == 3);
}

TEST_CASE("report files") {
  getzler_config* c = nullptr;
  REQUIRE(getzler_config_parse(R"({"command": "clifford-check", "options": {"samples": 5}})", &c) == GETZLER_OK);
  getzler_report* r = nullptr;
  REQUIRE(getzler_run(c, &r) == GETZLER_OK);
  CHECK(getzler_report_write(r, "capi_report.json") == GETZLER_OK);
  std::ifstream f("capi_report.json");
  std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  CHECK(s == getzler_report_json(r));
  CHECK(getzler_report_write(r, "/nonexistent/dir/x.json") == GETZLER_ERR_IO);
  getzler_report_free(r);
  getzler_config_free(c);
  std::remove("capi_report.json");
  CHECK(getzler_run(nullptr, &r) == GETZLER_ERR_USAGE);
}
