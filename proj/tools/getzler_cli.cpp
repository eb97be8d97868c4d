// getzler <command> [--dim N] [--trunc K] [--seed S] [--config path.json] [--out path.json]

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "getzler/getzler.h"
#include "json.hpp"

using json = nlohmann::json;

namespace {

struct Flags {
  std::optional<int> dim, trunc, samples, exponent;
  std::optional<uint64_t> seed;
  std::string config, out, curvature, curvature_file, potential, trace_mode, fiber, variant;
  std::string op_name, op_action, model;
  bool timing = false, print_config = false;
};

int die(const std::string& msg) {
  std::cerr << "getzler: " << msg << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Getzler rescaling and residue density engine"};
  app.require_subcommand(1);
  Flags f;
  auto common = [&](CLI::App* s) {
    s->add_option("--dim", f.dim, "dimension n (1..6)");
    s->add_option("--trunc", f.trunc, "jet truncation order K (2..3)");
    s->add_option("--seed", f.seed, "random seed");
    s->add_option("--config", f.config, "run config (JSON, schema 1)");
    s->add_option("--out", f.out, "write the report here instead of stdout");
    s->add_flag("--timing", f.timing, "include wall-clock timing (reports are then not byte-identical)");
    s->add_flag("--print-config", f.print_config, "print the normalized config and exit");
  };
  auto curv = [&](CLI::App* s) {
    s->add_option("--curvature", f.curvature, "symbolic | flat | random | explicit");
    s->add_option("--curvature-file", f.curvature_file, "curvature JSON for --curvature explicit");
  };
  auto* cc = app.add_subcommand("clifford-check", "supertrace versus Berezin integral on random Clifford elements");
  common(cc);
  cc->add_option("--samples", f.samples, "number of random elements");
  auto* jt = app.add_subcommand("jets", "normal-coordinate jets and coefficient regressions");
  common(jt);
  curv(jt);
  auto* op = app.add_subcommand("op", "show, test or rescale a named operator");
  common(op);
  curv(op);
  op->add_option("name", f.op_name, "operator name")->required();
  op->add_option("action", f.op_action, "show | rescalable | limit");
  auto* rs = app.add_subcommand("residue", "residue densities of Laplace-type models");
  common(rs);
  curv(rs);
  rs->add_option("model", f.model, "flat_power | schrodinger_log | limit_log")->required();
  rs->add_option("--exponent", f.exponent, "integer power for flat_power");
  rs->add_option("--potential", f.potential, "rational constant or JSON term list for schrodinger_log");
  rs->add_option("--trace-mode", f.trace_mode, "tr | str | berezin");
  rs->add_option("--fiber", f.fiber, "scalar | forms");
  rs->add_option("--variant", f.variant, "forms | spinors (limit_log localization)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  CLI::App* sub = app.get_subcommands().front();
  std::string command = sub->get_name();

  json cfg = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) return die("cannot read " + f.config);
    try {
      cfg = json::parse(in);
    } catch (const std::exception& e) {
      return die(std::string("config: ") + e.what());
    }
    if (!cfg.is_object()) return die("config must be a JSON object");
    if (cfg.contains("command") && cfg["command"] != command)
      return die("config command '" + cfg["command"].dump() + "' differs from '" + command + "'");
  }
  cfg["command"] = command;
  if (f.dim) cfg["n"] = *f.dim;
  if (f.trunc) cfg["K"] = *f.trunc;
  if (f.seed) cfg["seed"] = *f.seed;
  if (!f.curvature.empty()) {
    cfg["curvature"] = json{{"mode", f.curvature}};
    if (!f.curvature_file.empty()) cfg["curvature"]["file"] = f.curvature_file;
  } else if (!f.curvature_file.empty()) {
    cfg["curvature"] = json{{"mode", "explicit"}, {"file", f.curvature_file}};
  }
  json& o = cfg["options"];
  if (!o.is_object()) o = json::object();
  if (f.timing) o["timing"] = true;
  if (f.samples) o["samples"] = *f.samples;
  if (!f.op_name.empty()) o["name"] = f.op_name;
  if (!f.op_action.empty()) o["action"] = f.op_action;
  if (!f.model.empty()) o["model"] = f.model;
  if (f.exponent) o["exponent"] = *f.exponent;
  if (!f.potential.empty()) {
    if (f.potential[0] == '[') {
      try {
        o["potential"] = json::parse(f.potential);
      } catch (const std::exception& e) {
        return die(std::string("potential: ") + e.what());
      }
    } else {
      o["potential"] = f.potential;
    }
  }
  if (!f.trace_mode.empty()) o["trace_mode"] = f.trace_mode;
  if (!f.fiber.empty()) o["fiber"] = f.fiber;
  if (!f.variant.empty()) o["variant"] = f.variant;

  getzler_config* c = nullptr;
  getzler_status s = getzler_config_parse(cfg.dump().c_str(), &c);
  if (s != GETZLER_OK) return die(getzler_last_error());
  if (f.print_config) {
    std::cout << getzler_config_json(c);
    getzler_config_free(c);
    return 0;
  }
  getzler_report* r = nullptr;
  s = getzler_run(c, &r);
  getzler_config_free(c);
  if (!r) return die(getzler_last_error());
  int code = getzler_exit_code(s);
  if (!f.out.empty()) {
    getzler_status w = getzler_report_write(r, f.out.c_str());
    if (w != GETZLER_OK) {
      getzler_report_free(r);
      return die(getzler_last_error());
    }
    std::cout << command << ": " << (code == 0 ? "ok" : "negative") << " -> " << f.out << "\n";
  } else {
    std::cout << getzler_report_json(r);
  }
  getzler_report_free(r);
  return code;
}
