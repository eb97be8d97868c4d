#include <fstream>
#include <sstream>
#include <string>

#include "getzler/getzler.h"
#include "getzler/reports.hpp"

using getzler::reports::json;
namespace rp = getzler::reports;

struct getzler_config {
  json cfg;
  std::string text;
};

struct getzler_report {
  json report;
  std::string text;
  getzler_status status = GETZLER_OK;
};

namespace {

thread_local std::string g_error;

getzler_status fail(getzler_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

template <class F>
getzler_status guarded(F&& f) {
  try {
    g_error.clear();
    return f();
  } catch (const rp::UsageError& e) {
    return fail(GETZLER_ERR_USAGE, e.what());
  } catch (const json::exception& e) {
    return fail(GETZLER_ERR_USAGE, std::string("json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    return fail(GETZLER_ERR_USAGE, e.what());
  } catch (const std::domain_error& e) {
    return fail(GETZLER_ERR_DOMAIN, e.what());
  } catch (const std::exception& e) {
    return fail(GETZLER_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GETZLER_ERR_INTERNAL, "unknown error");
  }
}

}  // namespace

extern "C" {

const char* getzler_version(void) { return "1.0.0"; }

const char* getzler_last_error(void) { return g_error.c_str(); }

int getzler_exit_code(getzler_status s) {
  switch (s) {
    case GETZLER_OK:
      return 0;
    case GETZLER_NEGATIVE:
      return 2;
    default:
      return 1;
  }
}

getzler_status getzler_config_parse(const char* text, getzler_config** out) {
  if (!out) return fail(GETZLER_ERR_USAGE, "null output pointer");
  *out = nullptr;
  if (!text) return fail(GETZLER_ERR_USAGE, "null config text");
  return guarded([&] {
    json in = json::parse(text);
    auto* c = new getzler_config;
    c->cfg = rp::normalize_config(in);
    c->text = rp::canonical(c->cfg);
    *out = c;
    return GETZLER_OK;
  });
}

getzler_status getzler_config_load(const char* path, getzler_config** out) {
  if (!out) return fail(GETZLER_ERR_USAGE, "null output pointer");
  *out = nullptr;
  std::ifstream f(path ? path : "");
  if (!f) return fail(GETZLER_ERR_IO, std::string("cannot read ") + (path ? path : "(null)"));
  std::stringstream ss;
  ss << f.rdbuf();
  std::string s = ss.str();
  return getzler_config_parse(s.c_str(), out);
}

const char* getzler_config_json(const getzler_config* cfg) { return cfg ? cfg->text.c_str() : ""; }

void getzler_config_free(getzler_config* cfg) { delete cfg; }

getzler_status getzler_run(const getzler_config* cfg, getzler_report** out) {
  if (!out) return fail(GETZLER_ERR_USAGE, "null output pointer");
  *out = nullptr;
  if (!cfg) return fail(GETZLER_ERR_USAGE, "null config");
  return guarded([&] {
    rp::Outcome o = rp::run(cfg->cfg);
    auto* r = new getzler_report;
    r->report = std::move(o.report);
    r->text = r->report.dump(2) + "\n";
    r->status = o.status == rp::Status::Ok ? GETZLER_OK : GETZLER_NEGATIVE;
    *out = r;
    return r->status;
  });
}

const char* getzler_report_json(const getzler_report* r) { return r ? r->text.c_str() : ""; }

getzler_status getzler_report_status(const getzler_report* r) { return r ? r->status : GETZLER_ERR_USAGE; }

getzler_status getzler_report_write(const getzler_report* r, const char* path) {
  if (!r || !path) return fail(GETZLER_ERR_USAGE, "null report or path");
  std::ofstream f(path, std::ios::binary);
  if (!f) return fail(GETZLER_ERR_IO, std::string("cannot write ") + path);
  f << r->text;
  if (!f) return fail(GETZLER_ERR_IO, std::string("write failed: ") + path);
  return GETZLER_OK;
}

void getzler_report_free(getzler_report* r) { delete r; }

int getzler_thread_cap(void) { return rp::thread_cap(); }

}  // extern "C"
