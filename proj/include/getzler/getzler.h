/* C interface to the getzler engine. All strings are UTF-8 JSON. */
#ifndef GETZLER_H
#define GETZLER_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum getzler_status {
  GETZLER_OK = 0,
  GETZLER_ERR_USAGE = 1,     /* malformed config, unknown command, bad precondition */
  GETZLER_NEGATIVE = 2,      /* the mathematical verdict is negative */
  GETZLER_ERR_DOMAIN = 3,    /* truncation or symbol depth too small */
  GETZLER_ERR_IO = 4,
  GETZLER_ERR_INTERNAL = 5
} getzler_status;

typedef struct getzler_config getzler_config;
typedef struct getzler_report getzler_report;

const char* getzler_version(void);

/* message of the last failed call on this thread; never NULL */
const char* getzler_last_error(void);

/* process exit code for a status: 0 ok, 2 negative verdict, 1 otherwise */
int getzler_exit_code(getzler_status s);

/* Parses and normalizes a run config ({"schema": 1, "command": ..., ...}).
   Missing fields take their defaults. */
getzler_status getzler_config_parse(const char* json, getzler_config** out);
getzler_status getzler_config_load(const char* path, getzler_config** out);
/* canonical serialization; parse(serialize(c)) serializes byte-identically.
   The string is owned by the config. */
const char* getzler_config_json(const getzler_config* cfg);
void getzler_config_free(getzler_config* cfg);

/* Runs the configured command. A report is produced for GETZLER_OK and
   GETZLER_NEGATIVE; *out is NULL otherwise. */
getzler_status getzler_run(const getzler_config* cfg, getzler_report** out);
/* owned by the report */
const char* getzler_report_json(const getzler_report* r);
getzler_status getzler_report_status(const getzler_report* r);
getzler_status getzler_report_write(const getzler_report* r, const char* path);
void getzler_report_free(getzler_report* r);

/* GETZLER_THREADS, clamped to [1, hardware concurrency] */
int getzler_thread_cap(void);

#ifdef __cplusplus
}
#endif

#endif
