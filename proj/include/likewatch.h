/* likewatch — C interface to the coordinated-likes collection and
 * detection library. All functions return a status code; on failure
 * lw_last_error() holds a message for the calling thread. Strings are
 * UTF-8, configs are JSON documents passed as strings. */
#ifndef LIKEWATCH_H
#define LIKEWATCH_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lw_status {
  LW_OK = 0,
  LW_ERR_CONFIG = 1,       /* bad configuration or arguments */
  LW_ERR_IO = 2,           /* filesystem / serialization failure */
  LW_ERR_NOT_FOUND = 3,    /* missing tweet, file, or directory */
  LW_ERR_RATE_LIMITED = 4, /* quota hit surfaced to the caller */
  LW_ERR_QUOTA = 5,        /* monthly tweet cap exhausted */
  LW_ERR_NUMERIC = 6,      /* linear-algebra failure */
  LW_ERR_RESUMABLE = 7,    /* interrupted; rerun the same call to resume */
  LW_ERR_INTERNAL = 8
} lw_status;

/* Message for the most recent failure on this thread. Never NULL;
 * empty string when the last call succeeded. */
const char* lw_last_error(void);

/* Generate a simulated platform world under out_dir. */
lw_status lw_simulate(const char* config_json, const char* out_dir);

/* Serve a world directory over HTTP. Returns an opaque handle. */
typedef struct lw_server lw_server;
lw_status lw_server_start(const char* world_dir, const char* host, int port,
                          const char* server_config_json, lw_server** out);
int lw_server_port(const lw_server* server);
void lw_server_stop(lw_server* server);

/* Run the collector against a server base URL (e.g. "http://127.0.0.1:8080").
 * virtual_clock != 0 advances the server's clock instead of sleeping. */
lw_status lw_collect(const char* config_json, const char* server_url,
                     const char* out_dir, int virtual_clock);

/* End-to-end run (world + collection + analysis + evaluation) under out_dir.
 * crash_after_pulls > 0 aborts after that many pulls (returns
 * LW_ERR_RESUMABLE); rerunning the same call resumes and completes. */
lw_status lw_pipeline(const char* run_config_json, const char* out_dir,
                      int64_t crash_after_pulls);

/* Analysis over a dataset directory. options_json may be NULL or "{}". */
lw_status lw_bins(const char* dataset_dir, const char* out_dir,
                  const char* options_json);
lw_status lw_embed(const char* dataset_dir, const char* out_dir,
                   const char* options_json);

/* Evaluation of a dataset against the world that generated it. */
lw_status lw_eval(const char* dataset_dir, const char* world_dir,
                  const char* out_dir, const char* options_json);

/* Summary of a pipeline run directory as a JSON document. The returned
 * buffer is owned by the library; free it with lw_free. */
lw_status lw_report(const char* run_dir, char** out_json);
void lw_free(char* buf);

#ifdef __cplusplus
}
#endif

#endif /* LIKEWATCH_H */
