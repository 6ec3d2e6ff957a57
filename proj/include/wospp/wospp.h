#ifndef WOSPP_WOSPP_H
#define WOSPP_WOSPP_H

#include <stddef.h>
#include <stdint.h>

#if defined(WOSPP_BUILDING_LIBRARY)
#define WOSPP_API __attribute__((visibility("default")))
#else
#define WOSPP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wospp_status {
    WOSPP_OK = 0,
    WOSPP_ERR_CONFIG = 1,   /* invalid scenario, flag or argument */
    WOSPP_ERR_INIT = 2,     /* no connected layout within init_attempts */
    WOSPP_ERR_IO = 3,       /* file or socket failure */
    WOSPP_ERR_RUNTIME = 4,  /* anything else */
    WOSPP_ERR_NULL = 5      /* null handle or pointer */
} wospp_status;

typedef struct wospp_scenario wospp_scenario;
typedef struct wospp_sim wospp_sim;
typedef struct wospp_gateway wospp_gateway;

/* Message of the last failed call on this thread; "" after success. */
WOSPP_API const char* wospp_last_error(void);
WOSPP_API const char* wospp_version(void);

/* Scenarios. */
WOSPP_API wospp_status wospp_scenario_load(const char* path, wospp_scenario** out);
WOSPP_API wospp_status wospp_scenario_parse(const char* json_text, wospp_scenario** out);
WOSPP_API void wospp_scenario_free(wospp_scenario* s);
WOSPP_API wospp_status wospp_scenario_set_seed(wospp_scenario* s, uint64_t seed);
/* Horizon for single-primitive and layered scenarios; schedules are truncated or
   their last stage stretched. */
WOSPP_API wospp_status wospp_scenario_set_steps(wospp_scenario* s, int64_t steps);
/* NULL leaves an output unchanged, "" disables it. */
WOSPP_API wospp_status wospp_scenario_set_outputs(wospp_scenario* s, const char* trace_path,
                                                  const char* metrics_path);
WOSPP_API wospp_status wospp_scenario_steps(const wospp_scenario* s, int64_t* out);
/* Canonical JSON; the caller releases it with wospp_string_free. */
WOSPP_API wospp_status wospp_scenario_serialize(const wospp_scenario* s, char** out);
WOSPP_API void wospp_string_free(char* str);

/* Headless run writing the scenario's outputs. */
WOSPP_API wospp_status wospp_run(const wospp_scenario* s);
/* Seeds seed..seed+count-1; metrics_out gets mean/std per timestep (NULL: the
   scenario's metrics path, "": none). trace_pattern may be NULL; otherwise every
   seed writes <stem>.seed<N><ext>. threads 0 = auto. */
WOSPP_API wospp_status wospp_sweep(const wospp_scenario* s, int count, const char* metrics_out,
                                   const char* trace_pattern, int threads);

/* Live steering over NDJSON/TCP on 127.0.0.1. port 0 picks a free port. */
WOSPP_API wospp_status wospp_gateway_start(const wospp_scenario* s, int port, wospp_gateway** out);
WOSPP_API int wospp_gateway_port(const wospp_gateway* g);
/* Blocks until wospp_request_shutdown or a simulation failure. */
WOSPP_API wospp_status wospp_gateway_wait(wospp_gateway* g);
/* Stops the gateway and commits its trace and metrics files. */
WOSPP_API wospp_status wospp_gateway_stop(wospp_gateway* g);
WOSPP_API void wospp_gateway_free(wospp_gateway* g);
/* Start, report the port through on_listening (may be NULL), wait, stop. */
WOSPP_API wospp_status wospp_serve(const wospp_scenario* s, int port,
                                   void (*on_listening)(int port, void* user), void* user);
/* Async-signal-safe; asks every running gateway to shut down. */
WOSPP_API void wospp_request_shutdown(void);

/* Stepping a swarm directly, without outputs. */
WOSPP_API wospp_status wospp_sim_create(const wospp_scenario* s, wospp_sim** out);
WOSPP_API void wospp_sim_free(wospp_sim* sim);
WOSPP_API wospp_status wospp_sim_step(wospp_sim* sim, int64_t n);
WOSPP_API int64_t wospp_sim_timestep(const wospp_sim* sim);
WOSPP_API size_t wospp_sim_agent_count(const wospp_sim* sim);
/* xy holds 2*capacity doubles: x0, y0, x1, y1, ... */
WOSPP_API wospp_status wospp_sim_positions(const wospp_sim* sim, double* xy, size_t capacity);
/* Metric of the primary layer by name, e.g. "rms_to_centroid". WOSPP_ERR_CONFIG
   when the metric is not defined for the current binding. */
WOSPP_API wospp_status wospp_sim_metric(const wospp_sim* sim, const char* name, double* out);

#ifdef __cplusplus
}
#endif

#endif
