#ifndef FIBERSIM_H
#define FIBERSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(FIBERSIM_BUILDING)
#define FS_API __attribute__((visibility("default")))
#else
#define FS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; also used as CLI exit codes. */
typedef enum fs_status {
  FS_OK = 0,
  FS_ERR_CONFIG = 2,
  FS_ERR_NUMERICAL = 3,
  FS_ERR_ACCEPTANCE = 4,
  FS_ERR_PARAMETER = 5,
  FS_ERR_DIMENSION = 6,
  FS_ERR_IO = 7,
  FS_ERR_INTERNAL = 8
} fs_status;

typedef struct fs_simulation fs_simulation;

typedef struct fs_step_info {
  long hydro_evals;
  int gmres_iters;
  double gmres_rel_residual;
  double max_tangent_deviation;
  double time;
} fs_step_info;

typedef struct fs_run_summary {
  long steps;
  long hydro_evals;
  long max_evals_per_step;
  double max_tangent_deviation;
  int stable;
  int has_moduli;
  double G_elastic;
  double G_viscous;
  double wall_seconds;
} fs_run_summary;

typedef struct fs_near_quad_result {
  double frac_short_3;
  double frac_long_3;
  double min_digits_short;
  double reference_self_consistency;
} fs_near_quad_result;

FS_API const char* fs_version(void);
/* Message of the last failing call on this thread. */
FS_API const char* fs_last_error(void);

FS_API int fs_simulation_create(const char* config_json, fs_simulation** out);
FS_API int fs_simulation_create_from_file(const char* path, fs_simulation** out);
FS_API void fs_simulation_destroy(fs_simulation* sim);
FS_API int fs_simulation_step(fs_simulation* sim, fs_step_info* info);
FS_API int fs_simulation_shape(const fs_simulation* sim, int* fibers, int* nodes);
/* Copies positions as fibers x nodes x 3, row-major; len is the capacity in doubles. */
FS_API int fs_simulation_positions(const fs_simulation* sim, double* out, size_t len);
FS_API int fs_simulation_time(const fs_simulation* sim, double* t);
/* Fiber plus cross-linker stress at the last step midpoint, row-major 3x3. */
FS_API int fs_simulation_stress(const fs_simulation* sim, double out[9]);
FS_API int fs_simulation_hydro_evaluations(const fs_simulation* sim, long* count);

/* Runs a configuration file; output_dir overrides the configured directory when non-null. */
FS_API int fs_run(const char* config_path, const char* output_dir, int emit_plots, fs_run_summary* out);
FS_API int fs_study_near_quad(uint64_t seed, int nfibers, int ntargets, const char* output_dir,
                              fs_near_quad_result* out);
FS_API int fs_check_hex_lattice(double nufft_tol, double* max_rel_error);
/* errors has ndts-1 entries. */
FS_API int fs_converge(const char* config_path, const double* dts, int ndts, double* errors, double* slope);
/* Strain amplitude is kept from the configuration; each run waits max(1, period) then 3 periods. */
FS_API int fs_moduli(const char* config_path, const double* omegas, int n, double* G_elastic, double* G_viscous);

#ifdef __cplusplus
}
#endif

#endif
