/* C interface to the crystal library. All handles are opaque; every call
 * returns a crystal_status and leaves a message in crystal_last_error() on
 * failure. Strings returned through char** are owned by the caller and must
 * be released with crystal_string_free. Any char** output may be NULL. */
#ifndef CRYSTAL_CRYSTAL_H
#define CRYSTAL_CRYSTAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CRYSTAL_BUILD)
#    define CRYSTAL_API __declspec(dllexport)
#  else
#    define CRYSTAL_API __declspec(dllimport)
#  endif
#else
#  define CRYSTAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum crystal_status {
    CRYSTAL_OK = 0,
    CRYSTAL_INVALID_ARGUMENT = 1,
    CRYSTAL_UNKNOWN_BUILTIN = 2,
    CRYSTAL_PARSE_ERROR = 3,
    CRYSTAL_SYMMETRY_VIOLATION = 4,
    CRYSTAL_SUMMABILITY_VIOLATION = 5,
    CRYSTAL_NOT_ADMISSIBLE = 6,
    CRYSTAL_RESOLUTION_EXCEEDED = 7,
    CRYSTAL_SPECTRUM_PROXIMITY = 8,
    CRYSTAL_INTEGRATION_FAILURE = 9,
    CRYSTAL_NUMERICAL_ERROR = 10,
    CRYSTAL_DIVERGENT_GRADIENT_ENERGY = 11,
    CRYSTAL_PRECONDITION_FAILED = 12,
    CRYSTAL_IO_ERROR = 13,
    CRYSTAL_INTERNAL_ERROR = 99
} crystal_status;

typedef struct crystal_spec crystal_spec;
typedef struct crystal_bands crystal_bands;
typedef struct crystal_field crystal_field;

CRYSTAL_API const char* crystal_version(void);
CRYSTAL_API const char* crystal_status_name(crystal_status status);
/* Message of the last failing call on this thread. */
CRYSTAL_API const char* crystal_last_error(void);
CRYSTAL_API void crystal_string_free(char* s);
/* Worker threads for parallel loops; 0 picks the hardware count.
 * CRYSTAL_THREADS in the environment takes precedence. */
CRYSTAL_API void crystal_set_threads(int threads);

/* ---- specs ---- */
CRYSTAL_API crystal_status crystal_builtin_names(char** json);
/* "builtin:<name>" or a path to a JSON file. */
CRYSTAL_API crystal_status crystal_spec_load(const char* source, crystal_spec** out);
CRYSTAL_API crystal_status crystal_spec_parse_json(const char* json, crystal_spec** out);
CRYSTAL_API void crystal_spec_free(crystal_spec* spec);
CRYSTAL_API crystal_status crystal_spec_dims(const crystal_spec* spec, int* d, int* nu);
CRYSTAL_API crystal_status crystal_spec_to_json(const crystal_spec* spec, char** json);
/* Writes the full report; returns the status of the first failing check. */
CRYSTAL_API crystal_status crystal_spec_validate(const crystal_spec* spec, double tol, char** json);
CRYSTAL_API crystal_status crystal_spec_connectivity(const crystal_spec* spec, char** json);

/* ---- bands ---- */
CRYSTAL_API crystal_status crystal_bands_sample(const crystal_spec* spec, int64_t N, double eps, crystal_bands** out);
CRYSTAL_API void crystal_bands_free(crystal_bands* bands);
CRYSTAL_API crystal_status crystal_bands_csv(const crystal_bands* bands, char** csv);
/* tol_flat <= 0 selects the default tolerance. */
CRYSTAL_API crystal_status crystal_bands_report(const crystal_bands* bands, double tol_flat, double min_measure,
                                                char** json);
CRYSTAL_API crystal_status crystal_bands_top_flatness(const crystal_bands* bands, char** json);
/* Occupation histogram of the state sum_i (re_i + i im_i) delta_{site_i}. */
CRYSTAL_API crystal_status crystal_bands_occupation(const crystal_bands* bands, const int64_t* sites, const double* re,
                                                    const double* im, size_t n, int bins, int band, char** csv,
                                                    char** json);
CRYSTAL_API crystal_status crystal_bands_ac(const crystal_bands* bands, double tol_grad, double min_measure,
                                            char** json);
CRYSTAL_API crystal_status crystal_regularity(const crystal_spec* spec, int jmin, int jmax, char** csv, char** json);

/* ---- evolution ---- */
/* e^{-itH} applied to the state (delta_0 when n == 0), on the window |m| <= M. */
CRYSTAL_API crystal_status crystal_field_propagate(const crystal_spec* spec, double t, int64_t M, double eps,
                                                   const int64_t* sites, const double* re, const double* im, size_t n,
                                                   crystal_field** out);
CRYSTAL_API void crystal_field_free(crystal_field* field);
CRYSTAL_API crystal_status crystal_field_window(const crystal_field* field, int64_t* M);
CRYSTAL_API crystal_status crystal_field_get(const crystal_field* field, int64_t m, double* re, double* im);
CRYSTAL_API crystal_status crystal_field_csv(const crystal_field* field, char** csv);
CRYSTAL_API crystal_status crystal_field_summary(const crystal_field* field, char** json);
CRYSTAL_API crystal_status crystal_disperse(const crystal_spec* spec, const double* times, size_t n, int64_t M,
                                            double eps, int fit_exponent, char** csv, char** json);

/* ---- transport ---- */
CRYSTAL_API crystal_status crystal_transport(const crystal_spec* spec, const double* times, size_t n, int64_t M_start,
                                             int64_t M_cap, double eps, char** json);
CRYSTAL_API crystal_status crystal_superballistic(const double* alphas, size_t n, double t, const int64_t* windows,
                                                  size_t n_windows, char** json);

/* ---- resolvent and locality ---- */
CRYSTAL_API crystal_status crystal_green(const crystal_spec* spec, double z_re, double z_im, int64_t n_max, double eps,
                                         char** csv, char** json);
CRYSTAL_API crystal_status crystal_locality(const crystal_spec* spec, int64_t R_max, const int64_t* N_list, size_t n,
                                            char** csv, char** json);

/* ---- full acceptance run ---- */
CRYSTAL_API crystal_status crystal_reproduce(int64_t grid_override, int inject_sign_error, char** markdown,
                                             char** json, int* all_passed);

#ifdef __cplusplus
}
#endif

#endif
