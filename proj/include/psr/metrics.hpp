#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psr/raster.hpp"

namespace psr {

/// Named metric values in declaration order, plus the settings used.
struct MetricReport {
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::pair<std::string, double>> parameters;

  double at(std::string_view name) const;
  bool contains(std::string_view name) const;
};

/// `name=value` lines, metric values first, then parameters prefixed with "param.".
std::string to_key_value(const MetricReport& report);
std::string to_table(const MetricReport& report);
std::string to_json(const MetricReport& report);

/// Average of a per-block (or per-pixel) index with the number of samples that
/// entered the average and the number skipped as degenerate.
struct IndexSummary {
  double value = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
};

double rmse(const MultiBandImage& ref, const MultiBandImage& test);
/// 100/ratio · sqrt(mean_m (RMSE_m / mean(ref_m))²).
double ergas(const MultiBandImage& ref, const MultiBandImage& test, double ratio);
/// Mean spectral angle in degrees; pixels with a zero spectrum are skipped.
IndexSummary sam_summary(const MultiBandImage& ref, const MultiBandImage& test);
double sam(const MultiBandImage& ref, const MultiBandImage& test);

/// Universal image quality index averaged over block×block windows placed every
/// `stride` pixels. Blocks whose denominator is below 1e-12 are skipped.
IndexSummary uiqi_summary(const Field& a, const Field& b, std::size_t block, std::size_t stride = 1);
double uiqi(const Field& a, const Field& b, std::size_t block, std::size_t stride = 1);

/// Quaternion Q4 (the four-band Q2^n); throws for any other band count.
IndexSummary q2n_summary(const MultiBandImage& ref, const MultiBandImage& test, std::size_t block = 32,
                         std::size_t stride = 32);
double q2n(const MultiBandImage& ref, const MultiBandImage& test, std::size_t block = 32, std::size_t stride = 32);

struct QnrResult {
  double d_lambda;
  double d_s;
  double qnr;
};

/// No-reference quality with p = q = α = β = 1. The low-resolution PAN is the
/// PAN through mtf_downsample(ratio, 0.15); at ratio 1 the PAN is used as is.
QnrResult qnr(const MultiBandImage& fused, const MultiBandImage& ms, const PanImage& pan, std::size_t ratio,
              std::size_t block = 32, std::size_t stride = 1);

/// RMSE, ERGAS, SAM, Q4.
MetricReport evaluate_full_reference(const MultiBandImage& ref, const MultiBandImage& test, double ratio = 4.0,
                                     std::size_t block = 32);
/// D_lambda, D_s, QNR.
MetricReport evaluate_no_reference(const MultiBandImage& fused, const MultiBandImage& ms, const PanImage& pan,
                                   std::size_t ratio = 4, std::size_t block = 32);

}  // namespace psr
