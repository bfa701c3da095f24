#include "psr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "psr/error.hpp"
#include "psr/metrics.hpp"
#include "psr/pca.hpp"

namespace psr {
namespace {

void check_restore_inputs(const MultiBandImage& fused, const PanImage& pan) {
  if (fused.bands() < 2) throw InvalidArgument("restoration needs at least two bands");
  if (fused.width() != pan.width() || fused.height() != pan.height())
    throw DimensionMismatch("fused image is " + std::to_string(fused.width()) + "x" +
                            std::to_string(fused.height()) + ", PAN is " + std::to_string(pan.width()) + "x" +
                            std::to_string(pan.height()));
}

double lambda_unit(const MultiBandImage& fused, const RestoreParams& params) {
  if (!params.normalize_lambda) return 1.0;
  const auto [lo, hi] = std::ranges::minmax(fused.samples());
  return hi > lo ? hi - lo : 1.0;
}

Field structural_replacement(const PanImage& pan, const Field& structural, const RestoreParams& params) {
  return params.global_match ? match_global(pan, structural) : match_local(pan, structural, params.match);
}

/// Everything after the weight graph: filter chromatic components with `op`,
/// substitute `structural`, transform back.
MultiBandImage assemble(const MultiBandImage& components, const PcaBasis& basis, const Field& structural,
                        const NonlocalOperator& op, const RestoreParams& params, double unit,
                        const RestoreObserver& observer) {
  MultiBandImage filtered = components;
  filtered.set_band(0, structural);
  for (std::size_t m = 1; m < components.bands(); ++m) {
    SolverParams solver = params.solver;
    solver.lambda = (params.component_lambdas.empty() ? params.solver.lambda : params.component_lambdas[m - 1]) * unit;
    const Field data = components.band_field(m);
    IterationObserver per_component;
    if (observer)
      per_component = [&](const IterationInfo& info) { observer(m, info, op, data, solver.lambda); };
    filtered.set_band(m, op.solve(data, solver, per_component).u);
  }
  return inverse_pca(filtered, basis);
}

}  // namespace

void RestoreParams::validate(std::size_t bands) const {
  weights.validate();
  solver.validate();
  match.validate();
  if (!component_lambdas.empty()) {
    if (component_lambdas.size() + 1 != bands)
      throw InvalidArgument("expected " + std::to_string(bands - 1) + " per-component lambdas, got " +
                            std::to_string(component_lambdas.size()));
    for (double l : component_lambdas)
      if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("per-component lambda must be >= 0");
  }
}

MultiBandImage restore(const MultiBandImage& fused, const PanImage& pan, const RestoreParams& params,
                       const RestoreObserver& observer) {
  check_restore_inputs(fused, pan);
  params.validate(fused.bands());

  const PcaBasis basis = fit_pca(fused);
  const MultiBandImage components = forward_pca(fused, basis);
  const Field structural = structural_replacement(pan, components.band_field(0), params);
  const NonlocalOperator op(compute_weights(pan, params.weights));
  return assemble(components, basis, structural, op, params, lambda_unit(fused, params), observer);
}

void SimulationSpec::validate(std::size_t bands) const {
  if (pan_coeffs.size() != bands)
    throw InvalidArgument("expected " + std::to_string(bands) + " PAN coefficients, got " +
                          std::to_string(pan_coeffs.size()));
  double sum = 0.0;
  for (double c : pan_coeffs) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("PAN coefficients must be nonnegative");
    sum += c;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("PAN coefficients must sum to 1");
  if (ref_factor < 1 || ms_factor < 1) throw InvalidArgument("resolution factors must be >= 1");
  if (!(ref_mtf > 0.0 && ref_mtf <= 1.0)) throw InvalidArgument("reference MTF must lie in (0, 1]");
  if (!(ms_cut > 0.0 && ms_cut <= 1.0)) throw InvalidArgument("MS cut value must lie in (0, 1]");
}

PanImage simulate_pan(const MultiBandImage& highres, const std::vector<double>& coeffs) {
  SimulationSpec check;
  check.pan_coeffs = coeffs;
  check.validate(highres.bands());
  PanImage pan(highres.width(), highres.height());
  auto out = pan.values();
  for (std::size_t m = 0; m < highres.bands(); ++m) {
    const auto band = highres.band(m);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += coeffs[m] * band[i];
  }
  return pan;
}

SimulatedData simulate_dataset(const MultiBandImage& highres, const SimulationSpec& spec) {
  spec.validate(highres.bands());
  const std::size_t coarse = spec.ref_factor * spec.ms_factor;
  if (highres.width() % coarse != 0 || highres.height() % coarse != 0)
    throw InvalidArgument("input size " + std::to_string(highres.width()) + "x" + std::to_string(highres.height()) +
                          " must be divisible by ref_factor*ms_factor = " + std::to_string(coarse));
  SimulatedData out;
  out.reference = mtf_downsample(highres, spec.ref_factor, spec.ref_mtf);
  out.pan = PanImage(mtf_downsample(simulate_pan(highres, spec.pan_coeffs), spec.ref_factor, spec.ref_mtf));
  out.ms = mtf_downsample(highres, coarse, spec.ms_cut, /*hard_cut=*/false);
  return out;
}

MultiBandImage baseline_pansharpen(const MultiBandImage& ms, const PanImage& pan, std::size_t factor) {
  if (factor < 1) throw InvalidArgument("factor must be >= 1");
  if (pan.width() != ms.width() * factor || pan.height() != ms.height() * factor)
    throw DimensionMismatch("PAN must be exactly factor times the MS size");
  const MultiBandImage up = upsample(ms, factor);
  const PcaBasis basis = fit_pca(up);
  MultiBandImage components = forward_pca(up, basis);
  components.set_band(0, match_global(pan, components.band_field(0)));
  return inverse_pca(components, basis);
}

TuneResult tune(const MultiBandImage& fused, const PanImage& pan, const MultiBandImage& reference,
                const std::vector<double>& h_sim_grid, const std::vector<double>& lambda_grid,
                const RestoreParams& base) {
  check_restore_inputs(fused, pan);
  base.validate(fused.bands());
  if (h_sim_grid.empty() || lambda_grid.empty()) throw InvalidArgument("tuning grids must be non-empty");
  if (!reference.same_shape(fused)) throw DimensionMismatch("reference and fused images differ in shape");

  const PcaBasis basis = fit_pca(fused);
  const MultiBandImage components = forward_pca(fused, basis);
  const Field structural = structural_replacement(pan, components.band_field(0), base);
  const double unit = lambda_unit(fused, base);

  TuneResult result;
  result.best = {0.0, 0.0, std::numeric_limits<double>::infinity()};
  for (double h_sim : h_sim_grid) {
    RestoreParams params = base;
    params.weights.h_sim = h_sim;
    params.weights.validate();
    const NonlocalOperator op(compute_weights(pan, params.weights));
    for (double lambda : lambda_grid) {
      params.solver.lambda = lambda;
      params.component_lambdas.clear();
      params.solver.validate();
      const MultiBandImage restored = assemble(components, basis, structural, op, params, unit, {});
      const TuneEntry entry{h_sim, lambda, rmse(reference, restored)};
      result.entries.push_back(entry);
      if (entry.rmse < result.best.rmse) result.best = entry;
    }
  }
  return result;
}

}  // namespace psr
