#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "psr/histmatch.hpp"
#include "psr/nlweights.hpp"
#include "psr/pdsolver.hpp"
#include "psr/raster.hpp"

namespace psr {

struct RestoreParams {
  WeightParams weights;
  SolverParams solver;
  MatchParams match;
  /// Use whole-image moment matching for the structural component.
  bool global_match = false;
  /// Optional λ per chromatic component (index 0 is the 2nd PC); empty means
  /// solver.lambda for all of them.
  std::vector<double> component_lambdas;
  /// Express λ in units of the fused image's dynamic range (max - min over all
  /// samples). When false λ is used in raw sample units.
  bool normalize_lambda = true;

  void validate(std::size_t bands) const;
};

/// Per chromatic component progress; component is 1-based (1 = 2nd PC).
using RestoreObserver = std::function<void(std::size_t component, const IterationInfo&, const NonlocalOperator&,
                                           const Field& data, double lambda)>;

/// PCA of the fused image, nonlocal filtering of the chromatic components
/// guided by the PAN, local moment matching of the PAN onto the structural
/// component, inverse PCA. Never sees the MS image.
MultiBandImage restore(const MultiBandImage& fused, const PanImage& pan, const RestoreParams& params,
                       const RestoreObserver& observer = {});

/// Gaussian MTF low-pass in the Fourier domain followed by decimation.
/// The transfer is exp(-|ξ|²/(2s²)) with s such that it equals `cut_value` at
/// the target Nyquist |ξ| = π/factor. With `hard_cut`, frequencies beyond the
/// target Nyquist along either axis are zeroed before decimation.
MultiBandImage mtf_downsample(const MultiBandImage& image, std::size_t factor, double cut_value,
                              bool hard_cut = true);
Field mtf_downsample(const Field& field, std::size_t factor, double cut_value, bool hard_cut = true);

/// Fourier zero-padding interpolation; even-size Nyquist bins are split in half.
MultiBandImage upsample(const MultiBandImage& image, std::size_t factor);

struct SimulationSpec {
  std::vector<double> pan_coeffs{0.1, 0.4, 0.25, 0.25};  // B, G, R, NIR
  std::size_t ref_factor = 3;
  double ref_mtf = 0.15;
  std::size_t ms_factor = 4;
  double ms_cut = 0.35;

  void validate(std::size_t bands) const;
};

struct SimulatedData {
  MultiBandImage reference;
  PanImage pan;
  MultiBandImage ms;
};

PanImage simulate_pan(const MultiBandImage& highres, const std::vector<double>& coeffs);
/// reference and PAN are ref_factor coarser than `highres` (MTF ref_mtf, hard
/// cut); MS is ms_factor coarser again, Gaussian at ms_cut without hard cut so
/// that it keeps aliasing.
SimulatedData simulate_dataset(const MultiBandImage& highres, const SimulationSpec& spec);

/// PCA component substitution on the upsampled MS, used as the fusion input
/// for end-to-end checks.
MultiBandImage baseline_pansharpen(const MultiBandImage& ms, const PanImage& pan, std::size_t factor);

struct TuneEntry {
  double h_sim;
  double lambda;
  double rmse;
};

struct TuneResult {
  std::vector<TuneEntry> entries;  // grid order: h_sim outer, lambda inner
  TuneEntry best;
};

/// Exhaustive search over (h_sim, λ) minimizing RMSE against a reference.
TuneResult tune(const MultiBandImage& fused, const PanImage& pan, const MultiBandImage& reference,
                const std::vector<double>& h_sim_grid, const std::vector<double>& lambda_grid,
                const RestoreParams& base);

}  // namespace psr
