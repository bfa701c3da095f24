#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "psr/nlweights.hpp"
#include "psr/raster.hpp"

namespace psr {

/// Per-pixel vectors over the (2ν+1)² window: the dual variable q and the
/// nonlocal gradient. Same offset-major layout as WeightGraph.
class DualField {
 public:
  DualField() = default;
  DualField(std::size_t width, std::size_t height, int nu_r);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixels() const noexcept { return width_ * height_; }
  int nu_r() const noexcept { return nu_r_; }
  std::size_t window_size() const noexcept { return window_; }

  double at(std::size_t i, std::size_t k) const noexcept { return values_[k * pixels() + i]; }
  double& at(std::size_t i, std::size_t k) noexcept { return values_[k * pixels() + i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Euclidean norm of q_i over the window dimension.
  double pixel_norm(std::size_t i) const noexcept;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  int nu_r_ = 0;
  std::size_t window_ = 0;
  std::vector<double> values_;
};

/// Storage and arithmetic precision of the dual iterate inside the solver.
/// automatic uses single precision once the dual field exceeds
/// kSinglePrecisionThreshold entries and double precision below.
enum class DualPrecision { automatic, double_precision, single_precision };

inline constexpr std::size_t kSinglePrecisionThreshold = std::size_t{1} << 24;

struct SolverParams {
  double lambda = 0.01;
  std::optional<double> tau;    // unset: 0.99 / L
  std::optional<double> sigma;  // unset: 0.99 / L
  double theta = 1.0;
  int max_iters = 300;
  double rel_tol = 1e-5;
  DualPrecision precision = DualPrecision::automatic;

  void validate() const;
};

struct IterationInfo {
  int iteration;  // 1-based
  double change;  // |u^{n+1} - u^n| / |u^n|
  const Field& u;
};

using IterationObserver = std::function<void(const IterationInfo&)>;

struct FilterResult {
  Field u;
  int iterations = 0;
  bool converged = false;
  double final_change = 0.0;
};

/// Weighted-difference operator u -> (sqrt(ω_ij) (u_j - u_i)) and its negative
/// adjoint. Holds sqrt(ω) so that several components can share one setup.
class NonlocalOperator {
 public:
  explicit NonlocalOperator(const WeightGraph& weights);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixels() const noexcept { return width_ * height_; }
  int nu_r() const noexcept { return nu_r_; }
  /// Upper bound on the operator norm.
  double norm_bound() const noexcept { return norm_bound_; }

  DualField gradient(const Field& u) const;
  Field divergence(const DualField& q) const;
  double energy(const Field& u, const Field& f, double lambda) const;
  FilterResult solve(const Field& f, const SolverParams& params, const IterationObserver& observer = {}) const;

 private:
  void check(const Field& u) const;
  template <class T>
  FilterResult solve_with(const Field& f, const SolverParams& params, const IterationObserver& observer) const;

  std::size_t width_;
  std::size_t height_;
  int nu_r_;
  std::vector<WindowOffset> offsets_;
  std::vector<double> root_weights_;  // offset-major planes
  double norm_bound_;
};

DualField nonlocal_gradient(const Field& u, const WeightGraph& weights);
/// div = -∇*, so that <∇u, q> = -<u, div q>.
Field nonlocal_divergence(const DualField& q, const WeightGraph& weights);
/// (u + τ f) / (1 + τ), evaluated as f + (u - f) / (1 + τ).
Field prox_data(const Field& u, const Field& f, double tau);
/// Projects every q_i onto the Euclidean ball of radius lambda.
DualField prox_dual(const DualField& q, double lambda);
/// λ Σ_i |∇_ω u_i| + ½ |u - f|².
double energy(const Field& u, const Field& f, const WeightGraph& weights, double lambda);
/// sqrt(2 (max row sum + max column sum)) of ω, an upper bound of |∇_ω|.
double estimate_operator_norm(const WeightGraph& weights);

/// Minimizes λ|∇_ω u|_1 + ½|u - f|² with the first-order primal-dual
/// iteration, starting from u = f, q = 0.
FilterResult filter_component(const Field& f, const WeightGraph& weights, const SolverParams& params,
                              const IterationObserver& observer = {});

}  // namespace psr
