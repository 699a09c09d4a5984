#pragma once

// Monte Carlo estimation of E[exp(action)] over discretized Brownian paths.
//
// Paths on an N-step grid are built by dyadic Brownian-bridge refinement
// from n0 = (odd part of N) direct increments, so the path for N and for 2N
// share every node (common random numbers across a resolution ladder).
// Single-action integrands are sampled at the exact bridge midpoints, which
// are the extra nodes of the 2N path. Per-path values depend only on
// (seed, path index); reductions run in path-index order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fkbound/schedule.hpp"

namespace fkbound::mc {

using schedule::CouplingFunction;

class PathSampler {
 public:
  PathSampler(std::uint64_t seed, int d, double T, std::size_t N);

  std::size_t steps() const { return n_; }
  int dim() const { return d_; }
  double horizon() const { return T_; }
  std::uint64_t seed() const { return seed_; }

  /// Positions X(k·T/N), k = 0..N, row-major (node, coordinate), X(0) = 0.
  /// With `with_midpoints` the grid is refined to 2N steps (odd rows are
  /// the bridge midpoints of the N-step grid). `role` selects an
  /// independent Brownian motion (0 = X, 1 = Y, ...).
  void positions(std::uint64_t path, int role, bool with_midpoints, std::vector<double>& out) const;

 private:
  std::uint64_t seed_;
  int d_;
  double T_;
  std::size_t n_;
  std::size_t n0_;
  int levels_;
};

enum class TermKind { Single, SelfDouble, CrossDouble, Quadratic };

/// One additive piece of an action, scaled by `weight`:
///   Single       ∫ f(t) / |X_t + x|^θ dt
///   SelfDouble   ∫∫_{s<t} f(t-s) / |X_t - X_s|^θ
///   CrossDouble  ∫∫_{s<t} f(t-s) / |X_t - Y_s + x|^θ   (X = role_a, Y = role_b)
///   Quadratic    ∫ f(t) |X_t + x|² dt
/// with x = (offset, 0, ..., 0).
struct ActionTerm {
  TermKind kind = TermKind::Single;
  CouplingFunction f;
  double weight = 1.0;
  int role_a = 0;
  int role_b = 1;
  double offset = 0.0;
};

struct ActionSpec {
  std::vector<ActionTerm> terms;
  double theta = 1.0;
  int d = 3;
  double T = 1.0;
  /// Mollifier: |z|^θ is replaced by (|z|² + ε²)^{θ/2}.
  double epsilon = 0.0;

  void validate() const;
  int roles() const;
  bool has_double_terms() const;

  static ActionSpec single(const CouplingFunction& f, double theta, int d, double T, double offset = 0.0);
  static ActionSpec self_double(const CouplingFunction& f, double theta, int d, double T);
  static ActionSpec cross_double(const CouplingFunction& f, double theta, int d, double T, double offset = 0.0);
  /// weight·∫|X_t|² dt in dimension d (d = 1 allowed).
  static ActionSpec quadratic(double weight, int d, double T);
};

/// Action of path `path` (+∞ on an exact singularity with ε = 0).
double sample_action(const ActionSpec& spec, const PathSampler& sampler, std::uint64_t path);

unsigned default_threads();
void set_default_threads(unsigned n);

/// Per-path actions for paths 0..M-1, filled in parallel; `threads` = 0
/// uses default_threads().
std::vector<double> sample_actions(const ActionSpec& spec, std::size_t M, std::size_t N, std::uint64_t seed,
                                   unsigned threads = 0);

struct McEstimate {
  double log_mean = 0.0;
  double stderr_log = 0.0;
  double action_mean = 0.0;
  double action_stderr = 0.0;
  double action_variance = 0.0;
  double action_variance_stderr = 0.0;
  std::size_t M = 0;
  std::size_t N = 0;
  std::uint64_t seed = 0;
  std::size_t infinite_paths = 0;
  /// ε > 0: the mollified action underestimates the raw one.
  bool biased_low = false;
};

/// Statistics of a sample: max-shifted log-sum-exp for the mean of exp,
/// batch means over ⌊√M⌋ contiguous batches for every standard error.
/// Non-finite entries are counted and excluded.
McEstimate summarize(std::span<const double> actions);

/// Requires M >= 100 and N >= 16.
McEstimate estimate(const ActionSpec& spec, std::size_t M, std::size_t N, std::uint64_t seed, unsigned threads = 0);

/// Assumed order q of the discretization error, |bias| ~ C·(T/N)^q.
double discretization_order(const ActionSpec& spec);

struct Ladder {
  std::vector<McEstimate> rungs;  // in the order of the requested N values
  double order = 0.0;
  /// Richardson error estimate of the finest log_mean: |Δ|/(2^q - 1) with
  /// Δ the difference between the two finest rungs.
  double allowance = 0.0;
  double extrapolated_log_mean = 0.0;
  double extrapolated_action_mean = 0.0;
};

/// Estimates on a doubling ladder of N (ascending, each twice the last),
/// all with the same seed so the paths are nested.
Ladder ladder(const ActionSpec& spec, std::size_t M, const std::vector<std::size_t>& Ns, std::uint64_t seed,
              unsigned threads = 0);

struct MaximalityRow {
  double radius = 0.0;
  McEstimate at_origin;
  McEstimate at_radius;
  double combined_stderr = 0.0;
  bool pass = false;  // log_mean(0) >= log_mean(r) - 3·combined_stderr
};

/// Single action with start points at the origin and at each radius, all on
/// the same paths.
std::vector<MaximalityRow> maximality_check(const ActionSpec& single, const std::vector<double>& radii, std::size_t M,
                                            std::size_t N, std::uint64_t seed, unsigned threads = 0);

struct MartingaleReport {
  double lambda = 0.0;
  double T = 0.0;
  double cap = 0.0;
  McEstimate affine;         // λ·X_T¹
  double affine_exact = 0.0;  // λ²T/2, also the bound
  bool affine_pass = false;
  McEstimate truncated;       // λ·min(X_T¹, cap)
  double truncated_bound = 0.0;  // E[A] + λ²T/2
  double truncated_exact = 0.0;
  bool truncated_pass = false;   // strictly below λ²T/2 by 3 stderr, and below the bound
};

MartingaleReport martingale_lemma_check(double lambda, double T, int d, std::size_t M, std::size_t N,
                                        std::uint64_t seed, double cap = 0.0, unsigned threads = 0);

}  // namespace fkbound::mc
