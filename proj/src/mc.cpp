#include "fkbound/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <fmt/format.h>

#include "fkbound/errors.hpp"
#include "fkbound/numerics.hpp"
#include "fkbound/rng.hpp"

namespace fkbound::mc {

namespace {

using numerics::kInf;

std::atomic<unsigned> g_threads{0};

std::uint32_t stream_word(int level, int role, int pair) {
  return (static_cast<std::uint32_t>(level) << 24) | (static_cast<std::uint32_t>(role) << 16) |
         static_cast<std::uint32_t>(pair);
}

// Inverse powers (r² + ε²)^{-θ/2}, specialised for the common exponents.
struct InvCoulomb {
  double operator()(double r2) const { return 1.0 / std::sqrt(r2); }
};
struct InvThreeHalves {
  double operator()(double r2) const { return 1.0 / std::sqrt(r2 * std::sqrt(r2)); }
};
struct InvUnit {
  double operator()(double) const { return 1.0; }
};
struct InvGeneric {
  double half_theta;
  double operator()(double r2) const { return std::exp(-half_theta * std::log(r2)); }
};

template <int D>
inline double dist2(const double* a, const double* b, int d) {
  double s = 0.0;
  if constexpr (D > 0) {
    for (int k = 0; k < D; ++k) {
      const double z = a[k] - b[k];
      s += z * z;
    }
  } else {
    for (int k = 0; k < d; ++k) {
      const double z = a[k] - b[k];
      s += z * z;
    }
  }
  return s;
}

// Σ_{j<i} w[i-j] (|a_i - b_j - x|² + ε²)^{-θ/2} over N points, diagonal excluded.
template <int D, class Pow>
double double_sum(const double* a, const double* b, std::size_t n, int d, const std::vector<double>& w,
                  std::size_t kmax, double eps2, double offset, Pow pw) {
  double total = 0.0;
  std::vector<double> shifted;
  const double* bb = b;
  if (offset != 0.0) {
    shifted.assign(b, b + n * static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < n; ++j) shifted[j * d] -= offset;
    bb = shifted.data();
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double* ai = a + i * d;
    const std::size_t jlo = i > kmax ? i - kmax : 0;
    double row = 0.0;
    for (std::size_t j = jlo; j < i; ++j) {
      const double r2 = dist2<D>(ai, bb + j * d, d) + eps2;
      if (r2 == 0.0) return kInf;
      row += w[i - j] * pw(r2);
    }
    total += row;
  }
  return total;
}

template <class Pow>
double double_sum_dispatch(const double* a, const double* b, std::size_t n, int d, const std::vector<double>& w,
                           std::size_t kmax, double eps2, double offset, Pow pw) {
  switch (d) {
    case 1: return double_sum<1>(a, b, n, d, w, kmax, eps2, offset, pw);
    case 2: return double_sum<2>(a, b, n, d, w, kmax, eps2, offset, pw);
    case 3: return double_sum<3>(a, b, n, d, w, kmax, eps2, offset, pw);
    default: return double_sum<0>(a, b, n, d, w, kmax, eps2, offset, pw);
  }
}

template <class F>
auto with_power(double theta, F&& fn) {
  if (theta == 1.0) return fn(InvCoulomb{});
  if (theta == 1.5) return fn(InvThreeHalves{});
  if (theta == 0.0) return fn(InvUnit{});
  return fn(InvGeneric{theta / 2.0});
}

// Per-(spec, N) tables shared by all paths.
struct Prepared {
  const ActionSpec* spec = nullptr;
  std::size_t n = 0;
  double dt = 0.0;
  struct Term {
    const ActionTerm* term;
    std::vector<double> weights;  // midpoint values (single/quadratic) or lag values (double)
    std::size_t kmax = 0;
  };
  std::vector<Term> terms;
};

Prepared prepare(const ActionSpec& spec, std::size_t n) {
  Prepared p;
  p.spec = &spec;
  p.n = n;
  p.dt = spec.T / static_cast<double>(n);
  for (const auto& t : spec.terms) {
    Prepared::Term pt{&t, std::vector<double>(n, 0.0), 0};
    if (t.kind == TermKind::Single || t.kind == TermKind::Quadratic) {
      for (std::size_t i = 0; i < n; ++i) pt.weights[i] = t.f((static_cast<double>(i) + 0.5) * p.dt);
    } else {
      for (std::size_t k = 1; k < n; ++k) {
        pt.weights[k] = t.f(static_cast<double>(k) * p.dt);
        if (pt.weights[k] != 0.0) pt.kmax = k;
      }
    }
    p.terms.push_back(std::move(pt));
  }
  return p;
}

struct Workspace {
  std::vector<double> raw;
  std::vector<std::vector<double>> mids;  // per role, N midpoints × d
};

double evaluate(const Prepared& prep, const PathSampler& sampler, std::uint64_t path, Workspace& ws) {
  const ActionSpec& spec = *prep.spec;
  const int d = spec.d;
  const std::size_t n = prep.n;
  const int roles = spec.roles();
  ws.mids.resize(static_cast<std::size_t>(roles));
  for (int r = 0; r < roles; ++r) {
    sampler.positions(path, r, true, ws.raw);
    auto& m = ws.mids[static_cast<std::size_t>(r)];
    m.resize(n * static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(ws.raw.begin() + static_cast<std::ptrdiff_t>((2 * i + 1) * d), d,
                  m.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
  }

  const double eps2 = spec.epsilon * spec.epsilon;
  double action = 0.0;
  for (const auto& pt : prep.terms) {
    const ActionTerm& t = *pt.term;
    if (t.weight == 0.0) continue;
    const auto& xa = ws.mids[static_cast<std::size_t>(t.role_a)];
    double value = 0.0;
    switch (t.kind) {
      case TermKind::Single:
      case TermKind::Quadratic: {
        const bool quad = t.kind == TermKind::Quadratic;
        value = with_power(spec.theta, [&](auto pw) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double w = pt.weights[i];
            if (w == 0.0) continue;
            double r2 = 0.0;
            for (int k = 0; k < d; ++k) {
              const double z = xa[i * d + k] + (k == 0 ? t.offset : 0.0);
              r2 += z * z;
            }
            if (quad) {
              s += w * r2;
              continue;
            }
            r2 += eps2;
            if (r2 == 0.0) return kInf;
            s += w * pw(r2);
          }
          return s * prep.dt;
        });
        break;
      }
      case TermKind::SelfDouble:
      case TermKind::CrossDouble: {
        const bool cross = t.kind == TermKind::CrossDouble;
        const auto& xb = cross ? ws.mids[static_cast<std::size_t>(t.role_b)] : xa;
        value = with_power(spec.theta, [&](auto pw) {
          return double_sum_dispatch(xa.data(), xb.data(), n, d, pt.weights, pt.kmax, eps2,
                                     cross ? t.offset : 0.0, pw);
        }) * prep.dt * prep.dt;
        break;
      }
    }
    if (!std::isfinite(value)) return kInf;
    action += t.weight * value;
  }
  return action;
}

template <class Fn>
std::vector<double> parallel_fill(std::size_t M, unsigned threads, Fn&& fn) {
  std::vector<double> out(M, 0.0);
  unsigned workers = threads == 0 ? default_threads() : threads;
  workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, M)));
  if (workers == 1) {
    fn(std::size_t{0}, M, out);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = M * w / workers;
    const std::size_t hi = M * (w + 1) / workers;
    pool.emplace_back([&, w, lo, hi] {
      try {
        fn(lo, hi, out);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

PathSampler::PathSampler(std::uint64_t seed, int d, double T, std::size_t N) : seed_(seed), d_(d), T_(T), n_(N) {
  if (d < 1) throw DomainError("path dimension must be >= 1");
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("path horizon must be finite and > 0");
  if (N < 1) throw DomainError("step count must be >= 1");
  n0_ = N;
  levels_ = 0;
  while (n0_ % 2 == 0) {
    n0_ /= 2;
    ++levels_;
  }
}

void PathSampler::positions(std::uint64_t path, int role, bool with_midpoints, std::vector<double>& out) const {
  const int total_levels = levels_ + (with_midpoints ? 1 : 0);
  const std::size_t fine = n0_ << total_levels;
  const std::size_t d = static_cast<std::size_t>(d_);
  out.assign((fine + 1) * d, 0.0);
  const rng::Key key = rng::key_from_seed(seed_);
  const auto lo = static_cast<std::uint32_t>(path);
  const auto hi = static_cast<std::uint32_t>(path >> 32);
  const int pairs = (d_ + 1) / 2;

  auto fill_normals = [&](int level, std::size_t index, double scale, double* target) {
    for (int c = 0; c < pairs; ++c) {
      const rng::Block ctr{static_cast<std::uint32_t>(index), stream_word(level, role, c), lo, hi};
      const auto [z0, z1] = rng::normals(rng::philox4x32_10(ctr, key));
      target[2 * c] += scale * z0;
      if (2 * c + 1 < d_) target[2 * c + 1] += scale * z1;
    }
  };

  const std::size_t stride0 = std::size_t{1} << total_levels;
  const double sd0 = std::sqrt(T_ / static_cast<double>(n0_));
  for (std::size_t i = 0; i < n0_; ++i) {
    double* prev = out.data() + i * stride0 * d;
    double* next = out.data() + (i + 1) * stride0 * d;
    std::copy_n(prev, d, next);
    fill_normals(0, i, sd0, next);
  }
  for (int level = 1; level <= total_levels; ++level) {
    const std::size_t stride = std::size_t{1} << (total_levels - level);
    const std::size_t count = n0_ << (level - 1);
    const double parent = T_ / static_cast<double>(count);
    const double sd = std::sqrt(parent / 4.0);
    for (std::size_t k = 0; k < count; ++k) {
      const double* left = out.data() + (2 * k) * stride * d;
      const double* right = out.data() + (2 * k + 2) * stride * d;
      double* mid = out.data() + (2 * k + 1) * stride * d;
      for (std::size_t c = 0; c < d; ++c) mid[c] = 0.5 * (left[c] + right[c]);
      fill_normals(level, k, sd, mid);
    }
  }
}

void ActionSpec::validate() const {
  if (!(theta >= 0.0 && theta <= 2.0)) throw DomainError(fmt::format("theta must lie in [0, 2], got {}", theta));
  if (d < 1) throw DomainError("dimension must be >= 1");
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("T must be finite and > 0");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be finite and >= 0");
  for (const auto& t : terms) {
    if (!std::isfinite(t.weight)) throw DomainError("action term weight must be finite");
    if (t.role_a < 0 || t.role_a > 255 || t.role_b < 0 || t.role_b > 255) throw DomainError("path role out of range");
    if (t.kind == TermKind::CrossDouble && t.role_a == t.role_b)
      throw DomainError("cross action needs two different paths");
    if (const auto h = t.f.tabulated_horizon(); h && *h < T)
      throw DomainError(fmt::format("tabulated coupling ends at {} before T = {}", *h, T));
    if (!std::isfinite(t.offset)) throw DomainError("offset must be finite");
  }
}

int ActionSpec::roles() const {
  int r = 1;
  for (const auto& t : terms) {
    r = std::max(r, t.role_a + 1);
    if (t.kind == TermKind::CrossDouble) r = std::max(r, t.role_b + 1);
  }
  return r;
}

bool ActionSpec::has_double_terms() const {
  return std::any_of(terms.begin(), terms.end(), [](const ActionTerm& t) {
    return t.kind == TermKind::SelfDouble || t.kind == TermKind::CrossDouble;
  });
}

ActionSpec ActionSpec::single(const CouplingFunction& f, double theta, int d, double T, double offset) {
  ActionSpec s;
  s.terms.push_back({TermKind::Single, f, 1.0, 0, 1, offset});
  s.theta = theta;
  s.d = d;
  s.T = T;
  return s;
}

ActionSpec ActionSpec::self_double(const CouplingFunction& f, double theta, int d, double T) {
  ActionSpec s;
  s.terms.push_back({TermKind::SelfDouble, f, 1.0, 0, 1, 0.0});
  s.theta = theta;
  s.d = d;
  s.T = T;
  return s;
}

ActionSpec ActionSpec::cross_double(const CouplingFunction& f, double theta, int d, double T, double offset) {
  ActionSpec s;
  s.terms.push_back({TermKind::CrossDouble, f, 1.0, 0, 1, offset});
  s.theta = theta;
  s.d = d;
  s.T = T;
  return s;
}

ActionSpec ActionSpec::quadratic(double weight, int d, double T) {
  ActionSpec s;
  s.terms.push_back({TermKind::Quadratic, CouplingFunction::constant(1.0), weight, 0, 1, 0.0});
  s.theta = 0.0;
  s.d = d;
  s.T = T;
  return s;
}

double sample_action(const ActionSpec& spec, const PathSampler& sampler, std::uint64_t path) {
  spec.validate();
  if (sampler.dim() != spec.d || sampler.horizon() != spec.T)
    throw DomainError("path sampler and action disagree on (T, d)");
  const Prepared prep = prepare(spec, sampler.steps());
  Workspace ws;
  return evaluate(prep, sampler, path, ws);
}

unsigned default_threads() {
  const unsigned n = g_threads.load();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_threads(unsigned n) { g_threads.store(n); }

std::vector<double> sample_actions(const ActionSpec& spec, std::size_t M, std::size_t N, std::uint64_t seed,
                                   unsigned threads) {
  spec.validate();
  const PathSampler sampler(seed, spec.d, spec.T, N);
  const Prepared prep = prepare(spec, N);
  return parallel_fill(M, threads, [&](std::size_t lo, std::size_t hi, std::vector<double>& out) {
    Workspace ws;
    for (std::size_t m = lo; m < hi; ++m) out[m] = evaluate(prep, sampler, m, ws);
  });
}

McEstimate summarize(std::span<const double> actions) {
  McEstimate e;
  e.M = actions.size();
  std::vector<double> a;
  a.reserve(actions.size());
  for (double x : actions) {
    if (std::isfinite(x)) a.push_back(x);
  }
  e.infinite_paths = actions.size() - a.size();
  const std::size_t n = a.size();
  if (n == 0) {
    e.log_mean = kInf;
    e.action_mean = kInf;
    return e;
  }

  const double shift = *std::max_element(a.begin(), a.end());
  std::vector<double> y(n);
  std::transform(a.begin(), a.end(), y.begin(), [shift](double x) { return std::exp(x - shift); });
  const double mean_y = numerics::pairwise_sum(y) / static_cast<double>(n);
  e.log_mean = shift + std::log(mean_y);
  e.action_mean = numerics::pairwise_sum(a) / static_cast<double>(n);
  if (n > 1) {
    std::vector<double> dev(n);
    std::transform(a.begin(), a.end(), dev.begin(), [&](double x) { return (x - e.action_mean) * (x - e.action_mean); });
    e.action_variance = numerics::pairwise_sum(dev) / static_cast<double>(n - 1);
  }

  const std::size_t batches = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
  if (batches < 2) return e;
  std::vector<double> by(batches), ba(batches), bv(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = n * b / batches;
    const std::size_t hi = n * (b + 1) / batches;
    const std::span<const double> ys(y.data() + lo, hi - lo);
    const std::span<const double> as(a.data() + lo, hi - lo);
    const double cnt = static_cast<double>(hi - lo);
    by[b] = numerics::pairwise_sum(ys) / cnt;
    ba[b] = numerics::pairwise_sum(as) / cnt;
    double ss = 0.0;
    for (double x : as) ss += (x - ba[b]) * (x - ba[b]);
    bv[b] = hi - lo > 1 ? ss / (cnt - 1.0) : 0.0;
  }
  const auto se_of_mean = [batches](const std::vector<double>& v) {
    const double mean = numerics::pairwise_sum(v) / static_cast<double>(batches);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
  };
  e.stderr_log = se_of_mean(by) / mean_y;
  e.action_stderr = se_of_mean(ba);
  e.action_variance_stderr = se_of_mean(bv);
  return e;
}

McEstimate estimate(const ActionSpec& spec, std::size_t M, std::size_t N, std::uint64_t seed, unsigned threads) {
  if (M < 100) throw ValidationError(fmt::format("need at least 100 paths, got {}", M));
  if (N < 16) throw ValidationError(fmt::format("need at least 16 steps, got {}", N));
  const auto actions = sample_actions(spec, M, N, seed, threads);
  McEstimate e = summarize(actions);
  e.N = N;
  e.seed = seed;
  e.biased_low = spec.epsilon > 0.0;
  return e;
}

double discretization_order(const ActionSpec& spec) {
  const bool singular = spec.theta > 0.0 && std::any_of(spec.terms.begin(), spec.terms.end(), [](const ActionTerm& t) {
                          return t.kind != TermKind::Quadratic;
                        });
  return singular ? 1.0 - spec.theta / 2.0 : 1.0;
}

Ladder ladder(const ActionSpec& spec, std::size_t M, const std::vector<std::size_t>& Ns, std::uint64_t seed,
              unsigned threads) {
  if (Ns.size() < 2) throw ValidationError("a resolution ladder needs at least two step counts");
  for (std::size_t i = 1; i < Ns.size(); ++i) {
    if (Ns[i] != 2 * Ns[i - 1]) throw ValidationError("ladder step counts must double");
  }
  Ladder out;
  for (std::size_t n : Ns) out.rungs.push_back(estimate(spec, M, n, seed, threads));
  out.order = discretization_order(spec);
  const double denom = std::pow(2.0, out.order) - 1.0;
  const auto& fine = out.rungs.back();
  const auto& coarse = out.rungs[out.rungs.size() - 2];
  const double dl = fine.log_mean - coarse.log_mean;
  const double da = fine.action_mean - coarse.action_mean;
  out.allowance = std::abs(dl) / denom;
  out.extrapolated_log_mean = fine.log_mean + dl / denom;
  out.extrapolated_action_mean = fine.action_mean + da / denom;
  return out;
}

std::vector<MaximalityRow> maximality_check(const ActionSpec& single, const std::vector<double>& radii, std::size_t M,
                                            std::size_t N, std::uint64_t seed, unsigned threads) {
  for (const auto& t : single.terms) {
    if (t.kind != TermKind::Single) throw ValidationError("maximality check takes a single action");
  }
  if (!(single.theta > 0.0 && single.theta <= 2.0)) throw DomainError("maximality check needs theta in (0, 2]");
  ActionSpec origin = single;
  for (auto& t : origin.terms) t.offset = 0.0;
  const McEstimate at0 = estimate(origin, M, N, seed, threads);
  std::vector<MaximalityRow> rows;
  for (double r : radii) {
    if (!(r >= 0.0)) throw DomainError("radius must be >= 0");
    ActionSpec moved = single;
    for (auto& t : moved.terms) t.offset = r;
    MaximalityRow row;
    row.radius = r;
    row.at_origin = at0;
    row.at_radius = estimate(moved, M, N, seed, threads);
    row.combined_stderr = std::hypot(at0.stderr_log, row.at_radius.stderr_log);
    row.pass = at0.log_mean >= row.at_radius.log_mean - 3.0 * row.combined_stderr;
    rows.push_back(row);
  }
  return rows;
}

MartingaleReport martingale_lemma_check(double lambda, double T, int d, std::size_t M, std::size_t N,
                                        std::uint64_t seed, double cap, unsigned threads) {
  if (M < 100 || N < 1) throw ValidationError("martingale check needs M >= 100 and N >= 1");
  if (!std::isfinite(lambda) || !std::isfinite(cap)) throw DomainError("lambda and cap must be finite");
  const PathSampler sampler(seed, d, T, N);
  const std::size_t last = N * static_cast<std::size_t>(d);
  std::vector<double> affine(M), truncated(M);
  const auto endpoints = parallel_fill(M, threads, [&](std::size_t lo, std::size_t hi, std::vector<double>& out) {
    std::vector<double> buf;
    for (std::size_t m = lo; m < hi; ++m) {
      sampler.positions(m, 0, false, buf);
      out[m] = buf[last];
    }
  });
  for (std::size_t m = 0; m < M; ++m) {
    affine[m] = lambda * endpoints[m];
    truncated[m] = lambda * std::min(endpoints[m], cap);
  }

  MartingaleReport r;
  r.lambda = lambda;
  r.T = T;
  r.cap = cap;
  r.affine = summarize(affine);
  r.truncated = summarize(truncated);
  for (auto* e : {&r.affine, &r.truncated}) {
    e->N = N;
    e->seed = seed;
  }
  r.affine_exact = lambda * lambda * T / 2.0;
  r.affine_pass = std::abs(r.affine.log_mean - r.affine_exact) <= 3.0 * r.affine.stderr_log;

  const double sigma = std::sqrt(T);
  const double z = cap / sigma;
  const double mean_min = cap - cap * normal_cdf(z) - sigma * std::exp(-0.5 * z * z) / std::sqrt(2.0 * numerics::kPi);
  r.truncated_bound = lambda * mean_min + r.affine_exact;
  r.truncated_exact = std::log(std::exp(r.affine_exact) * normal_cdf((cap - lambda * T) / sigma) +
                               std::exp(lambda * cap) * (1.0 - normal_cdf(z)));
  const double se = r.truncated.stderr_log;
  r.truncated_pass = r.truncated.log_mean < r.affine_exact - 3.0 * se && r.truncated.log_mean <= r.truncated_bound + 3.0 * se;
  return r;
}

}  // namespace fkbound::mc
