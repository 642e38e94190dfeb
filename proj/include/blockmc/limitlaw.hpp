#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "blockmc/errors.hpp"
#include "blockmc/model.hpp"

namespace blockmc {

using Complex = std::complex<double>;

/// Piecewise-constant symmetric function on [0,1]^2: block b spans
/// [boundaries[b], boundaries[b+1]) and block pair (b,c) carries values(b,c).
struct StepGraphon {
  std::vector<double> boundaries;  // increasing, 0 = first, 1 = last
  Eigen::MatrixXd values;          // B x B symmetric, nonnegative

  int blocks() const { return static_cast<int>(values.rows()); }
  double width(int b) const { return boundaries[b + 1] - boundaries[b]; }

  void validate() const {
    const int b = blocks();
    if (static_cast<int>(boundaries.size()) != b + 1)
      throw Error("graphon boundaries do not match block count");
    if (boundaries.front() != 0.0 || boundaries.back() != 1.0)
      throw Error("graphon boundaries must span [0,1]");
    for (int i = 0; i + 1 <= b; ++i)
      if (!(boundaries[i] < boundaries[i + 1]))
        throw Error("graphon boundaries must be strictly increasing");
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j) {
        if (!std::isfinite(values(i, j))) throw Error("graphon value not finite");
        if (values(i, j) != values(j, i)) throw Error("graphon not symmetric");
      }
  }
};

namespace detail {

/// Boundaries 0, a_1/2, ..., 1/2, 1/2 + a_1/2, ..., 1: row block i covers the
/// first half, its mirror K+i the second half, each with width alpha_i / 2.
inline std::vector<double> dilation_boundaries(const BlockModel& model) {
  const int k = model.K();
  std::vector<double> boundaries(2 * k + 1);
  boundaries[0] = 0.0;
  for (int i = 0; i < k; ++i)
    boundaries[i + 1] = boundaries[i] + model.alpha()(i) / 2.0;
  boundaries[k] = 0.5;
  for (int i = 0; i < k; ++i)
    boundaries[k + i + 1] = boundaries[k + i] + model.alpha()(i) / 2.0;
  boundaries[2 * k] = 1.0;
  return boundaries;
}

}  // namespace detail

/// Limiting variance profile of the dilated centered frequency matrix:
/// off-diagonal quadrants carry 2 lambda pi(i) p(i,j) / (alpha_i alpha_j),
/// diagonal quadrants are zero.
inline StepGraphon graphon_wm(const BlockModel& model) {
  const int k = model.K();
  StepGraphon g;
  g.boundaries = detail::dilation_boundaries(model);
  g.values = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double v = 2.0 * model.lambda() * model.pi()(i) * model.p()(i, j) /
                 (model.alpha()(i) * model.alpha()(j));
      g.values(i, k + j) = v;
      g.values(k + j, i) = v;
    }
  g.validate();
  return g;
}

/// Limiting variance profile of the dilated scaled transition matrix:
/// off-diagonal quadrants carry 2 alpha_i p(i,j) / (lambda pi(i) alpha_j).
inline StepGraphon graphon_wq(const BlockModel& model) {
  const int k = model.K();
  StepGraphon g;
  g.boundaries = detail::dilation_boundaries(model);
  g.values = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double v = 2.0 * model.alpha()(i) * model.p()(i, j) /
                 (model.lambda() * model.pi()(i) * model.alpha()(j));
      g.values(i, k + j) = v;
      g.values(k + j, i) = v;
    }
  g.validate();
  return g;
}

/// Solution of the self-consistent resolvent system at one spectral point.
struct ResolventSolution {
  Complex z;
  Eigen::VectorXcd a;  // block resolvent values, Im <= 0
  Complex s;           // aggregated Stieltjes value, Im < 0
  double residual = 0.0;
  long iterations = 0;
};

struct SolveOptions {
  double tol = 1e-12;
  long max_iter = 100000;
  double damping = 0.5;
};

/// Coefficient form of a self-consistent system a_b = 1 / (z - (C a)_b) with
/// aggregation s = weights . a. Both the direct model-parameter systems and the
/// step-graphon system reduce to this shape.
struct ResolventSystem {
  Eigen::MatrixXd coefficients;  // B x B, nonnegative
  Eigen::VectorXd weights;       // block widths, sum 1

  /// Damped fixed-point iteration from a_b = 1/z (optionally a warm start).
  /// Iterates stay in the Im(a) <= 0 half space; a violation halves the
  /// damping and restarts from 1/z.
  ResolventSolution solve(Complex z, const SolveOptions& opts = {},
                          const Eigen::VectorXcd* warm_start = nullptr) const {
    if (!(z.imag() > 0.0)) throw Error("spectral point must satisfy Im z > 0");
    if (!(opts.tol > 0.0) || opts.damping <= 0.0 || opts.damping > 1.0)
      throw Error("invalid solver options");
    const int b = static_cast<int>(coefficients.rows());
    double damping = opts.damping;
    Eigen::VectorXcd a = (warm_start && warm_start->size() == b)
                             ? *warm_start
                             : Eigen::VectorXcd::Constant(b, 1.0 / z);
    long total_iterations = 0;
    for (int restart = 0; restart < 8; ++restart) {
      for (long it = 0; it < opts.max_iter; ++it) {
        ++total_iterations;
        Eigen::VectorXcd field = coefficients * a;
        bool sign_ok = true;
        double residual = 0.0;
        Eigen::VectorXcd next(b);
        for (int i = 0; i < b; ++i) {
          Complex denom = z - field(i);
          residual = std::max(residual, std::abs(a(i) * denom - 1.0));
          next(i) = (1.0 - damping) * a(i) + damping / denom;
          if (next(i).imag() > 0.0) sign_ok = false;
        }
        if (!sign_ok) break;
        a = next;
        if (residual < opts.tol) {
          ResolventSolution out;
          out.z = z;
          out.a = a;
          // Eigen's dot conjugates its left operand; weights are real.
          out.s = weights.cast<Complex>().dot(a);
          out.residual = residual;
          out.iterations = total_iterations;
          if (!(out.s.imag() < 0.0))
            throw NumericalFailure("aggregated Stieltjes value lost its sign");
          return out;
        }
        if (it + 1 == opts.max_iter)
          throw NoConvergence(residual, total_iterations);
      }
      damping /= 2.0;
      a = Eigen::VectorXcd::Constant(b, 1.0 / z);
    }
    throw NoConvergence(1.0, total_iterations);
  }
};

/// System built from a step graphon: (C)_{bc} = width(c) W(b,c).
inline ResolventSystem resolvent_system(const StepGraphon& graphon) {
  graphon.validate();
  const int b = graphon.blocks();
  ResolventSystem sys;
  sys.coefficients.resize(b, b);
  sys.weights.resize(b);
  for (int c = 0; c < b; ++c) sys.weights(c) = graphon.width(c);
  for (int i = 0; i < b; ++i)
    for (int c = 0; c < b; ++c)
      sys.coefficients(i, c) = graphon.width(c) * graphon.values(i, c);
  return sys;
}

/// 2K-equation system for the frequency-matrix law, written directly from
/// the model parameters (coefficients lambda pi(i) p(i,j) / alpha_i on the
/// first K rows and the transposed pattern on the mirror rows).
inline ResolventSystem frequency_law_system(const BlockModel& model) {
  const int k = model.K();
  ResolventSystem sys;
  sys.coefficients = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  sys.weights.resize(2 * k);
  for (int i = 0; i < k; ++i) {
    sys.weights(i) = model.alpha()(i) / 2.0;
    sys.weights(k + i) = model.alpha()(i) / 2.0;
    for (int j = 0; j < k; ++j) {
      sys.coefficients(i, k + j) =
          model.lambda() * model.pi()(i) * model.p()(i, j) / model.alpha()(i);
      sys.coefficients(k + i, j) =
          model.lambda() * model.pi()(j) * model.p()(j, i) / model.alpha()(i);
    }
  }
  return sys;
}

/// 2K-equation system for the transition-matrix law: coefficients
/// alpha_i p(i,j) / (lambda pi(i)) and alpha_j^2 p(j,i) / (lambda pi(j) alpha_i).
inline ResolventSystem transition_law_system(const BlockModel& model) {
  const int k = model.K();
  ResolventSystem sys;
  sys.coefficients = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  sys.weights.resize(2 * k);
  for (int i = 0; i < k; ++i) {
    sys.weights(i) = model.alpha()(i) / 2.0;
    sys.weights(k + i) = model.alpha()(i) / 2.0;
    for (int j = 0; j < k; ++j) {
      sys.coefficients(i, k + j) = model.alpha()(i) * model.p()(i, j) /
                                   (model.lambda() * model.pi()(i));
      sys.coefficients(k + i, j) =
          model.alpha()(j) * model.alpha()(j) * model.p()(j, i) /
          (model.lambda() * model.pi()(j) * model.alpha()(i));
    }
  }
  return sys;
}

inline ResolventSolution solve_resolvent(const StepGraphon& graphon, Complex z,
                                         const SolveOptions& opts = {}) {
  return resolvent_system(graphon).solve(z, opts);
}

inline ResolventSolution solve_frequency_law(const BlockModel& model, Complex z,
                                         const SolveOptions& opts = {}) {
  return frequency_law_system(model).solve(z, opts);
}

inline ResolventSolution solve_transition_law(const BlockModel& model, Complex z,
                                         const SolveOptions& opts = {}) {
  return transition_law_system(model).solve(z, opts);
}

/// Density of the symmetrized law on a real grid, with companion CDF.
struct SpectralDensity {
  std::vector<double> grid;
  std::vector<double> density;
  std::vector<double> cdf;
  double epsilon = 0.0;    // finest offset used
  bool extrapolated = false;

  /// Trapezoidal CDF accumulated over the grid.
  void accumulate_cdf() {
    cdf.assign(grid.size(), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i)
      cdf[i] = cdf[i - 1] + 0.5 * (density[i] + density[i - 1]) *
                                (grid[i] - grid[i - 1]);
  }
};

struct PointDiagnostics {
  double x = 0.0;
  double residual = 0.0;
  long iterations = 0;
  bool failed = false;
};

struct InversionDiagnostics {
  std::vector<PointDiagnostics> points;
  std::vector<double> failed_points;
};

/// Offsets used for the eps -> 0 limit. With more than one level the density
/// is the least-squares linear-in-eps extrapolation to eps = 0; with one
/// level it is the raw value at that offset.
struct InversionScheme {
  std::vector<double> eps_levels{4e-3, 2e-3, 1e-3};

  static InversionScheme raw(double eps) { return InversionScheme{{eps}}; }
};

/// Density of the symmetrized law: -Im s(x + i eps) / pi per grid point,
/// extrapolated in eps, with negative roundoff clamped at -1e-8. Grid points
/// warm-start from their left neighbor. Failed points are recorded in the
/// diagnostics and raise NoConvergence after the sweep.
inline SpectralDensity invert_density(const ResolventSystem& system,
                                      const std::vector<double>& x_grid,
                                      const InversionScheme& scheme = {},
                                      const SolveOptions& opts = {},
                                      InversionDiagnostics* diagnostics = nullptr) {
  if (x_grid.size() < 2) throw Error("inversion grid needs at least 2 points");
  for (std::size_t i = 0; i + 1 < x_grid.size(); ++i)
    if (!(x_grid[i] < x_grid[i + 1]))
      throw Error("inversion grid must be increasing");
  if (scheme.eps_levels.empty()) throw Error("no epsilon levels");
  for (double eps : scheme.eps_levels)
    if (!(eps > 0.0)) throw Error("epsilon must be positive");

  const std::size_t npts = x_grid.size();
  const std::size_t neps = scheme.eps_levels.size();
  std::vector<std::vector<double>> raw(neps, std::vector<double>(npts, 0.0));
  InversionDiagnostics local;
  InversionDiagnostics& diag = diagnostics ? *diagnostics : local;
  diag.points.clear();
  diag.failed_points.clear();

  for (std::size_t e = 0; e < neps; ++e) {
    Eigen::VectorXcd warm;
    bool have_warm = false;
    for (std::size_t i = 0; i < npts; ++i) {
      Complex z(x_grid[i], scheme.eps_levels[e]);
      try {
        ResolventSolution sol =
            system.solve(z, opts, have_warm ? &warm : nullptr);
        raw[e][i] = -sol.s.imag() / M_PI;
        warm = sol.a;
        have_warm = true;
        diag.points.push_back({x_grid[i], sol.residual, sol.iterations, false});
      } catch (const NoConvergence&) {
        diag.points.push_back({x_grid[i], 0.0, opts.max_iter, true});
        diag.failed_points.push_back(x_grid[i]);
        have_warm = false;
      }
    }
  }
  if (!diag.failed_points.empty())
    throw NoConvergence(0.0, opts.max_iter);

  SpectralDensity out;
  out.grid = x_grid;
  out.epsilon = scheme.eps_levels.back();
  out.extrapolated = neps > 1;
  out.density.resize(npts);
  for (std::size_t i = 0; i < npts; ++i) {
    double value;
    if (neps == 1) {
      value = raw[0][i];
    } else {
      // Least-squares linear fit in eps; take the intercept at eps = 0.
      double se = 0.0, sd = 0.0, see = 0.0, sed = 0.0;
      for (std::size_t e = 0; e < neps; ++e) {
        se += scheme.eps_levels[e];
        sd += raw[e][i];
        see += scheme.eps_levels[e] * scheme.eps_levels[e];
        sed += scheme.eps_levels[e] * raw[e][i];
      }
      double denom = neps * see - se * se;
      value = (sd * see - se * sed) / denom;
    }
    if (value < -1e-8)
      throw NumericalFailure("density went negative beyond clamp");
    out.density[i] = std::max(value, 0.0);
  }
  out.accumulate_cdf();
  return out;
}

/// Fold of a symmetrized density onto x >= 0: the singular-value density is
/// twice the even density. The input grid must start at 0.
inline SpectralDensity folded_density(const SpectralDensity& sym) {
  if (sym.grid.empty() || sym.grid.front() != 0.0)
    throw Error("folding expects a grid starting at 0");
  SpectralDensity out;
  out.grid = sym.grid;
  out.epsilon = sym.epsilon;
  out.extrapolated = sym.extrapolated;
  out.density.resize(sym.density.size());
  for (std::size_t i = 0; i < sym.density.size(); ++i)
    out.density[i] = 2.0 * sym.density[i];
  out.accumulate_cdf();
  return out;
}

/// Smallest grid point beyond which the density stays below 1e-4 for 10
/// consecutive points; falls back to the grid end.
inline double detect_support_edge(const SpectralDensity& density) {
  const int run_needed = 10;
  int run = 0;
  for (std::size_t i = 0; i < density.grid.size(); ++i) {
    if (density.density[i] < 1e-4) {
      if (++run == run_needed) return density.grid[i + 1 - run_needed];
    } else {
      run = 0;
    }
  }
  return density.grid.back();
}

/// Piecewise-linear interpolant of a folded CDF on x >= 0, clamped to [0,1].
class LawCdf {
 public:
  explicit LawCdf(const SpectralDensity& folded)
      : grid_(folded.grid), cdf_(folded.cdf) {}

  double operator()(double x) const {
    if (x <= grid_.front()) return 0.0;
    if (x >= grid_.back()) return std::min(cdf_.back(), 1.0);
    auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - grid_.begin());
    double t = (x - grid_[hi - 1]) / (grid_[hi] - grid_[hi - 1]);
    double v = cdf_[hi - 1] + t * (cdf_[hi] - cdf_[hi - 1]);
    return std::clamp(v, 0.0, 1.0);
  }

 private:
  std::vector<double> grid_;
  std::vector<double> cdf_;
};

inline LawCdf law_cdf(const SpectralDensity& folded) { return LawCdf(folded); }

/// Uniform grid helper.
inline std::vector<double> linspace(double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) throw Error("invalid grid request");
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  return grid;
}

}  // namespace blockmc
