#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "blockmc/errors.hpp"
#include "blockmc/matrices.hpp"

namespace blockmc {

/// Full singular spectrum of a square matrix, sorted descending.
struct SingularSpectrum {
  std::vector<double> values;  // descending, clamped at >= 0
  int source_dim = 0;
  std::string scale_note;
};

/// Uniformly weighted sample distribution, sorted ascending.
struct EmpiricalDistribution {
  std::vector<double> points;

  std::size_t size() const { return points.size(); }
};

enum class SvdRoute {
  Dilation,   // symmetric eigensolve of [[0,M],[M^T,0]], nonnegative half
  DirectSvd,  // cross-check route
};

/// All n singular values of a dense square matrix. The default route is one
/// symmetric eigensolve of the Hermitian dilation; the direct SVD route is
/// kept as an independent cross-check. Eigenvalues in [-1e-10, 0) are
/// clamped to zero.
inline SingularSpectrum singular_values(const Eigen::MatrixXd& m,
                                        SvdRoute route = SvdRoute::Dilation) {
  const int n = static_cast<int>(m.rows());
  SingularSpectrum spectrum;
  spectrum.source_dim = n;
  spectrum.values.reserve(n);
  if (route == SvdRoute::Dilation) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        hermitian_dilation(m), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
      throw NumericalFailure("symmetric eigensolver did not converge");
    const auto& ev = solver.eigenvalues();  // ascending, length 2n
    for (int i = 2 * n - 1; i >= n; --i) spectrum.values.push_back(ev(i));
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    if (svd.info() != Eigen::Success)
      throw NumericalFailure("SVD did not converge");
    for (int i = 0; i < n; ++i) spectrum.values.push_back(svd.singularValues()(i));
  }
  for (double& s : spectrum.values) {
    if (s < 0.0 && s > -1e-10) s = 0.0;
    if (s < 0.0) throw NumericalFailure("negative singular value beyond clamp");
  }
  return spectrum;
}

/// Empirical distribution of the singular values divided by `scale`.
inline EmpiricalDistribution esd_scaled(const SingularSpectrum& spectrum,
                                        double scale) {
  if (!(scale > 0.0)) throw Error("scale must be positive");
  EmpiricalDistribution dist;
  dist.points.reserve(spectrum.values.size());
  for (auto it = spectrum.values.rbegin(); it != spectrum.values.rend(); ++it)
    dist.points.push_back(*it / scale);
  std::sort(dist.points.begin(), dist.points.end());
  return dist;
}

inline EmpiricalDistribution esd_scaled(const Eigen::MatrixXd& m,
                                        double scale) {
  return esd_scaled(singular_values(m), scale);
}

/// Distribution with the k largest sample points removed (weights stay
/// uniform over the survivors).
inline EmpiricalDistribution trim_top(const EmpiricalDistribution& dist,
                                      int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= dist.points.size())
    throw Error("trim count must be in [0, sample count)");
  EmpiricalDistribution out;
  out.points.assign(dist.points.begin(), dist.points.end() - k);
  return out;
}

/// Kolmogorov-Smirnov distance between the sample and a reference CDF. Both
/// one-sided limits are compared at every sample point; the reference's left
/// limit is probed one ulp below the point so that a jump shared by both
/// staircases does not register as distance.
inline double ks_distance(const EmpiricalDistribution& dist,
                          const std::function<double(double)>& cdf) {
  const double n = static_cast<double>(dist.points.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < dist.points.size();) {
    double x = dist.points[i];
    std::size_t run_end = i;
    while (run_end + 1 < dist.points.size() && dist.points[run_end + 1] == x)
      ++run_end;
    double left = cdf(std::nextafter(x, -std::numeric_limits<double>::infinity()));
    sup = std::max(sup, std::abs(static_cast<double>(run_end + 1) / n - cdf(x)));
    sup = std::max(sup, std::abs(static_cast<double>(i) / n - left));
    i = run_end + 1;
  }
  return sup;
}

/// Two-sample Kolmogorov-Smirnov distance (sup over the merged jump points).
inline double ks_two_sample(const EmpiricalDistribution& a,
                            const EmpiricalDistribution& b) {
  if (a.points.empty() || b.points.empty())
    throw Error("two-sample KS needs nonempty samples");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double sup = 0.0;
  while (i < a.size() || j < b.size()) {
    double x = (j >= b.size() || (i < a.size() && a.points[i] <= b.points[j]))
                   ? a.points[i]
                   : b.points[j];
    while (i < a.size() && a.points[i] <= x) ++i;
    while (j < b.size() && b.points[j] <= x) ++j;
    sup = std::max(sup, std::abs(i / na - j / nb));
  }
  return sup;
}

/// Bin masses over [edges[b], edges[b+1]); the final bin is closed on the
/// right. Masses sum to the fraction of the sample inside the covered range.
struct HistogramBin {
  double lo;
  double hi;
  double mass;
};

inline std::vector<HistogramBin> histogram(const EmpiricalDistribution& dist,
                                           const std::vector<double>& edges) {
  if (edges.size() < 2) throw Error("histogram needs at least two edges");
  for (std::size_t b = 0; b + 1 < edges.size(); ++b)
    if (!(edges[b] < edges[b + 1]))
      throw Error("histogram edges must be strictly increasing");
  std::vector<HistogramBin> bins;
  bins.reserve(edges.size() - 1);
  const double n = static_cast<double>(dist.points.size());
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    auto lo = std::lower_bound(dist.points.begin(), dist.points.end(), edges[b]);
    auto hi = (b + 2 == edges.size())
                  ? std::upper_bound(dist.points.begin(), dist.points.end(),
                                     edges[b + 1])
                  : std::lower_bound(dist.points.begin(), dist.points.end(),
                                     edges[b + 1]);
    bins.push_back({edges[b], edges[b + 1],
                    n == 0.0 ? 0.0 : static_cast<double>(hi - lo) / n});
  }
  return bins;
}

}  // namespace blockmc
