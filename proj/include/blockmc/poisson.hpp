#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "blockmc/errors.hpp"
#include "blockmc/model.hpp"
#include "blockmc/sampler.hpp"

namespace blockmc {

/// Poisson probability mass, computed in log space.
inline double poisson_pmf(double rate, std::int64_t k) {
  if (rate < 0.0 || k < 0) throw Error("invalid Poisson pmf arguments");
  if (rate == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(k) * std::log(rate) - rate -
                  std::lgamma(static_cast<double>(k) + 1.0));
}

/// Total variation distance between a normalized frequency table over
/// nonnegative integers and Poisson(rate). The Poisson tail beyond the
/// largest tabulated value counts fully as mismatch.
inline double tv_distance_freq(const std::map<std::int64_t, double>& freq,
                               double rate) {
  if (freq.empty()) throw Error("empty frequency table");
  std::int64_t kmax = freq.rbegin()->first;
  double sum = 0.0;
  double pmf_mass = 0.0;
  for (std::int64_t k = 0; k <= kmax; ++k) {
    double p = poisson_pmf(rate, k);
    pmf_mass += p;
    auto it = freq.find(k);
    double f = it == freq.end() ? 0.0 : it->second;
    sum += std::abs(f - p);
  }
  sum += std::max(0.0, 1.0 - pmf_mass);
  return 0.5 * sum;
}

inline double tv_distance(const std::map<std::int64_t, std::int64_t>& histogram,
                          double rate) {
  if (histogram.empty()) throw Error("empty histogram");
  std::int64_t total = 0;
  for (const auto& [value, count] : histogram) total += count;
  std::map<std::int64_t, double> freq;
  for (const auto& [value, count] : histogram)
    freq[value] = static_cast<double>(count) / static_cast<double>(total);
  return tv_distance_freq(freq, rate);
}

/// Worst-case relative deviation of the r-step transition probabilities from
/// equilibrium: max over (x,y) of |p^r(x,y) - pi(y)| / pi(y).
inline double relative_pointwise_distance(const Eigen::MatrixXd& p,
                                          const Eigen::VectorXd& pi, int r) {
  if (r < 1) throw Error("step count must be at least 1");
  Eigen::MatrixXd power = p;
  for (int step = 1; step < r; ++step) power *= p;
  double worst = 0.0;
  for (int x = 0; x < p.rows(); ++x)
    for (int y = 0; y < p.cols(); ++y)
      worst = std::max(worst, std::abs(power(x, y) - pi(y)) / pi(y));
  return worst;
}

/// Nonasymptotic certificate for the Poisson approximation of one edge count.
struct PoissonCertificate {
  double epsilon = 0.0;
  int r0 = 0;
  double bound = 0.0;
  bool self_loop = false;
  // Reported decomposition of the bound.
  double term_local = 0.0;      // (4 r0 - 1) piece
  double term_self_loop = 0.0;  // extra 2 / size^3 piece (self-loops only)
  double term_mixing = 0.0;     // 12 epsilon piece
};

/// Certificate for the edge-count law between cluster k1 and cluster k2:
/// r0 is the smallest r with the cluster chain's relative pointwise distance
/// below epsilon from r on, and the bound is
///   ell pi(k1) p(k1,k2) ((4 r0 - 1) / (s1^2 s2^2) + 12 eps / (s1 s2))
/// plus 2 / s1^3 inside the parentheses for self-loops.
inline PoissonCertificate poisson_certificate(const BlockModel& model,
                                              const ClusterLayout& layout,
                                              std::int64_t ell, int k1, int k2,
                                              bool self_loop, double epsilon,
                                              int r_cap = 10000) {
  if (!(epsilon > 0.0) || epsilon > 0.5)
    throw Error("epsilon must lie in (0, 1/2]");
  if (!(model.p()(k1, k2) > 0.0))
    throw Error("certificate requires a positive cluster transition");
  if (self_loop && k1 != k2)
    throw Error("self-loop certificate needs both endpoints in one cluster");

  // Scan the relative pointwise distance; the candidate resets whenever the
  // distance pops back above epsilon. Stop once it is far below epsilon.
  int r0 = 0;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(model.K(), model.K());
  for (int r = 1; r <= r_cap; ++r) {
    power *= model.p();
    double delta = 0.0;
    for (int x = 0; x < model.K(); ++x)
      for (int y = 0; y < model.K(); ++y)
        delta = std::max(delta,
                         std::abs(power(x, y) - model.pi()(y)) / model.pi()(y));
    if (delta <= epsilon) {
      if (r0 == 0) r0 = r;
      if (delta <= epsilon * 1e-6) break;
    } else {
      r0 = 0;
    }
  }
  if (r0 == 0)
    throw CapExceeded("relative pointwise distance did not reach epsilon by r = " +
                      std::to_string(r_cap));

  const double s1 = layout.size(k1);
  const double s2 = layout.size(k2);
  const double prefactor =
      static_cast<double>(ell) * model.pi()(k1) * model.p()(k1, k2);
  PoissonCertificate cert;
  cert.epsilon = epsilon;
  cert.r0 = r0;
  cert.self_loop = self_loop;
  cert.term_local = prefactor * (4.0 * r0 - 1.0) / (s1 * s1 * s2 * s2);
  cert.term_mixing = prefactor * 12.0 * epsilon / (s1 * s2);
  cert.term_self_loop = self_loop ? prefactor * 2.0 / (s1 * s1 * s1) : 0.0;
  cert.bound = cert.term_local + cert.term_self_loop + cert.term_mixing;
  return cert;
}

/// Empirical comparison of one edge count against its limiting Poisson law.
struct TVReport {
  int k1 = 0;
  int k2 = 0;
  double rate = 0.0;
  std::map<std::int64_t, std::int64_t> histogram;
  double tv = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  int replicas = 0;
};

/// Replicated equilibrium-start simulation of one edge, reporting the total
/// variation distance to Poisson(edge rate) plus the first two sample
/// moments (the limit has variance equal to the rate).
inline TVReport poisson_check(const BlockModel& model,
                              const ClusterLayout& layout, std::int64_t ell,
                              int from, int to, int replicas,
                              std::uint64_t seed) {
  int k1 = layout.cluster_of(from);
  int k2 = layout.cluster_of(to);
  if (!(model.p()(k1, k2) > 0.0))
    throw Error("edge lies in a zero-probability cluster pair");
  TVReport report;
  report.k1 = k1;
  report.k2 = k2;
  report.replicas = replicas;
  report.rate = edge_rate(model, k1, k2);
  report.histogram =
      replicate_edge_count(model, layout, ell, from, to, replicas, seed);
  report.tv = tv_distance(report.histogram, report.rate);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& [value, count] : report.histogram) {
    sum += static_cast<double>(value) * count;
    sum_sq += static_cast<double>(value) * value * count;
  }
  report.mean = sum / replicas;
  report.variance =
      sum_sq / replicas - report.mean * report.mean;
  return report;
}

}  // namespace blockmc
