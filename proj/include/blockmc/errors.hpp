#pragma once

#include <stdexcept>
#include <string>

namespace blockmc {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A model definition violates an invariant (non-stochastic rows, reducible
/// or periodic chain, bad cluster fractions, n < K, ...).
class RejectedModel : public Error {
 public:
  explicit RejectedModel(const std::string& what) : Error(what) {}
};

/// Row-normalization hit a state that was never departed.
class ZeroRow : public Error {
 public:
  explicit ZeroRow(int row)
      : Error("row " + std::to_string(row + 1) + " has zero total count"),
        row_(row) {}
  int row() const { return row_; }

 private:
  int row_;
};

/// A fixed-point solve did not reach the residual tolerance.
class NoConvergence : public Error {
 public:
  NoConvergence(double residual, long iterations)
      : Error("fixed-point iteration stalled at residual " +
              std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations"),
        residual_(residual),
        iterations_(iterations) {}
  double residual() const { return residual_; }
  long iterations() const { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

/// An eigensolver or factorization failed.
class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& what) : Error(what) {}
};

/// A combinatorial computation exceeds its configured budget.
class ResourceLimit : public Error {
 public:
  explicit ResourceLimit(const std::string& what) : Error(what) {}
};

/// The mixing-radius search exhausted its cap.
class CapExceeded : public Error {
 public:
  explicit CapExceeded(const std::string& what) : Error(what) {}
};

/// A data file line failed to parse.
class ParseError : public Error {
 public:
  ParseError(long line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// No usable data after ingestion or preprocessing.
class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& what) : Error(what) {}
};

/// A clustering left some cluster without states.
class EmptyCluster : public Error {
 public:
  explicit EmptyCluster(int cluster)
      : Error("cluster " + std::to_string(cluster + 1) + " has no states"),
        cluster_(cluster) {}
  int cluster() const { return cluster_; }

 private:
  int cluster_;
};

/// A clustering left some cluster with no outgoing transitions.
class ZeroClusterRow : public Error {
 public:
  explicit ZeroClusterRow(int cluster)
      : Error("cluster " + std::to_string(cluster + 1) +
              " has no outgoing transitions"),
        cluster_(cluster) {}
  int cluster() const { return cluster_; }

 private:
  int cluster_;
};

}  // namespace blockmc
