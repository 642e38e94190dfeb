#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockmc/errors.hpp"
#include "blockmc/limitlaw.hpp"
#include "blockmc/matrices.hpp"
#include "blockmc/model.hpp"
#include "blockmc/spectra.hpp"

namespace blockmc {

/// Floating-point text with 17 significant digits (round-trip exact).
inline std::string format_value(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

/// Model file: JSON object with keys "K", "p" (row-major), "alpha", "lambda".
inline BlockModel read_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw RejectedModel("model file " + path + " is not valid JSON: " + e.what());
  }
  for (const char* key : {"K", "p", "alpha", "lambda"})
    if (!j.contains(key))
      throw RejectedModel("model file missing key \"" + std::string(key) + "\"");
  int k = j["K"].get<int>();
  if (k < 1) throw RejectedModel("K must be a positive integer");
  Eigen::MatrixXd p(k, k);
  const auto& jp = j["p"];
  if (jp.is_array() && jp.size() == static_cast<std::size_t>(k) &&
      jp.front().is_array()) {
    for (int i = 0; i < k; ++i) {
      if (jp[i].size() != static_cast<std::size_t>(k))
        throw RejectedModel("p rows must have K entries");
      for (int c = 0; c < k; ++c) p(i, c) = jp[i][c].get<double>();
    }
  } else if (jp.is_array() && jp.size() == static_cast<std::size_t>(k) * k) {
    for (int i = 0; i < k; ++i)
      for (int c = 0; c < k; ++c) p(i, c) = jp[i * k + c].get<double>();
  } else {
    throw RejectedModel("p must be a row-major list of K*K entries");
  }
  if (j["alpha"].size() != static_cast<std::size_t>(k))
    throw RejectedModel("alpha must have K entries");
  Eigen::VectorXd alpha(k);
  for (int i = 0; i < k; ++i) alpha(i) = j["alpha"][i].get<double>();
  return BlockModel(p, alpha, j["lambda"].get<double>());
}

inline nlohmann::json model_to_json(const BlockModel& model) {
  nlohmann::json j;
  j["K"] = model.K();
  std::vector<double> p;
  for (int i = 0; i < model.K(); ++i)
    for (int c = 0; c < model.K(); ++c) p.push_back(model.p()(i, c));
  j["p"] = p;
  std::vector<double> alpha(model.alpha().data(),
                            model.alpha().data() + model.K());
  j["alpha"] = alpha;
  j["lambda"] = model.lambda();
  std::vector<double> pi(model.pi().data(), model.pi().data() + model.K());
  j["pi"] = pi;
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

/// Sparse triplet export "i,j,value" with 1-based indices.
inline void write_counts_csv(const std::string& path, const EdgeCounts& counts) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "i,j,value\n";
  std::map<std::uint64_t, std::int64_t> ordered(counts.entries.begin(),
                                                counts.entries.end());
  for (const auto& [key, count] : ordered)
    out << (key / counts.n + 1) << ',' << (key % counts.n + 1) << ',' << count
        << '\n';
}

inline EdgeCounts read_counts_csv(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw EmptyInput("cannot open " + path);
  EdgeCounts counts;
  counts.n = n;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "i,j,value") continue;
    long i = 0, j = 0;
    long long value = 0;
    if (std::sscanf(line.c_str(), "%ld,%ld,%lld", &i, &j, &value) != 3)
      throw ParseError(line_number, "expected i,j,value");
    if (i < 1 || i > n || j < 1 || j > n)
      throw ParseError(line_number, "state index out of range");
    counts.add(static_cast<int>(i - 1), static_cast<int>(j - 1), value);
  }
  if (counts.entries.empty()) throw EmptyInput("no counts in " + path);
  return counts;
}

/// Dense export, row-major, one row per line.
inline void write_dense_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j)
      out << (j ? "," : "") << format_value(m(i, j));
    out << '\n';
  }
}

/// Block-constant export: one row per block pair with the layout alongside.
inline void write_block_matrix_csv(const std::string& path,
                                   const BlockConstantMatrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "k1,k2,size_k1,size_k2,value\n";
  const int k = static_cast<int>(m.values.rows());
  for (int k1 = 0; k1 < k; ++k1)
    for (int k2 = 0; k2 < k; ++k2)
      out << k1 + 1 << ',' << k2 + 1 << ',' << m.layout->size(k1) << ','
          << m.layout->size(k2) << ',' << format_value(m.values(k1, k2)) << '\n';
}

/// Spectrum export: one value per line, descending.
inline void write_spectrum_csv(const std::string& path,
                               const SingularSpectrum& spectrum) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (double v : spectrum.values) out << format_value(v) << '\n';
}

inline std::vector<double> read_values_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EmptyInput("cannot open " + path);
  std::vector<double> values;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw ParseError(line_number, "expected one number per line");
    }
  }
  if (values.empty()) throw EmptyInput("no values in " + path);
  return values;
}

/// Density export "x,density,cdf".
inline void write_density_csv(const std::string& path,
                              const SpectralDensity& density) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "x,density,cdf\n";
  for (std::size_t i = 0; i < density.grid.size(); ++i)
    out << format_value(density.grid[i]) << ',' << format_value(density.density[i])
        << ',' << format_value(density.cdf[i]) << '\n';
}

inline SpectralDensity read_density_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EmptyInput("cannot open " + path);
  SpectralDensity density;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "x,density,cdf") continue;
    double x = 0.0, d = 0.0, c = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &d, &c) != 3)
      throw ParseError(line_number, "expected x,density,cdf");
    density.grid.push_back(x);
    density.density.push_back(d);
    density.cdf.push_back(c);
  }
  if (density.grid.empty()) throw EmptyInput("no density rows in " + path);
  return density;
}

/// Histogram export "value,count".
inline void write_histogram_csv(
    const std::string& path, const std::map<std::int64_t, std::int64_t>& hist) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "value,count\n";
  for (const auto& [value, count] : hist) out << value << ',' << count << '\n';
}

/// Bin-mass export "lo,hi,mass".
inline void write_bins_csv(const std::string& path,
                           const std::vector<HistogramBin>& bins) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "lo,hi,mass\n";
  for (const auto& bin : bins)
    out << format_value(bin.lo) << ',' << format_value(bin.hi) << ','
        << format_value(bin.mass) << '\n';
}

/// Path dump: one state per line, 1-based, loadable as a state sequence.
inline void write_sequence_csv(const std::string& path,
                               const std::vector<int>& states) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (int s : states) out << s + 1 << '\n';
}

}  // namespace blockmc
