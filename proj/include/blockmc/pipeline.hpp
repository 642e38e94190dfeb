#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blockmc/errors.hpp"
#include "blockmc/matrices.hpp"
#include "blockmc/model.hpp"

namespace blockmc {

/// A bag of observed transitions over a dense 0-based state space. States
/// keep their original labels for joining against external files.
struct TransitionDataset {
  int n_states = 0;
  std::vector<std::pair<int, int>> transitions;
  std::vector<std::string> labels;  // dense index -> original label
  std::string provenance;

  std::int64_t ell() const {
    return static_cast<std::int64_t>(transitions.size());
  }
};

enum class TransitionFormat {
  CsvPairs,       // "from,to" per line, optional "from,to" header
  StateSequence,  // one state per line; consecutive lines form transitions
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

class DenseRelabeler {
 public:
  int id_of(const std::string& label, TransitionDataset& data) {
    auto it = index_.find(label);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(data.labels.size());
    index_.emplace(label, id);
    data.labels.push_back(label);
    return id;
  }

 private:
  std::unordered_map<std::string, int> index_;
};

}  // namespace detail

/// Reads transitions from disk and relabels states densely from 0 in order
/// of first appearance.
inline TransitionDataset read_transitions(const std::string& path,
                                          TransitionFormat format) {
  std::ifstream in(path);
  if (!in) throw EmptyInput("cannot open " + path);
  TransitionDataset data;
  data.provenance = path;
  detail::DenseRelabeler relabel;
  std::string line;
  long line_number = 0;
  if (format == TransitionFormat::CsvPairs) {
    bool first = true;
    while (std::getline(in, line)) {
      ++line_number;
      std::string text = detail::trim(line);
      if (text.empty()) continue;
      auto comma = text.find(',');
      if (comma == std::string::npos || text.find(',', comma + 1) != std::string::npos)
        throw ParseError(line_number, "expected exactly two comma-separated fields");
      std::string from = detail::trim(text.substr(0, comma));
      std::string to = detail::trim(text.substr(comma + 1));
      if (from.empty() || to.empty())
        throw ParseError(line_number, "empty state label");
      if (first) {
        first = false;
        std::string lowered = from + "," + to;
        std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (lowered == "from,to") continue;  // header row
      }
      data.transitions.emplace_back(relabel.id_of(from, data),
                                    relabel.id_of(to, data));
    }
  } else {
    int previous = -1;
    while (std::getline(in, line)) {
      ++line_number;
      std::string text = detail::trim(line);
      if (text.empty()) continue;
      int state = relabel.id_of(text, data);
      if (previous >= 0) data.transitions.emplace_back(previous, state);
      previous = state;
    }
  }
  data.n_states = static_cast<int>(data.labels.size());
  if (data.transitions.empty()) throw EmptyInput("no transitions in " + path);
  return data;
}

/// Removes states visited fewer than min_visits times (a visit is any
/// appearance as a transition endpoint) and optionally self-transitions,
/// iterating both removals to their joint fixed point so that applying the
/// whole preprocessing twice equals once. Relabels densely afterwards.
inline TransitionDataset preprocess(const TransitionDataset& data,
                                    std::int64_t min_visits,
                                    bool drop_self_loops) {
  std::vector<std::pair<int, int>> current = data.transitions;
  std::vector<char> alive(data.n_states, 1);
  if (drop_self_loops)
    std::erase_if(current,
                  [](const std::pair<int, int>& t) { return t.first == t.second; });
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::int64_t> visits(data.n_states, 0);
    for (const auto& [from, to] : current) {
      ++visits[from];
      ++visits[to];
    }
    for (int v = 0; v < data.n_states; ++v) {
      if (alive[v] && visits[v] < min_visits) {
        alive[v] = 0;
        changed = true;
      }
    }
    if (changed) {
      std::erase_if(current, [&](const std::pair<int, int>& t) {
        return !alive[t.first] || !alive[t.second];
      });
    }
  }

  TransitionDataset out;
  out.provenance = data.provenance;
  std::vector<int> remap(data.n_states, -1);
  for (const auto& [from, to] : current) {
    for (int endpoint : {from, to}) {
      if (remap[endpoint] < 0) {
        remap[endpoint] = static_cast<int>(out.labels.size());
        out.labels.push_back(data.labels.empty()
                                 ? std::to_string(endpoint + 1)
                                 : data.labels[endpoint]);
      }
    }
    out.transitions.emplace_back(remap[from], remap[to]);
  }
  out.n_states = static_cast<int>(out.labels.size());
  if (out.transitions.empty())
    throw EmptyInput("no transitions survive preprocessing");
  return out;
}

/// Block-model parameters estimated from counts under a given clustering.
struct EstimatedModel {
  double lambda_hat = 0.0;
  Eigen::VectorXd alpha_hat;
  Eigen::VectorXd pi_hat;
  Eigen::MatrixXd p_hat;
  std::vector<int> clustering;  // dense state -> cluster (0-based)

  BlockModel to_block_model() const {
    return BlockModel(p_hat, alpha_hat, lambda_hat);
  }
};

/// Plug-in estimators from the aggregated counts:
///   lambda = ell / n^2,            alpha_k = |cluster k| / n,
///   pi_k   = column-cluster mass / ell,
///   p(k1,k2) = block mass / row-cluster mass.
inline EstimatedModel estimate_parameters(const TransitionDataset& data,
                                          const std::vector<int>& clustering,
                                          int num_clusters) {
  if (static_cast<int>(clustering.size()) != data.n_states)
    throw Error("clustering size does not match state count");
  const int k = num_clusters;
  const int n = data.n_states;
  std::vector<std::int64_t> cluster_sizes(k, 0);
  for (int v = 0; v < n; ++v) {
    if (clustering[v] < 0 || clustering[v] >= k)
      throw Error("state " + std::to_string(v + 1) + " has no valid cluster");
    ++cluster_sizes[clustering[v]];
  }
  for (int c = 0; c < k; ++c)
    if (cluster_sizes[c] == 0) throw EmptyCluster(c);

  Eigen::MatrixXd block_mass = Eigen::MatrixXd::Zero(k, k);
  for (const auto& [from, to] : data.transitions)
    block_mass(clustering[from], clustering[to]) += 1.0;

  const double ell = static_cast<double>(data.ell());
  EstimatedModel est;
  est.clustering = clustering;
  est.lambda_hat = ell / (static_cast<double>(n) * n);
  est.alpha_hat.resize(k);
  for (int c = 0; c < k; ++c)
    est.alpha_hat(c) = static_cast<double>(cluster_sizes[c]) / n;
  est.pi_hat = block_mass.colwise().sum().transpose() / ell;
  est.p_hat.resize(k, k);
  for (int c = 0; c < k; ++c) {
    double row = block_mass.row(c).sum();
    if (row == 0.0) throw ZeroClusterRow(c);
    est.p_hat.row(c) = block_mass.row(c) / row;
  }
  return est;
}

/// Clustering file "state,cluster" resolved against the dataset's labels.
/// Clusters are 1-based in the file.
inline std::vector<int> read_clustering(const std::string& path,
                                        const TransitionDataset& data,
                                        int* num_clusters_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw EmptyInput("cannot open " + path);
  std::unordered_map<std::string, int> by_label;
  for (int v = 0; v < data.n_states; ++v) by_label[data.labels[v]] = v;
  std::vector<int> clustering(data.n_states, -1);
  int max_cluster = 0;
  std::string line;
  long line_number = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_number;
    std::string text = detail::trim(line);
    if (text.empty()) continue;
    auto comma = text.find(',');
    if (comma == std::string::npos)
      throw ParseError(line_number, "expected state,cluster");
    std::string label = detail::trim(text.substr(0, comma));
    std::string cluster_text = detail::trim(text.substr(comma + 1));
    if (first) {
      first = false;
      if (label == "state" && cluster_text == "cluster") continue;
    }
    int cluster = 0;
    try {
      cluster = std::stoi(cluster_text);
    } catch (const std::exception&) {
      throw ParseError(line_number, "cluster index is not an integer");
    }
    if (cluster < 1) throw ParseError(line_number, "cluster indices are 1-based");
    auto it = by_label.find(label);
    if (it == by_label.end()) continue;  // state absent from the data
    clustering[it->second] = cluster - 1;
    max_cluster = std::max(max_cluster, cluster);
  }
  for (int v = 0; v < data.n_states; ++v)
    if (clustering[v] < 0)
      throw Error("state " + data.labels[v] + " missing from clustering file");
  if (num_clusters_out) *num_clusters_out = max_cluster;
  return clustering;
}

/// Counts assembled directly from a transition bag; every estimator above
/// depends on the data only through these counts.
inline EdgeCounts counts_from_dataset(const TransitionDataset& data) {
  EdgeCounts counts;
  counts.n = data.n_states;
  for (const auto& [from, to] : data.transitions) counts.add(from, to);
  return counts;
}

}  // namespace blockmc
