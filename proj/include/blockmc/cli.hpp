#pragma once

#include <CLI11.hpp>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockmc/errors.hpp"
#include "blockmc/io.hpp"
#include "blockmc/limitlaw.hpp"
#include "blockmc/model.hpp"
#include "blockmc/moments.hpp"
#include "blockmc/pipeline.hpp"
#include "blockmc/poisson.hpp"
#include "blockmc/sampler.hpp"
#include "blockmc/spectra.hpp"

namespace blockmc {
namespace cli {

using nlohmann::json;

inline InitialDistribution parse_init(const std::string& text) {
  if (text == "equilibrium") return InitialDistribution::equilibrium();
  if (text == "uniform") return InitialDistribution::uniform_state();
  if (text.rfind("state:", 0) == 0)
    return InitialDistribution::point_mass(std::stoi(text.substr(6)) - 1);
  if (text.rfind("cluster:", 0) == 0)
    return InitialDistribution::cluster_mass(std::stoi(text.substr(8)) - 1);
  throw Error("unknown initial distribution \"" + text + "\"");
}

inline double parse_scale(const std::string& text, int n) {
  if (text == "sqrt-n") return std::sqrt(static_cast<double>(n));
  if (text == "inv-sqrt-n") return 1.0 / std::sqrt(static_cast<double>(n));
  if (text == "none") return 1.0;
  return std::stod(text);
}

inline std::int64_t resolve_ell(std::optional<std::int64_t> ell,
                                std::optional<double> ell_coeff, int n) {
  if (ell.has_value() == ell_coeff.has_value())
    throw CLI::ValidationError("exactly one of --ell / --ell-coeff is required");
  if (ell) return *ell;
  return static_cast<std::int64_t>(
      std::llround(*ell_coeff * static_cast<double>(n) * n));
}

inline ResolventSystem system_for_target(const BlockModel& model,
                                         const std::string& target) {
  if (target == "N") return frequency_law_system(model);
  if (target == "P") return transition_law_system(model);
  throw Error("target must be N or P");
}

/// Bulk-edge probe: start at the row-sum operator bound and extend until the
/// solved density is negligible at the right end. The probe offset is kept
/// small so its smoothing tail does not inflate the grid.
inline double auto_grid_max(const ResolventSystem& system) {
  double hi =
      2.0 * std::sqrt(system.coefficients.rowwise().sum().maxCoeff()) + 0.25;
  for (int attempt = 0; attempt < 12; ++attempt) {
    ResolventSolution probe = system.solve({hi, 1e-4});
    if (-probe.s.imag() / M_PI < 1e-4) return hi;
    hi *= 1.3;
  }
  return hi;
}

inline json diagnostics_json(const InversionDiagnostics& diag) {
  json points = json::array();
  for (const auto& point : diag.points)
    points.push_back({{"x", point.x},
                      {"residual", point.residual},
                      {"iterations", point.iterations},
                      {"failed", point.failed}});
  return {{"points", points}, {"failed_points", diag.failed_points}};
}

inline int run_simulate(const std::string& model_path, int n,
                        std::optional<std::int64_t> ell_opt,
                        std::optional<double> ell_coeff, std::uint64_t seed,
                        const std::string& init_text,
                        const std::string& counts_out,
                        const std::string& dense_out,
                        const std::string& path_out,
                        const std::string& expected_out) {
  BlockModel model = read_model_json(model_path);
  ClusterLayout layout = build_layout(model, n);
  std::int64_t ell = resolve_ell(ell_opt, ell_coeff, n);
  InitialDistribution init = parse_init(init_text);

  json config{{"subcommand", "simulate"}, {"model", model_path},
              {"n", n},                   {"ell", ell},
              {"seed", seed},             {"init", init_text},
              {"counts_out", counts_out}};
  if (!dense_out.empty()) config["dense_out"] = dense_out;
  if (!path_out.empty()) config["path_out"] = path_out;
  if (!expected_out.empty()) config["expected_out"] = expected_out;
  std::cout << config.dump() << "\n";

  EdgeCounts counts;
  if (path_out.empty()) {
    counts = stream_edge_counts(model, layout, ell, init, seed);
  } else {
    SamplePath path = sample_path(model, layout, ell, init, seed);
    write_sequence_csv(path_out, path.states);
    counts = frequency_matrix(path);
  }
  write_counts_csv(counts_out, counts);
  if (!dense_out.empty()) write_dense_csv(dense_out, counts.to_dense());
  if (!expected_out.empty())
    write_block_matrix_csv(expected_out, expected_frequency(model, layout, ell));
  return 0;
}

inline int run_spectrum(const std::string& counts_path, int n,
                        const std::string& model_path,
                        const std::string& transform,
                        const std::string& scale_text,
                        const std::string& route_text, const std::string& out,
                        const std::string& hist_out, int bins) {
  EdgeCounts counts = read_counts_csv(counts_path, n);
  std::string scale_choice = scale_text;
  if (scale_choice == "default")
    scale_choice = (transform == "phat" || transform == "q") ? "inv-sqrt-n"
                                                             : "sqrt-n";
  double scale = parse_scale(scale_choice, n);
  SvdRoute route =
      route_text == "svd" ? SvdRoute::DirectSvd : SvdRoute::Dilation;

  json config{{"subcommand", "spectrum"}, {"counts", counts_path},
              {"n", n},                   {"transform", transform},
              {"scale", scale},           {"route", route_text},
              {"out", out}};
  if (!model_path.empty()) config["model"] = model_path;
  std::cout << config.dump() << "\n";

  Eigen::MatrixXd matrix;
  if (transform == "nhat") {
    matrix = counts.to_dense();
  } else if (transform == "phat") {
    matrix = transition_matrix(counts).to_dense();
  } else if (transform == "m" || transform == "q") {
    if (model_path.empty())
      throw Error("transforms m and q need --model for the expected counts");
    BlockModel model = read_model_json(model_path);
    ClusterLayout layout = build_layout(model, n);
    matrix = centered(counts, expected_frequency(model, layout, counts.total));
    if (transform == "q") matrix = q_transform(matrix, model, layout, counts.total);
  } else {
    throw Error("transform must be one of nhat, phat, m, q");
  }

  SingularSpectrum spectrum = singular_values(matrix, route);
  for (double& value : spectrum.values) value /= scale;
  spectrum.scale_note = "divided by " + format_value(scale);
  write_spectrum_csv(out, spectrum);
  if (!hist_out.empty()) {
    EmpiricalDistribution dist = esd_scaled(spectrum, 1.0);
    double hi = std::max(dist.points.back() * 1.0000001, 1e-9);
    write_bins_csv(hist_out, histogram(dist, linspace(0.0, hi, bins + 1)));
  }
  return 0;
}

inline int run_law(const std::string& model_path, const std::string& target,
                   double grid_max, int grid_points, double epsilon,
                   const std::string& out, const std::string& diagnostics_out) {
  BlockModel model = read_model_json(model_path);
  ResolventSystem system = system_for_target(model, target);
  if (grid_max <= 0.0) grid_max = auto_grid_max(system);
  InversionScheme scheme =
      epsilon > 0.0 ? InversionScheme::raw(epsilon) : InversionScheme{};

  json config{{"subcommand", "law"},   {"model", model_path},
              {"target", target},      {"grid_max", grid_max},
              {"grid_points", grid_points},
              {"epsilon", epsilon > 0.0 ? json(epsilon) : json("extrapolated")},
              {"out", out}};
  std::cout << config.dump() << "\n";

  InversionDiagnostics diagnostics;
  SpectralDensity sym = invert_density(system, linspace(0.0, grid_max, grid_points),
                                       scheme, {}, &diagnostics);
  SpectralDensity folded = folded_density(sym);
  write_density_csv(out, folded);
  if (!diagnostics_out.empty())
    write_text(diagnostics_out, diagnostics_json(diagnostics).dump(2));
  std::cout << json{{"support_edge", detect_support_edge(folded)},
                    {"total_mass", folded.cdf.back()}}
                   .dump()
            << "\n";
  return 0;
}

inline json moment_block(const MomentSequence& seq) {
  json moments;
  for (int order = 0; order <= seq.max_order(); ++order)
    moments[std::to_string(order)] = seq.values[order];
  HankelReport hankel = hankel_psd(seq, seq.max_order() / 2);
  return {{"moments", moments},
          {"hankel", {{"order", seq.max_order() / 2},
                      {"min_eigenvalue", hankel.min_eigenvalue},
                      {"psd", hankel.psd}}}};
}

inline int run_moments(const std::string& model_path, const std::string& target,
                       int max_order, const std::string& out) {
  BlockModel model = read_model_json(model_path);
  if (target != "N" && target != "P") throw Error("target must be N or P");
  StepGraphon graphon = target == "N" ? graphon_wm(model) : graphon_wq(model);
  ResolventSystem system = system_for_target(model, target);

  json config{{"subcommand", "moments"}, {"model", model_path},
              {"target", target},        {"max_order", max_order},
              {"out", out}};
  std::cout << config.dump() << "\n";

  json report{{"tree-sum", moment_block(tree_moments(graphon, max_order))}};
  // Companion quadrature moments of the solved symmetrized law.
  double edge = auto_grid_max(system) + 0.3;
  SpectralDensity sym = invert_density(system, linspace(-edge, edge, 901));
  report["quadrature"] = moment_block(quadrature_moments(sym, max_order));
  write_text(out, report.dump(2));
  return 0;
}

inline int run_poisson(const std::string& model_path, int n,
                       std::optional<std::int64_t> ell_opt,
                       std::optional<double> ell_coeff, int k1, int k2,
                       bool self_loop, int replicas, std::uint64_t seed,
                       double epsilon, const std::string& out,
                       const std::string& histogram_out) {
  BlockModel model = read_model_json(model_path);
  ClusterLayout layout = build_layout(model, n);
  std::optional<double> default_coeff;
  if (!ell_opt && !ell_coeff) default_coeff = model.lambda();
  std::int64_t ell =
      resolve_ell(ell_opt, ell_coeff ? ell_coeff : default_coeff, n);
  if (k1 < 1 || k1 > model.K() || k2 < 1 || k2 > model.K())
    throw Error("cluster indices must lie in 1..K");
  if (self_loop && k1 != k2)
    throw Error("--self-loop needs k1 == k2");

  int from = layout.offset(k1 - 1);
  int to = self_loop ? from : layout.offset(k2 - 1);
  if (!self_loop && k1 == k2) {
    if (layout.size(k1 - 1) < 2)
      throw Error("cluster too small for a non-self-loop edge");
    to = from + 1;
  }

  json config{{"subcommand", "poisson"}, {"model", model_path},
              {"n", n},                  {"ell", ell},
              {"k1", k1},                {"k2", k2},
              {"self_loop", self_loop},  {"replicas", replicas},
              {"seed", seed},            {"epsilon", epsilon},
              {"out", out}};
  std::cout << config.dump() << "\n";

  TVReport report = poisson_check(model, layout, ell, from, to, replicas, seed);
  PoissonCertificate cert =
      poisson_certificate(model, layout, ell, k1 - 1, k2 - 1, self_loop, epsilon);
  json j{{"edge", {{"from", from + 1}, {"to", to + 1}, {"k1", k1}, {"k2", k2}}},
         {"rate", report.rate},
         {"tv", report.tv},
         {"mean", report.mean},
         {"variance", report.variance},
         {"replicas", report.replicas},
         {"certificate",
          {{"epsilon", cert.epsilon},
           {"r0", cert.r0},
           {"bound", cert.bound},
           {"self_loop", cert.self_loop},
           {"term_local", cert.term_local},
           {"term_self_loop", cert.term_self_loop},
           {"term_mixing", cert.term_mixing}}}};
  write_text(out, j.dump(2));
  if (!histogram_out.empty()) write_histogram_csv(histogram_out, report.histogram);
  std::cout << json{{"tv", report.tv}, {"mean", report.mean},
                    {"variance", report.variance}, {"bound", cert.bound}}
                   .dump()
            << "\n";
  return 0;
}

inline int run_estimate(const std::string& pairs_path,
                        const std::string& sequence_path,
                        const std::string& clustering_path,
                        std::int64_t min_visits, bool drop_self_loops,
                        const std::string& out) {
  if (pairs_path.empty() == sequence_path.empty())
    throw CLI::ValidationError("exactly one of --pairs / --sequence is required");
  TransitionDataset data =
      pairs_path.empty()
          ? read_transitions(sequence_path, TransitionFormat::StateSequence)
          : read_transitions(pairs_path, TransitionFormat::CsvPairs);
  if (min_visits > 0 || drop_self_loops)
    data = preprocess(data, min_visits, drop_self_loops);

  json config{{"subcommand", "estimate"},
              {"input", pairs_path.empty() ? sequence_path : pairs_path},
              {"format", pairs_path.empty() ? "state-sequence" : "csv-pairs"},
              {"clustering", clustering_path},
              {"min_visits", min_visits},
              {"drop_self_loops", drop_self_loops},
              {"out", out}};
  std::cout << config.dump() << "\n";

  int num_clusters = 0;
  std::vector<int> clustering = read_clustering(clustering_path, data, &num_clusters);
  EstimatedModel est = estimate_parameters(data, clustering, num_clusters);

  json j;
  j["K"] = num_clusters;
  std::vector<double> p;
  for (int i = 0; i < num_clusters; ++i)
    for (int c = 0; c < num_clusters; ++c) p.push_back(est.p_hat(i, c));
  j["p"] = p;
  j["alpha"] = std::vector<double>(est.alpha_hat.data(),
                                   est.alpha_hat.data() + num_clusters);
  j["lambda"] = est.lambda_hat;
  j["pi_hat"] = std::vector<double>(est.pi_hat.data(),
                                    est.pi_hat.data() + num_clusters);
  j["n_states"] = data.n_states;
  j["transitions"] = data.ell();
  write_text(out, j.dump(2));
  return 0;
}

inline int run_compare(const std::string& spectrum_path,
                       const std::string& density_path, int trim,
                       const std::string& out) {
  json config{{"subcommand", "compare"},
              {"spectrum", spectrum_path},
              {"density", density_path},
              {"trim", trim},
              {"out", out}};
  std::cout << config.dump() << "\n";

  std::vector<double> values = read_values_csv(spectrum_path);
  EmpiricalDistribution dist;
  dist.points = values;
  std::sort(dist.points.begin(), dist.points.end());
  SpectralDensity folded = read_density_csv(density_path);
  LawCdf cdf = law_cdf(folded);
  double untrimmed = ks_distance(dist, cdf);
  double trimmed = ks_distance(trim_top(dist, trim), cdf);
  json report{{"ks", trimmed},
              {"ks_untrimmed", untrimmed},
              {"trim", trim},
              {"points", dist.points.size()}};
  write_text(out, report.dump(2));
  std::cout << report.dump() << "\n";
  return 0;
}

/// Full command-line surface. Returns the process exit status: 0 on success,
/// 2 on usage errors, 1 on runtime failures (diagnostic on stderr).
inline int cli_dispatch(const std::vector<std::string>& args) {
  CLI::App app{"block Markov chain spectra: simulation, limiting laws, and checks"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "sample a path and export its edge counts");
  std::string model_path, init_text = "equilibrium";
  std::string counts_out = "counts.csv", dense_out, path_out, expected_out;
  int n = 0;
  std::optional<std::int64_t> ell_opt;
  std::optional<double> ell_coeff;
  std::uint64_t seed = 1;
  simulate->add_option("--model", model_path, "model JSON file")->required();
  simulate->add_option("--n", n, "state-space size")->required();
  simulate->add_option("--ell", ell_opt, "path length (transitions)");
  simulate->add_option("--ell-coeff", ell_coeff, "path length as coeff * n^2");
  simulate->add_option("--seed", seed, "master seed");
  simulate->add_option("--init", init_text,
                       "equilibrium | uniform | state:<i> | cluster:<k>");
  simulate->add_option("--counts-out", counts_out, "sparse triplet CSV");
  simulate->add_option("--dense-out", dense_out, "optional dense CSV");
  simulate->add_option("--dump-path", path_out, "optional state sequence dump");
  simulate->add_option("--expected-out", expected_out,
                       "optional expected-counts block CSV");

  // spectrum
  auto* spectrum = app.add_subcommand(
      "spectrum", "singular values of a matrix built from counts");
  std::string counts_path, transform, scale_text = "default";
  std::string route_text = "dilation", spectrum_out = "spectrum.csv";
  std::string spectrum_model, spectrum_hist;
  int spectrum_n = 0, spectrum_bins = 60;
  spectrum->add_option("--counts", counts_path, "sparse triplet CSV")->required();
  spectrum->add_option("--n", spectrum_n, "state-space size")->required();
  spectrum->add_option("--transform", transform, "nhat | phat | m | q")
      ->required();
  spectrum->add_option("--model", spectrum_model, "model JSON (for m and q)");
  spectrum->add_option("--scale", scale_text,
                       "sqrt-n | inv-sqrt-n | none | <number> (default per transform)");
  spectrum->add_option("--route", route_text, "dilation | svd");
  spectrum->add_option("--out", spectrum_out, "spectrum CSV, one value per line");
  spectrum->add_option("--hist-out", spectrum_hist, "binned masses lo,hi,mass");
  spectrum->add_option("--bins", spectrum_bins, "bin count for --hist-out");

  // law
  auto* law = app.add_subcommand("law", "solve the limiting singular value law");
  std::string law_model, law_target = "N", law_out = "density.csv", law_diag;
  double grid_max = 0.0, law_epsilon = 0.0;
  int grid_points = 512;
  law->add_option("--model", law_model, "model JSON file")->required();
  law->add_option("--target", law_target, "N (frequency) | P (transition)");
  law->add_option("--grid-max", grid_max, "grid upper end (0 = auto)");
  law->add_option("--grid-points", grid_points, "grid resolution");
  law->add_option("--epsilon", law_epsilon,
                  "fixed inversion offset (0 = extrapolated scheme)");
  law->add_option("--out", law_out, "density CSV x,density,cdf (folded)");
  law->add_option("--diagnostics", law_diag, "solver diagnostics JSON");

  // moments
  auto* moments = app.add_subcommand("moments", "limiting moments via tree sums");
  std::string moments_model, moments_target = "N", moments_out = "moments.json";
  int max_order = 8;
  moments->add_option("--model", moments_model, "model JSON file")->required();
  moments->add_option("--target", moments_target, "N | P");
  moments->add_option("--max-order", max_order, "highest moment order");
  moments->add_option("--out", moments_out, "moment report JSON");

  // poisson
  auto* poisson = app.add_subcommand(
      "poisson", "edge-count Poisson check with certificate");
  std::string poisson_model, poisson_out = "poisson.json", poisson_hist;
  int poisson_n = 0, k1 = 1, k2 = 1, replicas = 2000;
  std::optional<std::int64_t> poisson_ell;
  std::optional<double> poisson_coeff;
  std::uint64_t poisson_seed = 1;
  double poisson_epsilon = 1e-4;
  bool self_loop = false;
  poisson->add_option("--model", poisson_model, "model JSON file")->required();
  poisson->add_option("--n", poisson_n, "state-space size")->required();
  poisson->add_option("--ell", poisson_ell, "path length");
  poisson->add_option("--ell-coeff", poisson_coeff,
                      "path length as coeff * n^2 (default: model lambda)");
  poisson->add_option("--k1", k1, "source cluster (1-based)");
  poisson->add_option("--k2", k2, "destination cluster (1-based)");
  poisson->add_flag("--self-loop", self_loop, "use the edge (v, v)");
  poisson->add_option("--replicas", replicas, "independent replicas");
  poisson->add_option("--seed", poisson_seed, "master seed");
  poisson->add_option("--epsilon", poisson_epsilon, "certificate epsilon");
  poisson->add_option("--out", poisson_out, "report JSON");
  poisson->add_option("--histogram-out", poisson_hist, "value,count CSV");

  // estimate
  auto* estimate = app.add_subcommand(
      "estimate", "estimate block-model parameters from transitions");
  std::string pairs_path, sequence_path, clustering_path;
  std::string estimate_out = "estimated_model.json";
  std::int64_t min_visits = 0;
  bool drop_self_loops = false;
  estimate->add_option("--pairs", pairs_path, "from,to CSV");
  estimate->add_option("--sequence", sequence_path, "one state per line");
  estimate->add_option("--clustering", clustering_path, "state,cluster CSV")
      ->required();
  estimate->add_option("--min-visits", min_visits, "iterative trim threshold");
  estimate->add_flag("--drop-self-loops", drop_self_loops,
                     "remove self-transitions");
  estimate->add_option("--out", estimate_out, "estimated model JSON");

  // compare
  auto* compare = app.add_subcommand(
      "compare", "KS distance between a spectrum and a solved law");
  std::string cmp_spectrum, cmp_density, cmp_out = "compare.json";
  int trim = 0;
  compare->add_option("--spectrum", cmp_spectrum, "spectrum CSV")->required();
  compare->add_option("--density", cmp_density, "density CSV from `law`")
      ->required();
  compare->add_option("--trim", trim, "drop the k largest values");
  compare->add_option("--out", cmp_out, "KS report JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (simulate->parsed())
      return run_simulate(model_path, n, ell_opt, ell_coeff, seed, init_text,
                          counts_out, dense_out, path_out, expected_out);
    if (spectrum->parsed())
      return run_spectrum(counts_path, spectrum_n, spectrum_model, transform,
                          scale_text, route_text, spectrum_out, spectrum_hist,
                          spectrum_bins);
    if (law->parsed())
      return run_law(law_model, law_target, grid_max, grid_points, law_epsilon,
                     law_out, law_diag);
    if (moments->parsed())
      return run_moments(moments_model, moments_target, max_order, moments_out);
    if (poisson->parsed())
      return run_poisson(poisson_model, poisson_n, poisson_ell, poisson_coeff,
                         k1, k2, self_loop, replicas, poisson_seed,
                         poisson_epsilon, poisson_out, poisson_hist);
    if (estimate->parsed())
      return run_estimate(pairs_path, sequence_path, clustering_path,
                          min_visits, drop_self_loops, estimate_out);
    if (compare->parsed())
      return run_compare(cmp_spectrum, cmp_density, trim, cmp_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace cli
}  // namespace blockmc
