#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "pmmf/conditions.hpp"
#include "pmmf/errors.hpp"
#include "pmmf/forgetting.hpp"
#include "pmmf/inference.hpp"
#include "pmmf/io.hpp"
#include "pmmf/segmentation.hpp"

namespace pmmf::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Options {
  std::string model;
  std::string obs;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t t = 0;
  std::size_t m = 1;
  std::string window;
  std::size_t r_max = 6;
  double epsilon = 1.0;
  std::size_t paths = 0;
  std::size_t n = 0;
  std::string method;
  bool no_bound = false;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

std::pair<std::size_t, std::size_t> parse_window(const std::string& w) {
  const auto colon = w.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--window", "expected l:n");
  try {
    return {std::stoul(w.substr(0, colon)), std::stoul(w.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw CLI::ValidationError("--window", "expected two integers l:n");
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

json fit_json(const RateFit& f) {
  return {{"ok", f.ok},           {"n_points", f.n_points},       {"slope", f.slope},
          {"intercept", f.intercept}, {"slope_stderr", f.slope_stderr}, {"slope_upper95", f.slope_upper95},
          {"alpha_hat", f.alpha_hat}, {"fit_window", {f.x_min, f.x_max}}};
}

// Collects output files so that the manifest can list their digests.
class Run {
 public:
  Run(std::string name, const Options& opt) : name_(std::move(name)), opt_(opt) {}

  void input(const std::string& path) { inputs_[path] = fnv1a(read_text(path)); }
  void output(const std::string& file, const std::string& content) { outputs_[file] = content; }
  json& config() { return config_; }

  void finish(std::chrono::steady_clock::time_point start) {
    const fs::path dir(opt_.out);
    json outs = json::object();
    for (const auto& [file, content] : outputs_) {
      write_text(dir / file, content);
      outs[file] = fnv1a(content);
    }
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    json manifest{{"subcommand", name_}, {"config", config_},    {"seed", opt_.seed}, {"inputs", inputs_},
                  {"outputs", outs},     {"version", kVersion}, {"duration_ms", ms}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  std::string name_;
  const Options& opt_;
  json config_ = json::object();
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

ModelPtr load_checked(Run& run, const Options& opt) {
  run.input(opt.model);
  ModelPtr model = load_model(opt.model);
  const ValidationReport report = validate_model(*model);
  if (!report.ok()) {
    std::string msg = "model failed validation:";
    for (const auto& issue : report.issues) msg += "\n  " + issue.where + ": " + issue.what;
    throw InvalidArgument(msg);
  }
  return model;
}

ObsSeq load_obs(Run& run, const Options& opt, const ModelKernel& model) {
  if (opt.obs.empty()) throw InvalidArgument("--obs is required");
  run.input(opt.obs);
  return read_observations(opt.obs, model.obs_space());
}

std::string path_string(const std::vector<StateIndex>& path, std::size_t n_states) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (n_states <= 10) {
      out += std::to_string(path[i]);
    } else {
      out += (i > 0 ? "," : "") + std::to_string(path[i]);
    }
  }
  return out;
}

std::optional<ForgettingCertificate> certificate_for(const ModelKernel& model, const Options& opt, json& info) {
  const AutoCertificate ac = auto_certificate(model, opt.r_max, opt.epsilon);
  if (ac.certificate) {
    info["certificate"] = certificate_to_json(*ac.certificate);
  } else {
    info["certificate"] = nullptr;
    info["certificate_reason"] = ac.reason;
  }
  return ac.certificate;
}

// ---------------------------------------------------------------- subcommands

int cmd_simulate(Run& run, const Options& opt) {
  const ModelPtr model = load_checked(run, opt);
  const std::size_t n = opt.n == 0 ? 100 : opt.n;
  run.config()["n"] = n;
  const Trajectory traj = sample_trajectory(*model, n, opt.seed);
  run.output("trajectory.csv", trajectory_csv(traj));
  run.output("obs.csv", observations_csv(traj.xs));
  return kOk;
}

int cmd_smooth(Run& run, const Options& opt, std::ostream& out) {
  const ModelPtr model = load_checked(run, opt);
  const ObsSeq xs = load_obs(run, opt, *model);
  std::size_t l = 1;
  std::size_t n = xs.size();
  if (!opt.window.empty()) std::tie(l, n) = parse_window(opt.window);
  if (l < 1 || l > n || n > xs.size()) throw InvalidArgument("--window must satisfy 1 <= l <= n <= number of observations");
  run.config()["window"] = {l, n};
  run.config()["m"] = opt.m;
  const WindowPosterior post(*model, ObsView(xs).subspan(l - 1, n - l + 1), l);
  if (opt.t > 0) {
    run.config()["t"] = opt.t;
    const BlockDistribution b = post.block(opt.t, opt.m);
    json j{{"t", b.t}, {"l", b.l}, {"n", b.n}, {"m", b.m}, {"predictive", b.predictive()}, {"probs", json::array()}};
    for (Eigen::Index v = 0; v < b.probs.size(); ++v) j["probs"].push_back(b.probs(v));
    run.output("block.json", j.dump(2) + "\n");
    out << j.dump() << "\n";
  } else {
    std::string csv = "t";
    for (std::size_t i = 0; i < model->n_states(); ++i) csv += ",p" + std::to_string(i);
    csv += "\n";
    for (std::size_t t = l; t <= n; ++t) {
      const Eigen::VectorXd nu = post.marginal(t);
      csv += std::to_string(t);
      for (Eigen::Index i = 0; i < nu.size(); ++i) csv += "," + fmt(nu(i));
      csv += "\n";
    }
    run.output("marginals.csv", csv);
  }
  run.output("loglik.json", json{{"log_likelihood", post.log_likelihood()}}.dump(2) + "\n");
  return kOk;
}

int cmd_decode(Run& run, const Options& opt, std::ostream& out) {
  const ModelPtr model = load_checked(run, opt);
  const ObsSeq xs = load_obs(run, opt, *model);
  const auto path = pmap_decode(*model, xs);
  const std::string s = path_string(path, model->n_states());
  run.output("path.txt", s + "\n");
  out << s << "\n";
  return kOk;
}

int cmd_segment(Run& run, const Options& opt, std::ostream& out) {
  const ModelPtr model = load_checked(run, opt);
  const ObsSeq xs = load_obs(run, opt, *model);
  const SegmentationResult r = expected_error(*model, xs);
  json j{{"path", r.path},
         {"per_t_confidence", r.confidence},
         {"expected_errors", r.expected_errors},
         {"normalized_error", r.normalized_error}};
  run.output("segmentation.json", j.dump(2) + "\n");
  out << path_string(r.path, model->n_states()) << " normalized_error=" << fmt(r.normalized_error) << "\n";
  return kOk;
}

int cmd_check(Run& run, const Options& opt, std::ostream& out) {
  const ModelPtr model = load_checked(run, opt);
  const std::string method = opt.method.empty() ? "auto" : opt.method;
  run.config()["method"] = method;
  run.config()["r_max"] = opt.r_max;
  run.config()["epsilon"] = opt.epsilon;
  json report{{"method", method}};
  std::optional<ForgettingCertificate> cert;

  if (method == "enumerate") {
    if (!model->obs_space().finite()) throw InvalidArgument("enumeration needs a finite observation alphabet");
    const A1Result r = check_a1_a2_finite(*model, opt.r_max);
    cert = r.certificate;
    report["failures"] = json::array();
    for (const auto& f : r.failures) report["failures"].push_back(failure_to_json(f));
  } else if (method == "cluster" || method == "positive-row") {
    const auto* hmm = dynamic_cast<const HiddenMarkovModel*>(model.get());
    if (hmm == nullptr) throw InvalidArgument("--method " + method + " needs an HMM");
    const ClusterReport clusters = find_clusters(*hmm);
    report["clusters"] = json::array();
    for (const auto& c : clusters.clusters) {
      report["clusters"].push_back({{"states", c.cell.states},
                                    {"symbols", c.cell.symbols},
                                    {"passing", c.passing},
                                    {"exponent", c.exponent ? json(*c.exponent) : json(nullptr)}});
    }
    if (clusters.undetermined) report["note"] = clusters.note;
    if (method == "cluster") {
      if (const Cluster* best = clusters.best_passing()) {
        cert = certificate_from_cluster(*hmm, *best, 10000, opt.seed);
      } else {
        report["reason"] = "no passing cluster";
      }
    } else {
      const PositiveRowResult pr = check_positive_row(*hmm, clusters, 10000, opt.seed);
      report["positive_row"] = pr.positive_row;
      report["note"] = pr.note;
      cert = pr.certificate;
    }
  } else if (method == "lmsm") {
    const auto* lm = dynamic_cast<const LinearSwitchingModel*>(model.get());
    if (lm == nullptr) throw InvalidArgument("--method lmsm needs a linear switching model");
    const LmsmResult r = check_lmsm(*lm, opt.epsilon, 10000, opt.seed);
    report["cluster"] = r.cluster;
    report["epsilon0"] = r.epsilon0;
    report["reason"] = r.reason;
    cert = r.certificate;
  } else if (method == "sopot") {
    const AutoCertificate ac = auto_certificate(*model, opt.r_max, opt.epsilon);
    if (!ac.certificate) {
      report["reason"] = ac.reason;
    } else {
      // Extra condition at the split t (default 2); holds when some state l gives lambda > 0.
      const std::size_t t = opt.t == 0 ? 2 : opt.t;
      run.config()["t"] = t;
      report["per_state"] = json::array();
      bool any = false;
      for (StateIndex l = 0; l < model->n_states(); ++l) {
        const SopotResult sr = check_sopot(*model, *ac.certificate, t, l, 10000, opt.seed);
        report["per_state"].push_back({{"l", l}, {"ok", sr.ok}, {"lambda", sr.lambda}, {"reason", sr.reason}});
        any = any || sr.ok;
      }
      if (any) cert = ac.certificate;
    }
  } else if (method == "auto") {
    const AutoCertificate ac = auto_certificate(*model, opt.r_max, opt.epsilon);
    report["reason"] = ac.reason;
    cert = ac.certificate;
  } else {
    throw CLI::ValidationError("--method", "expected enumerate, cluster, positive-row, lmsm, sopot or auto");
  }

  report["ok"] = cert.has_value();
  report["certificate"] = cert ? certificate_to_json(*cert) : json(nullptr);
  run.output("check.json", report.dump(2) + "\n");
  if (cert) {
    out << "A1/A2 hold: r=" << cert->r << " n0=" << fmt(cert->n0) << " rho=" << fmt(cert->rho)
        << " Y+=" << cert->y_plus.to_string() << "\n";
    return kOk;
  }
  out << "A1/A2 not established (see check.json)\n";
  return kValidation;
}

int cmd_forget_curve(Run& run, const Options& opt, std::ostream& out) {
  const ModelPtr model = load_checked(run, opt);
  json summary = json::object();
  const auto cert = certificate_for(*model, opt, summary);
  OneSidedConfig cfg;
  if (!opt.window.empty()) std::tie(cfg.l, cfg.s) = parse_window(opt.window);
  if (opt.t > 0) cfg.t_max = opt.t;
  if (opt.n > 0) cfg.n_max = opt.n;
  if (cfg.t_max > cfg.n_max) cfg.t_max = cfg.n_max;
  if (opt.paths > 0) cfg.n_paths = opt.paths;
  cfg.m = opt.m;
  cfg.seed = opt.seed;
  const std::string method = opt.method.empty() ? "one-sided" : opt.method;

  ExperimentSummary res;
  if (method == "one-sided") {
    res = one_sided_experiment(*model, cert ? &*cert : nullptr, cfg);
  } else if (method == "initial") {
    const Eigen::VectorXd base = model->initial_law();
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(base.size());
    Eigen::Index best = 0;
    base.maxCoeff(&best);
    pi(best) = 1.0;
    const Eigen::VectorXd pi_tilde = Eigen::VectorXd::Constant(base.size(), 1.0 / static_cast<double>(base.size()));
    res = initial_forgetting_experiment(*model, pi, pi_tilde, cert ? &*cert : nullptr, cfg);
    summary["pi"] = std::vector<double>(pi.data(), pi.data() + pi.size());
    summary["pi_tilde"] = std::vector<double>(pi_tilde.data(), pi_tilde.data() + pi_tilde.size());
  } else {
    throw CLI::ValidationError("--method", "expected one-sided or initial");
  }
  run.config() = {{"method", method}, {"l", cfg.l},           {"s", cfg.s},         {"t_max", cfg.t_max},
                  {"n_max", cfg.n_max}, {"n_offsets", cfg.n_offsets}, {"m", cfg.m}, {"paths", cfg.n_paths},
                  {"r_max", opt.r_max}, {"epsilon", opt.epsilon}};

  std::string csv = "path,t,emp_tv,envelope,kappa,delta_product\n";
  json per_path = json::array();
  for (const auto& c : res.curves) {
    for (std::size_t i = 0; i < c.ts.size(); ++i) {
      csv += std::to_string(c.path) + "," + std::to_string(c.ts[i]) + "," + fmt(c.emp_tv[i]) + "," +
             fmt(c.envelope[i]) + "," + std::to_string(c.kappa[i]) + "," + fmt(c.delta_product[i]) + "\n";
    }
    per_path.push_back({{"path", c.path}, {"seed", c.seed}, {"alpha_hat", c.fit.alpha_hat},
                        {"violations", c.violations}, {"fit", fit_json(c.fit)}});
  }
  summary["alpha_hat"] = res.pooled.alpha_hat;
  summary["fit"] = fit_json(res.pooled);
  summary["fit_window"] = {res.pooled.x_min, res.pooled.x_max};
  summary["violations"] = res.violations;
  summary["product_violations"] = res.product_violations;
  summary["seed"] = opt.seed;
  summary["paths"] = per_path;
  run.output("curves.csv", csv);
  run.output("summary.json", summary.dump(2) + "\n");
  run.output("plot.gp",
             "set logscale y\nset xlabel 't'\nset ylabel 'TV'\nset datafile separator ','\n"
             "plot 'curves.csv' every ::1 using 2:3 with dots title 'empirical', \\\n"
             "     'curves.csv' every ::1 using 2:4 with dots title 'envelope'\n");
  out << "alpha_hat=" << fmt(res.pooled.alpha_hat) << " violations=" << res.violations << "\n";
  return kOk;
}

int cmd_two_sided(Run& run, const Options& opt, std::ostream& out) {
  const ModelPtr model = load_checked(run, opt);
  json summary = json::object();
  const auto cert = certificate_for(*model, opt, summary);
  TwoSidedConfig cfg;
  if (opt.n > 0) cfg.n_trunc = opt.n;
  cfg.t = opt.t;
  cfg.m = opt.m;
  if (opt.paths > 0) cfg.n_paths = opt.paths;
  cfg.seed = opt.seed;
  const TwoSidedSummary res = two_sided_experiment(*model, cert ? &*cert : nullptr, cfg);
  run.config() = {{"t", res.t},           {"m", cfg.m},           {"l_grid", cfg.l_grid},
                  {"s_grid", cfg.s_grid}, {"n_trunc", cfg.n_trunc}, {"paths", cfg.n_paths},
                  {"r_max", opt.r_max},   {"epsilon", opt.epsilon}};
  std::string csv = "path,l,s,tv,left_bound,right_bound,envelope\n";
  for (const auto& c : res.cells) {
    csv += std::to_string(c.path) + "," + std::to_string(c.l) + "," + std::to_string(c.s) + "," + fmt(c.tv) + "," +
           fmt(c.left_bound) + "," + fmt(c.right_bound) + "," + fmt(c.envelope()) + "\n";
  }
  summary["t"] = res.t;
  summary["fit"] = fit_json(res.fit);
  summary["violations"] = res.violations;
  summary["truncation_bound"] = res.truncation_bound;
  summary["seed"] = opt.seed;
  run.output("table.csv", csv);
  run.output("summary.json", summary.dump(2) + "\n");
  out << "slope=" << fmt(res.fit.slope) << " violations=" << res.violations << "\n";
  return kOk;
}

int cmd_estimate_r(Run& run, const Options& opt, std::ostream& out) {
  const ModelPtr model = load_checked(run, opt);
  json info = json::object();
  std::optional<ForgettingCertificate> cert;
  if (!opt.no_bound) cert = certificate_for(*model, opt, info);
  EstimateRConfig cfg;
  if (opt.n > 0) cfg.n_total = opt.n;
  if (!opt.window.empty()) {
    const auto [bl, bs] = parse_window(opt.window);
    cfg.burn_l = bl;
    cfg.burn_s = bs;
  }
  const std::string method = opt.method.empty() ? "sliding" : opt.method;
  if (method == "anchored") {
    cfg.left_anchor = true;
    cfg.start = StartMode::model_init;
  } else if (method != "sliding") {
    throw CLI::ValidationError("--method", "expected sliding or anchored");
  }
  cfg.allow_no_bound = opt.no_bound;
  cfg.seed = opt.seed;
  const EstimateRResult r = estimate_r(*model, cert ? &*cert : nullptr, cfg);
  run.config() = {{"n_total", r.n_total}, {"burn_l", r.burn_l}, {"burn_s", r.burn_s}, {"method", method},
                  {"no_bound", opt.no_bound}, {"batches", cfg.batches}};
  json j{{"R_hat", r.r_hat},
         {"stderr", r.stderr_batch},
         {"window_bound", r.window_bound ? json(*r.window_bound) : json(nullptr)},
         {"n_total", r.n_total},
         {"n_used", r.n_used},
         {"seed", r.seed}};
  if (info.contains("certificate_reason")) j["certificate_reason"] = info["certificate_reason"];
  run.output("r.json", j.dump(2) + "\n");
  out << "R_hat=" << fmt(r.r_hat) << " stderr=" << fmt(r.stderr_batch) << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact smoothing and forgetting diagnostics for pairwise Markov models", "pmmf"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--model", opt.model, "Model JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Root seed (chosen and recorded when omitted)");
  };
  auto* simulate = app.add_subcommand("simulate", "Sample a trajectory");
  common(simulate);
  simulate->add_option("--n", opt.n, "Path length (default 100)");

  auto* smooth = app.add_subcommand("smooth", "Smoothing marginals or a block distribution");
  common(smooth);
  smooth->add_option("--obs", opt.obs, "Observation CSV")->required();
  smooth->add_option("--t", opt.t, "Block start (omit for all marginals)");
  smooth->add_option("--m", opt.m, "Block length")->capture_default_str();
  smooth->add_option("--window", opt.window, "Observation window l:n (1-based, inclusive)");

  auto* decode = app.add_subcommand("decode", "Pointwise MAP path");
  common(decode);
  decode->add_option("--obs", opt.obs, "Observation CSV")->required();

  auto* segment = app.add_subcommand("segment", "PMAP path with its expected error");
  common(segment);
  segment->add_option("--obs", opt.obs, "Observation CSV")->required();

  auto* check = app.add_subcommand("check", "Check A1/A2 and build a forgetting certificate");
  common(check);
  check->add_option("--method", opt.method, "enumerate | cluster | positive-row | lmsm | sopot | auto");
  check->add_option("--t", opt.t, "Split point for the sopot check (default 2)");
  check->add_option("--r-max", opt.r_max, "Largest block length to enumerate")->capture_default_str();
  check->add_option("--epsilon", opt.epsilon, "Ball radius for the LMSM check")->capture_default_str();

  auto* forget = app.add_subcommand("forget-curve", "One-sided or initial-law forgetting experiment");
  common(forget);
  forget->add_option("--method", opt.method, "one-sided | initial");
  forget->add_option("--window", opt.window, "Window starts l:s (default 1:3)");
  forget->add_option("--t", opt.t, "Largest t (default 200)");
  forget->add_option("--n", opt.n, "Largest n (default 300)");
  forget->add_option("--m", opt.m, "Block length")->capture_default_str();
  forget->add_option("--paths", opt.paths, "Number of paths (default 100)");
  forget->add_option("--r-max", opt.r_max, "Largest r for the certificate search")->capture_default_str();
  forget->add_option("--epsilon", opt.epsilon, "Ball radius for the LMSM check")->capture_default_str();

  auto* two = app.add_subcommand("two-sided", "Two-sided window truncation experiment");
  common(two);
  two->add_option("--t", opt.t, "Target time (default n/2)");
  two->add_option("--n", opt.n, "Widest window length (default 200)");
  two->add_option("--m", opt.m, "Block length")->capture_default_str();
  two->add_option("--paths", opt.paths, "Number of paths (default 50)");
  two->add_option("--r-max", opt.r_max, "Largest r for the certificate search")->capture_default_str();
  two->add_option("--epsilon", opt.epsilon, "Ball radius for the LMSM check")->capture_default_str();

  auto* est = app.add_subcommand("estimate-r", "Monte Carlo estimate of the segmentation constant R");
  common(est);
  est->add_option("--n", opt.n, "Simulated path length (default 10000)");
  est->add_option("--window", opt.window, "Burn-in burn_l:burn_s (default from rho)");
  est->add_option("--method", opt.method, "sliding | anchored (windows [1 : t + burn_s], model start)");
  est->add_flag("--no-bound", opt.no_bound, "Run without a certificate; no truncation bound");
  est->add_option("--r-max", opt.r_max, "Largest r for the certificate search")->capture_default_str();
  est->add_option("--epsilon", opt.epsilon, "Ball radius for the LMSM check")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  opt.seed_given = sub->count("--seed") > 0;
  if (!opt.seed_given) opt.seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();

  const auto start = std::chrono::steady_clock::now();
  Run run(sub->get_name(), opt);
  try {
    int code = kOk;
    const std::string& name = sub->get_name();
    if (name == "simulate") code = cmd_simulate(run, opt);
    if (name == "smooth") code = cmd_smooth(run, opt, out);
    if (name == "decode") code = cmd_decode(run, opt, out);
    if (name == "segment") code = cmd_segment(run, opt, out);
    if (name == "check") code = cmd_check(run, opt, out);
    if (name == "forget-curve") code = cmd_forget_curve(run, opt, out);
    if (name == "two-sided") code = cmd_two_sided(run, opt, out);
    if (name == "estimate-r") code = cmd_estimate_r(run, opt, out);
    run.finish(start);
    return code;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ZeroLikelihoodError& e) {
    err << "error: " << e.what() << "\n";
    run.output("error.json", json{{"error", "zero_likelihood"}, {"time", e.time()}, {"message", e.what()}}.dump(2) + "\n");
    run.finish(start);
    return kZeroLikelihood;
  } catch (const InvalidWindowError& e) {
    err << "error: " << e.what() << "\n";
    run.output("error.json", json{{"error", "invalid_window"}, {"message", e.what()}}.dump(2) + "\n");
    run.finish(start);
    return kZeroLikelihood;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    run.output("error.json", json{{"error", "validation"}, {"message", e.what()}}.dump(2) + "\n");
    run.finish(start);
    return kValidation;
  }
}

}  // namespace pmmf::cli
