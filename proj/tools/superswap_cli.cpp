// Command-line front end: parameter sweeps, the two record-sorting
// experiments, and the self-validation suite, with CSV/JSON/text output.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "superswap/runner.hpp"

namespace {

struct CliOptions {
  std::string config;
  std::string gamma, d, T, eta, trajectories, seed, mode, workers;
  std::string out;
  std::string format;
};

superswap::ExperimentConfig build_config(const CliOptions& o) {
  superswap::ExperimentConfig cfg;
  if (!o.config.empty()) cfg = superswap::load_config(o.config);
  const std::pair<const char*, const std::string*> overrides[] = {
      {"gamma", &o.gamma},
      {"d", &o.d},
      {"T", &o.T},
      {"eta", &o.eta},
      {"trajectories", &o.trajectories},
      {"seed", &o.seed},
      {"mode", &o.mode},
      {"workers", &o.workers}};
  for (const auto& [key, value] : overrides)
    if (!value->empty()) superswap::apply_override(cfg, key, *value);
  return cfg;
}

int emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return 2;
  }
  out << text;
  return 0;
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_pm(double v, double err) {
  return fmt(v) + " +/- " + fmt(err, "%.2g");
}

double require_single(const std::vector<double>& values, const char* what) {
  if (values.size() != 1)
    throw std::invalid_argument(std::string("configure exactly one ") + what);
  return values.front();
}

std::string header_line(const superswap::ExperimentConfig& cfg, double d,
                        double T) {
  std::ostringstream os;
  os << "d/lambda = " << fmt(d) << ", T = " << fmt(T)
     << ", eta = " << fmt(cfg.eta_values.front())
     << ", trajectories = " << cfg.trajectories << ", seed = " << cfg.seed
     << "\n";
  return os.str();
}

nlohmann::json subset_json(const superswap::SubsetEstimate& s) {
  return {{"label", s.label},       {"records", s.records},
          {"mass", s.mass},         {"chsh", s.chsh},
          {"chsh_err", s.chsh_err}, {"s3", s.s3},
          {"s3_err", s.s3_err}};
}

std::string render_delayed(const superswap::DelayedChoiceResult& res,
                           const superswap::ExperimentConfig& cfg, double d,
                           double T, const std::string& format,
                           double wall_seconds) {
  if (format == "json") {
    nlohmann::json j;
    j["version"] = "0.1.0";
    j["experiment"] = "delayed-choice";
    j["wall_clock_seconds"] = wall_seconds;
    j["d_over_lambda"] = d;
    j["T"] = T;
    j["eta"] = cfg.eta_values.front();
    j["trajectories"] = res.total_records;
    j["seed"] = cfg.seed;
    j["subsets"] = nlohmann::json::array();
    for (const superswap::SubsetEstimate& s : res.subsets)
      j["subsets"].push_back(subset_json(s));
    j["unsorted"] = subset_json(res.unsorted);
    j["unsorted"]["t_diag"] = res.unsorted_t_diag;
    j["unsorted"]["t_diag_err"] = res.unsorted_t_diag_err;
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "delayed-choice sorting, " << header_line(cfg, d, T);
  os << "  subset     records  mass      CHSH                 S3\n";
  const auto line = [&os](const superswap::SubsetEstimate& s) {
    char head[64];
    std::snprintf(head, sizeof head, "  %-9s  %7llu  %-8s", s.label.c_str(),
                  static_cast<unsigned long long>(s.records),
                  fmt(s.mass, "%.4f").c_str());
    os << head << "  " << fmt_pm(s.chsh, s.chsh_err) << "   "
       << fmt_pm(s.s3, s.s3_err) << "\n";
  };
  for (const superswap::SubsetEstimate& s : res.subsets) line(s);
  line(res.unsorted);
  os << "  unsorted same-axis correlations:";
  for (int axis = 0; axis < 3; ++axis)
    os << " "
       << fmt_pm(res.unsorted_t_diag[axis], res.unsorted_t_diag_err[axis]);
  os << "\n";
  return os.str();
}

std::string render_three_time(const superswap::ThreeTimeResult& res,
                              const superswap::ExperimentConfig& cfg, double d,
                              double T, const std::string& format,
                              double wall_seconds) {
  if (format == "json") {
    nlohmann::json j;
    j["version"] = "0.1.0";
    j["experiment"] = "steer-past";
    j["wall_clock_seconds"] = wall_seconds;
    j["d_over_lambda"] = d;
    j["T"] = T;
    j["eta"] = cfg.eta_values.front();
    j["trajectories"] = res.total_records;
    j["seed"] = cfg.seed;
    j["groups"] = nlohmann::json::array();
    for (const superswap::GroupEstimate& g : res.groups)
      j["groups"].push_back({{"label", g.label},
                             {"records", g.records},
                             {"mass", g.mass},
                             {"s3", g.s3},
                             {"s3_err", g.s3_err}});
    j["times"] = {{"alice", res.alice_time},
                  {"herald_min", res.herald_time_min},
                  {"herald_max", res.herald_time_max},
                  {"bob", res.bob_time}};
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "pre-window measurement grouped by the herald, "
     << header_line(cfg, d, T);
  os << "  group      records  mass      S3\n";
  for (const superswap::GroupEstimate& g : res.groups) {
    char head[64];
    std::snprintf(head, sizeof head, "  %-9s  %7llu  %-8s", g.label.c_str(),
                  static_cast<unsigned long long>(g.records),
                  fmt(g.mass, "%.4f").c_str());
    os << head << "  " << fmt_pm(g.s3, g.s3_err) << "\n";
  }
  os << "  measurement times: first = " << fmt(res.alice_time)
     << ", heralds in [" << fmt(res.herald_time_min) << ", "
     << fmt(res.herald_time_max) << "], partner readout = "
     << fmt(res.bob_time) << "\n";
  return os.str();
}

std::string render_validation(const superswap::ValidationReport& report,
                              const std::string& format) {
  if (format == "json") {
    nlohmann::json j;
    j["version"] = "0.1.0";
    j["experiment"] = "validate";
    j["checks"] = nlohmann::json::array();
    for (const superswap::ValidationCheck& c : report.checks)
      j["checks"].push_back({{"name", c.name},
                             {"passed", c.passed},
                             {"value", c.value},
                             {"bound", c.bound}});
    j["all_passed"] = report.all_passed();
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  for (const superswap::ValidationCheck& c : report.checks)
    os << (c.passed ? "PASS" : "FAIL") << "  " << c.name << "  ("
       << fmt(c.value, "%.3g") << " vs bound " << fmt(c.bound, "%.3g")
       << ")\n";
  os << (report.all_passed() ? "all checks passed"
                             : "one or more checks FAILED")
     << "\n";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Entanglement swapping from collective decay: sweeps, record sorting, "
      "validation"};
  app.require_subcommand(1);

  CliOptions opt;
  app.add_option("--config", opt.config, "key = value configuration file");
  app.add_option("--gamma", opt.gamma, "single-atom decay rate");
  app.add_option("--d", opt.d,
                 "atom separation over wavelength (x | a,b,c | lo:hi:step | "
                 "lo:hi:n:log)");
  app.add_option("--T", opt.T, "detection window length (same grammar)");
  app.add_option("--eta", opt.eta, "detector efficiency (same grammar)");
  app.add_option("--trajectories", opt.trajectories,
                 "sampled trajectories per point");
  app.add_option("--seed", opt.seed, "base random seed");
  app.add_option("--mode", opt.mode, "analytic | mc | both");
  app.add_option("--workers", opt.workers, "worker threads (0 = all cores)");
  app.add_option("--out", opt.out, "output file (stdout if omitted)");
  app.add_option("--format", opt.format, "csv | json | text")
      ->check(CLI::IsMember({"csv", "json", "text"}));

  CLI::App* sweep_d = app.add_subcommand(
      "sweep-distance", "witnesses across the separation grid");
  CLI::App* sweep_t =
      app.add_subcommand("sweep-time", "witnesses across the window grid");
  CLI::App* delayed = app.add_subcommand(
      "delayed-choice", "sort pre-recorded outcomes by the late herald");
  CLI::App* steer = app.add_subcommand(
      "steer-past", "group a pre-window measurement by the later herald");
  CLI::App* check = app.add_subcommand(
      "validate", "cross-check sampler, closed form, and witnesses");
  for (CLI::App* sub : {sweep_d, sweep_t, delayed, steer, check})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    superswap::ExperimentConfig cfg = build_config(opt);
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&t0] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           t0)
          .count();
    };

    if (sweep_d->parsed() || sweep_t->parsed()) {
      const std::vector<superswap::ResultRow> rows =
          sweep_d->parsed() ? superswap::sweep_distance(cfg)
                            : superswap::sweep_time(cfg);
      const std::string format = opt.format.empty() ? "csv" : opt.format;
      if (format == "csv") {
        std::ostringstream os;
        superswap::write_csv(rows, os);
        return emit(os.str(), opt.out);
      }
      if (format == "json")
        return emit(superswap::to_json(rows, cfg, elapsed()) + "\n", opt.out);
      throw std::invalid_argument("sweeps support csv or json output");
    }

    if (delayed->parsed() || steer->parsed()) {
      const double d = require_single(cfg.d_values, "distance");
      const double T = require_single(cfg.t_values, "window length");
      require_single(cfg.eta_values, "efficiency");
      const std::string format = opt.format.empty() ? "text" : opt.format;
      if (format == "csv")
        throw std::invalid_argument(
            "record-sorting experiments support text or json output");
      if (delayed->parsed()) {
        const superswap::DelayedChoiceResult res =
            superswap::delayed_choice_experiment(cfg, d, T);
        return emit(render_delayed(res, cfg, d, T, format, elapsed()),
                    opt.out);
      }
      const superswap::ThreeTimeResult res =
          superswap::steering_into_past_experiment(cfg, d, T);
      return emit(render_three_time(res, cfg, d, T, format, elapsed()),
                  opt.out);
    }

    // validate
    const superswap::ValidationReport report =
        superswap::validate(cfg.workers);
    const std::string format = opt.format.empty() ? "text" : opt.format;
    if (format == "csv")
      throw std::invalid_argument("validation supports text or json output");
    const int rc = emit(render_validation(report, format), opt.out);
    if (rc != 0) return rc;
    return report.all_passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
