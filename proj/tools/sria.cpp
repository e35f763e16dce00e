// Command-line front end: run, reproduce, certify, bias-sweep, apt.
//
// Exit codes: 0 success, 2 configuration error, 3 divergence,
// 4 band-check failure in `reproduce`, 1 anything else.

#include "sri/sri.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDiverged = 3;
constexpr int kCheckFailed = 4;

struct Overrides {
  std::string seeds;
  std::string out_dir;
  std::size_t jobs = 0;
  std::size_t iterations = 0;
};

// "10" means seeds 1..10; "3,5,8" is an explicit list.
std::vector<std::uint64_t> parse_seeds(const std::string &text) {
  std::vector<std::uint64_t> out;
  try {
    if (text.find(',') == std::string::npos) {
      const auto n = std::stoull(text);
      for (std::uint64_t s = 1; s <= n; ++s)
        out.push_back(s);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ','))
        out.push_back(std::stoull(item));
    }
  } catch (const std::exception &) {
    throw sri::ConfigError("--seeds expects a count or a comma-separated list, got '" + text +
                           "'");
  }
  return out;
}

void apply(const Overrides &o, sri::ExperimentConfig &cfg) {
  if (!o.seeds.empty())
    cfg.seeds = parse_seeds(o.seeds);
  if (!o.out_dir.empty())
    cfg.out_dir = o.out_dir;
  if (o.jobs > 0)
    cfg.jobs = o.jobs;
  if (o.iterations > 0)
    cfg.iterations = o.iterations;
  cfg.validate();
}

void print_aggregates(const sri::ExperimentResult &r) {
  for (const auto &a : r.aggregates) {
    std::cout << "lambda " << sri::format_number(a.lambda) << ": median gap "
              << sri::format_number(a.median_gap) << " [q25 " << sri::format_number(a.q25)
              << ", q75 " << sri::format_number(a.q75) << "]";
    if (a.diverged)
      std::cout << ", " << a.diverged << " diverged";
    std::cout << '\n';
  }
  for (const auto &w : r.warnings)
    std::cerr << "warning: " << w << '\n';
  for (const auto &f : r.files)
    std::cout << "wrote " << f << '\n';
}

bool any_diverged(const sri::ExperimentResult &r) {
  for (const auto &a : r.aggregates)
    if (a.diverged)
      return true;
  return false;
}

void write_json(const std::string &dir, const std::string &name, const nlohmann::json &j) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  sri::write_text_file(path, j.dump(2) + "\n");
  std::cout << "wrote " << path << '\n';
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Stochastic recursive inclusion toolkit"};
  app.require_subcommand(1);
  Overrides o;
  auto add_flags = [&o](CLI::App *sub) {
    sub->add_option("--seeds", o.seeds, "seed count (1..N) or comma-separated list");
    sub->add_option("--out-dir", o.out_dir, "output directory");
    sub->add_option("--jobs", o.jobs, "worker threads");
    sub->add_option("--iterations", o.iterations, "iterations per run");
  };

  std::string config_path, preset_name;
  auto *run = app.add_subcommand("run", "run the (lambda x seed) grid of a config");
  run->add_option("config", config_path, "JSON config")->required();
  add_flags(run);
  auto *repro = app.add_subcommand("reproduce", "run a benchmark preset and its band checks");
  repro->add_option("preset", preset_name, "fig1 or fig2")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2"}));
  add_flags(repro);
  auto *cert = app.add_subcommand("certify", "numerically check the stability assumptions");
  cert->add_option("config", config_path, "JSON config")->required();
  add_flags(cert);
  auto *sweep = app.add_subcommand("bias-sweep", "measure estimator bias and second moment");
  sweep->add_option("config", config_path, "JSON config")->required();
  add_flags(sweep);
  auto *apt = app.add_subcommand("apt", "pseudo-trajectory deviation and certificates");
  apt->add_option("config", config_path, "JSON config")->required();
  add_flags(apt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      auto cfg = sri::load_config(config_path);
      apply(o, cfg);
      const auto r = sri::run_experiment(cfg);
      print_aggregates(r);
      return any_diverged(r) ? kDiverged : kOk;
    }
    if (*repro) {
      auto cfg = sri::preset(preset_name);
      apply(o, cfg);
      const auto r = sri::run_experiment(cfg);
      print_aggregates(r);
      const auto checks = sri::preset_checks(preset_name, r);
      nlohmann::json jc = nlohmann::json::array();
      for (const auto &c : checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
        jc.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
      }
      write_json(cfg.out_dir, "checks.json", jc);
      if (any_diverged(r))
        return kDiverged;
      return sri::all_passed(checks) ? kOk : kCheckFailed;
    }
    if (*cert) {
      auto cfg = sri::load_config(config_path);
      apply(o, cfg);
      const auto report = sri::certify_report(cfg);
      for (const auto &r : report.at("reports"))
        std::cout << r.at("summary").get<std::string>() << '\n';
      write_json(cfg.out_dir, "certify.json", report);
      return kOk;
    }
    if (*sweep) {
      auto cfg = sri::load_config(config_path);
      apply(o, cfg);
      const auto r = sri::bias_sweep(cfg);
      for (const auto &row : r.rows)
        std::cout << "lambda " << sri::format_number(row.lambda) << ": bias "
                  << sri::format_number(row.bias_norm) << " (se "
                  << sri::format_number(row.bias_se) << "), second moment "
                  << sri::format_number(row.second_moment) << '\n';
      std::filesystem::create_directories(cfg.out_dir);
      const std::string csv = (std::filesystem::path(cfg.out_dir) / "bias_sweep.csv").string();
      sri::write_text_file(csv, sri::bias_sweep_csv(r));
      std::cout << "wrote " << csv << '\n';
      write_json(cfg.out_dir, "bias_sweep.json", sri::to_json(r));
      return kOk;
    }
    if (*apt) {
      auto cfg = sri::load_config(config_path);
      apply(o, cfg);
      write_json(cfg.out_dir, "apt.json", sri::apt_report(cfg));
      return kOk;
    }
  } catch (const sri::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const sri::DivergenceError &e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
