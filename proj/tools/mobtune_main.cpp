// Command-line driver: runs tuning sessions from a JSON manifest, renders
// reports from recorded histories, and exports plot-ready tables.
//
// Exit codes: 0 success, 1 usage or manifest error, 2 runtime failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobtune/backends.hpp"
#include "mobtune/config_space.hpp"
#include "mobtune/history.hpp"
#include "mobtune/log.hpp"
#include "mobtune/report.hpp"
#include "mobtune/tuner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Manifest problems are user input errors (exit 1), unlike failures that
// happen mid-run (exit 2).
struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Manifest {
  std::string space_path;
  std::string backend_kind;  // "simulated" or "command"
  mobtune::SimSpec sim_spec;
  std::string command;
  mobtune::TunerConfig tuner;
  std::string output_dir;
};

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k) ok = true;
    if (!ok) throw ManifestError("unknown key '" + item.key() + "' in " + where);
  }
}

json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ManifestError(std::string("cannot open ") + what + ": " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ManifestError(std::string("cannot parse ") + what + " " + path + ": " + e.what());
  }
  return j;
}

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw ManifestError(std::string(what) + " does not exist: " + path);
}

Manifest parse_manifest(const std::string& path) {
  const json j = load_json_file(path, "manifest");
  if (!j.is_object()) throw ManifestError("manifest must be a JSON object");
  reject_unknown_keys(j,
                      {"space", "backend", "objective", "max_iterations", "eval_timeout_s",
                       "window", "acquisition", "constraint", "constraint_anchor",
                       "bootstrap_history", "rng_seed", "output_dir"},
                      "manifest");

  Manifest m;
  try {
    m.space_path = j.at("space").get<std::string>();
    m.output_dir = j.at("output_dir").get<std::string>();

    const json& jb = j.at("backend");
    reject_unknown_keys(jb, {"kind", "noise_sigma", "seed", "scales", "command"},
                        "manifest backend");
    m.backend_kind = jb.at("kind").get<std::string>();
    if (m.backend_kind == "simulated") {
      m.sim_spec.noise_sigma = jb.value("noise_sigma", 0.0);
      m.sim_spec.seed = jb.value("seed", uint64_t{0});
      if (jb.contains("scales")) {
        for (const auto& item : jb.at("scales").items()) {
          mobtune::SimTypeScales s;
          s.speed = item.value().value("speed", 1.0);
          s.recall = item.value().value("recall", 1.0);
          m.sim_spec.scales[item.key()] = s;
        }
      }
      if (m.sim_spec.noise_sigma < 0.0) throw ManifestError("backend noise_sigma must be >= 0");
    } else if (m.backend_kind == "command") {
      m.command = jb.at("command").get<std::string>();
      if (m.command.empty()) throw ManifestError("backend command must be non-empty");
    } else {
      throw ManifestError("backend kind must be 'simulated' or 'command', got '" +
                          m.backend_kind + "'");
    }

    if (j.contains("objective")) {
      const json& jo = j.at("objective");
      reject_unknown_keys(jo, {"speed", "eta"}, "manifest objective");
      if (jo.contains("speed"))
        m.tuner.objective.speed_objective =
            mobtune::speed_objective_from_name(jo.at("speed").get<std::string>());
      m.tuner.objective.eta = jo.value("eta", 1.0);
    }
    if (j.contains("acquisition")) {
      const json& ja = j.at("acquisition");
      reject_unknown_keys(ja, {"mc_samples", "candidate_count", "ref_scale"},
                          "manifest acquisition");
      m.tuner.acquisition.mc_samples = ja.value("mc_samples", m.tuner.acquisition.mc_samples);
      m.tuner.acquisition.candidate_count =
          ja.value("candidate_count", m.tuner.acquisition.candidate_count);
      m.tuner.acquisition.ref_scale = ja.value("ref_scale", m.tuner.acquisition.ref_scale);
    }
    if (j.contains("constraint")) {
      const json& jc = j.at("constraint");
      reject_unknown_keys(jc, {"rlim"}, "manifest constraint");
      mobtune::ConstraintSpec c;
      c.rlim = jc.at("rlim").get<double>();
      m.tuner.constraint = c;
    }
    if (j.contains("constraint_anchor"))
      m.tuner.constraint_anchor = mobtune::constraint_anchor_mode_from_name(
          j.at("constraint_anchor").get<std::string>());
    if (j.contains("bootstrap_history"))
      m.tuner.bootstrap_history = j.at("bootstrap_history").get<std::string>();
    m.tuner.max_iterations = j.value("max_iterations", m.tuner.max_iterations);
    m.tuner.eval_timeout_s = j.value("eval_timeout_s", m.tuner.eval_timeout_s);
    m.tuner.window = j.value("window", m.tuner.window);
    m.tuner.rng_seed = j.value("rng_seed", uint64_t{0});
  } catch (const json::exception& e) {
    throw ManifestError(std::string("manifest field error: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ManifestError(e.what());
  }

  require_file(m.space_path, "space definition");
  if (m.tuner.bootstrap_history) require_file(*m.tuner.bootstrap_history, "bootstrap history");
  return m;
}

std::vector<double> parse_sacrifice_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != tok.size() || v < 0.0 || v > 1.0)
      throw ManifestError("sacrifice thresholds must be fractions in [0, 1], got '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ManifestError("sacrifice list is empty");
  return out;
}

int cmd_tune(const std::string& manifest_path) {
  const Manifest m = parse_manifest(manifest_path);

  mobtune::ConfigSpace space = mobtune::ConfigSpace::load(m.space_path);
  std::shared_ptr<mobtune::Backend> backend;
  if (m.backend_kind == "simulated")
    backend = std::make_shared<mobtune::SimulatedBackend>(space, m.sim_spec);
  else
    backend = std::make_shared<mobtune::CommandBackend>(m.command);

  fs::create_directories(m.output_dir);
  const std::string history_path = (fs::path(m.output_dir) / "history.jsonl").string();
  const std::string report_path = (fs::path(m.output_dir) / "report.txt").string();

  mobtune::Tuner tuner(space, backend, m.tuner);
  mobtune::HistoryWriter writer(history_path,
                                mobtune::HistoryHeader{space.fingerprint(), m.tuner.objective});
  tuner.set_observer([&writer](const mobtune::ObservationRecord& rec,
                               const std::optional<mobtune::ScoreRecord>& scores) {
    if (scores) writer.append_scores(*scores);
    writer.append_observation(rec);
  });
  tuner.run();

  const mobtune::HistoryData data = mobtune::load_history(history_path, space.fingerprint());
  const auto thresholds = mobtune::default_sacrifice_thresholds();
  std::optional<double> rlim;
  if (m.tuner.constraint) rlim = m.tuner.constraint->rlim;
  const std::string report = mobtune::render_report(data, thresholds, rlim);
  std::ofstream rep(report_path);
  if (!rep) throw std::runtime_error("cannot write report: " + report_path);
  rep << report;
  rep.close();

  const auto front = mobtune::final_front(data.records);
  std::cout << "evaluations: " << tuner.live_evaluations() << "\n"
            << "front size: " << front.size() << "\n"
            << "history: " << history_path << "\n"
            << "report: " << report_path << "\n";
  return 0;
}

int cmd_report(const std::string& history_path, const std::optional<std::string>& sacrifice_csv) {
  std::vector<double> thresholds = sacrifice_csv ? parse_sacrifice_list(*sacrifice_csv)
                                                 : mobtune::default_sacrifice_thresholds();
  const mobtune::HistoryData data = mobtune::load_history(history_path);
  std::cout << mobtune::render_report(data, thresholds);
  return 0;
}

int cmd_export_plots(const std::string& history_path, const std::string& out_dir) {
  const mobtune::HistoryData data = mobtune::load_history(history_path);
  fs::create_directories(out_dir);
  mobtune::export_plot_data(data, out_dir);
  std::cout << "wrote hv.tsv, scores.tsv, front.tsv, sacrifice.tsv under " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mobtune: multi-objective configuration tuning for vector search indexes"};
  app.require_subcommand(1);

  std::string manifest_path;
  auto* tune = app.add_subcommand("tune", "run a tuning session described by a JSON manifest");
  tune->add_option("manifest", manifest_path, "path to the run manifest")->required();

  std::string history_path;
  std::string sacrifice_csv;
  auto* report = app.add_subcommand("report", "summarize a recorded history file");
  report->add_option("history", history_path, "path to a history file")->required();
  auto* sac_opt = report->add_option(
      "--sacrifice-list", sacrifice_csv,
      "comma-separated recall thresholds for the speed-vs-recall table (default 0.85..0.99)");

  std::string plots_history;
  std::string plots_dir;
  auto* plots = app.add_subcommand("export-plots", "write plot-ready TSV tables from a history");
  plots->add_option("history", plots_history, "path to a history file")->required();
  plots->add_option("outdir", plots_dir, "directory for the TSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (tune->parsed()) return cmd_tune(manifest_path);
    if (report->parsed())
      return cmd_report(history_path, *sac_opt ? std::optional<std::string>(sacrifice_csv)
                                               : std::nullopt);
    if (plots->parsed()) return cmd_export_plots(plots_history, plots_dir);
  } catch (const ManifestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
