#include "mobtune/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mobtune {
namespace {

std::string num(double v, const char* fmt = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::string tsv_num(double v) { return num(v, "%.17g"); }

bool dominated_or_duplicate(std::span<const ObservationRecord> records, size_t i) {
  const auto& yi = records[i].transformed;
  for (size_t j = 0; j < records.size(); ++j) {
    if (j == i) continue;
    const auto& yj = records[j].transformed;
    if (dominates(yj, yi)) return true;
    if (j < i && yj.speed == yi.speed && yj.recall == yi.recall) return true;
  }
  return false;
}

std::string config_values_line(const Configuration& config) {
  std::ostringstream oss;
  bool first = true;
  for (const auto& [name, value] : config.values) {
    if (!first) oss << ", ";
    first = false;
    oss << name << '=';
    if (std::holds_alternative<double>(value)) {
      oss << num(std::get<double>(value));
    } else {
      oss << std::get<std::string>(value);
    }
  }
  return oss.str();
}

}  // namespace

std::vector<double> default_sacrifice_thresholds() {
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double t = 0.85 + 0.025 * k;
    if (t > 0.99) break;
    out.push_back(t);
  }
  return out;
}

std::vector<SacrificeRow> sacrifice_table(std::span<const ObservationRecord> records,
                                          std::span<const double> thresholds) {
  std::vector<SacrificeRow> rows;
  rows.reserve(thresholds.size());
  for (const double t : thresholds) {
    SacrificeRow row;
    row.threshold = t;
    for (const auto& r : records) {
      if (r.status != ObsStatus::Ok) continue;
      if (r.transformed.recall < t) continue;
      if (!row.max_speed.has_value() || r.transformed.speed > *row.max_speed) {
        row.max_speed = r.transformed.speed;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<HvPoint> hv_over_iterations(std::span<const ObservationRecord> records) {
  std::vector<HvPoint> out;
  out.reserve(records.size());
  std::vector<ObjectiveVector> seen;
  seen.reserve(records.size());
  const ReferencePoint origin{0.0, 0.0};
  for (const auto& r : records) {
    seen.push_back(r.transformed);
    const auto front = nondominated_front(seen);
    out.push_back(HvPoint{r.iteration, hypervolume_2d(front, origin)});
  }
  return out;
}

std::vector<ObservationRecord> final_front(std::span<const ObservationRecord> records) {
  std::vector<ObservationRecord> out;
  for (size_t i = 0; i < records.size(); ++i) {
    if (!dominated_or_duplicate(records, i)) out.push_back(records[i]);
  }
  return out;
}

std::string render_report(const HistoryData& data, std::span<const double> thresholds,
                          const std::optional<double>& rlim) {
  const auto& records = data.records;
  std::ostringstream oss;

  int ok = 0, timeout = 0, crash = 0, imputed = 0;
  for (const auto& r : records) {
    switch (r.status) {
      case ObsStatus::Ok: ++ok; break;
      case ObsStatus::Timeout: ++timeout; break;
      case ObsStatus::Crash: ++crash; break;
      case ObsStatus::Imputed: ++imputed; break;
    }
  }
  oss << "run summary\n";
  oss << "  records: " << records.size() << " (ok " << ok << ", timeout " << timeout
      << ", crash " << crash << ", imputed " << imputed << ")\n";
  oss << "  objective: " << speed_objective_name(data.header.objective.speed_objective)
      << " (eta " << num(data.header.objective.eta) << ")\n\n";

  oss << "recall sacrifice table\n";
  oss << "  threshold  best speed\n";
  for (const auto& row : sacrifice_table(records, thresholds)) {
    oss << "  " << num(row.threshold, "%-9.3f") << "  ";
    oss << (row.max_speed.has_value() ? num(*row.max_speed) : std::string("none")) << "\n";
  }
  oss << "\n";

  const auto front = final_front(records);
  oss << "global pareto front (" << front.size() << " entries)\n";
  oss << "  speed  recall  memory  index_type  iteration\n";
  for (const auto& r : front) {
    oss << "  " << num(r.transformed.speed) << "  " << num(r.transformed.recall) << "  "
        << (r.transformed.memory.has_value() ? num(*r.transformed.memory) : std::string("-"))
        << "  " << r.config.index_type << "  " << r.iteration << "\n";
  }
  oss << "\n";

  if (!front.empty()) {
    std::vector<ObjectiveVector> objs;
    for (const auto& r : front) objs.push_back(r.transformed);
    const auto anchor = balanced_anchor(objs);
    const ObservationRecord* pick = nullptr;
    for (const auto& r : front) {
      if (r.transformed.speed == anchor.speed && r.transformed.recall == anchor.recall) {
        pick = &r;
        break;
      }
    }
    if (pick != nullptr) {
      oss << "best balanced configuration\n";
      oss << "  " << pick->config.index_type << " @ iteration " << pick->iteration
          << ": speed " << num(pick->transformed.speed) << ", recall "
          << num(pick->transformed.recall) << "\n";
      oss << "  " << config_values_line(pick->config) << "\n\n";
    }
  }

  if (rlim.has_value()) {
    const ObservationRecord* best = nullptr;
    for (const auto& r : records) {
      if (r.status != ObsStatus::Ok || r.transformed.recall <= *rlim) continue;
      if (best == nullptr || r.transformed.speed > best->transformed.speed) best = &r;
    }
    oss << "constraint (recall > " << num(*rlim) << ")\n";
    if (best == nullptr) {
      oss << "  no feasible configuration found\n";
    } else {
      oss << "  best feasible: " << best->config.index_type << " @ iteration "
          << best->iteration << ", speed " << num(best->transformed.speed) << ", recall "
          << num(best->transformed.recall) << "\n";
      oss << "  " << config_values_line(best->config) << "\n";
    }
  }
  return oss.str();
}

void export_plot_data(const HistoryData& data, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + out_dir + ": " + ec.message());
  }
  auto open = [&](const char* name) {
    std::ofstream f(fs::path(out_dir) / name);
    if (!f) throw std::runtime_error(std::string("cannot write ") + name + " in " + out_dir);
    return f;
  };

  {
    auto f = open("hv.tsv");
    f << "iteration\thypervolume\n";
    for (const auto& p : hv_over_iterations(data.records)) {
      f << p.iteration << '\t' << tsv_num(p.hypervolume) << '\n';
    }
  }
  {
    auto f = open("scores.tsv");
    f << "iteration\tindex_type\tscore\tabandoned\n";
    for (const auto& s : data.scores) {
      for (const auto& entry : s.scores) {
        const bool was_abandoned = s.abandoned.has_value() && *s.abandoned == entry.index_type;
        f << s.iteration << '\t' << entry.index_type << '\t' << tsv_num(entry.score) << '\t'
          << (was_abandoned ? "1" : "0") << '\n';
      }
    }
  }
  {
    auto f = open("front.tsv");
    f << "speed\trecall\tmemory\tindex_type\titeration\n";
    for (const auto& r : final_front(data.records)) {
      f << tsv_num(r.transformed.speed) << '\t' << tsv_num(r.transformed.recall) << '\t'
        << (r.transformed.memory.has_value() ? tsv_num(*r.transformed.memory) : std::string())
        << '\t' << r.config.index_type << '\t' << r.iteration << '\n';
    }
  }
  {
    auto f = open("sacrifice.tsv");
    f << "threshold\tbest_speed\n";
    const auto thresholds = default_sacrifice_thresholds();
    for (const auto& row : sacrifice_table(data.records, thresholds)) {
      f << tsv_num(row.threshold) << '\t'
        << (row.max_speed.has_value() ? tsv_num(*row.max_speed) : std::string()) << '\n';
    }
  }
}

}  // namespace mobtune
