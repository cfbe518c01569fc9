#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobtune/history.hpp"
#include "mobtune/pareto.hpp"
#include "mobtune/tuner.hpp"

namespace mobtune {

struct SacrificeRow {
  double threshold = 0.0;
  std::optional<double> max_speed;  // empty when no successful record reaches the threshold
};

struct HvPoint {
  int iteration = 0;
  double hypervolume = 0.0;
};

// Thresholds 0.85 to 0.99 in steps of 0.025.
std::vector<double> default_sacrifice_thresholds();

// Per threshold, the best transformed speed among successful observations
// whose recall meets it. Failure records never count as achieved values.
std::vector<SacrificeRow> sacrifice_table(std::span<const ObservationRecord> records,
                                          std::span<const double> thresholds);

// Hypervolume of the non-dominated front of the first k records, for each
// k, over transformed objectives with a fixed origin reference.
std::vector<HvPoint> hv_over_iterations(std::span<const ObservationRecord> records);

// Front of all transformed observations, in first-seen order.
std::vector<ObservationRecord> final_front(std::span<const ObservationRecord> records);

// Human-readable run summary: sacrifice table, global front, best-balanced
// configuration, best feasible configuration when a limit is given.
std::string render_report(const HistoryData& data, std::span<const double> thresholds,
                          const std::optional<double>& rlim = {});

// Writes hv.tsv, scores.tsv, front.tsv and sacrifice.tsv under out_dir.
void export_plot_data(const HistoryData& data, const std::string& out_dir);

}  // namespace mobtune
