#include "mobtune/history.hpp"

#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mobtune {
namespace {

using nlohmann::json;

json objective_vector_to_json(const ObjectiveVector& v) {
  json j = {{"speed", v.speed}, {"recall", v.recall}};
  if (v.memory.has_value()) j["memory"] = *v.memory;
  return j;
}

ObjectiveVector objective_vector_from_json(const json& j) {
  ObjectiveVector v;
  v.speed = j.at("speed").get<double>();
  v.recall = j.at("recall").get<double>();
  if (j.contains("memory")) v.memory = j.at("memory").get<double>();
  return v;
}

json config_values_to_json(const Configuration& config) {
  json values = json::object();
  for (const auto& [name, value] : config.values) {
    if (std::holds_alternative<double>(value)) {
      values[name] = std::get<double>(value);
    } else {
      values[name] = std::get<std::string>(value);
    }
  }
  return values;
}

Configuration config_from_json(const json& j) {
  Configuration c;
  c.index_type = j.at("index_type").get<std::string>();
  for (const auto& [name, value] : j.at("values").items()) {
    if (value.is_string()) {
      c.values[name] = value.get<std::string>();
    } else if (value.is_number()) {
      c.values[name] = value.get<double>();
    } else {
      throw std::runtime_error("parameter '" + name + "' has a non-scalar value");
    }
  }
  return c;
}

[[noreturn]] void fail_line(size_t line_number, const std::string& what) {
  std::ostringstream oss;
  oss << "history line " << line_number << ": " << what;
  throw std::runtime_error(oss.str());
}

}  // namespace

std::string header_to_json_line(const HistoryHeader& header) {
  json j = {{"format", kHistoryFormatName},
            {"version", kHistoryFormatVersion},
            {"space", header.space_fingerprint},
            {"objective",
             {{"speed", speed_objective_name(header.objective.speed_objective)},
              {"eta", header.objective.eta}}}};
  return j.dump();
}

std::string observation_to_json_line(const ObservationRecord& record) {
  json j = {{"kind", "obs"},
            {"iteration", record.iteration},
            {"index_type", record.config.index_type},
            {"values", config_values_to_json(record.config)},
            {"raw", objective_vector_to_json(record.raw)},
            {"transformed", objective_vector_to_json(record.transformed)},
            {"status", obs_status_name(record.status)},
            {"duration_s", record.eval_duration_s}};
  return j.dump();
}

std::string scores_to_json_line(const ScoreRecord& scores) {
  json entries = json::array();
  for (const auto& s : scores.scores) {
    entries.push_back({{"type", s.index_type}, {"score", s.score}});
  }
  json j = {{"kind", "scores"}, {"iteration", scores.iteration}, {"scores", entries}};
  if (scores.abandoned.has_value()) j["abandoned"] = *scores.abandoned;
  return j.dump();
}

HistoryWriter::HistoryWriter(const std::string& path, const HistoryHeader& header)
    : path_(path), out_(path, std::ios::out | std::ios::trunc) {
  if (!out_) {
    throw std::runtime_error("cannot open history file for writing: " + path);
  }
  out_ << header_to_json_line(header) << '\n';
  out_.flush();
}

void HistoryWriter::append_observation(const ObservationRecord& record) {
  out_ << observation_to_json_line(record) << '\n';
  out_.flush();
}

void HistoryWriter::append_scores(const ScoreRecord& scores) {
  out_ << scores_to_json_line(scores) << '\n';
  out_.flush();
}

HistoryData load_history(const std::string& path,
                         const std::optional<std::string>& expected_space_fingerprint) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open history file: " + path);
  }

  HistoryData data;
  std::string line;
  size_t line_number = 0;
  int last_obs_iteration = 0;

  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) {
      if (in.eof()) break;
      fail_line(line_number, "empty line");
    }
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail_line(line_number, "not a JSON object");

    if (line_number == 1) {
      try {
        if (j.at("format").get<std::string>() != kHistoryFormatName) {
          fail_line(line_number, "not a history file");
        }
        if (j.at("version").get<int>() != kHistoryFormatVersion) {
          fail_line(line_number,
                    "unsupported version " + j.at("version").dump());
        }
        data.header.space_fingerprint = j.at("space").get<std::string>();
        const auto& obj = j.at("objective");
        data.header.objective.speed_objective =
            speed_objective_from_name(obj.at("speed").get<std::string>());
        data.header.objective.eta = obj.at("eta").get<double>();
      } catch (const json::exception& e) {
        fail_line(line_number, std::string("bad header: ") + e.what());
      }
      if (expected_space_fingerprint.has_value() &&
          data.header.space_fingerprint != *expected_space_fingerprint) {
        throw std::runtime_error("space mismatch: history was recorded for a different space");
      }
      continue;
    }

    try {
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "obs") {
        ObservationRecord r;
        r.iteration = j.at("iteration").get<int>();
        r.config = config_from_json(j);
        r.raw = objective_vector_from_json(j.at("raw"));
        r.transformed = objective_vector_from_json(j.at("transformed"));
        r.status = obs_status_from_name(j.at("status").get<std::string>());
        r.eval_duration_s = j.at("duration_s").get<double>();
        if (r.iteration <= last_obs_iteration) {
          fail_line(line_number, "iteration out of order");
        }
        last_obs_iteration = r.iteration;
        data.records.push_back(std::move(r));
      } else if (kind == "scores") {
        ScoreRecord s;
        s.iteration = j.at("iteration").get<int>();
        for (const auto& entry : j.at("scores")) {
          s.scores.push_back(IndexScore{entry.at("type").get<std::string>(),
                                        entry.at("score").get<double>()});
        }
        if (j.contains("abandoned")) s.abandoned = j.at("abandoned").get<std::string>();
        data.scores.push_back(std::move(s));
      } else {
        fail_line(line_number, "unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      fail_line(line_number, std::string("bad record: ") + e.what());
    } catch (const std::invalid_argument& e) {
      fail_line(line_number, e.what());
    }
  }

  if (line_number == 0) {
    throw std::runtime_error("history file is empty: " + path);
  }
  return data;
}

}  // namespace mobtune
