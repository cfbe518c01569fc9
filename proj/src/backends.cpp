#include "mobtune/backends.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mobtune/log.hpp"
#include "mobtune/rng.hpp"

namespace mobtune {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Shared system factor: throughput degrades when segments are sealed too
// late relative to their size.
double system_factor(double useg, double useal) {
  return 0.5 + 0.5 * sigmoid(8.0 * (useal - (0.95 - 0.8 * useg)));
}

struct SimPoint {
  double speed = 0.0;
  double recall = 0.0;
  double memory = 0.0;
};

SimPoint eval_graph_index(double um, double uef, double useg, double useal) {
  const double sys = system_factor(useg, useal);
  SimPoint p;
  p.recall = 1.0 - 0.95 * std::exp(-(3.0 * uef + 1.2 * um));
  p.speed = 1200.0 * (1.0 - 0.55 * uef) * (1.0 - 0.25 * um) * sys;
  p.memory = 2.0 + 6.0 * useg + 1.5 * um;
  return p;
}

SimPoint eval_flat_index(double ul, double up, double useg, double useal) {
  const double sys = system_factor(useg, useal);
  SimPoint p;
  p.recall = std::min(1.0, std::pow(0.05 + 0.95 * up, 0.4) * (0.8 + 0.2 * ul));
  p.speed = 1500.0 * (1.0 - 0.7 * up) * (0.6 + 0.4 * ul) * sys;
  p.memory = 2.0 + 6.0 * useg + 0.8 * ul;
  return p;
}

SimPoint eval_quantized_index(double um, double ub, double up, double useg, double useal) {
  const double sys = system_factor(useg, useal);
  SimPoint p;
  p.recall = (0.5 + 0.5 * ub) * std::pow(0.05 + 0.95 * up, 0.5) * (0.7 + 0.3 * um);
  p.speed = 2000.0 * (1.0 - 0.6 * up) * (1.0 - 0.3 * ub) * (1.0 - 0.2 * um) * sys;
  p.memory = 2.0 + 6.0 * useg + 0.5 * um;
  return p;
}

SimPoint eval_sim_units(const std::string& type, const std::map<std::string, double>& u) {
  const double useg = u.at("segment_maxSize");
  const double useal = u.at("segment_sealProportion");
  if (type == "HNSW") {
    return eval_graph_index(u.at("M"), u.at("efConstruction"), useg, useal);
  }
  if (type == "IVF_FLAT") {
    return eval_flat_index(u.at("nlist"), u.at("nprobe"), useg, useal);
  }
  if (type == "IVF_PQ") {
    return eval_quantized_index(u.at("m"), u.at("nbits"), u.at("pq_nprobe"), useg, useal);
  }
  throw std::invalid_argument("simulated workload has no model for index type '" + type + "'");
}

void apply_scales(SimPoint& p, const SimSpec& spec, const std::string& type) {
  auto it = spec.scales.find(type);
  if (it == spec.scales.end()) return;
  p.speed *= it->second.speed;
  p.recall = clamp01(p.recall * it->second.recall);
}

// Stable digest of a configuration so noise draws repeat exactly for the
// same point regardless of evaluation order.
uint64_t config_digest(const Configuration& config) {
  std::ostringstream oss;
  oss << config.index_type;
  for (const auto& [name, value] : config.values) {
    oss << '|' << name << '=';
    if (std::holds_alternative<double>(value)) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%a", std::get<double>(value));
      oss << buf;
    } else {
      oss << std::get<std::string>(value);
    }
  }
  const std::string s = oss.str();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void apply_noise(SimPoint& p, const SimSpec& spec, const Configuration& config) {
  if (spec.noise_sigma <= 0.0) return;
  Rng rng(mix_seed(config_digest(config), spec.seed));
  const auto [es, er] = rng.normal_pair();
  const auto [em, eu] = rng.normal_pair();
  (void)eu;
  p.speed = std::max(0.0, p.speed * (1.0 + spec.noise_sigma * es));
  p.recall = clamp01(p.recall * (1.0 + spec.noise_sigma * er));
  p.memory = std::max(0.0, p.memory * (1.0 + spec.noise_sigma * em));
}

void require_demo_space(const ConfigSpace& space) {
  static const std::string expected = demo_space().fingerprint();
  if (space.fingerprint() != expected) {
    throw std::invalid_argument(
        "simulated backend only models the built-in demo space; "
        "got a space with a different layout");
  }
}

}  // namespace

EvaluationResult simulated_evaluate(const ConfigSpace& space, const EvaluationRequest& req,
                                    const SimSpec& spec) {
  require_demo_space(space);
  const auto violations = space.validate(req.config);
  if (!violations.empty()) {
    std::ostringstream oss;
    oss << "invalid configuration for simulated evaluation: ";
    for (size_t i = 0; i < violations.size(); ++i) {
      if (i) oss << "; ";
      oss << violations[i];
    }
    throw std::invalid_argument(oss.str());
  }

  std::map<std::string, double> units;
  for (const auto& def : space.params()) {
    if (!space.is_active(def.name, req.config.index_type)) continue;
    units[def.name] = space.unit_value(req.config, def.name);
  }
  SimPoint p = eval_sim_units(req.config.index_type, units);
  apply_scales(p, spec, req.config.index_type);
  apply_noise(p, spec, req.config);

  EvaluationResult out;
  out.status = EvalStatus::Ok;
  out.speed = p.speed;
  out.recall = p.recall;
  out.memory = p.memory;
  out.duration_s = 0.0;
  return out;
}

SimulatedBackend::SimulatedBackend(ConfigSpace space, SimSpec spec)
    : space_(std::move(space)), spec_(std::move(spec)) {
  require_demo_space(space_);
}

EvaluationResult SimulatedBackend::evaluate(const EvaluationRequest& req) {
  return simulated_evaluate(space_, req, spec_);
}

std::vector<ObjectiveVector> true_pareto_grid(const ConfigSpace& space, const SimSpec& spec,
                                              int grid_per_dim,
                                              std::span<const std::string> types) {
  require_demo_space(space);
  if (spec.noise_sigma != 0.0) {
    throw std::invalid_argument("reference front sweep requires a noiseless simulator spec");
  }
  if (grid_per_dim < 2) {
    throw std::invalid_argument("reference front sweep needs at least 2 grid points per axis");
  }

  std::vector<std::string> selected;
  if (types.empty()) {
    for (const auto& def : space.index_types()) selected.push_back(def.name);
  } else {
    selected.assign(types.begin(), types.end());
    for (const auto& t : selected) {
      if (!space.has_index_type(t)) {
        throw std::invalid_argument("unknown index type in sweep selection: '" + t + "'");
      }
    }
  }

  // Active axes per type, in declaration order.
  std::vector<std::vector<std::string>> axes;
  double total = 0.0;
  for (const auto& t : selected) {
    std::vector<std::string> dims;
    for (const auto& def : space.params()) {
      if (space.is_active(def.name, t)) dims.push_back(def.name);
    }
    total += std::pow(static_cast<double>(grid_per_dim), static_cast<double>(dims.size()));
    axes.push_back(std::move(dims));
  }
  if (total > 1e7) {
    std::ostringstream oss;
    oss << "reference front sweep would need " << static_cast<long long>(total)
        << " evaluations; the cap is 10000000";
    throw std::invalid_argument(oss.str());
  }

  constexpr size_t kChunk = 200000;
  std::vector<ObjectiveVector> acc;
  std::vector<ObjectiveVector> buffer;
  buffer.reserve(kChunk + 1024);
  auto flush = [&] {
    if (buffer.empty()) return;
    buffer.insert(buffer.end(), acc.begin(), acc.end());
    acc = nondominated_front(buffer);
    buffer.clear();
  };

  const double denom = static_cast<double>(grid_per_dim - 1);
  for (size_t ti = 0; ti < selected.size(); ++ti) {
    const auto& type = selected[ti];
    const auto& dims = axes[ti];
    std::vector<int> idx(dims.size(), 0);
    std::map<std::string, double> units;
    for (const auto& d : dims) units[d] = 0.0;
    bool done = dims.empty();
    while (!done) {
      for (size_t k = 0; k < dims.size(); ++k) units[dims[k]] = idx[k] / denom;
      SimPoint p = eval_sim_units(type, units);
      apply_scales(p, spec, type);
      buffer.push_back(ObjectiveVector{p.speed, p.recall, p.memory});
      if (buffer.size() >= kChunk) flush();
      size_t k = 0;
      while (k < dims.size()) {
        if (++idx[k] < grid_per_dim) break;
        idx[k] = 0;
        ++k;
      }
      done = (k == dims.size());
    }
  }
  flush();
  return nondominated_front(acc);
}

namespace {

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    struct sigaction sa;
    std::memset(&sa, 0, sizeof(sa));
    sa.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &sa, nullptr);
  });
}

std::string request_json_line(const Configuration& config) {
  nlohmann::json values = nlohmann::json::object();
  for (const auto& [name, value] : config.values) {
    if (std::holds_alternative<double>(value)) {
      values[name] = std::get<double>(value);
    } else {
      values[name] = std::get<std::string>(value);
    }
  }
  nlohmann::json req = {{"index_type", config.index_type}, {"values", values}};
  return req.dump() + "\n";
}

bool parse_response_line(const std::string& output, EvaluationResult& out) {
  const size_t eol = output.find('\n');
  const std::string line = (eol == std::string::npos) ? output : output.substr(0, eol);
  const auto parsed = nlohmann::json::parse(line, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return false;
  if (!parsed.contains("speed") || !parsed["speed"].is_number()) return false;
  if (!parsed.contains("recall") || !parsed["recall"].is_number()) return false;
  if (parsed.contains("status") && parsed["status"] != "ok") return false;
  out.speed = parsed["speed"].get<double>();
  out.recall = parsed["recall"].get<double>();
  if (parsed.contains("memory") && parsed["memory"].is_number()) {
    out.memory = parsed["memory"].get<double>();
  }
  return true;
}

}  // namespace

EvaluationResult external_command_evaluate(const EvaluationRequest& req,
                                           const std::string& command) {
  if (req.timeout_s <= 0.0) {
    throw std::invalid_argument("evaluation timeout must be positive");
  }
  ignore_sigpipe_once();

  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0) {
    throw std::runtime_error("failed to create pipe for evaluation command");
  }
  if (pipe(from_child) != 0) {
    close(to_child[0]);
    close(to_child[1]);
    throw std::runtime_error("failed to create pipe for evaluation command");
  }

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) {
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    throw std::runtime_error("failed to fork evaluation command");
  }
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }

  close(to_child[0]);
  close(from_child[1]);

  const std::string request = request_json_line(req.config);
  size_t written = 0;
  while (written < request.size()) {
    const ssize_t n = write(to_child[1], request.data() + written, request.size() - written);
    if (n <= 0) break;  // child may exit without reading; its output still decides
    written += static_cast<size_t>(n);
  }
  close(to_child[1]);

  auto elapsed_s = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  EvaluationResult out;
  std::string output;
  bool timed_out = false;
  bool eof = false;
  char buf[4096];
  while (!eof) {
    const double remaining = req.timeout_s - elapsed_s();
    if (remaining <= 0.0) {
      timed_out = true;
      break;
    }
    struct pollfd pfd;
    pfd.fd = from_child[0];
    pfd.events = POLLIN;
    const int wait_ms = std::max(1, std::min(100, static_cast<int>(remaining * 1000.0)));
    const int pr = poll(&pfd, 1, wait_ms);
    if (pr < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (pr == 0) continue;
    const ssize_t n = read(from_child[0], buf, sizeof(buf));
    if (n > 0) {
      output.append(buf, static_cast<size_t>(n));
    } else {
      eof = true;
    }
  }
  close(from_child[0]);

  int wstatus = 0;
  bool exited = false;
  while (!timed_out) {
    const pid_t w = waitpid(pid, &wstatus, WNOHANG);
    if (w == pid) {
      exited = true;
      break;
    }
    if (w < 0) break;
    if (req.timeout_s - elapsed_s() <= 0.0) {
      timed_out = true;
      break;
    }
    struct timespec ts{0, 2000000};
    nanosleep(&ts, nullptr);
  }
  if (timed_out) {
    kill(pid, SIGKILL);
    waitpid(pid, &wstatus, 0);
    out.status = EvalStatus::Timeout;
    out.duration_s = elapsed_s();
    log_info("evaluation command timed out after " + std::to_string(req.timeout_s) + "s");
    return out;
  }

  out.duration_s = elapsed_s();
  const bool clean_exit = exited && WIFEXITED(wstatus) && WEXITSTATUS(wstatus) == 0;
  if (clean_exit && parse_response_line(output, out)) {
    out.status = EvalStatus::Ok;
  } else {
    out.status = EvalStatus::Crash;
    log_info("evaluation command failed (exit or malformed output)");
  }
  return out;
}

}  // namespace mobtune
