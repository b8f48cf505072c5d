// Copyright 2026 The dfcast Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dfcast/scenario.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "dfcast/transcript.h"
#include "json.hpp"

namespace dfcast {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::kConfigError, what);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent streams per player derived from the scenario seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t player) {
  return splitmix64(seed ^ splitmix64(player));
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double to_double(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    const double x = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(x)) throw std::invalid_argument(text);
    return x;
  } catch (const std::exception&) {
    config_error("bad number '" + text + "' in " + context);
  }
}

std::uint64_t to_u64(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    if (text.empty() || text[0] == '-') throw std::invalid_argument(text);
    const auto x = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return x;
  } catch (const std::exception&) {
    config_error("bad integer '" + text + "' in " + context);
  }
}

std::vector<double> to_doubles(const std::string& list, const std::string& context) {
  std::vector<double> out;
  for (const auto& item : split(list, ',')) out.push_back(to_double(item, context));
  return out;
}

// "key=v1,v2,key2=v3" -> map of comma lists; a bare list goes to "".
std::vector<std::pair<std::string, std::string>> key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    } else if (!out.empty()) {
      out.back().second += "," + item;
    } else {
      out.emplace_back("", item);
    }
  }
  return out;
}

std::string head_of(const std::string& descriptor, std::string* rest) {
  const auto colon = descriptor.find(':');
  if (colon == std::string::npos) {
    rest->clear();
    return descriptor;
  }
  *rest = descriptor.substr(colon + 1);
  return descriptor.substr(0, colon);
}

// --- JSON helpers -----------------------------------------------------------

double get_number(const json& j, const char* key, double fallback, bool required = false) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (required) config_error(std::string("missing key '") + key + "'");
    return fallback;
  }
  if (!it->is_number()) config_error(std::string("'") + key + "' must be a number");
  return it->get<double>();
}

std::int64_t get_integer(const json& j, const char* key, std::int64_t fallback,
                         bool required = false) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (required) config_error(std::string("missing key '") + key + "'");
    return fallback;
  }
  if (!it->is_number_integer()) config_error(std::string("'") + key + "' must be an integer");
  return it->get<std::int64_t>();
}

std::string get_string(const json& j, const char* key, const std::string& fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string()) config_error(std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

EpsSchedule parse_schedule(const json& j) {
  if (j.is_number()) return EpsSchedule::constant(j.get<double>());
  if (!j.is_object()) config_error("'eps_n' must be a number or an object");
  const std::string kind = get_string(j, "kind", "");
  if (kind == "constant") return EpsSchedule::constant(get_number(j, "c", 0.0, true));
  if (kind == "geometric") {
    return EpsSchedule::geometric(get_number(j, "a", 0.0, true), get_number(j, "r", 0.0, true),
                                  get_number(j, "floor", 0.0));
  }
  config_error("eps_n kind must be 'constant' or 'geometric'");
}

template <typename T, typename Fn>
std::vector<T> grid_list(const json& grid, const char* key, T fallback, Fn convert,
                         std::vector<std::string>* warnings) {
  auto it = grid.find(key);
  if (it == grid.end()) return {fallback};
  if (!it->is_array() || it->empty()) {
    config_error(std::string("grid '") + key + "' must be a nonempty array");
  }
  std::vector<T> out;
  for (const auto& v : *it) {
    const T x = convert(v);
    if (std::find(out.begin(), out.end(), x) != out.end()) {
      warnings->push_back(std::string("duplicate grid value in '") + key + "' dropped");
      continue;
    }
    out.push_back(x);
  }
  return out;
}

std::string number_text(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_text(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

ScenarioConfig parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw Error(ErrorCode::kConfigError,
                "config line " + std::to_string(line) + ": " + e.what(), line);
  }
  if (!j.is_object()) config_error("config must be a JSON object");

  static const std::set<std::string> known = {
      "game", "M", "N", "eps", "eps_c", "eps_n", "sceptic", "reality", "rng", "forecaster",
      "seed", "k0", "kmax", "exhaustive_cells", "beam_width", "enforce_nonnegative", "grid",
      "max_runs"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) config_error("unknown key '" + item.key() + "'");
  }

  ScenarioConfig c;
  GameConfig& g = c.game;
  const std::string game = get_string(j, "game", "randomized");
  if (game == "continuous") {
    g.game = GameType::kContinuous;
  } else if (game == "randomized") {
    g.game = GameType::kRandomized;
  } else {
    config_error("game must be 'continuous' or 'randomized'");
  }
  const auto m = get_integer(j, "M", 2);
  if (m < 2) config_error("M must be at least 2");
  g.outcomes = static_cast<std::size_t>(m);
  const auto n = get_integer(j, "N", 0);
  if (n < 0 || n > 100'000'000) config_error("N must lie in [0, 1e8]");
  g.horizon = static_cast<int>(n);
  g.eps = get_number(j, "eps", 0.1);
  g.eps_c = get_number(j, "eps_c", 0.01);
  if (auto it = j.find("eps_n"); it != j.end()) g.eps_n = parse_schedule(*it);
  const auto seed = get_integer(j, "seed", 0);
  if (seed < 0) config_error("seed must be nonnegative");
  g.seed = static_cast<std::uint64_t>(seed);
  g.search.k0 = get_integer(j, "k0", g.search.k0);
  g.search.kmax = get_integer(j, "kmax", g.search.kmax);
  const auto cells = get_integer(j, "exhaustive_cells", static_cast<std::int64_t>(
                                                            g.search.exhaustive_cells));
  const auto beam = get_integer(j, "beam_width", static_cast<std::int64_t>(g.search.beam_width));
  if (cells < 1 || beam < 1) config_error("exhaustive_cells and beam_width must be positive");
  g.search.exhaustive_cells = static_cast<std::size_t>(cells);
  g.search.beam_width = static_cast<std::size_t>(beam);
  g.search.limits = TriangulationLimits::from_env();
  if (auto it = j.find("enforce_nonnegative"); it != j.end()) {
    if (!it->is_boolean()) config_error("'enforce_nonnegative' must be a boolean");
    g.enforce_nonnegative = it->get<bool>();
  }
  c.sceptic = get_string(j, "sceptic", c.sceptic);
  c.reality = get_string(j, "reality", c.reality);
  c.rng = get_string(j, "rng", c.rng);
  c.forecaster = get_string(j, "forecaster", c.forecaster);

  if (auto it = j.find("grid"); it != j.end()) {
    if (!it->is_object()) config_error("'grid' must be an object");
    for (const auto& item : it->items()) {
      if (item.key() != "eps" && item.key() != "seed" && item.key() != "N") {
        config_error("unknown grid key '" + item.key() + "'");
      }
    }
    SweepGrid grid;
    grid.eps = grid_list<double>(
        *it, "eps", g.eps,
        [](const json& v) {
          if (!v.is_number() || !(v.get<double>() > 0.0)) config_error("grid eps must be > 0");
          return v.get<double>();
        },
        &grid.warnings);
    grid.seeds = grid_list<std::uint64_t>(
        *it, "seed", g.seed,
        [](const json& v) {
          if (!v.is_number_unsigned()) config_error("grid seeds must be nonnegative integers");
          return v.get<std::uint64_t>();
        },
        &grid.warnings);
    grid.horizons = grid_list<int>(
        *it, "N", g.horizon,
        [](const json& v) {
          if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
              v.get<std::int64_t>() > 100'000'000) {
            config_error("grid N must lie in [0, 1e8]");
          }
          return static_cast<int>(v.get<std::int64_t>());
        },
        &grid.warnings);
    const auto cap = get_integer(j, "max_runs", 1000);
    if (cap < 1) config_error("max_runs must be positive");
    grid.max_runs = static_cast<std::size_t>(cap);
    c.grid = grid;
  }

  try {
    g.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  // Build the strategies once so that bad strategy strings fail at load time.
  make_sceptic(c.sceptic, g.outcomes, g.seed);
  make_reality(c.reality, g.outcomes, g.seed);
  if (g.game == GameType::kRandomized) make_rng(c.rng, g.seed);
  make_forecaster(c.forecaster, g);
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

std::unique_ptr<SkepticStrategy> make_sceptic(const std::string& descriptor, std::size_t outcomes,
                                              std::uint64_t seed) {
  std::string rest;
  const std::string head = head_of(descriptor, &rest);
  const std::string context = "sceptic '" + descriptor + "'";
  try {
    if (head == "zero" && rest.empty()) return zero_sceptic();
    if (head == "linear") {
      const auto kv = key_values(rest);
      if (kv.size() != 1 || kv[0].first != "c") config_error(context + ": expected linear:c=...");
      auto c = to_doubles(kv[0].second, context);
      if (c.size() != outcomes) config_error(context + ": needs M coefficients");
      return linear_sceptic(std::move(c));
    }
    if (head == "k29") {
      double eta = 0.1;
      double sigma = 0.2;
      for (const auto& [key, value] : key_values(rest)) {
        if (key == "eta") {
          eta = to_double(value, context);
        } else if (key == "sigma") {
          sigma = to_double(value, context);
        } else if (!(key.empty() && value.empty())) {
          config_error(context + ": unknown parameter '" + key + "'");
        }
      }
      return k29_kernel_sceptic(eta, sigma);
    }
    if (head == "bins") {
      const auto parts = split(rest, ':');
      if (parts.size() != 2) config_error(context + ": expected bins:<count>:<stake fraction>");
      const auto bins = to_u64(parts[0], context);
      if (bins > 1'000'000) config_error(context + ": too many bins");
      return bin_calibration_sceptic(outcomes, static_cast<int>(bins), to_double(parts[1], context));
    }
    if (head == "random") {
      const std::uint64_t s = rest.empty() ? stream_seed(seed, 3) : to_u64(rest, context);
      return random_valid_sceptic(outcomes, s);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    config_error(context + ": " + e.what());
  }
  config_error("unknown " + context);
}

std::unique_ptr<RealityStrategy> make_reality(const std::string& descriptor, std::size_t outcomes,
                                              std::uint64_t seed) {
  std::string rest;
  const std::string head = head_of(descriptor, &rest);
  const std::string context = "reality '" + descriptor + "'";
  try {
    if (head == "adversarial" && rest.empty()) return adversarial_reality();
    if (head == "iid") {
      const auto dist = to_doubles(rest, context);
      if (dist.size() != outcomes) config_error(context + ": needs M probabilities");
      double total = 0.0;
      for (double x : dist) total += x;
      if (std::abs(total - 1.0) > 1e-9) config_error(context + ": probabilities must sum to 1");
      return iid_reality(make_prob_vector(dist), stream_seed(seed, 1));
    }
    if (head == "scripted") {
      std::vector<std::size_t> script;
      for (const auto& item : split(rest, ',')) {
        const auto w = to_u64(item, context);
        if (w >= outcomes) config_error(context + ": outcome " + item + " out of range");
        script.push_back(static_cast<std::size_t>(w));
      }
      return scripted_reality(std::move(script));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    config_error(context + ": " + e.what());
  }
  config_error("unknown " + context);
}

std::unique_ptr<RngPolicy> make_rng(const std::string& descriptor, std::uint64_t seed) {
  std::string body = descriptor;
  if (body.rfind("rng:", 0) == 0) body = body.substr(4);
  std::string rest;
  const std::string head = head_of(body, &rest);
  if (head == "faithful") {
    return faithful_rng(rest.empty() ? stream_seed(seed, 2) : to_u64(rest, "rng '" + descriptor + "'"));
  }
  if (head == "adversarial" && rest.empty()) return adversarial_rng();
  config_error("unknown rng '" + descriptor + "'");
}

std::unique_ptr<Forecaster> make_forecaster(const std::string& descriptor, const GameConfig& config) {
  std::string rest;
  const std::string head = head_of(descriptor, &rest);
  if (head == "defensive" && rest.empty()) return defensive_forecaster(config);
  if (head == "constant") {
    const auto p = to_doubles(rest, "forecaster '" + descriptor + "'");
    if (p.size() != config.outcomes) config_error("forecaster '" + descriptor + "': needs M entries");
    try {
      return constant_forecaster(make_prob_vector(p));
    } catch (const Error& e) {
      config_error("forecaster '" + descriptor + "': " + e.what());
    }
  }
  config_error("unknown forecaster '" + descriptor + "'");
}

Transcript run_scenario(const ScenarioConfig& config) {
  const GameConfig& g = config.game;
  auto sceptic = make_sceptic(config.sceptic, g.outcomes, g.seed);
  auto reality = make_reality(config.reality, g.outcomes, g.seed);
  auto forecaster = make_forecaster(config.forecaster, g);
  std::unique_ptr<RngPolicy> rng;
  if (g.game == GameType::kRandomized) rng = make_rng(config.rng, g.seed);
  return run_game(g, *sceptic, *forecaster, *reality, rng.get());
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void print_verdict(const Verdict& v, std::ostream& out) {
  out << "rounds " << v.rounds_played << "/" << v.horizon << "  sup K " << number_text(v.sup_K)
      << "  final K " << number_text(v.final_K) << "  final F " << number_text(v.final_F)
      << "  invariant_held " << (v.invariant_held ? "true" : "false") << "  forfeits "
      << v.forfeits.size() << '\n';
  for (const auto& f : v.forfeits) {
    out << "forfeit: round " << f.round << " by " << to_string(f.player) << " ("
        << to_string(f.code) << "): " << f.reason << '\n';
  }
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_path,
            std::optional<std::uint64_t> seed_override, std::ostream& out, std::ostream& err) {
  ScenarioConfig config;
  try {
    config = load_scenario(config_path);
    if (seed_override) config.game.seed = *seed_override;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  Transcript t;
  try {
    t = run_scenario(config);
    write_file(t, out_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kConfigError ? kExitUsage : kExitFailure;
  }
  print_verdict(t.verdict, out);
  return t.verdict.ok() ? kExitOk : kExitFailure;
}

int cmd_verify(const std::string& transcript_path, std::ostream& out, std::ostream& err) {
  Transcript t;
  try {
    t = read_file(transcript_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const VerificationReport report = verify(t);
  out << report.summary();
  for (const auto& c : report.checks) {
    if (!c.ok()) {
      out << "FAILED " << c.name << " at round " << c.failed_rounds.front() << ": "
          << c.first_failure << '\n';
    }
  }
  out << (report.ok() ? "verification passed" : "verification failed") << '\n';
  return report.ok() ? kExitOk : kExitFailure;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, int jobs,
              std::optional<std::uint64_t> seed_override, std::ostream& out, std::ostream& err) {
  ScenarioConfig base;
  try {
    base = load_scenario(config_path);
    if (seed_override) base.game.seed = *seed_override;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  SweepGrid grid = base.grid.value_or(
      SweepGrid{{base.game.eps}, {base.game.seed}, {base.game.horizon}, 1000, {}});
  for (const auto& w : grid.warnings) err << "warning: " << w << '\n';
  if (seed_override && !base.grid) grid.seeds = {*seed_override};

  struct Cell {
    double eps;
    std::uint64_t seed;
    int horizon;
    std::string file;
    Verdict verdict;
    std::string error;
  };
  std::vector<Cell> cells;
  for (double eps : grid.eps) {
    for (std::uint64_t seed : grid.seeds) {
      for (int horizon : grid.horizons) {
        cells.push_back(Cell{eps, seed, horizon,
                             "run_eps" + short_text(eps) + "_seed" + std::to_string(seed) + "_N" +
                                 std::to_string(horizon) + ".jsonl",
                             {}, {}});
      }
    }
  }
  if (cells.size() > grid.max_runs) {
    err << "error: grid has " << cells.size() << " runs, above max_runs " << grid.max_runs
        << '\n';
    return kExitUsage;
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    err << "error: cannot create " << out_dir << ": " << ec.message() << '\n';
    return kExitUsage;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      Cell& cell = cells[i];
      ScenarioConfig config = base;
      config.game.eps = cell.eps;
      config.game.seed = cell.seed;
      config.game.horizon = cell.horizon;
      try {
        const Transcript t = run_scenario(config);
        write_file(t, (std::filesystem::path(out_dir) / cell.file).string());
        cell.verdict = t.verdict;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  const int threads = std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream csv(std::filesystem::path(out_dir) / "summary.csv", std::ios::binary);
  csv << "eps,seed,N,supK,finalF,held\n";
  int failures = 0;
  for (const auto& cell : cells) {
    const bool held = cell.error.empty() && cell.verdict.ok();
    csv << number_text(cell.eps) << ',' << cell.seed << ',' << cell.horizon << ','
        << number_text(cell.verdict.sup_K) << ',' << number_text(cell.verdict.final_F) << ','
        << (held ? "true" : "false") << '\n';
    if (!held) {
      ++failures;
      out << "failed: " << cell.file;
      if (!cell.error.empty()) out << " (" << cell.error << ")";
      out << '\n';
    }
  }
  csv.flush();
  if (!csv) {
    err << "error: cannot write summary.csv\n";
    return kExitFailure;
  }
  out << cells.size() << " runs, " << failures << " failed\n";
  return failures == 0 ? kExitOk : kExitFailure;
}

int cmd_export(const std::string& transcript_path, const std::string& csv_path, std::ostream& out,
               std::ostream& err) {
  Transcript t;
  try {
    t = read_file(transcript_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const auto report = verify(t);
  if (!report.check(kCheckStructure).ok()) {
    err << "error: transcript is structurally invalid: "
        << report.check(kCheckStructure).first_failure << '\n';
    return kExitUsage;
  }
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) {
    err << "error: cannot open " << csv_path << '\n';
    return kExitUsage;
  }
  csv << "n,K,F,(1+eps)F\n";
  for (const auto& r : t.rounds) {
    csv << r.n << ',' << number_text(r.K) << ',' << number_text(r.F) << ','
        << number_text((1.0 + t.header.eps) * r.F) << '\n';
  }
  csv.flush();
  if (!csv) {
    err << "error: cannot write " << csv_path << '\n';
    return kExitFailure;
  }
  out << t.rounds.size() << " rows written to " << csv_path << '\n';
  return kExitOk;
}

}  // namespace dfcast
