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

#include "dfcast/transcript.h"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "dfcast/protocol.h"
#include "json.hpp"

namespace dfcast {
namespace {

using nlohmann::json;

// Appends a number with 17 significant digits; non-finite values become null.
void put(std::string& out, double x) {
  if (!std::isfinite(x)) {
    out += "null";
    return;
  }
  if (x == 0.0) x = 0.0;  // drop the sign of -0, which JSON readers do not keep
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out += buf;
}

void put(std::string& out, std::uint64_t x) { out += std::to_string(x); }
void put(std::string& out, std::int64_t x) { out += std::to_string(x); }
void put(std::string& out, int x) { out += std::to_string(x); }
void put(std::string& out, bool x) { out += x ? "true" : "false"; }
void put(std::string& out, const std::string& s) { out += json(s).dump(); }

void put(std::string& out, const std::vector<double>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    put(out, v[i]);
  }
  out += ']';
}

void put(std::string& out, const std::vector<std::vector<double>>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    put(out, v[i]);
  }
  out += ']';
}

class ObjectWriter {
 public:
  template <typename T>
  ObjectWriter& field(const char* key, const T& value) {
    body_ += body_.size() == 1 ? "\"" : ",\"";
    body_ += key;
    body_ += "\":";
    put(body_, value);
    return *this;
  }
  ObjectWriter& raw(const char* key, const std::string& text) {
    body_ += body_.size() == 1 ? "\"" : ",\"";
    body_ += key;
    body_ += "\":";
    body_ += text;
    return *this;
  }
  std::string body() const { return body_ + "}"; }

 private:
  std::string body_ = "{";
};

std::string hex64(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, x);
  return buf;
}

std::string seal(const std::string& body) {
  std::string line = body.substr(0, body.size() - 1);
  line += ",\"digest\":\"" + hex64(fnv1a64(body)) + "\"}";
  return line;
}

std::string header_body(const TranscriptHeader& h) {
  ObjectWriter eps_n;
  if (h.eps_n.kind == EpsSchedule::Kind::kConstant) {
    eps_n.field("kind", std::string("constant")).field("c", h.eps_n.c);
  } else {
    eps_n.field("kind", std::string("geometric"))
        .field("a", h.eps_n.a)
        .field("r", h.eps_n.r)
        .field("floor", h.eps_n.floor);
  }
  ObjectWriter w;
  w.field("schema", std::string(kTranscriptSchema))
      .field("game", to_string(h.game))
      .field("M", h.outcomes)
      .field("N", h.horizon)
      .field("eps", h.eps)
      .field("eps_c", h.eps_c)
      .raw("eps_n", eps_n.body())
      .field("sceptic", h.sceptic)
      .field("forecaster", h.forecaster)
      .field("reality", h.reality)
      .field("rng", h.rng)
      .field("seed", h.seed)
      .field("k0", h.k0)
      .field("kmax", h.kmax)
      .field("enforce_nonnegative", h.enforce_nonnegative)
      .field("tool_version", h.tool_version);
  return w.body();
}

std::string round_body(const RoundRecord& r) {
  ObjectWriter w;
  w.field("n", r.n)
      .field("support", r.support)
      .field("weights", r.weights)
      .field("omega", r.omega)
      .field("drawn", r.drawn)
      .field("f", r.f)
      .field("payoff", r.payoff)
      .field("K", r.K)
      .field("F", r.F);
  if (r.forfeit) {
    ObjectWriter f;
    f.field("round", r.forfeit->round)
        .field("player", to_string(r.forfeit->player))
        .field("code", std::string(to_string(r.forfeit->code)))
        .field("reason", r.forfeit->reason);
    w.raw("forfeit", f.body());
  }
  return w.body();
}

// ---------------------------------------------------------------------------
// Reading

class LineReader {
 public:
  LineReader(const json& object, std::size_t line) : object_(object), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(line_) + ": " + what, line_);
  }

  const json& at(const char* key) const {
    auto it = object_.find(key);
    if (it == object_.end()) fail(std::string("missing key '") + key + "'");
    return *it;
  }

  double number(const json& v, const char* key) const {
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!v.is_number()) fail(std::string("'") + key + "' is not a number");
    return v.get<double>();
  }
  double number(const char* key) const { return number(at(key), key); }

  std::uint64_t unsigned_int(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_unsigned()) fail(std::string("'") + key + "' is not a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::int64_t signed_int(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(std::string("'") + key + "' is not an integer");
    return v.get<std::int64_t>();
  }

  std::string text(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(std::string("'") + key + "' is not a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key) const {
    const json& v = at(key);
    if (!v.is_boolean()) fail(std::string("'") + key + "' is not a boolean");
    return v.get<bool>();
  }

  std::vector<double> vector(const json& v, const char* key) const {
    if (!v.is_array()) fail(std::string("'") + key + "' is not an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(number(x, key));
    return out;
  }
  std::vector<double> vector(const char* key) const { return vector(at(key), key); }

  std::vector<std::vector<double>> matrix(const char* key) const {
    const json& v = at(key);
    if (!v.is_array()) fail(std::string("'") + key + "' is not an array");
    std::vector<std::vector<double>> out;
    for (const auto& row : v) out.push_back(vector(row, key));
    return out;
  }

  const json& object() const { return object_; }
  std::size_t line() const { return line_; }

 private:
  const json& object_;
  std::size_t line_;
};

json parse_line(const std::string& text, std::size_t line) {
  json object;
  try {
    object = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": " + e.what(), line);
  }
  if (!object.is_object()) {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": not a JSON object",
                line);
  }
  return object;
}

TranscriptHeader parse_header(const LineReader& in) {
  auto schema = in.object().find("schema");
  if (schema == in.object().end()) in.fail("missing key 'schema'");
  if (!schema->is_string() || schema->get<std::string>() != kTranscriptSchema) {
    throw Error(ErrorCode::kSchemaVersionMismatch,
                "expected schema " + std::string(kTranscriptSchema) + ", found " + schema->dump(),
                in.line());
  }
  TranscriptHeader h;
  try {
    h.game = parse_game_type(in.text("game"));
  } catch (const Error& e) {
    in.fail(e.what());
  }
  h.outcomes = in.unsigned_int("M");
  h.horizon = static_cast<int>(in.signed_int("N"));
  h.eps = in.number("eps");
  h.eps_c = in.number("eps_c");
  const json& eps_n = in.at("eps_n");
  if (!eps_n.is_object()) in.fail("'eps_n' is not an object");
  LineReader schedule(eps_n, in.line());
  const std::string kind = schedule.text("kind");
  if (kind == "constant") {
    h.eps_n = EpsSchedule::constant(schedule.number("c"));
  } else if (kind == "geometric") {
    h.eps_n = EpsSchedule::geometric(schedule.number("a"), schedule.number("r"),
                                     schedule.number("floor"));
  } else {
    in.fail("unknown eps_n kind '" + kind + "'");
  }
  h.sceptic = in.text("sceptic");
  h.forecaster = in.text("forecaster");
  h.reality = in.text("reality");
  h.rng = in.text("rng");
  h.seed = in.unsigned_int("seed");
  h.k0 = in.signed_int("k0");
  h.kmax = in.signed_int("kmax");
  h.enforce_nonnegative = in.boolean("enforce_nonnegative");
  h.tool_version = in.text("tool_version");
  return h;
}

RoundRecord parse_round(const LineReader& in) {
  RoundRecord r;
  r.n = static_cast<int>(in.signed_int("n"));
  r.support = in.matrix("support");
  r.weights = in.vector("weights");
  r.omega = in.unsigned_int("omega");
  r.drawn = in.unsigned_int("drawn");
  r.f = in.vector("f");
  r.payoff = in.matrix("payoff");
  r.K = in.number("K");
  r.F = in.number("F");
  auto it = in.object().find("forfeit");
  if (it != in.object().end()) {
    if (!it->is_object()) in.fail("'forfeit' is not an object");
    LineReader f(*it, in.line());
    Forfeit forfeit;
    forfeit.round = static_cast<int>(f.signed_int("round"));
    try {
      forfeit.player = parse_player(f.text("player"));
      forfeit.code = parse_error_code(f.text("code"));
    } catch (const Error& e) {
      in.fail(e.what());
    }
    forfeit.reason = f.text("reason");
    r.forfeit = forfeit;
  }
  return r;
}

bool digest_matches(const json& object, const std::string& body) {
  auto it = object.find("digest");
  return it != object.end() && it->is_string() && it->get<std::string>() == hex64(fnv1a64(body));
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string header_line(const TranscriptHeader& header) { return seal(header_body(header)); }
std::string round_line(const RoundRecord& round) { return seal(round_body(round)); }

std::string to_jsonl(const Transcript& transcript) {
  std::string out = header_line(transcript.header);
  out += '\n';
  for (const auto& r : transcript.rounds) {
    out += round_line(r);
    out += '\n';
  }
  return out;
}

void write(const Transcript& transcript, std::ostream& sink) {
  sink << header_line(transcript.header) << '\n';
  for (const auto& r : transcript.rounds) sink << round_line(r) << '\n';
  sink.flush();
  if (!sink) throw Error(ErrorCode::kSinkFailure, "transcript sink failed");
}

void write_file(const Transcript& transcript, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kSinkFailure, "cannot open " + path + " for writing");
  write(transcript, out);
}

Transcript read(std::istream& source) {
  Transcript t;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  while (std::getline(source, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": empty line", line);
    }
    const json object = parse_line(text, line);
    LineReader in(object, line);
    if (!have_header) {
      t.header = parse_header(in);
      if (!digest_matches(object, header_body(t.header))) t.digest_failures.push_back(0);
      have_header = true;
    } else {
      RoundRecord r = parse_round(in);
      if (!digest_matches(object, round_body(r))) t.digest_failures.push_back(r.n);
      t.rounds.push_back(std::move(r));
    }
  }
  if (!have_header) throw Error(ErrorCode::kParseError, "line 1: missing header", 1);
  t.verdict = compute_verdict(t.header, t.rounds);
  return t;
}

Transcript read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path);
  return read(in);
}

Transcript parse_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read(in);
}

// ---------------------------------------------------------------------------
// Verification

bool VerificationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.ok(); });
}

const CheckResult& VerificationReport::check(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "no check named " + std::string(name));
}

bool VerificationReport::failed(std::string_view name, int round) const {
  const auto& rounds = check(name).failed_rounds;
  return std::find(rounds.begin(), rounds.end(), round) != rounds.end();
}

std::string VerificationReport::summary() const {
  std::ostringstream out;
  for (const auto& c : checks) {
    out << c.name << ": " << c.passed << " passed, " << c.failed_rounds.size() << " failed, "
        << c.skipped << " skipped";
    if (!c.ok()) out << " (first failure at round " << c.failed_rounds.front() << ": "
                     << c.first_failure << ")";
    out << '\n';
  }
  return out.str();
}

namespace {

class Checker {
 public:
  explicit Checker(const char* name) { result_.name = name; }

  void pass() { ++result_.passed; }
  void skip() { ++result_.skipped; }
  void fail(int round, const std::string& why) {
    if (result_.failed_rounds.empty()) result_.first_failure = why;
    if (result_.failed_rounds.empty() || result_.failed_rounds.back() != round) {
      result_.failed_rounds.push_back(round);
    }
  }
  void expect(bool ok, int round, const std::string& why) {
    if (ok) {
      pass();
    } else {
      fail(round, why);
    }
  }

  CheckResult take() { return std::move(result_); }

 private:
  CheckResult result_;
};

std::string fmt(const char* what, double x) {
  std::ostringstream out;
  out.precision(17);
  out << what << " " << x;
  return out.str();
}

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Structural sanity of a completed (non-forfeit) round; empty if fine.
std::string round_shape(const TranscriptHeader& h, const RoundRecord& r) {
  const std::size_t m = h.outcomes;
  const std::size_t k = r.support.size();
  if (k == 0) return "empty support";
  for (const auto& p : r.support) {
    if (p.size() != m) return "support point of wrong dimension";
  }
  if (r.weights.size() != k) return "weights do not match support";
  if (r.omega >= m) return "outcome out of range";
  if (r.drawn >= k) return "drawn index out of range";
  if (r.payoff.size() != m) return "payoff has wrong number of outcome rows";
  for (const auto& row : r.payoff) {
    if (row.size() != k) return "payoff row does not match support";
    for (double x : row) {
      if (!std::isfinite(x)) return "non-finite payoff";
    }
  }
  if (h.game == GameType::kRandomized) {
    if (r.f.size() != k) return "side bet does not match support";
    for (double x : r.f) {
      if (!std::isfinite(x)) return "non-finite side bet";
    }
  } else {
    if (k != 1) return "continuous round with more than one forecast";
    if (!r.f.empty()) return "continuous round with a side bet";
    if (r.F != 1.0) return "continuous round with F != 1";
  }
  if (!std::isfinite(r.K) || !std::isfinite(r.F)) return "non-finite capital";
  return {};
}

}  // namespace

VerificationReport verify(const Transcript& t) {
  const TranscriptHeader& h = t.header;
  const bool randomized = h.game == GameType::kRandomized;
  const bool defensive = h.forecaster == "defensive";

  Checker structure(kCheckStructure), digest(kCheckDigest), probability(kCheckProbability),
      recursion(kCheckCapitalRecursion), bet_mean(kCheckSideBetMean), minimax(kCheckMinimax),
      support_size(kCheckSupportSize), diameter(kCheckSupportDiameter),
      domination(kCheckCapitalDomination), identity(kCheckSideBetIdentity),
      validity(kCheckScepticValidity), bound(kCheckContinuousBound),
      nonnegative(kCheckNonnegativity);

  // Header.
  {
    std::string why;
    if (h.outcomes < 2) why = "M < 2";
    else if (h.horizon < 0) why = "negative horizon";
    else if (!(h.eps > 0.0) || !(h.eps_c > 0.0)) why = "eps and eps_c must be positive";
    else if (static_cast<int>(t.rounds.size()) > h.horizon) why = "more rounds than the horizon";
    else if (static_cast<int>(t.rounds.size()) < h.horizon &&
             (t.rounds.empty() || !t.rounds.back().forfeit)) {
      why = "transcript ends early without a forfeit";
    }
    else {
      try {
        h.eps_n.validate();
      } catch (const Error& e) {
        why = e.what();
      }
    }
    structure.expect(why.empty(), 0, why);
  }
  auto digest_failed = [&](int n) {
    return std::find(t.digest_failures.begin(), t.digest_failures.end(), n) !=
           t.digest_failures.end();
  };
  digest.expect(!digest_failed(0), 0, "header digest mismatch");

  double k_replay = 1.0;
  double f_replay = 1.0;
  for (std::size_t idx = 0; idx < t.rounds.size(); ++idx) {
    const RoundRecord& r = t.rounds[idx];
    const int n = static_cast<int>(idx) + 1;
    digest.expect(!digest_failed(r.n), n, "round digest mismatch");

    std::string shape;
    if (r.n != n) shape = "round numbered " + std::to_string(r.n);
    else if (r.forfeit && idx + 1 != t.rounds.size()) shape = "forfeit before the last round";
    else if (r.forfeit && r.forfeit->round != n) shape = "forfeit names another round";
    else if (!r.forfeit) shape = round_shape(h, r);
    structure.expect(shape.empty(), n, shape);

    if (r.forfeit) {
      // Capital stays frozen in a forfeited round; nothing else was settled.
      recursion.expect(close(r.K, k_replay, 1e-12) && close(r.F, f_replay, 1e-12), n,
                       "capital moved in a forfeited round");
      for (Checker* c : {&probability, &bet_mean, &minimax, &support_size, &diameter,
                         &domination, &identity, &validity, &bound, &nonnegative}) {
        c->skip();
      }
      continue;
    }
    if (!shape.empty()) {
      for (Checker* c : {&probability, &recursion, &bet_mean, &minimax, &support_size,
                         &diameter, &domination, &identity, &validity, &bound, &nonnegative}) {
        c->fail(n, "malformed round");
      }
      k_replay = r.K;
      f_replay = r.F;
      continue;
    }

    const std::size_t m = h.outcomes;
    const std::size_t k = r.support.size();

    // Probability vectors.
    {
      std::string why;
      double total = 0.0;
      for (double w : r.weights) {
        if (!(w >= 0.0)) why = "negative weight";
        total += w;
      }
      if (std::abs(total - 1.0) > kInvariantTolerance) why = fmt("weights sum to", total);
      for (const auto& p : r.support) {
        double mass = 0.0;
        for (double x : p) {
          if (!(x >= 0.0)) why = "support point with a negative entry";
          mass += x;
        }
        if (std::abs(mass - 1.0) > kInvariantTolerance) why = fmt("support point sums to", mass);
      }
      probability.expect(why.empty(), n, why);
    }

    // Capital recursions, replayed from K_0 = F_0 = 1.
    k_replay += r.payoff[r.omega][r.drawn];
    if (randomized) f_replay += r.f[r.drawn];
    recursion.expect(close(r.K, k_replay, 1e-12) && close(r.F, f_replay, 1e-12), n,
                     fmt("stored K", r.K) + fmt(" vs replayed", k_replay));

    // Sceptic's validity at every stored forecast.
    {
      bool ok = true;
      for (std::size_t i = 0; i < k; ++i) {
        double expectation = 0.0;
        double scale = 1.0;
        for (std::size_t w = 0; w < m; ++w) {
          expectation += r.payoff[w][i] * r.support[i][w];
          scale = std::max(scale, std::abs(r.payoff[w][i]));
        }
        if (expectation > kAuditTolerance * scale) ok = false;
      }
      validity.expect(ok, n, "sum_w S(w, p) p_w > 0 at a stored forecast");
    }

    support_size.expect(k <= m, n, "support larger than M");

    if (h.enforce_nonnegative) {
      nonnegative.expect(r.K >= -kInvariantTolerance && r.F >= -kInvariantTolerance, n,
                         "negative capital");
    } else {
      nonnegative.skip();
    }

    if (randomized) {
      double mean = 0.0;
      for (std::size_t i = 0; i < k; ++i) mean += r.weights[i] * r.f[i];
      bet_mean.expect(mean <= kInvariantTolerance, n, fmt("side bet mean", mean));
      bound.skip();
      if (!defensive) {
        minimax.skip();
        diameter.skip();
        domination.skip();
        identity.skip();
        continue;
      }
      const double delta = h.eps * std::ldexp(1.0, -n);
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t w = 0; w < m; ++w) {
        double value = 0.0;
        for (std::size_t i = 0; i < k; ++i) value += r.weights[i] * r.payoff[w][i];
        worst = std::max(worst, value);
      }
      minimax.expect(worst <= delta + kInvariantTolerance, n, fmt("max_w E_P S(w, .) =", worst));

      double diam = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
          double l1 = 0.0;
          for (std::size_t w = 0; w < m; ++w) l1 += std::abs(r.support[i][w] - r.support[j][w]);
          diam = std::max(diam, 0.5 * l1);
        }
      }
      diameter.expect(diam <= h.eps_n.at(n) * (1.0 + 1e-12), n, fmt("support diameter", diam));

      domination.expect(r.K <= (1.0 + h.eps) * r.F + kInvariantTolerance, n,
                        fmt("K", r.K) + fmt(" exceeds (1 + eps) F =", (1.0 + h.eps) * r.F));

      bool same = true;
      for (std::size_t i = 0; i < k; ++i) {
        const double s = r.payoff[r.omega][i];
        if (!close(r.f[i], (s - delta) / (1.0 + h.eps), kInvariantTolerance)) same = false;
      }
      identity.expect(same, n, "side bet differs from (S - eps 2^-n) / (1 + eps)");
    } else {
      bet_mean.skip();
      diameter.skip();
      domination.skip();
      identity.skip();
      if (!defensive) {
        minimax.skip();
        bound.skip();
        continue;
      }
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t w = 0; w < m; ++w) worst = std::max(worst, r.payoff[w][0]);
      minimax.expect(worst <= continuous_tolerance(h.eps_c, n, h.horizon) + kInvariantTolerance, n,
                     fmt("max_w S(w, p) =", worst));
      bound.expect(r.K <= 1.0 + h.eps_c + kInvariantTolerance, n,
                   fmt("K", r.K) + " exceeds 1 + eps_c");
    }
  }

  VerificationReport report;
  for (Checker* c : {&structure, &digest, &probability, &recursion, &bet_mean, &minimax,
                     &support_size, &diameter, &domination, &identity, &validity, &bound,
                     &nonnegative}) {
    report.checks.push_back(c->take());
  }
  return report;
}

}  // namespace dfcast
