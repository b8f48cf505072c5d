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

#ifndef DFCAST_TRANSCRIPT_H_
#define DFCAST_TRANSCRIPT_H_

// JSONL transcripts: a header line and one line per round, numbers written
// with 17 significant digits, every line closed by an FNV-1a digest of its
// body. verify() re-checks the game from the stored numbers alone.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dfcast/record.h"

namespace dfcast {

std::uint64_t fnv1a64(std::string_view bytes);

std::string header_line(const TranscriptHeader& header);
std::string round_line(const RoundRecord& round);
std::string to_jsonl(const Transcript& transcript);

// Throws kSinkFailure if the stream goes bad.
void write(const Transcript& transcript, std::ostream& sink);
void write_file(const Transcript& transcript, const std::string& path);

// Throws kParseError (with line number) or kSchemaVersionMismatch. The verdict
// is recomputed from the rounds.
Transcript read(std::istream& source);
Transcript read_file(const std::string& path);
Transcript parse_jsonl(std::string_view text);

struct CheckResult {
  std::string name;
  int passed = 0;
  int skipped = 0;
  // Round numbers; 0 is the header.
  std::vector<int> failed_rounds;
  std::string first_failure;

  bool ok() const { return failed_rounds.empty(); }
};

struct VerificationReport {
  std::vector<CheckResult> checks;

  bool ok() const;
  const CheckResult& check(std::string_view name) const;
  bool failed(std::string_view name, int round) const;
  // One line per check: name, passed, failed, skipped.
  std::string summary() const;
};

// Check names.
inline constexpr const char* kCheckStructure = "structure";
inline constexpr const char* kCheckDigest = "digest";
inline constexpr const char* kCheckProbability = "probability";
inline constexpr const char* kCheckCapitalRecursion = "capital_recursion";
inline constexpr const char* kCheckSideBetMean = "side_bet_mean";
inline constexpr const char* kCheckMinimax = "minimax";
inline constexpr const char* kCheckSupportSize = "support_size";
inline constexpr const char* kCheckSupportDiameter = "support_diameter";
inline constexpr const char* kCheckCapitalDomination = "capital_domination";
inline constexpr const char* kCheckSideBetIdentity = "side_bet_identity";
inline constexpr const char* kCheckScepticValidity = "sceptic_validity";
inline constexpr const char* kCheckContinuousBound = "continuous_bound";
inline constexpr const char* kCheckNonnegativity = "nonnegativity";

// Checks tied to the defensive Forecaster's guarantees (minimax, diameter,
// domination, side-bet identity, continuous bound) run only when the header
// names that Forecaster; otherwise they count as skipped.
VerificationReport verify(const Transcript& transcript);

}  // namespace dfcast

#endif  // DFCAST_TRANSCRIPT_H_
