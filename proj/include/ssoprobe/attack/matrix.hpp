#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssoprobe/attack/engine.hpp"
#include "ssoprobe/sp/policy.hpp"

namespace ssoprobe::attack {

/// Matrix columns. KC is KC1 or KC2. The first four decide "compromised".
inline const std::vector<std::string>& matrix_columns() {
  static const std::vector<std::string> columns = {"TRC", "KC", "IDS", "DS", "UNSIGNED", "XXE", "REPLAY"};
  return columns;
}
inline constexpr int kAccessColumns = 4;

struct MatrixRow {
  std::string preset;
  std::map<std::string, bool> vulnerable;       // per column
  std::map<std::string, std::string> outcomes;  // per attack class, "VULNERABLE" ...
  bool compromised() const;
};

struct Matrix {
  std::vector<MatrixRow> rows;
  std::map<std::string, int> totals() const;
  int compromised() const;
};

/// Expected cells for the sixteen built-in presets: preset -> vulnerable columns.
const std::map<std::string, std::vector<std::string>>& expected_matrix();
Matrix expected_as_matrix();

struct CellDiff {
  std::string preset;
  std::string column;
  bool expected = false;
  bool actual = false;
};
std::vector<CellDiff> diff(const Matrix& expected, const Matrix& actual);

/// Runs every profile against a fresh in-memory lab per preset.
/// `policies` pairs preset names with the policy to run (in order).
Matrix run_matrix(const std::vector<std::pair<std::string, sp::VerificationPolicy>>& policies,
                  const std::vector<AttackProfile>& profiles = builtin_profiles());
/// The sixteen built-in presets.
std::vector<std::pair<std::string, sp::VerificationPolicy>> builtin_preset_policies();
/// Policies from a presets file: {"presets": {"name": {policy keys...}}}.
/// Listed keys override the built-in preset of the same name.
std::vector<std::pair<std::string, sp::VerificationPolicy>> load_preset_file(const std::string& path);

MatrixRow row_from_results(const std::string& preset, const std::vector<AttackResult>& results);

nlohmann::ordered_json to_json(const Matrix& matrix);
nlohmann::ordered_json to_json(const std::vector<CellDiff>& diffs);
std::string render_text(const Matrix& matrix);
std::string render_text(const std::vector<CellDiff>& diffs);

}  // namespace ssoprobe::attack
