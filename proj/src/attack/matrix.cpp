#include "ssoprobe/attack/matrix.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ssoprobe::attack {
namespace {

std::string column_of(AttackClass c) {
  switch (c) {
    case AttackClass::kc1:
    case AttackClass::kc2: return "KC";
    default: return std::string(to_string(c));
  }
}

}  // namespace

bool MatrixRow::compromised() const {
  const auto& cols = matrix_columns();
  for (int i = 0; i < kAccessColumns; ++i) {
    const auto it = vulnerable.find(cols[i]);
    if (it != vulnerable.end() && it->second) return true;
  }
  return false;
}

std::map<std::string, int> Matrix::totals() const {
  std::map<std::string, int> out;
  for (const auto& c : matrix_columns()) out[c] = 0;
  for (const auto& r : rows)
    for (const auto& [c, v] : r.vulnerable) out[c] += v;
  return out;
}

int Matrix::compromised() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(),
                                        [](const MatrixRow& r) { return r.compromised(); }));
}

const std::map<std::string, std::vector<std::string>>& expected_matrix() {
  static const std::map<std::string, std::vector<std::string>> expected = {
      {"cf-openid", {"TRC", "IDS", "UNSIGNED"}},
      {"dotnet-openauth", {}},
      {"drupal", {"KC"}},
      {"dyuproject", {"TRC", "IDS"}},
      {"janrain", {}},
      {"joid", {"TRC", "IDS"}},
      {"jopenid", {"IDS"}},
      {"libopkele", {}},
      {"lightopenid", {}},
      {"net-openid-consumer", {"TRC", "XXE"}},
      {"openid-cfc", {"IDS", "UNSIGNED", "XXE"}},
      {"openid-node", {"TRC", "UNSIGNED"}},
      {"openid4java", {}},
      {"simple-openid-php", {"TRC", "DS"}},
      {"sourceforge", {"KC", "IDS"}},
      {"zend", {"KC", "UNSIGNED"}},
  };
  return expected;
}

Matrix expected_as_matrix() {
  Matrix m;
  for (const auto& name : sp::preset_names()) {
    MatrixRow row;
    row.preset = name;
    for (const auto& c : matrix_columns()) row.vulnerable[c] = false;
    for (const auto& c : expected_matrix().at(name)) row.vulnerable[c] = true;
    m.rows.push_back(std::move(row));
  }
  return m;
}

std::vector<CellDiff> diff(const Matrix& expected, const Matrix& actual) {
  std::vector<CellDiff> out;
  for (const auto& e : expected.rows) {
    const auto a = std::find_if(actual.rows.begin(), actual.rows.end(),
                                [&](const MatrixRow& r) { return r.preset == e.preset; });
    for (const auto& c : matrix_columns()) {
      const bool want = e.vulnerable.count(c) && e.vulnerable.at(c);
      const bool got = a != actual.rows.end() && a->vulnerable.count(c) && a->vulnerable.at(c);
      if (want != got || a == actual.rows.end()) out.push_back({e.preset, c, want, got});
    }
  }
  return out;
}

MatrixRow row_from_results(const std::string& preset, const std::vector<AttackResult>& results) {
  MatrixRow row;
  row.preset = preset;
  for (const auto& c : matrix_columns()) row.vulnerable[c] = false;
  for (const auto& r : results) {
    row.outcomes[std::string(to_string(r.attack_class))] = std::string(to_string(r.verdict));
    if (r.verdict == Outcome::vulnerable) row.vulnerable[column_of(r.attack_class)] = true;
  }
  return row;
}

std::vector<std::pair<std::string, sp::VerificationPolicy>> builtin_preset_policies() {
  std::vector<std::pair<std::string, sp::VerificationPolicy>> out;
  for (const auto& name : sp::preset_names()) out.emplace_back(name, sp::load_preset(name));
  return out;
}

std::vector<std::pair<std::string, sp::VerificationPolicy>> load_preset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read presets file " + path);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  const auto& presets = j.contains("presets") ? j.at("presets") : j;
  if (!presets.is_object()) throw std::invalid_argument(path + ": expected an object of presets");
  auto out = builtin_preset_policies();
  for (const auto& [name, overrides] : presets.items()) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == name; });
    if (it == out.end()) throw std::invalid_argument(path + ": unknown preset " + name);
    it->second = sp::policy_from_json(overrides, it->second);
  }
  return out;
}

Matrix run_matrix(const std::vector<std::pair<std::string, sp::VerificationPolicy>>& policies,
                  const std::vector<AttackProfile>& profiles) {
  Matrix m;
  for (const auto& [name, policy] : policies) {
    auto lab = Lab::for_policy(policy, name);
    Engine engine(*lab);
    const auto report = engine.run_all(profiles);
    m.rows.push_back(row_from_results(name, report.results));
  }
  return m;
}

nlohmann::ordered_json to_json(const Matrix& matrix) {
  nlohmann::ordered_json j;
  j["columns"] = matrix_columns();
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : matrix.rows) {
    nlohmann::ordered_json row;
    row["preset"] = r.preset;
    for (const auto& c : matrix_columns()) row[c] = r.vulnerable.count(c) && r.vulnerable.at(c);
    row["compromised"] = r.compromised();
    if (!r.outcomes.empty()) {
      nlohmann::ordered_json outcomes;
      for (auto cls : attack_classes()) {
        const auto key = std::string(to_string(cls));
        if (r.outcomes.count(key)) outcomes[key] = r.outcomes.at(key);
      }
      row["outcomes"] = std::move(outcomes);
    }
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  nlohmann::ordered_json totals;
  for (const auto& [c, n] : matrix.totals()) totals[c] = n;
  nlohmann::ordered_json ordered;
  for (const auto& c : matrix_columns()) ordered[c] = totals[c];
  j["totals"] = std::move(ordered);
  j["compromised"] = matrix.compromised();
  j["targets"] = matrix.rows.size();
  return j;
}

nlohmann::ordered_json to_json(const std::vector<CellDiff>& diffs) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& d : diffs)
    arr.push_back({{"preset", d.preset}, {"column", d.column}, {"expected", d.expected},
                   {"actual", d.actual}});
  return arr;
}

std::string render_text(const Matrix& matrix) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "Target";
  for (const auto& c : matrix_columns()) out << std::setw(10) << c;
  out << "Access\n" << std::string(22 + 10 * matrix_columns().size() + 6, '-') << "\n";
  for (const auto& r : matrix.rows) {
    out << std::setw(22) << r.preset;
    for (const auto& c : matrix_columns())
      out << std::setw(10) << (r.vulnerable.count(c) && r.vulnerable.at(c) ? "X" : ".");
    out << (r.compromised() ? "yes" : "no") << "\n";
  }
  out << std::string(22 + 10 * matrix_columns().size() + 6, '-') << "\n";
  out << std::setw(22) << "Total";
  const auto totals = matrix.totals();
  for (const auto& c : matrix_columns()) out << std::setw(10) << totals.at(c);
  out << matrix.compromised() << "/" << matrix.rows.size() << "\n";
  return out.str();
}

std::string render_text(const std::vector<CellDiff>& diffs) {
  std::ostringstream out;
  for (const auto& d : diffs)
    out << d.preset << " " << d.column << ": expected " << (d.expected ? "vulnerable" : "safe")
        << ", got " << (d.actual ? "vulnerable" : "safe") << "\n";
  return out.str();
}

}  // namespace ssoprobe::attack
