#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ssoprobe/attack/engine.hpp"
#include "ssoprobe/attack/matrix.hpp"
#include "ssoprobe/openid/errors.hpp"
#include "ssoprobe/openid/message.hpp"
#include "ssoprobe/openid/nonce.hpp"
#include "ssoprobe/sp/policy.hpp"

namespace py = pybind11;
using namespace ssoprobe;

namespace {

std::unique_ptr<attack::Lab> lab_for(const std::string& target) {
  if (sp::is_preset(target)) return attack::Lab::for_preset(target);
  return attack::Lab::for_url(target);
}

attack::AttackProfile profile_for(const std::string& requested) {
  if (const auto p = attack::find_builtin(requested)) return *p;
  return attack::parse_profile(requested);
}

std::string audit(const std::string& target) {
  py::gil_scoped_release release;
  auto lab = lab_for(target);
  return attack::to_json(attack::Engine(*lab).run_all()).dump();
}

std::string run_profile(const std::string& target, const std::string& profile) {
  const auto p = profile_for(profile);
  py::gil_scoped_release release;
  auto lab = lab_for(target);
  attack::Engine engine(*lab);
  return attack::to_json(engine.run_profile(engine.analyze(), p)).dump();
}

std::string matrix(const std::optional<std::string>& presets_file) {
  py::gil_scoped_release release;
  const auto policies = presets_file ? attack::load_preset_file(*presets_file)
                                     : attack::builtin_preset_policies();
  const auto m = attack::run_matrix(policies);
  auto j = attack::to_json(m);
  j["diff"] = attack::to_json(attack::diff(attack::expected_as_matrix(), m));
  return j.dump();
}

std::vector<std::string> profiles() {
  std::vector<std::string> out;
  for (const auto& p : attack::builtin_profiles()) out.push_back(attack::serialize(p));
  return out;
}

openid::OpenIdMessage to_message(const std::vector<std::pair<std::string, std::string>>& params) {
  openid::OpenIdMessage m;
  for (const auto& [k, v] : params) m.add(k, v);
  return m;
}

std::vector<std::pair<std::string, std::string>> from_message(const openid::OpenIdMessage& m) {
  return {m.params().begin(), m.params().end()};
}

}  // namespace

PYBIND11_MODULE(_native, m) {
  m.doc() = "ssoprobe engine bindings; structured results are JSON text";

  py::register_exception<attack::TargetNotConformant>(m, "TargetNotConformant", PyExc_RuntimeError);
  py::register_exception<openid::CodecError>(m, "CodecError", PyExc_ValueError);

  m.def("presets", [] {
    auto names = sp::preset_names();
    names.push_back("hardened");
    return names;
  });
  m.def("policy", [](const std::string& preset) { return sp::to_json(sp::load_preset(preset)).dump(); },
        py::arg("preset"));
  m.def("profiles", &profiles, "Built-in attack profiles, serialized");
  m.def("audit", &audit, py::arg("target"), "analyze plus every built-in profile; report JSON");
  m.def("run_profile", &run_profile, py::arg("target"), py::arg("profile"),
        "One profile (built-in name or profile JSON) against a preset or URL");
  m.def("matrix", &matrix, py::arg("presets_file") = std::nullopt);
  m.def("expected_matrix", [] { return attack::expected_matrix(); });

  m.def("encode_key_value", [](const std::vector<std::pair<std::string, std::string>>& params) {
    return openid::encode_key_value(to_message(params));
  });
  m.def("decode_key_value", [](const std::string& body) {
    return from_message(openid::decode_key_value(body));
  });
  m.def("make_nonce", &openid::make_nonce, py::arg("timestamp"), py::arg("suffix"));
  m.def("nonce_timestamp", [](const std::string& nonce) { return openid::nonce_timestamp(nonce); });
}
