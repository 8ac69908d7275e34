#include "ssoprobe/attack/service.hpp"

#include <json.hpp>

#include "ssoprobe/attack/engine.hpp"
#include "ssoprobe/sp/policy.hpp"

namespace ssoprobe::attack {
namespace {

using Json = nlohmann::ordered_json;

net::HttpResponse json_response(int status, const Json& body) {
  return net::HttpResponse::json(status, body.dump(2) + "\n");
}

net::HttpResponse error(int status, const std::string& message) {
  return json_response(status, Json{{"error", message}});
}

std::unique_ptr<Lab> lab_for(const Json& body) {
  const bool has_preset = body.contains("preset");
  const bool has_target = body.contains("target");
  if (has_preset == has_target) throw std::invalid_argument("exactly one of preset, target");
  if (has_preset) return Lab::for_preset(body.at("preset").get<std::string>());
  return Lab::for_url(body.at("target").get<std::string>());
}

}  // namespace

EngineService::EngineService(std::vector<AttackProfile> profiles) : profiles_(std::move(profiles)) {}

net::HttpResponse EngineService::handle(const net::HttpRequest& request) {
  const auto path = request.path();
  try {
    if (request.method == "GET" && path == "/control/profiles") {
      Json list = Json::array();
      for (const auto& p : profiles_) list.push_back(to_json(p));
      return json_response(200, Json{{"profiles", list}});
    }
    if (request.method == "GET" && path.starts_with("/control/profiles/")) {
      const auto name = path.substr(std::string("/control/profiles/").size());
      for (const auto& p : profiles_)
        if (p.name == name) return json_response(200, to_json(p));
      return error(404, "unknown profile " + name);
    }
    if (request.method == "GET" && path == "/control/presets") {
      Json names = Json::array();
      for (const auto& n : sp::preset_names()) names.push_back(n);
      names.push_back("hardened");
      return json_response(200, Json{{"presets", names}});
    }
    if (request.method == "POST" && (path == "/control/run" || path == "/control/audit")) {
      const auto body = Json::parse(request.body);
      if (!body.is_object()) return error(400, "expected an object");
      std::lock_guard lock(run_mutex_);
      auto lab = lab_for(body);
      Engine engine(*lab);
      if (path == "/control/audit") return json_response(200, to_json(engine.run_all(profiles_)));

      const auto& requested = body.at("profile");
      AttackProfile profile;
      if (requested.is_string()) {
        const auto it = std::find_if(profiles_.begin(), profiles_.end(),
                                     [&](const auto& p) { return p.name == requested.get<std::string>(); });
        if (it == profiles_.end()) return error(404, "unknown profile " + requested.get<std::string>());
        profile = *it;
      } else {
        profile = profile_from_json(requested);
      }
      NormalFlow flow;
      try {
        flow = engine.analyze();
      } catch (const TargetNotConformant& e) {
        return json_response(422, Json{{"error", e.what()}, {"step", e.step()}});
      }
      return json_response(200, to_json(engine.run_profile(flow, profile)));
    }
  } catch (const nlohmann::json::exception& e) {
    return error(400, e.what());
  } catch (const std::invalid_argument& e) {
    return error(400, e.what());
  }
  return error(404, "no route");
}

}  // namespace ssoprobe::attack
