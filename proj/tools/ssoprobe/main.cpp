// ssoprobe: OpenID 2.0 relying-party attack toolkit.
//
// Exit codes: 0 clean, 2 findings (audit: any VULNERABLE; matrix: differs
// from the expected matrix), 1 error.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "ssoprobe/attack/engine.hpp"
#include "ssoprobe/attack/matrix.hpp"
#include "ssoprobe/attack/service.hpp"
#include "ssoprobe/config.hpp"
#include "ssoprobe/idp/server.hpp"
#include "ssoprobe/net/httplib_bridge.hpp"
#include "ssoprobe/sp/harness.hpp"

namespace fs = std::filesystem;
using namespace ssoprobe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFindings = 2;

cli::Verbosity g_verbosity = cli::Verbosity::info;

void info(const std::string& line) {
  if (g_verbosity != cli::Verbosity::quiet) std::cerr << line << "\n";
}

void debug(const std::string& line) {
  if (g_verbosity == cli::Verbosity::debug) std::cerr << line << "\n";
}

std::vector<attack::AttackProfile> profiles_for(const cli::ToolConfig& config) {
  if (!config.profile_dir) return attack::builtin_profiles();
  auto loaded = attack::load_profile_dir(*config.profile_dir);
  if (loaded.empty()) throw std::invalid_argument("no profiles in " + *config.profile_dir);
  return loaded;
}

// Forwards to a service built once its listening origin is known.
struct Forwarder final : net::HttpService {
  std::shared_ptr<net::HttpService> inner;
  net::HttpResponse handle(const net::HttpRequest& r) override { return inner->handle(r); }
};

struct Listener {
  std::shared_ptr<Forwarder> forwarder = std::make_shared<Forwarder>();
  std::unique_ptr<net::SocketServer> server;
  std::string origin;
};

Listener listen_on(const std::string& host, int port) {
  Listener l;
  l.server = std::make_unique<net::SocketServer>(l.forwarder, "");
  const int bound = l.server->start(host, port);
  l.origin = "http://" + host + ":" + std::to_string(bound);
  l.server->set_public_origin(l.origin);
  return l;
}

int cmd_serve(const cli::ToolConfig& config, const std::vector<std::string>& presets,
              const std::vector<std::string>& identities) {
  for (const auto& p : presets)
    if (!sp::is_preset(p)) throw std::invalid_argument("unknown preset " + p);

  // Signals are collected with sigwait; server threads inherit the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  net::SocketTransport transport;
  std::vector<Listener> listeners;

  const auto [idp_host, idp_port] = cli::split_host_port(config.idp_bind);
  listeners.push_back(listen_on(idp_host, idp_port));
  idp::IdpConfig idp_config;
  idp_config.base_url = config.idp_base_url.value_or(listeners.back().origin);
  idp_config.identities = {identities.begin(), identities.end()};
  auto idp = std::make_shared<idp::IdpServer>(idp_config);
  listeners.back().forwarder->inner = idp;
  if (config.idp_base_url) listeners.back().server->set_public_origin(*config.idp_base_url);
  std::cout << "idp  " << idp->base_url() << "/\n";
  for (const auto& name : identities) std::cout << "  identity " << idp->identity_url(name) << "\n";

  for (const auto& name : presets) {
    listeners.push_back(listen_on(idp_host, 0));
    auto& l = listeners.back();
    l.forwarder->inner = std::make_shared<sp::SpHarness>(sp::SpConfig{l.origin, sp::load_preset(name)},
                                                         transport);
    std::cout << "sp   " << name << " " << l.origin << "/\n";
  }

  const auto [api_host, api_port] = cli::split_host_port(config.api_bind);
  listeners.push_back(listen_on(api_host, api_port));
  listeners.back().forwarder->inner = std::make_shared<attack::EngineService>(profiles_for(config));
  std::cout << "api  " << listeners.back().origin << "/control/profiles\n";
  std::cout << "ready" << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  info("shutting down");
  for (auto& l : listeners) l.server->stop();
  return kExitOk;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_audit(const cli::ToolConfig& config, const std::string& bind_host) {
  if (config.targets.empty()) throw std::invalid_argument("no target: use --preset, --target or a config file");
  const auto profiles = profiles_for(config);
  fs::create_directories(config.report_dir);

  bool errors = false, findings = false;
  for (const auto& target : config.targets) {
    info("auditing " + target.describe());
    std::unique_ptr<attack::Lab> lab;
    attack::SecurityReport report;
    try {
      lab = target.is_preset() ? attack::Lab::for_preset(target.preset)
                               : attack::Lab::for_url(target.url, bind_host);
      attack::Engine engine(*lab);
      report = engine.run_all(profiles);
    } catch (const std::exception& e) {
      report.target = target.describe();
      report.error = e.what();
    }
    for (const auto& r : report.results)
      debug("  " + r.profile + ": " + std::string(attack::to_string(r.verdict)));

    const fs::path base = fs::path(config.report_dir) / target.slug();
    write_file(base.string() + ".json", attack::to_json(report).dump(2) + "\n");
    const auto text = attack::render_text(report);
    write_file(base.string() + ".txt", text);
    std::cout << text;
    if (report.error) {
      std::cerr << "error: " << target.describe() << ": " << *report.error << "\n";
      errors = true;
    } else if (report.vulnerable_count() > 0) {
      findings = true;
    }
    info("report " + base.string() + ".{json,txt}");
  }
  return errors ? kExitError : findings ? kExitFindings : kExitOk;
}

int cmd_matrix(const cli::ToolConfig& config, const std::string& format,
               const std::optional<std::string>& presets_file) {
  const auto policies = presets_file ? attack::load_preset_file(*presets_file)
                                     : attack::builtin_preset_policies();
  const auto matrix = attack::run_matrix(policies, profiles_for(config));
  const auto diffs = attack::diff(attack::expected_as_matrix(), matrix);
  if (format == "json") {
    auto j = attack::to_json(matrix);
    j["matches_expected"] = diffs.empty();
    j["diff"] = attack::to_json(diffs);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << attack::render_text(matrix);
    if (!diffs.empty()) std::cout << "\n" << attack::render_text(diffs);
  }
  return diffs.empty() ? kExitOk : kExitFindings;
}

int cmd_profiles(const cli::ToolConfig& config, const std::string& action, const std::string& arg) {
  const auto profiles = profiles_for(config);
  if (action == "list") {
    for (const auto& p : profiles)
      std::cout << p.name << "\t" << attack::to_string(p.attack_class) << "\t"
                << attack::to_string(p.choreography) << "\n";
    return kExitOk;
  }
  if (action == "show") {
    for (const auto& p : profiles)
      if (p.name == arg) {
        std::cout << attack::serialize(p);
        return kExitOk;
      }
    throw std::invalid_argument("unknown profile " + arg);
  }
  // export
  attack::write_profile_dir(arg, profiles);
  info("wrote " + std::to_string(profiles.size()) + " profiles to " + arg);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OpenID 2.0 relying-party attack toolkit"};
  app.footer("Exit codes: 0 clean, 2 findings or matrix mismatch, 1 error.\n"
             "Config file path: --config, else $" + std::string(cli::kConfigEnv) + ".");
  app.require_subcommand(1);

  std::optional<std::string> config_flag, profile_dir, report_dir;
  bool verbose = false, quiet = false;
  app.add_option("-c,--config", config_flag, "JSON config file");
  app.add_option("--profiles", profile_dir, "Attack profile directory (default: built-in)");
  app.add_flag("-v,--verbose", verbose, "Debug output");
  app.add_flag("-q,--quiet", quiet, "Errors only");

  auto* serve = app.add_subcommand("serve", "Run the IdP, preset relying parties and the engine API");
  std::optional<std::string> idp_bind, idp_base, api_bind;
  std::vector<std::string> serve_presets, identities{"alice", "victim"};
  serve->add_option("--idp", idp_bind, "IdP listen address host:port");
  serve->add_option("--idp-base-url", idp_base, "Public IdP URL when proxied");
  serve->add_option("--api", api_bind, "Engine API listen address host:port");
  serve->add_option("--preset", serve_presets, "Serve a preset relying party (repeatable)");
  serve->add_option("--identity", identities, "IdP identity names")->capture_default_str();

  auto* audit = app.add_subcommand("audit", "Analyze a target and run every profile");
  std::vector<std::string> audit_presets, audit_urls;
  std::string bind_host = "127.0.0.1";
  audit->add_option("--preset", audit_presets, "Built-in preset target (repeatable)");
  audit->add_option("--target", audit_urls, "External relying party URL (repeatable)");
  audit->add_option("-o,--out", report_dir, "Report directory");
  audit->add_option("--bind", bind_host, "Address the lab services listen on")->capture_default_str();

  auto* matrix = app.add_subcommand("matrix", "Sweep the presets and compare with the expected matrix");
  std::string format = "text";
  std::optional<std::string> presets_file;
  matrix->add_option("--format", format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  matrix->add_option("--presets", presets_file, "Preset override file")->check(CLI::ExistingFile);

  auto* profiles = app.add_subcommand("profiles", "Inspect attack profiles");
  profiles->require_subcommand(1);
  std::string profile_name, export_dir;
  profiles->add_subcommand("list", "List profiles");
  profiles->add_subcommand("show", "Print one profile")->add_option("name", profile_name)->required();
  profiles->add_subcommand("export", "Write profiles to a directory")->add_option("dir", export_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    cli::ToolConfig config;
    if (const auto path = cli::config_path(config_flag)) config = cli::load_config_file(*path);
    if (profile_dir) config.profile_dir = profile_dir;
    if (report_dir) config.report_dir = *report_dir;
    if (idp_bind) config.idp_bind = *idp_bind;
    if (idp_base) config.idp_base_url = idp_base;
    if (api_bind) config.api_bind = *api_bind;
    if (!audit_presets.empty() || !audit_urls.empty()) {
      config.targets.clear();
      for (const auto& p : audit_presets) {
        if (!sp::is_preset(p)) throw std::invalid_argument("unknown preset " + p);
        config.targets.push_back({p, ""});
      }
      for (const auto& u : audit_urls) config.targets.push_back({"", u});
    }
    if (verbose) config.verbosity = cli::Verbosity::debug;
    if (quiet) config.verbosity = cli::Verbosity::quiet;
    g_verbosity = config.verbosity;

    if (*serve) return cmd_serve(config, serve_presets, identities);
    if (*audit) return cmd_audit(config, bind_host);
    if (*matrix) return cmd_matrix(config, format, presets_file);
    for (const char* action : {"list", "show", "export"})
      if (profiles->got_subcommand(action))
        return cmd_profiles(config, action, action == std::string("show") ? profile_name : export_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
