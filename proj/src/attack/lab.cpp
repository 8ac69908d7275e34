#include "ssoprobe/attack/lab.hpp"

#include <ctime>

#include "ssoprobe/discovery/discovery.hpp"
#include "ssoprobe/net/httplib_bridge.hpp"
#include "ssoprobe/net/in_memory.hpp"
#include "ssoprobe/openid/crypto.hpp"
#include "ssoprobe/openid/message.hpp"
#include "ssoprobe/openid/url.hpp"

namespace ssoprobe::attack {
namespace {

constexpr const char* kAttackerOrigin = "https://attacker.lab";
constexpr const char* kTrustedOrigin = "https://idp.lab";
constexpr const char* kCollectorOrigin = "https://collector.lab";
constexpr const char* kCanaryOrigin = "https://canary.lab";
constexpr const char* kTargetOrigin = "https://sp.lab";

class InMemoryLab final : public Lab {
 public:
  InMemoryLab(sp::VerificationPolicy policy, std::string description)
      : clock_(static_cast<std::int64_t>(std::time(nullptr))) {
    attacker_ = std::make_shared<idp::IdpServer>(attacker_idp_config(kAttackerOrigin, clock_.clock()));
    trusted_ = std::make_shared<idp::IdpServer>(trusted_idp_config(kTrustedOrigin, clock_.clock()));
    collector_ = std::make_shared<Collector>(kCollectorOrigin, network_);
    canary_ = std::make_shared<Canary>(kCanaryOrigin);
    local_sp_ = std::make_shared<sp::SpHarness>(
        sp::SpConfig{kTargetOrigin, std::move(policy), clock_.clock(), true}, network_);
    target_ = {std::move(description), kTargetOrigin};
    network_.mount(kAttackerOrigin, attacker_);
    network_.mount(kTrustedOrigin, trusted_);
    network_.mount(kCollectorOrigin, collector_);
    network_.mount(kCanaryOrigin, canary_);
    network_.mount(kTargetOrigin, local_sp_);
  }

  net::HttpTransport& transport() override { return network_; }
  openid::ManualClock* manual_clock() override { return &clock_; }
  openid::Clock clock() const override { return clock_.clock(); }
  net::InMemoryNetwork* network() override { return &network_; }

 private:
  openid::ManualClock clock_;
  net::InMemoryNetwork network_;
};

// Forwards to a service that is created after its listening port is known.
class Deferred final : public net::HttpService {
 public:
  net::HttpResponse handle(const net::HttpRequest& request) override {
    return target->handle(request);
  }
  std::shared_ptr<net::HttpService> target;
};

class SocketLab final : public Lab {
 public:
  SocketLab(const std::string& target_url, const std::string& host) {
    const auto parsed = openid::parse_url(target_url);
    if (!parsed || !openid::is_absolute_http_url(target_url))
      throw std::invalid_argument("target must be an absolute http URL: " + target_url);
    std::string base = parsed->without_query();
    while (base.ends_with('/')) base.pop_back();
    target_ = {target_url, base};

    attacker_ = std::make_shared<idp::IdpServer>(
        attacker_idp_config(listen(host), openid::system_clock()));
    servers_.back().deferred->target = attacker_;
    trusted_ = std::make_shared<idp::IdpServer>(
        trusted_idp_config(listen(host), openid::system_clock()));
    servers_.back().deferred->target = trusted_;
    collector_ = std::make_shared<Collector>(listen(host), transport_);
    servers_.back().deferred->target = collector_;
    canary_ = std::make_shared<Canary>(listen(host));
    servers_.back().deferred->target = canary_;
  }

  ~SocketLab() override {
    for (auto& s : servers_) s.server->stop();
  }

  net::HttpTransport& transport() override { return transport_; }
  openid::Clock clock() const override { return openid::system_clock(); }

 protected:
  // Harness targets expose /control/reset; anything else just answers 404.
  void reset_target() override {
    try {
      transport_.send({"POST", target_.base_url + "/control/reset", {}, ""});
    } catch (const net::TransportError&) {
    }
  }

 private:
  struct Served {
    std::shared_ptr<Deferred> deferred;
    std::unique_ptr<net::SocketServer> server;
  };

  std::string listen(const std::string& host) {
    Served s;
    s.deferred = std::make_shared<Deferred>();
    s.server = std::make_unique<net::SocketServer>(s.deferred, "");
    const int port = s.server->start(host, 0);
    const std::string origin = "http://" + host + ":" + std::to_string(port);
    s.server->set_public_origin(origin);
    servers_.push_back(std::move(s));
    return origin;
  }

  net::SocketTransport transport_;
  std::vector<Served> servers_;
};

}  // namespace

idp::IdpConfig attacker_idp_config(std::string base_url, openid::Clock clock) {
  idp::IdpConfig c;
  c.base_url = std::move(base_url);
  c.auto_approve = true;
  c.per_identity_endpoints = true;
  c.clock = std::move(clock);
  return c;
}

idp::IdpConfig trusted_idp_config(std::string base_url, openid::Clock clock) {
  idp::IdpConfig c;
  c.base_url = std::move(base_url);
  c.identities = {Lab::kVictim, Lab::kHonest};
  c.auto_approve = false;
  c.clock = std::move(clock);
  return c;
}

Collector::Collector(std::string base_url, net::HttpTransport& transport)
    : base_url_(std::move(base_url)), transport_(transport) {}

net::HttpResponse Collector::handle(const net::HttpRequest& request) {
  const auto path = request.path();
  if (path == "/lure") {
    std::string victim;
    {
      std::lock_guard lock(mutex_);
      victim = victim_;
    }
    if (victim.empty()) return net::HttpResponse::text(200, "<html><body>hello</body></html>", "text/html");
    discovery::DiscoveryResult found;
    try {
      found = discovery::discover(victim, transport_);
    } catch (const std::exception& e) {
      return net::HttpResponse::text(502, e.what());
    }
    auto m = openid::OpenIdMessage::with_mode("checkid_setup");
    m.set_field("claimed_id", found.claimed_id);
    m.set_field("identity", found.op_local_id.value_or(found.claimed_id));
    m.set_field("return_to", base_url_ + "/collect");
    m.set_field("realm", base_url_ + "/");
    return net::HttpResponse::redirect(openid::encode_indirect(m, found.op_endpoint));
  }
  if (path == "/collect") {
    std::lock_guard lock(mutex_);
    collected_.push_back(request.url);
    return net::HttpResponse::text(200, "<html><body>thanks</body></html>", "text/html");
  }
  return net::HttpResponse::text(404, "not found");
}

void Collector::set_victim(std::string claimed_id) {
  std::lock_guard lock(mutex_);
  victim_ = std::move(claimed_id);
}

std::optional<std::string> Collector::take() {
  std::lock_guard lock(mutex_);
  if (collected_.empty()) return std::nullopt;
  auto url = std::move(collected_.back());
  collected_.pop_back();
  return url;
}

void Collector::reset() {
  std::lock_guard lock(mutex_);
  victim_.clear();
  collected_.clear();
}

Canary::Canary(std::string base_url)
    : base_url_(std::move(base_url)), marker_("ssoprobe-canary-" + openid::random_token(12)) {}

net::HttpResponse Canary::handle(const net::HttpRequest&) {
  ++hits_;
  return net::HttpResponse::text(200, marker_);
}

std::unique_ptr<Lab> Lab::for_policy(sp::VerificationPolicy policy, std::string description) {
  return std::make_unique<InMemoryLab>(std::move(policy), std::move(description));
}

std::unique_ptr<Lab> Lab::for_preset(const std::string& preset) {
  return for_policy(sp::load_preset(preset), preset);
}

std::unique_ptr<Lab> Lab::for_url(const std::string& target_url, const std::string& bind_host) {
  return std::make_unique<SocketLab>(target_url, bind_host);
}

std::string Lab::fresh_attacker_identity() {
  const std::string name = "mallory-" + std::to_string(++attacker_counter_);
  attacker_->add_identity(name);
  return attacker_->identity_url(name);
}

void Lab::reset() {
  attacker_->reset();
  trusted_->reset();
  collector_->reset();
  canary_->reset();
  reset_target();
}

}  // namespace ssoprobe::attack
