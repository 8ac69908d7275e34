#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "ssoprobe/attack/engine.hpp"
#include "ssoprobe/attack/matrix.hpp"
#include "ssoprobe/attack/service.hpp"
#include "ssoprobe/net/httplib_bridge.hpp"
#include "ssoprobe/openid/url.hpp"

namespace ssoprobe::attack {
namespace {

std::vector<std::string> labels(const AttackResult& r) {
  std::vector<std::string> out;
  for (const auto& s : r.evidence.trace) out.push_back(s.label);
  return out;
}

AttackResult run_one(const std::string& preset, AttackClass cls) {
  auto lab = Lab::for_preset(preset);
  Engine engine(*lab);
  const auto flow = engine.analyze();
  for (const auto& p : builtin_profiles())
    if (p.attack_class == cls) return engine.run_profile(flow, p);
  ADD_FAILURE() << "no profile";
  return {};
}

AttackResult run_policy(const sp::VerificationPolicy& policy, AttackClass cls,
                        EngineOptions options = {}) {
  auto lab = Lab::for_policy(policy, "custom");
  Engine engine(*lab, options);
  const auto flow = engine.analyze();
  for (const auto& p : builtin_profiles())
    if (p.attack_class == cls) return engine.run_profile(flow, p);
  return {};
}

TEST(Matrix, BuiltinPresetsMatchExpectedCells) {
  const auto m = run_matrix(builtin_preset_policies());
  const auto d = diff(expected_as_matrix(), m);
  EXPECT_TRUE(d.empty()) << render_text(d);
  const auto totals = m.totals();
  EXPECT_EQ(totals.at("TRC"), 6);
  EXPECT_EQ(totals.at("KC"), 3);
  EXPECT_EQ(totals.at("IDS"), 6);
  EXPECT_EQ(totals.at("DS"), 1);
  EXPECT_EQ(m.compromised(), 11);
  EXPECT_EQ(m.rows.size(), 16u);
}

TEST(Matrix, ExpectedCellsAreConsistent) {
  const auto e = expected_as_matrix();
  EXPECT_EQ(e.totals().at("TRC"), 6);
  EXPECT_EQ(e.totals().at("KC"), 3);
  EXPECT_EQ(e.totals().at("IDS"), 6);
  EXPECT_EQ(e.totals().at("DS"), 1);
  EXPECT_EQ(e.totals().at("UNSIGNED"), 4);
  EXPECT_EQ(e.totals().at("XXE"), 2);
  EXPECT_EQ(e.totals().at("REPLAY"), 0);
  EXPECT_EQ(e.compromised(), 11);
}

TEST(Matrix, TamperedPresetShowsCellDiff) {
  auto policies = builtin_preset_policies();
  for (auto& [name, policy] : policies)
    if (name == "drupal") policy.key_lookup = sp::KeyLookup::by_idp_and_handle;
  const auto m = run_matrix(policies);
  const auto d = diff(expected_as_matrix(), m);
  ASSERT_EQ(d.size(), 1u) << render_text(d);
  EXPECT_EQ(d[0].preset, "drupal");
  EXPECT_EQ(d[0].column, "KC");
  EXPECT_TRUE(d[0].expected);
  EXPECT_FALSE(d[0].actual);
}

TEST(Engine, HardenedIsSafeAgainstEverything) {
  auto lab = Lab::for_preset("hardened");
  Engine engine(*lab);
  const auto report = engine.run_all();
  ASSERT_FALSE(report.error) << *report.error;
  ASSERT_EQ(report.results.size(), 8u);
  for (const auto& r : report.results)
    EXPECT_EQ(r.verdict, Outcome::safe) << r.profile << "\n" << to_json(r).dump(2);
}

TEST(Engine, CfOpenIdFindings) {
  auto lab = Lab::for_preset("cf-openid");
  Engine engine(*lab);
  const auto report = engine.run_all();
  std::set<AttackClass> vulnerable;
  for (const auto& r : report.results)
    if (r.verdict == Outcome::vulnerable) vulnerable.insert(r.attack_class);
  EXPECT_EQ(vulnerable, (std::set<AttackClass>{AttackClass::trc, AttackClass::ids,
                                               AttackClass::unsigned_params}));
}

TEST(Engine, AnalyzeHardened) {
  auto lab = Lab::for_preset("hardened");
  Engine engine(*lab);
  const auto flow = engine.analyze();
  EXPECT_TRUE(flow.rediscovery);
  EXPECT_EQ(flow.assoc_type, "HMAC-SHA256");
  EXPECT_FALSE(flow.direct_verification);
  EXPECT_EQ(flow.callback_url, lab->target().callback_url());
  ASSERT_FALSE(flow.messages.empty());
  EXPECT_EQ(flow.messages.front().phase, "discovery");
}

TEST(Engine, AnalyzeDirectVerification) {
  auto lab = Lab::for_preset("simple-openid-php");
  Engine engine(*lab);
  const auto flow = engine.analyze();
  EXPECT_TRUE(flow.direct_verification);
  EXPECT_FALSE(flow.assoc_type);
}

TEST(Engine, UnreachableTargetIsNotConformant) {
  auto lab = Lab::for_preset("hardened");
  lab->network()->unmount(lab->target().base_url);
  Engine engine(*lab);
  try {
    engine.analyze();
    FAIL() << "expected TargetNotConformant";
  } catch (const TargetNotConformant& e) {
    EXPECT_EQ(e.step(), "login_request");
  }
  const auto report = engine.run_all();
  EXPECT_TRUE(report.error);
  EXPECT_TRUE(report.results.empty());
}

TEST(Trc, JoidExploitTrace) {
  const auto r = run_one("joid", AttackClass::trc);
  EXPECT_EQ(r.verdict, Outcome::vulnerable);
  EXPECT_EQ(labels(r), (std::vector<std::string>{"lure_visited", "auth_request_redirect(victim_idp)",
                                                 "token_issued", "token_collected",
                                                 "token_replayed"}));
}

TEST(Trc, HardenedRejectsForeignReturnTo) {
  const auto r = run_one("hardened", AttackClass::trc);
  EXPECT_EQ(r.verdict, Outcome::safe);
  EXPECT_EQ(r.evidence.sp_verdict.value("reason", ""), "return_to_mismatch");
}

const std::vector<std::string> kInterleaved = {
    "login_request(attacker_id)",
    "discovery_request",
    "discovery_response",
    "association(beta)",
    "auth_request_redirect(attacker_idp)",
    "forged_token_issued",
    "token_delayed",
    "login_request(victim_id)",
    "discovery_request(victim_id)",
    "discovery_response(victim_idp)",
    "association(alpha)",
    "auth_request_redirect(victim_idp)",
    "token_delivered",
    "logged_in_as_victim",
};

TEST(KeyConfusion, DrupalInterleavedTrace) {
  const auto r = run_one("drupal", AttackClass::kc2);
  EXPECT_EQ(r.verdict, Outcome::vulnerable);
  EXPECT_EQ(labels(r), kInterleaved);
}

TEST(KeyConfusion, DrupalFixFlipsVerdict) {
  auto policy = sp::load_preset("drupal");
  policy.key_lookup = sp::KeyLookup::by_idp_and_handle;
  const auto r = run_policy(policy, AttackClass::kc2);
  EXPECT_EQ(r.verdict, Outcome::safe);
  auto expected = kInterleaved;
  expected.back() = "rejected";
  EXPECT_EQ(labels(r), expected);
  EXPECT_EQ(r.evidence.sp_verdict.value("reason", ""), "key_mismatch");
}

TEST(KeyConfusion, DirectVerificationIsInconclusive) {
  EXPECT_EQ(run_one("lightopenid", AttackClass::kc1).verdict, Outcome::inconclusive);
  EXPECT_EQ(run_one("lightopenid", AttackClass::kc2).verdict, Outcome::inconclusive);
}

TEST(KeyConfusion, HandleOverwrite) {
  EXPECT_EQ(run_one("zend", AttackClass::kc1).verdict, Outcome::vulnerable);
  EXPECT_EQ(run_one("drupal", AttackClass::kc1).verdict, Outcome::safe);
  EXPECT_EQ(run_one("hardened", AttackClass::kc1).verdict, Outcome::safe);
}

TEST(IdSpoofing, DrupalRediscoveryStopsPlainIds) {
  const auto r = run_one("drupal", AttackClass::ids);
  EXPECT_EQ(r.verdict, Outcome::safe);
  EXPECT_EQ(r.evidence.sp_verdict.value("reason", ""), "idp_mismatch");
}

TEST(DiscoverySpoofing, LocalIdTrust) {
  EXPECT_EQ(run_one("simple-openid-php", AttackClass::ds).verdict, Outcome::vulnerable);
  EXPECT_EQ(run_one("hardened", AttackClass::ds).verdict, Outcome::safe);
  auto policy = sp::hardened_policy();
  policy.trust_discovered_local_id = true;
  EXPECT_EQ(run_policy(policy, AttackClass::ds).verdict, Outcome::vulnerable);
}

TEST(Unsigned, ControlAlwaysRejected) {
  for (const auto& name : sp::preset_names()) {
    const auto r = run_one(name, AttackClass::unsigned_params);
    ASSERT_EQ(r.evidence.trace.size(), 7u) << name;
    EXPECT_EQ(r.evidence.trace.back().label, "control(signed claimed_id)");
    EXPECT_TRUE(r.evidence.trace.back().detail.starts_with("REJECTED")) << name;
  }
}

TEST(Replay, HardenedRejectsSecondSubmission) {
  const auto r = run_one("hardened", AttackClass::replay);
  EXPECT_EQ(r.verdict, Outcome::safe);
  EXPECT_EQ(r.evidence.sp_verdict.value("reason", ""), "nonce_reused");
}

TEST(Replay, NonceCheckOffIsVulnerable) {
  auto policy = sp::hardened_policy();
  policy.check_nonce = false;
  EXPECT_EQ(run_policy(policy, AttackClass::replay).verdict, Outcome::vulnerable);
}

TEST(Replay, BackDatedProbesAgainstWindow) {
  for (std::int64_t window : {4 * 3600, 13 * 3600, 14 * 86400}) {
    auto policy = sp::hardened_policy();
    policy.nonce_window = window;
    EngineOptions options;
    options.replay_offsets = {{"inside", window - 60}, {"beyond", window + 60}};
    const auto r = run_policy(policy, AttackClass::replay, options);
    const auto& obs = r.evidence.observations;
    ASSERT_EQ(obs.size(), 3u);
    EXPECT_EQ(obs[0], "back-dated inside: LOGGED_IN as URL.ID_A");
    EXPECT_EQ(obs[1], "back-dated beyond: REJECTED(nonce_stale)");
    EXPECT_EQ(obs[2], "acceptance window reaches at least inside");
  }
}

TEST(Xxe, CanaryHitsMatchParserMode) {
  for (const auto& [mode, hits] : std::vector<std::pair<discovery::XxeMode, int>>{
           {discovery::XxeMode::resolve_unsafe, 1},
           {discovery::XxeMode::flag, 0},
           {discovery::XxeMode::reject, 0}}) {
    auto policy = sp::hardened_policy();
    policy.xxe = mode;
    auto lab = Lab::for_policy(policy, "xxe");
    Engine engine(*lab);
    const auto flow = engine.analyze();
    const auto r = engine.run_profile(flow, *find_builtin("xxe"));
    EXPECT_EQ(lab->canary().hits(), hits) << discovery::to_string(mode);
    EXPECT_EQ(r.verdict, hits ? Outcome::vulnerable : Outcome::safe);
  }
}

TEST(Xxe, MalformedProbeIsInconclusive) {
  auto profile = *find_builtin("xxe");
  profile.mutations = {{idp::MutationKind::xxe_payload, "<XRDS><unclosed>", "${canary_url}"}};
  auto lab = Lab::for_preset("net-openid-consumer");
  Engine engine(*lab);
  const auto r = engine.run_profile(engine.analyze(), profile);
  EXPECT_EQ(r.verdict, Outcome::inconclusive);
  EXPECT_EQ(lab->canary().hits(), 0);
}

TEST(Properties, DeterministicVerdictsAndStableBody) {
  for (const auto& preset : {"drupal", "cf-openid", "hardened"}) {
    auto a = Lab::for_preset(preset);
    auto b = Lab::for_preset(preset);
    const auto ra = Engine(*a).run_all();
    const auto rb = Engine(*b).run_all();
    EXPECT_EQ(report_body(ra).dump(), report_body(rb).dump()) << preset;
  }
}

TEST(Properties, IsolationBetweenAttacks) {
  auto lab = Lab::for_preset("sourceforge");
  Engine engine(*lab);
  const auto report = engine.run_all();
  for (const auto& r : report.results)
    for (const auto& o : r.evidence.observations)
      EXPECT_FALSE(o.starts_with("honest login failed")) << r.profile;
  EXPECT_TRUE(lab->attacker().mutations().empty());
  EXPECT_TRUE(engine.honest_login());
}

// Weakening any single policy dimension never removes a finding.
TEST(Properties, PolicyLatticeMonotonicity) {
  struct Dim {
    const char* name;
    int levels;
    void (*apply)(sp::VerificationPolicy&, int);  // level 0 is the strongest
  };
  const Dim dims[] = {
      {"check_return_to", 2, [](sp::VerificationPolicy& p, int l) { p.check_return_to = l == 0; }},
      {"check_nonce", 2, [](sp::VerificationPolicy& p, int l) { p.check_nonce = l == 0; }},
      {"require_signed_set", 2, [](sp::VerificationPolicy& p, int l) { p.require_signed_set = l == 0; }},
      {"authority", 3,
       [](sp::VerificationPolicy& p, int l) {
         p.rediscover_always = l == 0;
         p.rediscover_on_mismatch = l <= 1;
       }},
      {"binding", 2,
       [](sp::VerificationPolicy& p, int l) {
         p.session_binding = l == 0 ? sp::SessionBinding::immutable : sp::SessionBinding::overwritable;
       }},
      {"key_lookup", 2,
       [](sp::VerificationPolicy& p, int l) {
         p.key_lookup = l == 0 ? sp::KeyLookup::by_idp_and_handle : sp::KeyLookup::by_handle;
       }},
      {"trust_local_id", 2,
       [](sp::VerificationPolicy& p, int l) { p.trust_discovered_local_id = l == 1; }},
      {"xxe", 3,
       [](sp::VerificationPolicy& p, int l) {
         p.xxe = l == 0 ? discovery::XxeMode::reject
                        : l == 1 ? discovery::XxeMode::flag : discovery::XxeMode::resolve_unsafe;
       }},
  };
  auto findings = [](const sp::VerificationPolicy& policy) {
    auto lab = Lab::for_policy(policy, "lattice");
    const auto report = Engine(*lab).run_all();
    EXPECT_FALSE(report.error);
    std::set<AttackClass> out;
    for (const auto& r : report.results)
      if (r.verdict == Outcome::vulnerable) out.insert(r.attack_class);
    return out;
  };

  std::mt19937_64 rng(20240611);
  for (int sample = 0; sample < 24; ++sample) {
    std::vector<int> levels;
    for (const auto& d : dims) levels.push_back(static_cast<int>(rng() % d.levels));
    const auto which = rng() % std::size(dims);
    if (levels[which] + 1 >= dims[which].levels) levels[which] = dims[which].levels - 2;
    // always and on_mismatch compare against different endpoints, so neither
    // is weaker than the other; both only weaken to none.
    const bool authority = std::string_view(dims[which].name) == "authority";
    const int weaker = authority ? 2 : levels[which] + 1;
    sp::VerificationPolicy strong = sp::hardened_policy();
    for (std::size_t i = 0; i < std::size(dims); ++i) dims[i].apply(strong, levels[i]);
    sp::VerificationPolicy weak = strong;
    dims[which].apply(weak, weaker);

    const auto a = findings(strong);
    const auto b = findings(weak);
    for (auto cls : a)
      EXPECT_TRUE(b.count(cls)) << to_string(cls) << " lost when weakening " << dims[which].name
                                << "\n" << sp::to_json(strong).dump();
  }
}

TEST(Profiles, RoundTripByteIdentical) {
  for (const auto& p : builtin_profiles()) {
    const auto text = serialize(p);
    const auto back = parse_profile(text);
    EXPECT_EQ(back, p);
    EXPECT_EQ(serialize(back), text);
  }
}

TEST(Profiles, OnePerClass) {
  std::set<AttackClass> seen;
  for (const auto& p : builtin_profiles()) EXPECT_TRUE(seen.insert(p.attack_class).second);
  EXPECT_EQ(seen.size(), attack_classes().size());
}

TEST(Profiles, DirectoryRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "ssoprobe_profiles_test";
  std::filesystem::remove_all(dir);
  write_profile_dir(dir.string(), builtin_profiles());
  EXPECT_EQ(load_profile_dir(dir.string()), builtin_profiles());
  std::filesystem::remove_all(dir);
}

TEST(Profiles, RejectsUnknownKeysAndVersions) {
  auto j = to_json(builtin_profiles().front());
  j["extra"] = 1;
  EXPECT_THROW(profile_from_json(j), std::invalid_argument);
  j = to_json(builtin_profiles().front());
  j["schema_version"] = 2;
  EXPECT_THROW(profile_from_json(j), std::invalid_argument);
  EXPECT_THROW(parse_profile("{"), std::invalid_argument);
}

TEST(Profiles, TemplateExpansion) {
  const TemplateVars vars{{"victim_id", "https://idp/id/v"}, {"alpha", "H1"}};
  EXPECT_EQ(expand("${victim_id}", vars), "https://idp/id/v");
  EXPECT_EQ(expand("a${alpha}b${alpha}", vars), "aH1bH1");
  EXPECT_EQ(expand("${unknown}-${alpha", vars), "${unknown}-${alpha");
  const auto m = expand(find_builtin("kc-1")->mutations, vars);
  EXPECT_EQ(m[0].value, "H1");
  EXPECT_EQ(m[1].value, "https://idp/id/v");
}

TEST(Report, TotalsAndText) {
  auto lab = Lab::for_preset("zend");
  const auto report = Engine(*lab).run_all();
  const auto totals = report.totals();
  EXPECT_EQ(totals.at(AttackClass::kc1).vulnerable, 1);
  EXPECT_EQ(report.vulnerable_count(), 3);
  const auto j = to_json(report);
  EXPECT_TRUE(j.contains("header"));
  EXPECT_EQ(j["body"]["vulnerable"], 3);
  const auto text = render_text(report);
  EXPECT_NE(text.find("KC1         VULNERABLE"), std::string::npos) << text;
}

net::HttpResponse post(EngineService& service, const std::string& path, const std::string& body) {
  return service.handle({"POST", "http://engine.local" + path, {}, body});
}

TEST(Service, RunProfileAgainstPreset) {
  EngineService service;
  auto r = post(service, "/control/run", R"({"profile": "kc-2", "preset": "drupal"})");
  ASSERT_EQ(r.status, 200) << r.body;
  auto j = nlohmann::json::parse(r.body);
  EXPECT_EQ(j["verdict"], "VULNERABLE");
  EXPECT_EQ(j["trace"].size(), 14u);

  r = post(service, "/control/run", R"({"profile": "kc-2", "preset": "hardened"})");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(nlohmann::json::parse(r.body)["verdict"], "SAFE");
}

TEST(Service, InlineProfileAndErrors) {
  EngineService service;
  auto profile = to_json(*find_builtin("ids"));
  nlohmann::json body{{"profile", profile}, {"preset", "jopenid"}};
  auto r = post(service, "/control/run", body.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(nlohmann::json::parse(r.body)["verdict"], "VULNERABLE");

  EXPECT_EQ(post(service, "/control/run", R"({"profile": "nope", "preset": "drupal"})").status, 404);
  EXPECT_EQ(post(service, "/control/run", R"({"profile": "ids", "preset": "nope"})").status, 400);
  EXPECT_EQ(post(service, "/control/run", R"({"profile": "ids"})").status, 400);
  EXPECT_EQ(post(service, "/control/run", "{").status, 400);
  EXPECT_EQ(service.handle({"GET", "http://engine.local/control/nothing", {}, ""}).status, 404);
}

TEST(Service, Listings) {
  EngineService service;
  auto r = service.handle({"GET", "http://engine.local/control/profiles", {}, ""});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(nlohmann::json::parse(r.body)["profiles"].size(), 8u);
  r = service.handle({"GET", "http://engine.local/control/profiles/kc-1", {}, ""});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(profile_from_json(nlohmann::ordered_json::parse(r.body)), *find_builtin("kc-1"));
  r = service.handle({"GET", "http://engine.local/control/presets", {}, ""});
  EXPECT_EQ(nlohmann::json::parse(r.body)["presets"].size(), 17u);
}

TEST(Service, AuditReport) {
  EngineService service;
  const auto r = post(service, "/control/audit", R"({"preset": "zend"})");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(nlohmann::json::parse(r.body)["body"]["vulnerable"], 3);
}

// The same preset served over real sockets yields the in-memory verdicts.
TEST(SocketLab, AuditServedPreset) {
  net::SocketTransport transport;
  // The SP needs its own origin for return_to, so bind first then build it.
  struct Fwd : net::HttpService {
    std::shared_ptr<net::HttpService> inner;
    net::HttpResponse handle(const net::HttpRequest& r) override { return inner->handle(r); }
  };
  auto fwd = std::make_shared<Fwd>();
  net::SocketServer server(fwd, "");
  const int port = server.start("127.0.0.1", 0);
  const std::string origin = "http://127.0.0.1:" + std::to_string(port);
  server.set_public_origin(origin);
  fwd->inner = std::make_shared<sp::SpHarness>(sp::SpConfig{origin, sp::load_preset("cf-openid")},
                                               transport);

  auto lab = Lab::for_url(origin + "/");
  const auto report = Engine(*lab).run_all();
  server.stop();
  ASSERT_FALSE(report.error) << *report.error;
  std::set<AttackClass> vulnerable;
  for (const auto& r : report.results)
    if (r.verdict == Outcome::vulnerable) vulnerable.insert(r.attack_class);
  EXPECT_EQ(vulnerable, (std::set<AttackClass>{AttackClass::trc, AttackClass::ids,
                                               AttackClass::unsigned_params}));
}

TEST(SocketLab, UnreachableTarget) {
  auto lab = Lab::for_url("http://127.0.0.1:1/");
  const auto report = Engine(*lab).run_all();
  EXPECT_TRUE(report.error);
}

}  // namespace
}  // namespace ssoprobe::attack
