#include <gtest/gtest.h>

#include "ssoprobe/net/http.hpp"
#include "ssoprobe/net/httplib_bridge.hpp"
#include "ssoprobe/net/in_memory.hpp"
#include "ssoprobe/net/user_agent.hpp"

namespace ssoprobe::net {
namespace {

std::shared_ptr<HttpService> echo() {
  return std::make_shared<FunctionService>([](const HttpRequest& r) {
    if (r.path() == "/set") {
      HttpResponse res = HttpResponse::redirect("/show");
      res.headers.add("Set-Cookie", "sid=abc; Path=/; HttpOnly");
      return res;
    }
    if (r.path() == "/show") return HttpResponse::text(200, r.cookie("sid").value_or("none"));
    if (r.path() == "/away") return HttpResponse::redirect("https://other.example/landing?x=1");
    if (r.path() == "/loop") return HttpResponse::redirect("/loop");
    return HttpResponse::text(200, r.method + " " + r.param("q").value_or("-"));
  });
}

TEST(InMemoryNetwork, RoutesByOrigin) {
  InMemoryNetwork network;
  network.mount("https://a.example", echo());
  EXPECT_EQ(network.send(get_request("https://a.example/x?q=1")).body, "GET 1");
  EXPECT_EQ(network.send(post_form("https://a.example/x", {{"q", "a b"}})).body, "POST a b");
  EXPECT_THROW(network.send(get_request("https://b.example/")), TransportError);
  const auto log = network.exchanges();
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[0].status, 200);
  EXPECT_EQ(log[2].status, 0);
}

TEST(UserAgent, CookiesAndRedirects) {
  InMemoryNetwork network;
  network.mount("https://a.example", echo());
  UserAgent browser(network);
  const auto r = browser.get("https://a.example/set");
  EXPECT_EQ(r.response.body, "abc");
  EXPECT_EQ(r.url, "https://a.example/show");
  EXPECT_EQ(browser.cookie("a.example", "sid"), "abc");
}

TEST(UserAgent, StopPredicateHoldsRedirect) {
  InMemoryNetwork network;
  network.mount("https://a.example", echo());
  UserAgent browser(network);
  const auto r = browser.get("https://a.example/away", [](const std::string& url) {
    return url.starts_with("https://other.example/");
  });
  ASSERT_TRUE(r.held);
  EXPECT_EQ(*r.held, "https://other.example/landing?x=1");
  EXPECT_EQ(network.exchanges().size(), 1u);
}

TEST(UserAgent, RedirectLimit) {
  InMemoryNetwork network;
  network.mount("https://a.example", echo());
  UserAgent browser(network, 3);
  const auto r = browser.get("https://a.example/loop");
  EXPECT_TRUE(r.response.is_redirect());
  EXPECT_EQ(network.exchanges().size(), 4u);
}

TEST(ResolveLocation, RelativeForms) {
  EXPECT_EQ(resolve_location("https://a.example/x/y", "/z"), "https://a.example/z");
  EXPECT_EQ(resolve_location("https://a.example/x/y", "z"), "https://a.example/x/z");
  EXPECT_EQ(resolve_location("https://a.example/x", "//b.example/"), "https://b.example/");
}

TEST(SocketServer, ServesOverLoopback) {
  SocketServer server(echo(), "http://127.0.0.1");
  const int port = server.start("127.0.0.1", 0);
  server.set_public_origin("http://127.0.0.1:" + std::to_string(port));
  SocketTransport transport(5);
  UserAgent browser(transport);
  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  EXPECT_EQ(browser.get(base + "/x?q=hello").response.body, "GET hello");
  EXPECT_EQ(browser.post(base + "/x", {{"q", "posted"}}).response.body, "POST posted");
  EXPECT_EQ(browser.get(base + "/set").response.body, "abc");
  server.stop();
  EXPECT_THROW(transport.send(get_request(base + "/x")), TransportError);
}

}  // namespace
}  // namespace ssoprobe::net
