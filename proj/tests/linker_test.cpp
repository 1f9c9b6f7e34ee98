// Copyright 2026 The Threatscope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "threatscope/linker.hpp"

#include <doctest.h>

#include <atomic>
#include <set>
#include <thread>

#include "threatscope/error.hpp"
#include "threatscope/text_util.hpp"
#include "test_util.hpp"

using namespace threatscope;
using linker::LinkStage;
using linker::LinkTable;
using linker::OfflinePageCache;
using linker::Page;
using tstest::make_tweet;

namespace {

const std::filesystem::path kFixture = THREATSCOPE_TESTDATA "/linking";

// In-memory provider for unit tests.
class MapProvider : public linker::PageProvider {
 public:
  void put(const std::string& url, const std::string& body,
           const std::string& final_url = "") {
    pages_[url] = Page{final_url.empty() ? url : final_url, body};
  }
  std::optional<Page> fetch(const std::string& url) override {
    ++fetches;
    const auto it = pages_.find(url);
    if (it == pages_.end()) return std::nullopt;
    return it->second;
  }
  int fetches = 0;

 private:
  std::map<std::string, Page> pages_;
};

corpus::Tweet with_urls(corpus::Tweet tweet, std::vector<std::string> urls) {
  tweet.urls = std::move(urls);
  return tweet;
}

}  // namespace

TEST_CASE("extract_cves normalizes case and deduplicates") {
  CHECK(linker::extract_cves("patch cve-2016-5195 now") ==
        std::set<std::string>{"CVE-2016-5195"});
  CHECK(linker::extract_cves("no identifiers here").empty());
  CHECK(linker::extract_cves("CVE-2017-6753 and CVE-2017-6753") ==
        std::set<std::string>{"CVE-2017-6753"});
  CHECK(linker::extract_cves("ids CVE-2017-1000001 and Cve-2014-0160!") ==
        std::set<std::string>{"CVE-2014-0160", "CVE-2017-1000001"});
  // Too few trailing digits is not an id.
  CHECK(linker::extract_cves("CVE-2016-519").empty());
  CHECK(linker::extract_cves("CVE-16-5195").empty());
}

TEST_CASE("stage 1 links from text and raw url strings") {
  MapProvider provider;
  const auto by_text = linker::link_tweet(
      make_tweet("a", "2016-10-21T12:00:00Z", "patch CVE-2016-5195"), provider);
  REQUIRE(by_text.has_value());
  CHECK(by_text->cve_id == "CVE-2016-5195");
  CHECK(by_text->stage == LinkStage::kExplicit);

  const auto by_url = linker::link_tweet(
      with_urls(make_tweet("b", "2016-10-21T12:00:00Z", "see advisory"),
                {"http://x.example/CVE-2016-0728/info"}),
      provider);
  REQUIRE(by_url.has_value());
  CHECK(by_url->cve_id == "CVE-2016-0728");
  CHECK(by_url->stage == LinkStage::kExplicit);
  CHECK(provider.fetches == 0);  // stage 1 never touches pages
}

TEST_CASE("ambiguous explicit mentions stay unlinked without fetching") {
  MapProvider provider;
  provider.put("http://x.example/p", "CVE-2014-0160");
  const auto result = linker::link_tweet(
      with_urls(make_tweet("a", "2017-03-07T12:00:00Z",
                           "compare CVE-2017-0144 and CVE-2017-5638"),
                {"http://x.example/p"}),
      provider);
  CHECK_FALSE(result.has_value());
  CHECK(provider.fetches == 0);
}

TEST_CASE("stage 2 consults pages and skips multi-CVE bodies") {
  MapProvider provider;
  provider.put("http://one.example", "advisory for CVE-2016-7855 only");
  provider.put("http://two.example",
               "roundup: CVE-2017-0144 plus CVE-2017-5638");
  const auto single = linker::link_tweet(
      with_urls(make_tweet("a", "2016-10-27T12:00:00Z", "flash news"),
                {"http://one.example"}),
      provider);
  REQUIRE(single.has_value());
  CHECK(single->cve_id == "CVE-2016-7855");
  CHECK(single->stage == LinkStage::kPage);

  const auto multi = linker::link_tweet(
      with_urls(make_tweet("b", "2017-03-06T12:00:00Z", "roundup"),
                {"http://two.example"}),
      provider);
  CHECK_FALSE(multi.has_value());
}

TEST_CASE("two pages naming the same single CVE still link") {
  MapProvider provider;
  provider.put("http://a.example", "keyring bug CVE-2016-0728");
  provider.put("http://b.example", "mirror of CVE-2016-0728 advisory");
  const auto result = linker::link_tweet(
      with_urls(make_tweet("a", "2016-01-20T12:00:00Z", "kernel flaw"),
                {"http://a.example", "http://b.example"}),
      provider);
  REQUIRE(result.has_value());
  CHECK(result->cve_id == "CVE-2016-0728");
}

TEST_CASE("pages disagreeing on the CVE stay unlinked") {
  MapProvider provider;
  provider.put("http://a.example", "about CVE-2016-0728");
  provider.put("http://b.example", "about CVE-2016-5195");
  CHECK_FALSE(linker::link_tweet(
                  with_urls(make_tweet("a", "2016-01-20T12:00:00Z", "flaw"),
                            {"http://a.example", "http://b.example"}),
                  provider)
                  .has_value());
}

TEST_CASE("unresolvable pages count as empty") {
  MapProvider provider;
  CHECK_FALSE(linker::link_tweet(
                  with_urls(make_tweet("a", "2017-03-08T12:00:00Z", "link"),
                            {"http://gone.example/x"}),
                  provider)
                  .has_value());
}

TEST_CASE("a CVE in the resolved final url links at stage 2") {
  MapProvider provider;
  provider.put("http://sho.rt/abc", "no ids in this body",
               "http://host.example/CVE-2018-1111/advisory");
  const auto result = linker::link_tweet(
      with_urls(make_tweet("a", "2018-05-01T12:00:00Z", "short link"),
                {"http://sho.rt/abc"}),
      provider);
  REQUIRE(result.has_value());
  CHECK(result->cve_id == "CVE-2018-1111");
  CHECK(result->stage == LinkStage::kPage);
}

TEST_CASE("a link table never maps one tweet to two CVEs") {
  LinkTable table;
  table.add("CVE-2016-5195", {"t1", 100, LinkStage::kExplicit});
  table.add("CVE-2016-5195", {"t1", 100, LinkStage::kExplicit});  // set semantics
  CHECK(table.by_cve().at("CVE-2016-5195").size() == 1);
  CHECK_THROWS_AS(table.add("CVE-2016-0728", {"t1", 100, LinkStage::kExplicit}),
                  ValidationError);
  CHECK(table.cve_of("t1") == "CVE-2016-5195");
  CHECK_FALSE(table.cve_of("t2").has_value());
}

TEST_CASE("offline cache serves the fixture manifest") {
  OfflinePageCache cache(kFixture / "pages");
  const auto page = cache.fetch("http://news.example/dirty-cow-writeup");
  REQUIRE(page.has_value());
  CHECK(page->body.find("CVE-2016-5195") != std::string::npos);
  CHECK(page->final_url == "http://news.example/dirty-cow-writeup");

  const auto redirected = cache.fetch("http://sho.rt/dhcp");
  REQUIRE(redirected.has_value());
  CHECK(redirected->final_url ==
        "http://advisories.example/CVE-2018-1111/patch-notes");

  CHECK_FALSE(cache.fetch("http://gone.example/dead-link").has_value());
}

TEST_CASE("fixture corpus produces the hand-authored link table") {
  const auto tweets = corpus::read_tweets_jsonl(kFixture / "tweets.jsonl");
  REQUIRE(tweets.size() == 40);
  OfflinePageCache cache(kFixture / "pages");
  const LinkTable raw = linker::build_link_table(tweets, cache);

  tstest::TempDir dir("linker");
  raw.save_csv(dir.file("raw.csv"));
  CHECK(read_file(dir.file("raw.csv")) ==
        read_file(kFixture / "expected_links_raw.csv"));

  const auto store = nvd::load_nvd(std::vector{kFixture / "nvd.jsonl"});
  std::vector<std::string> warnings;
  const LinkTable filtered =
      linker::apply_time_constraints(raw, store, {}, &warnings);
  filtered.save_csv(dir.file("filtered.csv"));
  CHECK(read_file(dir.file("filtered.csv")) ==
        read_file(kFixture / "expected_links_filtered.csv"));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("CVE-2030-0001") != std::string::npos);
}

TEST_CASE("time constraints are monotone in added tweets") {
  const auto store = nvd::load_nvd(std::vector{kFixture / "nvd.jsonl"});
  LinkTable small;
  small.add("CVE-2016-5195", {"a", parse_rfc3339("2016-10-20T12:00:00Z"),
                              LinkStage::kExplicit});
  small.add("CVE-2016-5195", {"b", parse_rfc3339("2016-10-21T12:00:00Z"),
                              LinkStage::kExplicit});
  small.add("CVE-2016-5195", {"c", parse_rfc3339("2016-10-22T12:00:00Z"),
                              LinkStage::kExplicit});
  const auto kept_small = linker::apply_time_constraints(small, store, {});
  REQUIRE(kept_small.by_cve().contains("CVE-2016-5195"));

  LinkTable larger = small;
  larger.add("CVE-2016-5195", {"d", parse_rfc3339("2016-10-23T12:00:00Z"),
                               LinkStage::kPage});
  const auto kept_larger = linker::apply_time_constraints(larger, store, {});
  CHECK(kept_larger.by_cve().contains("CVE-2016-5195"));
  CHECK(kept_larger.by_cve().at("CVE-2016-5195").size() >=
        kept_small.by_cve().at("CVE-2016-5195").size());
}

TEST_CASE("link table csv round-trips") {
  const auto tweets = corpus::read_tweets_jsonl(kFixture / "tweets.jsonl");
  OfflinePageCache cache(kFixture / "pages");
  const LinkTable raw = linker::build_link_table(tweets, cache);
  tstest::TempDir dir("linkrt");
  raw.save_csv(dir.file("a.csv"));
  const LinkTable loaded = LinkTable::load_csv(dir.file("a.csv"));
  loaded.save_csv(dir.file("b.csv"));
  CHECK(read_file(dir.file("a.csv")) == read_file(dir.file("b.csv")));
}

TEST_CASE("audit samples are deterministic and within the table") {
  const auto tweets = corpus::read_tweets_jsonl(kFixture / "tweets.jsonl");
  OfflinePageCache cache(kFixture / "pages");
  const LinkTable raw = linker::build_link_table(tweets, cache);
  const auto sample_a = linker::sample_links(raw, 10, 99);
  const auto sample_b = linker::sample_links(raw, 10, 99);
  REQUIRE(sample_a.size() == 10);
  for (std::size_t i = 0; i < sample_a.size(); ++i) {
    CHECK(sample_a[i].first == sample_b[i].first);
    CHECK(sample_a[i].second.tweet_id == sample_b[i].second.tweet_id);
    CHECK(raw.cve_of(sample_a[i].second.tweet_id) == sample_a[i].first);
  }
  CHECK(linker::sample_links(raw, 1000, 1).size() == raw.tweet_count());
}

TEST_CASE("live fetcher follows redirects and fills the offline cache") {
  httplib::Server server;
  server.Get("/start", [](const httplib::Request&, httplib::Response& res) {
    res.set_redirect("/advisories/CVE-2018-1111");
  });
  server.Get("/advisories/CVE-2018-1111",
             [](const httplib::Request&, httplib::Response& res) {
               res.set_content("fixed in latest packages", "text/plain");
             });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  tstest::TempDir dir("live");
  auto cache = std::make_shared<OfflinePageCache>(dir.path() / "cache");
  linker::LivePageFetcher fetcher(cache, 5);
  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  const auto page = fetcher.fetch(base + "/start");
  REQUIRE(page.has_value());
  CHECK(page->final_url == base + "/advisories/CVE-2018-1111");
  CHECK(page->body == "fixed in latest packages");

  // The fetched body landed in the cache and resolves offline now.
  OfflinePageCache reopened(dir.path() / "cache");
  const auto cached = reopened.fetch(base + "/start");
  REQUIRE(cached.has_value());
  CHECK(cached->body == "fixed in latest packages");
  CHECK(cached->final_url == base + "/advisories/CVE-2018-1111");

  CHECK_FALSE(fetcher.fetch(base + "/missing").has_value());

  server.stop();
  thread.join();
}
