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
//
// Tweet-to-CVE linking: CVE ids are matched in tweet text and URL strings
// first, then in fetched page content, with single-CVE ambiguity checks
// and forecast time constraints.

#ifndef THREATSCOPE_LINKER_HPP_
#define THREATSCOPE_LINKER_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "threatscope/corpus.hpp"
#include "threatscope/nvd.hpp"

namespace threatscope::linker {

struct Page {
  std::string final_url;  // after redirects; equals the request URL offline
  std::string body;
};

// URL -> page text resolver. Resolution must be a pure function of the URL
// within one run; implementations cache after the first fetch.
class PageProvider {
 public:
  virtual ~PageProvider() = default;
  virtual std::optional<Page> fetch(const std::string& url) = 0;
};

// Directory-backed cache: manifest.tsv lines are
// "url<TAB>content-file[<TAB>final_url]", content stored as UTF-8 text.
class OfflinePageCache : public PageProvider {
 public:
  explicit OfflinePageCache(const std::filesystem::path& directory);
  std::optional<Page> fetch(const std::string& url) override;

  // Registers a page and persists it to the cache directory.
  void store(const std::string& url, const Page& page);

 private:
  std::filesystem::path directory_;
  std::map<std::string, Page> pages_;
  std::size_t next_file_id_ = 0;
  std::mutex mutex_;
};

// HTTP(S) fetcher: follows redirects, 10 s timeout, at most two concurrent
// requests per host. Every fetched body is written into the backing
// offline cache so later runs reproduce offline.
class LivePageFetcher : public PageProvider {
 public:
  explicit LivePageFetcher(std::shared_ptr<OfflinePageCache> cache,
                           int timeout_seconds = 10);
  std::optional<Page> fetch(const std::string& url) override;

 private:
  class HostLimiter;
  std::shared_ptr<OfflinePageCache> cache_;
  int timeout_seconds_;
  std::shared_ptr<HostLimiter> limiter_;
};

enum class LinkStage {
  kExplicit = 1,  // CVE id in tweet text or a raw URL string
  kPage = 2,      // CVE id found in fetched page content or final URL
};

struct LinkedTweet {
  std::string tweet_id;
  std::int64_t posted_at = 0;
  LinkStage stage = LinkStage::kExplicit;
};

// cve_id -> linked tweets; a tweet maps to at most one CVE.
class LinkTable {
 public:
  void add(const std::string& cve_id, LinkedTweet tweet);
  const std::map<std::string, std::vector<LinkedTweet>>& by_cve() const {
    return links_;
  }
  std::optional<std::string> cve_of(const std::string& tweet_id) const;
  std::size_t tweet_count() const { return tweet_to_cve_.size(); }

  // CSV "cve_id,tweet_id,posted_at,stage" sorted by (cve, time, tweet).
  void save_csv(const std::filesystem::path& path) const;
  static LinkTable load_csv(const std::filesystem::path& path);

 private:
  std::map<std::string, std::vector<LinkedTweet>> links_;
  std::unordered_map<std::string, std::string> tweet_to_cve_;
};

// Canonical upper-cased CVE ids matched case-insensitively in free text.
std::set<std::string> extract_cves(std::string_view text);

struct LinkResult {
  std::string cve_id;
  LinkStage stage = LinkStage::kExplicit;
};

// Two-stage linking: tweet text plus raw URL strings; only when that stage
// finds nothing, fetched pages (skipping any page body naming more than
// one CVE). A stage links only when its candidate union has exactly one
// CVE. Failed fetches count as empty pages.
std::optional<LinkResult> link_tweet(const corpus::Tweet& tweet,
                                     PageProvider& provider);

// Links every tweet; deterministic regardless of provider behavior.
LinkTable build_link_table(std::span<const corpus::Tweet> tweets,
                           PageProvider& provider);

struct TimeConstraintConfig {
  int min_lead_days = 5;
  int max_lead_days = 365;  // waived for explicit-stage links
  std::size_t min_tweets = 3;
};

// Keeps tweets posted at least min_lead_days whole UTC days before the
// CVE's publication and at most max_lead_days (explicit text/URL mentions
// are exempt from the maximum); CVEs left with fewer than min_tweets
// qualifying tweets are dropped. CVEs absent from the store are dropped
// with a warning.
LinkTable apply_time_constraints(const LinkTable& table,
                                 const nvd::RecordStore& store,
                                 const TimeConstraintConfig& config,
                                 std::vector<std::string>* warnings = nullptr);

// Uniform sample of n links for manual auditing, deterministic under seed.
std::vector<std::pair<std::string, LinkedTweet>> sample_links(
    const LinkTable& table, std::size_t n, std::uint64_t seed);

}  // namespace threatscope::linker

#endif  // THREATSCOPE_LINKER_HPP_
