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

#include <algorithm>
#include <fstream>
#include <semaphore>
#include <sstream>

#include "threatscope/digest.hpp"
#include "threatscope/error.hpp"
#include "threatscope/rng.hpp"
#include "threatscope/text_util.hpp"

namespace threatscope::linker {

namespace {

char ascii_upper(char c) {
  return c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

struct ParsedUrl {
  std::string scheme;  // http or https
  std::string host;
  int port = 0;
  std::string target;  // path + query, always starts with '/'
};

std::optional<ParsedUrl> parse_url(const std::string& url) {
  ParsedUrl out;
  std::string rest;
  if (url.starts_with("http://")) {
    out.scheme = "http";
    out.port = 80;
    rest = url.substr(7);
  } else if (url.starts_with("https://")) {
    out.scheme = "https";
    out.port = 443;
    rest = url.substr(8);
  } else {
    return std::nullopt;
  }
  const std::size_t slash = rest.find_first_of("/?");
  std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  out.target = slash == std::string::npos
                   ? "/"
                   : (rest[slash] == '?' ? "/" + rest.substr(slash)
                                         : rest.substr(slash));
  const std::size_t colon = authority.rfind(':');
  if (colon != std::string::npos &&
      authority.find_first_not_of("0123456789", colon + 1) == std::string::npos &&
      colon + 1 < authority.size()) {
    out.port = std::stoi(authority.substr(colon + 1));
    authority.resize(colon);
  }
  if (authority.empty()) return std::nullopt;
  out.host = ascii_lower(authority);
  return out;
}

// Resolves a Location header value against the request URL.
std::string resolve_location(const ParsedUrl& base, const std::string& location) {
  if (location.starts_with("http://") || location.starts_with("https://")) {
    return location;
  }
  std::string origin = base.scheme + "://" + base.host;
  if ((base.scheme == "http" && base.port != 80) ||
      (base.scheme == "https" && base.port != 443)) {
    origin += ":" + std::to_string(base.port);
  }
  if (location.starts_with("/")) return origin + location;
  const std::size_t last_slash = base.target.rfind('/');
  return origin + base.target.substr(0, last_slash + 1) + location;
}

}  // namespace

std::set<std::string> extract_cves(std::string_view text) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + 13 <= text.size(); ++i) {
    if (ascii_upper(text[i]) != 'C' || ascii_upper(text[i + 1]) != 'V' ||
        ascii_upper(text[i + 2]) != 'E' || text[i + 3] != '-') {
      continue;
    }
    std::size_t pos = i + 4;
    if (pos + 5 > text.size()) break;
    bool year_ok = true;
    for (std::size_t k = 0; k < 4; ++k) year_ok = year_ok && is_digit(text[pos + k]);
    if (!year_ok || text[pos + 4] != '-') continue;
    pos += 5;
    std::size_t digits = 0;
    while (pos + digits < text.size() && is_digit(text[pos + digits])) ++digits;
    if (digits < 4) continue;
    std::string id = "CVE-";
    id.append(text.substr(i + 4, 5));
    id.append(text.substr(pos, digits));
    out.insert(std::move(id));
    i = pos + digits - 1;
  }
  return out;
}

OfflinePageCache::OfflinePageCache(const std::filesystem::path& directory)
    : directory_(directory) {
  std::filesystem::create_directories(directory_);
  const std::filesystem::path manifest = directory_ / "manifest.tsv";
  if (!std::filesystem::exists(manifest)) return;
  const std::vector<std::string> lines = read_lines(manifest);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const std::vector<std::string> fields = split(lines[n], '\t');
    if (fields.size() < 2) {
      throw ParseError(manifest.string() + ":" + std::to_string(n + 1) +
                       ": expected url<TAB>file[<TAB>final_url]");
    }
    Page page;
    page.body = read_file(directory_ / fields[1]);
    page.final_url = fields.size() > 2 && !fields[2].empty() ? fields[2] : fields[0];
    pages_[fields[0]] = std::move(page);
  }
}

std::optional<Page> OfflinePageCache::fetch(const std::string& url) {
  std::lock_guard<std::mutex> lock(mutex_);
  const auto it = pages_.find(url);
  if (it == pages_.end()) return std::nullopt;
  return it->second;
}

void OfflinePageCache::store(const std::string& url, const Page& page) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (pages_.contains(url)) return;
  const std::string name = sha256_hex(url).substr(0, 16) + ".txt";
  write_file(directory_ / name, page.body);
  std::ofstream manifest(directory_ / "manifest.tsv", std::ios::app);
  manifest << url << '\t' << name << '\t' << page.final_url << '\n';
  pages_[url] = page;
}

// Caps in-flight requests at two per host.
class LivePageFetcher::HostLimiter {
 public:
  class Guard {
   public:
    explicit Guard(std::counting_semaphore<2>& sem) : sem_(sem) { sem_.acquire(); }
    ~Guard() { sem_.release(); }

   private:
    std::counting_semaphore<2>& sem_;
  };

  std::counting_semaphore<2>& semaphore_for(const std::string& host) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = semaphores_.find(host);
    if (it != semaphores_.end()) return *it->second;
    auto sem = std::make_unique<std::counting_semaphore<2>>(2);
    return *semaphores_.emplace(host, std::move(sem)).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<std::counting_semaphore<2>>> semaphores_;
};

LivePageFetcher::LivePageFetcher(std::shared_ptr<OfflinePageCache> cache,
                                 int timeout_seconds)
    : cache_(std::move(cache)),
      timeout_seconds_(timeout_seconds),
      limiter_(std::make_shared<HostLimiter>()) {
  if (!cache_) throw ValidationError("live fetcher needs a backing cache");
}

std::optional<Page> LivePageFetcher::fetch(const std::string& url) {
  if (auto cached = cache_->fetch(url)) return cached;
  // Manual redirect chase so the final URL is known for CVE matching.
  std::string current = url;
  for (int hop = 0; hop < 10; ++hop) {
    const std::optional<ParsedUrl> parsed = parse_url(current);
    if (!parsed) return std::nullopt;
    HostLimiter::Guard guard(limiter_->semaphore_for(parsed->host));
    httplib::Client client(parsed->scheme + "://" + parsed->host + ":" +
                           std::to_string(parsed->port));
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_follow_location(false);
    const httplib::Result res = client.Get(parsed->target);
    if (!res) return std::nullopt;
    if (res->status >= 300 && res->status < 400) {
      const std::string location = res->get_header_value("Location");
      if (location.empty()) return std::nullopt;
      current = resolve_location(*parsed, location);
      continue;
    }
    if (res->status != 200) return std::nullopt;
    Page page;
    page.final_url = current;
    page.body = res->body;
    cache_->store(url, page);
    return page;
  }
  return std::nullopt;
}

void LinkTable::add(const std::string& cve_id, LinkedTweet tweet) {
  const auto it = tweet_to_cve_.find(tweet.tweet_id);
  if (it != tweet_to_cve_.end()) {
    if (it->second != cve_id) {
      throw ValidationError("tweet '" + tweet.tweet_id +
                            "' already linked to " + it->second);
    }
    return;  // duplicate link, set semantics
  }
  tweet_to_cve_.emplace(tweet.tweet_id, cve_id);
  links_[cve_id].push_back(std::move(tweet));
}

std::optional<std::string> LinkTable::cve_of(const std::string& tweet_id) const {
  const auto it = tweet_to_cve_.find(tweet_id);
  if (it == tweet_to_cve_.end()) return std::nullopt;
  return it->second;
}

void LinkTable::save_csv(const std::filesystem::path& path) const {
  std::ostringstream out;
  out << "cve_id,tweet_id,posted_at,stage\n";
  for (const auto& [cve, tweets] : links_) {
    std::vector<LinkedTweet> sorted = tweets;
    std::sort(sorted.begin(), sorted.end(),
              [](const LinkedTweet& a, const LinkedTweet& b) {
                if (a.posted_at != b.posted_at) return a.posted_at < b.posted_at;
                return a.tweet_id < b.tweet_id;
              });
    for (const LinkedTweet& t : sorted) {
      out << cve << ',' << csv_escape(t.tweet_id) << ','
          << format_rfc3339(t.posted_at) << ','
          << (t.stage == LinkStage::kExplicit ? "text" : "page") << '\n';
    }
  }
  write_file(path, out.str());
}

LinkTable LinkTable::load_csv(const std::filesystem::path& path) {
  LinkTable table;
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || lines[0] != "cve_id,tweet_id,posted_at,stage") {
    throw ParseError(path.string() + ": unexpected link table header");
  }
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(lines[n]);
    if (fields.size() != 4) {
      throw ParseError(path.string() + ":" + std::to_string(n + 1) +
                       ": expected 4 fields");
    }
    LinkedTweet t;
    t.tweet_id = fields[1];
    t.posted_at = parse_rfc3339(fields[2]);
    if (fields[3] == "text") {
      t.stage = LinkStage::kExplicit;
    } else if (fields[3] == "page") {
      t.stage = LinkStage::kPage;
    } else {
      throw ParseError(path.string() + ":" + std::to_string(n + 1) +
                       ": unknown stage '" + fields[3] + "'");
    }
    table.add(fields[0], std::move(t));
  }
  return table;
}

std::optional<LinkResult> link_tweet(const corpus::Tweet& tweet,
                                     PageProvider& provider) {
  std::set<std::string> explicit_cves = extract_cves(tweet.text);
  for (const std::string& url : tweet.urls) {
    for (const std::string& id : extract_cves(url)) explicit_cves.insert(id);
  }
  if (!explicit_cves.empty()) {
    if (explicit_cves.size() == 1) {
      return LinkResult{*explicit_cves.begin(), LinkStage::kExplicit};
    }
    return std::nullopt;  // ambiguous explicit mentions
  }
  std::set<std::string> page_cves;
  for (const std::string& url : tweet.urls) {
    const std::optional<Page> page = provider.fetch(url);
    if (!page) continue;  // unresolvable page counts as empty
    const std::set<std::string> body_cves = extract_cves(page->body);
    // Pages that name several CVEs are ambiguous and contribute nothing.
    if (body_cves.size() <= 1) {
      for (const std::string& id : body_cves) page_cves.insert(id);
    }
    for (const std::string& id : extract_cves(page->final_url)) {
      page_cves.insert(id);
    }
  }
  if (page_cves.size() == 1) {
    return LinkResult{*page_cves.begin(), LinkStage::kPage};
  }
  return std::nullopt;
}

LinkTable build_link_table(std::span<const corpus::Tweet> tweets,
                           PageProvider& provider) {
  LinkTable table;
  for (const corpus::Tweet& tweet : tweets) {
    if (const auto result = link_tweet(tweet, provider)) {
      table.add(result->cve_id, {tweet.id, tweet.posted_at, result->stage});
    }
  }
  return table;
}

LinkTable apply_time_constraints(const LinkTable& table,
                                 const nvd::RecordStore& store,
                                 const TimeConstraintConfig& config,
                                 std::vector<std::string>* warnings) {
  LinkTable out;
  for (const auto& [cve, tweets] : table.by_cve()) {
    const nvd::CveRecord* record = store.find(cve);
    if (!record) {
      if (warnings) warnings->push_back("no NVD record for " + cve);
      continue;
    }
    const std::int64_t published = days_from_civil(record->published_at);
    std::vector<LinkedTweet> qualifying;
    for (const LinkedTweet& t : tweets) {
      const std::int64_t lead = published - days_from_civil(utc_date(t.posted_at));
      if (lead < config.min_lead_days) continue;
      if (lead > config.max_lead_days && t.stage != LinkStage::kExplicit) continue;
      qualifying.push_back(t);
    }
    if (qualifying.size() < config.min_tweets) continue;
    for (LinkedTweet& t : qualifying) out.add(cve, std::move(t));
  }
  return out;
}

std::vector<std::pair<std::string, LinkedTweet>> sample_links(
    const LinkTable& table, std::size_t n, std::uint64_t seed) {
  std::vector<std::pair<std::string, LinkedTweet>> all;
  for (const auto& [cve, tweets] : table.by_cve()) {
    for (const LinkedTweet& t : tweets) all.emplace_back(cve, t);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second.tweet_id < b.second.tweet_id;
  });
  Rng rng(seed);
  shuffle(all, rng);
  if (all.size() > n) all.resize(n);
  return all;
}

}  // namespace threatscope::linker
