#include "cocoa/provider.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <future>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

namespace cocoa {

using nlohmann::json;

std::string default_endpoint() {
    const char* v = std::getenv(kEndpointEnvVar);
    return v ? std::string(v) : std::string();
}

HttpTransport::HttpTransport(std::string endpoint, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
    if (endpoint_.empty()) throw ConfigError("similarity provider endpoint is empty");
    while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

std::vector<double> HttpTransport::post(const std::string& backend, std::span<const TextPair> pairs) {
    // Split "http://host:port/prefix" into the client origin and a path prefix.
    std::string origin = endpoint_, prefix;
    if (auto scheme = endpoint_.find("://"); scheme != std::string::npos) {
        if (auto slash = endpoint_.find('/', scheme + 3); slash != std::string::npos) {
            origin = endpoint_.substr(0, slash);
            prefix = endpoint_.substr(slash);
        }
    }
    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);

    json body{{"backend", backend}, {"pairs", json::array()}};
    for (const auto& [a, b] : pairs) body["pairs"].push_back({a, b});

    auto res = client.Post(prefix + "/similarity", body.dump(), "application/json");
    if (!res) throw TransportError("provider " + endpoint_ + ": " + httplib::to_string(res.error()));
    if (res->status >= 500)
        throw TransportError("provider " + endpoint_ + " returned HTTP " + std::to_string(res->status));
    if (res->status != 200)
        throw ProviderError("provider " + endpoint_ + " returned HTTP " + std::to_string(res->status) + ": " +
                            res->body);
    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw ProviderError(std::string("provider reply is not JSON: ") + e.what());
    }
    auto scores = reply.find("scores");
    if (scores == reply.end() || !scores->is_array()) throw ProviderError("provider reply lacks a scores array");
    std::vector<double> out;
    out.reserve(scores->size());
    for (const auto& s : *scores) {
        if (!s.is_number()) throw ProviderError("provider returned a non-numeric score");
        out.push_back(s.get<double>());
    }
    return out;
}

std::string SimilarityCache::key(const std::string& backend, const std::string& a, const std::string& b) {
    // Length-prefixed fields so that no two distinct triples share a preimage.
    std::string buf;
    for (const std::string* part : {&backend, &a, &b}) {
        buf += std::to_string(part->size());
        buf += ':';
        buf += *part;
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(buf.data(), buf.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::optional<double> SimilarityCache::lookup(const std::string& key) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void SimilarityCache::store(const std::string& key, double value) {
    std::unique_lock lock(mu_);
    entries_[key] = value;
}

std::size_t SimilarityCache::size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
}

void SimilarityCache::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return;  // a missing cache file is an empty cache
    std::string line;
    std::size_t line_no = 0;
    std::unique_lock lock(mu_);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto j = json::parse(line);
            entries_[j.at("key").get<std::string>()] = j.at("value").get<double>();
        } catch (const json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad cache entry: " + e.what());
        }
    }
}

void SimilarityCache::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write cache '" + path.string() + "'");
    std::shared_lock lock(mu_);
    for (const auto& [k, v] : entries_) out << json{{"key", k}, {"value", v}}.dump() << '\n';
}

ProviderClient::ProviderClient(std::shared_ptr<SimilarityTransport> transport, std::shared_ptr<SimilarityCache> cache,
                               ProviderOptions options)
    : transport_(std::move(transport)),
      cache_(cache ? std::move(cache) : std::make_shared<SimilarityCache>()),
      options_(options),
      in_flight_(std::max<std::ptrdiff_t>(1, options.max_in_flight)) {
    if (options_.batch_size == 0) throw ConfigError("provider batch size must be positive");
    if (options_.max_attempts < 1) throw ConfigError("provider attempts must be at least 1");
}

std::vector<double> ProviderClient::send_batch(const std::string& backend, std::span<const TextPair> batch) {
    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{in_flight_};

    auto delay = options_.backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            auto scores = transport_->post(backend, batch);
            if (scores.size() != batch.size())
                throw ProviderError("provider returned " + std::to_string(scores.size()) + " scores for " +
                                    std::to_string(batch.size()) + " pairs");
            for (double s : scores)
                if (!(s >= 0.0 && s <= 1.0))
                    throw ProviderError("provider protocol violation: score " + std::to_string(s) +
                                        " outside [0,1] for backend '" + backend + "'");
            ++requests_;
            pairs_sent_ += batch.size();
            return scores;
        } catch (const TransportError& e) {
            if (attempt >= options_.max_attempts)
                throw ProviderError("provider unreachable after " + std::to_string(attempt) + " attempts: " +
                                    e.what());
        }
        std::this_thread::sleep_for(delay);
        delay *= 2;
    }
}

std::vector<double> ProviderClient::score(const SimilarityBackend& backend, std::span<const TextPair> pairs) {
    if (!backend.is_remote())
        throw ConfigError("backend '" + backend.name() + "' is not served by a provider");
    const std::string name = backend.name();

    std::vector<double> out(pairs.size());
    std::vector<std::string> keys(pairs.size());
    // First occurrence of each missing key; later duplicates wait on it.
    std::unordered_map<std::string, std::size_t> pending;
    std::vector<TextPair> misses;
    std::vector<std::size_t> miss_slot;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        keys[i] = SimilarityCache::key(name, pairs[i].first, pairs[i].second);
        if (auto hit = cache_->lookup(keys[i])) {
            out[i] = *hit;
            ++cache_hits_;
        } else if (!pending.contains(keys[i])) {
            pending.emplace(keys[i], misses.size());
            misses.push_back(pairs[i]);
            miss_slot.push_back(i);
        }
    }

    if (!misses.empty()) {
        std::vector<std::future<std::vector<double>>> batches;
        for (std::size_t lo = 0; lo < misses.size(); lo += options_.batch_size) {
            const std::size_t hi = std::min(misses.size(), lo + options_.batch_size);
            std::span<const TextPair> batch(misses.data() + lo, hi - lo);
            batches.push_back(std::async(std::launch::async, [this, &name, batch] { return send_batch(name, batch); }));
        }
        std::vector<double> fresh;
        fresh.reserve(misses.size());
        std::exception_ptr first_error;
        for (auto& f : batches) {
            try {
                auto s = f.get();
                fresh.insert(fresh.end(), s.begin(), s.end());
            } catch (...) {
                if (!first_error) first_error = std::current_exception();
            }
        }
        if (first_error) std::rethrow_exception(first_error);
        for (std::size_t m = 0; m < misses.size(); ++m) {
            cache_->store(keys[miss_slot[m]], fresh[m]);
            out[miss_slot[m]] = fresh[m];
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            auto it = pending.find(keys[i]);
            if (it != pending.end() && miss_slot[it->second] != i) {
                out[i] = fresh[it->second];
                ++cache_hits_;
            }
        }
    }
    return out;
}

ProviderStats ProviderClient::stats() const {
    return {requests_.load(), pairs_sent_.load(), cache_hits_.load()};
}

ProviderScorer::ProviderScorer(ProviderClient& client, SimilarityBackend backend)
    : client_(client), backend_(std::move(backend)) {}

std::vector<double> ProviderScorer::score(std::span<const TextPair> pairs) {
    return client_.score(backend_, pairs);
}

} // namespace cocoa
