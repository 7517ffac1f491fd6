#pragma once

// Client for remote similarity providers.
//
// Wire contract:
//   POST {endpoint}/similarity  {"backend": str, "pairs": [[a, b], ...]}
//   -> {"scores": [float, ...]}   order-aligned, every score in [0,1]
//
// Requests are batched, retried with exponential backoff on transport
// failure, and memoized in a SimilarityCache keyed by sha256(backend, a, b).

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "cocoa/error.hpp"
#include "cocoa/similarity.hpp"

namespace cocoa {

constexpr const char* kEndpointEnvVar = "COCOA_SIM_ENDPOINT";

// Endpoint from COCOA_SIM_ENDPOINT, or empty.
std::string default_endpoint();

// Retryable failure: connection refused, timeout, 5xx.
class TransportError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class SimilarityTransport {
public:
    virtual ~SimilarityTransport() = default;
    // Returns raw scores as sent by the provider; range/length checks are the
    // client's job.
    virtual std::vector<double> post(const std::string& backend, std::span<const TextPair> pairs) = 0;
};

class HttpTransport final : public SimilarityTransport {
public:
    explicit HttpTransport(std::string endpoint, std::chrono::seconds timeout = std::chrono::seconds(60));
    std::vector<double> post(const std::string& backend, std::span<const TextPair> pairs) override;

private:
    std::string endpoint_;
    std::chrono::seconds timeout_;
};

class SimilarityCache {
public:
    static std::string key(const std::string& backend, const std::string& a, const std::string& b);

    std::optional<double> lookup(const std::string& key) const;
    void store(const std::string& key, double value);
    std::size_t size() const;

    // JSONL file of {"key": hex, "value": float}; load merges, save rewrites
    // sorted by key.
    void load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, double> entries_;
};

struct ProviderOptions {
    std::size_t batch_size = 32;
    int max_attempts = 3;
    std::chrono::milliseconds backoff{100};
    std::ptrdiff_t max_in_flight = 4;
};

struct ProviderStats {
    std::size_t requests = 0;     // HTTP round trips that returned scores
    std::size_t pairs_sent = 0;   // pairs evaluated by the provider
    std::size_t cache_hits = 0;
};

class ProviderClient {
public:
    ProviderClient(std::shared_ptr<SimilarityTransport> transport, std::shared_ptr<SimilarityCache> cache,
                   ProviderOptions options = {});

    std::vector<double> score(const SimilarityBackend& backend, std::span<const TextPair> pairs);

    ProviderStats stats() const;
    SimilarityCache& cache() { return *cache_; }

private:
    std::vector<double> send_batch(const std::string& backend, std::span<const TextPair> batch);

    std::shared_ptr<SimilarityTransport> transport_;
    std::shared_ptr<SimilarityCache> cache_;
    ProviderOptions options_;
    std::counting_semaphore<> in_flight_;
    std::atomic<std::size_t> requests_{0}, pairs_sent_{0}, cache_hits_{0};
};

class ProviderScorer final : public PairScorer {
public:
    ProviderScorer(ProviderClient& client, SimilarityBackend backend);
    std::vector<double> score(std::span<const TextPair> pairs) override;
    SimilarityBackend backend() const override { return backend_; }

private:
    ProviderClient& client_;
    SimilarityBackend backend_;
};

} // namespace cocoa
