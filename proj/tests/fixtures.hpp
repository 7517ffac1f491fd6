#pragma once

// Test fixtures: sequence builders, seeded random records, and a scripted
// similarity scorer.

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cocoa/record.hpp"
#include "cocoa/similarity.hpp"

namespace fixtures {

inline cocoa::Sequence seq(const std::vector<double>& log_probs, const std::string& text = "",
                           const std::vector<double>& entropies = {}) {
    cocoa::Sequence s;
    for (std::size_t i = 0; i < log_probs.size(); ++i) {
        cocoa::TokenObservation t;
        t.text = (i ? " t" : "t") + std::to_string(i);
        t.log_prob = log_probs[i];
        if (i < entropies.size()) t.dist_entropy = entropies[i];
        s.tokens.push_back(t);
    }
    s.text = text.empty() ? cocoa::join_tokens(s) : text;
    return s;
}

// Sequence whose tokens are the words of `text`.
inline cocoa::Sequence text_seq(const std::string& text, const std::vector<double>& log_probs) {
    cocoa::Sequence s;
    std::size_t start = 0, k = 0;
    while (start < text.size()) {
        std::size_t end = text.find(' ', start + 1);
        if (end == std::string::npos) end = text.size();
        cocoa::TokenObservation t;
        t.text = text.substr(start, end - start);
        t.log_prob = log_probs.at(k++);
        s.tokens.push_back(t);
        start = end;
    }
    s.text = text;
    return s;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : e_(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) {
        return lo + (hi - lo) * static_cast<double>(e_() >> 11) * 0x1.0p-53;
    }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(e_() % n); }
    bool coin(double p = 0.5) { return uniform() < p; }
    std::mt19937_64& engine() { return e_; }

private:
    std::mt19937_64 e_;
};

inline std::string random_words(Rng& rng, std::size_t n_words, std::size_t vocab) {
    std::string s;
    for (std::size_t i = 0; i < n_words; ++i) {
        if (i) s += ' ';
        s += "w" + std::to_string(rng.below(vocab));
    }
    return s;
}

struct RandomRecordOptions {
    std::size_t max_samples = 8;
    std::size_t max_len = 12;
    std::size_t vocab = 6;
    bool with_greedy = true;
    bool with_entropy = true;
    bool with_nli = true;       // random nli_entail / nli_contra blocks
    bool with_random_sim = true;  // random "rand" block
};

// Random record with short texts over a small vocabulary so that lexical
// similarities are non-trivial.
inline cocoa::GenerationRecord random_record(Rng& rng, const std::string& id, const RandomRecordOptions& o = {}) {
    cocoa::GenerationRecord r;
    r.record_id = id;
    r.input_text = "q " + random_words(rng, 3, o.vocab);
    auto make = [&] {
        const std::size_t len = 1 + rng.below(o.max_len);
        std::vector<double> lp(len);
        for (auto& x : lp) x = -rng.uniform(0.0, 2.5);
        auto s = text_seq(random_words(rng, len, o.vocab), lp);
        if (o.with_entropy)
            for (auto& t : s.tokens) t.dist_entropy = rng.uniform(0.0, 3.0);
        return s;
    };
    const std::size_t m = 1 + rng.below(o.max_samples);
    for (std::size_t i = 0; i < m; ++i) r.samples.push_back(make());
    if (o.with_greedy && rng.coin()) r.greedy = make();
    for (auto s : {"greedy", "random", "best", "best_normalized"}) r.quality[s] = rng.uniform();
    const std::size_t n = m + r.sample_offset();
    auto block = [&] {
        cocoa::Matrix b(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) b(i, j) = i == j ? 1.0 : rng.uniform();
        return b;
    };
    if (o.with_nli) {
        r.precomputed_sim["nli_entail"] = block();
        r.precomputed_sim["nli_contra"] = block();
    }
    if (o.with_random_sim) r.precomputed_sim["rand"] = block();
    return r;
}

// Scorer that answers from a function of the two texts and counts calls.
class ScriptedScorer final : public cocoa::PairScorer {
public:
    using Fn = std::function<double(const std::string&, const std::string&)>;
    ScriptedScorer(Fn fn, cocoa::SimilarityBackend backend = {cocoa::BackendKind::cross_encoder, {}})
        : fn_(std::move(fn)), backend_(std::move(backend)) {}

    std::vector<double> score(std::span<const cocoa::TextPair> pairs) override {
        std::vector<double> out;
        for (const auto& [a, b] : pairs) {
            ++calls;
            out.push_back(fn_(a, b));
        }
        return out;
    }
    cocoa::SimilarityBackend backend() const override { return backend_; }

    std::size_t calls = 0;

private:
    Fn fn_;
    cocoa::SimilarityBackend backend_;
};

inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-12) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

} // namespace fixtures

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace fixtures {

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("cocoa-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace fixtures

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>

namespace fixtures {

// A loopback port with nothing listening on it.
inline int closed_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

} // namespace fixtures
