#pragma once

// Generation records: one prompt, its sampled continuations with token-level
// log-probabilities, an optional greedy decode, and per-strategy quality.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cocoa {

struct TokenObservation {
    std::string text;
    double log_prob = 0.0;               // nats, <= 0
    std::optional<double> dist_entropy;  // nats, >= 0
};

struct Sequence {
    std::vector<TokenObservation> tokens;
    std::string text;

    std::size_t length() const { return tokens.size(); }
    bool has_entropies() const;
};

// Concatenation of token surface strings, optionally skipping one token.
std::string join_tokens(const Sequence& seq, std::optional<std::size_t> skip = std::nullopt);

// Square matrix, row-major. Used for similarity blocks and Laplacians.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

    double trace() const;
    bool operator==(const Matrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

struct GenerationRecord {
    std::string record_id;
    std::string input_text;
    std::vector<Sequence> samples;
    std::optional<Sequence> greedy;
    std::map<std::string, double> quality;
    // Raw (directional) similarity blocks over [greedy?] + samples.
    std::map<std::string, Matrix> precomputed_sim;

    std::size_t num_samples() const { return samples.size(); }
    // Offset of samples[0] in the precomputed-matrix ordering.
    std::size_t sample_offset() const { return greedy ? 1 : 0; }
};

enum class TargetStrategy { greedy, random, best, best_normalized };

std::string_view to_string(TargetStrategy s);
TargetStrategy parse_strategy(std::string_view name);

// Which sequence was selected: a sample index, or the greedy decode.
struct TargetRef {
    const Sequence* sequence = nullptr;
    std::optional<std::size_t> sample_index;  // empty -> greedy

    bool is_greedy() const { return !sample_index.has_value(); }
};

double seq_log_prob(const Sequence& seq);

TargetRef select_target(const GenerationRecord& record, TargetStrategy strategy);

// JSON (de)serialization. Parsing validates every invariant and throws
// DataError naming the record and field on violation.
GenerationRecord record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const GenerationRecord& record);
nlohmann::json sequence_to_json(const Sequence& seq);

// Streams records from a JSONL file in file order. Blank lines are skipped;
// duplicate record ids are rejected.
class RecordReader {
public:
    explicit RecordReader(const std::filesystem::path& path);
    ~RecordReader();
    RecordReader(const RecordReader&) = delete;
    RecordReader& operator=(const RecordReader&) = delete;

    std::optional<GenerationRecord> next();

private:
    std::filesystem::path path_;
    std::unique_ptr<std::istream> in_;
    std::size_t line_no_ = 0;
    std::map<std::string, std::size_t> seen_;
};

std::vector<GenerationRecord> load_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<GenerationRecord>& records);

} // namespace cocoa
