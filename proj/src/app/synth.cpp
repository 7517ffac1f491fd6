#include "cocoa/app/synth.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <string>

#include "cocoa/error.hpp"

namespace cocoa::app {

namespace {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Bit-exact across standard libraries, unlike std::uniform_*_distribution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::size_t below(std::size_t n) {
        return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
    }

private:
    std::mt19937_64 engine_;
};

std::string random_text(Rng& rng, std::size_t vocab) {
    const std::size_t len = 2 + rng.below(4);
    std::string text;
    for (std::size_t i = 0; i < len; ++i) {
        if (i) text += ' ';
        text += "w" + std::to_string(rng.below(vocab));
    }
    return text;
}

Sequence make_sequence(Rng& rng, const std::string& text, bool confident) {
    Sequence seq;
    seq.text = text;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find(' ', start + 1);
        if (end == std::string::npos) end = text.size();
        TokenObservation tok;
        tok.text = text.substr(start, end - start);
        const double u = rng.uniform(), v = rng.uniform();
        tok.log_prob = confident ? -0.3 * u : -(0.2 + 2.5 * u);
        tok.dist_entropy = confident ? 0.5 * v : 1.0 + 2.0 * v;
        seq.tokens.push_back(std::move(tok));
        start = end;
    }
    return seq;
}

} // namespace

std::vector<GenerationRecord> synthesize(const SynthParams& p) {
    if (p.samples == 0) throw ConfigError("synth: samples must be at least 1");
    if (p.vocab < 2) throw ConfigError("synth: vocab must be at least 2");
    if (!(p.overlap >= 0.0 && p.overlap <= 1.0)) throw ConfigError("synth: overlap must lie in [0,1]");
    if (!(p.rho >= 0.0 && p.rho <= 1.0)) throw ConfigError("synth: rho must lie in [0,1]");
    if (!(p.confident_rate >= 0.0 && p.confident_rate <= 1.0))
        throw ConfigError("synth: confident_rate must lie in [0,1]");
    const bool planted = p.quality_model == "planted";
    if (!planted && p.quality_model != "independent")
        throw ConfigError("synth: quality_model must be 'planted' or 'independent'");

    Rng rng(p.seed);
    std::vector<GenerationRecord> out;
    out.reserve(p.n_records);
    for (std::size_t r = 0; r < p.n_records; ++r) {
        GenerationRecord rec;
        rec.record_id = "synth-" + std::to_string(r);
        rec.input_text = "question " + std::to_string(r) + ": " + random_text(rng, p.vocab);

        const std::string answer = random_text(rng, p.vocab);
        const bool confident = rng.uniform() < p.confident_rate;
        const double agree = std::clamp(1.0 - (1.0 - p.overlap) * 2.0 * rng.uniform(), 0.0, 1.0);
        const double noise = rng.uniform();

        std::map<std::string, Sequence> by_text;
        auto sequence_for = [&](const std::string& text) -> const Sequence& {
            auto it = by_text.find(text);
            if (it == by_text.end()) it = by_text.emplace(text, make_sequence(rng, text, confident)).first;
            return it->second;
        };

        if (p.greedy) rec.greedy = sequence_for(answer);
        for (std::size_t i = 0; i < p.samples; ++i) {
            std::string text = answer;
            if (rng.uniform() >= agree) {
                do text = random_text(rng, p.vocab);
                while (text == answer);
            }
            rec.samples.push_back(sequence_for(text));
        }

        for (auto strategy : {TargetStrategy::greedy, TargetStrategy::random, TargetStrategy::best,
                              TargetStrategy::best_normalized}) {
            if (strategy == TargetStrategy::greedy && !rec.greedy) continue;
            double q = noise;
            if (planted) {
                const auto target = select_target(rec, strategy);
                const auto same = std::count_if(rec.samples.begin(), rec.samples.end(),
                                                [&](const Sequence& s) { return s.text == target.sequence->text; });
                const double share = static_cast<double>(same) / static_cast<double>(rec.samples.size());
                q = std::clamp(p.rho * share + (1.0 - p.rho) * noise, 0.0, 1.0);
            }
            rec.quality[std::string(to_string(strategy))] = q;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace cocoa::app
