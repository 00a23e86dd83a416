#include "charlead/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "charlead/errors.hpp"
#include "charlead/rng.hpp"
#include "charlead/utf8.hpp"

namespace charlead {

namespace {

// Keep in sync with data/form_templates.txt; the file is the canonical
// asset, this copy makes binaries location-independent.
constexpr const char* kBuiltinTemplates = R"(looking for a quote on home insurance
please call me after 5pm on weekdays
i need coverage for two cars and a truck
interested in refinancing my mortgage
what are your current rates for term life
my policy expires at the end of next month
first time buyer, not sure where to start
we just moved to the area and need an agent
can you send more details to my email
shopping around for a better deal
need a quote for my small business
my landlord requires renters insurance
recently married, updating our coverage
how soon can someone get back to me
i was referred by a friend of mine
looking to bundle home and auto
my teenage son just got his license
do you offer discounts for veterans
planning to retire in the next two years
had an accident last year, rates went up
need legal advice about a contract dispute
selling my house and buying a condo
the bank asked me to get preapproved first
curious about coverage for flood damage
want to lower my monthly payments
my current provider keeps raising prices
expecting our first child in march
own a duplex and rent out half
work from home, drive less than before
josé garcía, please use my cell number
best time to reach me is early morning
would prefer email over phone calls
my credit score improved a lot recently
need this sorted before the closing date
no agent has called me back yet
switching because of poor customer service
just comparing options for now
renewal notice said my premium doubled
zoë asked me to fill this out for her
the property is a 1998 mobile home
two drivers, one car, clean records
my husband handles most of the paperwork
looking for full coverage, not liability only
is the quote free or is there a fee
)";

std::vector<std::string> parse_pool(std::istream& in) {
    std::vector<std::string> pool;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) pool.push_back(line);
    }
    return pool;
}

bool is_letter(char32_t c) {
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

char32_t to_upper_ascii(char32_t c) {
    return (c >= U'a' && c <= U'z') ? c - 32 : c;
}

// triple one letter: "soon" -> "sooon"
void inject_misspelling(std::u32string& text, RngStream& rng) {
    std::vector<std::size_t> letters;
    for (std::size_t i = 0; i < text.size(); ++i)
        if (is_letter(text[i])) letters.push_back(i);
    if (letters.empty()) {
        text += U"hmmm";
        return;
    }
    const std::size_t at = letters[rng.below(letters.size())];
    text.insert(at, 2, text[at]);
}

// run of 3-5 exclamation marks at a phrase boundary or the end
void inject_punct_overuse(std::u32string& text, RngStream& rng) {
    const std::size_t count = 3 + rng.below(3);
    std::vector<std::size_t> spots;
    for (std::size_t i = 0; i < text.size(); ++i)
        if (text[i] == U' ') spots.push_back(i);
    spots.push_back(text.size());
    const std::size_t at = spots[rng.below(spots.size())];
    text.insert(at, std::u32string(count, U'!'));
}

// upper-case one whole word of length >= 3
void inject_all_caps(std::u32string& text, RngStream& rng) {
    struct Word {
        std::size_t begin, end;
    };
    std::vector<Word> words;
    std::size_t start = std::u32string::npos;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        const bool letter = i < text.size() && is_letter(text[i]);
        if (letter && start == std::u32string::npos) start = i;
        if (!letter && start != std::u32string::npos) {
            if (i - start >= 3) words.push_back({start, i});
            start = std::u32string::npos;
        }
    }
    if (words.empty()) {
        text += U" ASAP";
        return;
    }
    const Word w = words[rng.below(words.size())];
    for (std::size_t i = w.begin; i < w.end; ++i)
        text[i] = to_upper_ascii(text[i]);
}

}  // namespace

const std::vector<std::string>& default_templates() {
    static const std::vector<std::string> pool = [] {
        std::istringstream in(kBuiltinTemplates);
        return parse_pool(in);
    }();
    return pool;
}

std::vector<std::string> load_template_pool(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open template pool: " + path);
    std::vector<std::string> pool = parse_pool(in);
    if (pool.empty()) throw DataError("template pool is empty: " + path);
    return pool;
}

void GeneratorConfig::validate() const {
    if (n < 1) throw ConfigError("generator n must be >= 1");
    auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!rate_ok(signal_rates.misspelling) ||
        !rate_ok(signal_rates.punct_overuse) || !rate_ok(signal_rates.all_caps))
        throw ConfigError("signal rates must be in [0, 1]");
    if (length_profile.median_target < 1 ||
        length_profile.max_len < length_profile.median_target)
        throw ConfigError("length profile requires max_len >= median_target >= 1");
    if (!std::isfinite(base_close_logit))
        throw ConfigError("base_close_logit must be finite");
    for (double w : tabular_weights)
        if (!std::isfinite(w)) throw ConfigError("tabular weights must be finite");
}

double close_probability(const GeneratorConfig& config, const SignalFlags& s,
                         const std::vector<double>& features) {
    double logit = config.base_close_logit;
    if (s.misspelling) logit += config.effects.misspelling;
    if (s.punct_overuse) logit += config.effects.punct_overuse;
    if (s.all_caps) logit += config.effects.all_caps;
    const std::size_t k =
        std::min(features.size(), config.tabular_weights.size());
    for (std::size_t i = 0; i < k; ++i)
        logit += config.tabular_weights[i] * features[i];
    return 1.0 / (1.0 + std::exp(-logit));
}

std::vector<LeadSample> generate(const GeneratorConfig& config) {
    config.validate();
    const std::vector<std::string>& pool =
        config.templates.empty() ? default_templates() : config.templates;
    std::vector<std::u32string> pool32;
    pool32.reserve(pool.size());
    for (const std::string& p : pool) pool32.push_back(decode_utf8(p));

    // composed length target; tuned so the empirical median of the full
    // pipeline lands on median_target
    const double log_median =
        std::log(static_cast<double>(config.length_profile.median_target) * 0.93);
    const double log_sigma = 0.42;

    std::vector<LeadSample> out;
    out.reserve(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
        const uint64_t idx = static_cast<uint64_t>(config.first_index + i);
        RngStream text_rng(config.seed, "sample.text", idx);
        RngStream feat_rng(config.seed, "sample.features", idx);
        RngStream label_rng(config.seed, "sample.label", idx);

        LeadSample sample;
        SignalFlags flags;
        flags.misspelling = text_rng.uniform() < config.signal_rates.misspelling;
        flags.punct_overuse =
            text_rng.uniform() < config.signal_rates.punct_overuse;
        flags.all_caps = text_rng.uniform() < config.signal_rates.all_caps;

        const double raw_target =
            std::exp(log_median + log_sigma * text_rng.normal());
        const std::size_t budget = config.length_profile.max_len > 10
                                       ? config.length_profile.max_len - 10
                                       : config.length_profile.max_len;
        const std::size_t target = std::min(
            budget,
            static_cast<std::size_t>(std::max(4.0, std::round(raw_target))));

        std::u32string text;
        while (text.size() < target) {
            if (!text.empty()) text += U", ";
            text += pool32[text_rng.below(pool32.size())];
        }
        if (text.size() > budget) text.resize(budget);
        while (!text.empty() && (text.back() == U' ' || text.back() == U','))
            text.pop_back();
        if (text.empty()) text = U"na";

        if (flags.misspelling) inject_misspelling(text, text_rng);
        if (flags.punct_overuse) inject_punct_overuse(text, text_rng);
        if (flags.all_caps) inject_all_caps(text, text_rng);
        if (text.size() > config.length_profile.max_len)
            text.resize(config.length_profile.max_len);

        sample.text = encode_utf8(text);
        sample.features.resize(config.tabular_weights.size());
        for (double& f : sample.features) f = feat_rng.normal();
        const double p = close_probability(config, flags, sample.features);
        sample.label = label_rng.uniform() < p ? 1 : 0;
        sample.signals = flags;
        out.push_back(std::move(sample));
    }
    return out;
}

DatasetStats dataset_stats(const std::vector<LeadSample>& dataset) {
    if (dataset.empty()) throw DataError("empty dataset");
    DatasetStats stats;
    stats.n = dataset.size();
    std::vector<std::size_t> lengths;
    lengths.reserve(dataset.size());
    std::size_t closes = 0;
    std::size_t with_signals = 0;
    std::size_t miss = 0, punct = 0, caps = 0;
    for (const LeadSample& s : dataset) {
        lengths.push_back(decode_utf8(s.text).size());
        closes += s.label ? 1 : 0;
        if (s.signals) {
            ++with_signals;
            miss += s.signals->misspelling ? 1 : 0;
            punct += s.signals->punct_overuse ? 1 : 0;
            caps += s.signals->all_caps ? 1 : 0;
        }
    }
    std::sort(lengths.begin(), lengths.end());
    stats.length_median = lengths[(lengths.size() - 1) / 2];
    stats.length_max = lengths.back();
    stats.close_rate =
        static_cast<double>(closes) / static_cast<double>(stats.n);
    if (with_signals == stats.n) {
        const double n = static_cast<double>(stats.n);
        stats.misspelling_rate = static_cast<double>(miss) / n;
        stats.punct_overuse_rate = static_cast<double>(punct) / n;
        stats.all_caps_rate = static_cast<double>(caps) / n;
    }
    return stats;
}

}  // namespace charlead
