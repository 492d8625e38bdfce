#include "xmf/capscore.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <unordered_map>

namespace xmf {
namespace {

void require_unit_interval(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw XmfError(ErrorCode::out_of_range_operand,
                       std::string(name) + " = " + std::to_string(v) + " outside [0,1]");
    }
}

using TokenCounts = std::unordered_map<std::string, std::size_t>;

TokenCounts count_tokens(const std::vector<std::string>& tokens) {
    TokenCounts counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
}

// Clipped unigram overlap between candidate counts and reference counts.
std::size_t overlap(const TokenCounts& cand, const TokenCounts& ref) {
    std::size_t total = 0;
    for (const auto& [tok, c] : cand) {
        auto it = ref.find(tok);
        if (it != ref.end()) total += std::min(c, it->second);
    }
    return total;
}

double rouge_score(const TokenCounts& cand, std::size_t cand_total,
                   const TokenCounts& ref, std::size_t ref_total, RougeVariant variant) {
    std::size_t hits = overlap(cand, ref);
    if (variant == RougeVariant::recall) {
        return ref_total == 0 ? 0.0 : double(hits) / double(ref_total);
    }
    // F1 = 2PR/(P+R) reduced to 2*hits/(|cand|+|ref|)
    if (hits == 0) return 0.0;
    return 2.0 * double(hits) / double(cand_total + ref_total);
}

// Decodes one UTF-8 code point; advances i. Invalid bytes pass through as-is.
uint32_t decode_utf8(const std::string& s, std::size_t& i) {
    unsigned char c = s[i];
    if (c < 0x80) { ++i; return c; }
    std::size_t len = (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : (c & 0xF8) == 0xF0 ? 4 : 1;
    if (i + len > s.size()) len = 1;
    uint32_t cp = c & (0xFF >> (len + 1));
    for (std::size_t k = 1; k < len; ++k) {
        unsigned char cc = s[i + k];
        if ((cc & 0xC0) != 0x80) { cp = c; len = 1; break; }
        cp = (cp << 6) | (cc & 0x3F);
    }
    i += len;
    return cp;
}

bool is_unicode_space(uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_strippable_punct(unsigned char c) { return std::ispunct(c) != 0; }

}  // namespace

const char* gate_decision_name(GateDecision d) {
    switch (d) {
        case GateDecision::accept: return "accept";
        case GateDecision::regenerate: return "regenerate";
        case GateDecision::retain_below_threshold: return "retain_below_threshold";
    }
    return "unknown";
}

double icscore(double clip_score, double pac_score, double gamma) {
    require_unit_interval(clip_score, "clip_score");
    require_unit_interval(pac_score, "pac_score");
    require_unit_interval(gamma, "gamma");
    return gamma * clip_score + (1.0 - gamma) * pac_score;
}

double acscore(double rouge1_score, double bert_score, double alpha) {
    require_unit_interval(rouge1_score, "rouge1");
    require_unit_interval(bert_score, "bert_score");
    require_unit_interval(alpha, "alpha");
    return alpha * rouge1_score + (1.0 - alpha) * bert_score;
}

std::vector<std::string> rouge_tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string word;
    std::size_t i = 0;
    auto flush = [&] {
        std::size_t begin = 0, end = word.size();
        while (begin < end && is_strippable_punct(word[begin])) ++begin;
        while (end > begin && is_strippable_punct(word[end - 1])) --end;
        if (end > begin) tokens.push_back(word.substr(begin, end - begin));
        word.clear();
    };
    while (i < text.size()) {
        std::size_t start = i;
        uint32_t cp = decode_utf8(text, i);
        if (is_unicode_space(cp)) {
            flush();
        } else {
            for (std::size_t k = start; k < i; ++k) {
                char c = text[k];
                word.push_back(cp < 0x80 ? char(std::tolower((unsigned char)c)) : c);
            }
        }
    }
    flush();
    return tokens;
}

double rouge1(const std::vector<std::string>& references, const std::string& candidate,
              RougeVariant variant, RougeAggregation aggregation) {
    std::vector<std::string> cand_tokens = rouge_tokenize(candidate);
    if (cand_tokens.empty()) {
        throw XmfError(ErrorCode::empty_candidate, "candidate has no tokens");
    }
    std::vector<std::vector<std::string>> ref_tokens;
    for (const auto& r : references) {
        auto toks = rouge_tokenize(r);
        if (!toks.empty()) ref_tokens.push_back(std::move(toks));
    }
    if (ref_tokens.empty()) {
        throw XmfError(ErrorCode::empty_references, "no non-empty reference");
    }
    TokenCounts cand = count_tokens(cand_tokens);

    if (aggregation == RougeAggregation::concat) {
        TokenCounts ref;
        std::size_t total = 0;
        for (const auto& toks : ref_tokens) {
            for (const auto& t : toks) ++ref[t];
            total += toks.size();
        }
        return rouge_score(cand, cand_tokens.size(), ref, total, variant);
    }
    double best = 0.0;
    for (const auto& toks : ref_tokens) {
        best = std::max(best, rouge_score(cand, cand_tokens.size(), count_tokens(toks),
                                          toks.size(), variant));
    }
    return best;
}

GateDecision gate(CaptionRecord& record, double threshold, int max_attempts) {
    if (record.composite >= threshold) {
        record.accepted = true;
        return GateDecision::accept;
    }
    if (record.attempts < max_attempts) {
        ++record.attempts;
        return GateDecision::regenerate;
    }
    record.accepted = false;
    return GateDecision::retain_below_threshold;
}

BatchStats batch_stats(const std::vector<CaptionRecord>& records, double threshold) {
    if (records.empty()) {
        throw XmfError(ErrorCode::empty_input, "no caption records");
    }
    struct Acc {
        double min = std::numeric_limits<double>::infinity();
        double max = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        std::size_t n = 0;
        void add(double v) {
            min = std::min(min, v);
            max = std::max(max, v);
            sum += v;
            ++n;
        }
        FieldStats done() const { return n == 0 ? FieldStats{} : FieldStats{min, sum / double(n), max}; }
    };
    Acc length, clip, pac, rouge, bert, composite;
    BatchStats out;
    for (const auto& r : records) {
        length.add(double(r.length_chars));
        composite.add(r.composite);
        if (r.components.clip_score) clip.add(*r.components.clip_score);
        if (r.components.pac_score) pac.add(*r.components.pac_score);
        if (r.components.rouge1) rouge.add(*r.components.rouge1);
        if (r.components.bert_score) bert.add(*r.components.bert_score);
        if (r.composite >= threshold) ++out.above_threshold;
        else ++out.below_threshold;
    }
    out.count = records.size();
    out.length_chars = length.done();
    out.clip_score = clip.done();
    out.pac_score = pac.done();
    out.rouge1 = rouge.done();
    out.bert_score = bert.done();
    out.clip_count = clip.n;
    out.pac_count = pac.n;
    out.rouge1_count = rouge.n;
    out.bert_count = bert.n;
    out.composite = composite.done();
    return out;
}

}  // namespace xmf
