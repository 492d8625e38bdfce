#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xmf/error.hpp"

namespace xmf {

enum class CaptionKind { image, audio };

struct ComponentScores {
    std::optional<double> clip_score;  // image records
    std::optional<double> pac_score;   // image records
    std::optional<double> rouge1;      // audio records
    std::optional<double> bert_score;  // audio records
};

struct CaptionRecord {
    std::string id;
    CaptionKind kind = CaptionKind::image;
    std::string caption_text;
    std::vector<std::string> segment_captions;  // audio only
    ComponentScores components;
    double composite = 0.0;
    bool accepted = false;
    int attempts = 1;
    std::size_t length_chars = 0;
};

enum class GateDecision { accept, regenerate, retain_below_threshold };

const char* gate_decision_name(GateDecision d);

// gamma * clip + (1 - gamma) * pac
double icscore(double clip_score, double pac_score, double gamma = 0.35);

// alpha * rouge1 + (1 - alpha) * bert
double acscore(double rouge1_score, double bert_score, double alpha = 0.30);

enum class RougeVariant { f1, recall };
enum class RougeAggregation { concat, per_reference_max };

// Unigram-overlap ROUGE-1 with multiset clipping. Tokenization: lowercase,
// split on Unicode whitespace, strip leading/trailing punctuation.
double rouge1(const std::vector<std::string>& references, const std::string& candidate,
              RougeVariant variant = RougeVariant::f1,
              RougeAggregation aggregation = RougeAggregation::concat);

std::vector<std::string> rouge_tokenize(const std::string& text);

// Emits the decision; on regenerate, increments record.attempts. Never
// regenerates once attempts reaches max_attempts; failing records are
// retained with accepted=false.
GateDecision gate(CaptionRecord& record, double threshold = 0.80, int max_attempts = 3);

struct FieldStats {
    double min = 0.0;
    double avg = 0.0;
    double max = 0.0;
};

struct BatchStats {
    std::size_t count = 0;
    FieldStats length_chars;
    FieldStats clip_score, pac_score, rouge1, bert_score;  // over present values
    std::size_t clip_count = 0, pac_count = 0, rouge1_count = 0, bert_count = 0;
    FieldStats composite;
    std::size_t above_threshold = 0;
    std::size_t below_threshold = 0;
};

BatchStats batch_stats(const std::vector<CaptionRecord>& records, double threshold = 0.80);

}  // namespace xmf
