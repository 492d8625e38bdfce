#pragma once

#include <string>
#include <vector>

#include "xmf/corpus.hpp"

namespace xmf {

enum class PairingMode { global_greedy, sequential_by_audio };

const char* pairing_mode_name(PairingMode m);

// Tie-break policy is fixed: higher similarity, then ascending audio id,
// then ascending image id (bytewise UTF-8).
struct PairingConfig {
    PairingMode mode = PairingMode::global_greedy;
};

struct MatchedPair {
    std::string audio_id;
    std::string image_id;
    double similarity;

    bool operator==(const MatchedPair&) const = default;
};

struct PairingOutcome {
    std::vector<MatchedPair> pairs;  // in selection order
    std::vector<std::string> unpaired_images;  // ascending id
    PairingConfig config;
};

// Greedy one-to-one assignment of audio items to images.
//
// global_greedy: repeatedly select the maximum-similarity pair among
// unmatched items and remove both; the similarity sequence in selection
// order is non-increasing.
//
// sequential_by_audio: audio items are ordered once by their best
// similarity over the full image set (descending, then ascending audio
// id) and each is assigned its argmax over the still-available images.
//
// Internally uses per-audio cached candidate lists with lazy invalidation
// and a fresh row scan on exhaustion; output is identical to pair_oracle.
PairingOutcome pair_greedy(const EmbeddingSet& audio, const EmbeddingSet& images,
                           const PairingConfig& config, unsigned threads = 1);

// Ground truth: materializes the full similarity matrix and performs
// literal repeated argmax with deletions. Desk scale only.
PairingOutcome pair_oracle(const EmbeddingSet& audio, const EmbeddingSet& images,
                           const PairingConfig& config);

// CSV "audio_id,image_id,similarity,mode" with 9 decimal digits, in
// selection order. Non-empty comment lines are written first, prefixed '#'.
void export_pairs(const PairingOutcome& outcome, const std::string& path,
                  const std::string& comment = "");

}  // namespace xmf
