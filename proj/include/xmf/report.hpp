#pragma once

#include <map>
#include <string>
#include <vector>

#include "xmf/corpus.hpp"
#include "xmf/error.hpp"
#include "xmf/pairing.hpp"

namespace xmf {

struct DistributionSummary {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std_dev = 0.0;
    std::size_t count = 0;
};

enum class StdDevDenominator { population, sample };

// Compensated (Kahan) summation for mean and variance.
DistributionSummary summarize(const std::vector<double>& values,
                              StdDevDenominator denom = StdDevDenominator::population);

// Boundary convention: low <= 0.25, high >= 0.6, medium otherwise.
struct BinCounts {
    std::size_t low = 0;
    std::size_t medium = 0;
    std::size_t high = 0;
};

BinCounts bin_similarities(const std::vector<double>& values);

struct CoOccurrence {
    std::vector<std::string> styles;  // row labels, sorted
    std::vector<std::string> genres;  // column labels, sorted
    std::vector<std::vector<std::size_t>> counts;  // styles x genres
    std::size_t missing = 0;  // pairs lacking a style or genre label

    std::size_t at(const std::string& style, const std::string& genre) const;
    std::size_t total() const;
};

CoOccurrence co_occurrence(const PairingOutcome& pairs,
                           const std::vector<ItemMetadata>& image_meta,
                           const std::vector<ItemMetadata>& audio_meta);

}  // namespace xmf
