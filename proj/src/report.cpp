#include "xmf/report.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace xmf {
namespace {

double kahan_sum(const std::vector<double>& values, double shift = 0.0, int power = 1) {
    double sum = 0.0, comp = 0.0;
    for (double v : values) {
        double term = v - shift;
        if (power == 2) term *= term;
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace

DistributionSummary summarize(const std::vector<double>& values, StdDevDenominator denom) {
    if (values.empty()) {
        throw XmfError(ErrorCode::empty_input, "no values to summarize");
    }
    DistributionSummary s;
    s.count = values.size();
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    s.mean = kahan_sum(values) / double(values.size());
    double ss = kahan_sum(values, s.mean, 2);
    double n = denom == StdDevDenominator::population ? double(values.size())
                                                      : double(values.size() - 1);
    s.std_dev = values.size() == 1 ? 0.0 : std::sqrt(std::max(0.0, ss / n));
    return s;
}

BinCounts bin_similarities(const std::vector<double>& values) {
    BinCounts bins;
    for (double v : values) {
        if (!(v >= -1.0 && v <= 1.0)) {
            throw XmfError(ErrorCode::out_of_range_value,
                           std::to_string(v) + " outside [-1, 1]");
        }
        if (v <= 0.25) ++bins.low;
        else if (v >= 0.6) ++bins.high;
        else ++bins.medium;
    }
    return bins;
}

std::size_t CoOccurrence::at(const std::string& style, const std::string& genre) const {
    auto r = std::find(styles.begin(), styles.end(), style);
    auto c = std::find(genres.begin(), genres.end(), genre);
    if (r == styles.end() || c == genres.end()) return 0;
    return counts[std::size_t(r - styles.begin())][std::size_t(c - genres.begin())];
}

std::size_t CoOccurrence::total() const {
    std::size_t t = 0;
    for (const auto& row : counts) {
        for (std::size_t v : row) t += v;
    }
    return t;
}

CoOccurrence co_occurrence(const PairingOutcome& pairs,
                           const std::vector<ItemMetadata>& image_meta,
                           const std::vector<ItemMetadata>& audio_meta) {
    std::unordered_map<std::string, const ItemMetadata*> by_image, by_audio;
    for (const auto& m : image_meta) by_image[m.id] = &m;
    for (const auto& m : audio_meta) by_audio[m.id] = &m;

    std::map<std::string, std::map<std::string, std::size_t>> table;
    CoOccurrence out;
    for (const MatchedPair& p : pairs.pairs) {
        auto img = by_image.find(p.image_id);
        auto aud = by_audio.find(p.audio_id);
        const bool has_style = img != by_image.end() && img->second->style.has_value();
        const bool has_genre = aud != by_audio.end() && aud->second->genre.has_value();
        if (!has_style || !has_genre) {
            ++out.missing;
            continue;
        }
        ++table[*img->second->style][*aud->second->genre];
    }

    std::map<std::string, std::size_t> genre_index;
    for (const auto& [style, row] : table) {
        out.styles.push_back(style);
        for (const auto& [genre, _] : row) genre_index.emplace(genre, 0);
    }
    std::size_t gi = 0;
    for (auto& [genre, idx] : genre_index) {
        idx = gi++;
        out.genres.push_back(genre);
    }
    out.counts.assign(out.styles.size(), std::vector<std::size_t>(out.genres.size(), 0));
    std::size_t si = 0;
    for (const auto& [style, row] : table) {
        for (const auto& [genre, count] : row) {
            out.counts[si][genre_index[genre]] = count;
        }
        ++si;
    }
    return out;
}

}  // namespace xmf
