#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "xmf/corpus.hpp"
#include "xmf/error.hpp"

namespace xmf {

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
};

struct SimilarityBlock {
    IndexRange audio_range;
    IndexRange image_range;
    std::vector<double> values;  // row-major (audio_range.size x image_range.size)
};

struct TopKList {
    std::size_t query_index = 0;
    std::vector<std::pair<std::size_t, double>> neighbors;  // (candidate, sim)
    std::size_t k = 0;
};

// (a.b)/(|a||b|) clamped to [-1,1]; accumulation is sequential 64-bit.
double cosine(std::span<const double> a, std::span<const double> b);

// Emits blocks row-major over the block grid, in deterministic order.
// Rows within a block are computed in parallel across `threads` workers;
// each dot product keeps a fixed sequential reduction order, so results
// are bitwise identical for any thread count.
void sim_matrix(const EmbeddingSet& a, const EmbeddingSet& b, std::size_t block,
                const std::function<void(const SimilarityBlock&)>& sink,
                unsigned threads = 1);

// Per-row top-k under cosine; ties broken by ascending candidate id
// (bytewise). Equivalent to sorting the full sim_matrix row.
std::vector<TopKList> topk(const EmbeddingSet& a, const EmbeddingSet& b,
                           std::size_t k, unsigned threads = 1);

// Invokes fn(i) for i in [0, n) split across `threads` workers.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace xmf
