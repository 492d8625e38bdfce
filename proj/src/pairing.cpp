#include "xmf/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <queue>

#include "xmf/simkernel.hpp"

namespace xmf {
namespace {

// Shared similarity evaluation so the cached implementation and the
// oracle produce bitwise-identical values.
struct SimContext {
    const EmbeddingSet& audio;
    const EmbeddingSet& images;
    std::vector<double> audio_norm;
    std::vector<double> image_norm;
    std::vector<std::size_t> audio_rank;  // index -> lexicographic rank of id
    std::vector<std::size_t> image_rank;

    SimContext(const EmbeddingSet& a, const EmbeddingSet& i, unsigned threads)
        : audio(a), images(i) {
        if (a.dim() != i.dim()) {
            throw XmfError(ErrorCode::dim_mismatch,
                           std::to_string(a.dim()) + " vs " + std::to_string(i.dim()));
        }
        if (i.count() == 0) {
            throw XmfError(ErrorCode::empty_image_set, "no images to pair against");
        }
        audio_norm.resize(a.count());
        image_norm.resize(i.count());
        parallel_for(a.count(), threads, [&](std::size_t r) {
            audio_norm[r] = norm(a.row(r));
            if (audio_norm[r] <= 1e-12)
                throw XmfError(ErrorCode::zero_norm, "audio row " + std::to_string(r));
        });
        parallel_for(i.count(), threads, [&](std::size_t r) {
            image_norm[r] = norm(i.row(r));
            if (image_norm[r] <= 1e-12)
                throw XmfError(ErrorCode::zero_norm, "image row " + std::to_string(r));
        });
        audio_rank = ranks(a);
        image_rank = ranks(i);
    }

    static double norm(std::span<const double> r) {
        double sq = 0.0;
        for (double v : r) sq += v * v;
        return std::sqrt(sq);
    }

    static std::vector<std::size_t> ranks(const EmbeddingSet& set) {
        std::vector<std::size_t> order(set.count());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return set.id(x) < set.id(y); });
        std::vector<std::size_t> rank(set.count());
        for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos;
        return rank;
    }

    // Four-lane unrolled dot with a fixed reduction order: deterministic
    // for any thread count, and fast enough for the 20k x 20k workload.
    double sim(std::size_t ai, std::size_t ii) const {
        auto qa = audio.row(ai);
        auto qi = images.row(ii);
        const std::size_t d = qa.size();
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        std::size_t j = 0;
        for (; j + 4 <= d; j += 4) {
            a0 += qa[j] * qi[j];
            a1 += qa[j + 1] * qi[j + 1];
            a2 += qa[j + 2] * qi[j + 2];
            a3 += qa[j + 3] * qi[j + 3];
        }
        for (; j < d; ++j) a0 += qa[j] * qi[j];
        return std::clamp(((a0 + a1) + (a2 + a3)) / (audio_norm[ai] * image_norm[ii]),
                          -1.0, 1.0);
    }

    // true if candidate (s1,i1) beats (s2,i2) for one audio row
    bool image_better(double s1, std::size_t i1, double s2, std::size_t i2) const {
        if (s1 != s2) return s1 > s2;
        return image_rank[i1] < image_rank[i2];
    }
};

struct Candidate {
    double sim;
    std::size_t image;
};

std::vector<Candidate> top_candidates(const SimContext& ctx, std::size_t ai,
                                      std::size_t k, const std::vector<char>* taken) {
    std::vector<Candidate> cands;
    cands.reserve(taken ? 64 : ctx.images.count());
    for (std::size_t ii = 0; ii < ctx.images.count(); ++ii) {
        if (taken && (*taken)[ii]) continue;
        cands.push_back({ctx.sim(ai, ii), ii});
    }
    auto better = [&](const Candidate& x, const Candidate& y) {
        return ctx.image_better(x.sim, x.image, y.sim, y.image);
    };
    std::size_t kk = std::min(k, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + std::ptrdiff_t(kk), cands.end(), better);
    cands.resize(kk);
    cands.shrink_to_fit();  // these lists are cached per row; drop the scan capacity
    return cands;
}

std::vector<std::string> collect_unpaired(const EmbeddingSet& images,
                                          const std::vector<char>& taken) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < images.count(); ++i) {
        if (!taken[i]) ids.push_back(images.id(i));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

PairingOutcome run_global_greedy(const SimContext& ctx, const PairingConfig& config,
                                 unsigned threads) {
    const std::size_t n = ctx.audio.count();
    const std::size_t m = ctx.images.count();
    const std::size_t k = std::min<std::size_t>(m, 64);

    std::vector<std::vector<Candidate>> lists(n);
    parallel_for(n, threads,
                 [&](std::size_t ai) { lists[ai] = top_candidates(ctx, ai, k, nullptr); });
    std::vector<std::size_t> cursor(n, 0);

    struct Entry {
        double sim;
        std::size_t audio_rank;
        std::size_t image_rank;
        std::size_t audio;
        std::size_t image;
    };
    auto worse = [](const Entry& x, const Entry& y) {
        if (x.sim != y.sim) return x.sim < y.sim;
        if (x.audio_rank != y.audio_rank) return x.audio_rank > y.audio_rank;
        return x.image_rank > y.image_rank;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
    auto push_current = [&](std::size_t ai) {
        const Candidate& c = lists[ai][cursor[ai]];
        heap.push({c.sim, ctx.audio_rank[ai], ctx.image_rank[c.image], ai, c.image});
    };
    for (std::size_t ai = 0; ai < n; ++ai) {
        if (!lists[ai].empty()) push_current(ai);
    }

    std::vector<char> taken(m, 0);
    std::size_t taken_count = 0;
    PairingOutcome outcome;
    outcome.config = config;
    while (!heap.empty() && taken_count < m) {
        Entry e = heap.top();
        heap.pop();
        if (!taken[e.image]) {
            outcome.pairs.push_back({ctx.audio.id(e.audio), ctx.images.id(e.image), e.sim});
            taken[e.image] = 1;
            ++taken_count;
            continue;
        }
        std::size_t ai = e.audio;
        while (cursor[ai] < lists[ai].size() && taken[lists[ai][cursor[ai]].image]) {
            ++cursor[ai];
        }
        if (cursor[ai] == lists[ai].size()) {
            if (taken_count == m) continue;
            lists[ai] = top_candidates(ctx, ai, k, &taken);
            cursor[ai] = 0;
            if (lists[ai].empty()) continue;
        }
        push_current(ai);
    }
    outcome.unpaired_images = collect_unpaired(ctx.images, taken);
    return outcome;
}

PairingOutcome run_sequential(const SimContext& ctx, const PairingConfig& config,
                              unsigned threads) {
    const std::size_t n = ctx.audio.count();
    const std::size_t m = ctx.images.count();
    const std::size_t k = std::min<std::size_t>(m, 64);

    std::vector<std::vector<Candidate>> lists(n);
    parallel_for(n, threads,
                 [&](std::size_t ai) { lists[ai] = top_candidates(ctx, ai, k, nullptr); });

    // Static visit order: best initial similarity descending, then audio id.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (lists[x][0].sim != lists[y][0].sim) return lists[x][0].sim > lists[y][0].sim;
        return ctx.audio_rank[x] < ctx.audio_rank[y];
    });

    std::vector<char> taken(m, 0);
    std::size_t taken_count = 0;
    PairingOutcome outcome;
    outcome.config = config;
    for (std::size_t ai : order) {
        if (taken_count == m) break;
        std::size_t cur = 0;
        while (cur < lists[ai].size() && taken[lists[ai][cur].image]) ++cur;
        Candidate chosen;
        if (cur < lists[ai].size()) {
            chosen = lists[ai][cur];
        } else {
            auto refreshed = top_candidates(ctx, ai, 1, &taken);
            if (refreshed.empty()) continue;
            chosen = refreshed[0];
        }
        outcome.pairs.push_back({ctx.audio.id(ai), ctx.images.id(chosen.image), chosen.sim});
        taken[chosen.image] = 1;
        ++taken_count;
    }
    outcome.unpaired_images = collect_unpaired(ctx.images, taken);
    return outcome;
}

}  // namespace

const char* pairing_mode_name(PairingMode m) {
    return m == PairingMode::global_greedy ? "global_greedy" : "sequential_by_audio";
}

PairingOutcome pair_greedy(const EmbeddingSet& audio, const EmbeddingSet& images,
                           const PairingConfig& config, unsigned threads) {
    SimContext ctx(audio, images, threads);
    return config.mode == PairingMode::global_greedy
               ? run_global_greedy(ctx, config, threads)
               : run_sequential(ctx, config, threads);
}

PairingOutcome pair_oracle(const EmbeddingSet& audio, const EmbeddingSet& images,
                           const PairingConfig& config) {
    if (audio.count() * images.count() > 1000000) {
        throw XmfError(ErrorCode::size_limit_exceeded,
                       "oracle is limited to |audio|*|images| <= 1e6");
    }
    SimContext ctx(audio, images, 1);
    const std::size_t n = audio.count();
    const std::size_t m = images.count();
    std::vector<double> matrix(n * m);
    for (std::size_t ai = 0; ai < n; ++ai) {
        for (std::size_t ii = 0; ii < m; ++ii) matrix[ai * m + ii] = ctx.sim(ai, ii);
    }

    std::vector<char> audio_done(n, 0), taken(m, 0);
    PairingOutcome outcome;
    outcome.config = config;

    auto argmax_row = [&](std::size_t ai, std::size_t& best_ii) {
        bool found = false;
        for (std::size_t ii = 0; ii < m; ++ii) {
            if (taken[ii]) continue;
            if (!found || ctx.image_better(matrix[ai * m + ii], ii,
                                           matrix[ai * m + best_ii], best_ii)) {
                best_ii = ii;
                found = true;
            }
        }
        return found;
    };

    if (config.mode == PairingMode::global_greedy) {
        std::size_t remaining = std::min(n, m);
        while (remaining-- > 0) {
            bool found = false;
            std::size_t best_a = 0, best_i = 0;
            for (std::size_t ai = 0; ai < n; ++ai) {
                if (audio_done[ai]) continue;
                std::size_t row_best = 0;
                if (!argmax_row(ai, row_best)) continue;
                double s = matrix[ai * m + row_best];
                double bs = matrix[best_a * m + best_i];
                bool wins = !found || s > bs ||
                            (s == bs && (ctx.audio_rank[ai] < ctx.audio_rank[best_a] ||
                                         (ctx.audio_rank[ai] == ctx.audio_rank[best_a] &&
                                          ctx.image_rank[row_best] < ctx.image_rank[best_i])));
                if (wins) {
                    best_a = ai;
                    best_i = row_best;
                    found = true;
                }
            }
            if (!found) break;
            outcome.pairs.push_back(
                {audio.id(best_a), images.id(best_i), matrix[best_a * m + best_i]});
            audio_done[best_a] = 1;
            taken[best_i] = 1;
        }
    } else {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::vector<double> best_sim(n);
        std::vector<std::size_t> best_img(n);
        for (std::size_t ai = 0; ai < n; ++ai) {
            std::size_t bi = 0;
            argmax_row(ai, bi);
            best_sim[ai] = matrix[ai * m + bi];
            best_img[ai] = bi;
        }
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            if (best_sim[x] != best_sim[y]) return best_sim[x] > best_sim[y];
            return ctx.audio_rank[x] < ctx.audio_rank[y];
        });
        for (std::size_t ai : order) {
            std::size_t bi = 0;
            if (!argmax_row(ai, bi)) continue;
            outcome.pairs.push_back({audio.id(ai), images.id(bi), matrix[ai * m + bi]});
            taken[bi] = 1;
        }
    }
    outcome.unpaired_images = collect_unpaired(images, taken);
    return outcome;
}

void export_pairs(const PairingOutcome& outcome, const std::string& path,
                  const std::string& comment) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw XmfError(ErrorCode::io_error, "cannot open " + path + " for writing");
    }
    if (!comment.empty()) out << "# " << comment << "\n";
    out << "audio_id,image_id,similarity,mode\n";
    const char* mode = pairing_mode_name(outcome.config.mode);
    char buf[32];
    for (const MatchedPair& p : outcome.pairs) {
        std::snprintf(buf, sizeof(buf), "%.9f", p.similarity);
        out << p.audio_id << ',' << p.image_id << ',' << buf << ',' << mode << "\n";
    }
    if (!out) {
        throw XmfError(ErrorCode::io_error, "write failed for " + path);
    }
}

}  // namespace xmf
