#include "xmf/simkernel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace xmf {
namespace {

double dot_seq(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

void require_same_dim(const EmbeddingSet& a, const EmbeddingSet& b) {
    if (a.dim() != b.dim()) {
        throw XmfError(ErrorCode::dim_mismatch,
                       std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    }
}

double row_norm(std::span<const double> r) { return std::sqrt(dot_seq(r, r)); }

}  // namespace

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    unsigned workers = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                    fn(i);
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw XmfError(ErrorCode::dim_mismatch,
                       std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    double na = row_norm(a);
    double nb = row_norm(b);
    if (na <= 1e-12 || nb <= 1e-12) {
        throw XmfError(ErrorCode::zero_norm, "cosine undefined for near-zero vector");
    }
    return clamp_unit(dot_seq(a, b) / (na * nb));
}

void sim_matrix(const EmbeddingSet& a, const EmbeddingSet& b, std::size_t block,
                const std::function<void(const SimilarityBlock&)>& sink,
                unsigned threads) {
    require_same_dim(a, b);
    if (block == 0) block = 1;

    std::vector<double> norms_a(a.count()), norms_b(b.count());
    parallel_for(a.count(), threads, [&](std::size_t i) { norms_a[i] = row_norm(a.row(i)); });
    parallel_for(b.count(), threads, [&](std::size_t i) { norms_b[i] = row_norm(b.row(i)); });
    for (std::size_t i = 0; i < a.count(); ++i) {
        if (norms_a[i] <= 1e-12)
            throw XmfError(ErrorCode::zero_norm, "row " + std::to_string(i) + " of first set");
    }
    for (std::size_t i = 0; i < b.count(); ++i) {
        if (norms_b[i] <= 1e-12)
            throw XmfError(ErrorCode::zero_norm, "row " + std::to_string(i) + " of second set");
    }

    for (std::size_t r0 = 0; r0 < a.count(); r0 += block) {
        std::size_t r1 = std::min(r0 + block, a.count());
        for (std::size_t c0 = 0; c0 < b.count(); c0 += block) {
            std::size_t c1 = std::min(c0 + block, b.count());
            SimilarityBlock blk;
            blk.audio_range = {r0, r1};
            blk.image_range = {c0, c1};
            blk.values.assign((r1 - r0) * (c1 - c0), 0.0);
            parallel_for(r1 - r0, threads, [&](std::size_t ri) {
                auto qa = a.row(r0 + ri);
                for (std::size_t ci = 0; ci < c1 - c0; ++ci) {
                    double s = dot_seq(qa, b.row(c0 + ci)) /
                               (norms_a[r0 + ri] * norms_b[c0 + ci]);
                    blk.values[ri * (c1 - c0) + ci] = clamp_unit(s);
                }
            });
            sink(blk);
        }
    }
}

std::vector<TopKList> topk(const EmbeddingSet& a, const EmbeddingSet& b,
                           std::size_t k, unsigned threads) {
    require_same_dim(a, b);
    if (k == 0) {
        throw XmfError(ErrorCode::out_of_range_operand, "k must be >= 1");
    }
    std::vector<double> norms_b(b.count());
    parallel_for(b.count(), threads, [&](std::size_t i) {
        norms_b[i] = row_norm(b.row(i));
        if (norms_b[i] <= 1e-12) norms_b[i] = -1.0;  // flagged below
    });
    for (std::size_t i = 0; i < b.count(); ++i) {
        if (norms_b[i] < 0.0)
            throw XmfError(ErrorCode::zero_norm, "row " + std::to_string(i) + " of candidate set");
    }

    std::vector<TopKList> result(a.count());
    parallel_for(a.count(), threads, [&](std::size_t qi) {
        auto q = a.row(qi);
        double nq = row_norm(q);
        if (nq <= 1e-12) {
            throw XmfError(ErrorCode::zero_norm, "query row " + std::to_string(qi));
        }
        std::vector<std::pair<std::size_t, double>> sims(b.count());
        for (std::size_t ci = 0; ci < b.count(); ++ci) {
            sims[ci] = {ci, clamp_unit(dot_seq(q, b.row(ci)) / (nq * norms_b[ci]))};
        }
        auto better = [&](const auto& x, const auto& y) {
            if (x.second != y.second) return x.second > y.second;
            return b.id(x.first) < b.id(y.first);
        };
        std::size_t kk = std::min(k, sims.size());
        std::partial_sort(sims.begin(), sims.begin() + std::ptrdiff_t(kk), sims.end(), better);
        sims.resize(kk);
        result[qi] = TopKList{qi, std::move(sims), k};
    });
    return result;
}

}  // namespace xmf
