// End-to-end acceptance suite. Each criterion prints exactly one PASS/FAIL
// line; the exit code is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "xmf/capscore.hpp"
#include "xmf/corpus.hpp"
#include "xmf/diffusion.hpp"
#include "xmf/genmetrics.hpp"
#include "xmf/pairing.hpp"
#include "xmf/report.hpp"

#include "test_util.hpp"

using namespace xmf;
using xmf::test::TempDir;

namespace {

int g_failures = 0;

void criterion(int n, const char* name, bool ok, const std::string& notes = "") {
    std::printf("CRITERION %d (%s): %s%s%s\n", n, name, ok ? "PASS" : "FAIL",
                notes.empty() ? "" : " -- ", notes.c_str());
    if (!ok) ++g_failures;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------- 1: composite score formulas against published operands ----------

void criterion_scores() {
    bool ok = std::abs(icscore(0.7821, 0.8431) - 0.8217) < 5e-4 &&
              std::abs(acscore(0.6894, 0.9321) - 0.8593) < 5e-4 &&
              std::abs(acscore(0.6870, 0.9312) - 0.8579) < 5e-4;
    criterion(1, "score composition", ok);
}

// ---------- 2: greedy pairing equals the brute-force oracle ----------

EmbeddingSet random_instance(std::mt19937_64& rng, std::size_t count, std::size_t dim,
                             Source source, const std::string& prefix) {
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::vector<std::string> ids;
    std::vector<double> flat(count * dim);
    for (std::size_t i = 0; i < count; ++i) {
        ids.push_back(prefix + std::to_string(i));
        for (std::size_t j = 0; j < dim; ++j) flat[i * dim + j] = uniform(rng);
        // keep rows away from zero norm
        flat[i * dim] += (flat[i * dim] < 0 ? -0.5 : 0.5);
    }
    // plant exact duplicates to force similarity ties
    if (count >= 4) {
        std::uniform_int_distribution<std::size_t> pick(0, count - 1);
        for (int dup = 0; dup < 2; ++dup) {
            std::size_t from = pick(rng), to = pick(rng);
            std::copy_n(flat.begin() + long(from * dim), dim, flat.begin() + long(to * dim));
        }
    }
    return EmbeddingSet(std::move(ids), dim, std::move(flat), source, Modality::raw);
}

bool same_outcome(const PairingOutcome& a, const PairingOutcome& b) {
    return a.pairs == b.pairs && a.unpaired_images == b.unpaired_images;
}

void criterion_oracle_equivalence() {
    auto start = std::chrono::steady_clock::now();
    bool ok = true;
    for (std::uint64_t trial = 0; trial < 500 && ok; ++trial) {
        std::mt19937_64 rng(0xace0 + trial);
        std::uniform_int_distribution<std::size_t> size_dist(1, 50), dim_dist(1, 8);
        std::size_t n = size_dist(rng), m = size_dist(rng), d = dim_dist(rng);
        auto audio = random_instance(rng, n, d, Source::audio, "a");
        auto images = random_instance(rng, m, d, Source::image, "i");
        for (auto mode : {PairingMode::global_greedy, PairingMode::sequential_by_audio}) {
            PairingConfig config{mode};
            unsigned threads = 1 + unsigned(trial % 4);
            if (!same_outcome(pair_greedy(audio, images, config, threads),
                              pair_oracle(audio, images, config))) {
                ok = false;
                break;
            }
        }
    }
    double secs = elapsed_s(start);
    criterion(2, "pairing oracle equivalence", ok && secs < 30.0,
              "500 instances in " + std::to_string(secs) + "s");
}

// ---------- 3: pairing at scale, thread-count independence ----------

void criterion_pairing_scale() {
    const std::size_t n = 20000, d = 256;
    std::mt19937_64 rng(0x5ca1e);
    auto audio = normalize(random_instance(rng, n, d, Source::audio, "a"));
    auto images = normalize(random_instance(rng, n, d, Source::image, "i"));
    PairingConfig config{PairingMode::global_greedy};

    auto start = std::chrono::steady_clock::now();
    auto eight = pair_greedy(audio, images, config, 8);
    double secs = elapsed_s(start);

    auto one = pair_greedy(audio, images, config, 1);

    bool identical = same_outcome(one, eight);
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < eight.pairs.size(); ++i) {
        if (eight.pairs[i + 1].similarity > eight.pairs[i].similarity) monotone = false;
    }
    bool complete = eight.pairs.size() == n;
    criterion(3, "pairing scale and determinism",
              identical && monotone && complete && secs < 120.0,
              "8-thread run " + std::to_string(secs) + "s");
}

// ---------- 4: Frechet distance between fitted Gaussians ----------

GaussianStats random_gaussian(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> normal(0.0, 1.0);
    GaussianStats g;
    g.mean = Eigen::VectorXd::NullaryExpr(long(d), [&](long) { return normal(rng); });
    Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(long(d), long(d),
                                                     [&](long, long) { return normal(rng); });
    g.cov = a * a.transpose();
    g.n = 100;
    return g;
}

void criterion_fad() {
    bool self_zero = true, symmetric = true;
    std::mt19937_64 rng(0xfad);
    GaussianStats prev;
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<std::size_t> dim_dist(1, 16);
        auto g = random_gaussian(rng, dim_dist(rng));
        if (fad(g, g) >= 1e-8) self_zero = false;
        if (trial > 0 && prev.mean.size() == g.mean.size()) {
            if (std::abs(fad(prev, g) - fad(g, prev)) >= 1e-8) symmetric = false;
        }
        prev = g;
    }
    // equal means, diag(1,4) vs diag(9,1): trace term 15 - 2*(3+2) = 5
    GaussianStats b, e;
    b.mean = Eigen::VectorXd::Zero(2);
    e.mean = Eigen::VectorXd::Zero(2);
    b.cov = Eigen::Vector2d(1.0, 4.0).asDiagonal();
    e.cov = Eigen::Vector2d(9.0, 1.0).asDiagonal();
    b.n = e.n = 10;
    bool fixture = std::abs(fad(b, e) - 5.0) < 1e-6;
    criterion(4, "frechet audio distance", self_zero && symmetric && fixture);
}

// ---------- 5: smoothed KL divergence ----------

void criterion_kl() {
    bool fixture = std::abs(kl_div({{0.5, 0.5}}, {{0.25, 0.75}}) - 0.14384) < 1e-3;
    std::mt19937_64 rng(0x1e1);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> dim_dist(2, 16);
    bool non_negative = true, self_zero = true;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t d = dim_dist(rng);
        ProbVector p, q;
        double sp = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            p.p.push_back(uniform(rng));
            q.p.push_back(uniform(rng));
            sp += p.p.back();
            sq += q.p.back();
        }
        for (std::size_t i = 0; i < d; ++i) {
            p.p[i] /= sp;
            q.p[i] /= sq;
        }
        if (kl_div(p, q) < -1e-12) non_negative = false;
        if (std::abs(kl_div(p, p)) >= 1e-9) self_zero = false;
    }
    criterion(5, "kl divergence", fixture && non_negative && self_zero);
}

// ---------- 6: forward noising inverts under full-sequence DDIM ----------

void criterion_diffusion() {
    auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(0xdd1);
    std::normal_distribution<double> normal(0.0, 1.0);
    bool recovers = true, weights_exact = true, snr_decreasing = true;
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> dim_dist(1, 32), t_dist(1, 50);
        std::size_t d = dim_dist(rng), T = t_dist(rng);
        std::uniform_real_distribution<double> end_dist(0.005, 0.05);
        auto sched = make_schedule(T, 1e-4, end_dist(rng));

        Eigen::VectorXd z0 =
            Eigen::VectorXd::NullaryExpr(long(d), [&](long) { return normal(rng); });
        Eigen::VectorXd eps =
            Eigen::VectorXd::NullaryExpr(long(d), [&](long) { return normal(rng); });
        auto zT = q_sample({z0, 0}, T, eps, sched);

        Denoiser oracle = [&](const Eigen::VectorXd& z, std::size_t t,
                              const std::any&) -> Eigen::VectorXd {
            double abar = sched.alpha_bar_at(t);
            return (z - std::sqrt(abar) * z0) / std::sqrt(1.0 - abar);
        };
        std::vector<std::size_t> steps;
        for (std::size_t t = T; t >= 1; --t) steps.push_back(t);
        Eigen::VectorXd out = ddim_sample(zT, oracle, {}, steps, sched);
        if ((out - z0).cwiseAbs().maxCoeff() >= 1e-10) recovers = false;

        for (std::size_t t = 1; t <= T; ++t) {
            double snr = sched.snr[t - 1];
            if (min_snr_weight(t, sched) != std::min(snr, 5.0) / snr) weights_exact = false;
            if (t < T && !(sched.snr[t - 1] > sched.snr[t])) snr_decreasing = false;
        }
    }
    double secs = elapsed_s(start);
    criterion(6, "diffusion consistency",
              recovers && weights_exact && snr_decreasing && secs < 10.0);
}

// ---------- 7: aligner gradients vs finite differences; frozen denoiser ----------

bool close_rel(double a, double b) {
    return std::abs(a - b) <= 1e-4 * std::max({1.0, std::abs(a), std::abs(b)});
}

void criterion_gradients() {
    std::mt19937_64 rng(0x9ead);
    bool grads_ok = true;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::uint64_t trial = 0; trial < 20 && grads_ok; ++trial) {
        std::uniform_int_distribution<std::size_t> small(4, 8), tok(2, 4), nt(1, 2);
        AlignerShape shape;
        shape.in_dim = small(rng);
        shape.up_dim = (trial % 2 == 0) ? shape.in_dim : shape.in_dim + 2;
        shape.token_width = tok(rng);
        shape.n_tokens = nt(rng);
        std::size_t latent = small(rng), T = 20;
        auto sched = make_schedule(T, 1e-4, 0.02);
        auto aligner = ToyAligner::seeded(shape, 1000 + trial, 0.05);
        auto denoiser = ToyDenoiser::seeded(latent, shape.cond_dim(), 2000 + trial);

        std::vector<NoisedSample> batch;
        std::uniform_int_distribution<std::size_t> t_dist(1, T);
        for (int s = 0; s < 3; ++s) {
            NoisedSample ns;
            ns.z0 = Eigen::VectorXd::NullaryExpr(long(latent), [&](long) { return normal(rng); });
            ns.eps = Eigen::VectorXd::NullaryExpr(long(latent), [&](long) { return normal(rng); });
            ns.t = t_dist(rng);
            ns.x = Eigen::VectorXd::NullaryExpr(long(shape.in_dim),
                                                [&](long) { return normal(rng); });
            batch.push_back(ns);
        }

        auto analytic = aligner_batch_gradient(aligner, denoiser, batch, sched);
        const double h = 1e-5;
        auto fd_check = [&](Eigen::MatrixXd& w, const Eigen::MatrixXd& g) {
            for (long r = 0; r < w.rows() && grads_ok; ++r) {
                for (long c = 0; c < w.cols() && grads_ok; ++c) {
                    double saved = w(r, c);
                    w(r, c) = saved + h;
                    double up = aligner_batch_loss(aligner, denoiser, batch, sched);
                    w(r, c) = saved - h;
                    double down = aligner_batch_loss(aligner, denoiser, batch, sched);
                    w(r, c) = saved;
                    if (!close_rel(g(r, c), (up - down) / (2.0 * h))) grads_ok = false;
                }
            }
        };
        fd_check(aligner.w_proj, analytic.w_proj);
        if (aligner.w_up) fd_check(*aligner.w_up, *analytic.w_up);
    }

    // training must leave the denoiser bit-identical
    AlignerShape shape{4, 6, 3, 2};
    auto sched = make_schedule(30, 1e-4, 0.02);
    auto denoiser = ToyDenoiser::seeded(5, shape.cond_dim(), 77);
    Eigen::MatrixXd dz_before = denoiser.d_z, dc_before = denoiser.d_c;
    std::vector<TrainSample> pairs;
    for (int i = 0; i < 6; ++i) {
        TrainSample ts;
        ts.image_embedding =
            Eigen::VectorXd::NullaryExpr(long(shape.in_dim), [&](long) { return normal(rng); });
        ts.target_latent =
            Eigen::VectorXd::NullaryExpr(5, [&](long) { return normal(rng); });
        pairs.push_back(ts);
    }
    auto result = train_toy_aligner(pairs, sched, 50, 1e-3, denoiser,
                                    ToyAligner::seeded(shape, 5, 0.01), 123);
    bool frozen = std::memcmp(dz_before.data(), denoiser.d_z.data(),
                              sizeof(double) * std::size_t(dz_before.size())) == 0 &&
                  std::memcmp(dc_before.data(), denoiser.d_c.data(),
                              sizeof(double) * std::size_t(dc_before.size())) == 0;
    criterion(7, "aligner gradient check", grads_ok && frozen && !result.log.empty());
}

// ---------- 8: unigram overlap scores ----------

void criterion_rouge() {
    bool ok = rouge1({"the cat"}, "the cat sat") == 0.8 &&
              rouge1({"the cat sat"}, "the cat sat") == 1.0 &&
              rouge1({"dog runs far"}, "the cat sat") == 0.0;

    // score is 1 exactly when the token multisets coincide
    std::mt19937_64 rng(0x8008);
    const std::vector<std::string> vocab = {"red", "blue", "tone", "hum", "soft", "lo"};
    std::uniform_int_distribution<std::size_t> len(1, 6), word(0, vocab.size() - 1);
    for (int trial = 0; trial < 200 && ok; ++trial) {
        std::string cand, ref;
        std::vector<std::string> ct, rt;
        for (std::size_t i = 0, n = len(rng); i < n; ++i) {
            ct.push_back(vocab[word(rng)]);
            cand += (i ? " " : "") + ct.back();
        }
        for (std::size_t i = 0, n = len(rng); i < n; ++i) {
            rt.push_back(vocab[word(rng)]);
            ref += (i ? " " : "") + rt.back();
        }
        std::sort(ct.begin(), ct.end());
        std::sort(rt.begin(), rt.end());
        if ((rouge1({ref}, cand) == 1.0) != (ct == rt)) ok = false;
    }
    criterion(8, "rouge-1 unigram overlap", ok);
}

// ---------- 9: summary statistics, bins, co-occurrence ----------

void criterion_reporting() {
    std::mt19937_64 rng(0x5e9);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> values(100000);
    for (auto& v : values) v = uniform(rng);
    auto summary = summarize(values);
    long double sum = 0.0L;
    for (double v : values) sum += v;
    long double mean = sum / values.size();
    long double var = 0.0L;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= values.size();
    bool summary_ok = std::abs(summary.mean - double(mean)) < 1e-12 &&
                      std::abs(summary.std_dev - double(sqrtl(var))) < 1e-12 &&
                      summary.min == *std::min_element(values.begin(), values.end()) &&
                      summary.max == *std::max_element(values.begin(), values.end()) &&
                      summary.count == values.size();

    std::vector<double> sims(10000);
    std::uniform_real_distribution<double> sim_dist(-1.0, 1.0);
    for (auto& v : sims) v = sim_dist(rng);
    auto bins = bin_similarities(sims);
    std::size_t low = 0, medium = 0, high = 0;
    for (double v : sims) {
        if (v <= 0.25)
            ++low;
        else if (v >= 0.6)
            ++high;
        else
            ++medium;
    }
    bool bins_ok = bins.low == low && bins.medium == medium && bins.high == high &&
                   bins.low + bins.medium + bins.high == sims.size();

    // planted style x genre structure
    const std::vector<std::string> styles = {"Baroque", "Cubism", "Minimalism"};
    const std::vector<std::string> genres = {"ambient", "jazz"};
    PairingOutcome outcome;
    std::vector<ItemMetadata> image_meta, audio_meta;
    std::size_t planted[3][2];
    int serial = 0;
    for (std::size_t s = 0; s < styles.size(); ++s) {
        for (std::size_t g = 0; g < genres.size(); ++g) {
            planted[s][g] = 1 + s + 2 * g;
            for (std::size_t k = 0; k < planted[s][g]; ++k, ++serial) {
                std::string im = "im" + std::to_string(serial);
                std::string au = "au" + std::to_string(serial);
                outcome.pairs.push_back({au, im, 0.5});
                image_meta.push_back({im, styles[s], std::nullopt, std::nullopt});
                audio_meta.push_back({au, std::nullopt, genres[g], std::nullopt});
            }
        }
    }
    outcome.pairs.push_back({"au_x", "im_x", 0.5});  // no metadata: missing
    auto table = co_occurrence(outcome, image_meta, audio_meta);
    bool co_ok = table.missing == 1;
    for (std::size_t s = 0; s < styles.size() && co_ok; ++s) {
        for (std::size_t g = 0; g < genres.size(); ++g) {
            if (table.at(styles[s], genres[g]) != planted[s][g]) co_ok = false;
        }
    }
    co_ok = co_ok && table.total() == std::size_t(serial);

    criterion(9, "reporting", summary_ok && bins_ok && co_ok);
}

// ---------- 10: binary container round-trip and malformation handling ----------

void raw_u16(std::string& out, std::uint16_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char(v >> 8));
}
void raw_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void raw_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void raw_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    raw_u32(out, bits);
}

std::string raw_file(const std::string& magic, std::uint16_t version, std::uint8_t source,
                     const std::vector<std::string>& ids, std::uint32_t dim,
                     const std::vector<float>& payload) {
    std::string out = magic;
    raw_u16(out, version);
    out.push_back(char(source));
    out.push_back(char(0));  // modality raw
    raw_u64(out, ids.size());
    raw_u32(out, dim);
    for (const auto& id : ids) {
        raw_u16(out, std::uint16_t(id.size()));
        out += id;
    }
    for (float v : payload) raw_f32(out, v);
    return out;
}

bool rejected_with(const std::string& path, ErrorCode code) {
    try {
        ingest(path);
    } catch (const XmfError& e) {
        return e.code() == code;
    } catch (...) {
        return false;
    }
    return false;
}

void criterion_roundtrip() {
    TempDir dir;
    std::mt19937_64 rng(0x10);
    bool roundtrip = true;
    for (int trial = 0; trial < 100 && roundtrip; ++trial) {
        std::uniform_int_distribution<std::size_t> count_dist(0, 20), dim_dist(1, 16);
        std::size_t count = count_dist(rng), dim = dim_dist(rng);
        std::uniform_real_distribution<double> uniform(-4.0, 4.0);
        std::vector<std::string> ids;
        std::vector<double> flat(count * dim);
        for (std::size_t i = 0; i < count; ++i) {
            ids.push_back((trial % 3 == 0 ? "véc-" : "v") + std::to_string(i));
            for (std::size_t j = 0; j < dim; ++j)
                flat[i * dim + j] = double(float(uniform(rng)));
        }
        EmbeddingSet set(std::move(ids), dim, std::move(flat),
                         trial % 2 ? Source::audio : Source::image, Modality::raw);
        auto first = dir.file("rt_a_" + std::to_string(trial) + ".xmeb");
        auto second = dir.file("rt_b_" + std::to_string(trial) + ".xmeb");
        write_xmeb(set, first);
        write_xmeb(ingest(first), second);
        if (xmf::test::read_file(first) != xmf::test::read_file(second)) roundtrip = false;
    }

    std::vector<float> one_row = {1.0f, 2.0f};
    struct Case {
        std::string bytes;
        ErrorCode code;
    };
    float nan = std::numeric_limits<float>::quiet_NaN();
    std::vector<Case> cases = {
        {raw_file("XMEA", 1, 0, {"a"}, 2, one_row), ErrorCode::malformed_header},
        {raw_file("XMEB", 2, 0, {"a"}, 2, one_row), ErrorCode::malformed_header},
        {raw_file("XMEB", 1, 7, {"a"}, 2, one_row), ErrorCode::malformed_header},
        {raw_file("XMEB", 1, 0, {"a", "b"}, 2, one_row), ErrorCode::dimension_mismatch},
        {raw_file("XMEB", 1, 0, {"a", "a"}, 2, {1, 2, 3, 4}), ErrorCode::duplicate_id},
        {raw_file("XMEB", 1, 0, {"a"}, 2, {1.0f, nan}), ErrorCode::non_finite_value},
    };
    bool malformed_ok = true;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        auto path = dir.file("bad_" + std::to_string(i) + ".xmeb");
        xmf::test::write_file(path, cases[i].bytes);
        if (!rejected_with(path, cases[i].code)) malformed_ok = false;
    }
    criterion(10, "container round-trip", roundtrip && malformed_ok);
}

}  // namespace

int main() {
    criterion_scores();
    criterion_oracle_equivalence();
    criterion_pairing_scale();
    criterion_fad();
    criterion_kl();
    criterion_diffusion();
    criterion_gradients();
    criterion_rouge();
    criterion_reporting();
    criterion_roundtrip();
    return g_failures;
}
