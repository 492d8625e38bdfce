#include <algorithm>
#include <any>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "xmf/capscore.hpp"
#include "xmf/corpus.hpp"
#include "xmf/diffusion.hpp"
#include "xmf/genmetrics.hpp"
#include "xmf/log.hpp"
#include "xmf/pairing.hpp"
#include "xmf/report.hpp"
#include "xmf/simkernel.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct RunConfig {
    std::string subcommand;
    std::vector<std::pair<std::string, std::string>> fields;

    void add(const std::string& key, const std::string& value) {
        fields.emplace_back(key, value);
    }
    template <typename T>
    void add_num(const std::string& key, T value) {
        std::ostringstream os;
        os << value;
        add(key, os.str());
    }

    std::string serialized() const {
        nlohmann::json j;
        j["subcommand"] = subcommand;
        for (const auto& [k, v] : fields) j[k] = v;
        return j.dump();
    }

    // "# xmf <version> config=<hash>" header for every output file
    std::string header_comment() const {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a(serialized())));
        return std::string("xmf ") + kVersion + " config=" + buf;
    }

    void write_alongside(const std::string& out_dir) const {
        std::ofstream out(out_dir + "/run_config.json", std::ios::trunc);
        out << serialized() << "\n";
    }
};

std::ofstream open_output(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw xmf::XmfError(xmf::ErrorCode::io_error, "cannot open " + path + " for writing");
    }
    out << "# " << cfg.header_comment() << "\n";
    return out;
}

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw xmf::XmfError(xmf::ErrorCode::io_error, "cannot create " + out_dir);
    }
}

std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    return buf;
}

void write_summary_row(std::ostream& out, const std::string& label,
                       const xmf::DistributionSummary& s) {
    out << label << ',' << fmt9(s.min) << ',' << fmt9(s.max) << ',' << fmt9(s.mean) << ','
        << fmt9(s.std_dev) << ',' << s.count << "\n";
}

// ---- pair ----

int cmd_pair(const std::string& audio_path, const std::string& image_path,
             const std::string& mode_name, bool oracle, const std::string& out_dir,
             unsigned threads, const std::string& std_denom) {
    RunConfig cfg;
    cfg.subcommand = "pair";
    cfg.add("audio", audio_path);
    cfg.add("images", image_path);
    cfg.add("mode", mode_name);
    cfg.add_num("threads", threads);
    cfg.add("oracle", oracle ? "true" : "false");
    cfg.add("std_denom", std_denom);

    xmf::PairingConfig pc;
    pc.mode = mode_name == "sequential_by_audio" ? xmf::PairingMode::sequential_by_audio
                                                 : xmf::PairingMode::global_greedy;
    xmf::EmbeddingSet audio = xmf::ingest(audio_path);
    xmf::EmbeddingSet images = xmf::ingest(image_path);
    xmf::PairingOutcome outcome = xmf::pair_greedy(audio, images, pc, threads);

    if (oracle) {
        xmf::PairingOutcome truth = xmf::pair_oracle(audio, images, pc);
        bool match = outcome.pairs == truth.pairs &&
                     outcome.unpaired_images == truth.unpaired_images;
        std::cout << "oracle: " << (match ? "MATCH" : "MISMATCH") << "\n";
        if (!match) return kExitNumerical;
    }

    ensure_out_dir(out_dir);
    cfg.write_alongside(out_dir);
    xmf::export_pairs(outcome, out_dir + "/pairs.csv", cfg.header_comment());

    std::vector<double> sims;
    sims.reserve(outcome.pairs.size());
    for (const auto& p : outcome.pairs) sims.push_back(p.similarity);
    auto summary = open_output(out_dir + "/summary.csv", cfg);
    summary << "approach,min,max,mean,std_dev,count\n";
    if (!sims.empty()) {
        auto denom = std_denom == "sample" ? xmf::StdDevDenominator::sample
                                           : xmf::StdDevDenominator::population;
        write_summary_row(summary, mode_name, xmf::summarize(sims, denom));
    }
    std::cout << "pairs=" << outcome.pairs.size()
              << " unpaired_images=" << outcome.unpaired_images.size() << "\n";
    return kExitOk;
}

// ---- score-captions ----

int cmd_score_captions(const std::string& captions_path, const std::string& out_dir,
                       double threshold, double gamma_ic, double alpha_ac, int max_attempts) {
    RunConfig cfg;
    cfg.subcommand = "score-captions";
    cfg.add("captions", captions_path);
    cfg.add_num("threshold", threshold);
    cfg.add_num("gamma_ic", gamma_ic);
    cfg.add_num("alpha_ac", alpha_ac);
    cfg.add_num("max_attempts", max_attempts);

    std::ifstream in(captions_path);
    if (!in) {
        throw xmf::XmfError(xmf::ErrorCode::io_error, "cannot open " + captions_path);
    }
    ensure_out_dir(out_dir);
    cfg.write_alongside(out_dir);
    std::ofstream decisions(out_dir + "/decisions.jsonl", std::ios::trunc);

    std::vector<xmf::CaptionRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw xmf::XmfError(xmf::ErrorCode::parse_error,
                                "line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!obj.contains("id") || !obj["id"].is_string()) {
            throw xmf::XmfError(xmf::ErrorCode::missing_id, "line " + std::to_string(lineno));
        }
        xmf::CaptionRecord rec;
        rec.id = obj["id"].get<std::string>();
        std::string kind = obj.value("kind", "image");
        rec.kind = kind == "audio" ? xmf::CaptionKind::audio : xmf::CaptionKind::image;
        rec.caption_text = obj.value("caption", "");
        rec.length_chars = rec.caption_text.size();
        rec.attempts = obj.value("attempts", 1);
        if (obj.contains("segments")) {
            for (const auto& s : obj["segments"]) {
                rec.segment_captions.push_back(s.get<std::string>());
            }
        }
        if (obj.contains("clip_score")) rec.components.clip_score = obj["clip_score"].get<double>();
        if (obj.contains("pac_score")) rec.components.pac_score = obj["pac_score"].get<double>();
        if (obj.contains("rouge1")) rec.components.rouge1 = obj["rouge1"].get<double>();
        if (obj.contains("bert_score")) rec.components.bert_score = obj["bert_score"].get<double>();

        if (rec.kind == xmf::CaptionKind::audio && !rec.components.rouge1 &&
            !rec.segment_captions.empty() && !rec.caption_text.empty()) {
            rec.components.rouge1 = xmf::rouge1(rec.segment_captions, rec.caption_text);
        }
        if (rec.kind == xmf::CaptionKind::image) {
            if (!rec.components.clip_score || !rec.components.pac_score) {
                throw xmf::XmfError(xmf::ErrorCode::parse_error,
                                    "line " + std::to_string(lineno) +
                                        ": image record requires clip_score and pac_score");
            }
            rec.composite = xmf::icscore(*rec.components.clip_score,
                                         *rec.components.pac_score, gamma_ic);
        } else {
            if (!rec.components.rouge1 || !rec.components.bert_score) {
                throw xmf::XmfError(xmf::ErrorCode::parse_error,
                                    "line " + std::to_string(lineno) +
                                        ": audio record requires rouge1 (or segments) and bert_score");
            }
            rec.composite = xmf::acscore(*rec.components.rouge1,
                                         *rec.components.bert_score, alpha_ac);
        }
        xmf::GateDecision decision = xmf::gate(rec, threshold, max_attempts);

        nlohmann::json out_obj = obj;
        out_obj["composite"] = rec.composite;
        out_obj["decision"] = xmf::gate_decision_name(decision);
        out_obj["attempts"] = rec.attempts;
        if (rec.components.rouge1) out_obj["rouge1"] = *rec.components.rouge1;
        decisions << out_obj.dump() << "\n";
        records.push_back(std::move(rec));
    }
    if (records.empty()) {
        throw xmf::XmfError(xmf::ErrorCode::empty_input, "no caption records in " + captions_path);
    }

    xmf::BatchStats stats = xmf::batch_stats(records, threshold);
    auto summary = open_output(out_dir + "/summary.csv", cfg);
    summary << "metric,min,avg,max,count\n";
    auto row = [&](const char* name, const xmf::FieldStats& f, std::size_t n) {
        if (n == 0) return;
        summary << name << ',' << fmt9(f.min) << ',' << fmt9(f.avg) << ',' << fmt9(f.max) << ','
                << n << "\n";
    };
    row("length_chars", stats.length_chars, stats.count);
    row("clip_score", stats.clip_score, stats.clip_count);
    row("pac_score", stats.pac_score, stats.pac_count);
    row("rouge1", stats.rouge1, stats.rouge1_count);
    row("bert_score", stats.bert_score, stats.bert_count);
    row("composite", stats.composite, stats.count);
    summary << "above_threshold,,,," << stats.above_threshold << "\n";
    summary << "below_threshold,,,," << stats.below_threshold << "\n";

    std::cout << "records=" << stats.count << " above=" << stats.above_threshold
              << " below=" << stats.below_threshold << "\n";
    return kExitOk;
}

// ---- eval ----

std::vector<double> load_prob_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw xmf::XmfError(xmf::ErrorCode::io_error, "cannot open " + path);
    }
    std::vector<double> values;
    double v;
    while (in >> v) values.push_back(v);
    return values;
}

int cmd_eval(const std::string& reference_path, const std::string& generated_path,
             const std::string& artwork_path, const std::string& gt_path,
             const std::string& prob_p_path, const std::string& prob_q_path,
             std::size_t kl_bins, const std::string& out_dir) {
    RunConfig cfg;
    cfg.subcommand = "eval";
    cfg.add("reference", reference_path);
    cfg.add("generated", generated_path);
    cfg.add("artwork", artwork_path);
    cfg.add("gt", gt_path);
    cfg.add_num("kl_bins", kl_bins);

    xmf::EmbeddingSet reference = xmf::ingest(reference_path);
    xmf::EmbeddingSet generated = xmf::ingest(generated_path);

    double fad_value = xmf::fad(xmf::fit_gaussian(reference), xmf::fit_gaussian(generated));

    double kl_value;
    if (!prob_p_path.empty() && !prob_q_path.empty()) {
        kl_value = xmf::kl_div({load_prob_vector(prob_p_path)}, {load_prob_vector(prob_q_path)});
    } else {
        // Histogram stand-in over coordinate 0, union range of both sets.
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < reference.count(); ++i) {
            lo = std::min(lo, reference.row(i)[0]);
            hi = std::max(hi, reference.row(i)[0]);
        }
        for (std::size_t i = 0; i < generated.count(); ++i) {
            lo = std::min(lo, generated.row(i)[0]);
            hi = std::max(hi, generated.row(i)[0]);
        }
        kl_value = xmf::kl_div(xmf::histogram_features(reference, kl_bins, 0, lo, hi),
                               xmf::histogram_features(generated, kl_bins, 0, lo, hi));
    }

    std::optional<xmf::EmbeddingSet> artwork, gt;
    if (!artwork_path.empty()) artwork = xmf::ingest(artwork_path);
    if (!gt_path.empty()) gt = xmf::ingest(gt_path);

    ensure_out_dir(out_dir);
    cfg.write_alongside(out_dir);
    auto report = open_output(out_dir + "/eval.csv", cfg);
    report << "pair_id,fad,kl_div,ibsc_artw_gen,ibsc_gt_gen\n";
    for (std::size_t i = 0; i < generated.count(); ++i) {
        const std::string& id = generated.id(i);
        std::string ibsc_art, ibsc_gt;
        if (artwork) {
            std::size_t j = artwork->index_of(id);
            if (j != xmf::EmbeddingSet::npos) {
                ibsc_art = fmt9(xmf::ibsc(artwork->row(j), generated.row(i)));
            }
        }
        if (gt) {
            std::size_t j = gt->index_of(id);
            if (j != xmf::EmbeddingSet::npos) {
                ibsc_gt = fmt9(xmf::ibsc(gt->row(j), generated.row(i)));
            }
        }
        report << id << ',' << fmt9(fad_value) << ',' << fmt9(kl_value) << ',' << ibsc_art << ','
               << ibsc_gt << "\n";
    }
    std::cout << "fad=" << fmt9(fad_value) << " kl_div=" << fmt9(kl_value) << "\n";
    return kExitOk;
}

// ---- diffusion-check ----

int cmd_diffusion_check(std::size_t timesteps, double beta_start, double beta_end,
                        double gamma_snr, uint64_t seed) {
    RunConfig cfg;
    cfg.subcommand = "diffusion-check";
    cfg.add_num("timesteps", timesteps);
    cfg.add_num("beta_start", beta_start);
    cfg.add_num("beta_end", beta_end);
    cfg.add_num("gamma_snr", gamma_snr);
    cfg.add_num("seed", seed);

    xmf::DiffusionSchedule sched = xmf::make_schedule(timesteps, beta_start, beta_end);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    bool all_pass = true;
    auto verdict = [&](const char* name, bool pass) {
        std::cout << name << ": " << (pass ? "PASS" : "FAIL") << "\n";
        all_pass = all_pass && pass;
    };

    // Forward/backward consistency with the oracle noise.
    bool consistency = true;
    for (int trial = 0; trial < 20 && consistency; ++trial) {
        Eigen::VectorXd z0(8), eps(8);
        for (int i = 0; i < 8; ++i) {
            z0[i] = normal(rng);
            eps[i] = normal(rng);
        }
        xmf::LatentState state = xmf::q_sample({z0, 0}, sched.T, eps, sched);
        while (state.t > 0) {
            if (!state.z.allFinite()) return kExitNumerical;
            state = xmf::ddim_step(state, eps, sched);
        }
        consistency = (state.z - z0).lpNorm<Eigen::Infinity>() < 1e-10;
    }
    verdict("forward_backward_consistency", consistency);

    bool weights_ok = true, snr_ok = true;
    for (std::size_t t = 1; t <= sched.T; ++t) {
        double w = xmf::min_snr_weight(t, sched, gamma_snr);
        double snr = sched.snr[t - 1];
        weights_ok = weights_ok && w == std::min(snr, gamma_snr) / snr && w <= 1.0;
        if (t > 1) snr_ok = snr_ok && sched.snr[t - 1] < sched.snr[t - 2];
    }
    verdict("min_snr_weight", weights_ok);
    verdict("snr_strictly_decreasing", snr_ok);

    // Aligner gradient vs central finite differences on a small toy.
    xmf::AlignerShape shape{4, 6, 3, 2};
    xmf::ToyAligner aligner = xmf::ToyAligner::seeded(shape, seed + 1, 0.1);
    xmf::ToyDenoiser denoiser = xmf::ToyDenoiser::seeded(5, shape.cond_dim(), seed + 2);
    std::vector<xmf::NoisedSample> batch;
    for (int s = 0; s < 3; ++s) {
        xmf::NoisedSample ns;
        ns.x = Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) { return normal(rng); });
        ns.z0 = Eigen::VectorXd::NullaryExpr(5, [&](Eigen::Index) { return normal(rng); });
        ns.eps = Eigen::VectorXd::NullaryExpr(5, [&](Eigen::Index) { return normal(rng); });
        ns.t = 1 + std::size_t(rng() % sched.T);
        batch.push_back(std::move(ns));
    }
    xmf::AlignerGradient grad =
        xmf::aligner_batch_gradient(aligner, denoiser, batch, sched, gamma_snr);
    const double h = 1e-5;
    double max_rel = 0.0;
    auto check_matrix = [&](Eigen::MatrixXd& w, const Eigen::MatrixXd& g) {
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                double saved = w(r, c);
                w(r, c) = saved + h;
                double up = xmf::aligner_batch_loss(aligner, denoiser, batch, sched, gamma_snr);
                w(r, c) = saved - h;
                double down = xmf::aligner_batch_loss(aligner, denoiser, batch, sched, gamma_snr);
                w(r, c) = saved;
                double fd = (up - down) / (2.0 * h);
                double denom = std::max({std::abs(fd), std::abs(g(r, c)), 1e-8});
                max_rel = std::max(max_rel, std::abs(fd - g(r, c)) / denom);
            }
        }
    };
    check_matrix(*aligner.w_up, *grad.w_up);
    check_matrix(aligner.w_proj, grad.w_proj);
    if (!std::isfinite(max_rel)) return kExitNumerical;
    verdict("aligner_gradient_check", max_rel < 1e-4);

    return all_pass ? kExitOk : 1;
}

// ---- report ----

std::vector<xmf::MatchedPair> read_pairs_csv(const std::string& path,
                                             std::string& mode_out) {
    std::ifstream in(path);
    if (!in) {
        throw xmf::XmfError(xmf::ErrorCode::io_error, "cannot open " + path);
    }
    std::vector<xmf::MatchedPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // "audio_id,image_id,similarity,mode"
            continue;
        }
        std::istringstream row(line);
        std::string audio_id, image_id, sim, mode;
        if (!std::getline(row, audio_id, ',') || !std::getline(row, image_id, ',') ||
            !std::getline(row, sim, ',')) {
            throw xmf::XmfError(xmf::ErrorCode::parse_error, "line " + std::to_string(lineno));
        }
        std::getline(row, mode, ',');
        if (!mode.empty()) mode_out = mode;
        try {
            pairs.push_back({audio_id, image_id, std::stod(sim)});
        } catch (const std::exception&) {
            throw xmf::XmfError(xmf::ErrorCode::parse_error,
                                "line " + std::to_string(lineno) + ": bad similarity");
        }
    }
    return pairs;
}

int cmd_report(const std::string& pairs_path, const std::string& image_meta_path,
               const std::string& audio_meta_path, const std::string& out_dir,
               const std::string& std_denom) {
    RunConfig cfg;
    cfg.subcommand = "report";
    cfg.add("pairs", pairs_path);
    cfg.add("image_meta", image_meta_path);
    cfg.add("audio_meta", audio_meta_path);
    cfg.add("std_denom", std_denom);

    std::string mode = "unknown";
    xmf::PairingOutcome outcome;
    outcome.pairs = read_pairs_csv(pairs_path, mode);
    if (mode == "sequential_by_audio") {
        outcome.config.mode = xmf::PairingMode::sequential_by_audio;
    }

    ensure_out_dir(out_dir);
    cfg.write_alongside(out_dir);

    std::vector<double> sims;
    sims.reserve(outcome.pairs.size());
    for (const auto& p : outcome.pairs) sims.push_back(p.similarity);

    auto summary = open_output(out_dir + "/summary.csv", cfg);
    summary << "approach,min,max,mean,std_dev,count\n";
    if (!sims.empty()) {
        auto denom = std_denom == "sample" ? xmf::StdDevDenominator::sample
                                           : xmf::StdDevDenominator::population;
        write_summary_row(summary, mode, xmf::summarize(sims, denom));
    }

    xmf::BinCounts bins = xmf::bin_similarities(sims);
    auto bins_out = open_output(out_dir + "/bins.csv", cfg);
    bins_out << "bin,count\n";
    bins_out << "low," << bins.low << "\n";
    bins_out << "medium," << bins.medium << "\n";
    bins_out << "high," << bins.high << "\n";

    if (!image_meta_path.empty() && !audio_meta_path.empty()) {
        xmf::CoOccurrence co = xmf::co_occurrence(outcome, xmf::load_metadata(image_meta_path),
                                                  xmf::load_metadata(audio_meta_path));
        auto co_out = open_output(out_dir + "/cooccurrence.csv", cfg);
        co_out << "style";
        for (const auto& g : co.genres) co_out << ',' << g;
        co_out << "\n";
        for (std::size_t r = 0; r < co.styles.size(); ++r) {
            co_out << co.styles[r];
            for (std::size_t c = 0; c < co.genres.size(); ++c) co_out << ',' << co.counts[r][c];
            co_out << "\n";
        }
        co_out << "#missing," << co.missing << "\n";
    }
    std::cout << "pairs=" << outcome.pairs.size() << " low=" << bins.low
              << " medium=" << bins.medium << " high=" << bins.high << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Artwork-music pairing and evaluation toolkit"};
    app.require_subcommand(1);

    // ingest
    std::string ingest_path;
    auto* ingest_cmd = app.add_subcommand("ingest", "Validate an XMEB embedding file");
    ingest_cmd->add_option("path", ingest_path, "XMEB file")->required();

    // pair
    std::string pair_audio, pair_images, pair_mode = "global_greedy", pair_out = "out";
    std::string pair_std = "population";
    bool pair_oracle_flag = false;
    unsigned threads = std::thread::hardware_concurrency();
    auto* pair_cmd = app.add_subcommand("pair", "Greedy one-to-one audio-image pairing");
    pair_cmd->add_option("--audio", pair_audio, "audio XMEB file")->required();
    pair_cmd->add_option("--images", pair_images, "image XMEB file")->required();
    pair_cmd->add_option("--mode", pair_mode, "global_greedy | sequential_by_audio")
        ->check(CLI::IsMember({"global_greedy", "sequential_by_audio"}));
    pair_cmd->add_flag("--oracle", pair_oracle_flag, "cross-check against the brute-force oracle");
    pair_cmd->add_option("--threads", threads, "worker threads");
    pair_cmd->add_option("--out-dir", pair_out, "output directory");
    pair_cmd->add_option("--std-denom", pair_std, "population | sample")
        ->check(CLI::IsMember({"population", "sample"}));

    // score-captions
    std::string cap_path, cap_out = "out";
    double threshold = 0.80, gamma_ic = 0.35, alpha_ac = 0.30;
    int max_attempts = 3;
    auto* cap_cmd = app.add_subcommand("score-captions", "Composite caption scoring and gating");
    cap_cmd->add_option("--captions", cap_path, "caption JSONL")->required();
    cap_cmd->add_option("--threshold", threshold, "acceptance threshold");
    cap_cmd->add_option("--gamma-ic", gamma_ic, "CLIP-Score weight");
    cap_cmd->add_option("--alpha-ac", alpha_ac, "ROUGE-1 weight");
    cap_cmd->add_option("--max-attempts", max_attempts, "regeneration budget");
    cap_cmd->add_option("--out-dir", cap_out, "output directory");

    // eval
    std::string eval_ref, eval_gen, eval_art, eval_gt, eval_p, eval_q, eval_out = "out";
    std::size_t kl_bins = 16;
    auto* eval_cmd = app.add_subcommand("eval", "FAD / KL-Div / IBSc evaluation report");
    eval_cmd->add_option("--reference", eval_ref, "reference embedding XMEB")->required();
    eval_cmd->add_option("--generated", eval_gen, "generated embedding XMEB")->required();
    eval_cmd->add_option("--artwork", eval_art, "artwork embeddings (IBSc, id-matched)");
    eval_cmd->add_option("--gt", eval_gt, "ground-truth audio embeddings (IBSc, id-matched)");
    eval_cmd->add_option("--prob-p", eval_p, "external probability vector P (whitespace floats)");
    eval_cmd->add_option("--prob-q", eval_q, "external probability vector Q");
    eval_cmd->add_option("--kl-bins", kl_bins, "histogram bins when P/Q not supplied");
    eval_cmd->add_option("--out-dir", eval_out, "output directory");

    // diffusion-check
    std::size_t timesteps = 1000;
    double beta_start = 1e-4, beta_end = 2e-2, gamma_snr = 5.0;
    uint64_t seed = 42;
    auto* diff_cmd = app.add_subcommand("diffusion-check", "Sampler and loss property suite");
    diff_cmd->add_option("--timesteps", timesteps, "schedule length T");
    diff_cmd->add_option("--beta-start", beta_start, "first beta");
    diff_cmd->add_option("--beta-end", beta_end, "last beta");
    diff_cmd->add_option("--gamma-snr", gamma_snr, "min-SNR clamp");
    diff_cmd->add_option("--seed", seed, "RNG seed");

    // report
    std::string rep_pairs, rep_imeta, rep_ameta, rep_out = "out", rep_std = "population";
    auto* rep_cmd = app.add_subcommand("report", "Similarity statistics and co-occurrence tables");
    rep_cmd->add_option("--pairs", rep_pairs, "pairs CSV from `pair`")->required();
    rep_cmd->add_option("--image-meta", rep_imeta, "image metadata JSONL");
    rep_cmd->add_option("--audio-meta", rep_ameta, "audio metadata JSONL");
    rep_cmd->add_option("--out-dir", rep_out, "output directory");
    rep_cmd->add_option("--std-denom", rep_std, "population | sample")
        ->check(CLI::IsMember({"population", "sample"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest_cmd) {
            xmf::EmbeddingSet set = xmf::ingest(ingest_path);
            std::cout << "count=" << set.count() << " dim=" << set.dim()
                      << " source=" << xmf::source_name(set.source())
                      << " modality=" << xmf::modality_name(set.modality()) << "\n";
            return kExitOk;
        }
        if (*pair_cmd) {
            return cmd_pair(pair_audio, pair_images, pair_mode, pair_oracle_flag, pair_out,
                            threads == 0 ? 1 : threads, pair_std);
        }
        if (*cap_cmd) {
            return cmd_score_captions(cap_path, cap_out, threshold, gamma_ic, alpha_ac,
                                      max_attempts);
        }
        if (*eval_cmd) {
            return cmd_eval(eval_ref, eval_gen, eval_art, eval_gt, eval_p, eval_q, kl_bins,
                            eval_out);
        }
        if (*diff_cmd) {
            return cmd_diffusion_check(timesteps, beta_start, beta_end, gamma_snr, seed);
        }
        if (*rep_cmd) {
            return cmd_report(rep_pairs, rep_imeta, rep_ameta, rep_out, rep_std);
        }
    } catch (const xmf::XmfError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == xmf::ErrorCode::non_finite_loss ? kExitNumerical : kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
