#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xmf/error.hpp"

namespace xmf {

enum class Source : uint8_t { image = 0, audio = 1 };
enum class Modality : uint8_t { raw = 0, caption = 1 };

const char* source_name(Source s);
const char* modality_name(Modality m);

struct ItemRef {
    std::string id;
    Source source;
    Modality modality;
};

// Immutable after construction; safe for concurrent readers.
// On-disk payload is float32; in-memory arithmetic is double.
class EmbeddingSet {
public:
    EmbeddingSet(std::vector<std::string> ids, std::size_t dim,
                 std::vector<double> rows, Source source, Modality modality,
                 bool normalized = false);

    std::size_t count() const { return ids_.size(); }
    std::size_t dim() const { return dim_; }
    Source source() const { return source_; }
    Modality modality() const { return modality_; }
    bool normalized() const { return normalized_; }

    const std::string& id(std::size_t i) const { return ids_[i]; }
    const std::vector<std::string>& ids() const { return ids_; }
    std::span<const double> row(std::size_t i) const {
        return {rows_.data() + i * dim_, dim_};
    }
    const std::vector<double>& data() const { return rows_; }

    // Index of id, or npos if absent.
    std::size_t index_of(const std::string& id) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<std::string> ids_;
    std::size_t dim_;
    std::vector<double> rows_;  // row-major count x dim
    Source source_;
    Modality modality_;
    bool normalized_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct ItemMetadata {
    std::string id;
    std::optional<std::string> style;
    std::optional<std::string> genre;
    std::optional<double> similarity_score;
};

// XMEB container: "XMEB" | version u16 LE (=1) | source u8 | modality u8 |
// count u64 LE | dim u32 LE | id table (u16 LE length, UTF-8 bytes)* |
// count x dim float32 LE row-major.
EmbeddingSet ingest(const std::string& path);
void write_xmeb(const EmbeddingSet& set, const std::string& path);

EmbeddingSet normalize(const EmbeddingSet& set);

std::vector<ItemMetadata> load_metadata(const std::string& path);

}  // namespace xmf
