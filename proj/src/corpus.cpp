#include "xmf/corpus.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace xmf {
namespace {

constexpr char kMagic[4] = {'X', 'M', 'E', 'B'};
constexpr uint16_t kVersion = 1;

template <typename T>
T read_le(std::istream& in, const char* what) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
        throw XmfError(ErrorCode::malformed_header,
                       std::string("truncated while reading ") + what +
                           " at byte offset " + std::to_string(in.tellg() == -1 ? 0 : long(in.tellg())));
    }
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(buf[i]) << (8 * i);
    }
    return value;
}

template <typename T>
void write_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

}  // namespace

const char* source_name(Source s) { return s == Source::image ? "image" : "audio"; }
const char* modality_name(Modality m) { return m == Modality::raw ? "raw" : "caption"; }

EmbeddingSet::EmbeddingSet(std::vector<std::string> ids, std::size_t dim,
                           std::vector<double> rows, Source source,
                           Modality modality, bool normalized)
    : ids_(std::move(ids)),
      dim_(dim),
      rows_(std::move(rows)),
      source_(source),
      modality_(modality),
      normalized_(normalized) {
    if (dim_ == 0 || rows_.size() != ids_.size() * dim_) {
        throw XmfError(ErrorCode::dimension_mismatch,
                       "rows (" + std::to_string(rows_.size() / std::max<std::size_t>(dim_, 1)) +
                           ") do not match ids (" + std::to_string(ids_.size()) + ") x dim (" +
                           std::to_string(dim_) + ")");
    }
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (ids_[i].empty()) {
            throw XmfError(ErrorCode::missing_id, "empty id at record " + std::to_string(i));
        }
        if (!index_.emplace(ids_[i], i).second) {
            throw XmfError(ErrorCode::duplicate_id,
                           "id \"" + ids_[i] + "\" repeated at record " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (!std::isfinite(rows_[i])) {
            throw XmfError(ErrorCode::non_finite_value,
                           "record " + std::to_string(i / dim_) + ", component " +
                               std::to_string(i % dim_));
        }
    }
}

std::size_t EmbeddingSet::index_of(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? npos : it->second;
}

EmbeddingSet ingest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw XmfError(ErrorCode::io_error, "cannot open " + path);
    }
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw XmfError(ErrorCode::malformed_header, "bad magic at byte offset 0");
    }
    uint16_t version = read_le<uint16_t>(in, "version");
    if (version != kVersion) {
        throw XmfError(ErrorCode::malformed_header,
                       "unsupported version " + std::to_string(version) + " at byte offset 4");
    }
    uint8_t source_byte = read_le<uint8_t>(in, "source");
    if (source_byte > 1) {
        throw XmfError(ErrorCode::malformed_header,
                       "invalid source tag " + std::to_string(source_byte) + " at byte offset 6");
    }
    uint8_t modality_byte = read_le<uint8_t>(in, "modality");
    if (modality_byte > 1) {
        throw XmfError(ErrorCode::malformed_header,
                       "invalid modality tag " + std::to_string(modality_byte) + " at byte offset 7");
    }
    uint64_t count = read_le<uint64_t>(in, "count");
    uint32_t dim = read_le<uint32_t>(in, "dim");
    if (dim == 0) {
        throw XmfError(ErrorCode::malformed_header, "dim must be positive (byte offset 16)");
    }

    std::vector<std::string> ids;
    ids.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        uint16_t len = read_le<uint16_t>(in, "id length");
        std::string id(len, '\0');
        if (len > 0 && !in.read(id.data(), len)) {
            throw XmfError(ErrorCode::malformed_header,
                           "truncated id table at record " + std::to_string(i));
        }
        if (id.empty()) {
            throw XmfError(ErrorCode::malformed_header,
                           "empty id at record " + std::to_string(i));
        }
        ids.push_back(std::move(id));
    }

    std::vector<double> rows(count * dim);
    std::vector<float> buf(dim);
    for (uint64_t i = 0; i < count; ++i) {
        if (!in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(dim) * 4)) {
            throw XmfError(ErrorCode::dimension_mismatch,
                           "payload ends at record " + std::to_string(i) + " of " +
                               std::to_string(count));
        }
        for (uint32_t j = 0; j < dim; ++j) {
            uint32_t bits;
            std::memcpy(&bits, &buf[j], 4);
            if constexpr (std::endian::native == std::endian::big) {
                bits = __builtin_bswap32(bits);
                std::memcpy(&buf[j], &bits, 4);
            }
            rows[i * dim + j] = static_cast<double>(buf[j]);
        }
    }
    if (in.peek() != EOF) {
        throw XmfError(ErrorCode::dimension_mismatch,
                       "trailing bytes after declared payload of " + std::to_string(count) +
                           " records");
    }
    return EmbeddingSet(std::move(ids), dim, std::move(rows),
                        static_cast<Source>(source_byte),
                        static_cast<Modality>(modality_byte));
}

void write_xmeb(const EmbeddingSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw XmfError(ErrorCode::io_error, "cannot open " + path + " for writing");
    }
    out.write(kMagic, 4);
    write_le<uint16_t>(out, kVersion);
    write_le<uint8_t>(out, static_cast<uint8_t>(set.source()));
    write_le<uint8_t>(out, static_cast<uint8_t>(set.modality()));
    write_le<uint64_t>(out, set.count());
    write_le<uint32_t>(out, static_cast<uint32_t>(set.dim()));
    for (std::size_t i = 0; i < set.count(); ++i) {
        const std::string& id = set.id(i);
        write_le<uint16_t>(out, static_cast<uint16_t>(id.size()));
        out.write(id.data(), std::streamsize(id.size()));
    }
    for (std::size_t i = 0; i < set.count(); ++i) {
        for (double v : set.row(i)) {
            float f = static_cast<float>(v);
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            write_le<uint32_t>(out, bits);
        }
    }
    if (!out) {
        throw XmfError(ErrorCode::io_error, "write failed for " + path);
    }
}

EmbeddingSet normalize(const EmbeddingSet& set) {
    std::vector<double> rows(set.data());
    const std::size_t d = set.dim();
    for (std::size_t i = 0; i < set.count(); ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            sq += rows[i * d + j] * rows[i * d + j];
        }
        double norm = std::sqrt(sq);
        if (norm <= 1e-12) {
            throw XmfError(ErrorCode::zero_norm_row, "row " + std::to_string(i));
        }
        // Exact fixed point for rows already within 1e-9 of unit norm,
        // so normalize(normalize(S)) == normalize(S) bit for bit.
        if (std::abs(norm - 1.0) <= 1e-9) continue;
        for (std::size_t j = 0; j < d; ++j) {
            rows[i * d + j] /= norm;
        }
    }
    return EmbeddingSet(std::vector<std::string>(set.ids()), d, std::move(rows),
                        set.source(), set.modality(), /*normalized=*/true);
}

std::vector<ItemMetadata> load_metadata(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw XmfError(ErrorCode::io_error, "cannot open " + path);
    }
    std::vector<ItemMetadata> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw XmfError(ErrorCode::parse_error,
                           "line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!obj.contains("id") || !obj["id"].is_string()) {
            throw XmfError(ErrorCode::missing_id, "line " + std::to_string(lineno));
        }
        ItemMetadata meta;
        meta.id = obj["id"].get<std::string>();
        if (obj.contains("style") && obj["style"].is_string()) {
            meta.style = obj["style"].get<std::string>();
        }
        if (obj.contains("genre") && obj["genre"].is_string()) {
            meta.genre = obj["genre"].get<std::string>();
        }
        if (obj.contains("similarity_score") && obj["similarity_score"].is_number()) {
            meta.similarity_score = obj["similarity_score"].get<double>();
        }
        out.push_back(std::move(meta));
    }
    return out;
}

}  // namespace xmf
