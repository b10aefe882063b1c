#include "textcascade/embeddings.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "textcascade/simd/kernels.hpp"

namespace textcascade {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos > start) fields.push_back(line.substr(start, pos - start));
    }
    return fields;
}

bool parse_double(std::string_view text, double& out) {
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
    throw FormatError("word vectors line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

WordVectorTable::WordVectorTable(std::size_t dim, bool fold_case)
    : dim_(dim), fold_case_(fold_case), zeros_(dim, 0.0) {
    if (dim == 0) {
        throw ContractViolation("word vector dimension must be positive");
    }
}

std::string WordVectorTable::normalize(std::string_view word) const {
    std::string key(word);
    if (fold_case_) {
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    return key;
}

WordVectorTable WordVectorTable::load(std::istream& in, const VectorLoadOptions& options) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string_view> header;
    while (header.empty()) {
        if (!std::getline(in, line)) {
            throw FormatError("word vectors: empty stream");
        }
        ++line_no;
        header = split_fields(line);
    }
    std::size_t declared_count = 0;
    std::size_t dim = 0;
    if (header.size() != 2 ||
        std::from_chars(header[0].data(), header[0].data() + header[0].size(), declared_count).ec !=
            std::errc() ||
        std::from_chars(header[1].data(), header[1].data() + header[1].size(), dim).ec != std::errc() ||
        dim == 0) {
        fail(line_no, "expected header '<count> <dim>'");
    }

    WordVectorTable table(dim, options.fold_case);
    table.index_.reserve(declared_count);
    table.storage_.reserve(declared_count * dim);
    std::vector<double> values(dim);
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != dim + 1) {
            fail(line_no, "expected " + std::to_string(dim) + " values, found " +
                              std::to_string(fields.size() - 1));
        }
        for (std::size_t i = 0; i < dim; ++i) {
            if (!parse_double(fields[i + 1], values[i])) {
                fail(line_no, "bad number '" + std::string(fields[i + 1]) + "'");
            }
        }
        table.insert(fields[0], values);
    }
    return table;
}

WordVectorTable WordVectorTable::load_file(const std::string& path, const VectorLoadOptions& options) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open word vectors file '" + path + "'");
    }
    return load(in, options);
}

void WordVectorTable::save(std::ostream& out) const {
    std::vector<const std::pair<const std::string, std::size_t>*> entries;
    entries.reserve(index_.size());
    for (const auto& entry : index_) entries.push_back(&entry);
    std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first < b->first; });

    out << index_.size() << ' ' << dim_ << '\n';
    std::array<char, 32> buffer{};
    for (const auto* entry : entries) {
        out << entry->first;
        const double* row = storage_.data() + entry->second * dim_;
        for (std::size_t i = 0; i < dim_; ++i) {
            auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), row[i]);
            out << ' ' << std::string_view(buffer.data(), static_cast<std::size_t>(ptr - buffer.data()));
        }
        out << '\n';
    }
}

void WordVectorTable::insert(std::string_view word, std::span<const double> vector) {
    if (vector.size() != dim_) {
        throw ContractViolation("word vector for '" + std::string(word) + "' has length " +
                                std::to_string(vector.size()) + ", table dim is " +
                                std::to_string(dim_));
    }
    auto key = normalize(word);
    auto it = index_.find(key);
    std::size_t slot = 0;
    if (it == index_.end()) {
        slot = index_.size();
        index_.emplace(std::move(key), slot);
        storage_.resize(storage_.size() + dim_);
    } else {
        slot = it->second;
    }
    std::copy(vector.begin(), vector.end(), storage_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
}

bool WordVectorTable::contains(std::string_view word) const {
    return index_.find(normalize(word)) != index_.end();
}

std::span<const double> WordVectorTable::lookup(std::string_view word) const {
    auto it = fold_case_ ? index_.find(normalize(word)) : index_.find(word);
    if (it == index_.end()) {
        return zeros_;
    }
    return {storage_.data() + it->second * dim_, dim_};
}

std::uint64_t WordVectorTable::digest() const {
    std::vector<const std::pair<const std::string, std::size_t>*> entries;
    entries.reserve(index_.size());
    for (const auto& entry : index_) entries.push_back(&entry);
    std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first < b->first; });
    Digest digest;
    digest.update_pod(dim_);
    digest.update_pod(fold_case_);
    for (const auto* entry : entries) {
        digest.update(entry->first);
        digest.update(storage_.data() + entry->second * dim_, dim_ * sizeof(double));
    }
    return digest.value();
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw ContractViolation("cosine of vectors with lengths " + std::to_string(u.size()) +
                                " and " + std::to_string(v.size()));
    }
    const double uu = simd::dot(u, u);
    const double vv = simd::dot(v, v);
    if (uu == 0.0 || vv == 0.0) {
        return 0.0;
    }
    const double value = simd::dot(u, v) / (std::sqrt(uu) * std::sqrt(vv));
    return std::clamp(value, -1.0, 1.0);
}

}  // namespace textcascade
