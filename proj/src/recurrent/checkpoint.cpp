#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "textcascade/recurrent.hpp"

namespace textcascade {
namespace {

constexpr char kMagic[8] = {'T', 'C', 'R', 'N', 'N', '\0', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t value) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw FormatError("checkpoint truncated");
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i) value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return value;
}

template <typename Params>
void put_matrices(std::ostream& out, const Params& p) {
    for (const Matrix* m : p.matrices()) {
        for (double x : m->data) put_u64(out, std::bit_cast<std::uint64_t>(x));
    }
}

template <typename Params>
void get_matrices(std::istream& in, Params& p) {
    for (Matrix* m : p.matrices()) {
        for (double& x : m->data) x = std::bit_cast<double>(get_u64(in));
    }
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
    const auto& model = checkpoint.model;
    if (!checkpoint.labels.empty() && checkpoint.labels.size() != class_count(model)) {
        throw ContractViolation("checkpoint labels do not match the model's class count");
    }
    out.write(kMagic, sizeof kMagic);
    put_u64(out, kVersion);
    put_u64(out, cell_kind(model) == CellKind::gru ? 0 : 1);
    put_u64(out, input_dim(model));
    put_u64(out, hidden_dim(model));
    put_u64(out, class_count(model));
    put_u64(out, checkpoint.seed);
    put_u64(out, checkpoint.labels.size());
    for (const auto& label : checkpoint.labels) {
        put_u64(out, label.size());
        out.write(label.data(), static_cast<std::streamsize>(label.size()));
    }
    std::visit([&](const auto& p) { put_matrices(out, p); }, model);
    if (!out) throw FormatError("failed writing checkpoint");
}

Checkpoint load_checkpoint(std::istream& in) {
    char magic[sizeof kMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw FormatError("not a recurrent model checkpoint");
    }
    if (get_u64(in) != kVersion) throw FormatError("unsupported checkpoint version");
    const auto cell = get_u64(in);
    if (cell > 1) throw FormatError("unknown cell kind in checkpoint");
    const auto d = get_u64(in);
    const auto h = get_u64(in);
    const auto c = get_u64(in);
    constexpr std::uint64_t kLimit = 1ULL << 32;
    if (d == 0 || h == 0 || c == 0 || d > kLimit || h > kLimit || c > kLimit) {
        throw FormatError("implausible checkpoint dimensions");
    }
    Checkpoint cp;
    cp.seed = get_u64(in);
    const auto label_count = get_u64(in);
    if (label_count != 0 && label_count != c) throw FormatError("checkpoint label count mismatch");
    cp.labels.reserve(label_count);
    for (std::uint64_t i = 0; i < label_count; ++i) {
        const auto len = get_u64(in);
        if (len > (1u << 20)) throw FormatError("implausible label length in checkpoint");
        std::string label(len, '\0');
        if (!in.read(label.data(), static_cast<std::streamsize>(len))) {
            throw FormatError("checkpoint truncated");
        }
        cp.labels.push_back(std::move(label));
    }
    if (cell == 0) {
        GruParams p(d, h, c);
        get_matrices(in, p);
        cp.model = std::move(p);
    } else {
        LstmParams p(d, h, c);
        get_matrices(in, p);
        cp.model = std::move(p);
    }
    return cp;
}

}  // namespace textcascade
