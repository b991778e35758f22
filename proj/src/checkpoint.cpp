#include "qbrain/checkpoint.hpp"

#include <map>

#include "binary_io.hpp"
#include "qbrain/errors.hpp"

namespace qbrain {

namespace {

struct RawTensor {
    std::vector<std::uint32_t> dims;
    std::vector<double> data;
};

const RawTensor& lookup(const std::map<std::string, RawTensor>& tensors, const std::string& name,
                        std::vector<std::uint32_t> dims) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError("checkpoint is missing tensor '" + name + "'", 0);
    if (it->second.dims != dims) throw FormatError("checkpoint tensor '" + name + "' has unexpected shape", 0);
    return it->second;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
    detail::ByteWriter w;
    w.raw("QBCK");
    w.u32(kCheckpointVersion);
    std::vector<TensorView> views;
    for_each_tensor(const_cast<EncoderParams&>(ck.params), [&](const TensorView& t) { views.push_back(t); });
    w.u32(static_cast<std::uint32_t>(views.size()));
    for (const auto& t : views) {
        w.u32(static_cast<std::uint32_t>(t.name.size()));
        w.raw(t.name);
        w.u32(static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) w.u32(d);
        for (double v : t.values) w.f64(v);
    }
    w.u32(static_cast<std::uint32_t>(ck.config_echo.size()));
    w.raw(ck.config_echo);
    return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes);
    const std::string magic = r.raw(4, "magic");
    if (magic != "QBCK") throw FormatError("bad magic '" + magic + "', expected 'QBCK'", 0);
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);

    const std::uint32_t count = r.u32("tensor count");
    std::map<std::string, RawTensor> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32("tensor name length");
        std::string name = r.raw(name_len, "tensor name");
        const std::uint32_t rank = r.u32("tensor rank");
        if (rank > 2) throw FormatError("tensor '" + name + "' has unsupported rank", r.offset());
        RawTensor t;
        std::uint64_t elems = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            t.dims.push_back(r.u32("tensor dims"));
            elems *= t.dims.back();
        }
        r.need(static_cast<std::size_t>(elems * 8), "tensor data");
        t.data.resize(static_cast<std::size_t>(elems));
        for (double& v : t.data) v = r.f64("tensor data");
        if (!tensors.emplace(std::move(name), std::move(t)).second) {
            throw FormatError("duplicate tensor name", r.offset());
        }
    }
    const std::uint32_t echo_len = r.u32("config echo length");
    Checkpoint ck;
    ck.config_echo = r.raw(echo_len, "config echo");
    if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint", r.offset());

    const auto mean_it = tensors.find("input_mean");
    const auto bias_it = tensors.find("proj_bias");
    if (mean_it == tensors.end() || bias_it == tensors.end()) throw FormatError("checkpoint lacks encoder tensors", 0);
    const std::uint32_t c = mean_it->second.dims.at(0);
    const std::uint32_t d = bias_it->second.dims.at(0);
    std::size_t blocks = 0;
    while (tensors.count("block" + std::to_string(blocks) + ".theta0")) ++blocks;

    EncoderParams& p = ck.params;
    p.input_mean = lookup(tensors, "input_mean", {c}).data;
    p.input_std = lookup(tensors, "input_std", {c}).data;
    p.proj_bias = lookup(tensors, "proj_bias", {d}).data;
    p.proj_weight = Matrix(d, c, lookup(tensors, "proj_weight", {d, c}).data);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::string prefix = "block" + std::to_string(b) + ".";
        BlockParams blk;
        blk.theta0 = lookup(tensors, prefix + "theta0", {c}).data;
        blk.theta1 = lookup(tensors, prefix + "theta1", {c}).data;
        blk.w_prime = Matrix(c, c, lookup(tensors, prefix + "w_prime", {c, c}).data);
        blk.w_dprime = Matrix(c, c, lookup(tensors, prefix + "w_dprime", {c, c}).data);
        p.blocks.push_back(std::move(blk));
    }
    if (tensors.size() != 4 + 4 * blocks) throw FormatError("checkpoint holds unexpected tensors", 0);
    try {
        p.validate();
    } catch (const Error& e) {
        throw FormatError(std::string("invalid encoder parameters: ") + e.what(), 0);
    }
    return ck;
}

void write_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    detail::write_file(path, encode_checkpoint(ck));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(detail::read_file(path)); }

}  // namespace qbrain
