#include "mammoth2/io/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "mammoth2/io/serial.hpp"

namespace m2::io {

namespace {

constexpr char kMagic[4] = {'M', '2', 'C', 'K'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kDtypeF64 = 1;

}  // namespace

uint64_t fnv1a(const std::string& text) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void save_checkpoint(const std::string& path, const ParamSet& ps, const CheckpointMeta& meta) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    M2_CHECK(os.is_open(), "cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_str(os, meta.stage);
    write_u64(os, meta.step);
    write_u64(os, meta.config_hash);
    write_u64(os, static_cast<uint64_t>(ps.count()));
    for (int i = 0; i < ps.count(); ++i) {
        const numerics::Array& a = ps.value(i);
        write_str(os, ps.name(i));
        write_u64(os, static_cast<uint64_t>(a.rank()));
        for (int d = 0; d < a.rank(); ++d) write_u64(os, static_cast<uint64_t>(a.dim(d)));
        write_u32(os, kDtypeF64);
        for (int64_t e = 0; e < a.size(); ++e) write_f64(os, static_cast<double>(a[e]));
    }
    os.flush();
    M2_CHECK(os.good(), "checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    M2_CHECK(is.is_open(), "cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    M2_CHECK(is.good() && std::equal(magic, magic + 4, kMagic), "not a checkpoint file: " + path);
    uint32_t version = read_u32(is);
    M2_CHECK(version == kVersion, "unsupported checkpoint version");
    Checkpoint ck;
    ck.meta.stage = read_str(is);
    ck.meta.step = read_u64(is);
    ck.meta.config_hash = read_u64(is);
    uint64_t count = read_u64(is);
    ck.entries.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        CheckpointEntry e;
        e.name = read_str(is);
        uint64_t ndim = read_u64(is);
        M2_CHECK(ndim <= 8, "checkpoint entry rank out of range");
        std::vector<int64_t> shape(ndim);
        for (auto& d : shape) d = static_cast<int64_t>(read_u64(is));
        uint32_t dtype = read_u32(is);
        M2_CHECK(dtype == kDtypeF64, "unsupported checkpoint dtype");
        numerics::Array a(shape);
        for (int64_t j = 0; j < a.size(); ++j) a[j] = static_cast<real>(read_f64(is));
        e.value = std::move(a);
        ck.entries.push_back(std::move(e));
    }
    return ck;
}

CheckpointMeta load_into(const std::string& path, ParamSet& ps) {
    Checkpoint ck = load_checkpoint(path);
    M2_CHECK(static_cast<int>(ck.entries.size()) == ps.count(),
             "checkpoint parameter count does not match the model");
    for (const CheckpointEntry& e : ck.entries) {
        int id = ps.find(e.name);
        M2_CHECK(id >= 0, "checkpoint has unknown parameter: " + e.name);
        M2_CHECK(ps.value(id).same_shape(e.value),
                 "checkpoint shape mismatch for parameter: " + e.name);
        ps.value(id) = e.value;
    }
    return ck.meta;
}

}  // namespace m2::io
