#include "csgan/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace csgan {

namespace {

constexpr char kMagic[8] = {'C', 'S', 'G', 'A', 'N', '0', '0', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}
void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}
std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

struct Entry {
    std::string name;
    std::vector<int> shape;
    std::uint64_t offset;
};

std::vector<Entry> read_table(std::istream& is, const std::string& path) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw ConfigError("not a CSGAN001 checkpoint: " + path);
    const std::uint64_t count = get_u64(is);
    std::vector<Entry> entries(count);
    for (auto& e : entries) {
        const std::uint32_t name_len = get_u32(is);
        e.name.resize(name_len);
        is.read(e.name.data(), name_len);
        unsigned char dtype, rank;
        is.read(reinterpret_cast<char*>(&dtype), 1);
        is.read(reinterpret_cast<char*>(&rank), 1);
        if (dtype != 0) throw ConfigError("unsupported dtype in checkpoint: " + path);
        e.shape.resize(rank);
        for (int i = 0; i < rank; ++i) e.shape[i] = static_cast<int>(get_u64(is));
        e.offset = get_u64(is);
        if (!is) throw ConfigError("truncated checkpoint table: " + path);
    }
    return entries;
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 8);
    put_u64(os, params.size());
    // table offsets are relative to the start of the payload section
    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& name = params.names()[i];
        const auto& t = params.tensors()[i];
        put_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const unsigned char dtype = 0, rank = static_cast<unsigned char>(t->rank());
        os.write(reinterpret_cast<const char*>(&dtype), 1);
        os.write(reinterpret_cast<const char*>(&rank), 1);
        for (int d : t->shape) put_u64(os, static_cast<std::uint64_t>(d));
        put_u64(os, offset);
        offset += t->data.size() * sizeof(double);
    }
    for (const auto& t : params.tensors())
        os.write(reinterpret_cast<const char*>(t->data.data()),
                 static_cast<std::streamsize>(t->data.size() * sizeof(double)));
    if (!os) throw ConfigError("failed writing checkpoint: " + path);
}

ParamStore load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open checkpoint: " + path);
    auto entries = read_table(is, path);
    const std::streampos payload_start = is.tellg();
    ParamStore store;
    for (const auto& e : entries) {
        auto t = make_tensor(e.shape);
        is.seekg(payload_start + static_cast<std::streamoff>(e.offset));
        is.read(reinterpret_cast<char*>(t->data.data()),
                static_cast<std::streamsize>(t->data.size() * sizeof(double)));
        if (!is) throw ConfigError("truncated checkpoint payload: " + path);
        store.add(e.name, t);
    }
    return store;
}

void load_checkpoint_into(ParamStore& params, const std::string& path) {
    ParamStore loaded = load_checkpoint(path);
    if (loaded.size() != params.size())
        throw ConfigError("checkpoint parameter count mismatch: " + path);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        const auto& name = loaded.names()[i];
        const auto& src = loaded.tensors()[i];
        const auto& dst = params.get(name);
        if (dst->shape != src->shape)
            throw ConfigError("checkpoint shape mismatch for " + name + ": " + path);
        dst->data = src->data;
    }
}

}  // namespace csgan
