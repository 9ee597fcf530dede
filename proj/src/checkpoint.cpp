#include "moodreader/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace mr {

namespace {
constexpr char kMagic[4] = {'M', 'R', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("container: truncated file");
    return v;
}
}  // namespace

void save_container(const std::string& path, const std::map<std::string, Tensor>& entries) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("container: cannot open for write: " + path);
    os.write(kMagic, 4);
    write_pod<std::uint32_t>(os, kVersion);
    write_pod<std::uint64_t>(os, entries.size());
    for (const auto& [name, tensor] : entries) {
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(tensor.ndim()));
        for (std::size_t d : tensor.shape()) write_pod<std::uint64_t>(os, d);
        os.write(reinterpret_cast<const char*>(tensor.data().data()),
                 static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
    }
    if (!os) throw IoError("container: write failed: " + path);
}

std::map<std::string, Tensor> load_container(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("container: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("container: bad magic in " + path);
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kVersion)
        throw IoError("container: unsupported version " + std::to_string(version));
    const auto count = read_pod<std::uint64_t>(is);
    std::map<std::string, Tensor> out;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto ndim = read_pod<std::uint32_t>(is);
        std::vector<std::size_t> shape(ndim);
        std::size_t numel = 1;
        for (auto& d : shape) {
            d = static_cast<std::size_t>(read_pod<std::uint64_t>(is));
            numel *= d;
        }
        std::vector<double> data(numel);
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(numel * sizeof(double)));
        if (!is) throw IoError("container: truncated tensor '" + name + "'");
        out.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    return out;
}

std::map<std::string, Tensor> snapshot_params(const ParamStore& ps) {
    std::map<std::string, Tensor> out;
    for (const auto& p : ps.all()) out.emplace(p.name, p.node->value);
    return out;
}

void restore_params(ParamStore& ps, const std::map<std::string, Tensor>& entries) {
    for (auto& p : ps.all()) {
        auto it = entries.find(p.name);
        if (it == entries.end())
            throw IoError("checkpoint: missing parameter '" + p.name + "'");
        if (!(it->second.shape() == p.node->value.shape()))
            throw ShapeError("checkpoint: shape mismatch for '" + p.name + "': " +
                             it->second.shape_str() + " vs " + p.node->value.shape_str());
        p.node->value = it->second;
    }
}

}  // namespace mr
