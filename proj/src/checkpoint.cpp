#include "gazekit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

namespace gazekit {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian");

namespace {

constexpr char kMagic[4] = {'G', 'Z', 'K', '1'};

void write_record(std::ofstream& out, const std::string& name, const Tensor& t) {
    const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
    out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    out.write(name.data(), name_len);
    const std::uint32_t rank = static_cast<std::uint32_t>(t.dims.size());
    out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
    for (std::size_t d : t.dims) {
        const std::uint64_t dim = d;
        out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    }
    out.write(reinterpret_cast<const char*>(t.v.data()),
              static_cast<std::streamsize>(t.v.size() * sizeof(double)));
}

Tensor scalar(double x) {
    Tensor t({1});
    t.v[0] = x;
    return t;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("save_checkpoint: cannot open " + tmp.string());
        }
        out.write(kMagic, sizeof(kMagic));
        write_record(out, "config/head_mode",
                     scalar(ckpt.params.spec.head_mode == HeadMode::encoded ? 0.0 : 1.0));
        write_record(out, "config/aggregation", scalar(static_cast<double>(ckpt.params.spec.aggregation)));
        if (!ckpt.crops.empty()) {
            Tensor crops({ckpt.crops.size()});
            for (std::size_t i = 0; i < ckpt.crops.size(); ++i) {
                crops.v[i] = ckpt.crops[i];
            }
            write_record(out, "config/crops", crops);
        }
        for (const auto& [name, tensor] : ckpt.params.named_tensors()) {
            write_record(out, name, *tensor);
        }
        if (!out) {
            throw std::runtime_error("save_checkpoint: write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    }
    char magic[4];
    in.read(magic, sizeof(magic));
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("load_checkpoint: bad magic in " + path.string());
    }

    std::map<std::string, Tensor> tensors;
    while (true) {
        std::uint32_t name_len = 0;
        in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
        if (in.gcount() == 0) {
            break;  // clean EOF
        }
        if (in.gcount() != sizeof(name_len) || name_len > 4096) {
            throw std::runtime_error("load_checkpoint: corrupt record in " + path.string());
        }
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        std::uint32_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), sizeof(rank));
        if (!in || rank > 8) {
            throw std::runtime_error("load_checkpoint: corrupt record in " + path.string());
        }
        std::vector<std::size_t> dims(rank);
        std::size_t count = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            std::uint64_t dim = 0;
            in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
            dims[i] = static_cast<std::size_t>(dim);
            count *= dims[i];
        }
        Tensor t(dims);
        in.read(reinterpret_cast<char*>(t.v.data()), static_cast<std::streamsize>(count * sizeof(double)));
        if (!in) {
            throw std::runtime_error("load_checkpoint: truncated tensor data in " + path.string());
        }
        tensors[name] = std::move(t);
    }

    auto require = [&](const std::string& name) -> Tensor& {
        auto it = tensors.find(name);
        if (it == tensors.end()) {
            throw std::runtime_error("load_checkpoint: missing tensor " + name + " in " + path.string());
        }
        return it->second;
    };

    ModelSpec spec;
    spec.head_mode = require("config/head_mode").v[0] == 0.0 ? HeadMode::encoded : HeadMode::raw;
    const int agg = static_cast<int>(require("config/aggregation").v[0]);
    if (agg < 0 || agg > 2) {
        throw std::runtime_error("load_checkpoint: bad aggregation code in " + path.string());
    }
    spec.aggregation = static_cast<Aggregation>(agg);

    Checkpoint ckpt;
    ckpt.params = BackboneParams::zeros(spec);
    for (auto& [name, tensor] : ckpt.params.named_tensors()) {
        Tensor& loaded = require(name);
        if (loaded.dims != tensor->dims) {
            throw std::runtime_error("load_checkpoint: shape mismatch for " + name + " in " + path.string());
        }
        *tensor = std::move(loaded);
    }
    if (auto it = tensors.find("config/crops"); it != tensors.end()) {
        for (double d : it->second.v) {
            ckpt.crops.push_back(static_cast<int>(d));
        }
    }
    return ckpt;
}

}  // namespace gazekit
