#include "induction_lens/weights_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "induction_lens/errors.hpp"

namespace ilens {

namespace {

constexpr const char* kMagic = "induction-lens-archive 1";

std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    }
}

void write_floats(std::ostream& os, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(float)));
    } else {
        for (float f : values) {
            const std::uint32_t le = to_little_endian(std::bit_cast<std::uint32_t>(f));
            os.write(reinterpret_cast<const char*>(&le), sizeof le);
        }
    }
}

void read_floats(const char* src, std::span<float> dst) {
    std::memcpy(dst.data(), src, dst.size() * sizeof(float));
    if constexpr (std::endian::native != std::endian::little) {
        for (float& f : dst) f = std::bit_cast<float>(to_little_endian(std::bit_cast<std::uint32_t>(f)));
    }
}

bool valid_token(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c == ' ' || c == '\n' || c == '\r' || c == '\t') return false;
    }
    return true;
}

}  // namespace

const std::string* Archive::find_meta(const std::string& key) const {
    for (const auto& [k, v] : meta) {
        if (k == key) return &v;
    }
    return nullptr;
}

const TensorF32* Archive::find_tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return &t;
    }
    return nullptr;
}

void write_archive(const Archive& archive, const std::filesystem::path& path) {
    std::ostringstream manifest;
    manifest << kMagic << '\n' << "kind " << archive.kind << '\n';
    for (const auto& [k, v] : archive.meta) {
        if (!valid_token(k) || v.find('\n') != std::string::npos) {
            throw InputError("archive meta entry '" + k + "' is not representable");
        }
        manifest << "meta " << k << ' ' << v << '\n';
    }
    std::uint64_t offset = 0;
    for (const auto& [name, t] : archive.tensors) {
        if (!valid_token(name)) throw InputError("archive tensor name '" + name + "' is not representable");
        const std::uint64_t bytes = t.size() * sizeof(float);
        manifest << "tensor " << name << ' ' << t.rank();
        for (std::size_t dim : t.shape()) manifest << ' ' << dim;
        manifest << ' ' << offset << ' ' << bytes << '\n';
        offset += bytes;
    }
    manifest << "end\n";

    const std::filesystem::path tmp = path.string() + ".partial";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw InputError("cannot open '" + tmp.string() + "' for writing");
        const std::string m = manifest.str();
        os.write(m.data(), static_cast<std::streamsize>(m.size()));
        for (const auto& [name, t] : archive.tensors) write_floats(os, t.data());
        if (!os) throw InputError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

Archive read_archive(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open '" + path.string() + "'");
    const std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    std::size_t cursor = 0;
    auto next_line = [&]() -> std::string {
        const std::size_t nl = content.find('\n', cursor);
        if (nl == std::string::npos) throw CorruptionError(path.string() + ": manifest is not terminated");
        std::string line = content.substr(cursor, nl - cursor);
        cursor = nl + 1;
        return line;
    };

    if (next_line() != kMagic) throw CorruptionError(path.string() + ": not an induction-lens archive");
    Archive archive;
    struct Pending {
        std::string name;
        std::vector<std::size_t> shape;
        std::uint64_t offset, bytes;
    };
    std::vector<Pending> pending;
    for (;;) {
        const std::string line = next_line();
        if (line == "end") break;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "kind") {
            ls >> archive.kind;
        } else if (tag == "meta") {
            std::string key;
            ls >> key;
            std::string value;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            archive.meta.emplace_back(key, value);
        } else if (tag == "tensor") {
            Pending p;
            std::size_t rank = 0;
            ls >> p.name >> rank;
            if (!ls || rank > 8) throw CorruptionError(path.string() + ": bad tensor line '" + line + "'");
            p.shape.resize(rank);
            for (auto& dim : p.shape) ls >> dim;
            ls >> p.offset >> p.bytes;
            if (!ls) throw CorruptionError(path.string() + ": bad tensor line '" + line + "'");
            std::uint64_t count = 1;
            for (auto dim : p.shape) count *= dim;
            if (count * sizeof(float) != p.bytes) {
                throw CorruptionError(path.string() + ": tensor '" + p.name + "' byte length disagrees with shape");
            }
            pending.push_back(std::move(p));
        } else {
            throw CorruptionError(path.string() + ": unknown manifest line '" + line + "'");
        }
    }

    const std::uint64_t payload_size = content.size() - cursor;
    std::uint64_t expected = 0;
    for (const auto& p : pending) {
        if (p.offset != expected) {
            throw CorruptionError(path.string() + ": tensor '" + p.name + "' is not contiguous");
        }
        expected += p.bytes;
    }
    if (expected != payload_size) {
        throw CorruptionError(path.string() + ": payload has " + std::to_string(payload_size) +
                              " bytes, manifest lists " + std::to_string(expected));
    }
    for (const auto& p : pending) {
        TensorF32 t(p.shape);
        read_floats(content.data() + cursor + p.offset, t.data());
        archive.tensors.emplace_back(p.name, std::move(t));
    }
    return archive;
}

namespace {

std::size_t meta_size(const Archive& a, const std::string& key) {
    const std::string* v = a.find_meta(key);
    if (!v) throw CorruptionError("model archive lacks '" + key + "'");
    try {
        return static_cast<std::size_t>(std::stoull(*v));
    } catch (const std::exception&) {
        throw CorruptionError("model archive has non-numeric '" + key + "'");
    }
}

}  // namespace

ModelConfig config_from_meta(const Archive& archive) {
    ModelConfig c;
    c.n_layers = meta_size(archive, "n_layers");
    c.n_heads = meta_size(archive, "n_heads");
    c.d_model = meta_size(archive, "d_model");
    c.d_head = meta_size(archive, "d_head");
    c.vocab_size = meta_size(archive, "vocab_size");
    c.max_seq_len = meta_size(archive, "max_seq_len");
    const std::string* variant = archive.find_meta("variant");
    if (!variant) throw CorruptionError("model archive lacks 'variant'");
    try {
        c.variant = parse_variant(*variant);
        c.validate();
    } catch (const ConfigError& e) {
        throw CorruptionError(std::string("model archive has an invalid config: ") + e.what());
    }
    return c;
}

void save_weights(const ModelWeights& weights, const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, std::string>>& extra_meta) {
    const ModelConfig& c = weights.config();
    Archive a;
    a.kind = "model";
    a.meta = {{"n_layers", std::to_string(c.n_layers)},   {"n_heads", std::to_string(c.n_heads)},
              {"d_model", std::to_string(c.d_model)},     {"d_head", std::to_string(c.d_head)},
              {"vocab_size", std::to_string(c.vocab_size)}, {"max_seq_len", std::to_string(c.max_seq_len)},
              {"variant", to_string(c.variant)}};
    a.meta.insert(a.meta.end(), extra_meta.begin(), extra_meta.end());
    for (std::size_t i = 0; i < weights.layout().count(); ++i) {
        a.tensors.emplace_back(weights.layout().name(i), weights.tensor(i));
    }
    write_archive(a, path);
}

ModelWeights load_weights(const std::filesystem::path& path) {
    const Archive a = read_archive(path);
    if (a.kind != "model") throw CorruptionError(path.string() + ": archive kind is '" + a.kind + "', not model");
    ModelWeights w(config_from_meta(a));
    const ParamLayout& layout = w.layout();
    std::vector<bool> seen(layout.count(), false);
    for (const auto& [name, t] : a.tensors) {
        const auto idx = layout.find(name);
        if (!idx) throw CorruptionError(path.string() + ": unknown tensor '" + name + "'");
        if (t.shape() != layout.shape(*idx)) {
            throw CorruptionError(path.string() + ": tensor '" + name + "' has shape " + t.shape_string());
        }
        if (seen[*idx]) throw CorruptionError(path.string() + ": duplicate tensor '" + name + "'");
        seen[*idx] = true;
        w.tensor(*idx) = t;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) throw CorruptionError(path.string() + ": missing tensor '" + layout.name(i) + "'");
    }
    if (!w.all_finite()) throw CorruptionError(path.string() + ": non-finite weights");
    return w;
}

}  // namespace ilens
