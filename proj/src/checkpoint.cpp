#include "charlead/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "charlead/errors.hpp"
#include "charlead/utf8.hpp"

namespace charlead {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint blob assumes a little-endian host");

namespace {
constexpr char kMagic[4] = {'C', 'L', 'R', 'S'};
}

ModelParams<float> Checkpoint::model() const {
    ModelParams<float> p;
    p.config = config;
    p.layout = ParamLayout::for_config(config);
    if (params.size() != p.layout.total)
        throw CorruptCheckpointError("tensor blob size mismatch");
    p.data = params;
    return p;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const ParamLayout layout = ParamLayout::for_config(ckpt.config);
    if (ckpt.params.size() != layout.total)
        throw std::invalid_argument("checkpoint params do not match config");
    if (static_cast<int32_t>(ckpt.vocab_chars.size()) + 2 !=
        ckpt.config.vocab_size)
        throw std::invalid_argument("checkpoint vocabulary does not match config");

    json manifest;
    manifest["format_version"] = Checkpoint::kFormatVersion;
    manifest["model"] = {{"vocab_size", ckpt.config.vocab_size},
                         {"num_layers", ckpt.config.num_layers},
                         {"hidden_units", ckpt.config.hidden_units},
                         {"dropout_rate", ckpt.config.dropout_rate},
                         {"embedding_dim", ckpt.config.embedding_dim}};
    json vocab = json::array();
    for (char32_t c : ckpt.vocab_chars) vocab.push_back(encode_utf8(c));
    manifest["vocab"] = std::move(vocab);
    json tensors = json::array();
    for (const TensorSpec& t : layout.tensors)
        tensors.push_back({{"name", t.name},
                           {"rows", t.rows},
                           {"cols", t.cols},
                           {"byte_offset", t.offset * sizeof(float)}});
    manifest["tensors"] = std::move(tensors);
    manifest["provenance"] = {{"config_hash", ckpt.provenance.config_hash},
                              {"epoch", ckpt.provenance.epoch},
                              {"rng_seed", ckpt.provenance.rng_seed}};

    const std::string text = manifest.dump();
    const uint64_t manifest_len = text.size();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(reinterpret_cast<const char*>(&manifest_len), sizeof(manifest_len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(ckpt.params.data()),
              static_cast<std::streamsize>(ckpt.params.size() * sizeof(float)));
    if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);

    uint64_t manifest_len = 0;
    in.read(reinterpret_cast<char*>(&manifest_len), sizeof(manifest_len));
    if (!in || manifest_len == 0 || manifest_len > (1ull << 30))
        throw CorruptCheckpointError("bad manifest length");
    std::string text(manifest_len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(manifest_len));
    if (!in) throw CorruptCheckpointError("truncated manifest");

    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::parse_error&) {
        throw CorruptCheckpointError("manifest is not valid JSON");
    }

    if (!manifest.contains("format_version") ||
        !manifest["format_version"].is_number_unsigned())
        throw CorruptCheckpointError("missing format_version");
    const uint32_t version = manifest["format_version"].get<uint32_t>();
    if (version != Checkpoint::kFormatVersion)
        throw UnsupportedVersionError("found version " + std::to_string(version));

    Checkpoint ckpt;
    try {
        const json& m = manifest.at("model");
        ckpt.config.vocab_size = m.at("vocab_size").get<int32_t>();
        ckpt.config.num_layers = m.at("num_layers").get<int32_t>();
        ckpt.config.hidden_units = m.at("hidden_units").get<int32_t>();
        ckpt.config.dropout_rate = m.at("dropout_rate").get<double>();
        ckpt.config.embedding_dim = m.at("embedding_dim").get<int32_t>();
        for (const json& c : manifest.at("vocab")) {
            const std::u32string cp = decode_utf8(c.get<std::string>());
            if (cp.size() != 1)
                throw CorruptCheckpointError("vocab entry is not one character");
            ckpt.vocab_chars.push_back(cp[0]);
        }
        const json& prov = manifest.at("provenance");
        ckpt.provenance.config_hash = prov.at("config_hash").get<uint64_t>();
        ckpt.provenance.epoch = prov.at("epoch").get<int32_t>();
        ckpt.provenance.rng_seed = prov.at("rng_seed").get<uint64_t>();
    } catch (const json::exception&) {
        throw CorruptCheckpointError("manifest missing required fields");
    }

    ParamLayout layout;
    try {
        layout = ParamLayout::for_config(ckpt.config);
    } catch (const ConfigError&) {
        throw CorruptCheckpointError("manifest config is invalid");
    }
    if (static_cast<int32_t>(ckpt.vocab_chars.size()) + 2 !=
        ckpt.config.vocab_size)
        throw CorruptCheckpointError("vocabulary size does not match config");

    // verify the manifest tensor table against the layout
    const json& tensors = manifest.at("tensors");
    if (tensors.size() != layout.tensors.size())
        throw CorruptCheckpointError("tensor table size mismatch");
    for (std::size_t i = 0; i < layout.tensors.size(); ++i) {
        const TensorSpec& spec = layout.tensors[i];
        const json& t = tensors[i];
        if (t.at("name").get<std::string>() != spec.name ||
            t.at("rows").get<std::size_t>() != spec.rows ||
            t.at("cols").get<std::size_t>() != spec.cols ||
            t.at("byte_offset").get<std::size_t>() !=
                spec.offset * sizeof(float))
            throw CorruptCheckpointError("tensor table mismatch at " + spec.name);
    }

    char magic[4] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CorruptCheckpointError("bad magic bytes");

    ckpt.params.resize(layout.total);
    in.read(reinterpret_cast<char*>(ckpt.params.data()),
            static_cast<std::streamsize>(layout.total * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != layout.total * sizeof(float))
        throw CorruptCheckpointError("truncated tensor blob");
    char extra;
    if (in.read(&extra, 1))
        throw CorruptCheckpointError("trailing bytes after tensor blob");
    return ckpt;
}

}  // namespace charlead
