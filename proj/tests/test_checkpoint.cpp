#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "charlead/checkpoint.hpp"
#include "charlead/errors.hpp"
#include "charlead/rng.hpp"

using namespace charlead;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("charlead_ckpt_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

Checkpoint sample_checkpoint(uint64_t seed) {
    Checkpoint ckpt;
    ckpt.config.vocab_size = 7;
    ckpt.config.num_layers = 2;
    ckpt.config.hidden_units = 3;
    ckpt.config.dropout_rate = 0.3;
    ckpt.vocab_chars = {U'a', U'b', U'c', U'é', U'!'};
    const ParamLayout layout = ParamLayout::for_config(ckpt.config);
    ckpt.params.resize(layout.total);
    RngStream rng(seed, "ckpt");
    for (float& v : ckpt.params) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    ckpt.provenance.config_hash = 0xfeedbeef;
    ckpt.provenance.epoch = 17;
    ckpt.provenance.rng_seed = seed;
    return ckpt;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_all(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out << bytes;
}

}  // namespace

TEST_CASE("checkpoints round-trip bitwise") {
    TempDir dir;
    const Checkpoint ckpt = sample_checkpoint(1);
    const std::string path = dir.file("model.bin");
    save_checkpoint(ckpt, path);
    const Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.params == ckpt.params);
    CHECK(loaded.vocab_chars == ckpt.vocab_chars);
    CHECK(loaded.config.vocab_size == ckpt.config.vocab_size);
    CHECK(loaded.config.num_layers == ckpt.config.num_layers);
    CHECK(loaded.config.hidden_units == ckpt.config.hidden_units);
    CHECK(loaded.config.dropout_rate == ckpt.config.dropout_rate);
    CHECK(loaded.provenance.config_hash == ckpt.provenance.config_hash);
    CHECK(loaded.provenance.epoch == ckpt.provenance.epoch);
    CHECK(loaded.provenance.rng_seed == ckpt.provenance.rng_seed);

    // two saves of the same state produce identical bytes
    const std::string path2 = dir.file("model2.bin");
    save_checkpoint(ckpt, path2);
    CHECK(read_all(path) == read_all(path2));
}

TEST_CASE("vocabulary rebuilds from the manifest") {
    TempDir dir;
    const Checkpoint ckpt = sample_checkpoint(2);
    save_checkpoint(ckpt, dir.file("m.bin"));
    const Checkpoint loaded = load_checkpoint(dir.file("m.bin"));
    const CharVocab vocab = loaded.vocab();
    CHECK(vocab.size() == 7);
    CHECK(vocab.index_of(U'a') == 2);
    CHECK(vocab.index_of(U'é') == 5);
}

TEST_CASE("truncated checkpoints are rejected as corrupt") {
    TempDir dir;
    const Checkpoint ckpt = sample_checkpoint(3);
    const std::string path = dir.file("m.bin");
    save_checkpoint(ckpt, path);
    const std::string bytes = read_all(path);

    for (std::size_t cut : {bytes.size() - 1, bytes.size() - 17,
                            bytes.size() / 2, std::size_t{4}}) {
        const std::string trunc_path = dir.file("trunc.bin");
        write_all(trunc_path, bytes.substr(0, cut));
        CHECK_THROWS_AS(load_checkpoint(trunc_path), CorruptCheckpointError);
    }
}

TEST_CASE("corrupt magic bytes are rejected") {
    TempDir dir;
    const Checkpoint ckpt = sample_checkpoint(4);
    const std::string path = dir.file("m.bin");
    save_checkpoint(ckpt, path);
    std::string bytes = read_all(path);
    const std::size_t magic_at = bytes.find("CLRS");
    REQUIRE(magic_at != std::string::npos);
    bytes[magic_at] = 'X';
    write_all(path, bytes);
    CHECK_THROWS_AS(load_checkpoint(path), CorruptCheckpointError);
}

TEST_CASE("a bumped format version is rejected distinctly") {
    TempDir dir;
    const Checkpoint ckpt = sample_checkpoint(5);
    const std::string path = dir.file("m.bin");
    save_checkpoint(ckpt, path);
    std::string bytes = read_all(path);

    // rewrite the manifest with a bumped version, keeping lengths straight
    uint64_t manifest_len = 0;
    std::memcpy(&manifest_len, bytes.data(), sizeof(manifest_len));
    nlohmann::json manifest =
        nlohmann::json::parse(bytes.substr(8, manifest_len));
    manifest["format_version"] = Checkpoint::kFormatVersion + 1;
    const std::string new_manifest = manifest.dump();
    const uint64_t new_len = new_manifest.size();
    std::string rebuilt(reinterpret_cast<const char*>(&new_len), 8);
    rebuilt += new_manifest;
    rebuilt += bytes.substr(8 + manifest_len);
    write_all(path, rebuilt);

    CHECK_THROWS_AS(load_checkpoint(path), UnsupportedVersionError);
    try {
        load_checkpoint(path);
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("unsupported checkpoint version") !=
              std::string::npos);
    }
}

TEST_CASE("trailing garbage is rejected") {
    TempDir dir;
    const Checkpoint ckpt = sample_checkpoint(6);
    const std::string path = dir.file("m.bin");
    save_checkpoint(ckpt, path);
    write_all(path, read_all(path) + "junk");
    CHECK_THROWS_AS(load_checkpoint(path), CorruptCheckpointError);
}

TEST_CASE("missing files and non-checkpoint files fail cleanly") {
    TempDir dir;
    CHECK_THROWS_AS(load_checkpoint(dir.file("nope.bin")), DataError);
    write_all(dir.file("text.bin"), "definitely not a checkpoint");
    CHECK_THROWS_AS(load_checkpoint(dir.file("text.bin")),
                    CorruptCheckpointError);
}
