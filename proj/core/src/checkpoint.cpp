#include "echorec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "echorec/errors.hpp"

namespace echorec {

Checkpoint make_checkpoint(const EchoModel& model, std::map<std::string, std::string> metadata) {
    Checkpoint ckpt;
    ckpt.config = model.config();
    ckpt.params = model.flatten_params();
    ckpt.metadata = std::move(metadata);
    ckpt.metadata["model"] = ckpt.config.to_string();
    return ckpt;
}

EchoModel model_from_checkpoint(const Checkpoint& ckpt) {
    EchoModel model(ckpt.config, 0);
    model.load_params(ckpt.params);
    return model;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ostringstream meta;
    for (const auto& [k, v] : ckpt.metadata) meta << k << "=" << v << "\n";
    const std::string meta_text = meta.str();

    std::ofstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open for write: " + path);
    f.write("ECHC", 4);
    const uint32_t version = ckpt.version;
    const uint32_t meta_len = static_cast<uint32_t>(meta_text.size());
    const uint32_t n_params = static_cast<uint32_t>(ckpt.params.size());
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&meta_len), 4);
    f.write(reinterpret_cast<const char*>(&n_params), 4);
    f.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
    f.write(reinterpret_cast<const char*>(ckpt.params.data()),
            static_cast<std::streamsize>(ckpt.params.size() * sizeof(float)));
    if (!f) raise(ErrorCode::IoError, "short write: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "ECHC", 4) != 0)
        raise(ErrorCode::ParseError, path + ": bad checkpoint magic");
    uint32_t version = 0, meta_len = 0, n_params = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&meta_len), 4);
    f.read(reinterpret_cast<char*>(&n_params), 4);
    if (!f) raise(ErrorCode::ParseError, path + ": truncated header");
    if (version != kCheckpointVersion)
        raise(ErrorCode::UnsupportedVersion,
              path + ": unsupported checkpoint version " + std::to_string(version));

    Checkpoint ckpt;
    ckpt.version = version;
    std::string meta_text(meta_len, '\0');
    f.read(meta_text.data(), meta_len);
    if (!f) raise(ErrorCode::ParseError, path + ": truncated metadata");
    std::istringstream ms(meta_text);
    std::string line;
    while (std::getline(ms, line)) {
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(ErrorCode::ParseError, path + ": malformed metadata line");
        ckpt.metadata[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto it = ckpt.metadata.find("model");
    if (it == ckpt.metadata.end())
        raise(ErrorCode::ParseError, path + ": checkpoint metadata lacks model config");
    ckpt.config = ModelConfig::parse(it->second);

    ckpt.params.resize(n_params);
    f.read(reinterpret_cast<char*>(ckpt.params.data()),
           static_cast<std::streamsize>(n_params * sizeof(float)));
    if (!f) raise(ErrorCode::ParseError, path + ": truncated parameter payload");
    return ckpt;
}

}  // namespace echorec
