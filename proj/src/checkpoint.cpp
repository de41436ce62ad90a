#include "checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "errors.hpp"

namespace adaf2m2 {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'a', 'd', 'a', 'f', '2', 'm', '2', '\n'};
constexpr std::uint32_t kVersion = 1;
// Written raw; reading it back scrambled means the file crossed a byte-order
// boundary, which this format does not support.
constexpr std::uint32_t kOrderProbe = 0x02468aceu;

template <typename T>
void put(std::ostream& os, const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& is, const char* what) {
    static_assert(std::is_trivially_copyable_v<T>);
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw IoError(std::string("checkpoint truncated reading ") + what);
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<std::uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& is, const char* what) {
    const auto n = take<std::uint64_t>(is, what);
    if (n > (1u << 30)) throw IoError(std::string("checkpoint field too large: ") + what);
    std::string s(static_cast<std::size_t>(n), '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw IoError(std::string("checkpoint truncated reading ") + what);
    return s;
}

// Reads magic, version, probe, and the meta block; leaves the stream at the
// parameter directory and fills everything but param_ids.
CheckpointInfo read_header(std::istream& is, const std::string& path) {
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw IoError("not a checkpoint file: " + path);
    const auto version = take<std::uint32_t>(is, "version");
    if (version != kVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
    if (take<std::uint32_t>(is, "byte-order probe") != kOrderProbe)
        throw IoError("checkpoint byte order does not match this platform: " + path);

    json meta;
    try {
        meta = json::parse(take_string(is, "meta"));
    } catch (const json::exception& e) {
        throw IoError("checkpoint meta is not valid JSON: " + std::string(e.what()));
    }
    CheckpointInfo info;
    try {
        info.schema_fingerprint = meta.at("schema_fingerprint").get<std::string>();
        info.model_kind = model_kind_from(meta.at("model_kind").get<std::string>());
        info.ablation = ablation_from(meta.at("ablation").get<std::string>());
        info.dim = meta.at("dim").get<int>();
        info.extra = meta.at("extra").dump();
    } catch (const json::exception& e) {
        throw IoError("checkpoint meta is missing fields: " + std::string(e.what()));
    }
    return info;
}

struct StoredParam {
    std::string id;
    int rows = 0;
    int cols = 0;
};

StoredParam take_param_header(std::istream& is) {
    StoredParam p;
    p.id = take_string(is, "parameter id");
    p.rows = static_cast<int>(take<std::uint64_t>(is, "parameter rows"));
    p.cols = static_cast<int>(take<std::uint64_t>(is, "parameter cols"));
    if (p.rows < 0 || p.cols < 0 || (p.rows > 0 && p.cols > (1 << 26) / p.rows))
        throw IoError("checkpoint parameter '" + p.id + "' has an implausible shape");
    return p;
}

} // namespace

void save_checkpoint(const std::string& path, ModelBundle& bundle,
                     const std::string& extra_json) {
    json extra;
    try {
        extra = json::parse(extra_json);
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint extra payload must be valid JSON: " + std::string(e.what()));
    }
    const json meta = {
        {"schema_fingerprint", bundle.schema().fingerprint()},
        {"model_kind", to_string(bundle.config().model.kind)},
        {"ablation", to_string(bundle.config().ablation)},
        {"dim", bundle.dim()},
        {"extra", extra},
    };

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint: " + path);
    os.write(kMagic, sizeof kMagic);
    put(os, kVersion);
    put(os, kOrderProbe);
    put_string(os, meta.dump());

    const auto params = bundle.parameters();
    put<std::uint64_t>(os, params.size());
    for (const Parameter* p : params) {
        put_string(os, p->id);
        put<std::uint64_t>(os, static_cast<std::uint64_t>(p->value.rows()));
        put<std::uint64_t>(os, static_cast<std::uint64_t>(p->value.cols()));
        os.write(reinterpret_cast<const char*>(p->value.data()),
                 static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    }
    os.flush();
    if (!os) throw IoError("write failed for checkpoint: " + path);
}

std::string load_checkpoint(const std::string& path, ModelBundle& bundle) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    const CheckpointInfo info = read_header(is, path);

    if (info.schema_fingerprint != bundle.schema().fingerprint())
        throw IoError("checkpoint schema fingerprint " + info.schema_fingerprint +
                      " does not match the configured schema " + bundle.schema().fingerprint());
    if (info.model_kind != bundle.config().model.kind)
        throw IoError(std::string("checkpoint model kind ") + to_string(info.model_kind) +
                      " does not match the configured " + to_string(bundle.config().model.kind));
    if (info.ablation != bundle.config().ablation)
        throw IoError(std::string("checkpoint ablation ") + to_string(info.ablation) +
                      " does not match the configured " + to_string(bundle.config().ablation));
    if (info.dim != bundle.dim())
        throw IoError("checkpoint embedding width " + std::to_string(info.dim) +
                      " does not match the configured " + std::to_string(bundle.dim()));

    const auto params = bundle.parameters();
    std::unordered_map<std::string, Parameter*> by_id;
    for (Parameter* p : params) by_id.emplace(p->id, p);

    const auto count = take<std::uint64_t>(is, "parameter count");
    if (count != params.size())
        throw IoError("checkpoint holds " + std::to_string(count) + " parameters, bundle expects " +
                      std::to_string(params.size()));

    // Two passes: verify the full directory against the bundle, then load.
    // Nothing is written into the bundle until the file proves compatible.
    const auto dir_pos = is.tellg();
    std::unordered_set<std::string> seen;
    for (std::uint64_t i = 0; i < count; ++i) {
        const StoredParam sp = take_param_header(is);
        if (!seen.insert(sp.id).second)
            throw IoError("checkpoint stores parameter '" + sp.id + "' twice");
        const auto it = by_id.find(sp.id);
        if (it == by_id.end())
            throw IoError("checkpoint parameter '" + sp.id + "' does not exist in the bundle");
        const Matrix& value = it->second->value;
        if (sp.rows != value.rows() || sp.cols != value.cols())
            throw IoError("checkpoint parameter '" + sp.id + "' has shape " +
                          std::to_string(sp.rows) + "x" + std::to_string(sp.cols) +
                          ", bundle expects " + value.shape_str());
        is.seekg(static_cast<std::streamoff>(sizeof(double)) * sp.rows * sp.cols, std::ios::cur);
        if (!is) throw IoError("checkpoint truncated in parameter '" + sp.id + "'");
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw IoError("checkpoint has trailing bytes: " + path);

    is.clear();
    is.seekg(dir_pos);
    for (std::uint64_t i = 0; i < count; ++i) {
        const StoredParam sp = take_param_header(is);
        Matrix& value = by_id.at(sp.id)->value;
        is.read(reinterpret_cast<char*>(value.data()),
                static_cast<std::streamsize>(value.size() * sizeof(double)));
        if (!is) throw IoError("checkpoint truncated in parameter '" + sp.id + "'");
    }
    return info.extra;
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    CheckpointInfo info = read_header(is, path);
    const auto count = take<std::uint64_t>(is, "parameter count");
    info.param_ids.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
        const StoredParam sp = take_param_header(is);
        info.param_ids.push_back(sp.id);
        is.seekg(static_cast<std::streamoff>(sizeof(double)) * sp.rows * sp.cols, std::ios::cur);
        if (!is) throw IoError("checkpoint truncated in parameter '" + sp.id + "'");
    }
    return info;
}

} // namespace adaf2m2
