#include "qkws/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace qkws {

namespace {

constexpr char kMagic[8] = {'Q', 'K', 'W', 'S', 'M', 'D', 'L', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
    out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
    out.write(b, 4);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

double get_f64(std::istream& in) {
    return std::bit_cast<double>(get_u64(in));
}

[[noreturn]] void bad_container(const std::string& why) {
    throw FormatError("load_model: " + why);
}

} // namespace

void save_model(HybridModel& model, std::ostream& out) {
    nlohmann::ordered_json meta;
    meta["format_version"] = 1;
    meta["kind"] = to_string(model.kind);
    meta["n_classes"] = model.config.n_classes;
    meta["n_wires"] = model.config.n_wires;
    meta["n_layers"] = model.config.n_layers;
    meta["seed"] = model.seed;
    meta["trainable"]["cnn"] = model.cnn.trainable();
    if (model.qnn) {
        meta["trainable"]["compressor"] = model.qnn->compressor.weight.trainable;
        meta["trainable"]["vqc"] = model.qnn->vqc_trainable;
    } else {
        meta["trainable"]["head"] = model.dnn->layers[0].weight.trainable;
    }
    const std::string meta_text = meta.dump();

    out.write(kMagic, sizeof(kMagic));
    put_u64(out, meta_text.size());
    out.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));

    const auto refs = tensor_refs(model);
    put_u64(out, refs.size());
    for (const auto& ref : refs) {
        put_u32(out, static_cast<std::uint32_t>(ref.name.size()));
        out.write(ref.name.data(), static_cast<std::streamsize>(ref.name.size()));
        put_u32(out, static_cast<std::uint32_t>(ref.shape.size()));
        for (auto d : ref.shape) put_u64(out, d);
        for (std::size_t i = 0; i < ref.n; ++i) put_f64(out, ref.data[i]);
    }
}

void save_model(HybridModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("save_model: cannot open " + path.string());
    save_model(model, out);
    if (!out) throw FormatError("save_model: write failed for " + path.string());
}

HybridModel load_model(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        bad_container("bad magic; not a model container");
    }
    const std::uint64_t meta_len = get_u64(in);
    std::string meta_text(meta_len, '\0');
    in.read(meta_text.data(), static_cast<std::streamsize>(meta_len));
    if (!in) bad_container("truncated metadata");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_text);
    } catch (const nlohmann::json::exception& e) {
        bad_container(std::string("metadata parse error: ") + e.what());
    }
    if (meta.value("format_version", 0) != 1) {
        bad_container("unsupported format version");
    }

    ModelConfig config;
    config.n_classes = meta.at("n_classes").get<std::size_t>();
    config.n_wires = meta.at("n_wires").get<int>();
    config.n_layers = meta.at("n_layers").get<int>();
    const std::string kind_text = meta.at("kind").get<std::string>();
    const ModelKind kind =
        kind_text == "cnn_qnn" ? ModelKind::CnnQnn : ModelKind::CnnDnn;

    HybridModel model =
        build_model(kind, config, meta.at("seed").get<std::uint64_t>());
    const auto& trainable = meta.at("trainable");
    model.cnn.set_trainable(trainable.at("cnn").get<bool>());
    if (model.qnn) {
        const bool comp = trainable.at("compressor").get<bool>();
        model.qnn->compressor.weight.trainable = comp;
        model.qnn->compressor.bias.trainable = comp;
        model.qnn->vqc_trainable = trainable.at("vqc").get<bool>();
    } else {
        const bool head = trainable.at("head").get<bool>();
        for (auto& layer : model.dnn->layers) {
            layer.weight.trainable = head;
            layer.bias.trainable = head;
        }
    }

    auto refs = tensor_refs(model);
    std::map<std::string, TensorRef*> by_name;
    for (auto& ref : refs) by_name[ref.name] = &ref;

    const std::uint64_t n_tensors = get_u64(in);
    if (n_tensors != refs.size()) bad_container("tensor count mismatch");
    for (std::uint64_t t = 0; t < n_tensors; ++t) {
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t ndim = get_u32(in);
        std::vector<std::size_t> shape(ndim);
        std::size_t numel = 1;
        for (auto& d : shape) {
            d = get_u64(in);
            numel *= d;
        }
        auto it = by_name.find(name);
        if (it == by_name.end()) bad_container("unknown tensor " + name);
        if (it->second->shape != shape) bad_container("shape mismatch for " + name);
        for (std::size_t i = 0; i < numel; ++i) it->second->data[i] = get_f64(in);
        if (!in) bad_container("truncated blob for " + name);
    }
    return model;
}

HybridModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_model: cannot open " + path.string());
    return load_model(in);
}

} // namespace qkws
