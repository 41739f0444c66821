#include "enrollrec/container.hpp"

#include <bit>
#include <cstring>

#include "enrollrec/error.hpp"

namespace enrollrec {

namespace {

constexpr char kMagic[4] = {'E', 'N', 'R', 'C'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.put(static_cast<char>((value >> (8 * i)) & 0xFF));
    }
}

template <typename T>
T get_le(std::istream& in) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        int c = in.get();
        if (c == EOF) throw Error("truncated model container");
        value |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return value;
}

}  // namespace

const Tensor& ContainerContents::require(const std::string& name, std::size_t rows,
                                         std::size_t cols) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error("model container is missing tensor '" + name + "'");
    if (it->second.rows != rows || it->second.cols != cols) {
        throw Error("tensor '" + name + "' has shape " + std::to_string(it->second.rows) + "x" +
                    std::to_string(it->second.cols) + ", expected " + std::to_string(rows) + "x" +
                    std::to_string(cols));
    }
    return it->second;
}

void ContainerWriter::write(std::ostream& out) const {
    nlohmann::json manifest;
    manifest["kind"] = kind_;
    manifest["version"] = version_;
    manifest["meta"] = meta_;
    manifest["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : tensors_) {
        manifest["tensors"].push_back(
            {{"name", name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", offset}});
        offset += t.values.size() * sizeof(float);
    }
    std::string text = manifest.dump();

    out.write(kMagic, 4);
    put_le<std::uint32_t>(out, kFormatVersion);
    put_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : tensors_) {
        for (float v : t.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
    if (!out) throw Error("failed writing model container");
}

ContainerContents read_container(std::istream& in, const std::string& expected_kind) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw Error("not a model container (bad magic)");
    }
    auto format = get_le<std::uint32_t>(in);
    if (format != kFormatVersion) {
        throw Error("unsupported container format version " + std::to_string(format));
    }
    auto manifest_len = get_le<std::uint64_t>(in);
    std::string text(manifest_len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(manifest_len))) {
        throw Error("truncated model manifest");
    }
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("corrupt model manifest: ") + e.what());
    }

    ContainerContents contents;
    contents.kind = manifest.value("kind", "");
    if (contents.kind != expected_kind) {
        throw Error("model container holds '" + contents.kind + "', expected '" + expected_kind + "'");
    }
    contents.version = manifest.value("version", 0);
    contents.meta = manifest.value("meta", nlohmann::json::object());

    std::uint64_t expected_offset = 0;
    for (const auto& entry : manifest.at("tensors")) {
        Tensor t;
        t.rows = entry.at("rows").get<std::size_t>();
        t.cols = entry.at("cols").get<std::size_t>();
        if (entry.at("offset").get<std::uint64_t>() != expected_offset) {
            throw Error("manifest offset mismatch for tensor '" + entry.at("name").get<std::string>() + "'");
        }
        t.values.resize(t.rows * t.cols);
        for (auto& v : t.values) v = std::bit_cast<float>(get_le<std::uint32_t>(in));
        expected_offset += t.values.size() * sizeof(float);
        contents.tensors.emplace(entry.at("name").get<std::string>(), std::move(t));
    }
    if (in.peek() != EOF) throw Error("trailing bytes after tensor data");
    return contents;
}

}  // namespace enrollrec
