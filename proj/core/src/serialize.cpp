#include "ccsp/serialize.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "ccsp/image_io.hpp"

namespace ccsp {

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file_bytes(path)); }

namespace {

constexpr char kMagic[8] = {'C', 'C', 'S', 'P', 'P', 'A', 'R', '1'};

template <typename T>
void put(std::string& out, const T& v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(const std::string& in, size_t& off) {
    if (off + sizeof(T) > in.size()) throw InputError("parameter blob truncated");
    T v;
    std::memcpy(&v, in.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

}  // namespace

std::string encode_tensors(const NamedTensors& tensors) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put<uint64_t>(out, tensors.size());
    for (const auto& [name, t] : tensors) {
        put<uint32_t>(out, static_cast<uint32_t>(name.size()));
        out.append(name);
        put<uint32_t>(out, static_cast<uint32_t>(t.rank()));
        for (int i = 0; i < t.rank(); ++i) put<int64_t>(out, t.dim(i));
        out.append(reinterpret_cast<const char*>(t.data()),
                   sizeof(double) * static_cast<size_t>(t.numel()));
    }
    return out;
}

NamedTensors parse_param_blob(const std::string& blob) {
    if (blob.size() < sizeof(kMagic) || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
        throw InputError("parameter blob: bad magic");
    }
    size_t off = sizeof(kMagic);
    const uint64_t count = take<uint64_t>(blob, off);
    NamedTensors out;
    out.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t name_len = take<uint32_t>(blob, off);
        if (off + name_len > blob.size()) throw InputError("parameter blob truncated");
        std::string name(blob.data() + off, name_len);
        off += name_len;
        const uint32_t rank = take<uint32_t>(blob, off);
        Shape shape(rank);
        for (uint32_t d = 0; d < rank; ++d) shape[d] = take<int64_t>(blob, off);
        Tensor t(shape);
        const size_t bytes = sizeof(double) * static_cast<size_t>(t.numel());
        if (off + bytes > blob.size()) throw InputError("parameter blob truncated");
        std::memcpy(t.data(), blob.data() + off, bytes);
        off += bytes;
        out.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

std::string encode_params(const ParamMap& params) {
    NamedTensors tensors;
    tensors.reserve(params.size());
    for (const auto& [name, v] : params) tensors.emplace_back(name, v.value());
    return encode_tensors(tensors);
}

void decode_params(const std::string& blob, ParamMap& params) {
    NamedTensors stored = parse_param_blob(blob);
    if (stored.size() != params.size()) {
        throw InputError("parameter blob holds " + std::to_string(stored.size()) +
                         " tensors, model has " + std::to_string(params.size()));
    }
    for (size_t i = 0; i < params.size(); ++i) {
        auto& [name, v] = params[i];
        auto& [stored_name, t] = stored[i];
        if (stored_name != name) {
            throw InputError("parameter blob mismatch: expected '" + name + "', found '" +
                             stored_name + "'");
        }
        if (t.shape() != v.value().shape()) {
            throw InputError("parameter '" + name + "' shape mismatch: blob " +
                             shape_str(t.shape()) + " vs model " + shape_str(v.value().shape()));
        }
        v.value() = std::move(t);
    }
}

void save_params(const ParamMap& params, const std::string& path) {
    write_file_bytes(path, encode_params(params));
}

void load_params(ParamMap& params, const std::string& path) {
    decode_params(read_file_bytes(path), params);
}

}  // namespace ccsp
