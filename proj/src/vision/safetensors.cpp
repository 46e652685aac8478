#include "screenrep/safetensors.hpp"

#include "screenrep/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

namespace screenrep {

std::size_t TensorInfo::numel() const {
    std::size_t n = 1;
    for (auto d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

float half_to_float(std::uint16_t h) {
    const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
    std::uint32_t exp = (h >> 10) & 0x1Fu;
    std::uint32_t mant = h & 0x3FFu;
    std::uint32_t bits;
    if (exp == 0) {
        if (mant == 0) {
            bits = sign;
        } else {
            // subnormal: renormalize
            exp = 127 - 15 + 1;
            while (!(mant & 0x400u)) {
                mant <<= 1;
                --exp;
            }
            bits = sign | (exp << 23) | ((mant & 0x3FFu) << 13);
        }
    } else if (exp == 0x1F) {
        bits = sign | 0x7F800000u | (mant << 13);
    } else {
        bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
    }
    return std::bit_cast<float>(bits);
}

float bf16_to_float(std::uint16_t h) { return std::bit_cast<float>(static_cast<std::uint32_t>(h) << 16); }

SafeTensors::SafeTensors(const std::filesystem::path& path) : path_(path) {
    const int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw ModelError("cannot open checkpoint " + path.string());
    struct stat st {};
    if (::fstat(fd, &st) != 0 || st.st_size < 8) {
        ::close(fd);
        throw ModelError(path.string() + ": not a safetensors file");
    }
    size_ = static_cast<std::size_t>(st.st_size);
    void* map = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd, 0);
    ::close(fd);
    if (map == MAP_FAILED) throw ModelError("cannot map " + path.string());
    base_ = static_cast<const std::uint8_t*>(map);

    try {
        std::uint64_t header_len = 0;
        for (int i = 0; i < 8; ++i) header_len |= static_cast<std::uint64_t>(base_[i]) << (8 * i);
        if (header_len > size_ - 8) throw ModelError(path.string() + ": header length exceeds the file");
        data_offset_ = 8 + static_cast<std::size_t>(header_len);
        const auto header = nlohmann::json::parse(reinterpret_cast<const char*>(base_) + 8,
                                                  reinterpret_cast<const char*>(base_) + data_offset_);
        for (const auto& [name, value] : header.items()) {
            if (name == "__metadata__") {
                for (const auto& [k, v] : value.items()) metadata_[k] = v.is_string() ? v.get<std::string>() : v.dump();
                continue;
            }
            TensorInfo t;
            t.dtype = value.at("dtype").get<std::string>();
            t.shape = value.at("shape").get<std::vector<std::int64_t>>();
            const auto offsets = value.at("data_offsets").get<std::vector<std::size_t>>();
            if (offsets.size() != 2 || offsets[0] > offsets[1] || data_offset_ + offsets[1] > size_) {
                throw ModelError(path.string() + ": bad data_offsets for " + name);
            }
            t.begin = offsets[0];
            t.end = offsets[1];
            tensors_.emplace(name, std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        ::munmap(const_cast<std::uint8_t*>(base_), size_);
        throw ModelError(path.string() + ": bad header: " + e.what());
    } catch (...) {
        ::munmap(const_cast<std::uint8_t*>(base_), size_);
        throw;
    }
}

SafeTensors::~SafeTensors() {
    if (base_) ::munmap(const_cast<std::uint8_t*>(base_), size_);
}

const TensorInfo& SafeTensors::info(const std::string& name) const {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ModelError(path_.string() + ": missing tensor " + name);
    return it->second;
}

std::vector<std::string> SafeTensors::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : tensors_) out.push_back(name);
    return out;
}

namespace {

std::string shape_string(const std::vector<std::int64_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
    return s + "]";
}

}  // namespace

std::vector<float> SafeTensors::load_f32(const std::string& name, const std::vector<std::int64_t>& expected) const {
    const TensorInfo& t = info(name);
    if (!expected.empty() && t.shape != expected) {
        // a scalar may be stored with shape [] or [1]
        const bool scalar_ok = expected == std::vector<std::int64_t>{1} && t.numel() == 1;
        if (!scalar_ok) {
            throw ModelError(path_.string() + ": tensor " + name + " has shape " + shape_string(t.shape) + ", expected " +
                             shape_string(expected));
        }
    }
    const std::size_t n = t.numel();
    std::size_t width = 0;
    if (t.dtype == "F32") {
        width = 4;
    } else if (t.dtype == "F16" || t.dtype == "BF16") {
        width = 2;
    } else {
        throw ModelError(path_.string() + ": tensor " + name + " has unsupported dtype " + t.dtype);
    }
    if (t.end - t.begin != n * width) throw ModelError(path_.string() + ": tensor " + name + " size does not match its shape");

    const std::uint8_t* p = base_ + data_offset_ + t.begin;
    std::vector<float> out(n);
    if (width == 4) {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t v = 0;
            for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[4 * i + b]) << (8 * b);
            out[i] = std::bit_cast<float>(v);
        }
    } else {
        const bool bf16 = t.dtype == "BF16";
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
            out[i] = bf16 ? bf16_to_float(v) : half_to_float(v);
        }
    }
    return out;
}

}  // namespace screenrep
