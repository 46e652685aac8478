#pragma once

// Read-only, memory-mapped safetensors file. Floating tensors in F32, F16 or
// BF16 are converted to float32 on request.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace screenrep {

struct TensorInfo {
    std::string dtype;
    std::vector<std::int64_t> shape;
    std::size_t begin = 0;  // byte offsets into the data section
    std::size_t end = 0;

    std::size_t numel() const;
};

class SafeTensors {
public:
    /// Throws ModelError when the file is missing or its header is malformed.
    explicit SafeTensors(const std::filesystem::path& path);
    ~SafeTensors();
    SafeTensors(const SafeTensors&) = delete;
    SafeTensors& operator=(const SafeTensors&) = delete;

    const std::filesystem::path& path() const { return path_; }
    bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
    const TensorInfo& info(const std::string& name) const;
    std::vector<std::string> names() const;
    const std::map<std::string, std::string>& metadata() const { return metadata_; }

    /// Throws ModelError when the tensor is missing, not floating point, or
    /// its shape differs from `expected_shape` (if given).
    std::vector<float> load_f32(const std::string& name, const std::vector<std::int64_t>& expected_shape = {}) const;

private:
    std::filesystem::path path_;
    const std::uint8_t* base_ = nullptr;
    std::size_t size_ = 0;
    std::size_t data_offset_ = 0;
    std::map<std::string, TensorInfo> tensors_;
    std::map<std::string, std::string> metadata_;
};

/// IEEE half and bfloat16 to float.
float half_to_float(std::uint16_t h);
float bf16_to_float(std::uint16_t h);

}  // namespace screenrep
