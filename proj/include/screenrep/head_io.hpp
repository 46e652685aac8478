#pragma once

// On-disk softmax heads: a raw blob plus a JSON sidecar.
//
//   head.bin   K*D weights (row-major) then K biases, float32 little-endian
//   head.json  task, class_names, dim, lambda, checkpoint id, blob digest,
//              training summary

#include "screenrep/classifier.hpp"

#include <filesystem>

namespace screenrep {

/// "head.bin" -> "head.json"
std::filesystem::path head_metadata_path(const std::filesystem::path& blob_path);

void save_head(const SoftmaxHead& head, const std::filesystem::path& blob_path);

/// Throws FormatError on size, digest or taxonomy mismatches.
SoftmaxHead load_head(const std::filesystem::path& blob_path);

}  // namespace screenrep
