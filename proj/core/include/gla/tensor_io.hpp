#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gla/tensor.hpp"

namespace gla {

// Input/format failure. `path()` names the offending file when there is one.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& message, std::filesystem::path path = {})
      : std::runtime_error(path.empty() ? message : path.string() + ": " + message),
        path_(std::move(path)) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Tensor file layout, all little-endian:
//   "GLAT" | u32 version (1) | u32 ndim | u32 dims[ndim] | u32 dtype (1 = f64) | f64 payload
// Payload is row-major with 8 * prod(dims) bytes.
inline constexpr std::uint32_t kTensorFileVersion = 1;
inline constexpr std::uint32_t kDtypeFloat64 = 1;

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;

  std::size_t element_count() const;
  friend bool operator==(const RawTensor&, const RawTensor&) = default;
};

std::vector<std::uint8_t> encode_tensor(const RawTensor& tensor);
// `origin` only labels errors.
RawTensor decode_tensor(std::span<const std::uint8_t> bytes,
                        const std::filesystem::path& origin = {});

void write_tensor_file(const std::filesystem::path& path, const RawTensor& tensor);
RawTensor read_tensor_file(const std::filesystem::path& path);

void write_seq_tensor(const std::filesystem::path& path, const SeqTensor& tensor);
// Requires a 2-D file with finite values.
SeqTensor read_seq_tensor(const std::filesystem::path& path);

}  // namespace gla
