#include "gla/tensor_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace gla {

namespace {

constexpr std::uint8_t kMagic[4] = {'G', 'L', 'A', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const std::filesystem::path& origin)
      : bytes_(bytes), origin_(origin) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated ") + what, origin_);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::span<const std::uint8_t> bytes() const { return bytes_; }

 private:
  std::span<const std::uint8_t> bytes_;
  const std::filesystem::path& origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t RawTensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor(const RawTensor& tensor) {
  if (tensor.data.size() != tensor.element_count()) {
    throw ShapeError("tensor payload has " + std::to_string(tensor.data.size()) +
                     " values but dims describe " + std::to_string(tensor.element_count()));
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(16 + 4 * tensor.dims.size() + 8 * tensor.data.size());
  put_u32(out, kTensorFileVersion);
  put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32(out, d);
  put_u32(out, kDtypeFloat64);
  for (double x : tensor.data) put_u64(out, std::bit_cast<std::uint64_t>(x));
  return out;
}

RawTensor decode_tensor(std::span<const std::uint8_t> bytes, const std::filesystem::path& origin) {
  Reader in(bytes, origin);
  in.need(4, "magic");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw FormatError("bad magic (expected GLAT)", origin);
  }
  in.u32("magic");
  const std::uint32_t version = in.u32("version");
  if (version != kTensorFileVersion) {
    throw FormatError("unsupported version " + std::to_string(version), origin);
  }
  const std::uint32_t ndim = in.u32("ndim");
  if (ndim > 64) throw FormatError("implausible ndim " + std::to_string(ndim), origin);
  RawTensor t;
  t.dims.reserve(ndim);
  for (std::uint32_t i = 0; i < ndim; ++i) t.dims.push_back(in.u32("dims"));
  const std::uint32_t dtype = in.u32("dtype");
  if (dtype != kDtypeFloat64) {
    throw FormatError("unsupported dtype code " + std::to_string(dtype), origin);
  }
  // Reject oversized dims before multiplying them out.
  std::size_t count = std::find(t.dims.begin(), t.dims.end(), 0u) != t.dims.end() ? 0 : 1;
  for (auto d : t.dims) {
    if (count != 0 && count > in.remaining() / 8 / d) {
      throw FormatError("payload shorter than dims require", origin);
    }
    count *= d;
  }
  if (in.remaining() != count * 8) {
    throw FormatError("payload is " + std::to_string(in.remaining()) + " bytes, dims require " +
                          std::to_string(count * 8),
                      origin);
  }
  t.data.resize(count);
  for (double& x : t.data) x = std::bit_cast<double>(in.u64());
  return t;
}

void write_tensor_file(const std::filesystem::path& path, const RawTensor& tensor) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing", path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed", path);
}

RawTensor read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open for reading", path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_tensor(bytes, path);
}

void write_seq_tensor(const std::filesystem::path& path, const SeqTensor& tensor) {
  write_tensor_file(path, RawTensor{{static_cast<std::uint32_t>(tensor.rows()),
                                     static_cast<std::uint32_t>(tensor.cols())},
                                    tensor.to_vector()});
}

SeqTensor read_seq_tensor(const std::filesystem::path& path) {
  RawTensor raw = read_tensor_file(path);
  if (raw.dims.size() != 2) {
    throw FormatError("expected a 2-D tensor, found ndim " + std::to_string(raw.dims.size()), path);
  }
  try {
    return SeqTensor(raw.dims[0], raw.dims[1], std::move(raw.data));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what(), path);
  }
}

}  // namespace gla
