#include "limopt/idx.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "limopt/errors.hpp"

namespace limopt {
namespace {

uint32_t be32(const uint8_t* b) {
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

}  // namespace

IdxTensor load_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_idx: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("load_idx: read failure on " + path);

  if (bytes.size() < 4) {
    std::ostringstream os;
    os << "load_idx: " << path << " holds " << bytes.size() << " bytes, too short for a magic";
    throw FormatError(os.str());
  }
  const uint32_t magic = be32(bytes.data());
  if (magic != 0x00000801u && magic != 0x00000803u) {
    std::ostringstream os;
    os << "load_idx: bad magic 0x" << std::hex << std::setw(8) << std::setfill('0') << magic
       << " in " << path << " (expected 0x00000801 or 0x00000803)";
    throw FormatError(os.str());
  }
  const long rank = magic & 0xff;

  const size_t header = 4 + 4 * static_cast<size_t>(rank);
  if (bytes.size() < header) {
    std::ostringstream os;
    os << "load_idx: " << path << " truncated inside the dimension header (" << bytes.size()
       << " of " << header << " bytes)";
    throw FormatError(os.str());
  }

  IdxTensor t;
  uint64_t count = 1;
  for (long i = 0; i < rank; ++i) {
    const uint32_t d = be32(bytes.data() + 4 + 4 * i);
    t.dims.push_back(static_cast<long>(d));
    count *= d;
  }
  const uint64_t expected = header + count;
  if (bytes.size() != expected) {
    std::ostringstream os;
    os << "load_idx: " << path << (bytes.size() < expected ? " truncated" : " oversized")
       << ": expected " << expected << " bytes, got " << bytes.size();
    throw FormatError(os.str());
  }
  t.payload.assign(bytes.begin() + static_cast<long>(header), bytes.end());
  return t;
}

Dataset to_dataset(const IdxTensor& images, const IdxTensor& labels, bool normalize) {
  if (images.dims.size() != 3)
    throw std::invalid_argument("to_dataset: image tensor must have dims [n, rows, cols]");
  if (labels.dims.size() != 1)
    throw std::invalid_argument("to_dataset: label tensor must have dims [n]");
  if (images.dims[0] != labels.dims[0]) {
    std::ostringstream os;
    os << "to_dataset: " << images.dims[0] << " images but " << labels.dims[0] << " labels";
    throw std::invalid_argument(os.str());
  }

  Dataset d;
  d.n = images.dims[0];
  d.p = images.dims[1] * images.dims[2];
  int max_label = 0;
  for (uint8_t l : labels.payload) max_label = std::max(max_label, int(l));
  d.C = max_label + 1;

  d.features.resize(images.payload.size());
  const double scale = normalize ? 1.0 / 255.0 : 1.0;
  for (size_t i = 0; i < images.payload.size(); ++i)
    d.features[i] = scale * static_cast<double>(images.payload[i]);
  d.labels.assign(labels.payload.begin(), labels.payload.end());
  validate_dataset(d);
  return d;
}

}  // namespace limopt
