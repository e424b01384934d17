#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "limopt/problems.hpp"

namespace limopt {

// Uncompressed IDX tensor of unsigned bytes (the MNIST container format):
// rank 1 for label files, rank 3 for image stacks.
struct IdxTensor {
  std::vector<long> dims;
  std::vector<uint8_t> payload;
};

// Parses an IDX file. The magic must be 0x00000801 (rank 1) or 0x00000803
// (rank 3), dims are big-endian 32-bit, and the payload must match the
// declared element count exactly — short and oversized files are both
// rejected.
IdxTensor load_idx(const std::string& path);

// Flattens [n, r, c] images into n feature rows of length r*c and pairs them
// with an [n] label tensor. normalize maps bytes into [0, 1] by dividing by
// 255. The class count is the largest label + 1.
Dataset to_dataset(const IdxTensor& images, const IdxTensor& labels, bool normalize);

}  // namespace limopt
