#pragma once

#include <filesystem>
#include <iosfwd>

#include "dgzsl/matrix.hpp"
#include "dgzsl/networks.hpp"

namespace dgzsl {

/// 8-byte magic of a matrix block. The block continues with rows and cols
/// as little-endian uint32 and rows*cols little-endian float32, row-major.
inline constexpr char kMatrixMagic[9] = "DGZSLM01";
/// 8-byte magic of a checkpoint: then a little-endian uint32 tensor count,
/// and per tensor a uint32 name length, the UTF-8 name and a matrix block.
inline constexpr char kCheckpointMagic[9] = "DGZSLCK1";

/// Values are narrowed to float32.
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);

void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

/// Every tensor of ModelParams::tensors() plus the two dropout keep
/// probabilities as 1x1 tensors.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace dgzsl
