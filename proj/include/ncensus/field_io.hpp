#pragma once

#include <filesystem>
#include <stdexcept>

#include "ncensus/model.hpp"

namespace ncensus {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary sample file:
///   "NCFS" | u32 version | u32 header length | header JSON (model, grid,
///   seed, index) | u64 value count | little-endian f64 values.
/// A copy of the header is written to `<path>.json` for inspection.
void write_field(const std::filesystem::path& path, const FieldSample& sample);
FieldSample read_field(const std::filesystem::path& path);

nlohmann::json field_header(const FieldSample& sample);

}  // namespace ncensus
