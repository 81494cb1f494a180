#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "swei/types.hpp"

namespace swei {

inline constexpr std::uint16_t kFormatVersion = 1;

// SWST: "SWST" u16 version, u16 kind, u32 n_x, u32 n_t, f64 dx, f64 dt,
// then n_x*n_t f32 lateral-major. Everything little-endian.
std::size_t write_plot(const SpaceTimePlot& plot, std::ostream& out);
std::size_t write_plot(const SpaceTimePlot& plot, const std::filesystem::path& path);
SpaceTimePlot read_plot(std::istream& in);
SpaceTimePlot read_plot(const std::filesystem::path& path);

// SWNW: "SWNW" u16 version, config (u32 in_x, u32 in_t, u32 channels,
// f32 leaky_slope), u32 tensor count, then per tensor u16 name length,
// UTF-8 name, u8 ndim, u32 dims, f32 values.
std::size_t write_model(const ModelWeights& weights, std::ostream& out);
std::size_t write_model(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights read_model(std::istream& in);
ModelWeights read_model(const std::filesystem::path& path);

/// One row of the label sidecar `path,truth_mps,group_id,label_source`.
struct LabelRow {
  std::string path;
  double truth_mps = 0.0;
  int group_id = 0;
  LabelSource label_source = LabelSource::true_speed;
};

void write_labels(const std::vector<LabelRow>& rows, std::ostream& out);
void write_labels(const std::vector<LabelRow>& rows, const std::filesystem::path& path);
std::vector<LabelRow> read_labels(std::istream& in);
std::vector<LabelRow> read_labels(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Splits one CSV line on commas; no quoting support (paths must not contain commas).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace swei
