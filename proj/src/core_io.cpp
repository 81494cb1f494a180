#include "swei/core_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace swei {
namespace {

constexpr std::array<char, 4> kPlotMagic{'S', 'W', 'S', 'T'};
constexpr std::array<char, 4> kModelMagic{'S', 'W', 'N', 'W'};

class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  void bytes(const char* p, std::size_t n) {
    out_.write(p, static_cast<std::streamsize>(n));
    count_ += n;
  }
  template <std::unsigned_integral U>
  void uint(U v) {
    std::array<char, sizeof(U)> buf{};
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    }
    bytes(buf.data(), buf.size());
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

  std::size_t finish() {
    out_.flush();
    if (!out_) throw Error(Errc::IoError, "write failed");
    return count_;
  }

 private:
  std::ostream& out_;
  std::size_t count_ = 0;
};

class LeReader {
 public:
  explicit LeReader(std::istream& in) : in_(in) {}

  void bytes(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(Errc::TruncatedFile, "file ends before the declared payload");
    }
  }
  template <std::unsigned_integral U>
  U uint() {
    std::array<unsigned char, sizeof(U)> buf{};
    bytes(reinterpret_cast<char*>(buf.data()), buf.size());
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

 private:
  std::istream& in_;
};

void expect_magic(LeReader& r, const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  r.bytes(got.data(), got.size());
  if (got != magic) {
    throw Error(Errc::BadMagic, "expected '" + std::string(magic.data(), 4) + "', got '" +
                                    std::string(got.data(), 4) + "'");
  }
}

void expect_version(LeReader& r) {
  auto version = r.uint<std::uint16_t>();
  if (version != kFormatVersion) {
    throw Error(Errc::UnsupportedVersion, "format version " + std::to_string(version));
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

std::size_t write_plot(const SpaceTimePlot& plot, std::ostream& out) {
  for (float v : plot.data()) {
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteData, "plot contains NaN or Inf");
  }
  LeWriter w(out);
  w.bytes(kPlotMagic.data(), kPlotMagic.size());
  w.uint(kFormatVersion);
  w.uint(static_cast<std::uint16_t>(plot.kind()));
  w.uint(static_cast<std::uint32_t>(plot.n_x()));
  w.uint(static_cast<std::uint32_t>(plot.n_t()));
  w.f64(plot.dx());
  w.f64(plot.dt());
  for (float v : plot.data()) w.f32(v);
  return w.finish();
}

std::size_t write_plot(const SpaceTimePlot& plot, const std::filesystem::path& path) {
  auto out = open_out(path);
  return write_plot(plot, out);
}

SpaceTimePlot read_plot(std::istream& in) {
  LeReader r(in);
  expect_magic(r, kPlotMagic);
  expect_version(r);
  auto kind = r.uint<std::uint16_t>();
  if (kind > 1) throw Error(Errc::BadKind, "unknown motion kind " + std::to_string(kind));
  auto n_x = r.uint<std::uint32_t>();
  auto n_t = r.uint<std::uint32_t>();
  double dx = r.f64();
  double dt = r.f64();
  std::vector<float> data(static_cast<std::size_t>(n_x) * n_t);
  for (auto& v : data) v = r.f32();
  return SpaceTimePlot(n_x, n_t, dx, dt, std::move(data), static_cast<MotionKind>(kind));
}

SpaceTimePlot read_plot(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  return read_plot(in);
}

std::size_t write_model(const ModelWeights& weights, std::ostream& out) {
  weights.validate();
  LeWriter w(out);
  w.bytes(kModelMagic.data(), kModelMagic.size());
  w.uint(kFormatVersion);
  w.uint(weights.config.in_x);
  w.uint(weights.config.in_t);
  w.uint(weights.config.channels);
  w.f32(weights.config.leaky_slope);
  w.uint(static_cast<std::uint32_t>(weights.tensors.size()));
  for (const auto& t : weights.tensors) {
    if (t.name.size() > 0xFFFF || t.dims.size() > 0xFF) {
      throw Error(Errc::SizeMismatch, "tensor '" + t.name + "' header too large");
    }
    w.uint(static_cast<std::uint16_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.uint(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) w.uint(d);
    for (float v : t.values) w.f32(v);
  }
  return w.finish();
}

std::size_t write_model(const ModelWeights& weights, const std::filesystem::path& path) {
  auto out = open_out(path);
  return write_model(weights, out);
}

ModelWeights read_model(std::istream& in) {
  LeReader r(in);
  expect_magic(r, kModelMagic);
  expect_version(r);
  ModelWeights weights;
  weights.config.in_x = r.uint<std::uint32_t>();
  weights.config.in_t = r.uint<std::uint32_t>();
  weights.config.channels = r.uint<std::uint32_t>();
  weights.config.leaky_slope = r.f32();
  auto count = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name.resize(r.uint<std::uint16_t>());
    r.bytes(t.name.data(), t.name.size());
    t.dims.resize(r.uint<std::uint8_t>());
    std::size_t n = 1;
    for (auto& d : t.dims) {
      d = r.uint<std::uint32_t>();
      n *= d;
    }
    t.values.resize(n);
    for (auto& v : t.values) v = r.f32();
    weights.tensors.push_back(std::move(t));
  }
  weights.validate();
  return weights;
}

ModelWeights read_model(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  return read_model(in);
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

namespace {

double parse_double(const std::string& text, std::size_t line_no) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(Errc::MalformedCsv, "line " + std::to_string(line_no) + ": bad number '" +
                                        text + "'");
  }
  return v;
}

int parse_int(const std::string& text, std::size_t line_no) {
  int v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(Errc::MalformedCsv, "line " + std::to_string(line_no) + ": bad integer '" +
                                        text + "'");
  }
  return v;
}

}  // namespace

void write_labels(const std::vector<LabelRow>& rows, std::ostream& out) {
  out << "path,truth_mps,group_id,label_source\n";
  for (const auto& row : rows) {
    out << row.path << ',' << format_double(row.truth_mps) << ',' << row.group_id << ','
        << to_string(row.label_source) << '\n';
  }
  if (!out) throw Error(Errc::IoError, "label write failed");
}

void write_labels(const std::vector<LabelRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for writing");
  write_labels(rows, out);
}

std::vector<LabelRow> read_labels(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MalformedCsv, "label file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,truth_mps,group_id,label_source") {
    throw Error(Errc::MalformedCsv, "unexpected label header '" + line + "'");
  }
  std::vector<LabelRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 4) {
      throw Error(Errc::MalformedCsv, "line " + std::to_string(line_no) + ": expected 4 fields");
    }
    rows.push_back({f[0], parse_double(f[1], line_no), parse_int(f[2], line_no),
                    label_source_from_string(f[3])});
  }
  return rows;
}

std::vector<LabelRow> read_labels(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  return read_labels(in);
}

}  // namespace swei
