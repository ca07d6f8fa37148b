#include "chanreg/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "chanreg/config.hpp"

namespace chanreg {

namespace {

constexpr char magic[8] = {'C', 'H', 'R', 'E', 'G', 'F', 'L', 'D'};

template <typename U> void put_le(std::string &out, U v)
{
  for (size_t b = 0; b < sizeof(U); ++b) { out.push_back(static_cast<char>((v >> (8 * b)) & 0xff)); }
}

void put_f64(std::string &out, Real v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

class Reader
{
public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  template <typename U> U le()
  {
    need(sizeof(U));
    U v = 0;
    for (size_t b = 0; b < sizeof(U); ++b) { v |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b); }
    pos_ += sizeof(U);
    return v;
  }
  Real f64() { return std::bit_cast<Real>(le<std::uint64_t>()); }
  std::string bytes(size_t n)
  {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  size_t remaining() const { return data_.size() - pos_; }

private:
  void need(size_t n) const
  {
    if (pos_ + n > data_.size()) { throw IoError(path_ + ": truncated checkpoint"); }
  }
  std::string data_, path_;
  size_t pos_ = 0;
};

void write_fields(std::string const &path, std::vector<ScalarField const *> const &comps, Real time,
                  std::uint64_t hash)
{
  Grid const &g = comps.front()->grid();
  std::string out(magic, sizeof magic);
  put_le(out, checkpoint_version);
  put_le(out, static_cast<std::uint32_t>(comps.size()));
  put_le(out, static_cast<std::uint64_t>(g.nx()));
  put_le(out, static_cast<std::uint64_t>(g.ny()));
  put_le(out, static_cast<std::uint64_t>(g.nz()));
  put_f64(out, g.px());
  put_f64(out, g.py());
  put_f64(out, g.half_height());
  put_f64(out, time);
  put_le(out, hash);
  std::array<char, 16> tool{};
  std::strncpy(tool.data(), tool_version, tool.size());
  out.append(tool.data(), tool.size());
  for (auto const *c : comps) {
    Array const &v = c->values();
    for (Index i = 0; i < v.size(); ++i) { put_f64(out, v(i)); }
  }
  write_text(path, out);
}

} // namespace

VectorField Checkpoint::vector() const
{
  if (comps.size() != 3) { throw IoError("checkpoint holds " + std::to_string(comps.size()) + " components, expected 3"); }
  VectorField u(comps[0].grid_ptr());
  for (int c = 0; c < 3; ++c) { u[c] = comps[static_cast<size_t>(c)]; }
  u.divergence_free = u.no_slip = false;
  return u;
}

void write_checkpoint(std::string const &path, VectorField const &u, Real time, std::uint64_t config_hash)
{
  write_fields(path, {&u[0], &u[1], &u[2]}, time, config_hash);
}

void write_checkpoint(std::string const &path, ScalarField const &f, Real time, std::uint64_t config_hash)
{
  write_fields(path, {&f}, time, config_hash);
}

Checkpoint read_checkpoint(std::string const &path)
{
  Reader r(read_text(path), path);
  if (r.bytes(sizeof magic) != std::string(magic, sizeof magic)) { throw IoError(path + ": not a chanreg checkpoint"); }
  auto const version = r.le<std::uint32_t>();
  if (version != checkpoint_version) {
    throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  auto const ncomp = r.le<std::uint32_t>();
  auto const nx = r.le<std::uint64_t>(), ny = r.le<std::uint64_t>(), nz = r.le<std::uint64_t>();
  Real const px = r.f64(), py = r.f64(), L = r.f64();
  Checkpoint c;
  c.time = r.f64();
  c.config_hash = r.le<std::uint64_t>();
  std::string tool = r.bytes(16);
  c.tool = tool.substr(0, tool.find('\0'));
  std::uint64_t const n = nx * ny * nz;
  if (ncomp == 0 || ncomp > 3 || r.remaining() != ncomp * n * 8) {
    throw IoError(path + ": checkpoint size does not match its header");
  }
  GridPtr grid = make_grid(static_cast<Index>(nx), static_cast<Index>(ny), static_cast<Index>(nz), px, py, L);
  for (std::uint32_t k = 0; k < ncomp; ++k) {
    Array v(static_cast<Index>(n));
    for (Index i = 0; i < v.size(); ++i) { v(i) = r.f64(); }
    c.comps.emplace_back(grid, std::move(v));
  }
  return c;
}

DiagnosticsCsv::DiagnosticsCsv(std::string const &path, std::uint64_t config_hash)
  : file_(std::fopen(path.c_str(), "wb"))
{
  if (!file_) { throw IoError(path + ": cannot open for writing"); }
  std::fprintf(file_, "# tool: %s\n# config_hash: %s\n%s\n", tool_version, hex(config_hash).c_str(), diagnostics_columns);
  std::fflush(file_);
}

DiagnosticsCsv::~DiagnosticsCsv()
{
  if (file_) { std::fclose(file_); }
}

void DiagnosticsCsv::write(DiagnosticsRecord const &r)
{
  Real const row[] = {r.t, r.E, r.D, r.Dh, r.V2, r.crit, r.resid, r.cumD, r.dh_grad2, r.Au2, r.dz_u2, r.f_norm, r.f_dot_u};
  std::string line;
  for (Real v : row) { line += (line.empty() ? "" : ",") + format_real(v); }
  line += '\n';
  if (std::fputs(line.c_str(), file_) < 0 || std::fflush(file_) != 0) { throw IoError("diagnostics write failed"); }
}

Trajectory read_diagnostics_csv(std::string const &path)
{
  std::istringstream in(read_text(path));
  std::string line;
  Trajectory out;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') { continue; }
    if (!header) {
      if (line != diagnostics_columns) { throw IoError(path + ": unexpected diagnostics columns"); }
      header = true;
      continue;
    }
    std::vector<Real> v;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      Real x = 0;
      auto const [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (ec != std::errc() || p != cell.data() + cell.size()) { throw IoError(path + ": bad number \"" + cell + "\""); }
      v.push_back(x);
    }
    if (v.size() != 13) { throw IoError(path + ": row with " + std::to_string(v.size()) + " columns"); }
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11], v[12]});
  }
  return out;
}

std::string format_real(Real v)
{
  std::array<char, 32> buf{};
  auto const [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return ec == std::errc() ? std::string(buf.data(), p) : std::string("nan");
}

void write_text(std::string const &path, std::string const &text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) { throw IoError(path + ": write failed"); }
}

std::string read_text(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError(path + ": cannot open"); }
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace chanreg
