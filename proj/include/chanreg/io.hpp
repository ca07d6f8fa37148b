#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "chanreg/diagnostics.hpp"
#include "chanreg/fields.hpp"

namespace chanreg {

struct IoError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Binary field checkpoint:
//   char[8] "CHREGFLD", u32 version, u32 ncomp, u64 nx, ny, nz, f64 px, py, L, time,
//   u64 config_hash, char[16] tool (NUL padded), then ncomp blocks of nx*ny*nz f64
//   physical values in x1-fastest order. All integers and floats little-endian.
inline constexpr std::uint32_t checkpoint_version = 1;

struct Checkpoint
{
  std::vector<ScalarField> comps;
  Real time = 0;
  std::uint64_t config_hash = 0;
  std::string tool;

  VectorField vector() const; // requires three components; space flags cleared
};

void write_checkpoint(std::string const &path, VectorField const &u, Real time, std::uint64_t config_hash);
void write_checkpoint(std::string const &path, ScalarField const &f, Real time, std::uint64_t config_hash);
Checkpoint read_checkpoint(std::string const &path);

// Streams diagnostics rows as CSV, flushing after each so a partial file stays valid.
// Two '#' header lines carry the tool version and config hash.
class DiagnosticsCsv
{
public:
  DiagnosticsCsv(std::string const &path, std::uint64_t config_hash);
  ~DiagnosticsCsv();
  DiagnosticsCsv(DiagnosticsCsv const &) = delete;
  DiagnosticsCsv &operator=(DiagnosticsCsv const &) = delete;

  void write(DiagnosticsRecord const &r);

private:
  std::FILE *file_ = nullptr;
};

inline constexpr char const *diagnostics_columns = "t,E,D,Dh,V2,crit,resid,cumD,dh_grad2,Au2,dz_u2,f_norm,f_dot_u";

// Parses a file written by DiagnosticsCsv.
Trajectory read_diagnostics_csv(std::string const &path);

// Shortest round-trip decimal form.
std::string format_real(Real v);

void write_text(std::string const &path, std::string const &text);
std::string read_text(std::string const &path);

} // namespace chanreg
