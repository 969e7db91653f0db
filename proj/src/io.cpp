#include "cpesim/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cpesim {

static_assert(std::endian::native == std::endian::little,
              "snapshot format is little-endian");

namespace {

constexpr char kMagic[16] = {'C', 'P', 'E', 'S', 'I', 'M', '0', '1',
                             0, 0, 0, 0, 0, 0, 0, 0};

uint8_t regime_tag(Regime r) {
  switch (r) {
    case Regime::GravityGamma2: return 0;
    case Regime::VacuumNoGravity: return 1;
    case Regime::FreeBoundary: return 2;
  }
  return 255;
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open snapshot for writing: " + path);
  }
  void bytes(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw IoError("snapshot write failed");
  }
  template <typename T>
  void pod(const T& v) { bytes(&v, sizeof(T)); }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open snapshot: " + path);
  }
  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) {
      std::ostringstream msg;
      msg << "truncated snapshot at byte offset " << offset_ + in_.gcount();
      throw IoError(msg.str(), offset_ + in_.gcount());
    }
    offset_ += static_cast<long>(n);
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  long offset() const { return offset_; }

 private:
  std::ifstream in_;
  long offset_ = 0;
};

void write_header(Writer& w, Regime regime, int nx, int ny, int nz, double time) {
  w.bytes(kMagic, sizeof(kMagic));
  w.pod<uint8_t>(regime_tag(regime));
  w.pod<uint32_t>(static_cast<uint32_t>(nx));
  w.pod<uint32_t>(static_cast<uint32_t>(ny));
  w.pod<uint32_t>(static_cast<uint32_t>(nz));
  w.pod<double>(time);
}

void write_field2(Writer& w, const Field2& f) {
  w.bytes(f.data(), sizeof(double) * static_cast<size_t>(f.size()));
}

void write_field3(Writer& w, const Field3& f) {
  w.bytes(f.flat().data(), sizeof(double) * static_cast<size_t>(f.size()));
}

}  // namespace

void write_snapshot(const std::string& path, const PrimState& state, Regime regime) {
  if (regime == Regime::FreeBoundary)
    throw IoError("channel snapshot writer called with free-boundary regime");
  Writer w(path);
  write_header(w, regime, state.v.x.nx(), state.v.x.ny(), state.v.x.nz(), state.time);
  write_field2(w, state.surface_var);
  write_field3(w, state.v.x);
  write_field3(w, state.v.y);
}

void write_snapshot(const std::string& path, const FbState& state) {
  Writer w(path);
  write_header(w, Regime::FreeBoundary, state.v.x.nx(), state.v.x.ny(), state.v.x.nz(),
               state.time);
  write_field3(w, state.v.x);
  write_field3(w, state.v.y);
  write_field2(w, state.Z);
}

SnapshotData read_snapshot(const std::string& path) {
  Reader r(path);
  char magic[16];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("bad snapshot magic (wrong format or endianness): " + path);
  const uint8_t tag = r.pod<uint8_t>();
  if (tag > 2) throw IoError("unknown regime tag in snapshot");
  SnapshotData snap;
  snap.regime = tag == 0 ? Regime::GravityGamma2
                         : (tag == 1 ? Regime::VacuumNoGravity : Regime::FreeBoundary);
  snap.nx = static_cast<int>(r.pod<uint32_t>());
  snap.ny = static_cast<int>(r.pod<uint32_t>());
  snap.nz = static_cast<int>(r.pod<uint32_t>());
  if (snap.nx <= 0 || snap.ny <= 0 || snap.nz <= 0 || snap.nx > (1 << 20) ||
      snap.ny > (1 << 20) || snap.nz > (1 << 20))
    throw IoError("implausible snapshot dimensions");
  snap.time = r.pod<double>();

  snap.surface = Field2(snap.ny, snap.nx);
  snap.v = VecField3(snap.nx, snap.ny, snap.nz);
  auto read2 = [&](Field2& f) {
    r.bytes(f.data(), sizeof(double) * static_cast<size_t>(f.size()));
  };
  auto read3 = [&](Field3& f) {
    r.bytes(f.flat().data(), sizeof(double) * static_cast<size_t>(f.size()));
  };
  if (snap.regime == Regime::FreeBoundary) {
    read3(snap.v.x);
    read3(snap.v.y);
    read2(snap.surface);
  } else {
    read2(snap.surface);
    read3(snap.v.x);
    read3(snap.v.y);
  }
  return snap;
}

namespace {

void check_dims(const SnapshotData& snap, const Grid& grid) {
  if (snap.nx != grid.nx || snap.ny != grid.ny || snap.nz != grid.nz) {
    std::ostringstream msg;
    msg << "snapshot dims " << snap.nx << "x" << snap.ny << "x" << snap.nz
        << " do not match grid " << grid.nx << "x" << grid.ny << "x" << grid.nz;
    throw IoError(msg.str());
  }
}

}  // namespace

PrimState snapshot_to_state(const SnapshotData& snap, const Grid& grid,
                            const SimParams& params) {
  check_dims(snap, grid);
  if (snap.regime != params.regime)
    throw IoError("snapshot regime does not match configuration");
  PrimState state;
  state.surface_var = snap.surface;
  state.v = snap.v;
  state.time = snap.time;
  return state;
}

FbState snapshot_to_fb_state(const SnapshotData& snap, const Grid& grid,
                             const SimParams& params) {
  check_dims(snap, grid);
  if (snap.regime != Regime::FreeBoundary || params.regime != Regime::FreeBoundary)
    throw IoError("snapshot regime does not match configuration");
  FbState state;
  state.Z = snap.surface;
  state.v = snap.v;
  state.time = snap.time;
  return state;
}

void export_diagnostics(const std::vector<DiagnosticsRecord>& records,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open diagnostics file: " + path);
  out << "time,mass,energy,dissipation_rate,min_density,l2_surface,l2_velocity,"
         "picard_iters\n";
  char buf[512];
  for (const DiagnosticsRecord& r : records) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.time, r.mass,
                  r.energy, r.dissipation_rate, r.min_density, r.l2_surface,
                  r.l2_velocity, r.picard_iters);
    out << buf;
  }
  if (!out) throw IoError("diagnostics write failed");
}

std::vector<DiagnosticsRecord> parse_diagnostics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open diagnostics file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty diagnostics file");
  std::vector<DiagnosticsRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    DiagnosticsRecord r;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg,%lg,%lg,%lg,%d", &r.time, &r.mass,
                    &r.energy, &r.dissipation_rate, &r.min_density, &r.l2_surface,
                    &r.l2_velocity, &r.picard_iters) != 8)
      throw IoError("malformed diagnostics row: " + line);
    out.push_back(r);
  }
  return out;
}

}  // namespace cpesim
