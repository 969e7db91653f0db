#pragma once

#include <string>
#include <vector>

#include "cpesim/state.hpp"

namespace cpesim {

/// Binary snapshot layout: 16-byte magic ("CPESIM01" zero-padded), regime
/// tag (u8), grid dims (3x u32 LE), time (f64 LE), then the fields row-major
/// as f64 LE: surface_var, vx, vy for the channel regimes; vx, vy, Z for the
/// free boundary. 3D fields are level-major (z outer, then y, then x).
struct SnapshotData {
  Regime regime = Regime::GravityGamma2;
  int nx = 0, ny = 0, nz = 0;
  double time = 0.0;
  Field2 surface;   // surface_var or Z
  VecField3 v;
};

void write_snapshot(const std::string& path, const PrimState& state, Regime regime);
void write_snapshot(const std::string& path, const FbState& state);
SnapshotData read_snapshot(const std::string& path);

/// Dimension- and regime-checked conversions.
PrimState snapshot_to_state(const SnapshotData& snap, const Grid& grid,
                            const SimParams& params);
FbState snapshot_to_fb_state(const SnapshotData& snap, const Grid& grid,
                             const SimParams& params);

/// CSV export with a fixed header and 17-significant-digit floats, enough to
/// round-trip doubles exactly.
void export_diagnostics(const std::vector<DiagnosticsRecord>& records,
                        const std::string& path);
std::vector<DiagnosticsRecord> parse_diagnostics_csv(const std::string& path);

}  // namespace cpesim
