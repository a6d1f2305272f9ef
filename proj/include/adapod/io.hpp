#pragma once

#include "adapod/rom.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace adapod {

// Versioned ASCII formats. Reals are written with 17 significant digits so
// every load reproduces the saved bits. Read errors raise IoError carrying
// the source name and line number.

void write_mesh(std::ostream & out, const Mesh & mesh);
Mesh read_mesh(std::istream & in, const std::string & source = "<stream>");

void save_mesh(const std::string & path, const Mesh & mesh);
Mesh load_mesh(const std::string & path);

void write_function(std::ostream & out, const FeFunction & u);
/// Throws IoError if the stored space hash differs from `space`.
FeFunction read_function(std::istream & in, SpacePtr space, const std::string & source = "<stream>");

void save_function(const std::string & path, const FeFunction & u);
FeFunction load_function(const std::string & path, SpacePtr space);

/// Snapshot set with each distinct mesh stored once.
void save_snapshots(const std::string & path, const SnapshotSet & snaps);
SnapshotSet load_snapshots(const std::string & path);

/// Eigenvalues, rank, coefficients and the Gramian; common-space data is
/// not stored (see attach_common).
void save_basis(const std::string & path, const PodBasis & basis);
PodBasis load_basis(const std::string & path);

struct RomFile
{
    std::optional<EllipticRom> elliptic;
    std::optional<BurgersRom> burgers;
};

void save_rom(const std::string & path, const EllipticRom & rom);
void save_rom(const std::string & path, const BurgersRom & rom);
RomFile load_rom(const std::string & path);

} // namespace adapod
