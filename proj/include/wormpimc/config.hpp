#pragma once

#include <cstdint>
#include <string>

#include "wormpimc/lattice.hpp"
#include "wormpimc/model.hpp"
#include "wormpimc/updates.hpp"

namespace wormpimc {

struct LatticeSpec {
  int layers = 1;
  int sites = 2;
  bool pbc = true;
  bool pbc_inter = true;
};

struct ScheduleParams {
  long therm_sweeps = 2000;
  long measure_sweeps = 20000;
  int measure_every = 1;
  int n_chains = 1;
  std::uint64_t seed = 1;
};

struct OutputParams {
  std::string directory = "out";
  long checkpoint_every = 0;  // sweeps between checkpoints, 0 disables periodic ones
  int structure_every = 16;   // sweeps between equal-time structure snapshots, 0 disables
  bool stream = false;        // also dump the raw per-sample measurement stream
  // what the G-sector histogram bins: end displacements for physics runs, or
  // site-resolved tables (green_table, pair_table) for exact-diagonalization diffs
  std::string histogram = "displacements";
};

struct RunConfig {
  LatticeSpec lattice;
  ModelParams model;
  UpdateParams engine;
  ScheduleParams schedule;
  OutputParams output;

  LatticeGraph graph() const;
  void validate() const;      // throws std::runtime_error naming the offending key
  std::string echo() const;   // canonical text; parse_config(echo()) reproduces *this
};

// Strict INI-style parser over sections [model], [engine], [schedule],
// [output]. Unknown sections or keys and malformed values are errors carrying
// the line number. Grammar and the defaults table are documented in README.md.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

}  // namespace wormpimc
