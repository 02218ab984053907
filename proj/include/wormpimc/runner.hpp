#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wormpimc/config.hpp"
#include "wormpimc/estimators.hpp"

namespace wormpimc {

struct RunOutputs {
  DiagonalAccumulator diag;
  std::optional<DnHistogram> hist;
  long sweeps_done = 0;
};

// Runs schedule.n_chains independent chains (one thread each), merges their
// accumulators in chain order, and writes summary.csv, histogram CSVs,
// manifest.txt, and one final checkpoint per chain under output.directory.
// With resume = true the chains restart from those checkpoints and the final
// artifacts come out byte-identical to an uninterrupted run.
RunOutputs run_chains(const RunConfig& cfg, bool resume = false);

struct EdDiffRow {
  std::string observable;
  double mc = 0.0, err = 0.0, ed = 0.0, z = 0.0;
};

// Compares merged chain results against exact diagonalization: diagonal
// observables always, plus per-entry density-matrix tables when the worm
// content fits one (1 worm, or 2 layer-locked worms with j_inter = 0).
// Writes the oracle-side summary.csv schema to `oracle_csv` when given.
std::vector<EdDiffRow> ed_diff(const RunConfig& cfg, const RunOutputs& out,
                               std::ostream* oracle_csv = nullptr);

}  // namespace wormpimc
