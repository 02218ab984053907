#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "wormpimc/config.hpp"
#include "wormpimc/engine.hpp"
#include "wormpimc/estimators.hpp"

namespace wormpimc {

struct CheckpointMeta {
  int chain = 0;
  long sweeps_done = 0;  // counts thermalization and measurement sweeps alike
};

void save_checkpoint(std::ostream& os, const CheckpointMeta& meta, const std::string& config_echo,
                     const Engine& eng, const DiagonalAccumulator& diag, const DnHistogram* hist);

// Restores engine and accumulators in place. Refuses unknown versions and any
// checkpoint whose stored config differs from cfg.echo().
CheckpointMeta load_checkpoint(std::istream& is, const RunConfig& cfg, Engine& eng,
                               DiagonalAccumulator& diag, std::optional<DnHistogram>& hist);

}  // namespace wormpimc
