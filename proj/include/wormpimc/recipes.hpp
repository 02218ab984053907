#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wormpimc/config.hpp"

namespace wormpimc {

struct RecipeEntry {
  std::string name;  // doubles as the run's output subdirectory
  RunConfig config;
};

// Reduced-scale parameter grids for the figure reproductions: fig6a, fig6b,
// fig7 (end-distance vs filling) and fig8 (decay-shape discrimination).
// beta = L/J throughout; chemical potentials are pinned to land near the
// target fillings, and the measured filling is what the postprocessor plots.
std::vector<RecipeEntry> recipe_figures(const std::string& figure_id);

// Gathers finished run directories of one figure into a single plot table:
// d vs n per system size (fig6a/fig6b/fig7) or the decay-fit parameters and
// preferred models (fig8).
void recipe_postprocess(const std::string& figure_id, const std::vector<std::string>& run_dirs,
                        std::ostream& out);

}  // namespace wormpimc
