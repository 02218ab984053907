#include "wormpimc/recipes.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "wormpimc/csv.hpp"

namespace wormpimc {

namespace {

// mu and gamma are pinned per grid point by desk-scale calibration runs
// (beta = L) so the measured filling lands near the grid label and the run
// splits its time roughly evenly between the Z and G sectors; the label is
// nominal, plots use the measured filling_0 row.
struct GridPoint {
  int L;
  double n;
  double mu;
  double gamma;
};

const std::map<std::string, std::vector<GridPoint>> kGrids = {
    {"fig6a",
     {{40, 0.05, -3.30, 0.30}, {40, 0.10, -3.10, 0.30}, {40, 0.20, -2.70, 0.30},
      {40, 0.30, -2.30, 0.30}, {40, 0.35, -2.10, 0.30}, {80, 0.05, -3.30, 0.20},
      {80, 0.10, -3.10, 0.20}, {80, 0.20, -2.70, 0.20}, {80, 0.30, -2.30, 0.20},
      {80, 0.35, -2.10, 0.20}}},
    {"fig6b",
     {{40, 0.05, -3.10, 0.30}, {40, 0.10, -2.90, 0.30}, {40, 0.20, -2.50, 0.30},
      {40, 0.30, -2.10, 0.30}, {40, 0.35, -1.90, 0.30}, {80, 0.05, -3.10, 0.20},
      {80, 0.10, -2.90, 0.20}, {80, 0.20, -2.50, 0.20}, {80, 0.30, -2.10, 0.20},
      {80, 0.35, -1.90, 0.20}}},
    {"fig7",
     {{40, 0.10, -3.50, 0.30}, {40, 0.20, -3.10, 0.30}, {40, 0.30, -2.70, 0.30},
      {80, 0.10, -3.50, 0.20}, {80, 0.20, -3.10, 0.20}, {80, 0.30, -2.70, 0.20}}},
    {"fig8", {{48, 0.29, -1.90, 0.30}, {48, 0.50, -1.70, 0.30}}},
};

std::string n_label(double n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", n);
  return buf;
}

RunConfig base_config(const std::string& fig, int L) {
  RunConfig c;
  c.lattice.sites = L;
  c.lattice.pbc = true;
  c.lattice.pbc_inter = true;
  c.model.j_intra = 1.0;
  c.model.n_max = 1;
  c.model.beta = L;  // ground-state-targeting convention, beta = L/J
  if (fig == "fig6a" || fig == "fig6b") {
    c.lattice.layers = 2;
    c.model.j_inter = 1.0;
    c.model.v_inter = fig == "fig6a" ? 3.6 : 3.0;
    c.engine.worms.mode = WormMode::indist;
    c.engine.worms.n = 2;
  } else if (fig == "fig7") {
    c.lattice.layers = 3;
    c.model.j_inter = 1.0;
    c.model.v_inter = 1.97;
    c.engine.worms.mode = WormMode::indist;
    c.engine.worms.n = 3;
  } else {  // fig8
    c.lattice.layers = 3;
    c.model.j_inter = 0.0;
    c.model.v_inter = 2.0;
    c.engine.worms.mode = WormMode::per_layer;
  }
  // tether scale trade-off: annihilation needs every pair closed at once, so a
  // loose tether stalls the G->Z flow, while a tight one starves the large
  // separations that the 1/w reweighting must recover in unbound regimes
  c.engine.xi_space = std::max(6.0, L / 6.0);
  c.engine.xi_time = std::max(4.0, c.model.beta / 8.0);
  c.schedule.therm_sweeps = 1500;
  c.schedule.measure_sweeps = 20000;
  c.schedule.n_chains = 1;
  c.output.structure_every = 16;
  return c;
}

}  // namespace

std::vector<RecipeEntry> recipe_figures(const std::string& figure_id) {
  auto it = kGrids.find(figure_id);
  if (it == kGrids.end())
    throw std::invalid_argument("unknown figure id '" + figure_id +
                                "' (expected fig6a, fig6b, fig7, or fig8)");
  std::vector<RecipeEntry> out;
  for (const GridPoint& gp : it->second) {
    RecipeEntry e;
    e.name = figure_id + "_L" + std::to_string(gp.L) + "_n" + n_label(gp.n);
    e.config = base_config(figure_id, gp.L);
    e.config.model.mu.assign(e.config.lattice.layers, gp.mu);
    e.config.engine.gamma = gp.gamma;
    e.config.output.directory = e.name;
    e.config.validate();
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

std::map<std::string, SummaryRow> load_summary_map(const std::string& dir) {
  std::ifstream in(dir + "/summary.csv");
  if (!in) throw std::runtime_error("recipe: cannot open " + dir + "/summary.csv");
  std::map<std::string, SummaryRow> m;
  for (SummaryRow& r : read_summary_csv(in)) m[r.observable] = r;
  return m;
}

int sites_of(const std::string& dir) {
  std::ifstream in(dir + "/manifest.txt");
  if (!in) throw std::runtime_error("recipe: cannot open " + dir + "/manifest.txt");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("sites = ", 0) == 0) return std::stoi(line.substr(8));
  throw std::runtime_error("recipe: no sites line in " + dir + "/manifest.txt");
}

const char* model_name(int code) {
  switch (code) {
    case 0: return "exponential";
    case 1: return "algebraic";
    case 2: return "inconclusive";
    default: return "no_fit";
  }
}

const SummaryRow& need(const std::map<std::string, SummaryRow>& m, const std::string& key,
                       const std::string& dir) {
  auto it = m.find(key);
  if (it == m.end()) throw std::runtime_error("recipe: no '" + key + "' row in " + dir);
  return it->second;
}

}  // namespace

void recipe_postprocess(const std::string& figure_id, const std::vector<std::string>& run_dirs,
                        std::ostream& out) {
  if (kGrids.find(figure_id) == kGrids.end())
    throw std::invalid_argument("unknown figure id '" + figure_id + "'");
  if (figure_id == "fig8") {
    out << "# wormpimc recipe fits v1\n";
    out << "run,n,f1_model,f1_rate,f1_exponent,f2_model,f2_rate,f2_exponent\n";
    for (const std::string& dir : run_dirs) {
      const auto m = load_summary_map(dir);
      out << dir << ',' << format_g17(need(m, "filling_0", dir).mean) << ','
          << model_name((int)need(m, "f1_model", dir).mean) << ','
          << format_g17(need(m, "f1_rate", dir).mean) << ','
          << format_g17(need(m, "f1_exponent", dir).mean) << ','
          << model_name((int)need(m, "f2_model", dir).mean) << ','
          << format_g17(need(m, "f2_rate", dir).mean) << ','
          << format_g17(need(m, "f2_exponent", dir).mean) << "\n";
    }
    return;
  }
  out << "# wormpimc recipe dvn v1\n";
  out << "L,n,n_err,d,d_err\n";
  for (const std::string& dir : run_dirs) {
    const auto m = load_summary_map(dir);
    const SummaryRow& n = need(m, "filling_0", dir);
    const SummaryRow& d = need(m, "d_heads", dir);
    out << sites_of(dir) << ',' << format_g17(n.mean) << ',' << format_g17(n.stderr_) << ','
        << format_g17(d.mean) << ',' << format_g17(d.stderr_) << "\n";
  }
}

}  // namespace wormpimc
