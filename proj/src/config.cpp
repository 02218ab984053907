#include "wormpimc/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "wormpimc/csv.hpp"

namespace wormpimc {

namespace {

[[noreturn]] void fail(int line, const std::string& why) {
  throw std::runtime_error("config line " + std::to_string(line) + ": " + why);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    fail(line, "key '" + key + "': expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    long n = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return n;
  } catch (const std::exception&) {
    fail(line, "key '" + key + "': expected an integer, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    unsigned long long n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return n;
  } catch (const std::exception&) {
    fail(line, "key '" + key + "': expected an unsigned integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(line, "key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> to_double_list(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) out.push_back(to_double(trim(item), line, key));
  if (out.empty()) fail(line, "key '" + key + "': empty list");
  return out;
}

WormSpec to_worms(const std::string& v, int line) {
  WormSpec w;
  if (v == "single") {
    w.mode = WormMode::single;
  } else if (v == "per_layer") {
    w.mode = WormMode::per_layer;
  } else if (v.rfind("indist", 0) == 0) {
    w.mode = WormMode::indist;
    w.n = (int)to_long(trim(v.substr(6)), line, "worms");
  } else {
    fail(line, "key 'worms': expected single, indist <N>, or per_layer, got '" + v + "'");
  }
  return w;
}

std::string worms_text(const WormSpec& w) {
  switch (w.mode) {
    case WormMode::single: return "single";
    case WormMode::indist: return "indist " + std::to_string(w.n);
    case WormMode::per_layer: return "per_layer";
  }
  return "single";
}

}  // namespace

LatticeGraph RunConfig::graph() const {
  return build_layered_lattice(lattice.layers, lattice.sites, lattice.pbc, lattice.pbc_inter);
}

void RunConfig::validate() const {
  auto bad = [](const std::string& why) { throw std::runtime_error("config: " + why); };
  if (lattice.layers < 1) bad("layers must be >= 1");
  if (lattice.sites < 1) bad("sites must be >= 1");
  const LatticeGraph g = graph();
  model.validate(g);
  engine.worms.check(model, g);
  if (engine.gamma <= 0.0) bad("gamma must be positive");
  if (engine.p_create < 0 || engine.p_shift < 0 || engine.p_kink < 0 ||
      engine.p_create + engine.p_shift + engine.p_kink <= 0)
    bad("move probabilities must be nonnegative with a positive sum");
  if (engine.xi_space <= 0.0) bad("xi_space must be positive");
  if (schedule.therm_sweeps < 0 || schedule.measure_sweeps < 0) bad("sweep counts must be >= 0");
  if (schedule.measure_every < 1) bad("measure_every must be >= 1");
  if (schedule.n_chains < 1) bad("chains must be >= 1");
  if (output.checkpoint_every < 0) bad("checkpoint_every must be >= 0");
  if (output.structure_every < 0) bad("structure_every must be >= 0");
  if (output.directory.empty()) bad("dir must not be empty");
  const std::string& h = output.histogram;
  if (h != "displacements" && h != "green_table" && h != "pair_table")
    bad("histogram must be displacements, green_table, or pair_table");
  if (h == "green_table" && engine.worms.n_worms(g.n_layers) != 1)
    bad("green_table needs exactly one worm");
  if (h == "pair_table" &&
      (engine.worms.n_worms(g.n_layers) != 2 || !engine.worms.layer_locked()))
    bad("pair_table needs two layer-locked worms");
}

std::string RunConfig::echo() const {
  std::ostringstream os;
  auto g = [](double v) { return format_g17(v); };
  os << "[model]\n";
  os << "layers = " << lattice.layers << "\n";
  os << "sites = " << lattice.sites << "\n";
  os << "pbc = " << (lattice.pbc ? "true" : "false") << "\n";
  os << "pbc_inter = " << (lattice.pbc_inter ? "true" : "false") << "\n";
  os << "j_intra = " << g(model.j_intra) << "\n";
  os << "j_inter = " << g(model.j_inter) << "\n";
  os << "v_inter = " << g(model.v_inter) << "\n";
  os << "u_onsite = " << g(model.u_onsite) << "\n";
  os << "mu = ";
  for (int l = 0; l < lattice.layers; ++l) os << (l ? ", " : "") << g(model.mu_of_layer(l));
  os << "\n";
  os << "n_max = " << model.n_max << "\n";
  os << "beta = " << g(model.beta) << "\n";
  os << "[engine]\n";
  os << "gamma = " << g(engine.gamma) << "\n";
  os << "xi_space = " << g(engine.xi_space) << "\n";
  os << "xi_time = " << g(engine.xi_time) << "\n";
  os << "max_shift_window = " << g(engine.max_shift_window) << "\n";
  os << "p_create = " << g(engine.p_create) << "\n";
  os << "p_shift = " << g(engine.p_shift) << "\n";
  os << "p_kink = " << g(engine.p_kink) << "\n";
  os << "worms = " << worms_text(engine.worms) << "\n";
  os << "[schedule]\n";
  os << "therm_sweeps = " << schedule.therm_sweeps << "\n";
  os << "measure_sweeps = " << schedule.measure_sweeps << "\n";
  os << "measure_every = " << schedule.measure_every << "\n";
  os << "chains = " << schedule.n_chains << "\n";
  os << "seed = " << schedule.seed << "\n";
  os << "[output]\n";
  os << "dir = " << output.directory << "\n";
  os << "checkpoint_every = " << output.checkpoint_every << "\n";
  os << "structure_every = " << output.structure_every << "\n";
  os << "stream = " << (output.stream ? "true" : "false") << "\n";
  os << "histogram = " << output.histogram << "\n";
  return os.str();
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  bool mu_seen = false;
  std::istringstream is(text);
  std::string raw, section;
  std::vector<std::string> seen;  // "section/key" duplicates guard
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header '" + line + "'");
      section = line.substr(1, line.size() - 2);
      if (section != "model" && section != "engine" && section != "schedule" &&
          section != "output")
        fail(line_no, "unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section.empty()) fail(line_no, "key '" + key + "' outside any section");
    if (key.empty()) fail(line_no, "empty key");
    if (val.empty()) fail(line_no, "key '" + key + "': empty value");
    const std::string id = section + "/" + key;
    for (const auto& s : seen)
      if (s == id) fail(line_no, "duplicate key '" + key + "' in [" + section + "]");
    seen.push_back(id);

    if (section == "model") {
      if (key == "layers")
        c.lattice.layers = (int)to_long(val, line_no, key);
      else if (key == "sites")
        c.lattice.sites = (int)to_long(val, line_no, key);
      else if (key == "pbc")
        c.lattice.pbc = to_bool(val, line_no, key);
      else if (key == "pbc_inter")
        c.lattice.pbc_inter = to_bool(val, line_no, key);
      else if (key == "j_intra")
        c.model.j_intra = to_double(val, line_no, key);
      else if (key == "j_inter")
        c.model.j_inter = to_double(val, line_no, key);
      else if (key == "v_inter")
        c.model.v_inter = to_double(val, line_no, key);
      else if (key == "u_onsite")
        c.model.u_onsite = to_double(val, line_no, key);
      else if (key == "mu") {
        c.model.mu = to_double_list(val, line_no, key);
        mu_seen = true;
      } else if (key == "n_max")
        c.model.n_max = (int)to_long(val, line_no, key);
      else if (key == "beta")
        c.model.beta = to_double(val, line_no, key);
      else
        fail(line_no, "unknown key '" + key + "' in [model]");
    } else if (section == "engine") {
      if (key == "gamma")
        c.engine.gamma = to_double(val, line_no, key);
      else if (key == "xi_space")
        c.engine.xi_space = to_double(val, line_no, key);
      else if (key == "xi_time")
        c.engine.xi_time = to_double(val, line_no, key);
      else if (key == "max_shift_window")
        c.engine.max_shift_window = to_double(val, line_no, key);
      else if (key == "p_create")
        c.engine.p_create = to_double(val, line_no, key);
      else if (key == "p_shift")
        c.engine.p_shift = to_double(val, line_no, key);
      else if (key == "p_kink")
        c.engine.p_kink = to_double(val, line_no, key);
      else if (key == "worms")
        c.engine.worms = to_worms(val, line_no);
      else
        fail(line_no, "unknown key '" + key + "' in [engine]");
    } else if (section == "schedule") {
      if (key == "therm_sweeps")
        c.schedule.therm_sweeps = to_long(val, line_no, key);
      else if (key == "measure_sweeps")
        c.schedule.measure_sweeps = to_long(val, line_no, key);
      else if (key == "measure_every")
        c.schedule.measure_every = (int)to_long(val, line_no, key);
      else if (key == "chains")
        c.schedule.n_chains = (int)to_long(val, line_no, key);
      else if (key == "seed")
        c.schedule.seed = to_u64(val, line_no, key);
      else
        fail(line_no, "unknown key '" + key + "' in [schedule]");
    } else {  // output
      if (key == "dir")
        c.output.directory = val;
      else if (key == "checkpoint_every")
        c.output.checkpoint_every = to_long(val, line_no, key);
      else if (key == "structure_every")
        c.output.structure_every = (int)to_long(val, line_no, key);
      else if (key == "stream")
        c.output.stream = to_bool(val, line_no, key);
      else if (key == "histogram")
        c.output.histogram = val;
      else
        fail(line_no, "unknown key '" + key + "' in [output]");
    }
  }
  // a single mu value broadcasts across layers
  if (mu_seen && (int)c.model.mu.size() == 1 && c.lattice.layers > 1)
    c.model.mu.assign(c.lattice.layers, c.model.mu[0]);
  c.validate();
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace wormpimc
