#include "wormpimc/checkpoint.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace wormpimc {

void save_checkpoint(std::ostream& os, const CheckpointMeta& meta, const std::string& config_echo,
                     const Engine& eng, const DiagonalAccumulator& diag, const DnHistogram* hist) {
  os << "wormpimc checkpoint v1\n";
  os << "chain " << meta.chain << " sweeps " << meta.sweeps_done << " config_bytes "
     << config_echo.size() << "\n";
  os << config_echo;
  eng.save_state(os);
  diag.save(os);
  os << "hist " << (hist ? 1 : 0) << "\n";
  if (hist) hist->save(os);
  os << "end checkpoint\n";
}

CheckpointMeta load_checkpoint(std::istream& is, const RunConfig& cfg, Engine& eng,
                               DiagonalAccumulator& diag, std::optional<DnHistogram>& hist) {
  auto fail = [](const std::string& why) {
    return std::runtime_error("checkpoint: " + why);
  };
  std::string line, tok;
  if (!std::getline(is, line)) throw fail("empty stream");
  if (line != "wormpimc checkpoint v1") throw fail("unsupported version '" + line + "'");
  CheckpointMeta meta;
  std::size_t nbytes = 0;
  is >> tok >> meta.chain;
  if (tok != "chain") throw fail("expected chain");
  is >> tok >> meta.sweeps_done;
  if (tok != "sweeps") throw fail("expected sweeps");
  is >> tok >> nbytes;
  if (tok != "config_bytes" || !is) throw fail("expected config_bytes");
  std::getline(is, line);  // finish the meta line
  std::string echo(nbytes, '\0');
  is.read(echo.data(), (std::streamsize)nbytes);
  if ((std::size_t)is.gcount() != nbytes) throw fail("truncated config echo");
  if (echo != cfg.echo()) throw fail("stored config differs from the requested run");
  eng.load_state(is);
  const LatticeGraph g = cfg.graph();
  diag = DiagonalAccumulator::load(is, g, cfg.model);
  int have_hist = 0;
  is >> tok >> have_hist;
  if (tok != "hist" || !is) throw fail("expected hist flag");
  std::getline(is, line);
  if (have_hist) {
    hist = DnHistogram::load(is, g);
  } else {
    hist.reset();
  }
  // token-based loads leave the tail of their final line behind
  while (std::getline(is, line) && line.empty()) {
  }
  if (line != "end checkpoint") throw fail("missing trailer");
  return meta;
}

}  // namespace wormpimc
