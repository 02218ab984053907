#include "wormpimc/runner.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "wormpimc/checkpoint.hpp"
#include "wormpimc/csv.hpp"
#include "wormpimc/engine.hpp"
#include "wormpimc/oracle.hpp"

namespace wormpimc {

namespace {

namespace fs = std::filesystem;

constexpr const char* kCodeVersion = "wormpimc 1.0";

DnMode mode_of(const std::string& name) {
  if (name == "green_table") return DnMode::green_table;
  if (name == "pair_table") return DnMode::pair_table;
  return DnMode::displacements;
}

const char* kMoveNames[kMoveKinds] = {"create", "annihilate", "shift", "kink_insert",
                                      "kink_remove"};

struct ChainResult {
  std::optional<DiagonalAccumulator> diag;
  std::optional<DnHistogram> hist;
  long sweeps_done = 0;
  MoveCounters counters;
  std::exception_ptr error;
};

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path checkpoint_path(const RunConfig& cfg, int chain) {
  return fs::path(cfg.output.directory) / ("chain_" + std::to_string(chain) + ".ckpt");
}

void write_checkpoint_file(const RunConfig& cfg, const std::string& echo, int chain, long done,
                           const Engine& eng, const DiagonalAccumulator& diag,
                           const DnHistogram* hist) {
  const fs::path target = checkpoint_path(cfg, chain);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    CheckpointMeta meta;
    meta.chain = chain;
    meta.sweeps_done = done;
    save_checkpoint(os, meta, echo, eng, diag, hist);
    if (!os) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

void run_chain(const RunConfig& cfg, const std::string& echo, int chain, bool resume,
               ChainResult& out) {
  try {
    const LatticeGraph g = cfg.graph();
    Engine eng(g, cfg.model, cfg.engine, cfg.schedule.seed, (std::uint64_t)chain);
    DiagonalAccumulator diag(g, cfg.model);
    std::optional<DnHistogram> hist(std::in_place, mode_of(cfg.output.histogram), g,
                                    cfg.engine.worms, cfg.model.beta, cfg.engine.gamma,
                                    cfg.engine.xi_space, eng.xi_time());
    long done = 0;
    if (resume) {
      std::ifstream in(checkpoint_path(cfg, chain), std::ios::binary);
      if (!in)
        throw std::runtime_error("resume: missing checkpoint for chain " +
                                 std::to_string(chain));
      const CheckpointMeta meta = load_checkpoint(in, cfg, eng, diag, hist);
      if (meta.chain != chain) throw std::runtime_error("resume: checkpoint chain mismatch");
      done = meta.sweeps_done;
    }
    const long total = cfg.schedule.therm_sweeps + cfg.schedule.measure_sweeps;
    const long me = cfg.schedule.measure_every;
    auto hook = [&](const Engine& e) {
      ++done;
      if (done <= cfg.schedule.therm_sweeps) return;
      const long midx = done - cfg.schedule.therm_sweeps;
      if (midx % me != 0) return;
      if (e.sector() == Sector::Z) {
        diag.record(e.worldlines());
        hist->record_z();
        if (cfg.output.structure_every > 0 && (midx / me) % cfg.output.structure_every == 0)
          diag.record_structure(e.worldlines());
      } else {
        hist->record(e.worldlines());
      }
    };
    while (done < total) {
      long next = total;
      if (cfg.output.checkpoint_every > 0)
        next = std::min(total, (done / cfg.output.checkpoint_every + 1) *
                                   cfg.output.checkpoint_every);
      eng.run_sweeps(next - done, hook);
      if (cfg.output.checkpoint_every > 0 && done < total)
        write_checkpoint_file(cfg, echo, chain, done, eng, diag, &*hist);
    }
    write_checkpoint_file(cfg, echo, chain, done, eng, diag, &*hist);
    out.counters = eng.counters();
    out.sweeps_done = done;
    out.diag = std::move(diag);
    out.hist = std::move(hist);
  } catch (...) {
    out.error = std::current_exception();
  }
}

void append_fit_rows(std::vector<SummaryRow>& rows, const std::string& name, const Curve& c) {
  const DecayFit f = fit_decay(c);
  rows.push_back({name + "_model", (double)(int)f.preferred, 0.0, 0});
  rows.push_back({name + "_rate", f.rate, f.rate_err, f.n_bins_used});
  rows.push_back({name + "_exponent", f.exponent, f.exponent_err, f.n_bins_used});
}

HistogramTable curve_table(const std::string& coord, const Curve& c) {
  HistogramTable t;
  t.coords = {coord};
  for (std::size_t i = 0; i < c.x.size(); ++i)
    t.rows.push_back({c.x[i], c.value[i], (double)(i < c.count.size() ? c.count[i] : 0)});
  return t;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << body;
  if (!os) throw std::runtime_error("short write to " + p.string());
}

std::string decay_model_name(DecayFit::Model m) {
  switch (m) {
    case DecayFit::Model::exponential: return "exponential";
    case DecayFit::Model::algebraic: return "algebraic";
    case DecayFit::Model::inconclusive: return "inconclusive";
    case DecayFit::Model::no_fit: return "no_fit";
  }
  return "no_fit";
}

}  // namespace

RunOutputs run_chains(const RunConfig& cfg, bool resume) {
  cfg.validate();
  const std::string echo = cfg.echo();
  const std::string started = now_utc();
  fs::create_directories(cfg.output.directory);

  const int nc = cfg.schedule.n_chains;
  std::vector<ChainResult> results(nc);
  {
    std::vector<std::thread> threads;
    threads.reserve(nc);
    for (int c = 0; c < nc; ++c)
      threads.emplace_back(run_chain, std::cref(cfg), std::cref(echo), c, resume,
                           std::ref(results[c]));
    for (auto& t : threads) t.join();
  }
  for (const ChainResult& r : results)
    if (r.error) std::rethrow_exception(r.error);

  // canonical merge order: chain 0 absorbs the rest in id order
  DiagonalAccumulator diag = std::move(*results[0].diag);
  DnHistogram hist = std::move(*results[0].hist);
  for (int c = 1; c < nc; ++c) {
    diag.merge(*results[c].diag);
    hist.merge(*results[c].hist);
  }

  const LatticeGraph g = cfg.graph();
  const bool displacements = hist.mode() == DnMode::displacements;
  const bool curves_ready = displacements && hist.n_records() > 0;

  std::vector<SummaryRow> rows;
  auto push_stat = [&rows](const std::string& name, const BlockedStats& b) {
    rows.push_back({name, b.mean, b.stderr_, (long)(b.n_samples >> b.plateau_level)});
  };
  if (diag.n_samples() > 0) {
    push_stat("total_n", diag.total_n());
    for (int l = 0; l < g.n_layers; ++l) push_stat("filling_" + std::to_string(l), diag.filling(l));
    push_stat("e_diag", diag.diag_energy());
    push_stat("kinetic", diag.kinetic_energy());
    push_stat("kinks", diag.kink_count());
  }
  const double n_g = (double)hist.n_records(), n_zc = (double)hist.n_z();
  if (n_g + n_zc > 0)
    rows.push_back({"g_fraction", n_g / (n_g + n_zc), 0.0, (long)(n_g + n_zc)});
  std::optional<DecayFit> fit1, fit2;
  if (curves_ready && hist.n_worms() >= 2) {
    const long blocks = (long)std::min<std::size_t>(64, hist.n_records());
    const MeanErr dh = hist.mean_end_distance(true);
    rows.push_back({"d_heads", dh.mean, dh.err, blocks});
    const MeanErr dt = hist.mean_end_distance(false);
    rows.push_back({"d_tails", dt.mean, dt.err, blocks});
    if (hist.n_worms() == 3 && cfg.engine.worms.layer_locked()) {
      const Curve c1 = hist.f1(), c2 = hist.f2();
      append_fit_rows(rows, "f1", c1);
      append_fit_rows(rows, "f2", c2);
      fit1 = fit_decay(c1);
      fit2 = fit_decay(c2);
    }
  }
  {
    std::ostringstream os;
    write_summary_csv(os, rows);
    write_file(fs::path(cfg.output.directory) / "summary.csv", os.str());
  }

  if (diag.n_structure() > 0) {
    const auto ci = diag.structure_intra();
    HistogramTable ti;
    ti.coords = {"dx"};
    for (std::size_t k = 0; k < ci.size(); ++k)
      ti.rows.push_back({(double)k, ci[k], (double)diag.n_structure()});
    std::ostringstream os;
    write_histogram_csv(os, ti);
    write_file(fs::path(cfg.output.directory) / "structure_intra.csv", os.str());
    const auto ce = diag.structure_inter();
    if (!ce.empty()) {
      HistogramTable te;
      te.coords = {"dl"};
      for (std::size_t k = 0; k < ce.size(); ++k)
        te.rows.push_back({(double)k + 1, ce[k], (double)diag.n_structure()});
      std::ostringstream os2;
      write_histogram_csv(os2, te);
      write_file(fs::path(cfg.output.directory) / "structure_inter.csv", os2.str());
    }
  }
  if (curves_ready) {
    auto dump = [&](const std::string& file, const Curve& c) {
      std::ostringstream os;
      write_histogram_csv(os, curve_table("r", c));
      write_file(fs::path(cfg.output.directory) / file, os.str());
    };
    if (hist.n_worms() >= 2) {
      dump("sep_heads.csv", hist.separation_curve(true));
      dump("sep_tails.csv", hist.separation_curve(false));
    } else {
      dump("green_profile.csv", hist.signed_profile(2, 0));
    }
    if (hist.n_worms() == 3 && cfg.engine.worms.layer_locked()) {
      dump("f1.csv", hist.f1());
      dump("f2.csv", hist.f2());
    }
  }
  if (!displacements && hist.n_records() > 0 && hist.n_z() > 0) {
    HistogramTable tt;
    tt.coords = hist.mode() == DnMode::green_table
                    ? std::vector<std::string>{"head", "tail"}
                    : std::vector<std::string>{"head1", "tail1", "head2", "tail2"};
    const int nc_sites = (int)tt.coords.size();
    for (const TableEntry& e : hist.table()) {
      std::vector<double> row;
      for (int k = 0; k < nc_sites; ++k) row.push_back(e.sites[k]);
      row.push_back(e.value);
      row.push_back((double)e.count);
      tt.rows.push_back(std::move(row));
    }
    std::ostringstream os;
    write_histogram_csv(os, tt);
    write_file(fs::path(cfg.output.directory) / "table.csv", os.str());
  }
  if (cfg.output.stream) {
    std::ostringstream os;
    os << "# wormpimc stream v1\n";
    const auto& tn = diag.total_n_series();
    const auto& ed = diag.diag_energy_series();
    const auto& kk = diag.kink_series();
    for (std::size_t i = 0; i < tn.size(); ++i)
      os << i << " total_n " << format_g17(tn[i]) << " 1\n"
         << i << " e_diag " << format_g17(ed[i]) << " 1\n"
         << i << " kinks " << format_g17(kk[i]) << " 1\n";
    write_file(fs::path(cfg.output.directory) / "measurements.txt", os.str());
  }

  {
    std::ostringstream os;
    os << "wormpimc manifest v1\n";
    os << "version " << kCodeVersion << "\n";
    os << "started " << started << "\n";
    os << "finished " << now_utc() << "\n";
    os << "resumed " << (resume ? "true" : "false") << "\n";
    os << "chains " << nc << "\n";
    for (int c = 0; c < nc; ++c) {
      const MoveCounters& mc = results[c].counters;
      os << "chain " << c << ": seed " << cfg.schedule.seed << " stream " << c << " sweeps "
         << results[c].sweeps_done << " steps " << mc.steps;
      for (int k = 0; k < kMoveKinds; ++k) {
        const double r = mc.proposed[k] ? (double)mc.accepted[k] / (double)mc.proposed[k] : 0.0;
        os << " " << kMoveNames[k] << " " << format_g17(r);
      }
      os << "\n";
    }
    if (fit1) {
      os << "fit f1: model=" << decay_model_name(fit1->preferred) << " rate="
         << format_g17(fit1->rate) << " exponent=" << format_g17(fit1->exponent) << "\n";
      os << "fit f2: model=" << decay_model_name(fit2->preferred) << " rate="
         << format_g17(fit2->rate) << " exponent=" << format_g17(fit2->exponent) << "\n";
    }
    os << "notes: beta and mu are run inputs; figure recipes choose beta = L/J as a "
          "ground-state convention and pin mu to land near target fillings\n";
    os << "config:\n" << echo;
    write_file(fs::path(cfg.output.directory) / "manifest.txt", os.str());
  }

  RunOutputs out{std::move(diag), std::move(hist),
                 cfg.schedule.therm_sweeps + cfg.schedule.measure_sweeps};
  return out;
}

std::vector<EdDiffRow> ed_diff(const RunConfig& cfg, const RunOutputs& out,
                               std::ostream* oracle_csv) {
  const LatticeGraph g = cfg.graph();
  const ExactDiag ed(g, cfg.model);
  const double beta = cfg.model.beta;
  std::vector<EdDiffRow> rows;
  auto push = [&rows](const std::string& name, double mc, double err, double ref) {
    EdDiffRow r;
    r.observable = name;
    r.mc = mc;
    r.err = err;
    r.ed = ref;
    r.z = err > 0.0 ? (mc - ref) / err : 0.0;
    rows.push_back(std::move(r));
  };
  if (out.diag.n_samples() > 0) {
    const BlockedStats tn = out.diag.total_n();
    push("total_n", tn.mean, tn.stderr_, ed.thermal_total_n(beta));
    for (int l = 0; l < g.n_layers; ++l) {
      double ref = 0.0;
      for (int x = 0; x < g.sites_per_layer; ++x)
        ref += ed.thermal_mean_n(g.site_at(l, x), beta);
      const BlockedStats f = out.diag.filling(l);
      push("filling_" + std::to_string(l), f.mean, f.stderr_, ref / g.sites_per_layer);
    }
    const BlockedStats de = out.diag.diag_energy();
    push("e_diag", de.mean, de.stderr_, ed.thermal_diag_energy(beta));
    const BlockedStats ke = out.diag.kinetic_energy();
    push("kinetic", ke.mean, ke.stderr_, ed.thermal_kinetic(beta));
  }
  if (out.hist && out.hist->mode() != DnMode::displacements && out.hist->n_records() > 0 &&
      out.hist->n_z() > 0) {
    const bool green = out.hist->mode() == DnMode::green_table;
    for (const TableEntry& e : out.hist->table()) {
      const double ref =
          green ? ed.integrated_green(e.sites[0], e.sites[1], beta)
                : ed.integrated_two_worm(e.sites[0], e.sites[1], e.sites[2], e.sites[3], beta);
      std::string name = green ? "g" : "d2";
      for (int k = 0; k < (green ? 2 : 4); ++k) name += "_" + std::to_string(e.sites[k]);
      push(name, e.value, e.sigma, ref);
    }
  }
  if (oracle_csv) {
    std::vector<SummaryRow> ref_rows;
    for (const EdDiffRow& r : rows) ref_rows.push_back({r.observable, r.ed, 0.0, 0});
    write_summary_csv(*oracle_csv, ref_rows);
  }
  return rows;
}

}  // namespace wormpimc
