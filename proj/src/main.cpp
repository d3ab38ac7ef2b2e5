// Command-line front end: construct a potential with prescribed eigenvalues,
// verify an existing potential file, probe its truncated spectrum, or export
// a window of values.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "embeig/errors.hpp"
#include "embeig/gluer.hpp"
#include "embeig/model.hpp"
#include "embeig/potential.hpp"
#include "embeig/serialize.hpp"
#include "embeig/spectrum.hpp"
#include "embeig/verify.hpp"

namespace {

namespace fs = std::filesystem;
using embeig::Errc;
using embeig::Error;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFile = 2;
constexpr int kExitTolerance = 3;
constexpr int kExitDomain = 4;
constexpr int kExitInternal = 5;

int exit_code_for(Errc c) {
  switch (c) {
    case Errc::parse_error:
    case Errc::io_error:
      return kExitFile;
    default:
      return kExitDomain;
  }
}

void print_error_record(const std::string& code, const std::string& message) {
  nlohmann::json j;
  j["error"]["code"] = code;
  j["error"]["message"] = message;
  std::cerr << j.dump() << "\n";
}

// Accepts both "100..200" and "100:200".
std::pair<std::int64_t, std::int64_t> parse_window(const std::string& s) {
  auto pos = s.find("..");
  std::size_t skip = 2;
  if (pos == std::string::npos) {
    pos = s.find(':');
    skip = 1;
  }
  if (pos == std::string::npos) {
    throw Error(Errc::invalid_parameter,
                "window must look like START..END, got '" + s + "'");
  }
  try {
    std::int64_t lo = std::stoll(s.substr(0, pos));
    std::int64_t hi = std::stoll(s.substr(pos + skip));
    if (hi <= lo) {
      throw Error(Errc::invalid_parameter, "window is empty: '" + s + "'");
    }
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw Error(Errc::invalid_parameter, "cannot parse window '" + s + "'");
  }
}

std::string dense_to_csv(const embeig::SolutionTrace& tr) {
  std::string s = "n,log_radius,angle\n";
  for (std::size_t i = 0; i < tr.dense.size(); ++i) {
    s += std::to_string(tr.dense_start + static_cast<std::int64_t>(i));
    s += ',';
    s += embeig::format_full(tr.dense[i].log_radius);
    s += ',';
    s += embeig::format_full(tr.dense[i].angle);
    s += '\n';
  }
  return s;
}

std::int64_t first_active_site(const embeig::Potential& pot) {
  for (const auto& pc : pot.pieces) {
    if (pc.kind != embeig::PieceKind::zero) return pc.start;
  }
  return 1;
}

struct ConstructArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t horizon = 0;      // 0: from config
  double target_exponent = 0.0;  // 0: from config
  double stop_factor = 0.0;      // 0: from config
  std::string window;
};

int run_construct(const ConstructArgs& a) {
  embeig::RunConfig cfg =
      embeig::config_from_json(embeig::load_json_file(a.config_path));
  if (a.horizon > 0) cfg.horizon = a.horizon;
  if (a.target_exponent > 0.0) cfg.target_exponent = a.target_exponent;
  if (a.stop_factor > 0.0) cfg.stop_factor = a.stop_factor;
  if (!a.window.empty()) {
    auto [lo, hi] = parse_window(a.window);
    cfg.dense_lo = lo;
    cfg.dense_hi = hi;
  }

  std::vector<embeig::BoundaryAngle> angles;
  for (double t : cfg.angles) angles.push_back(embeig::make_boundary_angle(t));

  embeig::PlanOptions popt;
  popt.target_exponent = cfg.target_exponent;
  popt.stop_factor = cfg.stop_factor;
  popt.min_piece_length = cfg.min_piece_length;
  popt.initial_gap = cfg.initial_gap;
  popt.envelope = cfg.envelope;
  embeig::GluingPlan plan =
      embeig::plan(cfg.energies, angles, cfg.mode, popt);

  embeig::BuildOptions bopt;
  bopt.samples_per_decade = cfg.samples_per_decade;
  embeig::GluedResult run = embeig::build(plan, cfg.horizon, bopt);

  fs::create_directories(a.out_dir);
  auto out = [&](const std::string& name) {
    return (fs::path(a.out_dir) / name).string();
  };

  embeig::save_text_file(out("potential.json"),
                         embeig::potential_to_json(run.potential).dump(2) + "\n");
  embeig::save_text_file(out("config.json"),
                         embeig::config_to_json(cfg).dump(2) + "\n");
  for (std::size_t i = 0; i < run.traces.size(); ++i) {
    embeig::save_text_file(out("trace_" + std::to_string(i) + ".csv"),
                           embeig::trace_to_csv(run.traces[i]));
  }
  if (cfg.dense_lo >= 0) {
    for (std::size_t i = 0; i < cfg.energies.size(); ++i) {
      auto ep = embeig::make_energy_point(cfg.energies[i],
                                          run.potential.edge_margin);
      auto tr = embeig::replay_trace(run.potential, ep, angles[i], cfg.dense_lo,
                                     cfg.dense_hi, cfg.samples_per_decade);
      embeig::save_text_file(out("trace_full_" + std::to_string(i) + ".csv"),
                             dense_to_csv(tr));
    }
  }

  std::string log;
  log += "mode " +
         std::string(cfg.mode == embeig::GlueMode::finite ? "finite"
                                                          : "countable") +
         "\n";
  log += "horizon " + std::to_string(cfg.horizon) + "\n";
  log += "initial_gap " + std::to_string(plan.initial_gap) + "\n";
  log += "k2 " + std::to_string(plan.k2) + "\n";
  for (std::size_t c = 0; c < plan.classes.size(); ++c) {
    const auto& cs = plan.classes[c];
    log += "class " + std::to_string(c) + " kind=";
    switch (cs.cls.kind) {
      case embeig::ClassKind::pair:
        log += "pair";
        break;
      case embeig::ClassKind::single:
        log += "single";
        break;
      case embeig::ClassKind::zero:
        log += "zero";
        break;
    }
    log += " energy=" + embeig::format_full(cs.cls.rep.e);
    log += " k1=" + embeig::format_full(cs.k1);
    log += " block=" + std::to_string(cs.block_length);
    log += " bound=" + embeig::format_full(cs.certified_bound);
    log += " gate=" + std::to_string(cs.gate);
    log += " first_piece=" + std::to_string(run.activation_site[c]);
    log += "\n";
  }
  for (const auto& pr : run.piece_log) {
    log += "piece r=" + std::to_string(pr.r) +
           " class=" + std::to_string(pr.class_index) + " [" +
           std::to_string(pr.start) + "," + std::to_string(pr.end) + ")" +
           " block=" + std::to_string(pr.block_length) +
           " drop=" + embeig::format_full(pr.target_drop) +
           " sup_v_scaled=" + embeig::format_full(pr.sup_v_scaled) +
           " numerator=[" + embeig::format_full(pr.numerator_min) + "," +
           embeig::format_full(pr.numerator_max) + "]\n";
  }
  for (const auto& st : run.schedule) {
    log += "step r=" + std::to_string(st.r) + " start=" +
           std::to_string(st.start) + " piece_length=" +
           std::to_string(st.piece_length) + " active=" +
           std::to_string(st.active_classes) + " end=" +
           std::to_string(st.end) + "\n";
  }
  for (std::size_t j = 0; j < run.final_states.size(); ++j) {
    log += "final energy=" + embeig::format_full(cfg.energies[j]) +
           " log_radius=" + embeig::format_full(run.final_states[j].log_radius) +
           " angle=" + embeig::format_full(run.final_states[j].angle) + "\n";
  }
  log += "sup_v_scaled " + embeig::format_full(run.sup_v_scaled) + " at n=" +
         std::to_string(run.sup_v_site) + "\n";
  embeig::save_text_file(out("runlog.txt"), log);

  std::cout << "constructed " << run.potential.pieces.size() << " pieces to n="
            << cfg.horizon << ", sup |V|(1+n) = " << run.sup_v_scaled << "\n"
            << "wrote " << out("potential.json") << "\n";
  return kExitOk;
}

struct VerifyArgs {
  std::string potential_path;
  std::string out_dir;
  double tail_max = 0.01;
  double exponent_max = -1.0;
  std::string window;
  int samples_per_decade = 512;
};

int run_verify(const VerifyArgs& a) {
  nlohmann::json j = embeig::load_json_file(a.potential_path);
  embeig::Potential pot = embeig::potential_from_json(j);

  std::string report;
  bool failed = false;

  embeig::ProbeCheck pc = embeig::check_probes(pot, j);
  report += "probes " + std::to_string(pc.probes_total) + " mismatched " +
            std::to_string(pc.probes_mismatched);
  if (pc.probes_mismatched > 0) {
    report += " first_bad_site=" + std::to_string(pc.first_bad_site);
    failed = true;
  }
  report += pc.probes_mismatched == 0 ? " PASS\n" : " FAIL\n";

  std::int64_t n0 = first_active_site(pot);
  std::int64_t dense_lo = n0;
  std::int64_t dense_hi = std::min<std::int64_t>(pot.horizon, n0 + 8192);
  if (!a.window.empty()) {
    auto [lo, hi] = parse_window(a.window);
    dense_lo = lo;
    dense_hi = std::min<std::int64_t>(hi, pot.horizon);
  }

  for (std::size_t i = 0; i < pot.energies.size(); ++i) {
    auto ep = embeig::make_energy_point(pot.energies[i], pot.edge_margin);
    auto theta = embeig::make_boundary_angle(pot.boundary_angles[i]);
    auto tr = embeig::replay_trace(pot, ep, theta, dense_lo, dense_hi,
                                   a.samples_per_decade);
    auto decay = embeig::decay_exponent(tr, 0, n0, pot.horizon);
    auto l2 = embeig::l2_report(pot, ep, theta);
    auto osc = embeig::oscillatory_sum(tr, 0, dense_lo, dense_hi);

    bool e_ok = decay.slope <= a.exponent_max;
    bool t_ok = l2.last_decade_fraction <= a.tail_max;
    failed = failed || !e_ok || !t_ok;
    report += "energy " + embeig::format_full(pot.energies[i]);
    report += " slope=" + embeig::format_full(decay.slope) +
              (e_ok ? " PASS" : " FAIL(slope)");
    report += " tail_fraction=" + embeig::format_full(l2.last_decade_fraction) +
              (t_ok ? " PASS" : " FAIL(tail)");
    report += " l2_total=" + embeig::format_full(l2.total);
    report += " osc_sup=" + embeig::format_full(osc.sup_abs_partial) +
              " certified_c=" + embeig::format_full(osc.certified_c) +
              " window=[" + std::to_string(dense_lo) + "," +
              std::to_string(dense_hi) + ")";
    report += "\n";
  }
  report += failed ? "verify FAIL\n" : "verify PASS\n";

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    embeig::save_text_file(
        (fs::path(a.out_dir) / "verify_report.txt").string(), report);
  }
  std::cout << report;
  return failed ? kExitTolerance : kExitOk;
}

struct SpectrumArgs {
  std::string potential_path;
  std::string out_dir;
  std::int64_t truncation = 0;
  std::vector<double> targets;
};

int run_spectrum(const SpectrumArgs& a) {
  nlohmann::json j = embeig::load_json_file(a.potential_path);
  embeig::Potential pot = embeig::potential_from_json(j);

  // Explicit targets that match a stored energy reuse its boundary angle;
  // anything else is probed with the Dirichlet condition.
  std::vector<std::pair<double, double>> jobs;  // (energy, angle)
  if (a.targets.empty()) {
    for (std::size_t i = 0; i < pot.energies.size(); ++i) {
      jobs.emplace_back(pot.energies[i], pot.boundary_angles[i]);
    }
  } else {
    for (double e : a.targets) {
      double angle = std::numbers::pi / 2.0;
      for (std::size_t i = 0; i < pot.energies.size(); ++i) {
        if (pot.energies[i] == e) {
          angle = pot.boundary_angles[i];
          break;
        }
      }
      jobs.emplace_back(e, angle);
    }
  }

  std::string report;
  report += "truncation " + std::to_string(a.truncation) + "\n";
  for (const auto& [e, angle] : jobs) {
    double target[] = {e};
    auto rep = embeig::truncated_spectrum(
        pot, embeig::make_boundary_angle(angle), a.truncation, target);
    const auto& t = rep.targets.front();
    report += "target " + embeig::format_full(e);
    report += " nearest=" + embeig::format_full(t.nearest_eigenvalue);
    report += " distance=" + embeig::format_full(t.distance);
    report += " overlap=" + embeig::format_full(t.overlap);
    report += " residual=" + embeig::format_full(t.residual);
    report += " interior_residual=" + embeig::format_full(t.interior_residual);
    report += " boundary_amplitude=" +
              embeig::format_full(t.boundary_amplitude) + "\n";
  }

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    embeig::save_text_file(
        (fs::path(a.out_dir) / "spectrum_report.txt").string(), report);
  }
  std::cout << report;
  return kExitOk;
}

struct ExportArgs {
  std::string potential_path;
  std::string out_path;
  std::string window;
};

int run_export(const ExportArgs& a) {
  embeig::Potential pot =
      embeig::potential_from_json(embeig::load_json_file(a.potential_path));
  auto [lo, hi] = parse_window(a.window);
  if (lo < 0 || hi > pot.horizon) {
    throw Error(Errc::out_of_horizon, "window exceeds [0, horizon)");
  }
  embeig::save_text_file(a.out_path,
                         embeig::potential_window_to_csv(pot, lo, hi));
  std::cout << "wrote " << a.out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Half-line discrete Schrodinger potentials with prescribed eigenvalues "
      "inside [-2, 2]"};
  app.require_subcommand(1);

  ConstructArgs ca;
  auto* construct =
      app.add_subcommand("construct", "Build a potential from a config file");
  construct->add_option("--config", ca.config_path, "Run configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  construct->add_option("--out", ca.out_dir, "Output directory")->required();
  construct->add_option("--horizon", ca.horizon, "Override the horizon");
  construct->add_option("--target-exponent", ca.target_exponent,
                        "Override the decay exponent target");
  construct->add_option("--stop-factor", ca.stop_factor,
                        "Override the per-piece radius drop factor");
  construct->add_option("--full-trace-window", ca.window,
                        "Record every site in START..END");

  VerifyArgs va;
  auto* verify =
      app.add_subcommand("verify", "Re-derive the asserted properties");
  verify->add_option("--potential", va.potential_path, "Potential file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--out", va.out_dir, "Report directory");
  verify->add_option("--tail-max", va.tail_max,
                     "Max fraction of the l2 mass in the last decade");
  verify->add_option("--exponent-max", va.exponent_max,
                     "Max fitted decay slope (more negative is steeper)");
  verify->add_option("--full-trace-window", va.window,
                     "Dense window for the oscillatory sums");
  verify->add_option("--samples-per-decade", va.samples_per_decade,
                     "Sparse trace density");

  SpectrumArgs sa;
  auto* spectrum = app.add_subcommand(
      "spectrum", "Truncated-operator eigenvalues near the targets");
  spectrum->add_option("--potential", sa.potential_path, "Potential file")
      ->required()
      ->check(CLI::ExistingFile);
  spectrum->add_option("--truncation", sa.truncation, "Matrix size")
      ->required();
  spectrum->add_option("--targets", sa.targets, "Energies to probe")
      ->delimiter(',');
  spectrum->add_option("--out", sa.out_dir, "Report directory");

  ExportArgs ea;
  auto* exp = app.add_subcommand("export", "Dump potential values as CSV");
  exp->add_option("--potential", ea.potential_path, "Potential file")
      ->required()
      ->check(CLI::ExistingFile);
  exp->add_option("--window", ea.window, "Site window START..END")->required();
  exp->add_option("--out", ea.out_path, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*construct) return run_construct(ca);
    if (*verify) return run_verify(va);
    if (*spectrum) return run_spectrum(sa);
    if (*exp) return run_export(ea);
    return kExitUsage;
  } catch (const Error& e) {
    print_error_record(embeig::to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    print_error_record("Internal", e.what());
    return kExitInternal;
  }
}
