#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "embeig/errors.hpp"
#include "embeig/generator.hpp"
#include "embeig/gluer.hpp"
#include "embeig/model.hpp"
#include "embeig/potential.hpp"

namespace embeig {

inline constexpr int kPotentialFormatVersion = 1;
inline constexpr int kConfigFormatVersion = 1;

// --- Potential files ------------------------------------------------------------

// Probe offsets within a piece: 0, 1, 2, 4, ..., plus the last site. Probes
// pin a handful of emitted values bitwise, so a reader can prove its replay
// reproduces the writer's numbers exactly.
inline std::vector<std::int64_t> probe_offsets(std::int64_t len) {
  std::vector<std::int64_t> off;
  for (std::int64_t o = 0; o < len && off.size() < 7;
       o = (o == 0 ? 1 : 2 * o)) {
    off.push_back(o);
  }
  if (off.empty() || off.back() != len - 1) off.push_back(len - 1);
  return off;
}

inline std::vector<std::pair<std::int64_t, double>> piece_probes(
    const PotentialPiece& pc) {
  auto offsets = probe_offsets(pc.end - pc.start);
  std::vector<std::pair<std::int64_t, double>> probes;
  probes.reserve(offsets.size());
  PieceCursor cur(pc);
  std::size_t next = 0;
  while (!cur.done() && next < offsets.size()) {
    if (cur.site() - pc.start == offsets[next]) {
      probes.emplace_back(cur.site(), cur.value());
      ++next;
    }
    cur.advance();
  }
  return probes;
}

inline PieceKind piece_kind_from_string(const std::string& s) {
  if (s == "zero") return PieceKind::zero;
  if (s == "single") return PieceKind::single;
  if (s == "pair") return PieceKind::pair;
  throw Error(Errc::parse_error, "unknown piece kind '" + s + "'");
}

inline nlohmann::json potential_to_json(const Potential& pot) {
  nlohmann::json j;
  j["format"] = "embeig-potential";
  j["version"] = kPotentialFormatVersion;
  j["horizon"] = pot.horizon;
  j["edge_margin"] = pot.edge_margin;
  j["sup_v_scaled"] = pot.sup_v_scaled;
  j["energies"] = pot.energies;
  j["boundary_angles"] = pot.boundary_angles;
  nlohmann::json pieces = nlohmann::json::array();
  for (const auto& pc : pot.pieces) {
    nlohmann::json p;
    p["start"] = pc.start;
    p["end"] = pc.end;
    p["kind"] = to_string(pc.kind);
    p["energy"] = pc.energy;
    p["k1"] = pc.k1;
    p["base"] = pc.base;
    p["anchor_angle"] = pc.anchor_angle;
    p["partner_anchor_angle"] = pc.partner_anchor_angle;
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& [n, v] : piece_probes(pc)) {
      probes.push_back(nlohmann::json::array({n, v}));
    }
    p["probes"] = probes;
    pieces.push_back(std::move(p));
  }
  j["pieces"] = std::move(pieces);
  return j;
}

// Structural load. Probe verification is a separate, explicit step so callers
// can report it rather than just trip over it.
inline Potential potential_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "embeig-potential") {
      throw Error(Errc::parse_error, "not a potential file");
    }
    if (j.at("version").get<int>() != kPotentialFormatVersion) {
      throw Error(Errc::parse_error, "unsupported potential format version");
    }
    Potential pot;
    pot.horizon = j.at("horizon").get<std::int64_t>();
    pot.edge_margin = j.at("edge_margin").get<double>();
    pot.sup_v_scaled = j.at("sup_v_scaled").get<double>();
    pot.energies = j.at("energies").get<std::vector<double>>();
    pot.boundary_angles = j.at("boundary_angles").get<std::vector<double>>();
    for (const auto& p : j.at("pieces")) {
      PotentialPiece pc;
      pc.start = p.at("start").get<std::int64_t>();
      pc.end = p.at("end").get<std::int64_t>();
      pc.kind = piece_kind_from_string(p.at("kind").get<std::string>());
      pc.energy = p.at("energy").get<double>();
      pc.k1 = p.at("k1").get<double>();
      pc.base = p.at("base").get<std::int64_t>();
      pc.anchor_angle = p.at("anchor_angle").get<double>();
      pc.partner_anchor_angle = p.at("partner_anchor_angle").get<double>();
      pot.pieces.push_back(pc);
    }
    validate(pot);
    return pot;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("bad potential file: ") + e.what());
  }
}

struct ProbeCheck {
  std::int64_t probes_total = 0;
  std::int64_t probes_mismatched = 0;
  std::int64_t first_bad_site = -1;
};

// Replays every piece and compares the stored probe values bitwise.
inline ProbeCheck check_probes(const Potential& pot, const nlohmann::json& j) {
  ProbeCheck out;
  const auto& pieces = j.at("pieces");
  for (std::size_t i = 0; i < pot.pieces.size(); ++i) {
    auto replayed = piece_probes(pot.pieces[i]);
    const auto& stored = pieces.at(i).at("probes");
    for (std::size_t q = 0; q < stored.size(); ++q) {
      ++out.probes_total;
      std::int64_t n = stored.at(q).at(0).get<std::int64_t>();
      double v = stored.at(q).at(1).get<double>();
      bool ok = q < replayed.size() && replayed[q].first == n &&
                replayed[q].second == v;
      if (!ok) {
        ++out.probes_mismatched;
        if (out.first_bad_site < 0) out.first_bad_site = n;
      }
    }
  }
  return out;
}

// --- Run configuration -----------------------------------------------------------

struct RunConfig {
  std::vector<double> energies;
  std::vector<double> angles;
  GlueMode mode = GlueMode::finite;
  std::int64_t horizon = 1000000;
  double target_exponent = 5.0;
  double stop_factor = 8.0;
  std::int64_t min_piece_length = 64;
  std::int64_t initial_gap = 0;  // 0: automatic
  EnvelopeSpec envelope;
  int samples_per_decade = 512;
  std::int64_t truncation = 0;  // 0: skip the spectral report
  std::int64_t dense_lo = -1;   // full-trace window, half-open
  std::int64_t dense_hi = -1;
};

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["version"] = kConfigFormatVersion;
  j["energies"] = c.energies;
  j["angles"] = c.angles;
  j["mode"] = c.mode == GlueMode::finite ? "finite" : "countable";
  j["horizon"] = c.horizon;
  j["target_exponent"] = c.target_exponent;
  j["stop_factor"] = c.stop_factor;
  j["min_piece_length"] = c.min_piece_length;
  j["initial_gap"] = c.initial_gap;
  nlohmann::json env;
  switch (c.envelope.kind) {
    case EnvelopeSpec::Kind::log:
      env["kind"] = "log";
      break;
    case EnvelopeSpec::Kind::power:
      env["kind"] = "power";
      env["alpha"] = c.envelope.alpha;
      break;
    case EnvelopeSpec::Kind::table: {
      env["kind"] = "table";
      nlohmann::json t = nlohmann::json::array();
      for (const auto& [x, y] : c.envelope.table) {
        t.push_back(nlohmann::json::array({x, y}));
      }
      env["table"] = std::move(t);
      break;
    }
  }
  j["envelope"] = std::move(env);
  j["samples_per_decade"] = c.samples_per_decade;
  j["truncation"] = c.truncation;
  j["full_trace_window"] = nlohmann::json::array({c.dense_lo, c.dense_hi});
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kConfigFormatVersion) {
      throw Error(Errc::parse_error, "unsupported config version");
    }
    RunConfig c;
    c.energies = j.at("energies").get<std::vector<double>>();
    c.angles = j.at("angles").get<std::vector<double>>();
    std::string mode = j.at("mode").get<std::string>();
    if (mode == "finite") {
      c.mode = GlueMode::finite;
    } else if (mode == "countable") {
      c.mode = GlueMode::countable;
    } else {
      throw Error(Errc::parse_error, "mode must be 'finite' or 'countable'");
    }
    c.horizon = j.at("horizon").get<std::int64_t>();
    if (j.contains("target_exponent")) {
      c.target_exponent = j.at("target_exponent").get<double>();
    }
    if (j.contains("stop_factor")) {
      c.stop_factor = j.at("stop_factor").get<double>();
    }
    if (j.contains("min_piece_length")) {
      c.min_piece_length = j.at("min_piece_length").get<std::int64_t>();
    }
    if (j.contains("initial_gap")) {
      c.initial_gap = j.at("initial_gap").get<std::int64_t>();
    }
    if (j.contains("envelope")) {
      const auto& env = j.at("envelope");
      std::string kind = env.at("kind").get<std::string>();
      if (kind == "log") {
        c.envelope.kind = EnvelopeSpec::Kind::log;
      } else if (kind == "power") {
        c.envelope.kind = EnvelopeSpec::Kind::power;
        c.envelope.alpha = env.at("alpha").get<double>();
      } else if (kind == "table") {
        c.envelope.kind = EnvelopeSpec::Kind::table;
        for (const auto& row : env.at("table")) {
          c.envelope.table.emplace_back(row.at(0).get<double>(),
                                        row.at(1).get<double>());
        }
      } else {
        throw Error(Errc::parse_error, "unknown envelope kind '" + kind + "'");
      }
    }
    if (j.contains("samples_per_decade")) {
      c.samples_per_decade = j.at("samples_per_decade").get<int>();
    }
    if (j.contains("truncation")) {
      c.truncation = j.at("truncation").get<std::int64_t>();
    }
    if (j.contains("full_trace_window")) {
      c.dense_lo = j.at("full_trace_window").at(0).get<std::int64_t>();
      c.dense_hi = j.at("full_trace_window").at(1).get<std::int64_t>();
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("bad config file: ") + e.what());
  }
}

// --- Plain files ------------------------------------------------------------------

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, path + ": " + e.what());
  }
}

inline void save_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot open " + path + " for writing");
  out << body;
  if (!out) throw Error(Errc::io_error, "short write to " + path);
}

inline std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Sparse polar trace: one row per retained sample.
inline std::string trace_to_csv(const SolutionTrace& tr) {
  std::string s = "n,log_radius,angle\n";
  for (const auto& sm : tr.samples) {
    s += std::to_string(sm.n);
    s += ',';
    s += format_full(sm.log_radius);
    s += ',';
    s += format_full(sm.angle);
    s += '\n';
  }
  return s;
}

// Potential values on a half-open window.
inline std::string potential_window_to_csv(const Potential& pot,
                                           std::int64_t lo, std::int64_t hi) {
  std::string s = "n,v\n";
  scan_potential(pot, lo, hi, [&](std::int64_t n, double v) {
    s += std::to_string(n);
    s += ',';
    s += format_full(v);
    s += '\n';
  });
  return s;
}

}  // namespace embeig
