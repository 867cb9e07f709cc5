#pragma once

// Config-driven parameter sweeps over the analytic model, the Markov chain and
// the simulator, written as versioned CSV.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdgoodput/analytic.hpp"
#include "rdgoodput/frames.hpp"
#include "rdgoodput/markov.hpp"
#include "rdgoodput/simulator.hpp"

namespace rdgoodput {

inline constexpr std::string_view kCsvSchema = "rdgoodput-sweep/1";

enum class Engine { Analytic, Markov, Simulate };

inline std::string_view to_string(Engine e) {
  switch (e) {
    case Engine::Analytic: return "analytic";
    case Engine::Markov: return "markov";
    case Engine::Simulate: return "simulate";
  }
  return "?";
}

/// An RD(n) entry of the grid: a fixed n, or the largest n the receiver cap allows.
struct NSpec {
  std::optional<std::int64_t> fixed;  // empty means n_max

  std::int64_t resolve(std::int64_t k_d, std::int64_t d) const { return fixed ? *fixed : n_max(k_d, d); }
  std::string label() const { return fixed ? std::to_string(*fixed) : "n_max"; }
  friend bool operator==(const NSpec&, const NSpec&) = default;
};

struct AcOverride {
  std::optional<std::int64_t> cw_min;
  std::optional<std::int64_t> cw_max;
  std::optional<std::int64_t> aifsn;
};

struct ExperimentSpec {
  std::string name;
  Engine engine = Engine::Analytic;

  struct Grid {
    std::vector<AccessCategory> ac;
    std::vector<OperationMode> mode;
    std::vector<NSpec> n;
    std::vector<std::int64_t> k_d;
    std::vector<double> ber;
    std::vector<std::int64_t> d;
    std::vector<Repetition> repetition;
  } grid;

  std::vector<std::uint64_t> seeds{1};

  struct Sim {
    std::optional<std::int64_t> cycles;
    std::optional<std::int64_t> time_us;
    double warmup_fraction = 0.05;
    std::optional<unsigned> retry_limit;
    std::optional<std::int64_t> backlog_m;  // station backlog cap in units of K_D*7 segments
    std::optional<std::int64_t> data_msdus_per_mpdu;
    BackoffPolicy backoff = BackoffPolicy::Redraw;
  } sim;

  int markov_m_cap = 20;
  bool reduce_max_over_k_d = false;
  std::string output;

  PhyProfile phy{};
  std::map<std::pair<AccessCategory, Role>, AcOverride> ac_overrides;

  AcPair ac_params(AccessCategory ac) const {
    AcPair p = ac_pair(ac, phy);
    for (AcParams* side : {&p.ap, &p.station}) {
      auto it = ac_overrides.find({ac, side->role});
      if (it == ac_overrides.end()) continue;
      if (it->second.cw_min) side->cw_min = *it->second.cw_min;
      if (it->second.cw_max) side->cw_max = *it->second.cw_max;
      if (it->second.aifsn) {
        side->aifsn = *it->second.aifsn;
        side->aifs = aifs_for(side->aifsn, phy);
        side->eifs = eifs_for(side->aifs, phy);
      }
    }
    return p;
  }
};

/// A concrete grid point.
struct GridPoint {
  AccessCategory ac;
  OperationMode mode;
  NSpec n_spec;
  std::int64_t n = 0;  // resolved; 0 for No-RD
  std::int64_t k_d;
  double ber;
  std::int64_t d;
  Repetition repetition;
};

struct RunRecord {
  double goodput = 0.0;
  double mean_txop = 0.0;
  double mean_mpdus_per_tx = 0.0;
  std::optional<std::int64_t> collisions;
  std::optional<std::int64_t> acked_segments;
};

struct SpecError : std::runtime_error {
  std::vector<std::string> violations;
  explicit SpecError(std::vector<std::string> v)
      : std::runtime_error(join(v)), violations(std::move(v)) {}

  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid experiment spec";
    for (const auto& x : v) s += "\n  " + x;
    return s;
  }
};

struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

template <typename T, typename Parse>
std::vector<T> parse_list(const json& j, const std::string& field, std::vector<std::string>& errs, Parse&& one) {
  std::vector<T> out;
  const json* items = &j;
  json expanded;
  if (j.is_object() && j.contains("from") && j.contains("to")) {
    // {"from": a, "to": b, "step": s} for integer ranges
    if (!j["from"].is_number_integer() || !j["to"].is_number_integer()) {
      errs.push_back(field + ": range bounds must be integers");
      return out;
    }
    const auto step = j.value("step", std::int64_t{1});
    if (step < 1) {
      errs.push_back(field + ": range step must be >= 1");
      return out;
    }
    expanded = json::array();
    for (auto v = j["from"].get<std::int64_t>(); v <= j["to"].get<std::int64_t>(); v += step) expanded.push_back(v);
    items = &expanded;
  } else if (!j.is_array()) {
    expanded = json::array({j});
    items = &expanded;
  }
  for (std::size_t i = 0; i < items->size(); ++i) {
    const std::string where = field + "[" + std::to_string(i) + "]";
    try {
      if (auto v = one((*items)[i], where, errs)) out.push_back(*v);
    } catch (const std::exception& e) {
      errs.push_back(where + ": " + e.what());
    }
  }
  return out;
}

inline std::optional<std::int64_t> as_int(const json& j, const std::string& where, std::vector<std::string>& errs) {
  if (!j.is_number_integer()) {
    errs.push_back(where + ": expected an integer");
    return std::nullopt;
  }
  return j.get<std::int64_t>();
}

inline std::optional<double> as_number(const json& j, const std::string& where, std::vector<std::string>& errs) {
  if (!j.is_number()) {
    errs.push_back(where + ": expected a number");
    return std::nullopt;
  }
  return j.get<double>();
}

inline std::optional<std::string> as_string(const json& j, const std::string& where, std::vector<std::string>& errs) {
  if (!j.is_string()) {
    errs.push_back(where + ": expected a string");
    return std::nullopt;
  }
  return j.get<std::string>();
}

inline void parse_phy(const json& j, PhyProfile& phy, std::vector<std::string>& errs) {
  if (!j.is_object()) {
    errs.push_back("non_standard.phy: expected an object");
    return;
  }
  auto dur = [&](const char* key, Duration& target) {
    if (!j.contains(key)) return;
    if (auto v = as_number(j[key], std::string("non_standard.phy.") + key, errs))
      target = Duration::tenths(static_cast<std::int64_t>(std::llround(*v * 10.0)));
  };
  dur("slot_us", phy.slot_time);
  dur("sifs_us", phy.sifs);
  dur("preamble_us", phy.preamble);
  dur("symbol_us", phy.t_sym);
  dur("back_us", phy.back_time);
  dur("ack_us", phy.ack_time);
  dur("cf_end_us", phy.cf_end_time);
  dur("eifs_ack_us", phy.eifs_ack_time);
  if (j.contains("rate_mbps"))
    if (auto v = as_number(j["rate_mbps"], "non_standard.phy.rate_mbps", errs))
      phy.data_rate = Rate::mbps_tenths(static_cast<std::int64_t>(std::llround(*v * 10.0)));
  if (j.contains("bits_per_symbol_factor"))
    if (auto v = as_int(j["bits_per_symbol_factor"], "non_standard.phy.bits_per_symbol_factor", errs))
      phy.bits_per_symbol_factor = *v;
  if (j.contains("tail_bits"))
    if (auto v = as_int(j["tail_bits"], "non_standard.phy.tail_bits", errs)) phy.service_tail_bits = *v;
  static const std::vector<std::string> known{"slot_us", "sifs_us",    "preamble_us", "symbol_us",
                                              "back_us", "ack_us",     "cf_end_us",   "eifs_ack_us",
                                              "rate_mbps", "bits_per_symbol_factor", "tail_bits"};
  for (const auto& [k, _] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) errs.push_back("non_standard.phy." + k + ": unknown key");
  try {
    phy.validate();
  } catch (const std::exception& e) {
    errs.push_back(std::string("non_standard.phy: ") + e.what());
  }
}

inline void parse_ac_overrides(const json& j, ExperimentSpec& s, std::vector<std::string>& errs) {
  if (!j.is_object()) {
    errs.push_back("non_standard.ac: expected an object");
    return;
  }
  for (const auto& [name, roles] : j.items()) {
    const std::string base = "non_standard.ac." + name;
    AccessCategory ac;
    try {
      ac = parse_access_category(name);
    } catch (const std::exception&) {
      errs.push_back(base + ": not one of BK, BE, VI, VO");
      continue;
    }
    for (const auto& [role_name, fields] : roles.items()) {
      const std::string where = base + "." + role_name;
      Role role;
      if (role_name == "ap") role = Role::AP;
      else if (role_name == "station") role = Role::Station;
      else {
        errs.push_back(where + ": role must be \"ap\" or \"station\"");
        continue;
      }
      AcOverride o;
      for (const auto& [k, v] : fields.items()) {
        auto iv = as_int(v, where + "." + k, errs);
        if (!iv) continue;
        if (k == "cw_min") o.cw_min = iv;
        else if (k == "cw_max") o.cw_max = iv;
        else if (k == "aifsn") o.aifsn = iv;
        else errs.push_back(where + "." + k + ": unknown key");
      }
      const auto def = ac_table(ac, role, s.phy);
      const auto cw_min = o.cw_min.value_or(def.cw_min);
      const auto cw_max = o.cw_max.value_or(def.cw_max);
      if (cw_min < 1) errs.push_back(where + ".cw_min: must be >= 1");
      if (cw_max < cw_min) errs.push_back(where + ".cw_max: must be >= cw_min");
      if (o.aifsn && *o.aifsn < 1) errs.push_back(where + ".aifsn: must be >= 1");
      s.ac_overrides[{ac, role}] = o;
    }
  }
}

}  // namespace detail

/// Parses a spec document; structural and type problems come back as
/// violations rather than exceptions.
inline ExperimentSpec parse_spec(const nlohmann::json& j, std::vector<std::string>& errs) {
  using namespace detail;
  ExperimentSpec s;
  if (!j.is_object()) {
    errs.push_back("spec: expected a JSON object");
    return s;
  }
  static const std::vector<std::string> known{"$schema", "name",  "engine",       "grid",  "seeds", "sim",
                                              "markov",  "reduce", "non_standard", "output"};
  for (const auto& [k, _] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) errs.push_back(k + ": unknown key");

  if (auto v = j.contains("name") ? as_string(j["name"], "name", errs) : std::nullopt) s.name = *v;
  if (s.name.empty()) errs.push_back("name: must be a nonempty string");

  if (!j.contains("engine")) {
    errs.push_back("engine: missing");
  } else if (auto e = as_string(j["engine"], "engine", errs)) {
    if (*e == "analytic") s.engine = Engine::Analytic;
    else if (*e == "markov") s.engine = Engine::Markov;
    else if (*e == "simulate") s.engine = Engine::Simulate;
    else errs.push_back("engine: must be analytic, markov or simulate, got \"" + *e + "\"");
  }

  // non_standard first so the EDCA defaults see the overridden PHY
  if (j.contains("non_standard")) {
    const auto& ns = j["non_standard"];
    if (!ns.is_object()) {
      errs.push_back("non_standard: expected an object");
    } else {
      for (const auto& [k, _] : ns.items())
        if (k != "phy" && k != "ac") errs.push_back("non_standard." + k + ": unknown key");
      if (ns.contains("phy")) parse_phy(ns["phy"], s.phy, errs);
      if (ns.contains("ac")) parse_ac_overrides(ns["ac"], s, errs);
    }
  }

  if (!j.contains("grid") || !j["grid"].is_object()) {
    errs.push_back("grid: missing or not an object");
  } else {
    const auto& g = j["grid"];
    static const std::vector<std::string> gk{"ac", "mode", "n", "k_d", "ber", "d", "repetition"};
    for (const auto& [k, _] : g.items())
      if (std::find(gk.begin(), gk.end(), k) == gk.end()) errs.push_back("grid." + k + ": unknown key");
    auto field = [&](const char* k, nlohmann::json def) { return g.contains(k) ? g[k] : def; };

    s.grid.ac = parse_list<AccessCategory>(field("ac", {"BE"}), "grid.ac", errs,
                                           [](const json& v, const std::string& w, auto& e) -> std::optional<AccessCategory> {
                                             auto str = as_string(v, w, e);
                                             if (!str) return std::nullopt;
                                             try {
                                               return parse_access_category(*str);
                                             } catch (const std::exception&) {
                                               e.push_back(w + ": \"" + *str + "\" is not one of BK, BE, VI, VO");
                                               return std::nullopt;
                                             }
                                           });
    s.grid.mode = parse_list<OperationMode>(field("mode", {"rd"}), "grid.mode", errs,
                                            [](const json& v, const std::string& w, auto& e) -> std::optional<OperationMode> {
                                              auto str = as_string(v, w, e);
                                              if (!str) return std::nullopt;
                                              if (*str == "rd") return OperationMode::RD;
                                              if (*str == "nord") return OperationMode::NoRD;
                                              e.push_back(w + ": mode must be \"rd\" or \"nord\"");
                                              return std::nullopt;
                                            });
    s.grid.n = parse_list<NSpec>(field("n", {1}), "grid.n", errs,
                                 [](const json& v, const std::string& w, auto& e) -> std::optional<NSpec> {
                                   if (v.is_string() && v.get<std::string>() == "n_max") return NSpec{};
                                   auto i = as_int(v, w, e);
                                   if (!i) return std::nullopt;
                                   if (*i < 1) {
                                     e.push_back(w + ": n must be >= 1");
                                     return std::nullopt;
                                   }
                                   return NSpec{i};
                                 });
    if (!g.contains("k_d")) errs.push_back("grid.k_d: missing");
    s.grid.k_d = parse_list<std::int64_t>(field("k_d", json::array()), "grid.k_d", errs,
                                          [](const json& v, const std::string& w, auto& e) -> std::optional<std::int64_t> {
                                            auto i = as_int(v, w, e);
                                            if (i && (*i < 1 || *i > kMaxMpdusPerAmpdu)) {
                                              e.push_back(w + ": k_d must be in [1, 64]");
                                              return std::nullopt;
                                            }
                                            return i;
                                          });
    s.grid.ber = parse_list<double>(field("ber", {0.0}), "grid.ber", errs,
                                    [](const json& v, const std::string& w, auto& e) -> std::optional<double> {
                                      auto x = as_number(v, w, e);
                                      if (x && !(*x >= 0.0 && *x < 1.0)) {
                                        e.push_back(w + ": ber must be in [0, 1)");
                                        return std::nullopt;
                                      }
                                      return x;
                                    });
    s.grid.d = parse_list<std::int64_t>(field("d", {1}), "grid.d", errs,
                                        [](const json& v, const std::string& w, auto& e) -> std::optional<std::int64_t> {
                                          auto i = as_int(v, w, e);
                                          if (i && *i != 1 && *i != 2) {
                                            e.push_back(w + ": d must be 1 or 2");
                                            return std::nullopt;
                                          }
                                          return i;
                                        });
    s.grid.repetition = parse_list<Repetition>(
        field("repetition", {"off"}), "grid.repetition", errs,
        [](const json& v, const std::string& w, auto& e) -> std::optional<Repetition> {
          auto str = as_string(v, w, e);
          if (!str) return std::nullopt;
          if (*str == "off") return Repetition::Off;
          if (*str == "first3_twice") return Repetition::First3Twice;
          e.push_back(w + ": repetition must be \"off\" or \"first3_twice\"");
          return std::nullopt;
        });
  }

  if (j.contains("seeds")) {
    s.seeds = parse_list<std::uint64_t>(j["seeds"], "seeds", errs,
                                        [](const json& v, const std::string& w, auto& e) -> std::optional<std::uint64_t> {
                                          if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
                                            e.push_back(w + ": seeds must be nonnegative integers");
                                            return std::nullopt;
                                          }
                                          return v.get<std::uint64_t>();
                                        });
  }

  if (j.contains("sim")) {
    const auto& sim = j["sim"];
    for (const auto& [k, v] : sim.items()) {
      const std::string w = "sim." + k;
      if (k == "cycles") {
        s.sim.cycles = as_int(v, w, errs);
      } else if (k == "time_us") {
        s.sim.time_us = as_int(v, w, errs);
      } else if (k == "warmup_fraction") {
        if (auto x = as_number(v, w, errs)) s.sim.warmup_fraction = *x;
      } else if (k == "retry_limit") {
        if (auto x = as_int(v, w, errs)) {
          if (*x < 1) errs.push_back(w + ": must be >= 1");
          else s.sim.retry_limit = static_cast<unsigned>(*x);
        }
      } else if (k == "backlog_m") {
        s.sim.backlog_m = as_int(v, w, errs);
      } else if (k == "data_msdus_per_mpdu") {
        s.sim.data_msdus_per_mpdu = as_int(v, w, errs);
      } else if (k == "backoff") {
        auto str = as_string(v, w, errs);
        if (str && *str == "redraw") s.sim.backoff = BackoffPolicy::Redraw;
        else if (str && *str == "freeze") s.sim.backoff = BackoffPolicy::Freeze;
        else if (str) errs.push_back(w + ": must be \"redraw\" or \"freeze\"");
      } else {
        errs.push_back(w + ": unknown key");
      }
    }
    if (s.sim.cycles && *s.sim.cycles < 1) errs.push_back("sim.cycles: must be >= 1");
    if (s.sim.time_us && *s.sim.time_us < 1) errs.push_back("sim.time_us: must be >= 1");
    if (s.sim.cycles && s.sim.time_us) errs.push_back("sim: give either cycles or time_us, not both");
    if (!(s.sim.warmup_fraction >= 0.0 && s.sim.warmup_fraction < 1.0))
      errs.push_back("sim.warmup_fraction: must be in [0, 1)");
    if (s.sim.backlog_m && *s.sim.backlog_m < 1) errs.push_back("sim.backlog_m: must be >= 1");
    if (s.sim.data_msdus_per_mpdu &&
        (*s.sim.data_msdus_per_mpdu < 1 || *s.sim.data_msdus_per_mpdu > data_geometry().msdus_per_mpdu))
      errs.push_back("sim.data_msdus_per_mpdu: must be in [1, " + std::to_string(data_geometry().msdus_per_mpdu) + "]");
  }

  if (j.contains("markov")) {
    for (const auto& [k, v] : j["markov"].items()) {
      if (k == "m_cap") {
        if (auto x = as_int(v, "markov.m_cap", errs)) {
          if (*x < 1) errs.push_back("markov.m_cap: must be >= 1");
          else s.markov_m_cap = static_cast<int>(*x);
        }
      } else {
        errs.push_back("markov." + k + ": unknown key");
      }
    }
  }

  if (j.contains("reduce")) {
    const auto& r = j["reduce"];
    if (!r.is_object() || !r.contains("max_over") || r["max_over"] != "k_d")
      errs.push_back("reduce: only {\"max_over\": \"k_d\"} is supported");
    else
      s.reduce_max_over_k_d = true;
  }

  if (j.contains("output"))
    if (auto v = as_string(j["output"], "output", errs)) s.output = *v;
  return s;
}

/// Semantic checks; never runs an engine.
inline std::vector<std::string> validate(const ExperimentSpec& s) {
  std::vector<std::string> v;
  const auto& g = s.grid;
  auto nonempty = [&](bool empty, const char* f) {
    if (empty) v.push_back(std::string("grid.") + f + ": empty");
  };
  nonempty(g.ac.empty(), "ac");
  nonempty(g.mode.empty(), "mode");
  nonempty(g.n.empty(), "n");
  nonempty(g.k_d.empty(), "k_d");
  nonempty(g.ber.empty(), "ber");
  nonempty(g.d.empty(), "d");
  nonempty(g.repetition.empty(), "repetition");

  const bool has_rd = std::find(g.mode.begin(), g.mode.end(), OperationMode::RD) != g.mode.end();
  const std::int64_t y = s.sim.data_msdus_per_mpdu.value_or(data_geometry().msdus_per_mpdu);
  if (has_rd) {
    for (const auto& n : g.n) {
      if (!n.fixed) continue;
      for (auto k : g.k_d)
        for (auto d : g.d) {
          const std::int64_t cap = d * kMaxMpdusPerAmpdu * ack_geometry().msdus_per_mpdu;
          if (*n.fixed * k * y > cap)
            v.push_back("grid.n: n=" + std::to_string(*n.fixed) + ", k_d=" + std::to_string(k) + ", d=" +
                        std::to_string(d) + " gives " + std::to_string(*n.fixed * k * y) +
                        " segments per TXOP, exceeding the cap " + std::to_string(cap));
        }
    }
  }

  if (s.engine != Engine::Simulate) {
    for (auto b : g.ber)
      if (b > 0.0) v.push_back("grid.ber: ber > 0 needs engine=simulate (" + std::string(to_string(s.engine)) + " is error-free)");
    for (auto r : g.repetition)
      if (r != Repetition::Off) v.push_back("grid.repetition: repetition needs engine=simulate");
  }
  if (s.engine == Engine::Markov) {
    if (has_rd) v.push_back("grid.mode: engine=markov models No-RD only");
    for (auto d : g.d)
      if (d != 1) v.push_back("grid.d: engine=markov models d=1 only");
  }
  const bool uses_chain = s.engine != Engine::Simulate &&
                          std::find(g.mode.begin(), g.mode.end(), OperationMode::NoRD) != g.mode.end();
  if (uses_chain)
    for (auto k : g.k_d)
      if (s.markov_m_cap * k * data_geometry().msdus_per_mpdu > kMaxMpdusPerAmpdu * ack_geometry().msdus_per_mpdu)
        v.push_back("markov.m_cap: m_cap*k_d*7 exceeds one station transmission for k_d=" + std::to_string(k));
  if (s.engine == Engine::Simulate && s.seeds.empty()) v.push_back("seeds: empty");
  return v;
}

/// Full expansion in deterministic order: ac, mode, d, ber, repetition, n, k_d.
inline std::vector<GridPoint> expand_grid(const ExperimentSpec& s) {
  std::vector<GridPoint> out;
  const auto& g = s.grid;
  for (auto ac : g.ac)
    for (auto mode : g.mode)
      for (auto d : g.d)
        for (auto ber : g.ber)
          for (auto rep : g.repetition) {
            std::vector<NSpec> ns = mode == OperationMode::RD ? g.n : std::vector<NSpec>{NSpec{std::int64_t{0}}};
            for (const auto& n : ns)
              for (auto k : g.k_d) {
                GridPoint p{ac, mode, n, 0, k, ber, d, rep};
                if (mode == OperationMode::RD) p.n = n.resolve(k, d);
                out.push_back(p);
              }
          }
  return out;
}

inline SimConfig sim_config(const ExperimentSpec& s, const GridPoint& p, std::uint64_t seed) {
  SimConfig c;
  c.mode = p.mode;
  c.n = p.mode == OperationMode::RD ? p.n : 1;
  c.ac = s.ac_params(p.ac);
  c.k_d = p.k_d;
  c.ber = p.ber;
  c.repetition = p.repetition;
  c.delayed_acks = p.d;
  c.retry_limit = s.sim.retry_limit;
  c.cycles = s.sim.cycles;
  if (s.sim.time_us) c.sim_time = Duration::micros(*s.sim.time_us);
  c.warmup_fraction = s.sim.warmup_fraction;
  c.seed = seed;
  c.backoff = s.sim.backoff;
  if (s.sim.data_msdus_per_mpdu) c.data_msdus_per_mpdu = *s.sim.data_msdus_per_mpdu;
  if (s.sim.backlog_m && p.mode == OperationMode::NoRD) c.station_backlog_cap = *s.sim.backlog_m * p.k_d * c.data_msdus_per_mpdu;
  c.phy = s.phy;
  return c;
}

inline RunRecord run_point(const ExperimentSpec& s, const GridPoint& p, std::uint64_t seed) {
  RunRecord r;
  if (s.engine == Engine::Simulate) {
    const auto res = simulate(sim_config(s, p, seed));
    r.goodput = res.goodput;
    r.mean_txop = res.mean_txop;
    r.mean_mpdus_per_tx = res.mean_mpdus_per_tx;
    r.collisions = res.collisions;
    r.acked_segments = res.acked_segments;
    return r;
  }
  if (p.mode == OperationMode::RD) {
    RdConfig c;
    c.ac = s.ac_params(p.ac);
    c.k_d = p.k_d;
    c.n = p.n;
    c.delayed_acks = p.d;
    const auto b = cycle(c, s.phy);
    r.goodput = b.goodput;
    r.mean_txop = b.cycle.us();
    r.mean_mpdus_per_tx = static_cast<double>(p.k_d);
    r.collisions = 0;
    return r;
  }
  const auto model = build_chain(s.ac_params(p.ac), static_cast<int>(p.k_d), s.markov_m_cap);
  const auto pi = solve(model);
  const auto metrics = state_metrics(model, s.phy, pi.pi);
  double mean_time = 0.0;
  for (const auto& m : metrics) mean_time += m.stationary_prob * m.time.us();
  r.goodput = goodput(metrics);
  r.mean_txop = mean_time;
  r.mean_mpdus_per_tx = static_cast<double>(p.k_d);
  return r;
}

/// Fixed 6 significant digits, independent of the global locale.
inline std::string format_g6(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

inline std::string default_output_path(const ExperimentSpec& s) { return s.output.empty() ? s.name + ".csv" : s.output; }

/// Runs `count` independent jobs on at most `workers` threads. The first
/// exception thrown by a job is rethrown after all threads have joined.
template <typename Job>
void parallel_for(std::size_t count, unsigned workers, Job&& job) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

/// Validates, runs every grid point x seed and writes the CSV to `out`.
inline void run_experiment(const ExperimentSpec& s, std::ostream& out, unsigned workers = 1) {
  if (auto v = validate(s); !v.empty()) throw SpecError(std::move(v));
  const auto points = expand_grid(s);
  const bool seeded = s.engine == Engine::Simulate;
  const std::vector<std::uint64_t> seeds = seeded ? s.seeds : std::vector<std::uint64_t>{0};
  std::vector<RunRecord> records(points.size() * seeds.size());

  try {
    parallel_for(records.size(), workers, [&](std::size_t i) {
      records[i] = run_point(s, points[i / seeds.size()], seeds[i % seeds.size()]);
    });
  } catch (const std::exception& e) {
    throw EngineError(std::string("engine failure: ") + e.what());
  }

  auto opt = [](const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string(); };
  auto prefix = [&](std::string_view kind, const GridPoint& p) {
    std::string row(kind);
    row += ',' + std::string(to_string(s.engine)) + ',' + std::string(to_string(p.ac)) + ',' +
           std::string(to_string(p.mode)) + ',' + (p.mode == OperationMode::RD ? p.n_spec.label() : "") + ',' +
           (p.mode == OperationMode::RD ? std::to_string(p.n) : "") + ',' + std::to_string(p.k_d) + ',' +
           std::to_string(p.d) + ',' + format_g6(p.ber) + ',' + std::string(to_string(p.repetition));
    return row;
  };

  out << "# schema: " << kCsvSchema << '\n';
  out << "# name: " << s.name << '\n';
  out << "row,engine,ac,mode,n_spec,n,k_d,d,ber,repetition,seed,goodput_mbps,stderr_mbps,mean_txop_us,"
         "mean_mpdus_per_tx,collisions,acked_segments\n";

  std::vector<double> means(points.size());
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const auto& p = points[pi];
    double sum = 0.0, txop = 0.0, mpdus = 0.0;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const auto& r = records[pi * seeds.size() + si];
      sum += r.goodput;
      txop += r.mean_txop;
      mpdus += r.mean_mpdus_per_tx;
      out << prefix("run", p) << ',' << (seeded ? std::to_string(seeds[si]) : "") << ',' << format_g6(r.goodput)
          << ",," << format_g6(r.mean_txop) << ',' << format_g6(r.mean_mpdus_per_tx) << ',' << opt(r.collisions)
          << ',' << opt(r.acked_segments) << '\n';
    }
    const double k = static_cast<double>(seeds.size());
    const double mean = sum / k;
    double var = 0.0;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const double dx = records[pi * seeds.size() + si].goodput - mean;
      var += dx * dx;
    }
    const double stderr_ = seeds.size() > 1 ? std::sqrt(var / (k - 1.0) / k) : 0.0;
    means[pi] = mean;
    out << prefix("mean", p) << ",," << format_g6(mean) << ',' << format_g6(stderr_) << ',' << format_g6(txop / k)
        << ',' << format_g6(mpdus / k) << ",,\n";
  }

  if (s.reduce_max_over_k_d) {
    // Points differing only in k_d are contiguous in expansion order.
    std::size_t i = 0;
    while (i < points.size()) {
      std::size_t best = i, j = i;
      for (; j < points.size() && j < i + s.grid.k_d.size(); ++j)
        if (means[j] > means[best]) best = j;
      out << prefix("max", points[best]) << ",," << format_g6(means[best]) << ",,,,,\n";
      i = j;
    }
  }
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError({path + ": " + e.what()});
  }
}

/// Loads and parses a spec file; throws SpecError listing every problem found.
inline ExperimentSpec load_spec(const std::string& path) {
  const auto j = load_json_file(path);
  std::vector<std::string> errs;
  auto s = parse_spec(j, errs);
  if (!errs.empty()) throw SpecError(std::move(errs));
  return s;
}

}  // namespace rdgoodput
