#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rdgoodput/rdgoodput.hpp"

namespace {

using namespace rdgoodput;
using nlohmann::json;

struct PointOptions {
  std::string ac = "BE";
  std::int64_t k_d = 64;
  std::string n = "1";
  std::int64_t d = 1;
};

void add_point_options(CLI::App* cmd, PointOptions& o) {
  cmd->add_option("--ac", o.ac, "Access category (BK, BE, VI, VO)")->capture_default_str();
  cmd->add_option("--k-d", o.k_d, "MPDUs per AP A-MPDU")->capture_default_str()->check(CLI::Range(1, 64));
  cmd->add_option("--n", o.n, "AP transmissions per TXOP, or n_max")->capture_default_str();
  cmd->add_option("--d", o.d, "Data segments per TCP Ack")->capture_default_str()->check(CLI::IsMember({1, 2}));
}

std::int64_t resolve_n(const PointOptions& o) {
  if (o.n == "n_max") return n_max(o.k_d, o.d);
  try {
    return std::stoll(o.n);
  } catch (const std::exception&) {
    throw std::invalid_argument("--n must be an integer or n_max, got " + o.n);
  }
}

unsigned worker_count(unsigned flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("RDGOODPUT_WORKERS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "ignoring RDGOODPUT_WORKERS=" << env << '\n';
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

json to_json(const SimResult& r) {
  return {{"goodput_mbps", r.goodput},
          {"delivered_segments", r.delivered_segments},
          {"acked_segments", r.acked_segments},
          {"discarded_segments", r.discarded_segments},
          {"collisions", r.collisions},
          {"cycles", r.cycles},
          {"ap_transmissions", r.ap_transmissions},
          {"station_transmissions", r.station_transmissions},
          {"retransmissions", r.retransmissions},
          {"dropped_mpdus", r.dropped_mpdus},
          {"mean_txop_us", r.mean_txop},
          {"mean_mpdus_per_tx", r.mean_mpdus_per_tx},
          {"elapsed_us", r.elapsed.us()},
          {"airtime_us",
           {{"data", r.airtime_of(TimeCategory::Data).us()},
            {"acks", r.airtime_of(TimeCategory::Acks).us()},
            {"overhead", r.airtime_of(TimeCategory::Overhead).us()},
            {"collision", r.airtime_of(TimeCategory::Collision).us()}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TCP goodput over 802.11ac with Two-Level aggregation and Reverse Direction"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 1;
  std::string output;
  unsigned workers = 0;
  app.add_option("--seed", seed, "Random seed (simulate; replaces the seed list of a sweep)");
  app.add_option("-o,--output", output, "Output path");
  app.add_option("-w,--workers", workers, "Worker threads for sweeps (env RDGOODPUT_WORKERS)");

  // analytic
  PointOptions an;
  bool frontier = false;
  auto* analytic_cmd = app.add_subcommand("analytic", "Closed-form RD(n) cycle and goodput");
  add_point_options(analytic_cmd, an);
  analytic_cmd->add_flag("--frontier", frontier, "Print maximum goodput vs TXOP duration");

  // markov
  PointOptions mk;
  int m_cap = 20;
  std::string variant;
  auto* markov_cmd = app.add_subcommand("markov", "No-RD Markov chain goodput");
  markov_cmd->add_option("--ac", mk.ac, "Access category")->capture_default_str();
  markov_cmd->add_option("--k-d", mk.k_d, "MPDUs per AP A-MPDU")->capture_default_str()->check(CLI::Range(1, 64));
  markov_cmd->add_option("--m-cap", m_cap, "Largest number of pending Ack blocks")->capture_default_str();
  markov_cmd->add_option("--variant", variant, "symmetric or asymmetric (default by AIFS)")
      ->check(CLI::IsMember({"symmetric", "asymmetric"}));

  // simulate
  PointOptions sm;
  std::string mode = "rd", repetition = "off", backoff = "redraw", trace_path;
  double ber = 0.0;
  std::int64_t cycles = 0, time_us = 0, backlog_m = 0, msdus = 0;
  unsigned retry_limit = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "Discrete-event simulation of one configuration");
  add_point_options(sim_cmd, sm);
  sim_cmd->add_option("--mode", mode, "rd or nord")->capture_default_str()->check(CLI::IsMember({"rd", "nord"}));
  sim_cmd->add_option("--ber", ber, "Bit error rate")->capture_default_str();
  sim_cmd->add_option("--repetition", repetition, "off or first3_twice")
      ->capture_default_str()
      ->check(CLI::IsMember({"off", "first3_twice"}));
  sim_cmd->add_option("--cycles", cycles, "TXOPs (RD) or contention rounds (No-RD) to simulate");
  sim_cmd->add_option("--time-us", time_us, "Simulated time in microseconds (default 1 s)");
  sim_cmd->add_option("--retry-limit", retry_limit, "MAC retry limit (default unlimited)");
  sim_cmd->add_option("--backlog-m", backlog_m, "No-RD station backlog cap in units of K_D*7 segments");
  sim_cmd->add_option("--msdus-per-mpdu", msdus, "Data MSDUs per MPDU (default: capacity)");
  sim_cmd->add_option("--backoff", backoff, "redraw or freeze")->check(CLI::IsMember({"redraw", "freeze"}));
  sim_cmd->add_option("--trace", trace_path, "Write the per-event trace to this file");

  // sweep / validate
  std::string spec_path;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment spec and write CSV");
  sweep_cmd->add_option("spec", spec_path, "Spec file (JSON)")->required();
  auto* validate_cmd = app.add_subcommand("validate", "Check an experiment spec without running it");
  validate_cmd->add_option("spec", spec_path, "Spec file (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analytic_cmd) {
      const auto ac = ac_pair(parse_access_category(an.ac));
      const PhyProfile phy;
      if (frontier) {
        std::cout << "txop_us,goodput_mbps,segments\n";
        const auto grid = full_segment_grid(an.d);
        for (const auto& p : max_goodput_vs_txop(ac.ap, phy, an.d, grid))
          std::cout << format_g6(p.txop.us()) << ',' << format_g6(p.goodput) << ',' << p.segments << '\n';
        return 0;
      }
      RdConfig c;
      c.ac = ac;
      c.k_d = an.k_d;
      c.n = resolve_n(an);
      c.delayed_acks = an.d;
      const auto b = cycle(c, phy);
      json j{{"ac", an.ac},          {"k_d", c.k_d},
             {"n", c.n},             {"d", c.delayed_acks},
             {"c_overhead_us", b.c_overhead.us()}, {"t_ap_us", b.t_ap.us()},
             {"t_sta_us", b.t_sta.us()},           {"k_a", b.k_a},
             {"ack_msdus", b.ack_msdus},           {"cycle_us", b.cycle.us()},
             {"goodput_mbps", b.goodput},          {"goodput_closed_form_mbps", goodput_closed_form(c, phy)}};
      std::cout << j.dump(2) << '\n';
      return 0;
    }

    if (*markov_cmd) {
      std::optional<MarkovVariant> v;
      if (variant == "symmetric") v = MarkovVariant::Symmetric;
      if (variant == "asymmetric") v = MarkovVariant::Asymmetric;
      const auto model = build_chain(ac_pair(parse_access_category(mk.ac)), static_cast<int>(mk.k_d), m_cap, v);
      const auto pi = solve(model);
      const auto metrics = state_metrics(model, PhyProfile{}, pi.pi);
      json j{{"ac", mk.ac},
             {"k_d", mk.k_d},
             {"m_cap", m_cap},
             {"model", model.describe()},
             {"states", model.states.size()},
             {"first_draw_collision_probability", first_draw_collision_probability(model)},
             {"iterations", pi.iterations},
             {"residual", pi.residual},
             {"goodput_mbps", goodput(metrics)}};
      std::cout << j.dump(2) << '\n';
      return 0;
    }

    if (*sim_cmd) {
      SimConfig c;
      c.mode = mode == "rd" ? OperationMode::RD : OperationMode::NoRD;
      c.ac = ac_pair(parse_access_category(sm.ac));
      c.k_d = sm.k_d;
      c.n = c.mode == OperationMode::RD ? resolve_n(sm) : 1;
      c.delayed_acks = sm.d;
      c.ber = ber;
      c.repetition = repetition == "off" ? Repetition::Off : Repetition::First3Twice;
      c.seed = seed;
      c.backoff = backoff == "freeze" ? BackoffPolicy::Freeze : BackoffPolicy::Redraw;
      if (cycles > 0) c.cycles = cycles;
      if (time_us > 0) c.sim_time = Duration::micros(time_us);
      if (retry_limit > 0) c.retry_limit = retry_limit;
      if (msdus > 0) c.data_msdus_per_mpdu = msdus;
      if (backlog_m > 0) c.station_backlog_cap = backlog_m * c.k_d * c.data_msdus_per_mpdu;
      std::ofstream trace;
      if (!trace_path.empty()) {
        trace.open(trace_path);
        if (!trace) throw std::runtime_error("cannot open " + trace_path);
      }
      const auto r = simulate(c, trace_path.empty() ? nullptr : &trace);
      const auto text = to_json(r).dump(2);
      if (output.empty()) {
        std::cout << text << '\n';
      } else {
        std::ofstream out(output);
        out << text << '\n';
      }
      return 0;
    }

    if (*validate_cmd) {
      std::vector<std::string> errs;
      const auto spec = parse_spec(load_json_file(spec_path), errs);
      if (errs.empty()) errs = validate(spec);
      for (const auto& e : errs) std::cout << e << '\n';
      if (!errs.empty()) return 2;
      std::cout << spec.name << ": ok (" << expand_grid(spec).size() << " grid points)\n";
      return 0;
    }

    if (*sweep_cmd) {
      auto spec = load_spec(spec_path);
      if (app.get_option("--seed")->count() > 0) spec.seeds = {seed};
      const auto path = output.empty() ? default_output_path(spec) : output;
      std::ostringstream csv;
      run_experiment(spec, csv, worker_count(workers));
      if (path == "-") {
        std::cout << csv.str();
      } else {
        std::ofstream out(path);
        if (!out) throw EngineError("cannot write " + path);
        out << csv.str();
        std::cerr << "wrote " << path << '\n';
      }
      return 0;
    }
  } catch (const SpecError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
