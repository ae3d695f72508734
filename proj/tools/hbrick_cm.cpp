// Experiment harness: builds sketches from config, streams traces, and
// emits accuracy / memory / pipeline reports as tables or JSON records.

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hbrick/mem_model.hpp"
#include "hbrick/pipeline_sim.hpp"
#include "hbrick/sketch.hpp"
#include "hbrick/snapshot.hpp"
#include "hbrick/trace.hpp"
#include "json.hpp"

using json = nlohmann::ordered_json;
using namespace hbrick;

namespace {

constexpr const char* kVersion = "1.0.0";

// ---- shared option bundles ----------------------------------------------

struct OutputOpts {
  std::string format = "table";
  std::string out_path;
};

void add_output_opts(CLI::App* cmd, OutputOpts& o) {
  cmd->add_option("--format", o.format, "Report format")
      ->check(CLI::IsMember({"table", "records"}))
      ->capture_default_str();
  cmd->add_option("--out", o.out_path, "Write the report to a file");
}

struct TraceOpts {
  std::string trace_path;
  bool caida = false;
  std::uint64_t packets = 100000;
  std::uint64_t flows = 10000;
  double skew = 1.0;
  std::uint32_t size_min = 64;
  std::uint32_t size_max = 1500;
  std::uint64_t seed = 1;
};

void add_trace_opts(CLI::App* cmd, TraceOpts& t, bool with_skew = true) {
  cmd->add_option("--trace", t.trace_path, "Read packets from a CSV trace file");
  cmd->add_flag("--caida", t.caida, "Generate a CAIDA-like bit-width profile trace");
  cmd->add_option("--packets", t.packets, "Packets to generate")
      ->capture_default_str();
  cmd->add_option("--flows", t.flows, "Distinct flows to generate")
      ->capture_default_str();
  if (with_skew)
    cmd->add_option("--skew", t.skew, "Zipf skewness s")->capture_default_str();
  cmd->add_option("--size-min", t.size_min, "Minimum packet bytes")
      ->capture_default_str();
  cmd->add_option("--size-max", t.size_max, "Maximum packet bytes")
      ->capture_default_str();
  cmd->add_option("--seed", t.seed, "Trace / sketch seed")->capture_default_str();
}

Trace make_trace(const TraceOpts& t) {
  if (!t.trace_path.empty()) {
    if (t.caida)
      throw std::invalid_argument("give either --trace or --caida, not both");
    return load_csv(t.trace_path);
  }
  if (t.caida) {
    CaidaProfileSpec spec;
    spec.n_packets = t.packets;
    spec.seed = t.seed;
    return gen_caida_profile(spec);
  }
  ZipfSpec spec;
  spec.n_packets = t.packets;
  spec.n_flows = t.flows;
  spec.skew = t.skew;
  spec.size_min = t.size_min;
  spec.size_max = t.size_max;
  spec.seed = t.seed;
  return gen_zipf(spec);
}

std::string trace_source_name(const TraceOpts& t) {
  if (!t.trace_path.empty()) return "file:" + t.trace_path;
  if (t.caida) return "caida-profile";
  return "zipf";
}

json trace_echo(const TraceOpts& t) {
  json j;
  j["source"] = trace_source_name(t);
  if (t.trace_path.empty()) {
    j["packets"] = t.packets;
    if (!t.caida) {
      j["flows"] = t.flows;
      j["skew"] = t.skew;
      j["size_min"] = t.size_min;
      j["size_max"] = t.size_max;
    }
    j["seed"] = t.seed;
  }
  return j;
}

// ---- report sink ---------------------------------------------------------

class Report {
 public:
  explicit Report(const OutputOpts& opts) : opts_(opts) {
    if (!opts_.out_path.empty()) {
      file_.open(opts_.out_path, std::ios::binary);
      if (!file_)
        throw std::runtime_error("cannot open output file: " + opts_.out_path);
    }
    start_ = std::chrono::steady_clock::now();
  }

  bool records() const { return opts_.format == "records"; }
  std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

  void record(const json& j) { out() << j.dump() << '\n'; }

  // Table-mode trailer; records stay free of wall-clock so reruns are
  // byte-identical.
  void finish() {
    if (records()) return;
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start_);
    out() << "wall-clock: " << ms.count() << " ms\n";
  }

 private:
  OutputOpts opts_;
  std::ofstream file_;
  std::chrono::steady_clock::time_point start_;
};

void emit_config(Report& rep, const char* command, const json& cfg) {
  json j;
  j["record"] = "config";
  j["tool"] = "hbrick_cm";
  j["version"] = kVersion;
  j["command"] = command;
  for (const auto& [k, v] : cfg.items()) j[k] = v;
  if (rep.records()) {
    rep.record(j);
  } else {
    rep.out() << "# hbrick_cm " << kVersion << " " << command << '\n';
    for (const auto& [k, v] : cfg.items())
      rep.out() << "#   " << k << " = " << v.dump() << '\n';
  }
}

// ---- backends ------------------------------------------------------------

SketchConfig backend_config(const std::string& name, std::uint32_t d,
                            std::uint64_t w, UpdateStrategy strategy,
                            std::uint64_t phi, std::uint64_t seed) {
  SketchConfig cfg;
  cfg.d = d;
  cfg.w = w;
  cfg.strategy = strategy;
  cfg.phi = phi;
  cfg.seed = seed;
  if (name == "brick") {
    cfg.backend = BackendKind::brick;
  } else if (name == "hbrick") {
    cfg.backend = BackendKind::hbrick;
  } else if (name.rfind("flat", 0) == 0) {
    cfg.backend = BackendKind::flat;
    cfg.flat_width =
        name == "flat" ? 64 : static_cast<std::uint32_t>(
                                  std::stoul(name.substr(4)));
  } else {
    throw std::invalid_argument("unknown backend: " + name +
                                " (expected flat<bits>, brick or hbrick)");
  }
  cfg.validate();
  return cfg;
}

// ---- subcommands ---------------------------------------------------------

int cmd_gen_trace(const TraceOpts& topts, const std::string& out_path) {
  if (out_path.empty()) throw std::invalid_argument("gen-trace requires --out");
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << "# src_ip,dst_ip,src_port,dst_port,proto,bytes\n";
  write_csv(out, make_trace(topts));
  return 0;
}

struct AccuracyRow {
  double skew = 0;
  std::string backend;
  json metrics;
};

int cmd_run_accuracy(const TraceOpts& topts, const OutputOpts& oopts,
                     std::vector<std::string> backends,
                     std::vector<double> skews, const std::string& strategy,
                     std::uint32_t d, std::uint64_t w, std::uint64_t phi,
                     const std::string& save_sketch) {
  if (backends.empty()) backends = {"flat64", "hbrick"};
  if (!save_sketch.empty() && backends.size() != 1)
    throw std::invalid_argument("--save-sketch needs exactly one --backend");
  const UpdateStrategy strat = strategy == "conservative"
                                   ? UpdateStrategy::conservative
                                   : UpdateStrategy::plain;
  // --skew on this command is a sweep; other sources run a single point
  if (skews.empty()) skews = {topts.skew};
  if (!topts.trace_path.empty() || topts.caida) skews = {topts.skew};

  Report rep(oopts);
  json cfg = trace_echo(topts);
  cfg["backends"] = backends;
  if (topts.trace_path.empty() && !topts.caida) cfg["skew"] = skews;
  cfg["strategy"] = strategy;
  cfg["d"] = d;
  cfg["w"] = w;
  cfg["phi"] = phi;
  emit_config(rep, "run-accuracy", cfg);
  if (!rep.records())
    rep.out() << std::left << std::setw(8) << "skew" << std::setw(10)
              << "backend" << std::setw(8) << "flows" << std::setw(14)
              << "avg_abs_err" << std::setw(12) << "max_over" << std::setw(8)
              << "under" << std::setw(12) << "hh_prec" << std::setw(12)
              << "hh_recall" << '\n';

  for (double s : skews) {
    TraceOpts tpoint = topts;
    tpoint.skew = s;
    const Trace trace = make_trace(tpoint);
    const ExactCounts oracle = exact_counts(trace);
    for (const auto& name : backends) {
      CountMinSketch sk(backend_config(name, d, w, strat, phi, tpoint.seed));
      for (const auto& recd : trace)
        sk.process_packet(recd.key, recd.size, recd.ordinal);

      std::uint64_t over = 0, under = 0, max_over = 0;
      double err_sum = 0;
      std::uint64_t true_heavy = 0, flagged = 0, hits = 0;
      for (const auto& [key, truth] : oracle.totals) {
        const std::uint64_t est = sk.query(key).value;
        if (est > truth) {
          ++over;
          max_over = std::max(max_over, est - truth);
        } else if (est < truth) {
          ++under;
        }
        err_sum += est >= truth ? static_cast<double>(est - truth)
                                : static_cast<double>(truth - est);
        if (truth > phi) ++true_heavy;
      }
      for (const auto& [key, ordinal] : sk.registry()) {
        ++flagged;
        auto it = oracle.totals.find(key);
        if (it != oracle.totals.end() && it->second > phi) ++hits;
      }
      const double avg_err =
          err_sum / static_cast<double>(oracle.totals.size());
      const double prec =
          flagged ? static_cast<double>(hits) / static_cast<double>(flagged)
                  : 1.0;
      const double recall = true_heavy ? static_cast<double>(hits) /
                                             static_cast<double>(true_heavy)
                                       : 1.0;
      if (rep.records()) {
        json row;
        row["record"] = "accuracy";
        row["skew"] = s;
        row["backend"] = name;
        row["flows"] = oracle.flow_count();
        row["total_bytes"] = oracle.total_bytes;
        row["avg_abs_error"] = avg_err;
        row["overestimated_flows"] = over;
        row["max_overestimate"] = max_over;
        row["underestimated_flows"] = under;
        row["heavy_precision"] = prec;
        row["heavy_recall"] = recall;
        rep.record(row);
      } else {
        rep.out() << std::left << std::setw(8) << s << std::setw(10) << name
                  << std::setw(8) << oracle.flow_count() << std::setw(14)
                  << avg_err << std::setw(12) << max_over << std::setw(8)
                  << under << std::setw(12) << prec << std::setw(12) << recall
                  << '\n';
      }
      if (!save_sketch.empty()) save_snapshot(save_sketch, sk);
    }
  }
  rep.finish();
  return 0;
}

void emit_memory_report(Report& rep, const MemoryReport& r,
                        const HbrickConfig* cfg) {
  if (rep.records()) {
    json row;
    row["record"] = "memory";
    row["backend"] = r.backend;
    if (cfg) row["levels"] = cfg->levels();
    json comps;
    for (const auto& c : r.components) {
      comps[c.name] = {{"bits", c.bits}, {"brams", c.brams}};
    }
    row["components"] = comps;
    row["counter_storage_bits"] = counter_storage_bits(r);
    row["total_bits"] = r.total_bits();
    row["total_brams"] = r.total_brams();
    rep.record(row);
  } else {
    rep.out() << r.backend;
    if (cfg) rep.out() << " (L=" << cfg->levels() << ")";
    rep.out() << ": " << r.total_bits() << " bits, " << r.total_brams()
              << " BRAMs (counter storage " << counter_storage_bits(r)
              << " bits)\n";
    for (const auto& c : r.components)
      rep.out() << "    " << std::left << std::setw(16) << c.name << c.bits
                << " bits, " << c.brams << " BRAMs\n";
  }
}

int cmd_run_memory(const OutputOpts& oopts, std::uint32_t d, std::uint64_t w,
                   std::uint32_t flat_width) {
  Report rep(oopts);
  json cfg;
  cfg["d"] = d;
  cfg["w"] = w;
  cfg["flat_width"] = flat_width;
  emit_config(rep, "run-memory", cfg);

  const MemoryReport flat = flat_memory_report(d, flat_width, w);
  emit_memory_report(rep, flat, nullptr);

  BrickConfig bc;
  bc.widths = {14, 8, 7};
  bc.slots = {64, 8, 4};
  bc.buckets = w / bc.slots[0];
  emit_memory_report(rep, brick_memory_report(bc, d), nullptr);

  std::uint64_t hbrick_default_brams = 0;
  for (std::uint32_t levels : {2u, 3u, 4u, 5u}) {
    const HbrickConfig hc = hbrick_level_profile(levels, w);
    const MemoryReport r = hbrick_memory_report(hc, d);
    if (levels == 3) hbrick_default_brams = r.total_brams();
    emit_memory_report(rep, r, &hc);
  }
  const double ratio = static_cast<double>(flat.total_brams()) /
                       static_cast<double>(hbrick_default_brams);
  if (rep.records()) {
    json row;
    row["record"] = "comparison";
    row["flat_brams"] = flat.total_brams();
    row["hbrick_brams"] = hbrick_default_brams;
    row["flat_over_hbrick"] = ratio;
    rep.record(row);
  } else {
    rep.out() << "flat/hbrick BRAM ratio: " << ratio << '\n';
  }
  rep.finish();
  return 0;
}

int cmd_run_pipeline(const TraceOpts& topts, const OutputOpts& oopts,
                     PipelineConfig pcfg) {
  pcfg.seed = topts.seed;
  const Trace trace = make_trace(topts);

  Report rep(oopts);
  json cfg = trace_echo(topts);
  cfg["read_latency"] = pcfg.read_latency;
  cfg["compute_latency"] = pcfg.compute_latency;
  cfg["write_latency"] = pcfg.write_latency;
  cfg["merge_depth"] = pcfg.merge_depth;
  cfg["extra_latency"] = pcfg.extra_latency;
  cfg["d"] = pcfg.d;
  cfg["w"] = pcfg.w;
  cfg["phi"] = pcfg.phi;
  emit_config(rep, "run-pipeline", cfg);
  if (!rep.records())
    rep.out() << std::left << std::setw(22) << "strategy" << std::setw(10)
              << "under" << std::setw(12) << "hh_fn_rate" << std::setw(14)
              << "avg_abs_err" << std::setw(10) << "merges" << std::setw(12)
              << "fallbacks" << '\n';

  for (PipelineStrategy s :
       {PipelineStrategy::plain_dfu, PipelineStrategy::conservative_naive,
        PipelineStrategy::conservative_merge, PipelineStrategy::hybrid}) {
    PipelineConfig c = pcfg;
    c.strategy = s;
    const PipelineMetrics m = simulate(trace, c);
    if (rep.records()) {
      json row;
      row["record"] = "pipeline";
      row["strategy"] = to_string(s);
      row["items_processed"] = m.items_processed;
      row["items_emitted"] = m.items_emitted;
      row["cycles"] = m.cycles;
      row["throughput"] = m.throughput;
      row["false_conflicts"] = m.false_conflicts;
      row["true_conflicts"] = m.true_conflicts;
      row["merges"] = m.merges;
      row["hybrid_fallbacks"] = m.hybrid_fallbacks;
      row["underestimated_flows"] = m.underestimated_flows;
      row["heavy_fn_rate"] = m.heavy_fn_rate;
      row["avg_abs_error"] = m.avg_abs_error;
      rep.record(row);
    } else {
      rep.out() << std::left << std::setw(22) << to_string(s) << std::setw(10)
                << m.underestimated_flows << std::setw(12) << m.heavy_fn_rate
                << std::setw(14) << m.avg_abs_error << std::setw(10)
                << m.merges << std::setw(12) << m.hybrid_fallbacks << '\n';
    }
  }
  rep.finish();
  return 0;
}

FlowKey parse_key(const std::string& text) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = text.find(',', pos);
    fields.push_back(text.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (fields.size() != 5)
    throw std::invalid_argument(
        "key must be src_ip,dst_ip,src_port,dst_port,proto");
  FlowKey k;
  k.src_ip = parse_ipv4(fields[0]);
  k.dst_ip = parse_ipv4(fields[1]);
  k.src_port = static_cast<std::uint16_t>(std::stoul(fields[2]));
  k.dst_port = static_cast<std::uint16_t>(std::stoul(fields[3]));
  k.proto = static_cast<std::uint8_t>(std::stoul(fields[4]));
  return k;
}

int cmd_query(const OutputOpts& oopts, const std::string& snapshot_path,
              const std::vector<std::string>& key_texts) {
  const CountMinSketch sk = load_snapshot(snapshot_path);
  Report rep(oopts);
  json cfg;
  cfg["snapshot"] = snapshot_path;
  cfg["backend"] = to_string(sk.config().backend);
  cfg["d"] = sk.config().d;
  cfg["w"] = sk.config().w;
  cfg["seed"] = sk.config().seed;
  emit_config(rep, "query", cfg);
  for (const auto& text : key_texts) {
    const FlowKey k = parse_key(text);
    const Estimate est = sk.query(k);
    if (rep.records()) {
      json row;
      row["record"] = "estimate";
      row["key"] = text;
      row["estimate"] = est.value;
      row["saturated"] = est.saturated;
      rep.record(row);
    } else {
      rep.out() << text << " -> " << est.value
                << (est.saturated ? " (saturated)" : "") << '\n';
    }
  }
  rep.finish();
  return 0;
}

int cmd_histogram(const TraceOpts& topts, const OutputOpts& oopts) {
  const Trace trace = make_trace(topts);
  const auto hist = min_bitwidth_histogram(exact_counts(trace));
  Report rep(oopts);
  emit_config(rep, "histogram", trace_echo(topts));
  for (const auto& [bits, flows] : hist) {
    if (rep.records()) {
      json row;
      row["record"] = "histogram";
      row["bits"] = bits;
      row["flows"] = flows;
      rep.record(row);
    } else {
      rep.out() << std::setw(3) << bits << " bits: " << flows << " flows\n";
    }
  }
  rep.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Count-min sketch experiments over flat, BRICK and HBRICK "
               "counter arrays"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value config file");
  app.get_config_ptr()->configurable(false);

  OutputOpts oopts;
  TraceOpts topts;

  auto* gen = app.add_subcommand("gen-trace", "Generate a CSV packet trace");
  std::string gen_out;
  add_trace_opts(gen, topts);
  gen->add_option("--out", gen_out, "Output file")->required();

  auto* acc = app.add_subcommand("run-accuracy",
                                 "Estimate-accuracy experiment vs exact counts");
  std::vector<std::string> backends;
  std::vector<double> skews;
  std::string strategy = "plain";
  std::uint32_t acc_d = 4;
  std::uint64_t acc_w = std::uint64_t{1} << 15;
  std::uint64_t phi = 0;
  std::string save_sketch;
  add_trace_opts(acc, topts, /*with_skew=*/false);
  acc->add_option("--skew", skews, "Zipf skew sweep values");
  acc->add_option("--backend", backends,
                  "Backends to run (flat<bits>, brick, hbrick)");
  acc->add_option("--strategy", strategy, "Update strategy")
      ->check(CLI::IsMember({"plain", "conservative"}))
      ->capture_default_str();
  acc->add_option("--d", acc_d, "Sketch depth D")->capture_default_str();
  acc->add_option("--w", acc_w, "Counters per array W")->capture_default_str();
  acc->add_option("--phi", phi, "Heavy-hitter threshold, bytes")
      ->capture_default_str();
  acc->add_option("--save-sketch", save_sketch,
                  "Save the final sketch state (single backend only)");

  auto* mem = app.add_subcommand("run-memory", "BRAM accounting comparison");
  std::uint32_t mem_d = 4;
  std::uint64_t mem_w = std::uint64_t{1} << 15;
  std::uint32_t flat_width = 32;
  mem->add_option("--d", mem_d, "Sketch depth D")->capture_default_str();
  mem->add_option("--w", mem_w, "Counters per array W")->capture_default_str();
  mem->add_option("--flat-width", flat_width, "Flat baseline counter bits")
      ->capture_default_str();
  add_output_opts(mem, oopts);

  auto* pipe = app.add_subcommand("run-pipeline",
                                  "Pipeline hazard simulation, all strategies");
  PipelineConfig pcfg;
  add_trace_opts(pipe, topts);
  pipe->add_option("--read-latency", pcfg.read_latency)->capture_default_str();
  pipe->add_option("--compute-latency", pcfg.compute_latency)
      ->capture_default_str();
  pipe->add_option("--write-latency", pcfg.write_latency)
      ->capture_default_str();
  pipe->add_option("--merge-depth", pcfg.merge_depth)->capture_default_str();
  pipe->add_option("--extra-latency", pcfg.extra_latency,
                   "Backend cycles added to reads and writes")
      ->capture_default_str();
  pipe->add_option("--d", pcfg.d, "Sketch depth D")->capture_default_str();
  pipe->add_option("--w", pcfg.w, "Counters per array W")
      ->capture_default_str();
  pipe->add_option("--phi", pcfg.phi, "Heavy-hitter threshold, bytes")
      ->capture_default_str();

  auto* q = app.add_subcommand("query", "Point queries against a saved sketch");
  std::string snapshot_path;
  std::vector<std::string> key_texts;
  q->add_option("--snapshot", snapshot_path, "Snapshot file")->required();
  q->add_option("--key", key_texts,
                "Flow key as src_ip,dst_ip,src_port,dst_port,proto")
      ->required();

  auto* hist = app.add_subcommand("histogram",
                                  "Flow-size minimum bit-width histogram");
  add_trace_opts(hist, topts);

  for (CLI::App* cmd : {acc, pipe, q, hist}) add_output_opts(cmd, oopts);
  // lets --config and other global flags appear after the subcommand name
  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return cmd_gen_trace(topts, gen_out);
    if (acc->parsed())
      return cmd_run_accuracy(topts, oopts, backends, skews, strategy, acc_d,
                              acc_w, phi, save_sketch);
    if (mem->parsed()) return cmd_run_memory(oopts, mem_d, mem_w, flat_width);
    if (pipe->parsed()) return cmd_run_pipeline(topts, oopts, pcfg);
    if (q->parsed()) return cmd_query(oopts, snapshot_path, key_texts);
    if (hist->parsed()) return cmd_histogram(topts, oopts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error[config]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[runtime]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
