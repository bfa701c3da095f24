#include "psr/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "psr/error.hpp"
#include "psr/metrics.hpp"
#include "psr/parallel.hpp"
#include "psr/pca.hpp"
#include "psr/pipeline.hpp"
#include "psr/synthetic.hpp"

namespace psr::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

SimulationSpec parse_simulation_spec(const json& j) {
  SimulationSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "pan_coeffs") spec.pan_coeffs = value.get<std::vector<double>>();
    else if (key == "ref_factor") spec.ref_factor = value.get<std::size_t>();
    else if (key == "ref_mtf") spec.ref_mtf = value.get<double>();
    else if (key == "ms_factor") spec.ms_factor = value.get<std::size_t>();
    else if (key == "ms_cut") spec.ms_cut = value.get<double>();
    else throw InvalidArgument("unknown simulation spec field '" + key + "'");
  }
  return spec;
}

/// Options shared by restore, tune and weights-dump.
struct RestoreFlags {
  double lambda = 0.01;
  double h_sim = 0.0;  // 0: default from PAN range
  double h_spt = 2.5;
  int nu_r = 7;
  int patch_size = 3;
  int max_iters = 300;
  double rel_tol = 1e-5;
  double tau = 0.0;
  double sigma = 0.0;
  double theta = 1.0;
  int hist_window = 15;
  int hist_stride = 1;
  bool hist_global = false;
  bool raw_lambda = false;
  std::vector<double> component_lambdas;

  void add_weight_options(CLI::App* app) {
    app->add_option("--h-sim", h_sim, "Similarity decay h_sim (default: 0.04 x PAN range)");
    app->add_option("--h-spt", h_spt, "Spatial decay h_spt in pixels")->capture_default_str();
    app->add_option("--nu-r", nu_r, "Search window radius nu_r (window 2nu_r+1)")->capture_default_str();
    app->add_option("--patch-size", patch_size, "Odd side of the comparison patch")->capture_default_str();
  }

  void add_options(CLI::App* app) {
    add_weight_options(app);
    app->add_option("--lambda", lambda, "Trade-off lambda, in units of the fused dynamic range")
        ->capture_default_str();
    app->add_option("--component-lambda", component_lambdas,
                    "Per-chromatic-component lambda (M-1 values), overrides --lambda");
    app->add_flag("--raw-lambda", raw_lambda, "Interpret lambda in raw sample units");
    app->add_option("--max-iters", max_iters, "Primal-dual iteration cap")->capture_default_str();
    app->add_option("--rel-tol", rel_tol, "Stop when |u' - u| / |u| falls below this")->capture_default_str();
    app->add_option("--tau", tau, "Primal step (default 0.99/L)");
    app->add_option("--sigma", sigma, "Dual step (default 0.99/L)");
    app->add_option("--theta", theta, "Extrapolation parameter")->capture_default_str();
    app->add_option("--hist-window", hist_window, "Side of the local histogram-matching patch")
        ->capture_default_str();
    app->add_option("--hist-stride", hist_stride, "Distance between matching patches")->capture_default_str();
    app->add_flag("--hist-global", hist_global, "Match the PAN globally instead of locally");
  }

  WeightParams weights() const {
    if (patch_size < 1 || patch_size % 2 == 0) throw InvalidArgument("--patch-size must be a positive odd number");
    WeightParams w;
    w.nu_r = nu_r;
    w.patch_radius = (patch_size - 1) / 2;
    w.h_spt = h_spt;
    if (h_sim != 0.0) w.h_sim = h_sim;
    w.validate();
    return w;
  }

  RestoreParams params() const {
    RestoreParams p;
    p.weights = weights();
    p.solver.lambda = lambda;
    p.solver.max_iters = max_iters;
    p.solver.rel_tol = rel_tol;
    p.solver.theta = theta;
    if (tau != 0.0) p.solver.tau = tau;
    if (sigma != 0.0) p.solver.sigma = sigma;
    p.match.window = hist_window;
    p.match.stride = hist_stride;
    p.global_match = hist_global;
    p.normalize_lambda = !raw_lambda;
    p.component_lambdas = component_lambdas;
    return p;
  }
};

std::pair<std::size_t, std::size_t> parse_pixel(const std::string& text) {
  const auto comma = text.find(',');
  std::size_t x = 0, y = 0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (comma == std::string::npos || std::from_chars(begin, begin + comma, x).ec != std::errc{} ||
      std::from_chars(begin + comma + 1, end, y).ptr != end)
    throw InvalidArgument("--pixel expects x,y");
  return {x, y};
}

void print_report(std::ostream& out, const MetricReport& report, bool as_json) {
  if (as_json) {
    out << to_json(report) << "\n";
    return;
  }
  out << to_key_value(report) << "\n" << to_table(report);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Restoration of pansharpened multispectral images"};
  app.name(args.empty() ? "psrestore" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: PSR_THREADS or all cores)");

  // simulate
  std::string sim_input, sim_spec, sim_out;
  auto* simulate = app.add_subcommand("simulate", "Reduced-resolution simulation of PAN, MS and reference");
  simulate->add_option("--input", sim_input, "High-resolution MBR image")->required();
  simulate->add_option("--spec", sim_spec,
                       "JSON with pan_coeffs [0.1,0.4,0.25,0.25], ref_factor 3, ref_mtf 0.15, ms_factor 4, "
                       "ms_cut 0.35");
  simulate->add_option("--out-dir", sim_out, "Directory for reference.mbr, pan.mbr, ms.mbr")->required();

  // pansharpen
  std::string ps_ms, ps_pan, ps_out;
  std::size_t ps_factor = 4;
  auto* pansharpen = app.add_subcommand("pansharpen", "Baseline PCA component-substitution fusion");
  pansharpen->add_option("--ms", ps_ms, "Low-resolution MS image")->required();
  pansharpen->add_option("--pan", ps_pan, "PAN image")->required();
  pansharpen->add_option("--factor", ps_factor, "PAN/MS resolution ratio")->capture_default_str();
  pansharpen->add_option("--out", ps_out, "Fused output")->required();

  // restore
  std::string rs_fused, rs_pan, rs_out, rs_trace;
  bool rs_verbose = false;
  RestoreFlags rs_flags;
  auto* restore_cmd = app.add_subcommand("restore", "Restore a pansharpened image using the PAN");
  restore_cmd->add_option("--fused", rs_fused, "Pansharpened image")->required();
  restore_cmd->add_option("--pan", rs_pan, "PAN image")->required();
  restore_cmd->add_option("--out", rs_out, "Restored output")->required();
  restore_cmd->add_option("--trace-energy", rs_trace, "CSV of component,iteration,energy,primal_change");
  restore_cmd->add_flag("--verbose", rs_verbose, "Report iterations per chromatic component on stderr");
  rs_flags.add_options(restore_cmd);

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Quality indices");
  metrics->require_subcommand(1);
  std::string mf_ref, mf_test;
  double mf_ratio = 4.0;
  std::size_t mf_block = 32;
  bool mf_json = false;
  auto* full = metrics->add_subcommand("full", "RMSE, ERGAS, SAM, Q4 against a reference");
  full->add_option("--ref", mf_ref, "Reference image")->required();
  full->add_option("--test", mf_test, "Image under test")->required();
  full->add_option("--ratio", mf_ratio, "PAN/MS resolution ratio")->capture_default_str();
  full->add_option("--block", mf_block, "Q4 block size")->capture_default_str();
  full->add_flag("--json", mf_json, "Emit JSON");
  std::string mq_fused, mq_ms, mq_pan;
  std::size_t mq_ratio = 4, mq_block = 32;
  bool mq_json = false;
  auto* qnr_cmd = metrics->add_subcommand("qnr", "D_lambda, D_s and QNR without reference");
  qnr_cmd->add_option("--fused", mq_fused, "Fused image")->required();
  qnr_cmd->add_option("--ms", mq_ms, "Low-resolution MS image")->required();
  qnr_cmd->add_option("--pan", mq_pan, "PAN image")->required();
  qnr_cmd->add_option("--ratio", mq_ratio, "PAN/MS resolution ratio")->capture_default_str();
  qnr_cmd->add_option("--block", mq_block, "UIQI block size")->capture_default_str();
  qnr_cmd->add_flag("--json", mq_json, "Emit JSON");

  // pca-dump
  std::string pd_input, pd_out;
  auto* pca_dump = app.add_subcommand("pca-dump", "Write each principal component as MBR and PGM");
  pca_dump->add_option("--input", pd_input, "Multiband image")->required();
  pca_dump->add_option("--out-dir", pd_out, "Output directory")->required();

  // weights-dump
  std::string wd_pan, wd_pixel;
  RestoreFlags wd_flags;
  auto* weights_dump = app.add_subcommand("weights-dump", "Print one row of the nonlocal weight graph");
  weights_dump->add_option("--pan", wd_pan, "PAN image")->required();
  weights_dump->add_option("--pixel", wd_pixel, "Pixel as x,y")->required();
  wd_flags.add_weight_options(weights_dump);

  // tune
  std::string tn_fused, tn_pan, tn_ref, tn_grid;
  RestoreFlags tn_flags;
  auto* tune_cmd = app.add_subcommand("tune", "Grid search of (h_sim, lambda) minimizing RMSE");
  tune_cmd->add_option("--fused", tn_fused, "Pansharpened image")->required();
  tune_cmd->add_option("--pan", tn_pan, "PAN image")->required();
  tune_cmd->add_option("--reference", tn_ref, "Ground truth")->required();
  tune_cmd->add_option("--grid", tn_grid, "JSON {\"h_sim\": [...], \"lambda\": [...]}")->required();
  tn_flags.add_options(tune_cmd);

  // synth
  std::string sy_out;
  SceneSpec sy_spec;
  auto* synth = app.add_subcommand("synth", "Generate a procedural 4-band test scene");
  synth->add_option("--out", sy_out, "Output MBR")->required();
  synth->add_option("--width", sy_spec.width)->capture_default_str();
  synth->add_option("--height", sy_spec.height)->capture_default_str();
  synth->add_option("--seed", sy_spec.seed)->capture_default_str();
  synth->add_option("--objects", sy_spec.objects)->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    return usage;
  }

  try {
    if (threads != 0) parallel::set_thread_count(threads);

    if (simulate->parsed()) {
      const SimulationSpec spec = sim_spec.empty() ? SimulationSpec{} : parse_simulation_spec(read_json(sim_spec));
      const SimulatedData data = simulate_dataset(load_image(sim_input), spec);
      ensure_directory(sim_out);
      save_image(data.reference, fs::path(sim_out) / "reference.mbr");
      save_field(data.pan, fs::path(sim_out) / "pan.mbr");
      save_image(data.ms, fs::path(sim_out) / "ms.mbr");
    } else if (pansharpen->parsed()) {
      save_image(baseline_pansharpen(load_image(ps_ms), load_pan(ps_pan), ps_factor), ps_out);
    } else if (restore_cmd->parsed()) {
      const RestoreParams params = rs_flags.params();
      std::ofstream trace;
      RestoreObserver observer;
      if (!rs_trace.empty()) {
        trace.open(rs_trace);
        if (!trace) throw IoError("cannot open '" + rs_trace + "' for writing");
        trace << "component,iteration,energy,primal_change\n";
      }
      std::vector<std::pair<int, double>> last;
      if (!rs_trace.empty() || rs_verbose) {
        observer = [&](std::size_t component, const IterationInfo& info, const NonlocalOperator& op,
                       const Field& data, double lambda) {
          if (trace.is_open())
            trace << component << "," << info.iteration << "," << shortest(op.energy(info.u, data, lambda)) << ","
                  << shortest(info.change) << "\n";
          if (last.size() < component) last.resize(component);
          last[component - 1] = {info.iteration, info.change};
        };
      }
      const MultiBandImage restored = restore(load_image(rs_fused), load_pan(rs_pan), params, observer);
      if (rs_verbose)
        for (std::size_t m = 0; m < last.size(); ++m)
          err << "component " << m + 1 << ": " << last[m].first << " iterations, relative change "
              << shortest(last[m].second) << "\n";
      save_image(restored, rs_out);
    } else if (full->parsed()) {
      print_report(out, evaluate_full_reference(load_image(mf_ref), load_image(mf_test), mf_ratio, mf_block),
                   mf_json);
    } else if (qnr_cmd->parsed()) {
      print_report(out,
                   evaluate_no_reference(load_image(mq_fused), load_image(mq_ms), load_pan(mq_pan), mq_ratio,
                                         mq_block),
                   mq_json);
    } else if (pca_dump->parsed()) {
      const MultiBandImage image = load_image(pd_input);
      const PcaBasis basis = fit_pca(image);
      const MultiBandImage components = forward_pca(image, basis);
      ensure_directory(pd_out);
      for (std::size_t k = 0; k < components.bands(); ++k) {
        const std::string stem = "pc" + std::to_string(k + 1);
        const Field pc = components.band_field(k);
        save_field(pc, fs::path(pd_out) / (stem + ".mbr"));
        export_pgm(pc, fs::path(pd_out) / (stem + ".pgm"), k == 0 ? 0.75 : 1.0);
      }
      json j;
      j["mean"] = basis.mean;
      j["basis_row_major"] = basis.basis;
      j["variances"] = basis.variances;
      std::ofstream meta(fs::path(pd_out) / "basis.json");
      if (!(meta << j.dump(2) << "\n")) throw IoError("cannot write basis.json");
    } else if (weights_dump->parsed()) {
      const PanImage pan = load_pan(wd_pan);
      const auto [x, y] = parse_pixel(wd_pixel);
      if (x >= pan.width() || y >= pan.height()) throw InvalidArgument("--pixel lies outside the PAN");
      const WeightGraph graph = compute_weights(pan, wd_flags.weights());
      const std::size_t i = y * pan.width() + x;
      out << "# dx dy weight\n";
      for (std::size_t k = 0; k < graph.window_size(); ++k)
        out << graph.offset(k).dx << " " << graph.offset(k).dy << " " << shortest(graph.weight(i, k)) << "\n";
    } else if (tune_cmd->parsed()) {
      const json grid = read_json(tn_grid);
      if (!grid.contains("h_sim") || !grid.contains("lambda"))
        throw InvalidArgument("grid file needs \"h_sim\" and \"lambda\" arrays");
      const TuneResult result =
          tune(load_image(tn_fused), load_pan(tn_pan), load_image(tn_ref), grid["h_sim"].get<std::vector<double>>(),
               grid["lambda"].get<std::vector<double>>(), tn_flags.params());
      out << "h_sim,lambda,rmse\n";
      for (const auto& e : result.entries)
        out << shortest(e.h_sim) << "," << shortest(e.lambda) << "," << shortest(e.rmse) << "\n";
      out << "best h_sim=" << shortest(result.best.h_sim) << " lambda=" << shortest(result.best.lambda)
          << " rmse=" << shortest(result.best.rmse) << "\n";
    } else if (synth->parsed()) {
      save_image(generate_scene(sy_spec), sy_out);
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.category()) << ": " << e.what() << "\n";
    switch (e.category()) {
      case ErrorCategory::usage:
        return usage;
      case ErrorCategory::invariant:
        return invariant;
      case ErrorCategory::io:
        return io;
    }
  } catch (const json::exception& e) {
    err << "error: invariant: " << e.what() << "\n";
    return invariant;
  } catch (const std::bad_alloc&) {
    err << "error: invariant: out of memory\n";
    return invariant;
  }
  return ok;
}

}  // namespace psr::cli
