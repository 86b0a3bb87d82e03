// Command-line front end: HTTP service, batch simulation, stimulus
// rendering, gamma fitting from calibration logs, and agreement statistics.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "stereo/csv.hpp"
#include "stereo/errors.hpp"
#include "stereo/gamma_cal.hpp"
#include "stereo/http_service.hpp"
#include "stereo/rds.hpp"
#include "stereo/session_store.hpp"
#include "stereo/simulation.hpp"
#include "stereo/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw stereo::ConfigError("cannot open " + path.string());
  return json::parse(in);
}

stereo::PsiConfig psi_config_from(const std::string& grid, const std::string& file) {
  if (!file.empty()) return read_json_file(file).get<stereo::PsiConfig>();
  if (grid == "simulation") return stereo::PsiConfig::simulation();
  return stereo::PsiConfig::defaults();
}

int cmd_serve(const std::string& config_file, const std::string& host, int port, const std::string& data_dir) {
  stereo::ServiceConfig cfg;
  if (!config_file.empty()) cfg = read_json_file(config_file).get<stereo::ServiceConfig>();
  if (!host.empty()) cfg.host = host;
  if (port > 0) cfg.port = port;
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  stereo::SessionManager manager(cfg);
  std::cerr << "restored " << manager.load_existing() << " session(s) from " << cfg.data_dir << "\n";
  std::cerr << "preparing psi grid (" << cfg.psi.cell_count() << " cells)...\n";
  stereo::shared_psi_grid(cfg.psi);
  stereo::HttpServer server(manager);
  std::cerr << "listening on " << cfg.host << ":" << cfg.port << "\n";
  server.listen(cfg.host, cfg.port);
  return 0;
}

struct SimulateArgs {
  int sessions = 10;
  std::uint64_t seed = 1;
  std::vector<double> alphas{2.0};
  double beta = 3.5;
  double lambda = 0.02;
  std::string paradigm = "one_step";
  double gamma_true = 2.2;
  double agc_noise = 0.0;
  std::string grid = "default";
  std::string psi_file;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto paradigm = stereo::parse_paradigm(a.paradigm);
  if (!paradigm) throw stereo::ConfigError("paradigm must be one_step or two_step");
  stereo::SessionSettings settings;
  settings.paradigm = *paradigm;
  settings.psi = psi_config_from(a.grid, a.psi_file);

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw stereo::ConfigError("cannot open " + a.out);
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  stereo::write_simulation_csv_header(out);
  std::uint64_t seed = a.seed;
  for (double alpha : a.alphas) {
    for (int s = 0; s < a.sessions; ++s, ++seed) {
      stereo::ObserverModel obs;
      obs.true_alpha_px = alpha;
      obs.true_beta = a.beta;
      obs.true_lambda = a.lambda;
      obs.seed = seed;
      obs.agc_gamma_true = a.gamma_true;
      obs.agc_noise_amplitude = a.agc_noise;
      settings.master_seed = seed;
      stereo::write_simulation_csv_row(out, obs, stereo::run_simulated_session(settings, obs));
    }
  }
  return 0;
}

struct RenderArgs {
  std::vector<double> o1{4.59};
  std::string shape = "open_up";
  std::uint64_t seed = 42;
  double gamma = 0.0;
  std::string out_dir = ".";
  std::string prefix = "stimulus";
};

int cmd_render(const RenderArgs& a) {
  const auto shape = stereo::parse_shape(a.shape);
  if (!shape) throw stereo::ConfigError("unknown shape '" + a.shape + "'");
  const auto lut = a.gamma > 0.0 ? stereo::build_normalized_gamma_table(a.gamma) : stereo::identity_gamma_table();
  stereo::RdsConfig config;
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < a.o1.size(); ++i) {
    const auto stim = stereo::generate_rds(config, a.o1[i], *shape, a.seed + i);
    const std::string stem = a.o1.size() == 1 ? a.prefix : a.prefix + "_" + std::to_string(i);
    const fs::path png = fs::path(a.out_dir) / (stem + ".png");
    stereo::write_png(png, stereo::rasterize(stim, config, lut));
    const json sidecar{{"o1_px", stim.o1_px},
                       {"o2_px", stim.o2_px},
                       {"arcsec", stereo::pixels_to_arcsec(stim.o1_px, config.profile)},
                       {"shape", stereo::to_string(stim.shape)},
                       {"seed", stim.seed}};
    std::ofstream(fs::path(a.out_dir) / (stem + ".json")) << sidecar.dump(2) << "\n";
    std::cout << png.string() << "\n";
  }
  return 0;
}

int cmd_fit_gamma(const std::string& log, const std::string& out_json, const std::string& out_txt) {
  std::ifstream in(log);
  if (!in) throw stereo::ConfigError("cannot open " + log);
  const auto session = stereo::replay_agc_log(in);
  const auto fit = session.fit();
  const auto table = stereo::build_normalized_gamma_table(fit.gamma);
  if (!out_json.empty()) std::ofstream(out_json) << stereo::to_json_array(table).dump() << "\n";
  if (!out_txt.empty()) {
    std::ofstream txt(out_txt);
    stereo::write_gamma_table_text(txt, table);
  }
  std::cout << json{{"gamma", fit.gamma}, {"sse", fit.sse}, {"degenerate", fit.degenerate},
                    {"matched", session.matched()}, {"errors", session.errors()}}
                   .dump(2)
            << "\n";
  if (fit.degenerate) std::cerr << "warning: every match sits on a clamp boundary; gamma is range-limited\n";
  return 0;
}

int cmd_analyze(const std::string& csv, const std::string& col_a, const std::string& col_b) {
  std::ifstream in(csv);
  if (!in) throw stereo::ConfigError("cannot open " + csv);
  const auto table = stereo::CsvTable::parse(in);
  stereo::PairedSeries series{table.numeric_column(col_a), table.numeric_column(col_b)};
  series.validate();
  json report{{"n", series.a.size()}, {"a", col_a}, {"b", col_b}};
  try {
    report["spearman"] = stereo::spearman(series);
  } catch (const stereo::DomainError& e) {
    report["spearman"] = nullptr;
    report["spearman_error"] = e.what();
  }
  const auto ba = stereo::bland_altman(series);
  report["bland_altman"] = {{"bias", ba.bias}, {"sd", ba.sd}, {"loa_low", ba.loa_low}, {"loa_high", ba.loa_high}};
  try {
    report["icc_2k"] = stereo::icc_2k(stereo::RatingMatrix::from_columns({series.a, series.b}));
  } catch (const stereo::DomainError& e) {
    report["icc_2k"] = nullptr;
    report["icc_error"] = e.what();
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_export(const std::string& data_dir, const std::string& out_path) {
  std::ofstream file;
  if (!out_path.empty()) file.open(out_path);
  std::ostream& out = out_path.empty() ? std::cout : file;
  out << "session_id,paradigm,created_at,fitted_gamma,threshold_px,threshold_arcsec,posterior_mean_alpha_px,"
         "posterior_mean_alpha_arcsec,ceiling\n";
  std::vector<fs::path> logs;
  for (const auto& e : fs::directory_iterator(data_dir))
    if (e.path().extension() == ".jsonl") logs.push_back(e.path());
  std::sort(logs.begin(), logs.end());
  for (const auto& path : logs) {
    const auto s = stereo::replay_session_log(path);
    if (!s.result()) continue;
    const auto& r = *s.result();
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", s.id().c_str(),
                  std::string(stereo::to_string(s.settings().paradigm)).c_str(), s.created_at().c_str(), s.gamma(),
                  r.last_correct_o1_px, r.last_correct_arcsec, r.posterior_mean_alpha_px,
                  r.posterior_mean_alpha_arcsec, r.ceiling_flag ? 1 : 0);
    out << buf;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereoacuity testing: adaptive gamma calibration and Bayesian stereo threshold estimation"};
  app.require_subcommand(1);

  std::string serve_config, serve_host, serve_dir;
  int serve_port = 0;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--config", serve_config, "Service config JSON");
  serve->add_option("--host", serve_host, "Listen address");
  serve->add_option("--port", serve_port, "Listen port");
  serve->add_option("--data-dir", serve_dir, "Directory for session logs");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run simulated sessions and print per-session CSV");
  simulate->add_option("--sessions", sim.sessions, "Sessions per alpha")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "First seed (incremented per session)");
  simulate->add_option("--alpha", sim.alphas, "True threshold(s) in px");
  simulate->add_option("--beta", sim.beta, "True slope");
  simulate->add_option("--lambda", sim.lambda, "True lapse rate");
  simulate->add_option("--paradigm", sim.paradigm, "one_step or two_step");
  simulate->add_option("--gamma-true", sim.gamma_true, "True display gamma for calibration");
  simulate->add_option("--agc-noise", sim.agc_noise, "Uniform match noise half-width (gray units)");
  simulate->add_option("--grid", sim.grid, "default or simulation")->check(CLI::IsMember({"default", "simulation"}));
  simulate->add_option("--psi-config", sim.psi_file, "PsiConfig JSON (overrides --grid)");
  simulate->add_option("--out", sim.out, "Output CSV (stdout if omitted)");

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render-stimulus", "Write anaglyph PNG(s) with JSON sidecars");
  render_cmd->add_option("--o1", render.o1, "Disparity in px (repeat for a batch)");
  render_cmd->add_option("--shape", render.shape, "open_up, open_down, open_right, open_left");
  render_cmd->add_option("--seed", render.seed, "RNG seed (incremented per batch item)");
  render_cmd->add_option("--gamma", render.gamma, "Apply the normalized gamma table for this gamma");
  render_cmd->add_option("--out-dir", render.out_dir, "Output directory");
  render_cmd->add_option("--prefix", render.prefix, "File name prefix");

  std::string fit_log, fit_json, fit_txt;
  auto* fit = app.add_subcommand("fit-gamma", "Fit gamma from an AGC log (JSON lines)");
  fit->add_option("log", fit_log, "AGC log or session log")->required();
  fit->add_option("--table-json", fit_json, "Write the 256-entry table as a JSON array");
  fit->add_option("--table-txt", fit_txt, "Write the 256-entry table as text");

  std::string an_csv, an_a, an_b;
  auto* analyze = app.add_subcommand("analyze", "Spearman, Bland-Altman and ICC(2,k) for two CSV columns");
  analyze->add_option("csv", an_csv, "CSV with a header row")->required();
  analyze->add_option("--a", an_a, "First column")->required();
  analyze->add_option("--b", an_b, "Second column")->required();

  std::string ex_dir = "sessions", ex_out;
  auto* export_cmd = app.add_subcommand("export", "Export completed session results as CSV");
  export_cmd->add_option("--data-dir", ex_dir, "Directory holding session logs");
  export_cmd->add_option("--out", ex_out, "Output CSV (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return cmd_serve(serve_config, serve_host, serve_port, serve_dir);
    if (*simulate) return cmd_simulate(sim);
    if (*render_cmd) return cmd_render(render);
    if (*fit) return cmd_fit_gamma(fit_log, fit_json, fit_txt);
    if (*analyze) return cmd_analyze(an_csv, an_a, an_b);
    if (*export_cmd) return cmd_export(ex_dir, ex_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
