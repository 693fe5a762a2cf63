// trs: command-line front end for tide preparation, calibration, simulation,
// training and evaluation.
//
// Exit codes: 0 success, 1 runtime or input error, 2 usage error,
// 3 calibration data that cannot identify the requested parameters.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "trs/calibration.hpp"
#include "trs/config.hpp"
#include "trs/control.hpp"
#include "trs/geometry.hpp"
#include "trs/rl/train.hpp"
#include "trs/simulator.hpp"
#include "trs/tide.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDegenerate = 3;
constexpr int kSchemaVersion = 1;

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", o.seed, "random seed (overrides config and TRS_ENGINE_SEED)");
  cmd->add_option("--jobs", o.jobs, "worker threads for rollout collection")->check(CLI::PositiveNumber);
}

trs::RunConfig resolve(const CommonOptions& o) {
  auto cfg = o.config.empty() ? trs::parse_config(json::object(), trs::seed_from_environment())
                              : trs::load_config(o.config);
  if (o.seed) cfg.seed = cfg.rl.train.seed = *o.seed;
  if (o.jobs > 0) cfg.jobs = cfg.rl.train.jobs = o.jobs;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!cfg.paths.stage_storage_csv.empty()) {
    const auto pts = trs::read_stage_storage_csv(cfg.paths.stage_storage_csv);
    cfg.plant.area = trs::fit_area_model(pts);
  }
  return cfg;
}

fs::path prepare_output(const trs::RunConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  trs::write_resolved_config(cfg, dir);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw trs::Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw trs::InvalidInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw trs::FormatError(path.string() + ": " + e.what());
  }
}

double gwh(double j) { return j / trs::kJoulesPerGWh; }

json occupancy_json(const trs::Trace& trace) {
  std::array<double, 5> occ{};
  double sluice = 0.0;
  std::size_t positive = 0;
  for (const auto& r : trace.records) {
    occ[static_cast<std::size_t>(r.turbine_mode)] += 1.0;
    sluice += r.sluice_mode == trs::SluiceMode::Online ? 1.0 : 0.0;
    positive += trs::pumping_with_positive_head(r) ? 1 : 0;
  }
  const double n = static_cast<double>(std::max<std::size_t>(trace.size(), 1));
  json o;
  for (int m = 0; m < 5; ++m) o[trs::to_string(static_cast<trs::TurbineMode>(m))] = occ[static_cast<std::size_t>(m)] / n;
  return {{"turbine_mode_fraction", o},
          {"sluice_open_fraction", sluice / n},
          {"positive_head_pumping_steps", positive}};
}

json energy_json(const std::string& label, const trs::EnergySummary& e, const trs::Trace& trace) {
  return {{"schema_version", kSchemaVersion},
          {"label", label},
          {"steps", trace.size()},
          {"dt_s", trace.dt_s},
          {"days", static_cast<double>(trace.size()) * trace.dt_s / 86400.0},
          {"generated_j", e.generated_j},
          {"pump_input_j", e.pump_input_j},
          {"net_j", e.net_j},
          {"generated_gwh", gwh(e.generated_j)},
          {"pump_gwh", gwh(e.pump_input_j)},
          {"net_gwh", gwh(e.net_j)},
          {"occupancy", occupancy_json(trace)}};
}

std::size_t steps_for(const trs::TideSeries& tide, double dt_s, std::optional<double> horizon_days) {
  const double span = tide.end_time() - static_cast<double>(tide.start_time());
  const double want = horizon_days ? *horizon_days * 86400.0 : span;
  if (want > span + 1e-6)
    throw trs::InvalidInput("horizon of " + std::to_string(want / 86400.0) + " days exceeds the tide span of " +
                            std::to_string(span / 86400.0) + " days");
  const auto n = static_cast<std::size_t>(std::floor(want / dt_s + 1e-9));
  if (n == 0) throw trs::InvalidInput("horizon shorter than one step");
  return n;
}

// ---- commands --------------------------------------------------------------

struct TideGenOptions {
  CommonOptions common;
  std::optional<double> duration_days, dt_s;
  std::string csv;
};

int cmd_tide_gen(const TideGenOptions& o) {
  auto cfg = resolve(o.common);
  if (o.duration_days) cfg.tide.duration_days = *o.duration_days;
  if (o.dt_s) cfg.tide.dt_s = *o.dt_s;
  trs::validate(cfg);
  cfg.paths.tide_csv.clear();
  const auto dir = prepare_output(cfg);
  const auto tide = trs::build_tide(cfg);
  const fs::path csv = o.csv.empty() ? dir / "tide.csv" : fs::path(o.csv);
  trs::export_tide_csv(tide, csv);
  const auto ranges = trs::tidal_ranges(tide);
  double max_range = 0.0, mean_range = 0.0;
  for (double r : ranges) max_range = std::max(max_range, r), mean_range += r;
  if (!ranges.empty()) mean_range /= static_cast<double>(ranges.size());
  write_json(dir / "tide_summary.json", {{"schema_version", kSchemaVersion},
                                         {"samples", tide.size()},
                                         {"dt_s", tide.dt()},
                                         {"start_s", tide.start_time()},
                                         {"min_m", tide.min()},
                                         {"max_m", tide.max()},
                                         {"mean_m", tide.mean()},
                                         {"max_range_m", max_range},
                                         {"mean_range_m", mean_range},
                                         {"csv", csv.string()}});
  std::printf("wrote %zu samples (dt %.0f s) to %s\n", tide.size(), tide.dt(), csv.string().c_str());
  std::printf("level %.3f .. %.3f m, mean range %.3f m, max range %.3f m\n", tide.min(), tide.max(), mean_range,
              max_range);
  return 0;
}

struct TideCalibrateOptions {
  std::string predicted, reference, out;
};

int cmd_tide_calibrate(const TideCalibrateOptions& o) {
  const auto p = trs::ingest_tide_csv(o.predicted);
  const auto r = trs::ingest_tide_csv(o.reference);
  const double cf = trs::calibrate_correction_factor(p, r);
  if (!o.out.empty())
    write_json(o.out, {{"schema_version", kSchemaVersion},
                       {"correction_factor", cf},
                       {"predicted", o.predicted},
                       {"reference", o.reference}});
  std::printf("C_f = %.12g\n", cf);
  return 0;
}

struct FitAreaOptions {
  std::string input, out;
};

int cmd_fit_area(const FitAreaOptions& o) {
  const auto pts = trs::read_stage_storage_csv(o.input);
  const auto m = trs::fit_area_model(pts);
  json rows = json::array();
  std::printf("s = %.6f m^2/m, Al0 = %.3f m^2 (Al = %.6f z + %.3f)\n", m.s(), m.al0, m.slope_2s, m.al0);
  std::printf("%10s %16s %16s %10s\n", "z_m", "dV_m3", "fit_m3", "resid_%");
  for (const auto& p : pts) {
    const double fit = trs::volume_between(m, 0.0, p.z_m);
    const double rel = p.delta_v_m3 != 0.0 ? (fit - p.delta_v_m3) / p.delta_v_m3 : 0.0;
    std::printf("%10.3f %16.1f %16.1f %10.3f\n", p.z_m, p.delta_v_m3, fit, 100.0 * rel);
    rows.push_back({{"z_m", p.z_m}, {"delta_v_m3", p.delta_v_m3}, {"fit_m3", fit}, {"relative_residual", rel}});
  }
  if (!o.out.empty())
    write_json(o.out, {{"schema_version", kSchemaVersion},
                       {"s", m.s()},
                       {"al0_m2", m.al0},
                       {"slope_2s_m2_per_m", m.slope_2s},
                       {"points", rows}});
  return 0;
}

struct FitCdOptions {
  CommonOptions common;
  std::vector<std::string> traces;
};

trs::SluicingTrace sluicing_trace_from(const trs::Trace& t, const std::string& name) {
  if (t.records.size() < 2) throw trs::InvalidInput(name + ": need at least two rows");
  const auto& first = t.records.front();
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const auto& r = t.records[i];
    if (r.turbine_mode != first.turbine_mode || r.sluice_mode != first.sluice_mode)
      throw trs::FormatError(name + ": modes change within a sluicing trace", i + 2);
  }
  if (first.turbine_mode != trs::TurbineMode::Idling && first.turbine_mode != trs::TurbineMode::Offline)
    throw trs::InvalidInput(name + ": sluicing traces may only idle the turbines");
  std::vector<double> ocean, lagoon;
  for (const auto& r : t.records) {
    ocean.push_back(r.ocean_z);
    lagoon.push_back(r.lagoon_z);
  }
  return {trs::TideSeries(std::llround(first.time_s), t.dt_s, std::move(ocean)), std::move(lagoon),
          {first.turbine_mode, first.sluice_mode, 0.0}};
}

int cmd_fit_cd(const FitCdOptions& o) {
  const auto cfg = resolve(o.common);
  std::vector<trs::SluicingTrace> traces;
  for (const auto& f : o.traces) traces.push_back(sluicing_trace_from(trs::import_trace(f), f));
  const auto fit = trs::fit_discharge_coefficients(traces, cfg.plant);
  auto unit = cfg.plant;
  unit.coeffs = {1.0, 1.0};
  const double nssd_unit = trs::nssd(traces, unit);
  const auto dir = prepare_output(cfg);
  write_json(dir / "fit_cd.json", {{"schema_version", kSchemaVersion},
                                   {"cd_sluice", fit.coeffs.cd_sluice},
                                   {"cd_turbine", fit.coeffs.cd_turbine},
                                   {"nssd", fit.nssd},
                                   {"nssd_at_unit_coefficients", nssd_unit},
                                   {"traces", o.traces}});
  std::printf("C_d = %.5f, C_dt = %.5f (NSSD %.6g; at (1, 1): %.6g)\n", fit.coeffs.cd_sluice, fit.coeffs.cd_turbine,
              fit.nssd, nssd_unit);
  return 0;
}

struct FitZetaOptions {
  CommonOptions common;
  std::vector<std::string> traces;
  std::string direction = "ebb";
};

trs::PowerTrace read_power_trace(const std::string& path) {
  const auto t = trs::csv::read(path, {"time_s", "head_m", "power_w"});
  if (t.rows.size() < 2) throw trs::FormatError(path + ": need at least two rows");
  trs::PowerTrace tr;
  double prev = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::size_t row = i + 2;
    const double time = trs::csv::parse_double(t.rows[i][0], row, "time_s");
    if (i == 1) tr.dt_s = time - prev;
    if (i > 1 && std::abs((time - prev) - tr.dt_s) > 1e-6 * tr.dt_s)
      throw trs::FormatError(path + ": irregular sampling", row);
    if (i > 0 && !(time > prev)) throw trs::FormatError(path + ": time not increasing", row);
    prev = time;
    tr.head_m.push_back(trs::csv::parse_double(t.rows[i][1], row, "head_m"));
    tr.power_w.push_back(trs::csv::parse_double(t.rows[i][2], row, "power_w"));
  }
  return tr;
}

int cmd_fit_zeta(const FitZetaOptions& o) {
  const auto cfg = resolve(o.common);
  const auto dir = trs::parse_direction(o.direction);
  std::vector<trs::PowerTrace> traces;
  for (const auto& f : o.traces) traces.push_back(read_power_trace(f));
  const auto& chart = dir == trs::Direction::Ebb ? cfg.plant.ebb_chart : cfg.plant.flood_chart;
  const auto fit = trs::calibrate_zeta(traces, chart, cfg.plant.spec, cfg.plant.coeffs.cd_turbine);
  const auto out = prepare_output(cfg);
  write_json(out / "fit_zeta.json", {{"schema_version", kSchemaVersion},
                                     {"direction", o.direction},
                                     {"zeta_accel_min", fit.zeta_accel_min},
                                     {"zeta_decel_min", fit.zeta_decel_min},
                                     {"ssr", fit.ssr},
                                     {"degenerate", fit.degenerate}});
  if (fit.degenerate) {
    std::fprintf(stderr,
                 "fit-zeta: the traces never leave steady state, so the ramp constants are not identifiable "
                 "(reporting the lower bound %.3f min)\n",
                 fit.zeta_accel_min);
    return kExitDegenerate;
  }
  std::printf("%s: zeta_A = %.4f min, zeta_D = %.4f min (SSR %.6g)\n", o.direction.c_str(), fit.zeta_accel_min,
              fit.zeta_decel_min, fit.ssr);
  return 0;
}

struct SimulateOptions {
  CommonOptions common;
  std::string scheme, tide;
  std::optional<double> horizon_days, dt_s, initial_lagoon_z;
};

int cmd_simulate(const SimulateOptions& o) {
  auto cfg = resolve(o.common);
  if (!o.scheme.empty()) cfg.control.scheme = o.scheme;
  if (!o.tide.empty()) cfg.paths.tide_csv = o.tide;
  if (o.horizon_days) cfg.simulation.horizon_days = *o.horizon_days;
  if (o.dt_s) cfg.simulation.dt_s = *o.dt_s;
  if (o.initial_lagoon_z) cfg.simulation.initial_lagoon_z = *o.initial_lagoon_z;
  trs::validate(cfg);
  const auto tide = trs::build_tide(cfg);
  const auto n = steps_for(tide, cfg.simulation.dt_s, cfg.simulation.horizon_days);
  auto controller = trs::make_controller(cfg.control, cfg.plant);
  trs::SimulationOptions opt;
  opt.dt_s = cfg.simulation.dt_s;
  opt.horizon_s = static_cast<double>(n) * opt.dt_s;
  const double t0 = static_cast<double>(tide.start_time());
  const double lagoon0 = std::isnan(cfg.simulation.initial_lagoon_z) ? trs::ocean_z_at(tide, t0)
                                                                     : cfg.simulation.initial_lagoon_z;
  trs::PlantState final_state;
  const auto trace = trs::simulate(*controller, tide, lagoon0, opt, cfg.plant, &final_state);
  const auto e = trs::energy_summary(trace);
  const auto dir = prepare_output(cfg);
  trs::export_trace(trace, dir / "trace.csv");
  auto summary = energy_json(cfg.control.scheme, e, trace);
  summary["scheme"] = cfg.control.scheme;
  summary["diagnostics"] = {{"area_clamps", final_state.diagnostics.area_clamps},
                            {"guard_band_clamps", final_state.diagnostics.guard_band_clamps}};
  write_json(dir / "summary.json", summary);
  std::printf("%s over %.2f days: generated %.4f GWh, pumped %.4f GWh, net %.4f GWh\n", cfg.control.scheme.c_str(),
              static_cast<double>(n) * opt.dt_s / 86400.0, gwh(e.generated_j), gwh(e.pump_input_j), gwh(e.net_j));
  std::printf("trace: %s\n", (dir / "trace.csv").string().c_str());
  return 0;
}

struct TrainOptions {
  CommonOptions common;
  std::optional<std::int64_t> total_steps;
  std::optional<int> n_envs, rollout_steps;
  std::optional<double> episode_days;
};

int cmd_train(const TrainOptions& o) {
  auto cfg = resolve(o.common);
  auto& tc = cfg.rl.train;
  if (o.total_steps) tc.total_steps = *o.total_steps;
  if (o.n_envs) tc.n_envs = *o.n_envs;
  if (o.rollout_steps) tc.rollout_steps = *o.rollout_steps;
  if (o.episode_days) cfg.rl.episode_days = *o.episode_days;
  trs::validate(cfg);
  const auto tide = std::make_shared<const trs::TideSeries>(trs::build_tide(cfg));
  const auto episode_steps =
      static_cast<std::size_t>(std::llround(cfg.rl.episode_days * 86400.0 / cfg.simulation.dt_s));
  const auto dir = prepare_output(cfg);
  const auto started = std::chrono::steady_clock::now();
  const int planned = trs::rl::planned_updates(tc);
  auto result = trs::rl::train(
      [&](int) { return trs::rl::make_env(tide, cfg.plant, episode_steps, cfg.simulation.dt_s); }, tc,
      [&](const trs::rl::CurvePoint& p, const trs::rl::LossInfo&) {
        if (p.update % 50 == 0 || p.update + 1 == planned)
          std::printf("update %d/%d: mean episode energy %.4f GWh, entropy %.3f, beta %.5f\n", p.update + 1, planned,
                      gwh(p.mean_episode_energy_j), p.entropy, p.beta);
      });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  trs::rl::save_policy(result.policy, dir / "policy.json");
  trs::rl::write_learning_curve(result.curve, dir / "learning_curve.csv");
  const auto& last = result.curve.back();
  write_json(dir / "train_summary.json", {{"schema_version", kSchemaVersion},
                                          {"updates", result.curve.size()},
                                          {"env_steps", static_cast<std::int64_t>(result.curve.size()) * tc.n_envs *
                                                            tc.rollout_steps},
                                          {"episode_steps", episode_steps},
                                          {"final_mean_episode_energy_j", last.mean_episode_energy_j},
                                          {"final_entropy", last.entropy},
                                          {"checkpoint", (dir / "policy.json").string()},
                                          {"learning_curve", (dir / "learning_curve.csv").string()}});
  std::printf("trained %zu updates in %.1f s; checkpoint %s\n", result.curve.size(), secs,
              (dir / "policy.json").string().c_str());
  return 0;
}

struct EvaluateOptions {
  CommonOptions common;
  std::string checkpoint, scheme, tide;
  std::optional<std::uint64_t> random_seed;
  std::optional<double> horizon_days;
  std::string label;
};

int cmd_evaluate(const EvaluateOptions& o) {
  auto cfg = resolve(o.common);
  if (!o.tide.empty()) cfg.paths.tide_csv = o.tide;
  trs::validate(cfg);
  const int sources = !o.checkpoint.empty() + !o.scheme.empty() + o.random_seed.has_value();
  if (sources != 1) throw trs::InvalidInput("evaluate: give exactly one of --checkpoint, --scheme, --random");
  const auto tide = std::make_shared<const trs::TideSeries>(trs::build_tide(cfg));
  const auto n = steps_for(*tide, cfg.simulation.dt_s, o.horizon_days);
  const trs::rl::EnvConfig ec{n, cfg.simulation.dt_s, false};

  trs::rl::EvaluationReport rep;
  std::string label = o.label;
  if (!o.checkpoint.empty()) {
    const auto policy = trs::rl::load_policy(o.checkpoint);
    rep = trs::rl::evaluate(policy, trs::rl::Env(tide, cfg.plant, ec, policy.norm));
    if (label.empty()) label = "ppo";
  } else if (!o.scheme.empty()) {
    auto cc = cfg.control;
    cc.scheme = o.scheme;
    auto controller = trs::make_controller(cc, cfg.plant);
    rep = trs::rl::evaluate_controller(*controller, trs::rl::Env(tide, cfg.plant, ec, trs::rl::level_norm_from(*tide)));
    if (label.empty()) label = o.scheme;
  } else {
    rep = trs::rl::evaluate_random(trs::rl::Env(tide, cfg.plant, ec, trs::rl::level_norm_from(*tide)), *o.random_seed);
    if (label.empty()) label = "random";
  }
  const auto dir = prepare_output(cfg);
  trs::export_trace(rep.trace, dir / "trace.csv");
  auto j = energy_json(label, rep.energy, rep.trace);
  j["coerced_actions"] = rep.coerced_actions;
  j["guard_band_clamps"] = rep.guard_band_clamps;
  j["reward_energy_j"] = rep.reward_energy_j;
  write_json(dir / "evaluation.json", j);
  std::printf("%s over %.2f days: generated %.4f GWh, pumped %.4f GWh, net %.4f GWh\n", label.c_str(),
              static_cast<double>(rep.steps) * cfg.simulation.dt_s / 86400.0, gwh(rep.energy.generated_j),
              gwh(rep.energy.pump_input_j), gwh(rep.energy.net_j));
  std::printf("pumping at positive head: %zu steps; turbine modes", rep.positive_head_pumping_steps);
  for (int m = 0; m < 5; ++m)
    std::printf(" %s %.3f", trs::to_string(static_cast<trs::TurbineMode>(m)),
                rep.turbine_occupancy[static_cast<std::size_t>(m)]);
  std::printf("\n");
  return 0;
}

struct ReportOptions {
  std::vector<std::string> inputs;
  std::string out;
};

int cmd_report(const ReportOptions& o) {
  if (o.inputs.empty()) throw trs::InvalidInput("report: no input files");
  const fs::path dir = o.out.empty() ? fs::path("out") : fs::path(o.out);
  fs::create_directories(dir);
  json rows = json::array();
  double sums[3] = {0, 0, 0};
  trs::csv::Writer w(dir / "report.csv", {"label", "generated_gwh", "pump_gwh", "net_gwh", "days"});
  std::printf("%-24s %14s %14s %14s %8s\n", "label", "generated_GWh", "pump_GWh", "net_GWh", "days");
  for (const auto& f : o.inputs) {
    const auto j = read_json(f);
    if (j.value("schema_version", 0) != kSchemaVersion) throw trs::FormatError(f + ": unsupported schema_version");
    const std::string label = j.value("label", fs::path(f).stem().string());
    const double g = j.at("generated_gwh").get<double>(), p = j.at("pump_gwh").get<double>(),
                 n = j.at("net_gwh").get<double>(), d = j.at("days").get<double>();
    sums[0] += g;
    sums[1] += p;
    sums[2] += n;
    w.row(label, g, p, n, d);
    rows.push_back({{"label", label}, {"generated_gwh", g}, {"pump_gwh", p}, {"net_gwh", n}, {"days", d}, {"source", f}});
    std::printf("%-24s %14.4f %14.4f %14.4f %8.2f\n", label.c_str(), g, p, n, d);
  }
  write_json(dir / "report.json", {{"schema_version", kSchemaVersion},
                                   {"rows", rows},
                                   {"column_sums", {{"generated_gwh", sums[0]}, {"pump_gwh", sums[1]}, {"net_gwh", sums[2]}}}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tidal range structure operation: simulation, calibration and PPO control"};
  app.require_subcommand(1);

  TideGenOptions tg;
  auto* c_tg = app.add_subcommand("tide-gen", "synthesize harmonic tide forcing to CSV");
  add_common(c_tg, tg.common);
  c_tg->add_option("--duration-days", tg.duration_days);
  c_tg->add_option("--dt", tg.dt_s, "sampling interval in seconds");
  c_tg->add_option("--csv", tg.csv, "tide CSV path (default <out>/tide.csv)");

  TideCalibrateOptions tc;
  auto* c_tc = app.add_subcommand("tide-calibrate", "correction factor of a prediction against a reference");
  c_tc->add_option("--predicted", tc.predicted)->required()->check(CLI::ExistingFile);
  c_tc->add_option("--reference", tc.reference)->required()->check(CLI::ExistingFile);
  c_tc->add_option("--out", tc.out, "JSON result path");

  FitAreaOptions fa;
  auto* c_fa = app.add_subcommand("fit-area", "fit the linear wetted-area model to a stage-storage CSV");
  c_fa->add_option("--input", fa.input)->required()->check(CLI::ExistingFile);
  c_fa->add_option("--out", fa.out, "JSON result path");

  FitCdOptions fc;
  auto* c_fc = app.add_subcommand("fit-cd", "fit sluice and turbine discharge coefficients to sluicing traces");
  add_common(c_fc, fc.common);
  c_fc->add_option("--traces", fc.traces, "trace CSVs as written by simulate")->required()->check(CLI::ExistingFile);

  FitZetaOptions fz;
  auto* c_fz = app.add_subcommand("fit-zeta", "fit ramp time constants to power traces");
  add_common(c_fz, fz.common);
  c_fz->add_option("--traces", fz.traces, "CSVs with time_s,head_m,power_w")->required()->check(CLI::ExistingFile);
  c_fz->add_option("--direction", fz.direction, "ebb|flood");

  SimulateOptions sm;
  auto* c_sm = app.add_subcommand("simulate", "run a heuristic controller over a tide");
  add_common(c_sm, sm.common);
  c_sm->add_option("--scheme", sm.scheme, "eog|twp|offline|sluice|idle|gates");
  c_sm->add_option("--tide", sm.tide, "tide CSV (overrides synthesis)");
  c_sm->add_option("--horizon-days", sm.horizon_days);
  c_sm->add_option("--dt", sm.dt_s, "simulation step in seconds");
  c_sm->add_option("--initial-lagoon", sm.initial_lagoon_z, "initial lagoon level on the tidal datum");

  TrainOptions tr;
  auto* c_tr = app.add_subcommand("train", "train a PPO policy");
  add_common(c_tr, tr.common);
  c_tr->add_option("--total-steps", tr.total_steps);
  c_tr->add_option("--n-envs", tr.n_envs);
  c_tr->add_option("--rollout-steps", tr.rollout_steps);
  c_tr->add_option("--episode-days", tr.episode_days);

  EvaluateOptions ev;
  auto* c_ev = app.add_subcommand("evaluate", "greedy rollout of a policy, heuristic or random actions");
  add_common(c_ev, ev.common);
  c_ev->add_option("--checkpoint", ev.checkpoint)->check(CLI::ExistingFile);
  c_ev->add_option("--scheme", ev.scheme, "heuristic scheme driven through the same path");
  c_ev->add_option("--random", ev.random_seed, "uniformly random actions with this seed");
  c_ev->add_option("--tide", ev.tide, "tide CSV (overrides synthesis)");
  c_ev->add_option("--horizon-days", ev.horizon_days, "default: the whole tide");
  c_ev->add_option("--label", ev.label);

  ReportOptions rp;
  auto* c_rp = app.add_subcommand("report", "tabulate evaluation or simulation summaries");
  c_rp->add_option("--inputs", rp.inputs, "summary JSON files")->check(CLI::ExistingFile);
  c_rp->add_option("--out", rp.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_tg) return cmd_tide_gen(tg);
    if (*c_tc) return cmd_tide_calibrate(tc);
    if (*c_fa) return cmd_fit_area(fa);
    if (*c_fc) return cmd_fit_cd(fc);
    if (*c_fz) return cmd_fit_zeta(fz);
    if (*c_sm) return cmd_simulate(sm);
    if (*c_tr) return cmd_train(tr);
    if (*c_ev) return cmd_evaluate(ev);
    if (*c_rp) return cmd_report(rp);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
