#include "ofw/cli/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ofw/cli/ingest.hpp"

namespace ofw::cli {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void set_power(Workload& w, const PowerIterConfig& power) {
  if (auto* t = std::get_if<TraceNormBall>(&w.constraint)) t->power = power;
}

Workload data_workload(const RunConfig& cfg) {
  const WorkloadSpec& spec = cfg.workload;
  const DataSpec& data = *cfg.data;
  Workload w;
  if (data.format == DataFormat::McTriplets) {
    const McParams& p = spec.mc;
    w.name = "mc-data";
    w.constraint = TraceNormBall{*spec.radius, p.m1, p.m2, spec.power};
    const Link link = p.link;
    const Index m1 = p.m1, m2 = p.m2;
    w.oracle_factory = [=] { return GradientOracle::matrix_completion(m1, m2, link); };
    return w;
  }

  const ClassificationParams& p = spec.classification;
  Index dim = 0;
  if (data.dim) {
    dim = *data.dim;
  } else {
    std::ifstream in(data.path);
    if (!in) throw Error("cannot open data file '" + data.path + "'");
    dim = infer_dim(in, data.path);
  }
  w.name = "classification-data";
  Shape shape = Shape::vector(dim);
  if (p.constraint == ClassConstraint::L1) {
    w.constraint = L1Ball{p.radius, dim};
  } else {
    if (p.m1 * p.m2 != dim) {
      throw ArgumentError("trace constraint needs m1 * m2 (" + std::to_string(p.m1 * p.m2) +
                          ") to equal the data dimension " + std::to_string(dim));
    }
    w.constraint = TraceNormBall{p.radius, p.m1, p.m2, spec.power};
    shape = Shape::matrix(p.m1, p.m2);
  }
  const LossKind loss = p.loss;
  w.oracle_factory = [=] { return GradientOracle::replay(shape, loss); };
  w.info["dim"] = static_cast<double>(dim);
  return w;
}

json fit_json(const std::vector<std::pair<double, double>>& series, double t_lo, double t_hi) {
  try {
    const SlopeFit fit = loglog_slope(series, t_lo, t_hi);
    return json{{"slope", fit.slope},   {"intercept", fit.intercept}, {"r2", fit.r2},
                {"points", fit.points}, {"excluded", fit.excluded},   {"window", {fit.t_lo, fit.t_hi}}};
  } catch (const ArgumentError& e) {
    return json{{"error", e.what()}, {"window", {t_lo, t_hi}}};
  }
}

void put_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_double(*v);
}

}  // namespace

Workload build_workload(const RunConfig& cfg) {
  if (cfg.data) return data_workload(cfg);
  const WorkloadSpec& spec = cfg.workload;
  Workload w;
  switch (spec.kind) {
    case WorkloadKind::LassoFixed: w = gen_fixed_design_lasso(spec.lasso); break;
    case WorkloadKind::LassoRandom: w = gen_random_design_lasso(spec.lasso); break;
    case WorkloadKind::Mc: w = gen_mc(spec.mc); break;
    case WorkloadKind::Classification: w = gen_classification(spec.classification); break;
  }
  if (spec.radius && spec.kind != WorkloadKind::Classification) set_radius(w, *spec.radius);
  set_power(w, spec.power);
  const bool lasso = spec.kind == WorkloadKind::LassoFixed || spec.kind == WorkloadKind::LassoRandom;
  if (lasso && !w.f_star) attach_reference(w, spec.reference_budget);
  return w;
}

std::unique_ptr<SampleStream> open_stream(const RunConfig& cfg, const Workload& w) {
  if (!cfg.data) return w.stream_factory();
  if (cfg.data->format == DataFormat::McTriplets) {
    return ingest_mc_triplets(cfg.data->path, cfg.workload.mc.m1, cfg.workload.mc.m2);
  }
  return ingest_labeled_sparse(cfg.data->path, static_cast<Index>(w.info.at("dim")));
}

Trace execute(const RunConfig& cfg, const Workload& w) {
  auto solver = make_solver(cfg.solver, w.constraint, cfg.schedule);
  GradientOracle oracle = w.oracle_factory();
  auto stream = open_stream(cfg, w);
  Trace trace = run_traced(*solver, oracle, *stream, cfg.run, w.eval_spec(cfg.cadence));
  trace.digest = cfg.digest();
  trace.seeds = cfg.seeds();
  return trace;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kCsvHeader << '\n';
  for (const TraceRow& r : trace.rows) {
    const StepRecord& s = r.step;
    out << s.t << ',' << s.n_t << ',' << to_string(s.kind) << ',' << format_double(s.gamma_hat) << ','
        << format_double(s.g_fw) << ',';
    put_optional(out, s.g_aw);
    out << ',';
    put_optional(out, r.eval.h);
    out << ',';
    put_optional(out, r.eval.grad_err_inf);
    out << ',';
    put_optional(out, r.eval.grad_err_op);
    out << ',';
    put_optional(out, r.eval.f_value);
    out << ',' << s.elapsed_ns << '\n';
  }
}

json summarize(const RunConfig& cfg, const Workload& w, const Trace& trace) {
  json j;
  j["digest"] = cfg.digest();
  j["config"] = cfg.canonical();
  j["seeds"] = cfg.seeds();

  json wl{{"name", w.name}, {"constraint", describe(w.constraint)}, {"info", w.info}};
  wl["f_star"] = w.f_star ? json(*w.f_star) : json(nullptr);
  wl["f_star_is_reference"] = w.f_star_is_reference;
  if (w.f_star_certificate) wl["f_star_certificate"] = *w.f_star_certificate;
  j["workload"] = wl;
  j["solver"] = {{"kind", to_string(cfg.solver)}, {"schedule", describe(cfg.schedule)}};

  std::int64_t fw = 0, aw = 0, drop = 0, clamped = 0;
  for (const auto& r : trace.rows) {
    fw += r.step.kind == StepKind::FW;
    aw += r.step.kind == StepKind::AW;
    drop += r.step.kind == StepKind::Drop;
    clamped += r.eval.h_clamped;
  }
  const std::int64_t steps = static_cast<std::int64_t>(trace.rows.size());
  j["steps"] = steps;
  j["truncated"] = trace.truncated;
  j["counts"] = {{"FW", fw}, {"AW", aw}, {"Drop", drop}};
  j["lmo_warnings"] = trace.lmo_warnings;
  j["saturated"] = trace.saturated;
  j["h_clamped"] = clamped;

  json fin = json::object();
  if (!trace.rows.empty()) {
    const StepRecord& last = trace.rows.back().step;
    fin["t"] = last.t;
    fin["n_t"] = last.n_t;
    fin["g_fw"] = last.g_fw;
    for (auto it = trace.rows.rbegin(); it != trace.rows.rend(); ++it) {
      if (it->eval.h) {
        fin["h_t"] = *it->eval.h;
        fin["h_t_at"] = it->step.t;
        break;
      }
    }
    const std::vector<StepRecord> records = trace.records();
    j["min_gap_tail"] = {{"T", last.t}, {"value", min_gap_tail(records, last.t)}};

    // Slopes skip the first decade, where gamma_1 = 1 dominates.
    const double t_hi = static_cast<double>(last.t);
    json slopes;
    slopes["h_t"] = fit_json(trace.series([](const TraceRow& r) { return r.eval.h; }), 10.0, t_hi);
    slopes["g_fw"] = fit_json(trace.series([](const TraceRow& r) { return std::optional<double>(r.step.g_fw); }), 10.0, t_hi);
    slopes["grad_err_inf"] = fit_json(trace.series([](const TraceRow& r) { return r.eval.grad_err_inf; }), 10.0, t_hi);
    if (w.shape().is_matrix()) {
      slopes["grad_err_op"] = fit_json(trace.series([](const TraceRow& r) { return r.eval.grad_err_op; }), 10.0, t_hi);
    }
    j["slopes"] = slopes;

    if (cfg.cadence == Cadence::Every && w.f_star) {
      std::vector<double> f;
      for (const auto& r : trace.rows)
        if (r.eval.f_value) f.push_back(*r.eval.f_value);
      if (!f.empty()) j["average_regret"] = average_regret(f, *w.f_star);
    }
  } else {
    j["min_gap_tail"] = nullptr;
    j["slopes"] = json::object();
  }
  j["final"] = fin;
  j["wall_seconds"] = trace.wall_seconds;
  return j;
}

RunOutcome run_config(const RunConfig& cfg) {
  const Workload w = build_workload(cfg);
  RunOutcome out;
  out.trace = execute(cfg, w);
  out.summary = summarize(cfg, w, out.trace);

  namespace fs = std::filesystem;
  const fs::path dir(cfg.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + cfg.output + "': " + ec.message());
  out.csv_path = (dir / "trace.csv").string();
  out.json_path = (dir / "summary.json").string();

  std::ofstream csv(out.csv_path);
  if (!csv) throw Error("cannot write '" + out.csv_path + "'");
  write_trace_csv(csv, out.trace);
  csv.close();
  if (!csv) throw Error("failed writing '" + out.csv_path + "'");

  std::ofstream js(out.json_path);
  if (!js) throw Error("cannot write '" + out.json_path + "'");
  js << out.summary.dump(2) << '\n';
  js.close();
  if (!js) throw Error("failed writing '" + out.json_path + "'");
  return out;
}

int run_command(const std::string& config_path, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  try {
    const RunOutcome r = run_config(cfg);
    const json& s = r.summary;
    out << "digest " << s["digest"].get<std::string>() << ": " << s["steps"] << " steps";
    if (r.trace.truncated) out << " (truncated: stream ended early)";
    out << ", FW/AW/Drop = " << s["counts"]["FW"] << "/" << s["counts"]["AW"] << "/" << s["counts"]["Drop"] << '\n';
    if (s["final"].contains("h_t")) out << "final h_t " << s["final"]["h_t"] << '\n';
    if (r.trace.lmo_warnings > 0) out << "warning: " << r.trace.lmo_warnings << " LMO calls did not converge\n";
    if (r.trace.saturated) out << "warning: Poisson exponent clamp engaged\n";
    out << "wrote " << r.csv_path << " and " << r.json_path << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ofw::cli
