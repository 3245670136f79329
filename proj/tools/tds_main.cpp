// Command-line driver: pointwise bounds, K-triple enumeration, sweeps, the
// exploratory grid mode, interval certificates and their audits, and the
// result tables. Thin and sequential by design; every document carries the
// config hash and solver description, and exit codes distinguish clean
// results (0), results containing non-rigorous or flagged content (2), and
// requests whose artifact could not be produced or validated (3).

#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tds/harmonic.hpp"
#include "tds/nozaki.hpp"
#include "tds/programs.hpp"
#include "tds/reporting.hpp"
#include "tds/sos.hpp"
#include "tds/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNonRigorous = 2;
constexpr int kExitFailure = 3;

using nlohmann::json;

tds::KTriple parse_k(const std::string& s) {
  tds::KTriple k;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> k.k1 >> c1 >> k.k2 >> c2 >> k.k3) || c1 != ',' || c2 != ',' || !in.eof())
    throw CLI::ValidationError("--k", "expected three comma-separated integers, e.g. 1,-3,3");
  return k;
}

std::vector<int> parse_int_list(const std::string& s, std::size_t expected = 0) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stoi(item));
  if (expected != 0 && out.size() != expected)
    throw CLI::ValidationError("list", "expected " + std::to_string(expected) + " integers");
  return out;
}

json bound_value_json(const tds::BoundValue& b) {
  json j;
  if (std::isfinite(b.value)) j["value"] = b.value;
  j["status"] = tds::to_string(b.status);
  j["safety_margin"] = b.safety_margin;
  return j;
}

json document_head(const std::string& command, const tds::RunConfig& cfg) {
  json j;
  j["command"] = command;
  j["config"] = tds::config_json(cfg);
  j["config_hash"] = tds::config_hash(cfg);
  j["solver"] = tds::solver_info(cfg.solver);
  return j;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
    if (text.empty() || text.back() != '\n') std::fputc('\n', stdout);
  } else {
    tds::write_text_file(out_path, text.empty() || text.back() == '\n' ? text : text + "\n");
  }
}

void emit_json(const json& doc, const std::string& out_path) { emit(doc.dump(2), out_path); }

// Flags override the config file, which overrides the defaults; environment
// variables override everything (they are the operational escape hatch).
struct ConfigFlags {
  std::string config_path;
  std::optional<int> p_lp, p_sdp, workers, max_iterations;
  std::optional<double> step, refine_step, width, width_floor;
  std::optional<double> feas_tol, gap_tol, time_limit;
  std::optional<std::string> cache_dir, format;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON config file (schema in README)");
    app.add_option("--plp", p_lp, "LP Gegenbauer degree");
    app.add_option("--psdp", p_sdp, "SDP moment degree");
    app.add_option("--step", step, "d3 sweep grid step");
    app.add_option("--refine-step", refine_step, "local-maximum refinement resolution");
    app.add_option("--width", width, "certificate interval width");
    app.add_option("--width-floor", width_floor, "certificate bisection floor");
    app.add_option("--cache-dir", cache_dir, "solve cache directory (empty disables)");
    app.add_option("--format", format, "table output format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--workers", workers, "sweep worker threads");
    app.add_option("--feas-tol", feas_tol, "solver feasibility tolerance");
    app.add_option("--gap-tol", gap_tol, "solver gap tolerance");
    app.add_option("--max-iterations", max_iterations, "solver iteration cap");
    app.add_option("--time-limit", time_limit, "per-solve time limit in seconds (0 = none)");
  }

  tds::RunConfig resolve() const {
    tds::RunConfig cfg;
    if (!config_path.empty()) cfg = tds::load_config(config_path);
    if (p_lp) cfg.params.p_lp = *p_lp;
    if (p_sdp) cfg.params.p_sdp = *p_sdp;
    if (step) cfg.step = *step;
    if (refine_step) cfg.refine_step = *refine_step;
    if (width) cfg.interval_width = *width;
    if (width_floor) cfg.width_floor = *width_floor;
    if (cache_dir) cfg.cache_dir = *cache_dir;
    if (format) cfg.format = *format;
    if (workers) cfg.workers = *workers;
    if (feas_tol) cfg.solver.feas_tol = *feas_tol;
    if (gap_tol) cfg.solver.gap_tol = *gap_tol;
    if (max_iterations) cfg.solver.max_iterations = *max_iterations;
    if (time_limit) cfg.solver.time_limit_seconds = *time_limit;
    tds::apply_env_overrides(cfg);
    return cfg;
  }
};

tds::DistanceTriple resolve_triple(const std::optional<std::string>& k_text, double d1, double d2,
                                   double d3, bool have_explicit, tds::KTriple* k_out) {
  if (k_text) {
    const tds::KTriple k = parse_k(*k_text);
    if (k_out) *k_out = k;
    const auto d = tds::recover_distances(k, d3);
    if (!d)
      throw CLI::ValidationError("--d3", "no valid distance triple for this K-triple at d3");
    return *d;
  }
  if (!have_explicit)
    throw CLI::ValidationError("bound", "give either --k with --d3, or all of --d1 --d2 --d3");
  const tds::DistanceTriple d{d1, d2, d3};
  if (!d.valid())
    throw CLI::ValidationError("bound", "distances must satisfy -1 <= d1 < d2 < d3 < 1");
  return d;
}

int cmd_bound(const std::string& kind, int n, const tds::RunConfig& cfg,
              const tds::DistanceTriple& d, const std::optional<tds::KTriple>& k,
              const std::string& out_path) {
  json doc = document_head("bound " + kind, cfg);
  doc["n"] = n;
  doc["distances"] = {d.d1, d.d2, d.d3};
  if (k) doc["k"] = {k->k1, k->k2, k->k3};

  int exit_code = kExitOk;
  if (kind == "hb") {
    const tds::HarmonicBound hb = tds::harmonic_bound(n, d);
    doc["value"] = hb.value;
    doc["value_with_ambiguous"] = hb.value_with_ambiguous;
    doc["ambiguous"] = hb.ambiguous;
  } else {
    const tds::BoundValue b =
        kind == "lp" ? tds::solve_bound(tds::build_delsarte_lp(n, d, cfg.params.p_lp), cfg.solver)
                     : tds::solve_bound(tds::build_sdp_primal(n, d, cfg.params), cfg.solver);
    doc["bound"] = bound_value_json(b);
    if (!std::isfinite(b.value)) exit_code = kExitFailure;
  }
  emit_json(doc, out_path);
  return exit_code;
}

int cmd_enumerate_k(int n, const tds::RunConfig& cfg, const std::string& out_path) {
  const tds::NozakiContext ctx = tds::nozaki_context(n);
  const std::vector<tds::KTriple> triples = tds::enumerate_k_triples(n);
  json doc = document_head("enumerate-k", cfg);
  doc["n"] = n;
  doc["N"] = ctx.N;
  doc["k_cap"] = ctx.k_cap;
  doc["small_set_floor"] = ctx.small_set_floor();
  doc["count"] = triples.size();
  json list = json::array();
  for (const auto& k : triples) list.push_back({k.k1, k.k2, k.k3});
  doc["triples"] = std::move(list);
  emit_json(doc, out_path);
  return kExitOk;
}

int cmd_sweep(int n, const tds::KTriple& k, bool with_lp, bool records, const tds::RunConfig& cfg,
              const std::string& out_path) {
  tds::SolveCache cache = cfg.cache_dir.empty()
                              ? tds::SolveCache()
                              : tds::SolveCache(std::filesystem::path(cfg.cache_dir));
  tds::SweepConfig sc = tds::sweep_config(cfg, cache.enabled() ? &cache : nullptr);
  sc.with_lp = with_lp;
  const tds::TripleSweep sweep = tds::sweep_triple(n, k, sc);

  std::int64_t bound = 0;
  for (const auto& r : sweep.records)
    bound = std::max(bound, static_cast<std::int64_t>(std::floor(r.b)));

  json doc = document_head("sweep", cfg);
  doc["n"] = n;
  doc["k"] = {k.k1, k.k2, k.k3};
  doc["samples"] = sweep.records.size();
  doc["skipped_samples"] = sweep.skipped_samples;
  doc["hb_ceiling"] = sweep.hb_ceiling;
  doc["bound"] = bound;
  doc["flagged"] = sweep.any_failure;
  if (std::isfinite(sweep.max_sdp.value))
    doc["max_sdp"] = {{"d3", sweep.max_sdp.d3}, {"value", sweep.max_sdp.value}};
  if (std::isfinite(sweep.max_lp.value))
    doc["max_lp"] = {{"d3", sweep.max_lp.d3}, {"value", sweep.max_lp.value}};
  if (records) {
    json list = json::array();
    for (const auto& r : sweep.records) {
      json row;
      row["d3"] = r.d3;
      row["distances"] = {r.distances.d1, r.distances.d2, r.distances.d3};
      row["hb"] = r.hb;
      row["sdp"] = bound_value_json(r.sdp);
      if (r.lp) row["lp"] = bound_value_json(*r.lp);
      row["b"] = r.b;
      row["flagged"] = r.flagged;
      list.push_back(std::move(row));
    }
    doc["records"] = std::move(list);
  }
  emit_json(doc, out_path);
  return sweep.any_failure ? kExitNonRigorous : kExitOk;
}

int cmd_grid_sweep(int n, const std::vector<int>& parts, const tds::RunConfig& cfg,
                   const std::string& out_path) {
  tds::SolveCache cache = cfg.cache_dir.empty()
                              ? tds::SolveCache()
                              : tds::SolveCache(std::filesystem::path(cfg.cache_dir));
  tds::SweepConfig sc = tds::sweep_config(cfg, cache.enabled() ? &cache : nullptr);
  const tds::GridReport rep = tds::grid_sweep_no_nozaki(n, parts[0], parts[1], parts[2], sc);

  json doc = document_head("grid-sweep", cfg);
  doc["n"] = rep.n;
  doc["parts"] = {rep.parts1, rep.parts2, rep.parts3};
  doc["cells_valid"] = rep.cells_valid;
  doc["cells_solved"] = rep.solved_cells.size();
  doc["overall"] = rep.overall;
  doc["rigorous"] = rep.rigorous;  // always false: no inter-sample certificate
  doc["flagged"] = rep.any_failure;
  doc["best"] = {{"d1", rep.best.d1},
                 {"d2", rep.best.d2},
                 {"d3", rep.best.d3},
                 {"hb", rep.best.hb},
                 {"sdp", bound_value_json(rep.best.sdp)},
                 {"bound", rep.best.bound}};
  emit_json(doc, out_path);
  return kExitNonRigorous;
}

int cmd_certify(int n, const tds::KTriple& k, double a1, double a2, bool bisect,
                const tds::RunConfig& cfg, const std::string& out_path) {
  json doc = document_head("certify", cfg);
  doc["n"] = n;
  doc["k"] = {k.k1, k.k2, k.k3};
  doc["interval"] = {a1, a2};

  bool ok = true;
  double worst = 0.0;
  json pieces = json::array();
  if (bisect) {
    const tds::CoverResult cover =
        tds::certify_cover(n, k, a1, a2, cfg.params, cfg.solver, cfg.width_floor);
    ok = cover.complete;
    for (const auto& c : cover.pieces) {
      ok = ok && c.valid() && tds::audit_certificate(c).pass;
      worst = std::max(worst, c.certified_bound);
      pieces.push_back(tds::certificate_to_json(c));
    }
    doc["complete"] = cover.complete;
  } else {
    const tds::SosCertificate c = tds::certify_interval(n, k, a1, a2, cfg.params, cfg.solver);
    ok = c.valid() && tds::audit_certificate(c).pass;
    worst = c.certified_bound;
    pieces.push_back(tds::certificate_to_json(c));
    doc["complete"] = ok;
  }
  doc["pieces"] = std::move(pieces);
  doc["certified_bound"] = worst;  // max over pieces: valid on the whole interval
  doc["valid"] = ok;
  emit_json(doc, out_path);
  return ok ? kExitOk : kExitFailure;
}

int cmd_audit(const std::string& in_path, const tds::RunConfig& cfg,
              const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) {
    std::fprintf(stderr, "audit: cannot open %s\n", in_path.c_str());
    return kExitFailure;
  }
  json j = json::parse(in);
  std::vector<json> cert_jsons;
  if (j.contains("pieces"))
    for (const auto& p : j.at("pieces")) cert_jsons.push_back(p);
  else
    cert_jsons.push_back(j);

  json doc = document_head("audit", cfg);
  doc["input"] = in_path;
  bool pass = !cert_jsons.empty();
  json results = json::array();
  for (const auto& cj : cert_jsons) {
    const tds::SosCertificate c = tds::certificate_from_json(cj);
    const tds::AuditReport rep = tds::audit_certificate(c);
    pass = pass && rep.pass && c.valid();
    json r;
    r["interval"] = {c.a1, c.a2};
    r["certified_bound"] = c.certified_bound;
    r["stored_margins_valid"] = c.valid();
    r["audit_pass"] = rep.pass;
    r["findings"] = rep.findings;
    results.push_back(std::move(r));
  }
  doc["results"] = std::move(results);
  doc["pass"] = pass;
  emit_json(doc, out_path);
  return pass ? kExitOk : kExitFailure;
}

int cmd_table2(const std::vector<int>& dims, const std::vector<std::string>& row_specs,
               const tds::RunConfig& cfg, const std::string& out_path) {
  std::vector<tds::Table2Row> rows;
  if (!row_specs.empty()) {
    std::vector<std::pair<int, tds::KTriple>> wanted;
    for (const auto& spec : row_specs) {
      const auto colon = spec.find(':');
      if (colon == std::string::npos)
        throw CLI::ValidationError("--row", "expected n:k1,k2,k3");
      wanted.emplace_back(std::stoi(spec.substr(0, colon)), parse_k(spec.substr(colon + 1)));
    }
    rows = tds::run_table2(wanted, cfg);
  } else {
    rows = tds::run_table2(dims, cfg);
  }
  bool flagged = false;
  for (const auto& r : rows) flagged = flagged || r.flagged;
  if (cfg.format == "csv")
    emit(tds::table2_csv(rows), out_path);
  else
    emit_json(tds::table2_document(rows, cfg), out_path);
  return flagged ? kExitNonRigorous : kExitOk;
}

int cmd_table4(const std::vector<int>& dims, const tds::RunConfig& cfg,
               const std::string& out_path) {
  const std::vector<tds::Table4Row> rows = tds::run_table4(dims, cfg);
  bool rigorous = true;
  for (const auto& r : rows) rigorous = rigorous && r.rigorous;
  if (cfg.format == "csv")
    emit(tds::table4_csv(rows), out_path);
  else
    emit_json(tds::table4_document(rows, cfg), out_path);
  return rigorous ? kExitOk : kExitNonRigorous;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified upper bounds for spherical three-distance sets"};
  app.require_subcommand(1);
  app.fallthrough();

  ConfigFlags flags;
  flags.attach(app);
  std::string out_path;
  app.add_option("--out", out_path, "write the result document here instead of stdout");

  // bound hb|lp|sdp
  auto* bound = app.add_subcommand("bound", "one bound at one inner-product triple");
  std::string bound_kind;
  bound->add_option("kind", bound_kind, "hb, lp, or sdp")
      ->required()
      ->check(CLI::IsMember({"hb", "lp", "sdp"}));
  int bound_n = 0;
  bound->add_option("--dim", bound_n, "ambient dimension n")->required();
  std::optional<std::string> bound_k;
  double bound_d1 = 0.0, bound_d2 = 0.0, bound_d3 = 0.0;
  bound->add_option("--k", bound_k, "K-triple k1,k2,k3 (distances recovered from --d3)");
  auto* o1 = bound->add_option("--d1", bound_d1, "inner product d1 (use --d1=-0.5 for negatives)");
  auto* o2 = bound->add_option("--d2", bound_d2, "inner product d2");
  auto* o3 = bound->add_option("--d3", bound_d3, "inner product d3");

  // enumerate-k
  auto* enumk = app.add_subcommand("enumerate-k", "admissible K-triples for a dimension");
  int enumk_n = 0;
  enumk->add_option("--dim", enumk_n, "ambient dimension n")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "d3 sweep of one K-triple");
  int sweep_n = 0;
  std::string sweep_k;
  bool sweep_no_lp = false, sweep_records = false;
  sweep->add_option("--dim", sweep_n, "ambient dimension n")->required();
  sweep->add_option("--k", sweep_k, "K-triple k1,k2,k3")->required();
  sweep->add_flag("--no-lp", sweep_no_lp, "skip the LP at each sample");
  sweep->add_flag("--records", sweep_records, "include every per-sample record");

  // grid-sweep
  auto* grid = app.add_subcommand("grid-sweep", "exploratory dense grid (non-rigorous)");
  int grid_n = 0;
  std::string grid_parts = "100,100,50";
  grid->add_option("--dim", grid_n, "ambient dimension n")->required();
  grid->add_option("--parts", grid_parts, "partitions of d1,d2,d3 (default 100,100,50)");

  // certify
  auto* certify = app.add_subcommand("certify", "interval certificate over [a1,a2]");
  int cert_n = 0;
  std::string cert_k;
  double cert_a1 = 0.0, cert_a2 = 0.0;
  bool cert_bisect = false;
  certify->add_option("--dim", cert_n, "ambient dimension n")->required();
  certify->add_option("--k", cert_k, "K-triple k1,k2,k3")->required();
  certify->add_option("--from", cert_a1, "interval start a1")->required();
  certify->add_option("--to", cert_a2, "interval end a2")->required();
  certify->add_flag("--bisect", cert_bisect, "bisect down to --width-floor on failure");

  // audit
  auto* audit = app.add_subcommand("audit", "re-audit a stored certificate document");
  std::string audit_in;
  audit->add_option("--in", audit_in, "certificate JSON (single or cover document)")->required();

  // table2
  auto* table2 = app.add_subcommand("table2", "per-triple sweep maxima table");
  std::string table2_dims;
  std::vector<std::string> table2_rows;
  table2->add_option("--dims", table2_dims, "dimensions, e.g. 7,20,21 (discovers rows)");
  table2->add_option("--row", table2_rows, "explicit row n:k1,k2,k3 (repeatable)");

  // table4
  auto* table4 = app.add_subcommand("table4", "dimension-level certified bounds table");
  std::string table4_dims;
  table4->add_option("--dims", table4_dims, "dimensions, e.g. 7,20,21,23,24,25")->required();

  // figure1
  auto* figure1 = app.add_subcommand("figure1", "per-sample bound curves as CSV");
  int fig_n = 0;
  std::string fig_k;
  figure1->add_option("--dim", fig_n, "ambient dimension n")->required();
  figure1->add_option("--k", fig_k, "K-triple k1,k2,k3")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const tds::RunConfig cfg = flags.resolve();
    if (*bound) {
      std::optional<tds::KTriple> k;
      tds::KTriple k_store;
      const bool have_explicit = o1->count() && o2->count() && o3->count();
      if (bound_k && (o1->count() || o2->count()))
        throw CLI::ValidationError("bound", "give --k or explicit --d1/--d2, not both");
      const tds::DistanceTriple d =
          resolve_triple(bound_k, bound_d1, bound_d2, bound_d3, have_explicit, &k_store);
      if (bound_k) k = k_store;
      return cmd_bound(bound_kind, bound_n, cfg, d, k, out_path);
    }
    if (*enumk) return cmd_enumerate_k(enumk_n, cfg, out_path);
    if (*sweep) return cmd_sweep(sweep_n, parse_k(sweep_k), !sweep_no_lp, sweep_records, cfg,
                                 out_path);
    if (*grid)
      return cmd_grid_sweep(grid_n, parse_int_list(grid_parts, 3), cfg, out_path);
    if (*certify)
      return cmd_certify(cert_n, parse_k(cert_k), cert_a1, cert_a2, cert_bisect, cfg, out_path);
    if (*audit) return cmd_audit(audit_in, cfg, out_path);
    if (*table2)
      return cmd_table2(table2_dims.empty() ? std::vector<int>{} : parse_int_list(table2_dims),
                        table2_rows, cfg, out_path);
    if (*table4) return cmd_table4(parse_int_list(table4_dims), cfg, out_path);
    if (*figure1) {
      emit(tds::figure1_csv(fig_n, parse_k(fig_k), flags.resolve()), out_path);
      return kExitOk;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
