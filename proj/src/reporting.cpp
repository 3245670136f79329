#include "tds/reporting.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "tds/cache.hpp"
#include "tds/harmonic.hpp"
#include "tds/nozaki.hpp"
#include "tds/programs.hpp"

namespace tds {
namespace {

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";  // empty CSV field for absent values
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

nlohmann::json extremum_json(const CurveExtremum& e, double margin) {
  if (!std::isfinite(e.value)) return nullptr;
  return nlohmann::json{{"d3", e.d3}, {"value", e.value}, {"margin", margin}};
}

double margin_at(bool lp, int n, const KTriple& k, const CurveExtremum& e,
                 const RunConfig& cfg) {
  if (!std::isfinite(e.value)) return 0.0;
  auto dist = recover_distances(k, e.d3);
  if (!dist) return 0.0;
  const ConicProgram prog = lp ? build_delsarte_lp(n, *dist, cfg.params.p_lp)
                               : build_sdp_primal(n, *dist, cfg.params);
  return solve_bound(prog, cfg.solver).safety_margin;
}

std::vector<Table2Row> sweep_rows(const std::vector<std::pair<int, KTriple>>& rows,
                                  const RunConfig& cfg, SolveCache* cache) {
  SweepConfig sc = sweep_config(cfg, cache);
  sc.with_lp = true;
  std::vector<Table2Row> out;
  out.reserve(rows.size());
  for (const auto& [n, k] : rows) {
    const TripleSweep sweep = sweep_triple(n, k, sc);
    Table2Row row;
    row.n = n;
    row.k = k;
    row.lp = sweep.max_lp;
    row.sdp = sweep.max_sdp;
    row.lp_margin = margin_at(true, n, k, sweep.max_lp, cfg);
    row.sdp_margin = margin_at(false, n, k, sweep.max_sdp, cfg);
    row.hb_ceiling = sweep.hb_ceiling;
    row.flagged = sweep.any_failure;
    out.push_back(row);
  }
  return out;
}

nlohmann::json document_head(const char* table, const RunConfig& cfg) {
  nlohmann::json j;
  j["table"] = table;
  j["config"] = config_json(cfg);
  j["config_hash"] = config_hash(cfg);
  j["solver"] = solver_info(cfg.solver);
  return j;
}

}  // namespace

nlohmann::json config_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["p_lp"] = cfg.params.p_lp;
  j["p_sdp"] = cfg.params.p_sdp;
  j["step"] = cfg.step;
  j["refine_step"] = cfg.refine_step;
  j["interval_width"] = cfg.interval_width;
  j["width_floor"] = cfg.width_floor;
  j["feas_tol"] = cfg.solver.feas_tol;
  j["gap_tol"] = cfg.solver.gap_tol;
  j["max_iterations"] = cfg.solver.max_iterations;
  j["time_limit_seconds"] = cfg.solver.time_limit_seconds;
  j["cache_dir"] = cfg.cache_dir;
  j["format"] = cfg.format;
  j["workers"] = cfg.workers;
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.params.p_lp = j.value("p_lp", cfg.params.p_lp);
  cfg.params.p_sdp = j.value("p_sdp", cfg.params.p_sdp);
  cfg.step = j.value("step", cfg.step);
  cfg.refine_step = j.value("refine_step", cfg.refine_step);
  cfg.interval_width = j.value("interval_width", cfg.interval_width);
  cfg.width_floor = j.value("width_floor", cfg.width_floor);
  cfg.solver.feas_tol = j.value("feas_tol", cfg.solver.feas_tol);
  cfg.solver.gap_tol = j.value("gap_tol", cfg.solver.gap_tol);
  cfg.solver.max_iterations = j.value("max_iterations", cfg.solver.max_iterations);
  cfg.solver.time_limit_seconds = j.value("time_limit_seconds", cfg.solver.time_limit_seconds);
  cfg.cache_dir = j.value("cache_dir", cfg.cache_dir);
  cfg.format = j.value("format", cfg.format);
  cfg.workers = j.value("workers", cfg.workers);
  if (cfg.format != "json" && cfg.format != "csv")
    throw std::invalid_argument("config: format must be \"json\" or \"csv\"");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* v = std::getenv("TDS_CACHE_DIR")) cfg.cache_dir = v;
  if (const char* v = std::getenv("TDS_FEAS_TOL")) cfg.solver.feas_tol = std::atof(v);
  if (const char* v = std::getenv("TDS_GAP_TOL")) cfg.solver.gap_tol = std::atof(v);
  if (const char* v = std::getenv("TDS_MAX_ITERATIONS")) cfg.solver.max_iterations = std::atoi(v);
  if (const char* v = std::getenv("TDS_TIME_LIMIT")) cfg.solver.time_limit_seconds = std::atof(v);
  if (const char* v = std::getenv("TDS_WORKERS")) cfg.workers = std::atoi(v);
}

std::string config_hash(const RunConfig& cfg) {
  const std::string dump = config_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SweepConfig sweep_config(const RunConfig& cfg, SolveCache* cache) {
  SweepConfig sc;
  sc.step = cfg.step;
  sc.refine_step = cfg.refine_step;
  sc.params = cfg.params;
  sc.solver = cfg.solver;
  sc.workers = cfg.workers;
  sc.cache = cache;
  return sc;
}

std::vector<Table2Row> run_table2(const std::vector<std::pair<int, KTriple>>& rows,
                                  const RunConfig& cfg) {
  SolveCache cache = cfg.cache_dir.empty() ? SolveCache() : SolveCache(cfg.cache_dir);
  return sweep_rows(rows, cfg, &cache);
}

std::vector<Table2Row> run_table2(const std::vector<int>& dims, const RunConfig& cfg) {
  SolveCache cache = cfg.cache_dir.empty() ? SolveCache() : SolveCache(cfg.cache_dir);
  std::vector<std::pair<int, KTriple>> rows;
  for (int n : dims) {
    SweepConfig sc = sweep_config(cfg, &cache);
    for (const KTriple& k : improved_triples(n, sc).triples) rows.emplace_back(n, k);
  }
  return sweep_rows(rows, cfg, &cache);
}

std::vector<Table4Row> run_table4(const std::vector<int>& dims, const RunConfig& cfg) {
  SolveCache cache = cfg.cache_dir.empty() ? SolveCache() : SolveCache(cfg.cache_dir);
  std::vector<Table4Row> out;
  out.reserve(dims.size());
  for (int n : dims) {
    const SweepReport rep = dimension_bound(n, sweep_config(cfg, &cache));
    Table4Row row;
    row.n = n;
    row.bound = rep.overall;
    row.rigorous = rep.rigorous;
    row.small_set_floor = rep.small_set_floor;
    for (const TripleBound& tb : rep.triples) {
      row.solved += tb.solved;
      row.failures += tb.failures;
    }
    out.push_back(row);
  }
  return out;
}

nlohmann::json table2_document(const std::vector<Table2Row>& rows, const RunConfig& cfg) {
  nlohmann::json j = document_head("table2", cfg);
  nlohmann::json out = nlohmann::json::array();
  for (const Table2Row& r : rows) {
    nlohmann::json row;
    row["n"] = r.n;
    row["k"] = {r.k.k1, r.k.k2, r.k.k3};
    row["lp"] = extremum_json(r.lp, r.lp_margin);
    row["sdp"] = extremum_json(r.sdp, r.sdp_margin);
    row["hb_ceiling"] = r.hb_ceiling;
    row["flagged"] = r.flagged;
    out.push_back(std::move(row));
  }
  j["rows"] = std::move(out);
  return j;
}

std::string table2_csv(const std::vector<Table2Row>& rows) {
  std::string out = "n,k1,k2,k3,lp_d3,lp,sdp_d3,sdp,hb_ceiling,flagged\n";
  for (const Table2Row& r : rows) {
    out += std::to_string(r.n) + ',' + std::to_string(r.k.k1) + ',' +
           std::to_string(r.k.k2) + ',' + std::to_string(r.k.k3) + ',' + fmt(r.lp.d3) +
           ',' + fmt(r.lp.value) + ',' + fmt(r.sdp.d3) + ',' + fmt(r.sdp.value) + ',' +
           std::to_string(r.hb_ceiling) + ',' + (r.flagged ? "1" : "0") + '\n';
  }
  return out;
}

nlohmann::json table4_document(const std::vector<Table4Row>& rows, const RunConfig& cfg) {
  nlohmann::json j = document_head("table4", cfg);
  nlohmann::json out = nlohmann::json::array();
  for (const Table4Row& r : rows) {
    nlohmann::json row;
    row["n"] = r.n;
    row["bound"] = r.bound;
    row["rigorous"] = r.rigorous;
    row["small_set_floor"] = r.small_set_floor;
    row["solved"] = r.solved;
    row["failures"] = r.failures;
    out.push_back(std::move(row));
  }
  j["rows"] = std::move(out);
  return j;
}

std::string table4_csv(const std::vector<Table4Row>& rows) {
  std::string out = "n,bound,rigorous\n";
  for (const Table4Row& r : rows)
    out += std::to_string(r.n) + ',' + std::to_string(r.bound) + ',' +
           (r.rigorous ? "1" : "0") + '\n';
  return out;
}

std::string figure1_csv(int n, const KTriple& k, const RunConfig& cfg) {
  SolveCache cache = cfg.cache_dir.empty() ? SolveCache() : SolveCache(cfg.cache_dir);
  SweepConfig sc = sweep_config(cfg, &cache);
  sc.with_lp = true;
  const TripleSweep sweep = sweep_triple(n, k, sc);
  std::string out = "d3,lp,sdp,hb\n";
  for (const BoundRecord& r : sweep.records) {
    out += fmt(r.d3) + ',';
    if (r.lp && std::isfinite(r.lp->value)) out += fmt(r.lp->value);
    out += ',';
    if (std::isfinite(r.sdp.value)) out += fmt(r.sdp.value);
    out += ',' + std::to_string(r.hb) + '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

}  // namespace tds
