#pragma once

// The full evaluation report, its JSON form, a text view rendered from that
// JSON, and the plot-data files behind each figure.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bootstrap.hpp"
#include "data_model.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "ranking.hpp"
#include "regression.hpp"
#include "stats.hpp"

namespace fuzzeval {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";

struct ReportOptions {
  std::string dataset_label;  // echoed in metadata
  BootstrapSpec boot;         // MLR bootstrap; slopes use pairs with derived seeds
  double alpha = 0.05;
  std::string reference_fuzzer;  // empty: default choice
  RankScope correlation_scope = RankScope::WithinProgram;
  ResidualOrder residual_order = ResidualOrder::FuzzerProgramTrial;
};

struct SpearmanEntry {
  PropertyKey key;
  RankScope scope = RankScope::WithinProgram;
  double rho = 0.0;
  std::size_t observations = 0;
};

struct PairwiseSection {
  std::string scope;  // program id, or "pooled"
  std::string measure;
  PairwiseTable table;
};

struct SlopeSection {
  PropertyKey key;
  RankScope scope = RankScope::WithinProgram;
  std::uint64_t seed = 0;
  std::vector<SlopeEstimate> estimates;
};

struct ScatterPoint {
  double property_rank = 0.0;
  double perf_rank = 0.0;
  std::string program;
  std::string fuzzer;
};

struct EvaluationReport {
  ReportOptions options;
  std::size_t rows = 0;
  std::vector<std::string> fuzzers;
  std::vector<std::string> programs;
  std::vector<PropertyKey> properties;

  std::vector<SpearmanEntry> spearman;
  std::vector<PairwiseSection> pairwise;
  std::vector<SlopeSection> slopes;
  ExplainableModel model;
  std::optional<double> per_benchmark_r2;
  DiagnosticsReport diagnostics;
  std::vector<PropertyKey> correlation_keys;
  std::vector<std::vector<double>> correlation;

  // Figure data.
  std::map<PropertyKey, std::vector<ScatterPoint>> scatter;
  std::map<PropertyKey, std::vector<ScatterPoint>> slope_points;  // perf_rank holds the fuzzer rank
  std::vector<std::string> plot_files;
};

// Seed of the slope bootstrap for the i-th design property.
inline std::uint64_t slope_seed(std::uint64_t seed, std::size_t property_index) {
  return derive_seed(seed, 1000 + property_index);
}

/// Spearman rho between property rank and performance rank for each property
/// and scope. Scopes at which the property is constant are omitted.
inline std::vector<SpearmanEntry> spearman_table(const Dataset& d, const std::vector<RankScope>& scopes) {
  std::vector<RankRequest> reqs;
  for (const auto& k : d.property_keys())
    for (auto s : scopes) reqs.push_back({k, s == RankScope::Program ? RankScope::Global : s});
  auto rd = rank_dataset(d, reqs);
  std::vector<SpearmanEntry> out;
  for (const auto& k : d.property_keys()) {
    for (auto s : scopes) {
      const auto scope = s == RankScope::Program ? RankScope::Global : s;
      const auto& x = rd.property_rank(k, scope);
      const auto& y = rd.perf_rank(scope);
      bool constant = true;
      if (scope == RankScope::WithinProgram) {
        std::map<std::size_t, double> first;
        for (std::size_t r = 0; r < x.size() && constant; ++r) {
          auto [it, fresh] = first.emplace(rd.program_of_row()[r], x[r]);
          if (!fresh && it->second != x[r]) constant = false;
        }
      } else {
        constant = std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
      }
      if (constant) continue;
      out.push_back({k, scope, spearman_rho(x, y), x.size()});
    }
  }
  return out;
}

/// Scatter of property rank against performance rank (one point per row).
inline std::vector<ScatterPoint> rank_scatter(const RankedDataset& rd, const PropertyKey& key, RankScope scope) {
  const auto& x = rd.property_rank(key, scope);
  const auto& y = rd.perf_rank(scope);
  const auto& base = rd.base();
  std::vector<ScatterPoint> out(rd.rows());
  for (std::size_t r = 0; r < rd.rows(); ++r)
    out[r] = {x[r], y[r], base.programs()[rd.program_of_row()[r]], base.fuzzers()[rd.fuzzer_of_row()[r]]};
  return out;
}

/// Mean y per distinct x, ascending in x.
inline std::vector<std::pair<double, double>> mean_series(const std::vector<ScatterPoint>& pts) {
  std::map<double, std::pair<double, std::size_t>> acc;
  for (const auto& p : pts) {
    auto& a = acc[p.property_rank];
    a.first += p.perf_rank;
    ++a.second;
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& [x, a] : acc) out.emplace_back(x, a.first / static_cast<double>(a.second));
  return out;
}

inline EvaluationReport build_report(const Dataset& d, const ReportOptions& opt) {
  detail::throw_on_diagnostics(d);
  EvaluationReport rep;
  rep.options = opt;
  rep.rows = d.size();
  rep.fuzzers = d.fuzzers();
  rep.programs = d.programs();
  rep.properties = d.property_keys();

  rep.spearman = spearman_table(d, {RankScope::WithinProgram, RankScope::Global});

  // Pairwise effect sizes on raw performance per program, and on fuzzer
  // ranks pooled across programs.
  for (const auto& prog : d.programs()) {
    std::vector<NamedSample> groups;
    for (const auto& f : d.fuzzers()) {
      NamedSample s{f, {}};
      for (const auto& t : d.trials())
        if (t.program == prog && t.fuzzer == f) s.values.push_back(t.performance);
      groups.push_back(std::move(s));
    }
    rep.pairwise.push_back({prog, "performance", pairwise_table(groups, opt.alpha)});
  }

  auto spec = default_design_spec(d, opt.reference_fuzzer);
  if (spec.properties.empty()) throw DataError("report: dataset carries none of the model properties");
  auto reqs = rank_requests(spec);
  const auto corr_scope = opt.correlation_scope == RankScope::Program ? RankScope::Global : opt.correlation_scope;
  for (const auto& p : spec.properties) {
    const auto s = is_program_key(p.key) ? RankScope::Global : corr_scope;
    if (std::none_of(reqs.begin(), reqs.end(), [&](const auto& r) { return r.key == p.key && r.scope == s; }))
      reqs.push_back({p.key, s});
  }
  auto rd = rank_dataset(d, reqs);

  {
    std::vector<NamedSample> groups;
    for (std::size_t f = 0; f < d.fuzzers().size(); ++f) {
      NamedSample s{d.fuzzers()[f], {}};
      for (std::size_t r = 0; r < rd.rows(); ++r)
        if (rd.fuzzer_of_row()[r] == f) s.values.push_back(rd.fuzzer_rank()[r]);
      groups.push_back(std::move(s));
    }
    rep.pairwise.push_back({"pooled", "fuzzer_rank", pairwise_table(groups, opt.alpha)});
  }

  for (std::size_t i = 0; i < spec.properties.size(); ++i) {
    const auto& p = spec.properties[i];
    BootstrapSpec bs = opt.boot;
    bs.method = BootstrapMethod::Pairs;
    bs.seed = slope_seed(opt.boot.seed, i);
    rep.slopes.push_back({p.key, p.scope, bs.seed, per_fuzzer_slopes(rd, p.key, p.scope, bs)});
    const auto& x = rd.property_rank(p.key, p.scope);
    auto& pts = rep.slope_points[p.key];
    for (std::size_t r = 0; r < rd.rows(); ++r)
      pts.push_back({x[r], rd.fuzzer_rank()[r], d.programs()[rd.program_of_row()[r]],
                     d.fuzzers()[rd.fuzzer_of_row()[r]]});
    const auto s = is_program_key(p.key) ? RankScope::Global : corr_scope;
    rep.scatter[p.key] = rank_scatter(rd, p.key, s);
  }

  rep.model = fit_explainable_model(rd, spec, opt.boot);
  {
    auto pb = spec;
    pb.per_benchmark = true;
    try {
      auto design = build_design_matrix(rd, pb);
      rep.per_benchmark_r2 = ols_fit(design.x, design.y, design.labels).r2;
    } catch (const ComputeError&) {
      rep.per_benchmark_r2.reset();
    }
  }
  rep.diagnostics = diagnose(rd, rep.model, opt.residual_order);
  if (spec.properties.size() >= 2) {
    for (const auto& p : spec.properties) rep.correlation_keys.push_back(p.key);
    rep.correlation = correlation_matrix(rd, rank_requests(spec));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {
inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
}  // namespace detail

inline Json to_json(const CiTable& t) {
  Json rows = Json::array();
  for (const auto& e : t.entries)
    rows.push_back({{"term", e.term},
                    {"estimate", e.estimate},
                    {"ci_low", e.ci_low},
                    {"ci_high", e.ci_high},
                    {"significant", e.significant}});
  return {{"method", to_string(t.method)},
          {"replicates", t.replicates},
          {"skipped", t.skipped},
          {"ci_level", t.ci_level},
          {"entries", rows}};
}

inline Json to_json(const PairwiseTable& t) {
  Json a12 = Json::array(), p = Json::array(), sig = Json::array();
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    a12.push_back(t.a12[i]);
    p.push_back(t.p[i]);
    Json row = Json::array();
    for (bool b : t.significant[i]) row.push_back(b);
    sig.push_back(row);
  }
  return {{"labels", t.labels}, {"alpha", t.alpha}, {"a12", a12}, {"p", p}, {"significant", sig}};
}

inline Json design_to_json(const DesignSpec& s) {
  Json props = Json::array();
  for (const auto& p : s.properties)
    props.push_back({{"key", p.key}, {"scope", to_string(p.scope)}, {"reference_level", p.reference_level}});
  return {{"properties", props},
          {"fuzzers", s.fuzzers},
          {"reference_fuzzer", s.reference_fuzzer},
          {"include_interactions", s.include_interactions},
          {"per_benchmark", s.per_benchmark}};
}

inline Json fit_to_json(const RegressionFit& f) {
  Json coef = Json::array();
  for (std::size_t i = 0; i < f.labels.size(); ++i) coef.push_back({{"term", f.labels[i]}, {"value", f.coefficients[i]}});
  return {{"coefficients", coef},
          {"r2", f.r2},
          {"r2_adjusted", f.r2_adjusted},
          {"f_statistic", detail::finite_or_null(f.f_statistic)},
          {"f_p_value", f.f_p_value},
          {"sigma", f.sigma},
          {"median_residual", f.median_residual},
          {"median_abs_residual", f.median_abs_residual},
          {"observations", f.observations},
          {"parameters", f.parameters}};
}

/// Fitted model as consumed by `predict`.
inline Json model_to_json(const ExplainableModel& m) {
  return {{"design", design_to_json(m.design)}, {"fuzzers", m.fuzzers}, {"fit", fit_to_json(m.fit)},
          {"ci", to_json(m.ci)}};
}

inline ExplainableModel model_from_json(const Json& j) {
  try {
    ExplainableModel m;
    const auto& d = j.at("design");
    for (const auto& p : d.at("properties"))
      m.design.properties.push_back(
          {p.at("key").get<std::string>(), parse_rank_scope(p.at("scope").get<std::string>()),
           p.at("reference_level").get<double>()});
    m.design.fuzzers = d.at("fuzzers").get<std::vector<std::string>>();
    m.design.reference_fuzzer = d.at("reference_fuzzer").get<std::string>();
    m.design.include_interactions = d.at("include_interactions").get<bool>();
    m.design.per_benchmark = d.at("per_benchmark").get<bool>();
    m.fuzzers = j.at("fuzzers").get<std::vector<std::string>>();
    const auto& f = j.at("fit");
    for (const auto& c : f.at("coefficients")) {
      m.fit.labels.push_back(c.at("term").get<std::string>());
      m.fit.coefficients.push_back(c.at("value").get<double>());
    }
    m.fit.r2 = f.at("r2").get<double>();
    m.fit.r2_adjusted = f.at("r2_adjusted").get<double>();
    m.fit.observations = f.at("observations").get<std::size_t>();
    m.fit.parameters = f.at("parameters").get<std::size_t>();
    detail::decode_terms(m.design, m.fuzzers, m.fit);
    return m;
  } catch (const Json::exception& e) {
    throw DataError(std::string("invalid fit file: ") + e.what());
  }
}

inline Json to_json(const DiagnosticsReport& r) {
  Json vif = Json::object();
  Json flagged = Json::array();
  for (const auto& [k, v] : r.vif) {
    vif[k] = detail::finite_or_null(v);
    if (!(v < kVifFlagThreshold)) flagged.push_back(k);
  }
  return {{"durbin_watson", {{"statistic", r.durbin_watson.statistic}, {"p_value", r.durbin_watson.p_value}}},
          {"residual_order", to_string(r.order)},
          {"vif", vif},
          {"vif_flagged", flagged},
          {"vif_threshold", kVifFlagThreshold},
          {"r2", r.r2},
          {"r2_adjusted", r.r2_adjusted},
          {"median_abs_residual", r.median_abs_residual},
          {"qq_points", r.qq_points.size()},
          {"scale_location_points", r.scale_location.size()}};
}

inline Json to_json(const EvaluationReport& rep) {
  const auto& o = rep.options;
  Json meta = {{"tool", "fuzzeval"},
               {"version", kToolVersion},
               {"dataset", o.dataset_label},
               {"seed", o.boot.seed},
               {"rows", rep.rows},
               {"fuzzers", rep.fuzzers},
               {"programs", rep.programs},
               {"properties", rep.properties},
               {"options",
                {{"alpha", o.alpha},
                 {"bootstrap_method", to_string(o.boot.method)},
                 {"wild_weights", to_string(o.boot.wild_weights)},
                 {"cluster", o.boot.cluster},
                 {"replicates", o.boot.replicates},
                 {"ci_level", o.boot.ci_level},
                 {"reference_fuzzer", rep.model.design.reference_fuzzer},
                 {"correlation_scope", to_string(o.correlation_scope)},
                 {"residual_order", to_string(o.residual_order)},
                 {"slope_bootstrap", "pairs"}}}};

  Json sp = Json::array();
  for (const auto& e : rep.spearman)
    sp.push_back({{"property", e.key}, {"scope", to_string(e.scope)}, {"rho", e.rho}, {"observations", e.observations}});

  Json pw = Json::array();
  for (const auto& s : rep.pairwise) {
    Json t = to_json(s.table);
    t["scope"] = s.scope;
    t["measure"] = s.measure;
    pw.push_back(t);
  }

  Json sl = Json::array();
  for (const auto& s : rep.slopes) {
    Json rows = Json::array();
    for (const auto& e : s.estimates)
      rows.push_back({{"fuzzer", e.fuzzer},
                      {"intercept", e.intercept},
                      {"slope", e.slope},
                      {"ci_low", e.ci_low},
                      {"ci_high", e.ci_high},
                      {"significant", e.significant},
                      {"observations", e.observations}});
    sl.push_back({{"property", s.key}, {"scope", to_string(s.scope)}, {"seed", s.seed}, {"fuzzers", rows}});
  }

  Json mlr = model_to_json(rep.model);
  mlr["per_benchmark_r2"] = rep.per_benchmark_r2 ? Json(*rep.per_benchmark_r2) : Json(nullptr);

  Json corr = {{"properties", rep.correlation_keys}, {"matrix", rep.correlation}};

  return {{"metadata", meta},       {"spearman", sp}, {"pairwise", pw},
          {"slopes", sl},           {"mlr", mlr},     {"diagnostics", to_json(rep.diagnostics)},
          {"correlation", corr},    {"plot_files", rep.plot_files}};
}

// Canonical serialization: sorted keys, two-space indent, trailing newline.
inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Text view. Every number is printed from its JSON node, so the text holds no
// value the JSON lacks.

namespace detail {

inline std::string num(const Json& v) { return v.dump(); }

inline std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

}  // namespace detail

inline std::string render_text(const Json& j) {
  using detail::num;
  using detail::pad;
  std::ostringstream out;
  const auto& meta = j.at("metadata");
  out << "fuzzeval report\n";
  out << "dataset: " << meta.at("dataset").get<std::string>() << "  rows: " << num(meta.at("rows"))
      << "  seed: " << num(meta.at("seed")) << "\n";
  out << "fuzzers:";
  for (const auto& f : meta.at("fuzzers")) out << ' ' << f.get<std::string>();
  out << "\nprograms:";
  for (const auto& p : meta.at("programs")) out << ' ' << p.get<std::string>();
  out << "\n\n";

  out << "Spearman rho, property rank vs performance rank\n";
  for (const auto& e : j.at("spearman"))
    out << "  " << pad(e.at("property").get<std::string>(), 26) << pad(e.at("scope").get<std::string>(), 8)
        << num(e.at("rho")) << "\n";

  for (const auto& t : j.at("pairwise")) {
    if (t.at("scope") != "pooled") continue;
    out << "\nPairwise A12 (row beats column), pooled fuzzer ranks; * p < " << num(t.at("alpha")) << "\n";
    const auto& labels = t.at("labels");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      out << "  " << pad(labels[i].get<std::string>(), 14);
      for (std::size_t k = 0; k < labels.size(); ++k) {
        if (i == k) {
          out << pad("-", 22);
          continue;
        }
        std::string cell = num(t.at("a12")[i][k]) + (t.at("significant")[i][k].get<bool>() ? "*" : "");
        out << pad(cell, 22);
      }
      out << "\n";
    }
  }

  out << "\nPer-fuzzer slopes of fuzzer rank on property rank\n";
  for (const auto& s : j.at("slopes")) {
    out << "  " << s.at("property").get<std::string>() << " (" << s.at("scope").get<std::string>() << ")\n";
    for (const auto& e : s.at("fuzzers"))
      out << "    " << pad(e.at("fuzzer").get<std::string>(), 14) << num(e.at("slope")) << "  ["
          << num(e.at("ci_low")) << ", " << num(e.at("ci_high")) << "]" << (e.at("significant").get<bool>() ? " *" : "")
          << "\n";
  }

  const auto& mlr = j.at("mlr");
  const auto& fit = mlr.at("fit");
  out << "\nFuzzer rank ~ fuzzer x properties (reference " << mlr.at("design").at("reference_fuzzer").get<std::string>()
      << ")\n";
  out << "  R2 " << num(fit.at("r2")) << "  adjusted " << num(fit.at("r2_adjusted")) << "  F p-value "
      << num(fit.at("f_p_value")) << "  median residual " << num(fit.at("median_residual")) << "\n";
  if (!mlr.at("per_benchmark_r2").is_null())
    out << "  per-benchmark model R2 " << num(mlr.at("per_benchmark_r2")) << "\n";
  const auto& ci = mlr.at("ci");
  out << "  " << num(ci.at("ci_level")) << " " << ci.at("method").get<std::string>() << " bootstrap, "
      << num(ci.at("replicates")) << " replicates\n";
  for (const auto& e : ci.at("entries"))
    out << "    " << pad(e.at("term").get<std::string>(), 44) << pad(num(e.at("estimate")), 24) << "["
        << num(e.at("ci_low")) << ", " << num(e.at("ci_high")) << "]" << (e.at("significant").get<bool>() ? " *" : "")
        << "\n";

  const auto& dg = j.at("diagnostics");
  out << "\nDiagnostics\n";
  out << "  Durbin-Watson " << num(dg.at("durbin_watson").at("statistic")) << "  p "
      << num(dg.at("durbin_watson").at("p_value")) << "  (" << dg.at("residual_order").get<std::string>() << ")\n";
  for (const auto& [k, v] : dg.at("vif").items()) out << "  VIF " << pad(k, 24) << num(v) << "\n";
  if (!dg.at("vif_flagged").empty()) {
    out << "  flagged (VIF >= " << num(dg.at("vif_threshold")) << "):";
    for (const auto& k : dg.at("vif_flagged")) out << ' ' << k.get<std::string>();
    out << "\n";
  }
  if (!j.at("plot_files").empty()) {
    out << "\nPlot data\n";
    for (const auto& f : j.at("plot_files")) out << "  " << f.get<std::string>() << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Plot data

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  return out;
}

inline std::string safe_name(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) c = '_';
  return s;
}

}  // namespace detail

// property_rank,perf_rank,program,fuzzer
inline void write_scatter_csv(const std::vector<ScatterPoint>& pts, std::ostream& out,
                              std::string_view y_name = "perf_rank") {
  out << "property_rank," << y_name << ",program,fuzzer\n";
  for (const auto& p : pts)
    out << format_double(p.property_rank) << ',' << format_double(p.perf_rank) << ',' << detail::quote_csv(p.program) << ','
        << detail::quote_csv(p.fuzzer) << '\n';
}

// property_rank,mean_perf_rank
inline void write_means_csv(const std::vector<ScatterPoint>& pts, std::ostream& out) {
  out << "property_rank,mean_perf_rank\n";
  for (const auto& [x, y] : mean_series(pts)) out << format_double(x) << ',' << format_double(y) << '\n';
}

// fuzzer,x0,y0,x1,y1,intercept,slope,ci_low,ci_high,significant
// The endpoints span the observed property-rank range of that fuzzer.
inline void write_slope_lines_csv(const std::vector<SlopeEstimate>& est, const std::vector<ScatterPoint>& pts,
                                  std::ostream& out) {
  out << "fuzzer,x0,y0,x1,y1,intercept,slope,ci_low,ci_high,significant\n";
  for (const auto& e : est) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& p : pts)
      if (p.fuzzer == e.fuzzer) {
        lo = std::min(lo, p.property_rank);
        hi = std::max(hi, p.property_rank);
      }
    out << detail::quote_csv(e.fuzzer) << ',' << format_double(lo) << ',' << format_double(e.intercept + e.slope * lo) << ','
        << format_double(hi) << ',' << format_double(e.intercept + e.slope * hi) << ',' << format_double(e.intercept)
        << ',' << format_double(e.slope) << ',' << format_double(e.ci_low) << ',' << format_double(e.ci_high) << ','
        << (e.significant ? "true" : "false") << '\n';
  }
}

// x,y
inline void write_points_csv(const std::vector<PlotPoint>& pts, std::string_view x_name, std::string_view y_name,
                             std::ostream& out) {
  out << x_name << ',' << y_name << '\n';
  for (const auto& p : pts) out << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

/// Self-contained SVG scatter: one <circle class="pt"> per point, colored by
/// fuzzer, and the mean series as <circle class="mean">.
inline void write_svg_scatter(const std::vector<ScatterPoint>& pts, const std::string& title, std::ostream& out) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  constexpr double w = 640, h = 480, m = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  std::vector<std::string> fuzzers;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.property_rank);
    x1 = std::max(x1, p.property_rank);
    y0 = std::min(y0, p.perf_rank);
    y1 = std::max(y1, p.perf_rank);
    if (std::find(fuzzers.begin(), fuzzers.end(), p.fuzzer) == fuzzers.end()) fuzzers.push_back(p.fuzzer);
  }
  if (pts.empty()) x0 = y0 = 0, x1 = y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto sx = [&](double v) { return m + (v - x0) / (x1 - x0) * (w - 2 * m); };
  auto sy = [&](double v) { return h - m - (v - y0) / (y1 - y0) * (h - 2 * m); };
  auto esc = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else if (c == '"') o += "&quot;";
      else o += c;
    }
    return o;
  };
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\">\n";
  out << "<title>" << esc(title) << "</title>\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  out << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << esc(title) << " rank</text>\n";
  out << "<text x=\"14\" y=\"" << h / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << h / 2
      << ")\" text-anchor=\"middle\">performance rank</text>\n";
  for (std::size_t i = 0; i < fuzzers.size(); ++i)
    out << "<text x=\"" << w - m << "\" y=\"" << m + 14.0 * static_cast<double>(i) << "\" font-size=\"11\" fill=\""
        << palette[i % 8] << "\" text-anchor=\"end\">" << esc(fuzzers[i]) << "</text>\n";
  out << "<g fill-opacity=\"0.5\">\n";
  for (const auto& p : pts) {
    const auto fi = static_cast<std::size_t>(std::find(fuzzers.begin(), fuzzers.end(), p.fuzzer) - fuzzers.begin());
    out << "<circle class=\"pt\" cx=\"" << format_double(sx(p.property_rank)) << "\" cy=\""
        << format_double(sy(p.perf_rank)) << "\" r=\"2\" fill=\"" << palette[fi % 8] << "\"/>\n";
  }
  out << "</g>\n<g fill=\"black\">\n";
  for (const auto& [x, y] : mean_series(pts))
    out << "<circle class=\"mean\" cx=\"" << format_double(sx(x)) << "\" cy=\"" << format_double(sy(y))
        << "\" r=\"3\"/>\n";
  out << "</g>\n</svg>\n";
}

/// Writes the plot data of every figure into `dir` and records the file
/// names (relative to `dir`) in the report.
inline std::vector<std::string> emit_plot_data(EvaluationReport& rep, const std::filesystem::path& dir,
                                               bool svg = true) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error("cannot create directory '" + dir.string() + "'");
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, auto&& writer) {
    auto out = detail::open_out(dir / name);
    writer(out);
    if (!out) throw Error("write failed for '" + (dir / name).string() + "'");
    files.push_back(name);
  };
  for (const auto& [key, pts] : rep.scatter) {
    const auto k = detail::safe_name(key);
    emit("scatter_" + k + ".csv", [&](std::ostream& o) { write_scatter_csv(pts, o); });
    emit("means_" + k + ".csv", [&](std::ostream& o) { write_means_csv(pts, o); });
    if (svg) emit("scatter_" + k + ".svg", [&](std::ostream& o) { write_svg_scatter(pts, key, o); });
  }
  for (const auto& s : rep.slopes) {
    const auto k = detail::safe_name(s.key);
    const auto& pts = rep.slope_points.at(s.key);
    emit("slopes_" + k + "_points.csv", [&](std::ostream& o) { write_scatter_csv(pts, o, "fuzzer_rank"); });
    emit("slopes_" + k + "_lines.csv", [&](std::ostream& o) { write_slope_lines_csv(s.estimates, pts, o); });
  }
  emit("coefficients.csv", [&](std::ostream& o) { write_csv(rep.model.ci, o); });
  emit("qq.csv", [&](std::ostream& o) {
    write_points_csv(rep.diagnostics.qq_points, "theoretical_quantile", "standardized_residual", o);
  });
  emit("scale_location.csv", [&](std::ostream& o) {
    write_points_csv(rep.diagnostics.scale_location, "fitted", "sqrt_abs_standardized_residual", o);
  });
  rep.plot_files = files;
  return files;
}

}  // namespace fuzzeval
