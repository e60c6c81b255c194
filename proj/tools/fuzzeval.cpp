// fuzzeval: command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data validation failure,
// 3 computational failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fuzzeval/fuzzeval.hpp"

namespace fs = std::filesystem;
using namespace fuzzeval;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCompute = 3;

struct UsageError : Error {
  using Error::Error;
};

Dataset read_dataset(const std::string& path, const std::string& format, bool validate = true) {
  DataFormat fmt = DataFormat::Csv;
  if (format == "json") fmt = DataFormat::Json;
  else if (format.empty() && path != "-") fmt = format_from_path(path);
  if (path == "-") return fmt == DataFormat::Json ? parse_json_dataset(std::cin, validate) : parse_csv_dataset(std::cin, validate);
  return load_dataset(path, fmt, validate);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << content)) throw Error("cannot write '" + p.string() + "'");
}

// FUZZEVAL_SEED is the default seed; an explicit --seed wins.
std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value, std::uint64_t fallback = 0) {
  if (opt && opt->count() > 0) return flag_value;
  if (const char* env = std::getenv("FUZZEVAL_SEED"); env && *env) {
    auto v = detail::parse_u64(env);
    if (!v) throw UsageError("FUZZEVAL_SEED is not an unsigned integer");
    return *v;
  }
  return fallback;
}

struct BootFlags {
  std::string method = "wild";
  std::string weights = "rademacher";
  std::size_t reps = 2000;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  unsigned threads = 1;
  double ci_level = 0.95;
  bool no_cluster = false;

  void add(CLI::App* app, std::string default_method, bool clustered = true) {
    method = std::move(default_method);
    app->add_option("--boot", method, "bootstrap scheme")->check(CLI::IsMember({"wild", "pairs"}))->capture_default_str();
    app->add_option("--weights", weights, "wild bootstrap weights")
        ->check(CLI::IsMember({"rademacher", "mammen"}))
        ->capture_default_str();
    app->add_option("--boot-reps", reps, "bootstrap replicates (>= 100)")->capture_default_str();
    seed_opt = app->add_option("--seed", seed, "random seed (default: $FUZZEVAL_SEED or 0)");
    app->add_option("--threads", threads, "bootstrap worker threads, 0 = all cores")->capture_default_str();
    app->add_option("--ci-level", ci_level, "confidence level")->capture_default_str();
    if (clustered) app->add_flag("--no-cluster", no_cluster, "resample rows rather than (program, trial) units");
  }

  BootstrapSpec spec() const {
    BootstrapSpec b;
    b.method = method == "pairs" ? BootstrapMethod::Pairs : BootstrapMethod::Wild;
    b.wild_weights = weights == "mammen" ? WildWeights::Mammen : WildWeights::Rademacher;
    b.replicates = reps;
    b.seed = resolve_seed(seed_opt, seed);
    b.threads = threads;
    b.ci_level = ci_level;
    b.cluster = !no_cluster;
    return b;
  }
};

Predictor default_predictor(const Dataset& d, const PropertyKey& key) {
  if (!d.has_property(key)) throw UsageError("dataset has no property '" + key + "'");
  auto spec = default_design_spec(d);
  for (const auto& p : spec.properties)
    if (p.key == key) return p;
  return synth_predictor(key, d.programs().size());
}

int run_validate(const std::string& path, const std::string& format) {
  auto d = read_dataset(path, format, false);
  auto diags = validate_dataset(d);
  for (const auto& g : diags) std::cout << format_diagnostic(g) << '\n';
  if (diags.empty()) {
    std::cout << "ok: " << d.size() << " rows, " << d.fuzzers().size() << " fuzzers, " << d.programs().size()
              << " programs\n";
    return 0;
  }
  std::cerr << diags.size() << " problem(s)\n";
  return kExitData;
}

int run_correlate(const std::string& path, const std::string& format, const std::string& scope_name,
                  const std::string& out_dir, bool svg) {
  auto d = read_dataset(path, format);
  const auto scope = parse_rank_scope(scope_name);
  if (scope == RankScope::Program) throw UsageError("--scope must be within or global");
  auto table = spearman_table(d, {scope});
  std::cout << "property,scope,rho,observations\n";
  for (const auto& e : table)
    std::cout << e.key << ',' << to_string(e.scope) << ',' << format_double(e.rho) << ',' << e.observations << '\n';
  if (!out_dir.empty()) {
    std::vector<RankRequest> reqs;
    for (const auto& e : table) reqs.push_back({e.key, e.scope});
    auto rd = rank_dataset(d, reqs);
    fs::create_directories(out_dir);
    for (const auto& e : table) {
      auto pts = rank_scatter(rd, e.key, e.scope);
      const auto k = detail::safe_name(e.key);
      std::ostringstream a, b;
      write_scatter_csv(pts, a);
      write_means_csv(pts, b);
      write_file(fs::path(out_dir) / ("scatter_" + k + ".csv"), a.str());
      write_file(fs::path(out_dir) / ("means_" + k + ".csv"), b.str());
      if (svg) {
        std::ostringstream c;
        write_svg_scatter(pts, e.key, c);
        write_file(fs::path(out_dir) / ("scatter_" + k + ".svg"), c.str());
      }
    }
  }
  return 0;
}

int run_compare(const std::string& path, const std::string& format, const std::string& program, double alpha,
                const std::string& alternative) {
  auto d = read_dataset(path, format);
  std::vector<NamedSample> groups;
  if (program == "pooled") {
    auto rd = rank_dataset(d, std::vector<RankRequest>{});
    for (std::size_t f = 0; f < d.fuzzers().size(); ++f) {
      NamedSample s{d.fuzzers()[f], {}};
      for (std::size_t r = 0; r < rd.rows(); ++r)
        if (rd.fuzzer_of_row()[r] == f) s.values.push_back(rd.fuzzer_rank()[r]);
      groups.push_back(std::move(s));
    }
  } else {
    d.program_index(program);
    for (const auto& f : d.fuzzers()) {
      NamedSample s{f, {}};
      for (const auto& t : d.trials())
        if (t.program == program && t.fuzzer == f) s.values.push_back(t.performance);
      groups.push_back(std::move(s));
    }
  }
  const auto alt = alternative == "greater" ? Alternative::Greater
                   : alternative == "less"  ? Alternative::Less
                                            : Alternative::TwoSided;
  auto t = pairwise_table(groups, alpha, alt);
  std::cout << "fuzzer,versus,a12,magnitude,p,significant\n";
  for (std::size_t i = 0; i < t.labels.size(); ++i)
    for (std::size_t j = 0; j < t.labels.size(); ++j) {
      if (i == j) continue;
      std::cout << t.labels[i] << ',' << t.labels[j] << ',' << format_double(t.a12[i][j]) << ','
                << to_string(classify_effect(t.a12[i][j]).magnitude) << ',' << format_double(t.p[i][j]) << ','
                << (t.significant[i][j] ? "true" : "false") << '\n';
    }
  return 0;
}

int run_slopes(const std::string& path, const std::string& format, const std::string& key,
               const std::string& scope_name, const BootFlags& boot, const std::string& out_dir) {
  auto d = read_dataset(path, format);
  auto pred = default_predictor(d, key);
  if (!scope_name.empty()) pred.scope = parse_rank_scope(scope_name);
  auto rd = rank_dataset(d, std::vector<RankRequest>{{pred.key, pred.scope}});
  auto est = per_fuzzer_slopes(rd, key, pred.scope, boot.spec());
  std::cout << "fuzzer,property,intercept,slope,ci_low,ci_high,significant,observations\n";
  for (const auto& e : est)
    std::cout << e.fuzzer << ',' << e.property << ',' << format_double(e.intercept) << ',' << format_double(e.slope)
              << ',' << format_double(e.ci_low) << ',' << format_double(e.ci_high) << ','
              << (e.significant ? "true" : "false") << ',' << e.observations << '\n';
  if (!out_dir.empty()) {
    const auto& x = rd.property_rank(key, pred.scope);
    std::vector<ScatterPoint> pts;
    for (std::size_t r = 0; r < rd.rows(); ++r)
      pts.push_back({x[r], rd.fuzzer_rank()[r], d.programs()[rd.program_of_row()[r]],
                     d.fuzzers()[rd.fuzzer_of_row()[r]]});
    std::ostringstream a, b;
    write_scatter_csv(pts, a, "fuzzer_rank");
    write_slope_lines_csv(est, pts, b);
    const auto k = detail::safe_name(key);
    write_file(fs::path(out_dir) / ("slopes_" + k + "_points.csv"), a.str());
    write_file(fs::path(out_dir) / ("slopes_" + k + "_lines.csv"), b.str());
  }
  return 0;
}

struct RegressFlags {
  std::string reference;
  bool per_benchmark = false;
  bool no_interactions = false;
  std::string out_dir;
  std::string fit_json;
  std::string residual_order = "fuzzer-program-trial";
};

int run_regress(const std::string& path, const std::string& format, const RegressFlags& rf, const BootFlags& boot) {
  auto d = read_dataset(path, format);
  if (!rf.reference.empty()) d.fuzzer_index(rf.reference);
  auto spec = default_design_spec(d, rf.reference);
  spec.per_benchmark = rf.per_benchmark;
  spec.include_interactions = !rf.no_interactions;
  if (spec.properties.empty()) throw DataError("dataset carries none of the model properties");
  auto rd = rank_dataset(d, rank_requests(spec));
  auto model = fit_explainable_model(rd, spec, boot.spec());
  auto diag = diagnose(rd, model, parse_residual_order(rf.residual_order));

  write_csv(model.ci, std::cout);
  std::cerr << "R2 " << format_double(model.fit.r2) << " (adjusted " << format_double(model.fit.r2_adjusted)
            << "), F p-value " << format_double(model.fit.f_p_value) << ", median residual "
            << format_double(model.fit.median_residual) << "\n";
  std::cerr << "Durbin-Watson " << format_double(diag.durbin_watson.statistic) << " p "
            << format_double(diag.durbin_watson.p_value) << " (" << to_string(diag.order) << ")\n";
  for (const auto& [k, v] : diag.vif)
    std::cerr << "VIF " << k << ' ' << format_double(v) << (v < kVifFlagThreshold ? "" : "  (flagged)") << '\n';

  if (!rf.fit_json.empty()) write_file(rf.fit_json, dump_json(model_to_json(model)));
  if (!rf.out_dir.empty()) {
    const fs::path dir(rf.out_dir);
    std::ostringstream coef, qq, sl;
    write_csv(model.ci, coef);
    write_points_csv(diag.qq_points, "theoretical_quantile", "standardized_residual", qq);
    write_points_csv(diag.scale_location, "fitted", "sqrt_abs_standardized_residual", sl);
    write_file(dir / "coefficients.csv", coef.str());
    write_file(dir / "qq.csv", qq.str());
    write_file(dir / "scale_location.csv", sl.str());
    write_file(dir / "diagnostics.json", dump_json(to_json(diag)));
    write_file(dir / "fit.json", dump_json(model_to_json(model)));
  }
  return 0;
}

std::map<PropertyKey, double> parse_assignments(const std::vector<std::string>& sets) {
  std::map<PropertyKey, double> out;
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects <key>=<rank>, got '" + s + "'");
    auto v = parse_double(std::string_view(s).substr(eq + 1));
    if (!v || !std::isfinite(*v)) throw UsageError("--set value for '" + s.substr(0, eq) + "' is not a number");
    out[s.substr(0, eq)] = *v;
  }
  return out;
}

int run_predict(const std::string& fit_path, const std::string& fuzzer, const std::vector<std::string>& sets,
                const std::string& versus, const std::string& vary) {
  Json j;
  try {
    j = Json::parse(read_text(fit_path));
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("fit file is not JSON: ") + e.what());
  }
  auto model = model_from_json(j);
  auto ranks = parse_assignments(sets);
  std::cout << "predicted_rank," << format_double(predict_rank(model, fuzzer, ranks)) << '\n';
  if (!versus.empty()) {
    if (vary.empty()) throw UsageError("--versus requires --vary <key>");
    std::cout << "versus_rank," << format_double(predict_rank(model, versus, ranks)) << '\n';
    auto c = crossover(model, fuzzer, versus, vary, ranks);
    if (!c.delta) {
      std::cout << "crossover,none\n";
    } else {
      const double at = (ranks.count(vary) ? ranks.at(vary)
                                           : std::find_if(model.design.properties.begin(),
                                                          model.design.properties.end(),
                                                          [&](const auto& p) { return p.key == vary; })
                                                 ->reference_level) +
                        *c.delta;
      std::cout << "crossover_rank," << format_double(at) << '\n';
      std::cout << "ahead_above," << (c.challenger_ahead_above ? versus : fuzzer) << '\n';
    }
  }
  return 0;
}

void print_properties(const std::map<PropertyKey, double>& props) {
  for (const auto& [k, v] : props) std::cout << k << '=' << format_double(v) << '\n';
}

int run_props_corpus(const std::string& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw DataError("cannot open '" + manifest + "'");
  print_properties(corpus_properties(parse_corpus_manifest(in)));
  return 0;
}

int run_props_program(const std::string& headers, const std::string& disasm) {
  auto s = parse_disassembly(read_text(disasm));
  s.text_bytes = parse_section_headers(read_text(headers));
  print_properties(program_properties(s));
  return 0;
}

int run_sample_corpus(const std::string& pool_path, double fraction, std::uint64_t seed) {
  std::istream* in = &std::cin;
  std::ifstream file;
  if (pool_path != "-") {
    file.open(pool_path, std::ios::binary);
    if (!file) throw DataError("cannot open '" + pool_path + "'");
    in = &file;
  }
  std::vector<std::string> pool;
  std::string line;
  while (std::getline(*in, line)) {
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    pool.emplace_back(t);
  }
  for (const auto& id : sample_corpus(pool, fraction, seed)) std::cout << id << '\n';
  return 0;
}

struct SynthFlags {
  bool use_fixture = false;
  std::string spec_path;
  std::string mode;
  std::string output;
  std::string truth;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

int run_synth(const SynthFlags& f) {
  if (f.use_fixture == !f.spec_path.empty()) throw UsageError("synth needs exactly one of --fixture or --spec");
  SynthSpec spec;
  if (f.use_fixture) {
    spec = fixture_spec();
  } else {
    Json j;
    try {
      j = Json::parse(read_text(f.spec_path));
    } catch (const Json::parse_error& e) {
      throw DataError(std::string("spec file is not JSON: ") + e.what());
    }
    spec = synth_spec_from_json(j);
  }
  spec.seed = resolve_seed(f.seed_opt, f.seed, spec.seed);
  if (!f.mode.empty()) spec.mode = parse_synth_mode(f.mode);
  auto res = generate(spec);
  if (f.output.empty() || f.output == "-") {
    write_csv(res.dataset, std::cout);
  } else {
    write_file(f.output, to_csv_string(res.dataset));
  }
  std::string truth = f.truth;
  if (truth.empty() && !f.output.empty() && f.output != "-") truth = f.output + ".truth.json";
  if (!truth.empty()) write_file(truth, dump_json(to_json(res.truth)));
  return 0;
}

struct ReportFlags {
  std::string out_dir = "report";
  std::string reference;
  double alpha = 0.05;
  std::string scope = "within";
  std::string residual_order = "fuzzer-program-trial";
  bool no_svg = false;
  bool no_plots = false;
};

int run_report(const std::string& path, const std::string& format, const ReportFlags& rf, const BootFlags& boot) {
  auto d = read_dataset(path, format);
  ReportOptions opt;
  opt.dataset_label = path;
  opt.boot = boot.spec();
  opt.alpha = rf.alpha;
  opt.reference_fuzzer = rf.reference;
  opt.correlation_scope = parse_rank_scope(rf.scope);
  opt.residual_order = parse_residual_order(rf.residual_order);
  auto rep = build_report(d, opt);
  const fs::path dir(rf.out_dir);
  if (!rf.no_plots) emit_plot_data(rep, dir, !rf.no_svg);
  const auto j = to_json(rep);
  const auto text = render_text(j);
  write_file(dir / "report.json", dump_json(j));
  write_file(dir / "report.txt", text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fuzzeval: rank statistics, effect sizes and regression of fuzzer ranks on "
               "benchmark properties"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string data, format;
  auto add_data = [&](CLI::App* sub) {
    sub->add_option("data", data, "dataset (CSV or JSON, '-' for stdin)")->required();
    sub->add_option("--format", format, "input format (default: from extension)")->check(CLI::IsMember({"csv", "json"}));
  };

  auto* validate = app.add_subcommand("validate", "check a dataset and list every problem");
  add_data(validate);

  std::string scope = "within", out_dir;
  bool no_svg = false;
  auto* correlate = app.add_subcommand("correlate", "Spearman rho of property ranks against performance ranks");
  add_data(correlate);
  correlate->add_option("--scope", scope, "rank scope")->check(CLI::IsMember({"within", "global"}))->capture_default_str();
  correlate->add_option("--out-dir", out_dir, "directory for scatter/mean plot CSVs and SVGs");
  correlate->add_flag("--no-svg", no_svg, "skip SVG output");

  std::string program;
  double alpha = 0.05;
  auto* compare = app.add_subcommand("compare", "pairwise A12 and Mann-Whitney p-values");
  add_data(compare);
  compare->add_option("--program", program, "program id, or 'pooled' for fuzzer ranks across programs")->required();
  compare->add_option("--alpha", alpha, "significance level")->capture_default_str();
  std::string alternative = "two-sided";
  compare->add_option("--alternative", alternative, "'greater': the row fuzzer outperforms the column fuzzer")
      ->check(CLI::IsMember({"two-sided", "greater", "less"}))
      ->capture_default_str();

  std::string property, slope_scope;
  BootFlags slope_boot;
  auto* slopes = app.add_subcommand("slopes", "per-fuzzer slope of fuzzer rank on a property rank");
  add_data(slopes);
  slopes->add_option("--property", property, "property key")->required();
  slopes->add_option("--scope", slope_scope, "rank scope (default: as in the model)")
      ->check(CLI::IsMember({"within", "global", "program"}));
  slopes->add_option("--out-dir", out_dir, "directory for point and line CSVs");
  slope_boot.add(slopes, "pairs", false);

  RegressFlags rf;
  BootFlags reg_boot;
  auto* regress = app.add_subcommand("regress", "fuzzer rank ~ fuzzer x properties with bootstrap CIs");
  add_data(regress);
  regress->add_option("--reference", rf.reference, "reference fuzzer");
  regress->add_flag("--per-benchmark", rf.per_benchmark, "one block of terms per program");
  regress->add_flag("--no-interactions", rf.no_interactions, "drop fuzzer x property terms");
  regress->add_option("--out-dir", rf.out_dir, "directory for coefficients, QQ and scale-location CSVs");
  regress->add_option("--fit-json", rf.fit_json, "write the fitted model for 'predict'");
  regress->add_option("--residual-order", rf.residual_order, "residual order for Durbin-Watson")
      ->check(CLI::IsMember({"fuzzer-program-trial", "program-trial-fuzzer", "input"}))
      ->capture_default_str();
  reg_boot.add(regress, "wild");

  std::string fit_path, fuzzer, versus, vary;
  std::vector<std::string> sets;
  auto* predict = app.add_subcommand("predict", "predicted fuzzer rank from a fitted model");
  predict->add_option("fit", fit_path, "fit JSON written by regress")->required();
  predict->add_option("--fuzzer", fuzzer, "fuzzer")->required();
  predict->add_option("--set", sets, "<key>=<rank>; unset properties stay at their reference level");
  predict->add_option("--versus", versus, "second fuzzer for a crossover solve");
  predict->add_option("--vary", vary, "property varied in the crossover solve");

  auto* props = app.add_subcommand("props", "benchmark properties from raw artifacts");
  props->require_subcommand(1);
  std::string manifest, headers, disasm;
  auto* props_corpus = props->add_subcommand("corpus", "corpus properties from a seed manifest");
  props_corpus->add_option("manifest", manifest, "manifest CSV")->required();
  auto* props_program = props->add_subcommand("program", "program properties from objdump output");
  props_program->add_option("--headers", headers, "objdump -h output")->required();
  props_program->add_option("--disasm", disasm, "objdump -d output")->required();

  std::string pool;
  double fraction = 0.2;
  std::uint64_t sample_seed = 0;
  auto* sample = app.add_subcommand("sample-corpus", "draw an initial corpus from a seed pool");
  sample->add_option("pool", pool, "file with one seed id per line ('-' for stdin)")->required();
  sample->add_option("--mean-fraction", fraction, "mean sample size as a fraction of the pool")->capture_default_str();
  auto* sample_seed_opt = sample->add_option("--seed", sample_seed, "random seed (default: $FUZZEVAL_SEED or 0)");

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "synthetic dataset with known coefficients");
  synth->add_flag("--fixture", sf.use_fixture, "the bundled four-fuzzer fixture");
  synth->add_option("--spec", sf.spec_path, "generator spec JSON");
  synth->add_option("--mode", sf.mode, "generation mode")
      ->check(CLI::IsMember({"expected-rank", "latent-linear", "latent-monotone"}));
  synth->add_option("-o,--output", sf.output, "dataset CSV (default stdout)");
  synth->add_option("--truth", sf.truth, "ground-truth JSON (default <output>.truth.json)");
  sf.seed_opt = synth->add_option("--seed", sf.seed, "generator seed (default: spec seed)");

  ReportFlags rpf;
  BootFlags rep_boot;
  auto* report = app.add_subcommand("report", "full evaluation report (JSON, text and plot data)");
  add_data(report);
  report->add_option("--out-dir", rpf.out_dir, "output directory")->capture_default_str();
  report->add_option("--reference", rpf.reference, "reference fuzzer");
  report->add_option("--alpha", rpf.alpha, "significance level")->capture_default_str();
  report->add_option("--scope", rpf.scope, "scope of the correlation figures")
      ->check(CLI::IsMember({"within", "global"}))
      ->capture_default_str();
  report->add_option("--residual-order", rpf.residual_order, "residual order for Durbin-Watson")
      ->check(CLI::IsMember({"fuzzer-program-trial", "program-trial-fuzzer", "input"}))
      ->capture_default_str();
  report->add_flag("--no-svg", rpf.no_svg, "skip SVG output");
  report->add_flag("--no-plots", rpf.no_plots, "skip plot data files");
  rep_boot.add(report, "wild");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*validate) return run_validate(data, format);
    if (*correlate) return run_correlate(data, format, scope, out_dir, !no_svg);
    if (*compare) return run_compare(data, format, program, alpha, alternative);
    if (*slopes) return run_slopes(data, format, property, slope_scope, slope_boot, out_dir);
    if (*regress) return run_regress(data, format, rf, reg_boot);
    if (*predict) return run_predict(fit_path, fuzzer, sets, versus, vary);
    if (*props_corpus) return run_props_corpus(manifest);
    if (*props_program) return run_props_program(headers, disasm);
    if (*sample) return run_sample_corpus(pool, fraction, resolve_seed(sample_seed_opt, sample_seed));
    if (*synth) return run_synth(sf);
    if (*report) return run_report(data, format, rpf, rep_boot);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ComputeError& e) {
    std::cerr << "computation error: " << e.what() << '\n';
    return kExitCompute;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCompute;
  }
  std::cerr << app.help();
  return kExitUsage;
}
