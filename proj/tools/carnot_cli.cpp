#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "carnot/group_spec.hpp"
#include "carnot/heisenberg.hpp"
#include "carnot/measures.hpp"
#include "constant_cache.hpp"
#include "scenarios.hpp"

using namespace carnot;
using nlohmann::json;

namespace {

enum Exit : int {
  kOk = 0,
  kSyntax = 1,
  kAlgebra = 2,
  kEstimator = 3,
  kDisagree = 4,
  kHypothesis = 5,
  kUsage = 64,
};

// Usage errors raised by the front end itself.
struct UsageError : Error {
  using Error::Error;
};

// Unknown names inside a spec file count as syntax errors.
struct SpecError : Error {
  using Error::Error;
};

GradedAlgebra parse_spec_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw UsageError("no such file: " + path);
  try {
    return parse_group_spec(read_group_spec(path));
  } catch (const UnknownSymbol& e) {
    throw SpecError(path + ": unknown symbol '" + std::string(e.what()) + "'");
  } catch (const DuplicateBracket& e) {
    throw SpecError(path + ": duplicate bracket [" + std::string(e.what()) + "]");
  }
}

struct RunConfig {
  std::string group = "heis:1";
  std::string dist = "koranyi";
  std::string target_dist = "euclidean";
  std::string subgroup;
  std::string splitting;
  std::string morphism;
  std::string target;
  std::string scenario;
  std::string kind;
  std::string format = "json";
  std::string output;
  std::string point;
  int k = 1;
  int samples = 0;  // log2 points per replicate; 0 = estimator default
  double window = 0.5;
  double tolerance = 3.0;
  double ratio_tolerance = 0.05;
  std::uint64_t seed = 0x5eedULL;
  bool no_cache = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(detail::trim(item));
  return out;
}

double number(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("bad number '" + s + "'");
}

// "r1;r2;..." with comma-separated entries.
Mat parse_rows(const std::string& s) {
  auto rows = split(s, ';');
  if (rows.empty()) throw UsageError("empty matrix");
  std::vector<std::vector<double>> vals;
  for (const auto& r : rows) {
    std::vector<double> row;
    for (const auto& x : split(r, ',')) row.push_back(number(x));
    if (!vals.empty() && row.size() != vals.front().size()) throw UsageError("ragged matrix '" + s + "'");
    vals.push_back(row);
  }
  Mat m(vals.size(), vals.front().size());
  for (std::size_t i = 0; i < vals.size(); ++i)
    for (std::size_t j = 0; j < vals[i].size(); ++j) m(i, j) = vals[i][j];
  return m;
}

struct LoadedGroup {
  GroupPtr g;
  std::string canonical;
};

bool looks_like_path(const std::string& s) {
  return s.find('/') != std::string::npos || s.find(".spec") != std::string::npos;
}

LoadedGroup load_group(const std::string& arg) {
  GradedAlgebra a;
  if (looks_like_path(arg)) {
    a = parse_spec_file(arg);
  } else {
    a = builtin_from_tag(arg);
  }
  return {make_group(a), serialize_group_spec(a)};
}

// "X1,T" by coordinate names, or "v:c1;c2" with comma-separated columns.
HomSubgroup parse_subgroup(GroupPtr g, const std::string& s) {
  if (s.empty()) throw UsageError("--subgroup is required");
  if (s == "whole") return whole_group(g);
  if (s == "trivial") return trivial_subgroup(g);
  if (s.rfind("v:", 0) == 0) {
    Mat cols = parse_rows(s.substr(2)).transpose();
    if (cols.rows() != g->dim()) throw UsageError("subgroup vectors must have " + std::to_string(g->dim()) + " entries");
    return span_subgroup(g, cols);
  }
  return coordinate_subgroup(g, split(s, ','));
}

Splitting parse_splitting(GroupPtr g, const std::string& s) {
  auto pos = s.find('/');
  if (pos == std::string::npos) throw UsageError("--splitting takes W/V");
  return make_splitting(parse_subgroup(g, s.substr(0, pos)), parse_subgroup(g, s.substr(pos + 1)));
}

HomMorphism parse_morphism(GroupPtr g, const RunConfig& cfg) {
  if (cfg.morphism.empty()) throw UsageError("--morphism is required");
  Mat m = parse_rows(cfg.morphism);
  GroupPtr t = cfg.target.empty() ? make_group("abelian:" + std::to_string(m.rows()))
                                  : load_group(cfg.target).g;
  return hom_morphism(m, g, t);
}

QuadratureOptions quad(const RunConfig& cfg, QuadratureOptions q) {
  if (cfg.samples > 0) q.log2n = cfg.samples;
  q.seed = cfg.seed;
  return q;
}

std::string matrix_string(const Mat& m) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (int i = 0; i < m.rows(); ++i) {
    if (i) os << ";";
    for (int j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
  }
  return os.str();
}

json record(const std::string& kind, const json& inputs, const MeasureEstimate& e,
            const std::vector<std::string>& flags) {
  return {{"kind", kind},
          {"inputs", inputs},
          {"value", e.value},
          {"std_error", e.std_error},
          {"samples", e.samples},
          {"seed", e.seed},
          {"flags", flags}};
}

void emit(const RunConfig& cfg, const json& j, const std::vector<std::vector<std::string>>& csv_rows,
          const std::vector<std::string>& csv_header) {
  std::ostringstream os;
  if (cfg.format == "csv") {
    for (std::size_t i = 0; i < csv_header.size(); ++i) os << (i ? "," : "") << csv_header[i];
    os << "\n";
    for (const auto& r : csv_rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
  } else {
    os << j.dump(2) << "\n";
  }
  if (cfg.output.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream out(cfg.output);
    if (!out) throw UsageError("cannot write " + cfg.output);
    out << os.str();
  }
}

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::vector<std::string> estimate_row(const std::string& label, const MeasureEstimate& e) {
  return {label, num(e.value), num(e.std_error), std::to_string(e.samples), std::to_string(e.seed)};
}

const std::vector<std::string> kEstimateHeader{"quantity", "value", "std_error", "samples", "seed"};

void summary(const std::string& what, const MeasureEstimate& e) {
  std::cerr << what << " = " << std::setprecision(8) << e.value << " ± " << e.std_error << " ("
            << e.samples << " samples)\n";
}

// ----- validate -----

int cmd_validate(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    std::cerr << "error: no such file: " << path << "\n";
    return kUsage;
  }
  auto a = parse_spec_file(path);
  auto g = make_group(a);
  std::cout << "valid: " << path << "\n"
            << "  dimension " << g->dim() << ", step " << g->step() << ", homogeneous dimension "
            << g->hom_dim() << "\n  layers";
  for (int d : a.layer_dims()) std::cout << " " << d;
  std::cout << "\n";
  if (g->heis_n() > 0) std::cout << "  isomorphic to heis(" << g->heis_n() << ")\n";
  return kOk;
}

// ----- constants -----

int cmd_constants(const RunConfig& cfg) {
  auto lg = load_group(cfg.group);
  GroupPtr g = lg.g;
  HomDistance dist = distance_from_tag(g, cfg.dist);
  NormalizationBudget budget;
  budget.seed = cfg.seed;
  if (cfg.samples > 0) budget.log2_points = cfg.samples;
  Normalizer N = make_normalizer(dist, budget);

  json inputs = {{"group", lg.canonical}, {"dist", dist.description()}, {"budget", budget.key()}};
  if (cfg.kind == "heis_c") inputs["k"] = cfg.k;
  if (!cfg.subgroup.empty()) inputs["subgroup"] = cfg.subgroup;
  if (!cfg.splitting.empty()) inputs["splitting"] = cfg.splitting;
  if (!cfg.morphism.empty()) inputs["morphism"] = cfg.morphism, inputs["target_dist"] = cfg.target_dist;
  if (!cfg.target.empty()) inputs["target"] = cfg.target;
  const std::string key = cfg.kind + "|" + inputs.dump();

  cli::ConstantCache cache(!cfg.no_cache && cfg.format == "json");
  if (auto hit = cache.load(key)) {
    std::cerr << "cache hit\n";
    emit(cfg, *hit, {}, {});
    return kOk;
  }

  json out;
  std::vector<std::vector<std::string>> rows;
  if (cfg.kind == "beta") {
    auto P = parse_subgroup(g, cfg.subgroup.empty() ? "whole" : cfg.subgroup);
    Normalizer exact = N;
    exact.quant = 0;
    auto h = exact(P);
    auto e = h.beta_estimate();
    out = record("beta", inputs, e, h.flags);
    out["theta"] = h.theta.value;
    out["hom_dim"] = h.d;
    rows.push_back(estimate_row("beta", e));
    summary("beta", e);
  } else if (cfg.kind == "area") {
    auto P = parse_subgroup(g, cfg.subgroup);
    if (cfg.splitting.empty()) throw UsageError("--kind area needs --splitting W/V");
    auto s = parse_splitting(g, cfg.splitting);
    auto a = area_factor(P, s, N, quad(cfg, {14, 8, 0}));
    out = record("area", inputs, a.value, {});
    out["secondary"] = {{"value", a.secondary.value}, {"std_error", a.secondary.std_error}};
    out["jacobian"] = a.jacobian;
    out["z"] = a.z;
    rows.push_back(estimate_row("area", a.value));
    rows.push_back(estimate_row("area_secondary", a.secondary));
    summary("area factor", a.value);
  } else if (cfg.kind == "coarea") {
    auto P = parse_subgroup(g, cfg.subgroup.empty() ? "whole" : cfg.subgroup);
    auto L = parse_morphism(g, cfg);
    Normalizer NL = make_normalizer(distance_from_tag(L.target, cfg.target_dist), budget);
    CoareaOptions opt;
    opt.quad = quad(cfg, opt.quad);
    auto c = coarea_factor(P, L, N, NL, opt);
    auto closed = coarea_factor_closed(P, L, N, NL);
    out = record("coarea", inputs, c, {});
    out["closed_form"] = {{"value", closed.value}, {"std_error", closed.std_error}};
    rows.push_back(estimate_row("coarea", c));
    rows.push_back(estimate_row("coarea_closed", closed));
    summary("coarea factor", c);
  } else if (cfg.kind == "ratio") {
    auto P = parse_subgroup(g, cfg.subgroup.empty() ? "whole" : cfg.subgroup);
    auto r = sh_ratio(P, N);
    out = record("ratio", inputs, r.estimate, r.flags);
    out["interval"] = {r.interval->lo, r.interval->hi};
    out["bounds"] = {1.0, std::ldexp(1.0, P.hom_dim())};
    rows.push_back(estimate_row("ratio", r.estimate));
    std::cerr << "ratio in [" << r.interval->lo << ", " << r.interval->hi << "]\n";
  } else if (cfg.kind == "density") {
    auto P = parse_subgroup(g, cfg.subgroup.empty() ? "whole" : cfg.subgroup);
    auto d = density_constant(P, N, quad(cfg, {16, 8, 0}));
    out = record("density", inputs, d, {});
    rows.push_back(estimate_row("density", d));
    summary("density", d);
  } else if (cfg.kind == "heis_c") {
    auto c = c_constant(g, cfg.k, N, cfg.seed);
    out = record("heis_c", inputs, c.value, {});
    out["second_representative"] = {{"value", c.second.value}, {"std_error", c.second.std_error}};
    out["z"] = c.z;
    rows.push_back(estimate_row("heis_c", c.value));
    rows.push_back(estimate_row("heis_c_rotated", c.second));
    summary("c(" + std::to_string(c.n) + "," + std::to_string(c.k) + ")", c.value);
  } else {
    throw UsageError("unknown kind '" + cfg.kind + "'");
  }
  cache.store(key, out);
  emit(cfg, out, rows, kEstimateHeader);
  return kOk;
}

// ----- area-check -----

int verdict(double z, double tol) { return std::abs(z) <= tol ? kOk : kDisagree; }

int cmd_area_check(const RunConfig& cfg) {
  json inputs;
  cli::AreaScenario sc;
  if (!cfg.scenario.empty()) {
    sc = cli::area_scenario(cfg.scenario, quad(cfg, {12, 8, 0}));
    inputs = {{"scenario", cfg.scenario}};
  } else {
    auto lg = load_group(cfg.group);
    GroupPtr g = lg.g;
    auto P = parse_subgroup(g, cfg.subgroup);
    if (cfg.splitting.empty()) throw UsageError("area-check needs --scenario or --splitting W/V");
    auto s = parse_splitting(g, cfg.splitting);
    auto N = make_normalizer(distance_from_tag(g, cfg.dist));
    Box A = Box::cube(s.W.dim(), cfg.window);
    auto q = quad(cfg, {12, 8, 0});
    sc = {"subgroup window", {"area_integrate", [=] { return area_integrate(subgroup_graph(P, s, A), cli::unit_weight, N, q); }},
          {"subgroup_window", [=] { return subgroup_window_measure(P, s, A, N, q); }}};
    inputs = {{"group", lg.canonical}, {"dist", cfg.dist}, {"subgroup", cfg.subgroup},
              {"splitting", cfg.splitting}, {"window", cfg.window}};
  }
  inputs["tolerance"] = cfg.tolerance;
  std::cerr << sc.description << "\n";
  auto a = sc.lhs.run();
  auto b = sc.rhs.run();
  const double se = std::hypot(a.std_error, b.std_error);
  const double z = se > 0 ? (a.value - b.value) / se : (a.value == b.value ? 0.0 : INFINITY);
  MeasureEstimate diff{a.value - b.value, se, a.samples + b.samples, cfg.seed};
  const int code = verdict(z, cfg.tolerance);
  std::vector<std::string> flags;
  if (code != kOk) flags.push_back("disagreement");
  json out = record("area-check", inputs, diff, flags);
  out["lhs"] = {{"label", sc.lhs.label}, {"value", a.value}, {"std_error", a.std_error}};
  out["rhs"] = {{"label", sc.rhs.label}, {"value", b.value}, {"std_error", b.std_error}};
  out["z"] = z;
  summary(sc.lhs.label, a);
  summary(sc.rhs.label, b);
  std::cerr << "z = " << z << (code == kOk ? "  agree" : "  DISAGREE") << "\n";
  emit(cfg, out, {estimate_row(sc.lhs.label, a), estimate_row(sc.rhs.label, b)}, kEstimateHeader);
  return code;
}

// ----- coarea-check -----

int cmd_coarea_check(const RunConfig& cfg) {
  json inputs;
  std::optional<cli::CoareaScenario> sc;
  if (!cfg.scenario.empty()) {
    sc = cli::coarea_scenario(cfg.scenario);
    inputs = {{"scenario", cfg.scenario}};
  } else {
    auto lg = load_group(cfg.group);
    GroupPtr g = lg.g;
    auto L = parse_morphism(g, cfg);
    sc = cli::CoareaScenario{"whole group over a window, u linear",
                             surface_whole(g, Box::cube(g->dim(), cfg.window)), from_morphism(L),
                             cli::unit_weight, make_normalizer(distance_from_tag(g, cfg.dist)),
                             make_normalizer(distance_from_tag(L.target, cfg.target_dist))};
    inputs = {{"group", lg.canonical}, {"dist", cfg.dist}, {"morphism", matrix_string(L.matrix)},
              {"target_dist", cfg.target_dist}, {"window", cfg.window}};
  }
  inputs["tolerance"] = cfg.tolerance;
  inputs["ratio_tolerance"] = cfg.ratio_tolerance;
  CoareaCheckOptions opt;
  opt.seed = cfg.seed;
  if (cfg.samples > 0) opt.lhs.log2n = cfg.samples, opt.slices.quad.log2n = cfg.samples - 1;
  std::cerr << sc->description << "\n";
  auto rep = coarea_check(sc->sigma, sc->u, sc->h, sc->N, sc->NL, opt);
  const int code = rep.passes(cfg.tolerance, cfg.ratio_tolerance) ? kOk : kDisagree;
  auto flags = rep.flags;
  if (code != kOk) flags.push_back("disagreement");
  MeasureEstimate diff{rep.lhs.value - rep.rhs.value, std::hypot(rep.lhs.std_error, rep.rhs.std_error),
                       rep.lhs.samples + rep.rhs.samples, cfg.seed};
  json out = record("coarea-check", inputs, diff, flags);
  out["lhs"] = {{"value", rep.lhs.value}, {"std_error", rep.lhs.std_error}, {"samples", rep.lhs.samples}};
  out["rhs"] = {{"value", rep.rhs.value}, {"std_error", rep.rhs.std_error}, {"samples", rep.rhs.samples}};
  out["z"] = rep.z;
  out["ratio"] = std::isfinite(rep.ratio) ? json(rep.ratio) : json(nullptr);
  out["hypothesis"] = {{"split_regular", rep.good},
                       {"not_surjective", rep.not_surjective},
                       {"unsplittable", rep.unsplittable},
                       {"unsplittable_branch", rep.unsplittable_branch},
                       {"linearized_mass", rep.linearized_mass},
                       {"uncertainty", rep.uncertainty}};
  json slices = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : rep.slices.per_slice) {
    std::vector<double> s(r.s.data(), r.s.data() + r.s.size());
    slices.push_back({{"s", s}, {"value", r.value.value}, {"std_error", r.value.std_error},
                      {"failed", r.failed}, {"attempted", r.attempted}});
    std::string sv;
    for (std::size_t i = 0; i < s.size(); ++i) sv += (i ? ";" : "") + num(s[i]);
    rows.push_back({sv, num(r.value.value), num(r.value.std_error), std::to_string(r.failed),
                    std::to_string(r.attempted)});
  }
  out["slices"] = slices;
  summary("lhs", rep.lhs);
  summary("rhs", rep.rhs);
  if (rep.unsplittable_branch)
    std::cerr << "no split-regular points: both sides vanish, linearized mass " << rep.linearized_mass << "\n";
  else
    std::cerr << "z = " << rep.z << ", ratio = " << rep.ratio << (code == kOk ? "  agree" : "  DISAGREE") << "\n";
  emit(cfg, out, rows, {"s", "value", "std_error", "failed", "attempted"});
  return code;
}

// ----- density -----

// Federer density of ψ⌞P at a point of P, expected to be 1.
int cmd_density(const RunConfig& cfg) {
  auto lg = load_group(cfg.group);
  GroupPtr g = lg.g;
  auto dist = distance_from_tag(g, cfg.dist);
  NormalizationBudget budget;
  budget.seed = cfg.seed;
  auto N = make_normalizer(dist, budget);
  auto P = parse_subgroup(g, cfg.subgroup.empty() ? "whole" : cfg.subgroup);
  Normalizer exact = N;
  exact.quant = 0;
  HaarBallMeasure mu(exact(P), dist, 1.0, cfg.samples > 0 ? cfg.samples : 13, 8, cfg.seed);
  Vec x = Vec::Zero(g->dim());
  if (!cfg.point.empty()) {
    Mat m = parse_rows(cfg.point);
    if (m.size() != g->dim()) throw UsageError("--point needs " + std::to_string(g->dim()) + " entries");
    x = Eigen::Map<Vec>(m.data(), g->dim());
    if (!P.contains(x, 1e-9)) throw UsageError("--point is not in the subgroup");
  }
  FedererOptions fo;
  fo.seed = cfg.seed;
  auto res = federer_density(mu, x, dist, P.hom_dim(), fo);
  const double dev = std::abs(res.estimate.value - 1.0);
  const double allow = std::max(cfg.tolerance * res.estimate.std_error, cfg.ratio_tolerance);
  const int code = dev <= allow ? kOk : kDisagree;
  json inputs = {{"group", lg.canonical}, {"dist", dist.description()},
                 {"subgroup", cfg.subgroup.empty() ? "whole" : cfg.subgroup},
                 {"point", matrix_string(x.transpose())}, {"tolerance", cfg.tolerance},
                 {"ratio_tolerance", cfg.ratio_tolerance}};
  std::vector<std::string> flags;
  if (code != kOk) flags.push_back("disagreement");
  json out = record("federer_density", inputs, res.estimate, flags);
  json ladder = json::array();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < res.ladder.size(); ++i) {
    ladder.push_back({{"scale", fo.scales[i]}, {"value", res.ladder[i].value},
                      {"std_error", res.ladder[i].std_error}});
    rows.push_back(estimate_row("scale " + num(fo.scales[i]), res.ladder[i]));
  }
  out["ladder"] = ladder;
  summary("density", res.estimate);
  emit(cfg, out, rows, kEstimateHeader);
  return code;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SyntaxError*>(&e) || dynamic_cast<const SpecError*>(&e))
    return kSyntax;
  if (dynamic_cast<const AlgebraViolation*>(&e)) return kAlgebra;
  if (dynamic_cast<const HypothesisViolated*>(&e) || dynamic_cast<const CodimTooLarge*>(&e) ||
      dynamic_cast<const NotVertical*>(&e) || dynamic_cast<const NotRotationallyInvariant*>(&e) ||
      dynamic_cast<const NotHeisenberg*>(&e) || dynamic_cast<const NotAGraph*>(&e))
    return kHypothesis;
  if (dynamic_cast<const RoutesDisagree*>(&e) || dynamic_cast<const RepresentativeDisagreement*>(&e))
    return kDisagree;
  if (dynamic_cast<const NonConvergent*>(&e) || dynamic_cast<const NoConvergence*>(&e) ||
      dynamic_cast<const ExtrapolationDiverged*>(&e) || dynamic_cast<const DegenerateCoercivity*>(&e) ||
      dynamic_cast<const SingularRestriction*>(&e))
    return kEstimator;
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carnot: measures, area and coarea on Carnot groups"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string spec_path;

  auto common = [&cfg](CLI::App* sub) {
    sub->add_option("--group", cfg.group, "builtin tag (heis:1, abelian:2, engel) or spec file")->capture_default_str();
    sub->add_option("--dist", cfg.dist, "koranyi | euclidean | box[:eps,...]")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--samples", cfg.samples, "log2 quadrature points per replicate")->check(CLI::Range(4, 24));
    sub->add_option("--format", cfg.format, "json | csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    sub->add_option("--output", cfg.output, "write the result here instead of stdout");
    sub->add_option("--subgroup", cfg.subgroup, "coordinate names X1,T or v:col;col or whole");
  };

  auto* validate = app.add_subcommand("validate", "parse and check a group specification");
  validate->add_option("spec", spec_path, "spec file")->required();

  auto* constants = app.add_subcommand("constants", "compute a normalization constant");
  common(constants);
  constants->add_option("--kind", cfg.kind, "beta | area | coarea | ratio | density | heis_c")
      ->required()
      ->check(CLI::IsMember({"beta", "area", "coarea", "ratio", "density", "heis_c"}));
  constants->add_option("--splitting", cfg.splitting, "W/V");
  constants->add_option("--morphism", cfg.morphism, "matrix rows r1;r2 with comma-separated entries");
  constants->add_option("--target", cfg.target, "target group of the morphism");
  constants->add_option("--target-dist", cfg.target_dist, "distance on the target")->capture_default_str();
  constants->add_option("--k", cfg.k, "codimension index for heis_c")->capture_default_str();
  constants->add_flag("--no-cache", cfg.no_cache, "bypass the on-disk constant cache");

  auto* area = app.add_subcommand("area-check", "compare the area formula with a direct measurement");
  common(area);
  area->add_option("--scenario", cfg.scenario, "bundled scenario")->check(CLI::IsMember(cli::area_scenarios()));
  area->add_option("--splitting", cfg.splitting, "W/V");
  area->add_option("--window", cfg.window, "half-width of the W window")->check(CLI::PositiveNumber);
  area->add_option("--tolerance", cfg.tolerance, "largest admissible |z|")->check(CLI::NonNegativeNumber)->capture_default_str();

  auto* coarea = app.add_subcommand("coarea-check", "compare both sides of the coarea formula");
  common(coarea);
  coarea->add_option("--scenario", cfg.scenario, "bundled scenario")->check(CLI::IsMember(cli::coarea_scenarios()));
  coarea->add_option("--morphism", cfg.morphism, "u as matrix rows");
  coarea->add_option("--target", cfg.target, "target group of u");
  coarea->add_option("--target-dist", cfg.target_dist, "distance on the target")->capture_default_str();
  coarea->add_option("--window", cfg.window, "half-width of the coordinate window")->check(CLI::PositiveNumber);
  coarea->add_option("--tolerance", cfg.tolerance, "largest admissible |z|")->check(CLI::NonNegativeNumber)->capture_default_str();
  coarea->add_option("--ratio-tolerance", cfg.ratio_tolerance, "largest admissible |lhs/rhs - 1|")
      ->check(CLI::NonNegativeNumber)->capture_default_str();

  auto* density = app.add_subcommand("density", "Federer density of a normalized subgroup measure");
  common(density);
  density->add_option("--point", cfg.point, "point of the subgroup, comma-separated");
  density->add_option("--tolerance", cfg.tolerance, "admissible deviation in standard errors")->capture_default_str();
  density->add_option("--ratio-tolerance", cfg.ratio_tolerance, "admissible relative deviation")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(spec_path);
    if (*constants) return cmd_constants(cfg);
    if (*area) return cmd_area_check(cfg);
    if (*coarea) return cmd_coarea_check(cfg);
    if (*density) return cmd_density(cfg);
  } catch (const SyntaxError& e) {
    std::cerr << "syntax error: " << e.what() << "\n";
    return kSyntax;
  } catch (const AlgebraViolation& e) {
    std::cerr << "algebra violation: " << e.what() << " (witness basis indices " << e.i << ", " << e.j
              << ", " << e.k << ")\n";
    return kAlgebra;
  } catch (const std::exception& e) {
    const int rc = exit_code_for(e);
    std::cerr << "error: " << e.what() << "\n";
    return rc;
  }
  return kUsage;
}
