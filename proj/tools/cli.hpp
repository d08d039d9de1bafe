#pragma once

// Command-line front end. Commands:
//   density      mixture density on an x grid, one column per depth
//   exceed       P(X > K) per depth and threshold, with ratio to N = 0
//   ratio-table  convexity ratios P(>K | N) / P(>K | 0) for constant rates
//   moments      closed-form vs enumerated raw moments, limits for bleed and
//                additive schedules
//   loglog       ln P(X > x) against ln x with local least-squares slopes
//   validate     Monte Carlo check of closed forms, 4 standard errors
//
// Exit codes: 0 success, 1 validation failure or I/O error, 2 bad arguments,
// 3 domain error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "tailmix/tailmix.hpp"

namespace tailmix::cli {

enum class OutputFormat { csv, json };

// Parsed command line shared by all commands.
struct RunConfig {
  std::string command;
  GaussianBase base;
  std::string schedule_text;
  OutputFormat format = OutputFormat::csv;
  std::string out_path;
  std::uint64_t seed = 42;

  std::string x_range;
  std::string n_list;
  std::string k_list;
  std::string a_list;
  std::string orders;
  std::uint64_t n_samples = 1'000'000;
  std::size_t points = 200;
  unsigned threads = 1;
  bool self_test = false;
};

struct Grid {
  double lo;
  double hi;
  double step;  // 0 when absent
};

inline Grid parse_grid(const std::string& text) {
  const auto parts = detail::split(text, ':');
  if (parts.size() < 2 || parts.size() > 3)
    throw parse_error("range '" + text + "' must look like min:max or min:max:step");
  Grid g{parse_real(parts[0], "range min"), parse_real(parts[1], "range max"), 0.0};
  if (parts.size() == 3) g.step = parse_real(parts[2], "range step");
  if (!(g.hi > g.lo)) throw domain_error("range '" + text + "' is empty");
  return g;
}

// min + i * step for i = 0 .. round((max - min) / step).
inline std::vector<double> linear_grid(const Grid& g) {
  if (!(g.step > 0)) throw domain_error("grid step must be > 0");
  const auto count = static_cast<std::size_t>(std::llround((g.hi - g.lo) / g.step)) + 1;
  std::vector<double> xs(count);
  for (std::size_t i = 0; i < count; ++i) xs[i] = g.lo + static_cast<double>(i) * g.step;
  return xs;
}

inline std::vector<double> parse_real_list(const std::string& text, std::string_view what) {
  std::vector<double> out;
  for (auto item : detail::split(text, ',')) out.push_back(parse_real(item, what));
  return out;
}

inline std::vector<std::size_t> parse_count_list(const std::string& text, std::string_view what) {
  std::vector<std::size_t> out;
  for (auto item : detail::split(text, ',')) out.push_back(parse_count(item, what));
  return out;
}

inline std::vector<int> parse_orders(const std::string& text) {
  std::vector<int> out;
  for (auto n : parse_count_list(text, "order")) {
    if (n < 1 || n > static_cast<std::size_t>(max_moment_order))
      throw unsupported_order("moment order " + std::to_string(n) + " outside 1..8");
    out.push_back(static_cast<int>(n));
  }
  return out;
}

inline std::string label(std::string_view prefix, double v) {
  return std::string(prefix) + format_number(v);
}

inline std::vector<ErrorSchedule> schedules_for(const RunConfig& cfg) {
  const ErrorSchedule s = parse_schedule(cfg.schedule_text);
  if (cfg.n_list.empty()) return {s};
  std::vector<ErrorSchedule> out;
  for (auto n : parse_count_list(cfg.n_list, "N")) out.push_back(s.with_depth(n));
  return out;
}

// Output of a command: a table, or a prebuilt JSON document for validate.
struct CommandResult {
  Table table;
  std::optional<nlohmann::json> json;
  int exit_code = 0;
};

inline CommandResult cmd_density(const RunConfig& cfg) {
  const auto xs = linear_grid(parse_grid(cfg.x_range.empty() ? "-4:4:0.05" : cfg.x_range));
  std::vector<MixtureDistribution> mixtures;
  Table t;
  t.columns.push_back("x");
  for (const auto& s : schedules_for(cfg)) {
    mixtures.push_back(build_compact_mixture(cfg.base, s));
    t.columns.push_back("f_N" + std::to_string(s.depth()));
  }
  for (double x : xs) {
    std::vector<Cell> row{x};
    for (const auto& m : mixtures) row.emplace_back(density(m, x));
    t.rows.push_back(std::move(row));
  }
  return {std::move(t), std::nullopt};
}

inline CommandResult cmd_exceed(const RunConfig& cfg) {
  const auto ks = parse_real_list(cfg.k_list.empty() ? "3,5,10" : cfg.k_list, "K");
  const MixtureDistribution gaussian = build_mixture(cfg.base, ErrorSchedule::constant(0.0, 0));
  Table t{{"N", "K", "p_exceed", "ln_p", "ratio_to_gaussian"}, {}};
  for (const auto& s : schedules_for(cfg)) {
    const MixtureDistribution m = build_compact_mixture(cfg.base, s);
    for (double k : ks) {
      const ExceedanceQuery q{k, s.depth(), true};
      const double ln_p = log_exceedance(m, q.k);
      const double ratio = std::exp(ln_p - log_exceedance(gaussian, q.k));
      t.rows.push_back({static_cast<double>(q.depth), q.k, exceedance(m, q.k), ln_p, ratio});
    }
  }
  return {std::move(t), std::nullopt};
}

inline CommandResult cmd_ratio_table(const RunConfig& cfg) {
  std::vector<double> as;
  if (!cfg.a_list.empty()) {
    as = parse_real_list(cfg.a_list, "a");
  } else if (!cfg.schedule_text.empty()) {
    const auto s = parse_schedule(cfg.schedule_text);
    if (!s.is_constant_rate()) throw domain_error("ratio-table needs a constant-rate schedule");
    as = {s.a()};
  } else {
    as = {0.01, 0.1};
  }
  const auto ns = parse_count_list(cfg.n_list.empty() ? "5,10,15,20,25" : cfg.n_list, "N");
  const auto ks = parse_real_list(cfg.k_list.empty() ? "3,5,10" : cfg.k_list, "K");

  Table t;
  t.columns = {"a", "N"};
  for (double k : ks) t.columns.push_back(label("ratio_K", k));
  for (double a : as)
    for (auto n : ns) {
      std::vector<Cell> row{a, static_cast<double>(n)};
      for (double k : ks) row.emplace_back(convexity_ratio(cfg.base, a, n, k));
      t.rows.push_back(std::move(row));
    }
  return {std::move(t), std::nullopt};
}

namespace detail {

inline Cell rel_diff(const Cell& closed, const Cell& enumerated) {
  const auto* c = std::get_if<double>(&closed);
  const auto* e = std::get_if<double>(&enumerated);
  if (!c || !e) return std::monostate{};
  const double diff = std::fabs(*c - *e);
  return *e == 0.0 ? diff : diff / std::fabs(*e);
}

// Closed-form raw moment for the schedule, or empty when none applies.
inline Cell closed_form_moment(int order, const GaussianBase& b, const ErrorSchedule& s, Depth depth) {
  if (s.mode() == CombinationMode::additive) {
    if (order != 1 && order != 2 && order != 4) return std::monostate{};
    return moments_additive(order, b.mu, b.sigma, s.a(), depth);
  }
  if (depth.is_infinite()) {
    if (s.kind() != ErrorSchedule::Kind::bleed || s.lambda() >= 1) return std::monostate{};
    const BleedParams p{s.a(), s.lambda(), infinite_depth, b.sigma};
    const double m2 = m2_bleed(p);
    if (order == 2) return b.mu * b.mu + m2;
    if (order == 4) return std::pow(b.mu, 4) + 6 * b.mu * b.mu * m2 + m4_bleed(p);
    return std::monostate{};
  }
  switch (s.kind()) {
    case ErrorSchedule::Kind::constant:
      return moment_constant_a(order, b.mu, b.sigma, s.a(), s.depth());
    case ErrorSchedule::Kind::bleed:
      if (b.mu == 0.0 && order == 2) return m2_bleed({s.a(), s.lambda(), s.depth(), b.sigma});
      if (b.mu == 0.0 && order == 4) return m4_bleed({s.a(), s.lambda(), s.depth(), b.sigma});
      [[fallthrough]];
    default:
      return moment_product_form(order, b, s);
  }
}

inline std::optional<MixtureDistribution> enumerable_mixture(const GaussianBase& b,
                                                             const ErrorSchedule& s) {
  if (!s.is_constant_rate() && s.depth() > max_enumeration_depth) return std::nullopt;
  try {
    return build_compact_mixture(b, s);
  } catch (const size_error&) {
    return std::nullopt;
  }
}

}  // namespace detail

inline CommandResult cmd_moments(const RunConfig& cfg) {
  const auto orders = parse_orders(cfg.orders.empty() ? "1,2,3,4,5,6,7,8" : cfg.orders);
  const auto& b = cfg.base;
  Table t{{"N", "quantity", "order", "closed_form", "enumeration", "gaussian", "rel_diff"}, {}};

  for (const auto& s : schedules_for(cfg)) {
    const auto mixture = detail::enumerable_mixture(b, s);
    const double n = static_cast<double>(s.depth());
    for (int k : orders) {
      const Cell cf = detail::closed_form_moment(k, b, s, s.depth());
      const Cell en = mixture ? Cell{mixture_raw_moment(*mixture, k)} : Cell{};
      t.rows.push_back({n, std::string("moment"), static_cast<double>(k), cf, en,
                        gaussian_raw_moment(k, b.mu, b.sigma), detail::rel_diff(cf, en)});
    }

    // kurtosis about mu depends only on E[s^2], E[s^4]
    const GaussianBase centered{0.0, b.sigma};
    const Cell c2 = detail::closed_form_moment(2, centered, s, s.depth());
    const Cell c4 = detail::closed_form_moment(4, centered, s, s.depth());
    Cell kurt_cf;
    if (std::holds_alternative<double>(c2) && std::holds_alternative<double>(c4))
      kurt_cf = std::get<double>(c4) / std::pow(std::get<double>(c2), 2);
    const Cell kurt_en = mixture ? Cell{mixture_kurtosis(*mixture)} : Cell{};
    t.rows.push_back({n, std::string("kurtosis"), 4.0, kurt_cf, kurt_en, 3.0,
                      detail::rel_diff(kurt_cf, kurt_en)});

    const bool has_limit =
        (s.kind() == ErrorSchedule::Kind::bleed && s.lambda() < 1) ||
        (s.mode() == CombinationMode::additive && s.a() / (1 - s.a()) < 1);
    if (has_limit) {
      for (int k : {2, 4}) {
        const Cell lim = detail::closed_form_moment(k, b, s, infinite_depth);
        t.rows.push_back({std::string("inf"), std::string(k == 2 ? "M2_limit" : "M4_limit"),
                          static_cast<double>(k), lim, std::monostate{},
                          gaussian_raw_moment(k, b.mu, b.sigma), std::monostate{}});
      }
    }
  }
  return {std::move(t), std::nullopt};
}

inline CommandResult cmd_loglog(const RunConfig& cfg) {
  const Grid g = parse_grid(cfg.x_range.empty() ? "1:50" : cfg.x_range);
  const std::size_t points = g.step > 0 ? static_cast<std::size_t>(g.step) : cfg.points;
  Table t{{"N", "x", "ln_x", "p_exceed", "ln_p", "local_slope"}, {}};
  for (const auto& s : schedules_for(cfg)) {
    const MixtureDistribution m = build_compact_mixture(cfg.base, s);
    const auto series = loglog_series(m, g.lo, g.hi, points);
    const auto slopes = local_slopes(series);
    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto& p = series[i];
      t.rows.push_back(
          {static_cast<double>(s.depth()), p.x, p.ln_x, p.p_exceed, p.ln_p, slopes[i]});
    }
  }
  return {std::move(t), std::nullopt};
}

namespace detail {

struct ValidationTarget {
  std::string kind;
  double parameter;  // moment order or threshold
  std::optional<double> expected;
  Estimate estimate;
};

inline std::optional<double> expected_moment(int order, const GaussianBase& b,
                                             const ErrorSchedule& s) {
  const Cell cf = closed_form_moment(order, b, s, s.depth());
  if (const auto* v = std::get_if<double>(&cf)) return *v;
  if (auto m = enumerable_mixture(b, s)) return mixture_raw_moment(*m, order);
  return std::nullopt;
}

inline std::optional<double> expected_exceedance(double k, const GaussianBase& b,
                                                 const ErrorSchedule& s) {
  if (s.is_constant_rate()) return exceedance_constant_a(b, s.a(), s.depth(), k);
  if (auto m = enumerable_mixture(b, s)) return exceedance(*m, k);
  return std::nullopt;
}

}  // namespace detail

inline CommandResult cmd_validate(const RunConfig& cfg) {
  const ErrorSchedule s = parse_schedule(cfg.schedule_text);
  SampleSpec spec;
  spec.n_samples = cfg.n_samples;
  spec.seed = cfg.seed;
  spec.moment_orders = parse_orders(cfg.orders.empty() ? "1,2,3,4" : cfg.orders);
  spec.thresholds = parse_real_list(cfg.k_list.empty() ? "1,2,3" : cfg.k_list, "K");
  spec.threads = std::max(1U, cfg.threads);
  const MomentsReport report = estimate(sample_schedule(cfg.base, s, spec));

  // self-test corrupts every target so that validation must fail
  auto corrupt = [&](std::optional<double> v) -> std::optional<double> {
    if (!v || !cfg.self_test) return v;
    return *v * 1.5 + 1.0;
  };

  std::vector<detail::ValidationTarget> targets;
  for (const auto& m : report.moments)
    targets.push_back({"moment", static_cast<double>(m.order),
                       corrupt(detail::expected_moment(m.order, cfg.base, s)), m.estimate});
  for (const auto& e : report.exceedances)
    targets.push_back({"exceedance", e.threshold,
                       corrupt(detail::expected_exceedance(e.threshold, cfg.base, s)), e.estimate});

  Table t{{"target", "parameter", "expected", "estimate", "se", "z", "status"}, {}};
  nlohmann::json jt = nlohmann::json::array();
  bool all_pass = true;
  for (const auto& target : targets) {
    std::string status;
    Cell z;
    if (!target.expected) {
      status = "skipped";
    } else if (target.kind == "exceedance" &&
               !resolvable_probability(*target.expected, report.n)) {
      status = "unreliable";
    } else {
      const double diff = target.estimate.value - *target.expected;
      if (target.estimate.standard_error > 0) z = diff / target.estimate.standard_error;
      const bool pass = within_standard_errors(target.estimate, *target.expected, 4.0);
      status = pass ? "pass" : "fail";
      all_pass = all_pass && pass;
    }
    const Cell expected = target.expected ? Cell{*target.expected} : Cell{};
    t.rows.push_back({target.kind, target.parameter, expected, target.estimate.value,
                      target.estimate.standard_error, z, status});
    jt.push_back({{"kind", target.kind},
                  {target.kind == "moment" ? "order" : "threshold", target.parameter},
                  {"expected", cell_to_json(expected)},
                  {"estimate", target.estimate.value},
                  {"se", target.estimate.standard_error},
                  {"reliable", status != "unreliable"},
                  {"status", status}});
  }

  nlohmann::json doc{{"schema_version", schema_version},
                     {"command", "validate"},
                     {"schedule", to_string(s)},
                     {"n", report.n},
                     {"seed", report.seed},
                     {"all_pass", all_pass},
                     {"targets", std::move(jt)}};
  return {std::move(t), std::move(doc), all_pass ? 0 : 1};
}

inline void add_shared_options(CLI::App& sub, RunConfig& cfg, bool schedule_required) {
  sub.add_option("--mu", cfg.base.mu, "Location of the base Gaussian")->capture_default_str();
  sub.add_option("--sigma", cfg.base.sigma, "Scale of the base Gaussian")->capture_default_str();
  auto* sched = sub.add_option("--schedule", cfg.schedule_text,
                               "Error schedule, e.g. constant:a=0.1,N=5");
  if (schedule_required) sched->required();
  sub.add_option("--format", cfg.format, "Output format")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, OutputFormat>{{"csv", OutputFormat::csv},
                                              {"json", OutputFormat::json}},
          CLI::ignore_case));
  sub.add_option("--out", cfg.out_path, "Output file (default: standard output)");
  sub.add_option("--seed", cfg.seed, "Seed for all random draws")->capture_default_str();
  sub.add_option("--n-list", cfg.n_list, "Comma-separated depths overriding the schedule's N");
}

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nested error-rate Gaussian mixtures: densities, tails, moments"};
  app.name("tailmix");
  app.require_subcommand(1);
  RunConfig cfg;

  using Handler = std::function<CommandResult(const RunConfig&)>;
  std::vector<std::pair<CLI::App*, Handler>> commands;

  auto* density = app.add_subcommand("density", "Mixture density on an x grid");
  add_shared_options(*density, cfg, true);
  density->add_option("--x", cfg.x_range, "Grid min:max:step (default -4:4:0.05)");
  commands.emplace_back(density, cmd_density);

  auto* exceed = app.add_subcommand("exceed", "Exceedance probabilities P(X > K)");
  add_shared_options(*exceed, cfg, true);
  exceed->add_option("--k", cfg.k_list, "Comma-separated thresholds (default 3,5,10)");
  commands.emplace_back(exceed, cmd_exceed);

  auto* ratio = app.add_subcommand("ratio-table", "Convexity ratio table");
  add_shared_options(*ratio, cfg, false);
  ratio->add_option("--a", cfg.a_list, "Comma-separated constant rates (default 1/100,1/10)");
  ratio->add_option("--k", cfg.k_list, "Comma-separated thresholds (default 3,5,10)");
  commands.emplace_back(ratio, cmd_ratio_table);

  auto* moments = app.add_subcommand("moments", "Closed-form and enumerated moments");
  add_shared_options(*moments, cfg, true);
  moments->add_option("--orders", cfg.orders, "Comma-separated orders in 1..8");
  commands.emplace_back(moments, cmd_moments);

  auto* loglog = app.add_subcommand("loglog", "Log-log exceedance series");
  add_shared_options(*loglog, cfg, true);
  loglog->add_option("--x", cfg.x_range, "Range min:max[:points] (default 1:50)");
  loglog->add_option("--points", cfg.points, "Grid points when --x has no third field")
      ->capture_default_str();
  commands.emplace_back(loglog, cmd_loglog);

  auto* validate = app.add_subcommand("validate", "Monte Carlo validation of closed forms");
  add_shared_options(*validate, cfg, true);
  validate->add_option("--n-samples", cfg.n_samples, "Number of draws")->capture_default_str();
  validate->add_option("--orders", cfg.orders, "Moment orders (default 1,2,3,4)");
  validate->add_option("--k", cfg.k_list, "Exceedance thresholds (default 1,2,3)");
  validate->add_option("--threads", cfg.threads, "Worker threads (results do not depend on it)");
  validate->add_flag("--self-test", cfg.self_test, "Corrupt the targets; must exit nonzero");
  commands.emplace_back(validate, cmd_validate);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    for (auto& [sub, handler] : commands) {
      if (!sub->parsed()) continue;
      cfg.command = sub->get_name();
      CommandResult result = handler(cfg);

      std::ofstream file;
      std::ostream* os = &out;
      if (!cfg.out_path.empty()) {
        file.open(cfg.out_path, std::ios::binary);
        if (!file) {
          err << "error: cannot open " << cfg.out_path << '\n';
          return 1;
        }
        os = &file;
      }
      if (cfg.format == OutputFormat::json)
        *os << (result.json ? *result.json : to_json(result.table, cfg.command)).dump(2) << '\n';
      else
        write_csv(*os, result.table);
      return result.exit_code;
    }
  } catch (const parse_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const domain_error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace tailmix::cli
