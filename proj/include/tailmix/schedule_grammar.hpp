#pragma once

// Text form of an ErrorSchedule, shared by the CLI and config files:
//
//   constant:a=<real>,N=<int>
//   bleed:a1=<real>,lambda=<real>,N=<int>
//   geometric:a=<real>,N=<int>
//   explicit:<real>,<real>,...
//
// optionally followed by ";mode=additive" or ";mode=multiplicative".
// Reals may be written as fractions ("1/10").

#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tailmix/branching.hpp"
#include "tailmix/errors.hpp"

namespace tailmix {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

inline double parse_plain_real(std::string_view s, std::string_view what) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw parse_error("cannot parse " + std::string(what) + " value '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

// "<real>" or "<real>/<real>".
inline double parse_real(std::string_view s, std::string_view what = "real") {
  s = detail::trim(s);
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return detail::parse_plain_real(s, what);
  const double num = detail::parse_plain_real(detail::trim(s.substr(0, slash)), what);
  const double den = detail::parse_plain_real(detail::trim(s.substr(slash + 1)), what);
  if (den == 0) throw parse_error("zero denominator in " + std::string(what));
  return num / den;
}

inline std::size_t parse_count(std::string_view s, std::string_view what = "integer") {
  s = detail::trim(s);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw parse_error("cannot parse " + std::string(what) + " value '" + std::string(s) + "'");
  return v;
}

inline ErrorSchedule parse_schedule(std::string_view text) {
  text = detail::trim(text);
  std::optional<CombinationMode> mode;
  if (const auto semi = text.find(';'); semi != std::string_view::npos) {
    const auto suffix = detail::trim(text.substr(semi + 1));
    if (suffix == "mode=additive")
      mode = CombinationMode::additive;
    else if (suffix == "mode=multiplicative")
      mode = CombinationMode::multiplicative;
    else
      throw parse_error("unknown schedule suffix '" + std::string(suffix) + "'");
    text = detail::trim(text.substr(0, semi));
  }

  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw parse_error("schedule '" + std::string(text) + "' lacks a '<kind>:' prefix");
  const auto kind = detail::trim(text.substr(0, colon));
  const auto body = detail::trim(text.substr(colon + 1));

  if (kind == "explicit") {
    std::vector<double> rates;
    if (!body.empty())
      for (auto item : detail::split(body, ',')) rates.push_back(parse_real(item, "rate"));
    return ErrorSchedule::explicit_rates(std::move(rates),
                                         mode.value_or(CombinationMode::multiplicative));
  }

  std::map<std::string, std::string, std::less<>> fields;
  for (auto item : detail::split(body, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw parse_error("expected key=value in schedule, got '" + std::string(item) + "'");
    auto [it, inserted] = fields.emplace(std::string(detail::trim(item.substr(0, eq))),
                                         std::string(detail::trim(item.substr(eq + 1))));
    if (!inserted) throw parse_error("duplicate schedule key '" + it->first + "'");
  }
  auto take = [&](std::string_view key) {
    const auto it = fields.find(key);
    if (it == fields.end())
      throw parse_error(std::string(kind) + " schedule needs '" + std::string(key) + "='");
    std::string v = it->second;
    fields.erase(it);
    return v;
  };
  auto finish = [&](ErrorSchedule s) {
    if (!fields.empty())
      throw parse_error("unexpected schedule key '" + fields.begin()->first + "'");
    return s;
  };

  if (kind == "constant") {
    const double a = parse_real(take("a"), "a");
    const std::size_t n = parse_count(take("N"), "N");
    if (mode == CombinationMode::additive)
      return finish(ErrorSchedule::explicit_rates(std::vector<double>(n, a), *mode));
    return finish(ErrorSchedule::constant(a, n));
  }
  if (kind == "bleed") {
    const double a1 = parse_real(take("a1"), "a1");
    const double lambda = parse_real(take("lambda"), "lambda");
    const std::size_t n = parse_count(take("N"), "N");
    if (mode == CombinationMode::additive)
      throw domain_error("bleed schedules combine multiplicatively");
    return finish(ErrorSchedule::bleed(a1, lambda, n));
  }
  if (kind == "geometric") {
    const double a = parse_real(take("a"), "a");
    const std::size_t n = parse_count(take("N"), "N");
    return finish(ErrorSchedule::geometric(a, n, mode.value_or(CombinationMode::additive)));
  }
  throw parse_error("unknown schedule kind '" + std::string(kind) + "'");
}

inline std::string to_string(const ErrorSchedule& s) {
  std::ostringstream os;
  os.precision(17);
  const bool additive = s.mode() == CombinationMode::additive;
  switch (s.kind()) {
    case ErrorSchedule::Kind::constant:
      os << "constant:a=" << s.a() << ",N=" << s.depth();
      break;
    case ErrorSchedule::Kind::bleed:
      os << "bleed:a1=" << s.a() << ",lambda=" << s.lambda() << ",N=" << s.depth();
      break;
    case ErrorSchedule::Kind::geometric:
      os << "geometric:a=" << s.a() << ",N=" << s.depth();
      if (!additive) os << ";mode=multiplicative";
      return os.str();
    case ErrorSchedule::Kind::explicit_list: {
      os << "explicit:";
      const auto r = s.rates();
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      break;
    }
  }
  if (additive) os << ";mode=additive";
  return os.str();
}

}  // namespace tailmix
