#include "lowrankcov/rates.hpp"

#include <cmath>
#include <map>
#include <set>

#include "lowrankcov/digest.hpp"
#include "lowrankcov/errors.hpp"
#include "lowrankcov/harness.hpp"
#include "lowrankcov/io.hpp"

namespace lrc {

namespace {

bool pre_asymptotic(const RiskReport& r) {
  const double n = r.n;
  return (r.l + std::log(n)) / n > 1.0;
}

}  // namespace

std::vector<RateSeries> fit_rate_series(const std::vector<RiskReport>& reports, RateAxis axis) {
  // Along n, a series is one estimator; if an estimator has several rows at
  // the same n (an l grid), split it by l instead.
  std::map<std::string, std::set<std::pair<int, int>>> seen;
  std::set<std::string> split_by_level;
  for (const auto& r : reports) {
    if (axis == RateAxis::N && !seen[r.estimator].insert({r.n, 0}).second) split_by_level.insert(r.estimator);
  }

  std::map<std::pair<std::string, std::string>, RateSeries> groups;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : reports) {
    std::string group;
    if (axis == RateAxis::L) {
      group = "n=" + std::to_string(r.n);
    } else if (split_by_level.count(r.estimator)) {
      group = "l=" + std::to_string(r.l);
    }
    const auto key = std::make_pair(r.estimator, group);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) {
      it->second.estimator = r.estimator;
      it->second.group = group;
      order.push_back(key);
    }
    const double x = axis == RateAxis::N ? r.n : r.l;
    if (axis == RateAxis::N && pre_asymptotic(r)) {
      it->second.excluded.emplace_back(x, r.mc_risk);
    } else {
      it->second.points.emplace_back(x, r.mc_risk);
    }
  }

  std::vector<RateSeries> out;
  for (const auto& key : order) {
    RateSeries s = std::move(groups.at(key));
    if (s.points.size() < 4) continue;
    s.fit = fit_rate(s.points);
    out.push_back(std::move(s));
  }
  return out;
}

nlohmann::json rates_to_json(const std::vector<RateSeries>& series, RateAxis axis) {
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& s : series) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [x, y] : s.points) pts.push_back({x, y});
    nlohmann::json excl = nlohmann::json::array();
    for (const auto& [x, y] : s.excluded) excl.push_back({x, y});
    fits.push_back({{"estimator", s.estimator},
                    {"group", s.group},
                    {"slope", s.fit.slope},
                    {"intercept", s.fit.intercept},
                    {"r2", s.fit.r2},
                    {"points", pts},
                    {"excluded", excl}});
  }
  return {{"x", axis == RateAxis::N ? "n" : "l"}, {"fits", fits}};
}

std::string rates_csv(const std::vector<RateSeries>& series) {
  std::string out = "estimator,group,slope,intercept,r2,points\r\n";
  for (const auto& s : series) {
    out += csv_escape(s.estimator) + "," + csv_escape(s.group) + "," + format_double(s.fit.slope) + "," +
           format_double(s.fit.intercept) + "," + format_double(s.fit.r2) + "," + std::to_string(s.points.size()) +
           "\r\n";
  }
  return out;
}

RatesOutput run_rates(const std::filesystem::path& risks_csv, const std::filesystem::path& out_dir,
                      RateAxis axis, bool csv_table) {
  const auto reports = parse_risk_reports_csv(read_text_file(risks_csv));
  if (reports.empty()) throw IoError("no rows in " + risks_csv.string());
  RatesOutput out;
  out.series = fit_rate_series(reports, axis);
  if (out.series.empty()) throw DomainError("no series with at least 4 usable points in " + risks_csv.string());
  out.report = rates_to_json(out.series, axis);
  const std::string svg = rates_svg(out.series, axis);
  write_text_file(out_dir / "rates.svg", svg);
  out.report["outputs"] = {{{"path", "rates.svg"}, {"sha256", sha256_hex(svg)}}};
  if (csv_table) {
    const std::string table = rates_csv(out.series);
    write_text_file(out_dir / "rates.csv", table);
    out.report["outputs"].push_back({{"path", "rates.csv"}, {"sha256", sha256_hex(table)}});
  }
  out.report["input"] = {{"path", risks_csv.filename().string()}, {"sha256", file_sha256(risks_csv)}};
  write_text_file(out_dir / "rates.json", out.report.dump(2) + "\n");
  return out;
}

}  // namespace lrc
