// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "crowdledger/error.hpp"

namespace crowdledger::report {

using population::BehaviorType;

namespace {

constexpr double kWidth = 640.0, kHeight = 400.0;
constexpr double kLeft = 70.0, kRight = 150.0, kTop = 40.0, kBottom = 50.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0, hi = 1.0;
  void widen() {
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

/// Frame, axis ticks, titles. Returns the opening of the document.
std::string frame(const std::string& title, const std::string& x_label, const std::string& y_label,
                  const Range& xr, const Range& yr) {
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << coord(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(title) << "</text>\n";
  s << "<rect x=\"" << coord(kLeft) << "\" y=\"" << coord(kTop) << "\" width=\"" << coord(pw)
    << "\" height=\"" << coord(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double x = kLeft + f * pw, y = kTop + ph - f * ph;
    s << "<line x1=\"" << coord(x) << "\" y1=\"" << coord(kTop + ph) << "\" x2=\"" << coord(x)
      << "\" y2=\"" << coord(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << coord(x) << "\" y=\"" << coord(kTop + ph + 18)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << tick_label(xr.lo + f * (xr.hi - xr.lo))
      << "</text>\n";
    s << "<line x1=\"" << coord(kLeft - 5) << "\" y1=\"" << coord(y) << "\" x2=\"" << coord(kLeft)
      << "\" y2=\"" << coord(y) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << coord(kLeft - 8) << "\" y=\"" << coord(y + 4)
      << "\" text-anchor=\"end\" font-size=\"11\">" << tick_label(yr.lo + f * (yr.hi - yr.lo))
      << "</text>\n";
  }
  s << "<text x=\"" << coord(kLeft + pw / 2) << "\" y=\"" << coord(kHeight - 10)
    << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(x_label) << "</text>\n";
  s << "<text x=\"16\" y=\"" << coord(kTop + ph / 2) << "\" text-anchor=\"middle\" font-size=\"12\" "
    << "transform=\"rotate(-90 16 " << coord(kTop + ph / 2) << ")\">" << escape(y_label) << "</text>\n";
  return s.str();
}

std::string legend(const std::vector<std::string>& names) {
  std::ostringstream s;
  const double x = kWidth - kRight + 12;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 12 + 18.0 * static_cast<double>(i);
    s << "<line x1=\"" << coord(x) << "\" y1=\"" << coord(y) << "\" x2=\"" << coord(x + 18) << "\" y2=\""
      << coord(y) << "\" stroke=\"" << kPalette[i % std::size(kPalette)] << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << coord(x + 24) << "\" y=\"" << coord(y + 4) << "\" font-size=\"11\">"
      << escape(names[i]) << "</text>\n";
  }
  return s.str();
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const Range& xr, const Range& yr,
                     std::size_t colour, const char* dash = nullptr) {
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  std::ostringstream s;
  s << "<polyline fill=\"none\" stroke=\"" << kPalette[colour % std::size(kPalette)]
    << "\" stroke-width=\"1.5\"";
  if (dash) s << " stroke-dasharray=\"" << dash << '"';
  s << " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double x = kLeft + (pts[i].first - xr.lo) / (xr.hi - xr.lo) * pw;
    const double y = kTop + ph - (pts[i].second - yr.lo) / (yr.hi - yr.lo) * ph;
    s << (i ? " " : "") << coord(x) << ',' << coord(y);
  }
  s << "\"/>\n";
  return s.str();
}

std::vector<double> numeric_column(const Table& t, const std::string& name) {
  const auto c = t.column(name);
  std::vector<double> out;
  for (const auto& row : t.rows) {
    const auto v = c < row.size() ? parse_number(row[c]) : std::nullopt;
    if (!v) throw Error(Errc::MissingArtifacts, "non-numeric value in column " + name);
    out.push_back(*v);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::UnreadableFile, "cannot write " + path.string());
  out << text;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

std::optional<double> parse_number(const std::string& text) {
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(Errc::MissingArtifacts, "missing column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      t.header = split_line(line);
      first = false;
    } else {
      t.rows.push_back(split_line(line));
    }
  }
  return t;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingArtifacts, "cannot open " + path.string());
  return read_csv(in);
}

void write_csv(std::ostream& out, const Table& table) {
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
}

void write_trajectory_csv(std::ostream& out, const std::vector<engine::TrajectoryRow>& rows) {
  out << "step";
  for (auto t : population::kAllBehaviors) out << ',' << population::to_string(t);
  out << '\n';
  for (const auto& r : rows) {
    out << r.step;
    for (const auto& m : r.means) out << ',' << (m ? format_number(*m) : "");
    out << '\n';
  }
}

void write_reputation_csv(std::ostream& out, const engine::SimulationResult& world) {
  out << "user,behavior,reputation\n";
  for (const auto& a : world.agents)
    out << a.id << ',' << population::to_string(a.behavior) << ',' << world.chain.reputation(a.id) << '\n';
}

void write_settlements_csv(std::ostream& out, const engine::SimulationResult& world) {
  static constexpr const char* kReasons[] = {"equilibrium", "vote_cap", "budget_end"};
  out << "story,poster,truth,consensus,crowd_score,classifier_score,final_score,reason,step,votes\n";
  for (const auto& s : world.settlements) {
    const auto& info = world.stories.at(s.story_id);
    out << s.story_id << ',' << info.poster << ',' << info.truth << ',' << s.consensus_label << ','
        << format_number(s.crowd_score) << ',' << format_number(s.classifier_score) << ','
        << format_number(s.final_score) << ',' << kReasons[static_cast<int>(s.reason)] << ',' << s.step
        << ',' << s.vote_count << '\n';
  }
}

void write_roc_csv(std::ostream& out, const metrics::RocCurve& curve) {
  out << "fpr,tpr,threshold\n";
  for (const auto& p : curve.points)
    out << format_number(p.fpr) << ',' << format_number(p.tpr) << ',' << format_number(p.threshold) << '\n';
}

void write_roc_band_csv(std::ostream& out, const experiment::RocBand& band) {
  out << "fpr,mean_tpr,half_width\n";
  for (std::size_t i = 0; i < band.fpr.size(); ++i)
    out << format_number(band.fpr[i]) << ',' << format_number(band.mean_tpr[i]) << ','
        << format_number(band.half_width[i]) << '\n';
}

void write_metrics_csv(std::ostream& out,
                       const std::vector<std::pair<std::string, metrics::ClassificationMetrics>>& rows) {
  out << "split,precision,recall,f1,accuracy\n";
  for (const auto& [name, m] : rows)
    out << name << ',' << format_number(m.precision) << ',' << format_number(m.recall) << ','
        << format_number(m.f1) << ',' << format_number(m.accuracy) << '\n';
}

void write_detection_csv(std::ostream& out,
                         const std::map<BehaviorType, experiment::Detection>& detection) {
  out << "behavior,detected,total,rate\n";
  for (const auto& [type, d] : detection)
    out << population::to_string(type) << ',' << d.detected << ',' << d.total << ','
        << format_number(d.rate()) << '\n';
}

void write_outcomes_csv(std::ostream& out, const std::vector<experiment::StoryOutcome>& outcomes) {
  out << "story,split,truth,crowd_score,classifier_score,final_score,predicted\n";
  for (const auto& o : outcomes)
    out << o.story << ',' << (o.train ? "train" : "test") << ',' << o.truth << ','
        << format_number(o.crowd_score) << ',' << format_number(o.classifier_score) << ','
        << format_number(o.final_score) << ',' << o.predicted << '\n';
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "index,seed,cell";
  for (auto t : population::kAllBehaviors) out << ',' << population::to_string(t);
  out << ",precision,recall,f1,accuracy\n";
  for (const auto& r : rows) {
    out << r.index << ',' << r.seed << ',' << r.cell;
    for (auto t : population::kAllBehaviors) {
      const auto it = r.record.percentages.find(t);
      out << ',' << format_number(it == r.record.percentages.end() ? 0.0 : it->second);
    }
    const auto& m = r.record.metrics;
    out << ',' << format_number(m.precision) << ',' << format_number(m.recall) << ','
        << format_number(m.f1) << ',' << format_number(m.accuracy) << '\n';
  }
}

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series, bool staircase) {
  Range xr{INFINITY, -INFINITY}, yr{INFINITY, -INFINITY};
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xr.lo = std::min(xr.lo, s.x[i]);
      xr.hi = std::max(xr.hi, s.x[i]);
      yr.lo = std::min(yr.lo, s.y[i]);
      yr.hi = std::max(yr.hi, s.y[i]);
    }
  if (!std::isfinite(xr.lo)) xr = {0.0, 1.0};
  if (!std::isfinite(yr.lo)) yr = {0.0, 1.0};
  xr.widen();
  yr.widen();
  std::string out = frame(title, x_label, y_label, xr, yr);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (staircase && i > 0) pts.emplace_back(s.x[i], s.y[i - 1]);
      pts.emplace_back(s.x[i], s.y[i]);
    }
    out += polyline(pts, xr, yr, k);
    names.push_back(s.name);
  }
  out += legend(names);
  out += "</svg>\n";
  return out;
}

std::string histogram_svg(const std::string& title, const std::string& x_label,
                          const std::map<std::string, std::vector<double>>& groups, std::size_t bins) {
  if (bins == 0) throw Error(Errc::ValidationError, "histogram needs at least one bin");
  Range xr{INFINITY, -INFINITY};
  for (const auto& [name, values] : groups)
    for (double v : values) {
      xr.lo = std::min(xr.lo, v);
      xr.hi = std::max(xr.hi, v);
    }
  if (!std::isfinite(xr.lo)) xr = {0.0, 1.0};
  xr.widen();
  const double width = (xr.hi - xr.lo) / static_cast<double>(bins);
  std::map<std::string, std::vector<double>> counts;
  double peak = 1.0;
  for (const auto& [name, values] : groups) {
    auto& c = counts[name];
    c.assign(bins, 0.0);
    for (double v : values) {
      auto b = static_cast<std::size_t>((v - xr.lo) / width);
      c[std::min(b, bins - 1)] += 1.0;
    }
    peak = std::max(peak, *std::max_element(c.begin(), c.end()));
  }
  const Range yr{0.0, peak};
  std::string out = frame(title, x_label, "count", xr, yr);
  std::vector<std::string> names;
  std::size_t k = 0;
  for (const auto& [name, c] : counts) {
    std::vector<std::pair<double, double>> pts{{xr.lo, 0.0}};
    for (std::size_t b = 0; b < bins; ++b) {
      const double x0 = xr.lo + width * static_cast<double>(b);
      pts.emplace_back(x0, c[b]);
      pts.emplace_back(x0 + width, c[b]);
    }
    pts.emplace_back(xr.hi, 0.0);
    out += polyline(pts, xr, yr, k++);
    names.push_back(name);
  }
  out += legend(names);
  out += "</svg>\n";
  return out;
}

nlohmann::json render_run(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(Errc::MissingArtifacts, "not a directory: " + dir.string());
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path().filename().string());
  std::sort(files.begin(), files.end());

  nlohmann::json summary;
  summary["rendered"] = nlohmann::json::array();
  auto rendered = [&](const std::string& name) { summary["rendered"].push_back(name); };

  for (const auto& name : files) {
    const fs::path path = dir / name;
    if (name == "trajectory.csv") {
      const auto t = read_csv(path);
      const auto steps = numeric_column(t, "step");
      std::vector<Series> series;
      nlohmann::json finals = nlohmann::json::object();
      for (std::size_t c = 1; c < t.header.size(); ++c) {
        Series s{t.header[c], {}, {}};
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
          const auto v = c < t.rows[r].size() ? parse_number(t.rows[r][c]) : std::nullopt;
          if (!v) continue;
          s.x.push_back(steps[r]);
          s.y.push_back(*v);
        }
        if (s.y.empty()) continue;
        finals[s.name] = s.y.back();
        series.push_back(std::move(s));
      }
      write_text(dir / "trajectory.svg",
                 line_plot_svg("Reputation means over time", "step", "mean reputation", series));
      summary["final_mean_reputation"] = finals;
      rendered("trajectory.svg");
    } else if (name == "reputation.csv") {
      const auto t = read_csv(path);
      const auto b = t.column("behavior");
      const auto values = numeric_column(t, "reputation");
      std::map<std::string, std::vector<double>> groups;
      for (std::size_t r = 0; r < t.rows.size(); ++r) groups[t.rows[r].at(b)].push_back(values[r]);
      write_text(dir / "reputation_hist.svg",
                 histogram_svg("Final reputation distributions", "reputation", groups));
      nlohmann::json counts = nlohmann::json::object();
      for (const auto& [g, v] : groups) counts[g] = v.size();
      summary["reputation_counts"] = counts;
      rendered("reputation_hist.svg");
    } else if (name.starts_with("roc_band") && name.ends_with(".csv")) {
      const auto t = read_csv(path);
      const auto fpr = numeric_column(t, "fpr");
      const auto mean = numeric_column(t, "mean_tpr");
      const auto hw = numeric_column(t, "half_width");
      Series lo{"mean - CI", fpr, {}}, hi{"mean + CI", fpr, {}};
      for (std::size_t i = 0; i < mean.size(); ++i) {
        lo.y.push_back(mean[i] - hw[i]);
        hi.y.push_back(mean[i] + hw[i]);
      }
      const std::string stem = name.substr(0, name.size() - 4);
      write_text(dir / (stem + ".svg"),
                 line_plot_svg("ROC mean with 95% CI", "false positive rate", "true positive rate",
                               {Series{"mean", fpr, mean}, lo, hi}));
      rendered(stem + ".svg");
    } else if (name.starts_with("roc") && name.ends_with(".csv")) {
      const auto t = read_csv(path);
      const auto fpr = numeric_column(t, "fpr");
      const auto tpr = numeric_column(t, "tpr");
      double auc = 0.0;
      for (std::size_t i = 1; i < fpr.size(); ++i) auc += (fpr[i] - fpr[i - 1]) * (tpr[i] + tpr[i - 1]) / 2.0;
      const std::string stem = name.substr(0, name.size() - 4);
      write_text(dir / (stem + ".svg"),
                 line_plot_svg("ROC " + stem, "false positive rate", "true positive rate",
                               {Series{stem, fpr, tpr}}, true));
      summary["auc"][stem] = auc;
      rendered(stem + ".svg");
    } else if (name == "metrics.csv") {
      const auto t = read_csv(path);
      const auto split = t.column("split");
      for (const auto& m : metrics::kMetricNames) {
        std::string key(m);
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
        const auto values = numeric_column(t, key);
        for (std::size_t r = 0; r < t.rows.size(); ++r) summary["metrics"][t.rows[r].at(split)][key] = values[r];
      }
    } else if (name == "sweep.csv") {
      summary["sweep_runs"] = read_csv(path).rows.size();
    }
  }
  if (summary["rendered"].empty() && !summary.contains("metrics") && !summary.contains("sweep_runs"))
    throw Error(Errc::MissingArtifacts, "no run artifacts in " + dir.string());
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace crowdledger::report
