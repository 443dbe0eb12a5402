#include "veriaug/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "veriaug/data.hpp"

namespace veriaug {

double aubc(std::span<const CurvePoint> curve) {
  if (curve.size() < 2) throw std::invalid_argument("AUBC needs at least two curve points");
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double width = curve[i].budget - curve[i - 1].budget;
    if (!(width > 0.0)) throw std::invalid_argument("AUBC budgets must be strictly increasing");
    area += width * (curve[i].accuracy + curve[i - 1].accuracy) / 2.0;
  }
  return area / (curve.back().budget - curve.front().budget);
}

std::vector<CurvePoint> run_curve(std::span<const RoundRecord> records, int run) {
  std::vector<CurvePoint> out;
  for (const RoundRecord& r : records) {
    if (r.run == run) out.push_back({static_cast<double>(r.labeled), r.accuracy});
  }
  return out;
}

std::vector<CurvePoint> mean_curve(std::span<const RoundRecord> records) {
  std::map<int, std::vector<const RoundRecord*>> by_round;
  std::map<int, int> runs;
  for (const RoundRecord& r : records) {
    by_round[r.round].push_back(&r);
    runs[r.run] = 1;
  }
  std::vector<CurvePoint> out;
  for (const auto& [round, rs] : by_round) {
    if (rs.size() != runs.size()) break;
    double budget = 0.0;
    double acc = 0.0;
    for (const RoundRecord* r : rs) {
      budget += static_cast<double>(r->labeled);
      acc += r->accuracy;
    }
    out.push_back({budget / static_cast<double>(rs.size()), acc / static_cast<double>(rs.size())});
  }
  return out;
}

DiversityStat pairwise_distance_stat(std::span<const Vector> points) {
  if (points.size() < 2) throw std::invalid_argument("diversity needs at least two points");
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t pairs = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d = (points[i] - points[j]).norm();
      sum += d;
      sum_sq += d * d;
      ++pairs;
    }
  }
  const double mean = sum / static_cast<double>(pairs);
  const double var = std::max(0.0, sum_sq / static_cast<double>(pairs) - mean * mean);
  return DiversityStat{mean, std::sqrt(var), pairs};
}

DiversityStat diversity(const MlpModel& model, const std::vector<std::vector<Vector>>& adv_sets,
                        std::size_t sample_cap, std::mt19937_64& rng) {
  std::vector<std::size_t> sources(adv_sets.size());
  std::iota(sources.begin(), sources.end(), std::size_t{0});
  if (sources.size() > sample_cap) {
    std::shuffle(sources.begin(), sources.end(), rng);
    sources.resize(sample_cap);
    std::sort(sources.begin(), sources.end());
  }
  std::vector<Vector> embedded;
  for (std::size_t s : sources) {
    for (const Vector& x : adv_sets[s]) embedded.push_back(penultimate(model, x));
  }
  return pairwise_distance_stat(embedded);
}

DiversityStat aggregate_runs(std::span<const DiversityStat> stats) {
  if (stats.empty()) throw std::invalid_argument("aggregate_runs needs at least one run");
  if (stats.size() == 1) return stats.front();
  const auto n = static_cast<double>(stats.size());
  double mean = 0.0;
  double within = 0.0;
  std::uint64_t pairs = 0;
  for (const DiversityStat& s : stats) {
    mean += s.mean;
    within += s.std * s.std;
    pairs += s.pair_count;
  }
  mean /= n;
  within /= n;
  double between = 0.0;
  for (const DiversityStat& s : stats) between += (s.mean - mean) * (s.mean - mean);
  between /= n;
  return DiversityStat{mean, std::sqrt(within + between), pairs};
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_field(const std::string& field, std::size_t line) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw std::invalid_argument("CSV line " + std::to_string(line) + ": bad field '" + field + "'");
  }
  return value;
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string to_csv(std::span<const RoundRecord> records) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const RoundRecord& r : records) {
    out += std::to_string(r.run) + ',' + std::to_string(r.round) + ',' + std::to_string(r.labeled) +
           ',' + format_double(r.accuracy) + ',' + std::to_string(r.adv_added) + ',' +
           std::to_string(r.sat) + ',' + std::to_string(r.unsat) + ',' +
           std::to_string(r.timeout) + ',' + format_double(r.select_ms) + ',' +
           format_double(r.verify_ms) + ',' + format_double(r.train_ms) + '\n';
  }
  return out;
}

std::vector<RoundRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::invalid_argument("CSV header does not match the round-record schema");
  }
  std::vector<RoundRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream fields(line);
    while (std::getline(fields, field, ',')) f.push_back(field);
    if (f.size() != 11) {
      throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": expected 11 fields");
    }
    RoundRecord r;
    r.run = parse_field<int>(f[0], line_no);
    r.round = parse_field<int>(f[1], line_no);
    r.labeled = parse_field<std::int64_t>(f[2], line_no);
    r.accuracy = parse_field<double>(f[3], line_no);
    r.adv_added = parse_field<std::int64_t>(f[4], line_no);
    r.sat = parse_field<std::int64_t>(f[5], line_no);
    r.unsat = parse_field<std::int64_t>(f[6], line_no);
    r.timeout = parse_field<std::int64_t>(f[7], line_no);
    r.select_ms = parse_field<double>(f[8], line_no);
    r.verify_ms = parse_field<double>(f[9], line_no);
    r.train_ms = parse_field<double>(f[10], line_no);
    out.push_back(r);
  }
  return out;
}

void write_csv(std::span<const RoundRecord> records, const std::filesystem::path& path) {
  if (records.empty()) throw std::invalid_argument("no records to write");
  write_text(path, to_csv(records));
}

std::vector<RoundRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                    "#bcbd22", "#17becf", "#393b79", "#637939"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string curves_svg(std::span<const LabeledCurve> curves) {
  if (curves.empty()) throw std::invalid_argument("no curves to render");
  constexpr double width = 720, height = 440;
  constexpr double left = 60, right = 200, top = 20, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = 1.0, y_max = 0.0;
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      x_min = std::min(x_min, p.budget);
      x_max = std::max(x_max, p.budget);
      y_min = std::min(y_min, p.accuracy);
      y_max = std::max(y_max, p.accuracy);
    }
  }
  if (!(x_max > x_min)) x_max = x_min + 1.0;
  y_min = std::floor(y_min * 10.0) / 10.0;
  y_max = std::ceil(y_max * 10.0) / 10.0;
  if (!(y_max > y_min)) y_max = y_min + 0.1;

  auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
  auto sy = [&](double y) { return top + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
      << "\" height=\"" << height << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n"
      << "<g stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\"/>\n"
      << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  constexpr int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double xv = x_min + (x_max - x_min) * i / ticks;
    const double yv = y_min + (y_max - y_min) * i / ticks;
    svg << "<line x1=\"" << fmt("%.2f", sx(xv)) << "\" y1=\"" << top + plot_h << "\" x2=\""
        << fmt("%.2f", sx(xv)) << "\" y2=\"" << top + plot_h + 5 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt("%.2f", sx(xv)) << "\" y=\"" << top + plot_h + 18
        << "\" text-anchor=\"middle\">" << fmt("%.0f", xv) << "</text>\n"
        << "<line x1=\"" << left - 5 << "\" y1=\"" << fmt("%.2f", sy(yv)) << "\" x2=\"" << left
        << "\" y2=\"" << fmt("%.2f", sy(yv)) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << left - 8 << "\" y=\"" << fmt("%.2f", sy(yv) + 4)
        << "\" text-anchor=\"end\">" << fmt("%.2f", yv) << "</text>\n";
  }
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\">labeled samples</text>\n"
      << "<text x=\"15\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << top + plot_h / 2 << ")\">test accuracy</text>\n</g>\n";

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kPalette[c % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curves[c].points.size(); ++i) {
      const auto& p = curves[c].points[i];
      svg << (i ? " " : "") << fmt("%.2f", sx(p.budget)) << ',' << fmt("%.2f", sy(p.accuracy));
    }
    svg << "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(c) + 10.0;
    svg << "<g font-family=\"sans-serif\" font-size=\"11\"><rect x=\"" << left + plot_w + 15
        << "\" y=\"" << ly - 8 << "\" width=\"12\" height=\"8\" fill=\"" << color << "\"/>"
        << "<text x=\"" << left + plot_w + 32 << "\" y=\"" << ly << "\">"
        << xml_escape(curves[c].label) << "</text></g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void render_curves_svg(std::span<const LabeledCurve> curves, const std::filesystem::path& path) {
  write_text(path, curves_svg(curves));
}

std::string summary_report(std::span<const SummaryRow> rows) {
  std::vector<double> sorted;
  for (const auto& r : rows) sorted.push_back(r.aubc_mean);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-22s %-10s %s\n", "method", "AUBC (mean +- std)",
                "final acc", "diversity (mean +- std, pairs)");
  out << line;
  for (const auto& r : rows) {
    std::string cell = fmt("%.4f", r.aubc_mean);
    if (!sorted.empty() && r.aubc_mean == sorted[0]) {
      cell = "**" + cell + "**";
    } else if (sorted.size() > 1 && r.aubc_mean == sorted[1]) {
      cell = "__" + cell + "__";
    }
    cell += " +- " + fmt("%.4f", r.aubc_std);
    std::string div = "-";
    if (r.diversity) {
      div = fmt("%.3f", r.diversity->mean) + " +- " + fmt("%.3f", r.diversity->std) + " (" +
            std::to_string(r.diversity->pair_count) + ")";
    }
    std::snprintf(line, sizeof line, "%-24s %-22s %-10s %s\n", r.method.c_str(), cell.c_str(),
                  fmt("%.4f", r.final_accuracy).c_str(), div.c_str());
    out << line;
  }
  out << "\n** best AUBC, __ second best\n";
  return out.str();
}

}  // namespace veriaug
