#include "tpn2f/report.hpp"

#include <spdlog/fmt/fmt.h>

#include <algorithm>
#include <fstream>

#include "tpn2f/error.hpp"

namespace tpn2f {

std::vector<ClusterRow> cluster_relations(const std::vector<RelationVectorStats>& stats, std::size_t k,
                                          std::uint64_t seed) {
  std::vector<ClusterRow> rows;
  for (const auto& s : stats) rows.push_back({s.relation, 0.0, 0.0, 0});
  if (stats.size() < 2) return rows;
  std::vector<std::vector<double>> means;
  for (const auto& s : stats) means.push_back(s.mean);
  const std::size_t target = std::min<std::size_t>(2, means[0].size());
  const PcaResult pca = pca_project(means, target);
  const KMeansResult km = kmeans(pca.projected, std::clamp<std::size_t>(k, 1, means.size()), seed);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].x = pca.projected[i][0];
    rows[i].y = target > 1 ? pca.projected[i][1] : 0.0;
    rows[i].cluster = km.labels[i];
  }
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string scatter_svg(const std::vector<ClusterRow>& rows) {
  const double size = 480, margin = 40;
  std::string svg = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{0}\">\n"
      "<rect width=\"{0}\" height=\"{0}\" fill=\"white\"/>\n"
      "<text x=\"{1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">relation unbinding vectors (PCA)</text>\n"
      "<line x1=\"{1}\" y1=\"{2}\" x2=\"{2}\" y2=\"{2}\" stroke=\"black\"/>\n"
      "<line x1=\"{1}\" y1=\"{1}\" x2=\"{1}\" y2=\"{2}\" stroke=\"black\"/>\n",
      size, margin, size - margin);
  if (!rows.empty()) {
    auto [xmin, xmax] = std::minmax_element(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.x < b.x; });
    auto [ymin, ymax] = std::minmax_element(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.y < b.y; });
    const double x0 = xmin->x, xs = std::max(xmax->x - x0, 1e-12);
    const double y0 = ymin->y, ys = std::max(ymax->y - y0, 1e-12);
    const double span = size - 2 * margin - 20;
    for (const auto& r : rows) {
      const double px = margin + 10 + (r.x - x0) / xs * span;
      const double py = size - margin - 10 - (r.y - y0) / ys * span;
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"5\" fill=\"{}\"/>\n", px, py,
                         kPalette[r.cluster % std::size(kPalette)]);
      svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
                         px + 7, py - 7, xml_escape(r.relation));
    }
  }
  return svg + "</svg>\n";
}

std::string roles_svg(const std::vector<AssignmentRecord>& records) {
  const double row_h = 22, label_w = 120, bar_w = 300;
  const double height = 40 + row_h * static_cast<double>(std::max<std::size_t>(records.size(), 1));
  std::string svg = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">selected roles per token</text>\n",
      label_w + bar_w + 20, height);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const double y = 30 + row_h * static_cast<double>(i);
    svg += fmt::format("<text x=\"10\" y=\"{:.1f}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n", y + 14,
                       xml_escape(rec.token));
    double x = label_w;
    for (const auto& role : rec.roles) {
      const double w = role.score * bar_w;
      svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.1f}\" width=\"{:.2f}\" height=\"{:.1f}\" fill=\"{}\"/>\n", x, y + 2, w,
                         row_h - 4, kPalette[role.id % std::size(kPalette)]);
      svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"9\">R{}</text>\n", x + 2,
                         y + 14, role.id);
      x += w;
    }
  }
  return svg + "</svg>\n";
}

}  // namespace

void emit_report(const std::vector<AssignmentRecord>& assignments, const std::vector<ClusterRow>& clusters,
                 const nlohmann::json& meta, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  std::string a = "token,position,role,filler,score\n";
  for (const auto& rec : assignments) {
    for (const auto& f : rec.fillers) a += fmt::format("{},{},,{},{}\n", csv_field(rec.token), rec.position, f.id, f.score);
    for (const auto& r : rec.roles) a += fmt::format("{},{},{},,{}\n", csv_field(rec.token), rec.position, r.id, r.score);
  }
  write_file(out_dir / "assignments.csv", a);

  std::string c = "relation,x,y,cluster\n";
  for (const auto& row : clusters) c += fmt::format("{},{},{},{}\n", csv_field(row.relation), row.x, row.y, row.cluster);
  write_file(out_dir / "clusters.csv", c);

  write_file(out_dir / "scatter.svg", scatter_svg(clusters));
  write_file(out_dir / "roles.svg", roles_svg(assignments));
  write_file(out_dir / "report.json", meta.dump(2) + "\n");
}

}  // namespace tpn2f
