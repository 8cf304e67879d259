#include "cw/report.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cw/attack.h"
#include "cw/tensor_io.h"

namespace cw {

const char* const kResultColumns =
    "image_id,sub_model,target_model,method,success,l2,linf,queries,seconds";

namespace {

std::string num(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string safe_name(std::string s) {
  std::replace(s.begin(), s.end(), ':', '_');
  return s;
}

}  // namespace

std::filesystem::path adversarial_path(const ResultRow& row) {
  return std::filesystem::path("adv") / row.sub_model / row.target_model /
         method_name(row.method) / (safe_name(row.image_id) + ".cwt");
}

std::string results_csv(const ResultTable& table) {
  std::ostringstream o;
  o << kResultColumns << '\n';
  for (const ResultRow& r : table.rows) {
    o << r.image_id << ',' << r.sub_model << ',' << r.target_model << ','
      << method_name(r.method) << ',' << (r.success ? 1 : 0) << ','
      << num(r.l2) << ',' << num(r.linf) << ',' << r.queries << ','
      << num(r.seconds) << '\n';
  }
  return o.str();
}

std::string summary_json(const std::map<std::string, CellStats>& cells) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, s] : cells) {
    j[key] = {
        {"count", s.count},
        {"successes", s.successes},
        {"success_rate", s.success_rate()},
        {"median", s.median},
        {"average", s.average},
        {"mean_queries", s.mean_queries},
        {"max_queries", s.max_queries},
    };
  }
  return j.dump(2) + "\n";
}

std::string sweep_svg(const SweepResult& sweep) {
  const double w = 480, h = 320, left = 64, right = 20, top = 36, bottom = 52;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!sweep.points.empty()) {
    x0 = x1 = sweep.points.front().value;
    y0 = y1 = sweep.points.front().stats.median;
    for (const SweepPoint& p : sweep.points) {
      x0 = std::min(x0, p.value);
      x1 = std::max(x1, p.value);
      y0 = std::min(y0, p.stats.median);
      y1 = std::max(y1, p.stats.median);
    }
  }
  if (x1 == x0) {
    x0 -= 1;
    x1 += 1;
  }
  const double pad = y1 > y0 ? 0.1 * (y1 - y0) : std::max(0.05 * y1, 0.01);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * (w - left - right); };
  auto py = [&](double v) { return h - bottom - (v - y0) / (y1 - y0) * (h - top - bottom); };

  std::ostringstream o;
  o << std::setprecision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
    << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">"
    << method_name(sweep.method) << ' ' << sweep.sub_model << " &#8594; "
    << sweep.target_model << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\""
    << w - right << "\" y2=\"" << h - bottom << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
    << "\" y2=\"" << h - bottom << "\" stroke=\"black\"/>\n";
  for (const SweepPoint& p : sweep.points) {
    o << "<text x=\"" << px(p.value) << "\" y=\"" << h - bottom + 16
      << "\" text-anchor=\"middle\">" << p.value << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = y0 + (y1 - y0) * k / 4.0;
    o << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4
      << "\" text-anchor=\"end\">" << std::setprecision(3) << v
      << std::setprecision(6) << "</text>\n";
    o << "<line x1=\"" << left - 3 << "\" y1=\"" << py(v) << "\" x2=\""
      << left << "\" y2=\"" << py(v) << "\" stroke=\"black\"/>\n";
  }
  o << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 12
    << "\" text-anchor=\"middle\">" << sweep.parameter << "</text>\n";
  o << "<text x=\"16\" y=\"" << (top + h - bottom) / 2
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (top + h - bottom) / 2 << ")\">median L2</text>\n";
  if (!sweep.points.empty()) {
    o << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" "
         "points=\"";
    for (const SweepPoint& p : sweep.points) {
      o << px(p.value) << ',' << py(p.stats.median) << ' ';
    }
    o << "\"/>\n";
    for (const SweepPoint& p : sweep.points) {
      o << "<circle cx=\"" << px(p.value) << "\" cy=\"" << py(p.stats.median)
        << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

void emit_report(const ResultTable& table, const std::filesystem::path& dir,
                 const std::vector<SweepResult>& sweeps) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw std::runtime_error("cannot create report directory " + dir.string());
  }
  write_file(dir / "results.csv", results_csv(table));
  write_file(dir / "summary.json", summary_json(summarize(table)));

  std::string errors;
  for (const ResultRow& r : table.rows) {
    if (!r.error.empty()) {
      errors += cell_key(r.sub_model, r.target_model, r.method) + " " +
                r.image_id + ": " + r.error + "\n";
    }
    if (!r.success || !r.adversarial) continue;
    const auto path = dir / adversarial_path(r);
    std::filesystem::create_directories(path.parent_path());
    save_tensor(path, r.adversarial->tensor());
  }
  if (!errors.empty()) write_file(dir / "errors.log", errors);

  for (const SweepResult& s : sweeps) {
    std::ostringstream csv;
    csv << s.parameter << ",count,successes,median,average,mean_queries\n";
    for (const SweepPoint& p : s.points) {
      csv << num(p.value) << ',' << p.stats.count << ',' << p.stats.successes
          << ',' << num(p.stats.median) << ',' << num(p.stats.average) << ','
          << num(p.stats.mean_queries) << '\n';
    }
    write_file(dir / ("sweep_" + s.parameter + ".csv"), csv.str());
    write_file(dir / ("sweep_" + s.parameter + ".svg"), sweep_svg(s));
  }
}

ResultTable read_results(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error("cannot read " + csv.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultColumns) {
    throw std::runtime_error(csv.string() + ": unexpected header");
  }
  ResultTable table;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 9) {
      throw std::runtime_error(csv.string() + ":" + std::to_string(lineno) +
                               ": expected 9 fields");
    }
    ResultRow r;
    try {
      r.image_id = f[0];
      r.sub_model = f[1];
      r.target_model = f[2];
      r.method = parse_method(f[3]);
      r.success = f[4] == "1";
      r.l2 = std::stod(f[5]);
      r.linf = std::stod(f[6]);
      r.queries = std::stoll(f[7]);
      r.seconds = std::stod(f[8]);
    } catch (const std::exception& e) {
      throw std::runtime_error(csv.string() + ":" + std::to_string(lineno) +
                               ": " + e.what());
    }
    table.rows.push_back(std::move(r));
  }
  return table;
}

VerifyReport verify_report(const std::filesystem::path& dir, const Zoo& zoo,
                           const Dataset& data) {
  const ResultTable table = read_results(dir / "results.csv");
  VerifyReport rep;
  for (const ResultRow& r : table.rows) {
    const auto path = dir / adversarial_path(r);
    const std::string where =
        cell_key(r.sub_model, r.target_model, r.method) + " " + r.image_id;
    if (!r.success) {
      if (std::filesystem::exists(path)) {
        ++rep.mismatched;
        rep.problems.push_back(where + ": failed row has a stored image");
      }
      continue;
    }
    ++rep.checked;
    try {
      const auto colon = r.image_id.find(':');
      const std::size_t idx = std::stoul(r.image_id.substr(0, colon));
      if (idx >= data.test.size()) throw std::runtime_error("bad image index");
      const Goal goal =
          colon == std::string::npos
              ? Goal::untargeted(data.test[idx].label)
              : Goal::toward(std::stoi(r.image_id.substr(colon + 1)));
      const Image adv = load_image(path);
      TargetOracle target(zoo.resolve(r.target_model), std::nullopt);
      const bool fooled = goal.reached_by(target.peek(adv.tensor()).label);
      const double d = l2_distance(data.test[idx].image, adv);
      if (!fooled) {
        ++rep.mismatched;
        rep.problems.push_back(where + ": no longer fools the target");
      } else if (std::fabs(d - r.l2) > 1e-9) {
        ++rep.mismatched;
        rep.problems.push_back(where + ": stored distance differs");
      }
    } catch (const std::exception& e) {
      ++rep.mismatched;
      rep.problems.push_back(where + ": " + e.what());
    }
  }
  return rep;
}

}  // namespace cw
