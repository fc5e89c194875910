#include "fedsim/metrics_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>

#include "fedsim/errors.hpp"
#include "fedsim/sampler.hpp"

namespace fedsim {

std::string format_double(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::logic_error("double formatting failed");
  return std::string(buf, p);
}

namespace {

std::vector<std::string> csv_header(const CsvSchema& schema) {
  std::vector<std::string> cols;
  cols.emplace_back("q");
  cols.emplace_back("reward");
  if (schema.has_fl) {
    cols.emplace_back("hyper_loss");
    cols.emplace_back("test_acc");
    for (std::size_t k = 0; k < schema.n_clients; ++k) {
      cols.push_back("val_loss_" + std::to_string(k));
    }
    for (std::size_t k = 0; k < schema.n_clients; ++k) {
      cols.push_back("val_acc_" + std::to_string(k));
    }
  }
  for (const std::string& name : schema.dim_names) cols.push_back("h_" + name);
  if (schema.has_policy) {
    for (const std::string& name : schema.dim_names) cols.push_back("mu_" + name);
    for (const std::string& name : schema.dim_names) cols.push_back("sigma_" + name);
  }
  return cols;
}

void check_record(const CsvSchema& schema, const RoundRecord& r, const std::string& path) {
  const auto fail = [&](const std::string& what) {
    throw IoError("round " + std::to_string(r.round) + " does not fit the schema of '" + path +
                  "': " + what);
  };
  if (r.h_raw.size() != schema.dim_names.size()) fail("wrong h_raw length");
  if (schema.has_fl != r.has_fl) fail("fl block mismatch");
  if (schema.has_fl &&
      (r.val_loss.size() != schema.n_clients || r.val_acc.size() != schema.n_clients)) {
    fail("wrong per-client vector length");
  }
  if (schema.has_policy != r.has_policy) fail("policy block mismatch");
  if (schema.has_policy && (r.mu_raw.size() != schema.dim_names.size() ||
                            r.sigma_raw.size() != schema.dim_names.size())) {
    fail("wrong policy snapshot length");
  }
}

void write_row(std::ofstream& out, const CsvSchema& schema, const RoundRecord& r) {
  out << r.round << ',' << format_double(r.reward);
  if (schema.has_fl) {
    out << ',' << format_double(r.hyper_loss) << ',' << format_double(r.test_acc);
    for (double v : r.val_loss) out << ',' << format_double(v);
    for (double v : r.val_acc) out << ',' << format_double(v);
  }
  for (double v : r.h_raw) out << ',' << format_double(v);
  if (schema.has_policy) {
    for (double v : r.mu_raw) out << ',' << format_double(v);
    for (double v : r.sigma_raw) out << ',' << format_double(v);
  }
  out << '\n';
}

}  // namespace

RoundCsvWriter::RoundCsvWriter(const std::string& path, CsvSchema schema)
    : path_(path), schema_(std::move(schema)), out_(path, std::ios::trunc) {
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
  const std::vector<std::string> cols = csv_header(schema_);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << cols[i];
  }
  out_ << '\n';
  out_.flush();
  if (!out_) throw IoError("failed writing header to '" + path + "'");
}

void RoundCsvWriter::append(const RoundRecord& record) {
  check_record(schema_, record, path_);
  write_row(out_, schema_, record);
  out_.flush();
  if (!out_) throw IoError("failed appending round " + std::to_string(record.round) + " to '" +
                           path_ + "'");
}

void write_round_csv(const std::string& path, const CsvSchema& schema,
                     const std::vector<RoundRecord>& records) {
  if (records.empty()) throw IoError("refusing to write '" + path + "' with no rounds");
  RoundCsvWriter writer(path, schema);
  for (const RoundRecord& r : records) writer.append(r);
}

namespace {

double parse_double_field(const std::string& field, const std::string& path, std::size_t line_no) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw IoError("'" + path + "' line " + std::to_string(line_no) + ": bad number '" + field + "'");
  }
  return v;
}

}  // namespace

std::pair<CsvSchema, std::vector<RoundRecord>> read_round_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) cols.push_back(field);
  }
  if (cols.size() < 2 || cols[0] != "q" || cols[1] != "reward") {
    throw IoError("'" + path + "' does not look like a rounds file (header must start q,reward)");
  }

  CsvSchema schema;
  schema.has_fl = false;
  schema.has_policy = false;
  std::size_t i = 2;
  if (i < cols.size() && cols[i] == "hyper_loss") {
    schema.has_fl = true;
    ++i;
    if (i >= cols.size() || cols[i] != "test_acc") {
      throw IoError("'" + path + "' header: expected test_acc after hyper_loss");
    }
    ++i;
    while (i < cols.size() && cols[i].rfind("val_loss_", 0) == 0) {
      ++schema.n_clients;
      ++i;
    }
    for (std::size_t k = 0; k < schema.n_clients; ++k, ++i) {
      if (i >= cols.size() || cols[i] != "val_acc_" + std::to_string(k)) {
        throw IoError("'" + path + "' header: val_acc columns do not match val_loss columns");
      }
    }
  }
  while (i < cols.size() && cols[i].rfind("h_", 0) == 0) {
    schema.dim_names.push_back(cols[i].substr(2));
    ++i;
  }
  if (i < cols.size() && cols[i].rfind("mu_", 0) == 0) {
    schema.has_policy = true;
    for (std::size_t d = 0; d < schema.dim_names.size(); ++d, ++i) {
      if (i >= cols.size() || cols[i] != "mu_" + schema.dim_names[d]) {
        throw IoError("'" + path + "' header: mu columns do not match h columns");
      }
    }
    for (std::size_t d = 0; d < schema.dim_names.size(); ++d, ++i) {
      if (i >= cols.size() || cols[i] != "sigma_" + schema.dim_names[d]) {
        throw IoError("'" + path + "' header: sigma columns do not match h columns");
      }
    }
  }
  if (i != cols.size()) {
    throw IoError("'" + path + "' header: unexpected column '" + cols[i] + "'");
  }

  const std::size_t expect = csv_header(schema).size();
  std::vector<RoundRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != expect) {
      throw IoError("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                    std::to_string(expect) + " fields, got " + std::to_string(fields.size()));
    }
    RoundRecord r;
    std::size_t f = 0;
    {
      const std::string& q = fields[f++];
      long qv = 0;
      auto [p, ec] = std::from_chars(q.data(), q.data() + q.size(), qv);
      if (ec != std::errc() || p != q.data() + q.size()) {
        throw IoError("'" + path + "' line " + std::to_string(line_no) + ": bad round '" + q + "'");
      }
      r.round = qv;
    }
    r.reward = parse_double_field(fields[f++], path, line_no);
    r.has_fl = schema.has_fl;
    if (schema.has_fl) {
      r.hyper_loss = parse_double_field(fields[f++], path, line_no);
      r.test_acc = parse_double_field(fields[f++], path, line_no);
      r.val_loss.resize(schema.n_clients);
      for (std::size_t k = 0; k < schema.n_clients; ++k) {
        r.val_loss[k] = parse_double_field(fields[f++], path, line_no);
      }
      r.val_acc.resize(schema.n_clients);
      for (std::size_t k = 0; k < schema.n_clients; ++k) {
        r.val_acc[k] = parse_double_field(fields[f++], path, line_no);
      }
    }
    r.h_raw.resize(schema.dim_names.size());
    for (std::size_t d = 0; d < r.h_raw.size(); ++d) {
      r.h_raw[d] = parse_double_field(fields[f++], path, line_no);
    }
    r.has_policy = schema.has_policy;
    if (schema.has_policy) {
      r.mu_raw.resize(schema.dim_names.size());
      for (std::size_t d = 0; d < r.mu_raw.size(); ++d) {
        r.mu_raw[d] = parse_double_field(fields[f++], path, line_no);
      }
      r.sigma_raw.resize(schema.dim_names.size());
      for (std::size_t d = 0; d < r.sigma_raw.size(); ++d) {
        r.sigma_raw[d] = parse_double_field(fields[f++], path, line_no);
      }
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw IoError("'" + path + "' has a header but no rounds");
  return {std::move(schema), std::move(records)};
}

void write_timings_csv(const std::string& path, const std::vector<RoundRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "q,local_train_s,aggregate_s,evaluate_s,rl_update_s\n";
  for (const RoundRecord& r : records) {
    out << r.round << ',' << format_double(r.timings.local_train_s) << ','
        << format_double(r.timings.aggregate_s) << ',' << format_double(r.timings.evaluate_s)
        << ',' << format_double(r.timings.rl_update_s) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// SVG rendering. Coordinates are formatted with two fixed decimals so a plot
// is a deterministic function of its input records.

namespace {

std::string svg_coord(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  if (ec != std::errc()) throw std::logic_error("svg coordinate formatting failed");
  return std::string(buf, p);
}

// Short human label for axis extremes (3 significant digits).
std::string svg_label(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 3);
  if (ec != std::errc()) throw std::logic_error("svg label formatting failed");
  return std::string(buf, p);
}

struct PanelGeom {
  double x0, y0, w, h;  // plot area in page coordinates
  double xmin, xmax, ymin, ymax;

  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
  double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

void panel_frame(std::ostringstream& svg, const PanelGeom& g, const std::string& title,
                 const std::string& x_name, const std::string& y_name) {
  svg << "<rect x=\"" << svg_coord(g.x0) << "\" y=\"" << svg_coord(g.y0) << "\" width=\""
      << svg_coord(g.w) << "\" height=\"" << svg_coord(g.h)
      << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  svg << "<text x=\"" << svg_coord(g.x0) << "\" y=\"" << svg_coord(g.y0 - 6)
      << "\" font-family=\"monospace\" font-size=\"12\">" << title << "</text>\n";
  svg << "<text x=\"" << svg_coord(g.x0 + g.w / 2) << "\" y=\"" << svg_coord(g.y0 + g.h + 24)
      << "\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"middle\">" << x_name
      << "</text>\n";
  svg << "<text x=\"" << svg_coord(g.x0 - 8) << "\" y=\"" << svg_coord(g.y0 + g.h)
      << "\" font-family=\"monospace\" font-size=\"9\" text-anchor=\"end\">" << svg_label(g.ymin)
      << "</text>\n";
  svg << "<text x=\"" << svg_coord(g.x0 - 8) << "\" y=\"" << svg_coord(g.y0 + 9)
      << "\" font-family=\"monospace\" font-size=\"9\" text-anchor=\"end\">" << svg_label(g.ymax)
      << "</text>\n";
  svg << "<text x=\"" << svg_coord(g.x0) << "\" y=\"" << svg_coord(g.y0 + g.h + 12)
      << "\" font-family=\"monospace\" font-size=\"9\">" << svg_label(g.xmin) << "</text>\n";
  svg << "<text x=\"" << svg_coord(g.x0 + g.w) << "\" y=\"" << svg_coord(g.y0 + g.h + 12)
      << "\" font-family=\"monospace\" font-size=\"9\" text-anchor=\"end\">" << svg_label(g.xmax)
      << "</text>\n";
  (void)y_name;
}

void write_svg(const std::string& path, double width, double height, const std::string& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_coord(width)
      << "\" height=\"" << svg_coord(height) << "\" viewBox=\"0 0 " << svg_coord(width) << ' '
      << svg_coord(height) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body << "</svg>\n";
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace

void plot_hyperparam_evolution(const CsvSchema& schema, const std::vector<RoundRecord>& records,
                               const std::string& svg_path) {
  if (records.empty()) throw IoError("no rounds to plot");
  if (!schema.has_policy) {
    throw ConfigError("baseline run has no policy snapshots; nothing to plot");
  }
  for (const RoundRecord& r : records) check_record(schema, r, svg_path);

  // Render-time sanity check: the plotted aggregation-weight means must stay
  // on the simplex.
  for (const RoundRecord& r : records) {
    double sum = 0.0;
    bool any = false;
    for (std::size_t d = 0; d < schema.dim_names.size(); ++d) {
      if (schema.dim_names[d].rfind("aw", 0) == 0) {
        sum += r.mu_raw[d];
        any = true;
      }
    }
    if (any && std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("aggregation-weight means do not sum to 1 at round " +
                        std::to_string(r.round));
    }
  }

  const std::size_t n_dims = schema.dim_names.size();
  const double panel_w = 560.0, panel_h = 120.0, left = 70.0, top = 40.0, vgap = 60.0;
  const double width = left + panel_w + 30.0;
  const double height = top + static_cast<double>(n_dims) * (panel_h + vgap);

  std::ostringstream svg;
  for (std::size_t d = 0; d < n_dims; ++d) {
    PanelGeom g;
    g.x0 = left;
    g.y0 = top + static_cast<double>(d) * (panel_h + vgap);
    g.w = panel_w;
    g.h = panel_h;
    g.xmin = static_cast<double>(records.front().round);
    g.xmax = static_cast<double>(records.back().round);
    if (g.xmax <= g.xmin) g.xmax = g.xmin + 1.0;

    double lo = records[0].mu_raw[d] - records[0].sigma_raw[d];
    double hi = records[0].mu_raw[d] + records[0].sigma_raw[d];
    for (const RoundRecord& r : records) {
      lo = std::min(lo, r.mu_raw[d] - r.sigma_raw[d]);
      hi = std::max(hi, r.mu_raw[d] + r.sigma_raw[d]);
    }
    const double pad = (hi - lo) > 0.0 ? 0.08 * (hi - lo) : std::max(1e-12, std::abs(hi) * 0.1 + 1e-12);
    g.ymin = lo - pad;
    g.ymax = hi + pad;

    panel_frame(svg, g, schema.dim_names[d], "round", "");

    // +/- sigma band
    svg << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.45\" stroke=\"none\" points=\"";
    for (const RoundRecord& r : records) {
      svg << svg_coord(g.px(static_cast<double>(r.round))) << ','
          << svg_coord(g.py(r.mu_raw[d] + r.sigma_raw[d])) << ' ';
    }
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
      svg << svg_coord(g.px(static_cast<double>(it->round))) << ','
          << svg_coord(g.py(it->mu_raw[d] - it->sigma_raw[d])) << ' ';
    }
    svg << "\"/>\n";

    // mu line
    svg << "<polyline fill=\"none\" stroke=\"#2171b5\" stroke-width=\"1.5\" points=\"";
    for (const RoundRecord& r : records) {
      svg << svg_coord(g.px(static_cast<double>(r.round))) << ',' << svg_coord(g.py(r.mu_raw[d]))
          << ' ';
    }
    svg << "\"/>\n";

    svg << "<text x=\"" << svg_coord(g.x0 + g.w + 6) << "\" y=\""
        << svg_coord(g.py(records.back().mu_raw[d]))
        << "\" font-family=\"monospace\" font-size=\"9\">" << svg_label(records.back().mu_raw[d])
        << "</text>\n";
  }
  write_svg(svg_path, width, height, svg.str());
}

// ---------------------------------------------------------------------------
// Search-cost probe.

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

HyperparamSpace bench_space(std::size_t dims, long points_per_dim) {
  std::vector<HyperparamDim> hd(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    hd[d].name = "x" + std::to_string(d);
    hd[d].raw_min = 0.1;
    hd[d].raw_max = 10.0;
    hd[d].kind = DimKind::continuous_positive;
    hd[d].grid_points = points_per_dim;
    hd[d].log_scaled = true;
  }
  return build_space(hd, 1.0);
}

}  // namespace

std::vector<CostProbe> benchmark_search_cost(std::span<const std::uint64_t> cardinalities,
                                             std::span<const SearchMode> modes,
                                             const BenchOptions& options) {
  if (options.dims == 0) throw ConfigError("bench dims must be >= 1");
  std::vector<CostProbe> probes;
  for (std::uint64_t target : cardinalities) {
    const double per_dim =
        std::round(std::pow(static_cast<double>(target), 1.0 / static_cast<double>(options.dims)));
    const long points = std::max<long>(2, static_cast<long>(per_dim));
    const HyperparamSpace space = bench_space(options.dims, points);
    const DistributionParams params = initial_params(space);
    const std::uint64_t cardinality = grid_cardinality(space);

    for (SearchMode mode : modes) {
      CostProbe probe;
      probe.mode = mode;
      probe.cardinality = cardinality;

      if (mode == SearchMode::discrete) {
        DiscreteSampleOptions opt;
        opt.cardinality_cap = options.cardinality_cap;
        opt.kernel = options.kernel;
        std::vector<double> times;
        SampleStats stats;
        for (int rep = 0; rep < options.ds_reps; ++rep) {
          RngStream rng = RngStream::derive(options.seed, "bench-ds", cardinality,
                                            static_cast<std::uint64_t>(rep));
          const auto t0 = std::chrono::steady_clock::now();
          (void)sample_discrete(space, params, rng, opt, &stats);
          times.push_back(seconds_since(t0));
        }
        probe.seconds_per_sample = median_of(std::move(times));
        probe.peak_bytes = stats.peak_bytes;
      } else {
        // Continuous draws are microseconds; time batches and take a median.
        std::vector<double> times;
        SampleStats stats;
        for (int rep = 0; rep < options.cs_reps; ++rep) {
          RngStream rng = RngStream::derive(options.seed, "bench-cs", cardinality,
                                            static_cast<std::uint64_t>(rep));
          const auto t0 = std::chrono::steady_clock::now();
          for (int i = 0; i < options.cs_inner; ++i) {
            (void)sample_continuous(space, params, rng, &stats);
          }
          times.push_back(seconds_since(t0) / static_cast<double>(options.cs_inner));
        }
        probe.seconds_per_sample = median_of(std::move(times));
        probe.peak_bytes = stats.peak_bytes;
      }
      probes.push_back(probe);
    }
  }
  return probes;
}

void write_cost_csv(const std::string& path, const std::vector<CostProbe>& probes) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "mode,cardinality,seconds_per_sample,peak_bytes\n";
  for (const CostProbe& p : probes) {
    out << to_string(p.mode) << ',' << p.cardinality << ',' << format_double(p.seconds_per_sample)
        << ',' << p.peak_bytes << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void plot_search_cost(const std::vector<CostProbe>& probes, const std::string& svg_path) {
  if (probes.empty()) throw IoError("no cost probes to plot");

  const double panel_w = 360.0, panel_h = 240.0, left = 80.0, top = 40.0, hgap = 110.0;
  const double width = left + 2 * panel_w + hgap + 30.0;
  const double height = top + panel_h + 50.0;

  const char* colors[3] = {"#d7301f", "#2171b5", "#238b45"};  // ds, cs, mlp

  // Collect per-mode series sorted by cardinality.
  std::vector<SearchMode> modes;
  for (const CostProbe& p : probes) {
    if (std::find(modes.begin(), modes.end(), p.mode) == modes.end()) modes.push_back(p.mode);
  }

  double cmin = static_cast<double>(probes[0].cardinality), cmax = cmin;
  double tmin = probes[0].seconds_per_sample, tmax = tmin;
  double bmin = static_cast<double>(probes[0].peak_bytes), bmax = bmin;
  for (const CostProbe& p : probes) {
    cmin = std::min(cmin, static_cast<double>(p.cardinality));
    cmax = std::max(cmax, static_cast<double>(p.cardinality));
    tmin = std::min(tmin, p.seconds_per_sample);
    tmax = std::max(tmax, p.seconds_per_sample);
    bmin = std::min(bmin, static_cast<double>(p.peak_bytes));
    bmax = std::max(bmax, static_cast<double>(p.peak_bytes));
  }
  const auto log_bounds = [](double& lo, double& hi) {
    lo = std::log10(std::max(lo, 1e-12));
    hi = std::log10(std::max(hi, 1e-12));
    if (hi <= lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  };
  double cx0 = cmin, cx1 = cmax, ty0 = tmin, ty1 = tmax, by0 = bmin, by1 = bmax;
  log_bounds(cx0, cx1);
  log_bounds(ty0, ty1);
  log_bounds(by0, by1);

  std::ostringstream svg;
  PanelGeom gt{left, top, panel_w, panel_h, cx0, cx1, ty0, ty1};
  PanelGeom gb{left + panel_w + hgap, top, panel_w, panel_h, cx0, cx1, by0, by1};
  panel_frame(svg, gt, "seconds per sampled draw (log10)", "grid cardinality (log10)", "");
  panel_frame(svg, gb, "sampler peak bytes (log10)", "grid cardinality (log10)", "");

  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    std::vector<const CostProbe*> series;
    for (const CostProbe& p : probes) {
      if (p.mode == modes[mi]) series.push_back(&p);
    }
    std::sort(series.begin(), series.end(),
              [](const CostProbe* a, const CostProbe* b) { return a->cardinality < b->cardinality; });
    const char* color = colors[mi % 3];
    for (const PanelGeom* g : {&gt, &gb}) {
      const bool is_time = g == &gt;
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const CostProbe* p : series) {
        const double y = is_time ? std::log10(std::max(p->seconds_per_sample, 1e-12))
                                 : std::log10(std::max(static_cast<double>(p->peak_bytes), 1e-12));
        svg << svg_coord(g->px(std::log10(static_cast<double>(p->cardinality)))) << ','
            << svg_coord(g->py(y)) << ' ';
      }
      svg << "\"/>\n";
    }
    svg << "<text x=\"" << svg_coord(left + 140.0 * static_cast<double>(mi)) << "\" y=\""
        << svg_coord(height - 12.0) << "\" font-family=\"monospace\" font-size=\"11\" fill=\""
        << color << "\">" << to_string(modes[mi]) << "</text>\n";
  }
  write_svg(svg_path, width, height, svg.str());
}

}  // namespace fedsim
