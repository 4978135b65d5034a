// Report generation: turns a run directory's series artifacts into CSVs
// plus a summary.json with learning-stage boundaries.
#pragma once

#include "babel/estimator/estimator.hpp"
#include "babel/harness/manifest.hpp"

namespace babel::harness {

namespace report_detail {

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::vector<nlohmann::json> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace report_detail

// Boundaries between the three learning stages, derived from one metric
// series: the rise to the (smoothed) peak, the decline after it, and the
// flat tail where the slope magnitude stays small.
struct StageBoundaries {
  std::size_t peak_index = 0;        // end of the first stage
  std::size_t settle_index = 0;      // end of the second stage
  std::int64_t peak_step = 0;
  std::int64_t settle_step = 0;
  bool has_transition = false;       // false when the series settles at the peak

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["peak_index"] = peak_index;
    j["settle_index"] = settle_index;
    j["peak_step"] = peak_step;
    j["settle_step"] = settle_step;
    j["has_transition"] = has_transition;
    return j;
  }
};

// Peak = earliest argmax of the smoothed series. Settle = first index after
// the peak where the slope magnitude stays below 10% of the post-peak peak
// slope for three consecutive intervals.
inline StageBoundaries detect_stages(const std::vector<std::int64_t>& steps,
                                     const std::vector<double>& values,
                                     int smoothing_width = 5) {
  if (steps.size() != values.size() || steps.empty())
    throw Error("detect_stages: need aligned non-empty series");
  std::vector<double> sm =
      (int)values.size() >= smoothing_width
          ? estimator::smooth(values, smoothing_width)
          : values;
  StageBoundaries b;
  for (std::size_t i = 1; i < sm.size(); ++i)
    if (sm[i] > sm[b.peak_index]) b.peak_index = i;
  b.peak_step = steps[b.peak_index];

  std::size_t n = sm.size();
  double peak_slope = 0;
  for (std::size_t i = b.peak_index; i + 1 < n; ++i)
    peak_slope = std::max(peak_slope, std::abs(sm[i + 1] - sm[i]));
  b.settle_index = n - 1;
  if (peak_slope > 0) {
    int quiet = 0;
    for (std::size_t i = b.peak_index; i + 1 < n; ++i) {
      if (std::abs(sm[i + 1] - sm[i]) < 0.1 * peak_slope)
        ++quiet;
      else
        quiet = 0;
      if (quiet >= 3) {
        b.settle_index = i + 1 - 2;  // start of the quiet stretch
        break;
      }
    }
  } else {
    b.settle_index = b.peak_index;  // flat after the peak: no transition
  }
  b.settle_step = steps[b.settle_index];
  b.has_transition = b.settle_index > b.peak_index;
  return b;
}

// Writes CSV reports and summary.json into <run_dir>/report/.
inline std::string write_report(const std::string& run_dir) {
  namespace rd = report_detail;
  auto m = RunManifest::try_load(run_dir);
  if (!m) throw Error("report: no manifest in " + run_dir);
  fs::path dir(run_dir);
  fs::path out = dir / "report";
  fs::create_directories(out);
  nlohmann::ordered_json summary;
  summary["run_dir"] = run_dir;
  summary["kind"] = m->kind;
  summary["status"] = m->status;

  if (m->kind == "mixture-sweep") {
    nlohmann::json sweep =
        nlohmann::json::parse(read_file((dir / "sweep.json").string()));
    std::ostringstream csv;
    csv << "target_tokens,final_step,final_pass_target,final_r_target,"
           "final_lt_target\n";
    for (const auto& c : sweep.at("cells")) {
      csv << c.at("target_tokens").get<std::uint64_t>() << ","
          << c.at("final_step").get<std::int64_t>() << ","
          << c.at("final_pass_target").get<double>() << ","
          << c.at("final_r_target").get<double>() << ","
          << c.at("final_lt_target").get<std::int64_t>() << "\n";
    }
    write_atomic((out / "sweep_cells.csv").string(), csv.str());
    summary["cells"] = sweep.at("cells");
    write_atomic((out / "summary.json").string(), summary.dump(2) + "\n");
    return out.string();
  }

  // languages: infer from eval_*.jsonl artifacts
  std::vector<std::string> langs;
  for (const auto& a : m->of_kind("eval-series")) {
    std::string name = fs::path(a.path).filename().string();
    langs.push_back(name.substr(5, name.size() - 5 - 6));  // eval_<L>.jsonl
  }

  // performance_vs_step.csv
  {
    std::map<std::int64_t, std::map<std::string, double>> rows;
    for (const auto& lang : langs) {
      for (const auto& j :
           rd::read_jsonl((dir / ("eval_" + lang + ".jsonl")).string()))
        rows[j.at("checkpoint_step").get<std::int64_t>()][lang] =
            j.at("pass_rate").get<double>();
    }
    std::ostringstream csv;
    csv << "step";
    for (const auto& l : langs) csv << ",pass_" << rd::csv_escape(l);
    csv << "\n";
    for (const auto& [step, vals] : rows) {
      csv << step;
      for (const auto& l : langs)
        csv << "," << (vals.count(l) ? std::to_string(vals.at(l)) : "");
      csv << "\n";
    }
    write_atomic((out / "performance_vs_step.csv").string(), csv.str());
  }

  // worklang_vs_step.csv + stage detection on the dominant proportion
  std::vector<std::int64_t> wl_steps;
  std::map<std::string, std::vector<double>> wl_props;
  {
    auto lines = rd::read_jsonl((dir / "worklang.jsonl").string());
    std::ostringstream csv;
    csv << "step,defined";
    for (const auto& l : langs) csv << ",r_" << rd::csv_escape(l);
    csv << "\n";
    for (const auto& j : lines) {
      const auto& rep = j.at("report");
      bool defined = rep.at("defined").get<bool>();
      csv << j.at("step").get<std::int64_t>() << "," << (defined ? 1 : 0);
      for (const auto& l : langs) {
        double v = defined ? rep.at("proportions").value(l, 0.0) : 0.0;
        csv << "," << v;
        if (defined) {
          if (wl_props[l].size() == wl_steps.size()) wl_props[l].push_back(v);
        }
      }
      if (defined) wl_steps.push_back(j.at("step").get<std::int64_t>());
      csv << "\n";
    }
    write_atomic((out / "worklang_vs_step.csv").string(), csv.str());
  }

  // lt_neurons_vs_step.csv
  {
    auto lines = rd::read_jsonl((dir / "lape.jsonl").string());
    std::ostringstream csv;
    csv << "step";
    for (const auto& l : langs) csv << ",lt_" << rd::csv_escape(l);
    csv << "\n";
    for (const auto& j : lines) {
      csv << j.at("step").get<std::int64_t>();
      for (const auto& l : langs)
        csv << "," << j.at("counts").value(l, (std::int64_t)0);
      csv << "\n";
    }
    write_atomic((out / "lt_neurons_vs_step.csv").string(), csv.str());
  }

  // transfer_vs_step.csv + stage detection on the transfer proportion
  std::vector<std::int64_t> tr_steps;
  std::vector<double> tr_props;
  {
    auto lines = rd::read_jsonl((dir / "transfer.jsonl").string());
    std::ostringstream csv;
    csv << "step,defined,proportion,p_size,c_size,intersection\n";
    for (const auto& j : lines) {
      bool defined = j.at("defined").get<bool>();
      csv << j.at("step").get<std::int64_t>() << "," << (defined ? 1 : 0);
      if (defined) {
        const auto& r = j.at("report");
        csv << "," << r.at("proportion").get<double>() << ","
            << r.at("p_size").get<std::int64_t>() << ","
            << r.at("c_size").get<std::int64_t>() << ","
            << r.at("intersection").get<std::int64_t>();
        tr_steps.push_back(j.at("step").get<std::int64_t>());
        tr_props.push_back(r.at("proportion").get<double>());
      } else {
        csv << ",,,,";
      }
      csv << "\n";
    }
    write_atomic((out / "transfer_vs_step.csv").string(), csv.str());
  }

  if (!tr_steps.empty())
    summary["transfer_stages"] = detect_stages(tr_steps, tr_props).to_json();
  if (!wl_steps.empty() && !langs.empty()) {
    // stage structure of the borrowed working language: the dominant
    // language's share should rise, fall, then settle
    for (const auto& [lang, vals] : wl_props)
      if (vals.size() == wl_steps.size())
        summary["worklang_stages"][lang] =
            detect_stages(wl_steps, vals).to_json();
  }

  if (fs::exists(dir / "plan.json"))
    summary["plan"] = nlohmann::json::parse(read_file((dir / "plan.json").string()));
  if (fs::exists(dir / "comparison.json"))
    summary["estimator_comparison"] =
        nlohmann::json::parse(read_file((dir / "comparison.json").string()));

  write_atomic((out / "summary.json").string(), summary.dump(2) + "\n");
  return out.string();
}

}  // namespace babel::harness
