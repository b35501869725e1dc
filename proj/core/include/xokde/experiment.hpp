#pragma once

// Benchmark harness: runs the streaming classification protocol (seeded
// shuffles, fractional split, one-pass training, held-out evaluation) for
// either covariance representation and emits machine-readable reports.

#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xokde/classifier.hpp"
#include "xokde/dataset.hpp"
#include "xokde/errors.hpp"
#include "xokde/sample_model.hpp"

namespace xokde::bench {

enum class CovKind { kFull, kDiagonal };

inline std::string to_string(CovKind kind) {
  return kind == CovKind::kFull ? "full" : "diagonal";
}

inline CovKind cov_kind_from_string(const std::string& s) {
  if (s == "full") return CovKind::kFull;
  if (s == "diag" || s == "diagonal") return CovKind::kDiagonal;
  throw InvalidArgumentError("unknown covariance kind: " + s);
}

struct ExperimentConfig {
  std::string dataset_path;
  CovKind covariance = CovKind::kFull;
  int shuffles = 12;
  double train_fraction = 0.75;
  std::uint64_t seed = 1;
  double compression_threshold = 0.1;
  double forgetting = 1.0;
  int trigger_floor = 10;
  double trigger_growth = 1.5;
  CsvOptions csv;
};

struct ShuffleOutcome {
  int index = 0;
  bool ok = false;
  std::string error;
  double accuracy = 0.0;       // fraction correct on the test split
  double avg_nll = 0.0;        // mean -log p(x | own class) on test
  std::uint64_t nll_excluded = 0;
  double mean_components = 0.0;  // mean final K across class models
  double train_seconds = 0.0;
  std::uint64_t footprint_bytes = 0;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over ok rows
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string dataset_name;
  std::uint64_t dataset_samples = 0;
  std::uint64_t dataset_dimensions = 0;
  std::uint64_t dataset_classes = 0;
  std::vector<ShuffleOutcome> shuffles;
  std::uint64_t rows_ok = 0;
  Aggregate accuracy, avg_nll, mean_components, train_seconds,
      footprint_bytes;
};

namespace detail {

inline Aggregate aggregate_of(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

template <class Cov>
ShuffleOutcome run_shuffle(const Dataset& ds, const ExperimentConfig& cfg,
                           int index) {
  ShuffleOutcome out;
  out.index = index;
  try {
    const auto [train, test] = shuffle_split(
        ds, cfg.seed + static_cast<std::uint64_t>(index), cfg.train_fraction);

    EstimatorConfig engine;
    engine.forgetting = cfg.forgetting;
    engine.compression_threshold = cfg.compression_threshold;
    engine.trigger_floor = cfg.trigger_floor;
    engine.trigger_growth = cfg.trigger_growth;

    Classifier<Cov> clf(ds.dim, engine);
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < train.size(); ++i) {
      clf.observe(train.samples[i], train.labels[i]);
    }
    out.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    std::size_t correct = 0;
    std::vector<std::pair<Vector, std::string>> labeled;
    labeled.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (clf.predict(test.samples[i]) == test.labels[i]) ++correct;
      labeled.emplace_back(test.samples[i], test.labels[i]);
    }
    out.accuracy = static_cast<double>(correct) /
                   static_cast<double>(test.size());
    const auto nll = clf.avg_neg_log_likelihood(labeled);
    out.avg_nll = nll.mean;
    out.nll_excluded = nll.excluded;
    out.mean_components = clf.mean_component_count();
    out.footprint_bytes = clf.footprint_bytes();
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

}  // namespace detail

template <class Cov>
ExperimentReport run_experiment_on(const Dataset& ds,
                                   const ExperimentConfig& cfg) {
  if (cfg.shuffles < 1) {
    throw InvalidArgumentError("need at least one shuffle");
  }
  ExperimentReport report;
  report.config = cfg;
  report.dataset_name = ds.name;
  report.dataset_samples = ds.size();
  report.dataset_dimensions = static_cast<std::uint64_t>(ds.dim);
  report.dataset_classes = ds.class_count();

  std::vector<double> acc, nll, comps, secs, bytes;
  for (int i = 0; i < cfg.shuffles; ++i) {
    ShuffleOutcome out = detail::run_shuffle<Cov>(ds, cfg, i);
    if (out.ok) {
      acc.push_back(out.accuracy);
      nll.push_back(out.avg_nll);
      comps.push_back(out.mean_components);
      secs.push_back(out.train_seconds);
      bytes.push_back(static_cast<double>(out.footprint_bytes));
      ++report.rows_ok;
    }
    report.shuffles.push_back(std::move(out));
  }
  report.accuracy = detail::aggregate_of(acc);
  report.avg_nll = detail::aggregate_of(nll);
  report.mean_components = detail::aggregate_of(comps);
  report.train_seconds = detail::aggregate_of(secs);
  report.footprint_bytes = detail::aggregate_of(bytes);
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const Dataset ds = load_csv(cfg.dataset_path, cfg.csv);
  if (cfg.covariance == CovKind::kFull) {
    return run_experiment_on<FullCovariance>(ds, cfg);
  }
  return run_experiment_on<DiagonalCovariance>(ds, cfg);
}

// --- report serialization ---------------------------------------------

inline nlohmann::json to_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"stddev", a.stddev}};
}

inline nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json j;
  j["format"] = "xokde-bench-report";
  j["version"] = 1;
  j["config"] = {
      {"dataset", r.config.dataset_path},
      {"covariance", to_string(r.config.covariance)},
      {"shuffles", r.config.shuffles},
      {"train_fraction", r.config.train_fraction},
      {"seed", r.config.seed},
      {"compression_threshold", r.config.compression_threshold},
      {"forgetting", r.config.forgetting},
      {"trigger_floor", r.config.trigger_floor},
      {"trigger_growth", r.config.trigger_growth},
  };
  j["dataset"] = {
      {"name", r.dataset_name},
      {"samples", r.dataset_samples},
      {"dimensions", r.dataset_dimensions},
      {"classes", r.dataset_classes},
  };
  j["shuffles"] = nlohmann::json::array();
  for (const auto& s : r.shuffles) {
    nlohmann::json js = {{"index", s.index}, {"ok", s.ok}};
    if (s.ok) {
      js["accuracy"] = s.accuracy;
      js["avg_nll"] = s.avg_nll;
      js["nll_excluded"] = s.nll_excluded;
      js["mean_components"] = s.mean_components;
      js["train_seconds"] = s.train_seconds;
      js["footprint_bytes"] = s.footprint_bytes;
    } else {
      js["error"] = s.error;
    }
    j["shuffles"].push_back(std::move(js));
  }
  j["aggregate"] = {
      {"rows_ok", r.rows_ok},
      {"accuracy", to_json(r.accuracy)},
      {"avg_nll", to_json(r.avg_nll)},
      {"mean_components", to_json(r.mean_components)},
      {"train_seconds", to_json(r.train_seconds)},
      {"footprint_bytes", to_json(r.footprint_bytes)},
  };
  return j;
}

inline Aggregate aggregate_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("stddev").get<double>()};
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "xokde-bench-report" ||
      j.value("version", 0) != 1) {
    throw InvalidArgumentError("not a benchmark report");
  }
  ExperimentReport r;
  const auto& jc = j.at("config");
  r.config.dataset_path = jc.at("dataset").get<std::string>();
  r.config.covariance =
      cov_kind_from_string(jc.at("covariance").get<std::string>());
  r.config.shuffles = jc.at("shuffles").get<int>();
  r.config.train_fraction = jc.at("train_fraction").get<double>();
  r.config.seed = jc.at("seed").get<std::uint64_t>();
  r.config.compression_threshold =
      jc.at("compression_threshold").get<double>();
  r.config.forgetting = jc.at("forgetting").get<double>();
  r.config.trigger_floor = jc.at("trigger_floor").get<int>();
  r.config.trigger_growth = jc.at("trigger_growth").get<double>();
  const auto& jd = j.at("dataset");
  r.dataset_name = jd.at("name").get<std::string>();
  r.dataset_samples = jd.at("samples").get<std::uint64_t>();
  r.dataset_dimensions = jd.at("dimensions").get<std::uint64_t>();
  r.dataset_classes = jd.at("classes").get<std::uint64_t>();
  for (const auto& js : j.at("shuffles")) {
    ShuffleOutcome s;
    s.index = js.at("index").get<int>();
    s.ok = js.at("ok").get<bool>();
    if (s.ok) {
      s.accuracy = js.at("accuracy").get<double>();
      s.avg_nll = js.at("avg_nll").get<double>();
      s.nll_excluded = js.at("nll_excluded").get<std::uint64_t>();
      s.mean_components = js.at("mean_components").get<double>();
      s.train_seconds = js.at("train_seconds").get<double>();
      s.footprint_bytes = js.at("footprint_bytes").get<std::uint64_t>();
    } else {
      s.error = js.at("error").get<std::string>();
    }
    r.shuffles.push_back(std::move(s));
  }
  const auto& ja = j.at("aggregate");
  r.rows_ok = ja.at("rows_ok").get<std::uint64_t>();
  r.accuracy = aggregate_from_json(ja.at("accuracy"));
  r.avg_nll = aggregate_from_json(ja.at("avg_nll"));
  r.mean_components = aggregate_from_json(ja.at("mean_components"));
  r.train_seconds = aggregate_from_json(ja.at("train_seconds"));
  r.footprint_bytes = aggregate_from_json(ja.at("footprint_bytes"));
  return r;
}

inline std::string emit_json(const ExperimentReport& r) {
  return to_json(r).dump(2) + "\n";
}

namespace detail {

inline std::string shortest(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
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

}  // namespace detail

// One row per shuffle plus marked aggregate rows; numbers keep full
// round-trip precision.
inline std::string emit_csv(const ExperimentReport& r) {
  std::string out =
      "row,ok,accuracy,avg_nll,nll_excluded,mean_components,"
      "train_seconds,footprint_bytes,error\n";
  for (const auto& s : r.shuffles) {
    out += std::to_string(s.index);
    out += s.ok ? ",1," : ",0,";
    if (s.ok) {
      out += detail::shortest(s.accuracy) + "," +
             detail::shortest(s.avg_nll) + "," +
             std::to_string(s.nll_excluded) + "," +
             detail::shortest(s.mean_components) + "," +
             detail::shortest(s.train_seconds) + "," +
             std::to_string(s.footprint_bytes) + ",";
    } else {
      out += ",,,,,," + detail::csv_escape(s.error);
    }
    out += '\n';
  }
  const auto row = [&](const std::string& name, double acc, double nll,
                       double comps, double secs, double bytes) {
    out += name + ",," + detail::shortest(acc) + "," +
           detail::shortest(nll) + ",," + detail::shortest(comps) + "," +
           detail::shortest(secs) + "," + detail::shortest(bytes) + ",\n";
  };
  row("mean", r.accuracy.mean, r.avg_nll.mean, r.mean_components.mean,
      r.train_seconds.mean, r.footprint_bytes.mean);
  row("stddev", r.accuracy.stddev, r.avg_nll.stddev,
      r.mean_components.stddev, r.train_seconds.stddev,
      r.footprint_bytes.stddev);
  return out;
}

}  // namespace xokde::bench
