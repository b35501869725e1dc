#pragma once

// Delimiter-separated dataset loading (numeric features plus one label
// column) and seeded shuffle/split. The shuffle is a hand-rolled
// Fisher-Yates over a fixed PRNG so identical seeds give identical splits
// on every platform.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "xokde/errors.hpp"

namespace xokde::bench {

using Vector = Eigen::VectorXd;

struct Dataset {
  std::string name;
  std::vector<Vector> samples;
  std::vector<std::string> labels;
  Eigen::Index dim = 0;

  std::size_t size() const { return samples.size(); }
  std::size_t class_count() const {
    return std::set<std::string>(labels.begin(), labels.end()).size();
  }
};

enum class LabelColumn { kLast, kFirst, kIndex };

struct CsvOptions {
  LabelColumn label_column = LabelColumn::kLast;
  int label_index = -1;  // used when label_column == kIndex (0-based)
  bool skip_header = false;
  char delimiter = ',';
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line,
                                                  char delimiter) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == delimiter) {
      fields.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return fields;
}

inline double parse_double(std::string_view field, std::size_t line_no,
                           std::size_t column_no) {
  double value = 0.0;
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ", column " +
                         std::to_string(column_no) +
                         ": expected a number, got '" + std::string(field) +
                         "'",
                     line_no, column_no);
  }
  return value;
}

}  // namespace detail

inline Dataset load_csv(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);

  Dataset ds;
  ds.name = path;
  const auto slash = path.find_last_of('/');
  if (slash != std::string::npos) ds.name = path.substr(slash + 1);

  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_fields = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (options.skip_header && line_no == 1) continue;
    if (detail::trim(line).empty()) continue;

    const auto fields = detail::split_fields(line, options.delimiter);
    if (expected_fields == 0) {
      expected_fields = fields.size();
      if (expected_fields < 2) {
        throw ParseError("line " + std::to_string(line_no) +
                             ": need at least one feature and a label",
                         line_no, 1);
      }
      ds.dim = static_cast<Eigen::Index>(expected_fields - 1);
    } else if (fields.size() != expected_fields) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(expected_fields) +
                           " fields, got " + std::to_string(fields.size()),
                       line_no, fields.size());
    }

    std::size_t label_at;
    switch (options.label_column) {
      case LabelColumn::kFirst:
        label_at = 0;
        break;
      case LabelColumn::kIndex:
        if (options.label_index < 0 ||
            static_cast<std::size_t>(options.label_index) >= expected_fields) {
          throw InvalidArgumentError("label column index out of range");
        }
        label_at = static_cast<std::size_t>(options.label_index);
        break;
      case LabelColumn::kLast:
      default:
        label_at = expected_fields - 1;
        break;
    }

    Vector x(ds.dim);
    Eigen::Index next = 0;
    for (std::size_t col = 0; col < fields.size(); ++col) {
      if (col == label_at) continue;
      x[next++] = detail::parse_double(fields[col], line_no, col + 1);
    }
    ds.samples.push_back(std::move(x));
    ds.labels.emplace_back(fields[label_at]);
  }
  if (ds.samples.empty()) {
    throw ParseError("dataset is empty: " + path, line_no, 1);
  }
  return ds;
}

// Deterministic permutation of [0, n) from a seed.
inline std::vector<std::size_t> seeded_permutation(std::size_t n,
                                                   std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

// Shuffles with the seed, then takes floor(fraction * n) rows for training.
inline std::pair<Dataset, Dataset> shuffle_split(const Dataset& ds,
                                                 std::uint64_t seed,
                                                 double fraction) {
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw InvalidArgumentError("train fraction must be in (0, 1)");
  }
  const auto perm = seeded_permutation(ds.size(), seed);
  const auto train_size = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(ds.size())));

  Dataset train, test;
  train.name = ds.name;
  test.name = ds.name;
  train.dim = test.dim = ds.dim;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    Dataset& target = i < train_size ? train : test;
    target.samples.push_back(ds.samples[perm[i]]);
    target.labels.push_back(ds.labels[perm[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace xokde::bench
