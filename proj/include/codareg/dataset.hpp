#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "codareg/composition.hpp"
#include "codareg/errors.hpp"

namespace codareg {

struct Observation {
  Composition comp;
  double response = 0.0;
  std::optional<double> moderator;
  std::optional<double> offset;           // > 0, e.g. population at risk
  std::optional<std::string> group;
  std::optional<long long> time;
};

/// In-memory dataset. All compositions share D; covariate lagging is a
/// dataset transform, so downstream fits never see time structure.
struct Dataset {
  std::vector<Observation> rows;
  int lag_applied = 0;
  std::size_t rows_dropped_by_lag = 0;
  std::size_t rows_dropped_missing = 0;

  std::size_t n() const { return rows.size(); }
  int D() const { return rows.empty() ? 0 : rows.front().comp.size(); }

  void check_consistent() const {
    const int d = D();
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].comp.size() != d)
        throw InconsistentD(d, rows[i].comp.size(), i);
  }
};

/// Shift covariates (composition, moderator) back by `lag` steps within each
/// group, keyed by time. Response and offset stay at time d; rows whose time
/// d - lag does not exist in the same group are dropped and counted.
inline Dataset apply_lag(const Dataset& data, int lag) {
  if (lag < 0) throw Error(ErrorCode::invalid_data, "lag must be >= 0");
  Dataset out;
  out.rows_dropped_missing = data.rows_dropped_missing;
  if (lag == 0) {
    out.rows = data.rows;
    return out;
  }
  std::map<std::pair<std::string, long long>, std::size_t> index;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const auto& r = data.rows[i];
    if (!r.group || !r.time) throw MissingTimeKeys();
    index[{*r.group, *r.time}] = i;
  }
  out.lag_applied = lag;
  for (const auto& r : data.rows) {
    const auto it = index.find({*r.group, *r.time - lag});
    if (it == index.end()) {
      ++out.rows_dropped_by_lag;
      continue;
    }
    const auto& src = data.rows[it->second];
    Observation shifted = r;
    shifted.comp = src.comp;
    shifted.moderator = src.moderator;
    out.rows.push_back(std::move(shifted));
  }
  return out;
}

}  // namespace codareg
