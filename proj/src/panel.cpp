#include "panelmetrics/panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "panelmetrics/csv.hpp"
#include "panelmetrics/error.hpp"

namespace pm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_missing_token(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".";
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

PanelDataset::PanelDataset(std::vector<std::string> entities, int first_year, std::size_t n_years)
    : entities_(std::move(entities)), first_year_(first_year), n_years_(n_years) {
  std::vector<std::string> sorted = entities_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw Error(ErrorCode::DuplicateKey, "entity identifiers must be unique");
}

std::vector<int> PanelDataset::years() const {
  std::vector<int> out(n_years_);
  for (std::size_t t = 0; t < n_years_; ++t) out[t] = year_at(t);
  return out;
}

bool PanelDataset::has_variable(const std::string& name) const noexcept {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t PanelDataset::variable_index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw Error(ErrorCode::MissingColumn, "variable '" + name + "' not in dataset");
  return static_cast<std::size_t>(it - names_.begin());
}

std::vector<double> PanelDataset::raw_column(const std::string& name) const {
  const auto v = variable_index(name);
  std::vector<double> out(n_obs());
  for (std::size_t i = 0; i < n_obs(); ++i) out[i] = mask_[v * n_obs() + i] ? values_[v * n_obs() + i] : kNaN;
  return out;
}

std::vector<std::uint8_t> PanelDataset::column_mask(const std::string& name) const {
  const auto v = variable_index(name);
  return {mask_.begin() + static_cast<std::ptrdiff_t>(v * n_obs()),
          mask_.begin() + static_cast<std::ptrdiff_t>((v + 1) * n_obs())};
}

std::vector<double> PanelDataset::column(const std::string& name) const {
  const auto v = variable_index(name);
  std::vector<double> out(n_obs());
  for (std::size_t e = 0; e < n_entities(); ++e) {
    for (std::size_t t = 0; t < n_years_; ++t) {
      if (!observed(e, t, v))
        throw Error(ErrorCode::MissingCells, "variable '" + name + "' missing at (" + entities_[e] + ", " +
                                                 std::to_string(year_at(t)) + ")");
      out[e * n_years_ + t] = value(e, t, v);
    }
  }
  return out;
}

bool PanelDataset::is_complete(const std::string& name) const { return missing_count(name) == 0; }

std::size_t PanelDataset::missing_count(const std::string& name) const {
  const auto m = column_mask(name);
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{0}));
}

std::vector<int> PanelDataset::entity_ids() const {
  std::vector<int> ids(n_obs());
  for (std::size_t i = 0; i < n_obs(); ++i) ids[i] = static_cast<int>(i / n_years_);
  return ids;
}

PanelDataset PanelDataset::with_column(const std::string& name, std::span<const double> values,
                                       std::span<const std::uint8_t> mask) const {
  if (values.size() != n_obs())
    throw Error(ErrorCode::DimensionMismatch, "column '" + name + "' has " + std::to_string(values.size()) +
                                                  " values, panel has " + std::to_string(n_obs()) + " cells");
  if (!mask.empty() && mask.size() != n_obs())
    throw Error(ErrorCode::DimensionMismatch, "mask for '" + name + "' has wrong length");
  PanelDataset out = *this;
  std::size_t v;
  if (has_variable(name)) {
    v = variable_index(name);
  } else {
    v = out.names_.size();
    out.names_.push_back(name);
    out.values_.resize(out.values_.size() + n_obs(), 0.0);
    out.mask_.resize(out.mask_.size() + n_obs(), 0);
  }
  for (std::size_t i = 0; i < n_obs(); ++i) {
    const bool obs = mask.empty() ? !std::isnan(values[i]) : mask[i] != 0;
    out.mask_[v * n_obs() + i] = obs ? 1 : 0;
    out.values_[v * n_obs() + i] = obs ? values[i] : 0.0;
  }
  return out;
}

PanelDataset PanelDataset::renamed(const std::string& from, const std::string& to) const {
  const auto v = variable_index(from);
  if (from != to && has_variable(to))
    throw Error(ErrorCode::InvalidArgument, "cannot rename '" + from + "' to existing column '" + to + "'");
  PanelDataset out = *this;
  out.names_[v] = to;
  return out;
}

PanelDataset PanelDataset::select(const std::vector<std::string>& names) const {
  PanelDataset out(entities_, first_year_, n_years_);
  for (const auto& n : names) {
    const auto v = variable_index(n);
    out = out.with_column(n, std::span<const double>(values_.data() + v * n_obs(), n_obs()),
                          std::span<const std::uint8_t>(mask_.data() + v * n_obs(), n_obs()));
  }
  return out;
}

bool operator==(const PanelDataset& a, const PanelDataset& b) {
  return a.entities_ == b.entities_ && a.first_year_ == b.first_year_ && a.n_years_ == b.n_years_ &&
         a.names_ == b.names_ && a.values_ == b.values_ && a.mask_ == b.mask_;
}

PanelDataset parse_panel_csv(const std::string& text, const std::vector<VariableSpec>& schema,
                             const std::string& source) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw Error(ErrorCode::MissingColumn, source + ": empty file, expected header");
  const auto& header = rows.front();

  int entity_col = -1;
  int year_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto h = lower(csv::trim(header[c]));
    if (h == "entity" && entity_col < 0) entity_col = static_cast<int>(c);
    if (h == "year" && year_col < 0) year_col = static_cast<int>(c);
  }
  if (entity_col < 0) throw Error(ErrorCode::MissingColumn, source + ": header lacks 'entity' column");
  if (year_col < 0) throw Error(ErrorCode::MissingColumn, source + ": header lacks 'year' column");

  std::vector<std::pair<std::string, std::size_t>> wanted;  // name, column position
  if (schema.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (static_cast<int>(c) == entity_col || static_cast<int>(c) == year_col) continue;
      wanted.emplace_back(csv::trim(header[c]), c);
    }
  } else {
    for (const auto& spec : schema) {
      auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) { return csv::trim(h) == spec.name; });
      if (it == header.end()) throw Error(ErrorCode::MissingColumn, source + ": header lacks column '" + spec.name + "'");
      wanted.emplace_back(spec.name, static_cast<std::size_t>(it - header.begin()));
    }
  }

  struct Record {
    std::size_t line;
    std::vector<std::optional<double>> cells;
  };
  std::vector<std::string> entity_order;
  std::unordered_map<std::string, std::size_t> entity_index;
  std::map<std::pair<std::size_t, int>, Record> records;
  int min_year = std::numeric_limits<int>::max();
  int max_year = std::numeric_limits<int>::min();

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line = r + 1;
    if (row.size() != header.size())
      throw Error(ErrorCode::InvalidArgument, source + ":" + std::to_string(line) + ": expected " +
                                                  std::to_string(header.size()) + " fields, found " +
                                                  std::to_string(row.size()));
    const std::string entity = csv::trim(row[static_cast<std::size_t>(entity_col)]);
    if (entity.empty()) throw Error(ErrorCode::InvalidArgument, source + ":" + std::to_string(line) + ": empty entity");
    const auto year_value = csv::parse_double(row[static_cast<std::size_t>(year_col)]);
    if (!year_value || *year_value != std::floor(*year_value))
      throw Error(ErrorCode::NonNumericCell,
                  source + ":" + std::to_string(line) + ": column 'year' holds '" + row[static_cast<std::size_t>(year_col)] + "'");
    const int year = static_cast<int>(*year_value);

    auto [it, inserted] = entity_index.emplace(entity, entity_order.size());
    if (inserted) entity_order.push_back(entity);

    Record rec{line, {}};
    rec.cells.reserve(wanted.size());
    for (const auto& [name, pos] : wanted) {
      const std::string cell = csv::trim(row[pos]);
      if (is_missing_token(cell)) {
        rec.cells.emplace_back(std::nullopt);
        continue;
      }
      const auto v = csv::parse_double(cell);
      if (!v || !std::isfinite(*v))
        throw Error(ErrorCode::NonNumericCell,
                    source + ":" + std::to_string(line) + ": column '" + name + "' holds '" + cell + "'");
      rec.cells.emplace_back(*v);
    }
    const auto key = std::make_pair(it->second, year);
    if (records.count(key))
      throw Error(ErrorCode::DuplicateKey, source + ":" + std::to_string(line) + ": duplicate row (" + entity + ", " +
                                               std::to_string(year) + "), first seen on line " +
                                               std::to_string(records.at(key).line));
    records.emplace(key, std::move(rec));
    min_year = std::min(min_year, year);
    max_year = std::max(max_year, year);
  }
  if (records.empty()) throw Error(ErrorCode::UnbalancedPanel, source + ": no data rows");

  const std::size_t n_years = static_cast<std::size_t>(max_year - min_year + 1);
  for (std::size_t e = 0; e < entity_order.size(); ++e) {
    for (int y = min_year; y <= max_year; ++y) {
      if (!records.count({e, y}))
        throw Error(ErrorCode::UnbalancedPanel,
                    source + ": entity '" + entity_order[e] + "' has no row for year " + std::to_string(y));
    }
  }

  PanelDataset ds(entity_order, min_year, n_years);
  const std::size_t n_obs = entity_order.size() * n_years;
  for (std::size_t w = 0; w < wanted.size(); ++w) {
    std::vector<double> values(n_obs, 0.0);
    std::vector<std::uint8_t> mask(n_obs, 0);
    for (const auto& [key, rec] : records) {
      const std::size_t obs = key.first * n_years + static_cast<std::size_t>(key.second - min_year);
      if (rec.cells[w]) {
        values[obs] = *rec.cells[w];
        mask[obs] = 1;
      }
    }
    ds = ds.with_column(wanted[w].first, values, mask);
  }
  return ds;
}

PanelDataset load_panel_csv(const std::string& path, const std::vector<VariableSpec>& schema) {
  return parse_panel_csv(csv::read_text_file(path), schema, path);
}

std::string panel_to_csv(const PanelDataset& ds) {
  std::ostringstream out;
  csv::Row header{"entity", "year"};
  header.insert(header.end(), ds.variables().begin(), ds.variables().end());
  csv::write_row(out, header);
  for (std::size_t e = 0; e < ds.n_entities(); ++e) {
    for (std::size_t t = 0; t < ds.n_years(); ++t) {
      csv::Row row{ds.entities()[e], std::to_string(ds.year_at(t))};
      for (std::size_t v = 0; v < ds.n_variables(); ++v)
        row.push_back(ds.observed(e, t, v) ? csv::format_double(ds.value(e, t, v)) : std::string());
      csv::write_row(out, row);
    }
  }
  return out.str();
}

void write_panel_csv(const PanelDataset& ds, const std::string& path) { csv::write_text_file(path, panel_to_csv(ds)); }

PanelDataset interpolate_missing(const PanelDataset& ds, const std::string& var) {
  const auto v = ds.variable_index(var);
  auto values = ds.raw_column(var);
  auto mask = ds.column_mask(var);
  const std::size_t T = ds.n_years();
  for (std::size_t e = 0; e < ds.n_entities(); ++e) {
    const std::size_t base = e * T;
    if (!ds.observed(e, 0, v) || !ds.observed(e, T - 1, v))
      throw Error(ErrorCode::BoundaryMissing, "variable '" + var + "' for entity '" + ds.entities()[e] +
                                                  "' lacks an observed " +
                                                  (!ds.observed(e, 0, v) ? "first" : "last") + " year");
    std::size_t left = 0;
    for (std::size_t t = 1; t < T; ++t) {
      if (!mask[base + t]) continue;
      for (std::size_t k = left + 1; k < t; ++k) {
        const double frac = static_cast<double>(k - left) / static_cast<double>(t - left);
        values[base + k] = values[base + left] + frac * (values[base + t] - values[base + left]);
        mask[base + k] = 1;
      }
      left = t;
    }
  }
  return ds.with_column(var, values, mask);
}

PanelDataset apply_log(const PanelDataset& ds, const std::string& var) {
  const auto v = ds.variable_index(var);
  const std::string target = "ln_" + var;
  if (ds.has_variable(target)) throw Error(ErrorCode::InvalidArgument, "column '" + target + "' already exists");
  auto values = ds.raw_column(var);
  const auto mask = ds.column_mask(var);
  for (std::size_t e = 0; e < ds.n_entities(); ++e) {
    for (std::size_t t = 0; t < ds.n_years(); ++t) {
      if (!ds.observed(e, t, v)) continue;
      const double x = ds.value(e, t, v);
      if (!(x > 0.0))
        throw Error(ErrorCode::NonPositiveValue, "variable '" + var + "' is " + csv::format_double(x) + " at (" +
                                                     ds.entities()[e] + ", " + std::to_string(ds.year_at(t)) + ")");
      values[e * ds.n_years() + t] = std::log(x);
    }
  }
  return ds.with_column(var, values, mask).renamed(var, target);
}

PanelDataset apply_schema_transforms(const PanelDataset& ds, const std::vector<VariableSpec>& schema) {
  PanelDataset out = ds;
  for (const auto& spec : schema)
    if (spec.transform == Transform::Log) out = apply_log(out, spec.name);
  return out;
}

Direction parse_direction(const std::string& text) {
  const auto t = lower(csv::trim(text));
  if (t == "+" || t == "positive" || t == "pos") return Direction::Positive;
  if (t == "-" || t == "negative" || t == "neg") return Direction::Negative;
  throw Error(ErrorCode::InvalidArgument, "unknown direction '" + text + "'");
}

Role parse_role(const std::string& text) {
  const auto t = lower(csv::trim(text));
  if (t == "dependent") return Role::Dependent;
  if (t == "explanatory") return Role::Explanatory;
  if (t == "mediator") return Role::Mediator;
  if (t == "control") return Role::Control;
  if (t == "raw") return Role::Raw;
  throw Error(ErrorCode::InvalidArgument, "unknown role '" + text + "'");
}

}  // namespace pm
