#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pm {

enum class Direction { Positive, Negative };
enum class Transform { None, Log };
enum class Role { Dependent, Explanatory, Mediator, Control, Raw };

struct VariableSpec {
  std::string name;
  Direction direction = Direction::Positive;
  Transform transform = Transform::None;
  Role role = Role::Raw;
};

/// Balanced entity x year grid of named numeric columns.
///
/// Observations are indexed entity-major: obs = entity * n_years + year_offset.
/// Instances are never mutated after construction; the transforming
/// operations return new datasets.
class PanelDataset {
 public:
  PanelDataset() = default;
  PanelDataset(std::vector<std::string> entities, int first_year, std::size_t n_years);

  std::size_t n_entities() const noexcept { return entities_.size(); }
  std::size_t n_years() const noexcept { return n_years_; }
  std::size_t n_variables() const noexcept { return names_.size(); }
  std::size_t n_obs() const noexcept { return entities_.size() * n_years_; }

  const std::vector<std::string>& entities() const noexcept { return entities_; }
  const std::vector<std::string>& variables() const noexcept { return names_; }
  int first_year() const noexcept { return first_year_; }
  int year_at(std::size_t t) const noexcept { return first_year_ + static_cast<int>(t); }
  std::vector<int> years() const;

  bool has_variable(const std::string& name) const noexcept;
  /// Throws MissingColumn.
  std::size_t variable_index(const std::string& name) const;

  double value(std::size_t entity, std::size_t t, std::size_t var) const { return values_[offset(entity, t, var)]; }
  bool observed(std::size_t entity, std::size_t t, std::size_t var) const { return mask_[offset(entity, t, var)] != 0; }

  /// Entity-major values; missing cells hold NaN.
  std::vector<double> raw_column(const std::string& name) const;
  std::vector<std::uint8_t> column_mask(const std::string& name) const;
  /// Entity-major values; throws MissingCells if any cell is unobserved.
  std::vector<double> column(const std::string& name) const;
  bool is_complete(const std::string& name) const;
  std::size_t missing_count(const std::string& name) const;

  /// Entity index per observation, entity-major.
  std::vector<int> entity_ids() const;

  /// Adds or replaces a column. An empty mask means fully observed.
  PanelDataset with_column(const std::string& name, std::span<const double> values,
                           std::span<const std::uint8_t> mask = {}) const;
  PanelDataset renamed(const std::string& from, const std::string& to) const;
  PanelDataset select(const std::vector<std::string>& names) const;

  friend bool operator==(const PanelDataset&, const PanelDataset&);

 private:
  std::size_t offset(std::size_t entity, std::size_t t, std::size_t var) const noexcept {
    return var * n_obs() + entity * n_years_ + t;
  }

  std::vector<std::string> entities_;
  int first_year_ = 0;
  std::size_t n_years_ = 0;
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

/// Reads the wide `entity,year,<vars...>` format. An empty schema loads every
/// non-key column. Empty cells (and NA / NaN tokens) become missing.
PanelDataset load_panel_csv(const std::string& path, const std::vector<VariableSpec>& schema = {});
PanelDataset parse_panel_csv(const std::string& text, const std::vector<VariableSpec>& schema = {},
                             const std::string& source = "<memory>");

std::string panel_to_csv(const PanelDataset& ds);
void write_panel_csv(const PanelDataset& ds, const std::string& path);

/// Fills interior gaps by straight-line interpolation in the year index.
/// Refuses to extrapolate (BoundaryMissing).
PanelDataset interpolate_missing(const PanelDataset& ds, const std::string& var);

/// Replaces `var` by its natural log under the name `ln_<var>`.
PanelDataset apply_log(const PanelDataset& ds, const std::string& var);

/// Applies the transforms named in the schema (log) in order.
PanelDataset apply_schema_transforms(const PanelDataset& ds, const std::vector<VariableSpec>& schema);

Direction parse_direction(const std::string& text);
Role parse_role(const std::string& text);

}  // namespace pm
