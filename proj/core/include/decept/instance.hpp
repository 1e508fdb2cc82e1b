#pragma once

// Instance files (JSON, schema decept-instance/1), allocation tables and
// heatmap data.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "decept/adversary.hpp"
#include "decept/mdp.hpp"
#include "decept/program.hpp"
#include "decept/scp.hpp"

namespace decept {

inline constexpr std::string_view kInstanceSchema = "decept-instance/1";

struct GridShape {
  int rows = 0;
  int cols = 0;
  double move_success = 0.95;
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct Instance {
  std::string name;
  std::string description;
  bool synthetic = false;
  /// Set for grid instances; the model is then rebuilt from it on load.
  std::optional<GridShape> grid;
  MdpModel model;
  std::vector<double> crime_counts;
  AdversaryProfile profile;
  SpParameters problem;
  ScpSettings scp;

  /// Explicit initial distribution as written in the file (empty = uniform).
  std::vector<double> initial;
};

bool operator==(const Instance& a, const Instance& b);

/// Parses and validates an instance. Errors carry the line they refer to.
Instance parse_instance(std::string_view text);
Instance load_instance(const std::filesystem::path& path);

std::string instance_to_json(const Instance& instance);
void save_instance(const Instance& instance, const std::filesystem::path& path);

/// Builds the grid model for the instance's shape, counts and sensitive set.
MdpModel grid_model(const GridShape& shape, std::span<const double> crime_counts,
                    std::vector<StateId> sensitive, std::vector<double> initial);

// Allocation CSV: state,row,col,crime,utility,reward

std::string allocation_csv(const Instance& instance, std::span<const double> utilities);
/// Reads the utility column. Every state must appear exactly once with a
/// positive utility.
std::vector<double> parse_allocation_csv(std::string_view text, std::size_t num_states);
std::vector<double> load_allocation(const std::filesystem::path& path, std::size_t num_states);

enum class HeatmapTransform { Linear, Log10 };
const char* to_string(HeatmapTransform transform);

struct HeatmapData {
  int rows = 0;
  int cols = 0;
  HeatmapTransform transform = HeatmapTransform::Log10;
  /// Indexed like the grid states: row * cols + col, row 0 at the bottom.
  std::vector<double> values;
};

HeatmapData make_heatmap(int rows, int cols, std::span<const double> utilities,
                         HeatmapTransform transform = HeatmapTransform::Log10);
/// Top row first, one line per grid row.
std::string heatmap_csv(const HeatmapData& heatmap);
std::string heatmap_svg(const HeatmapData& heatmap, std::span<const StateId> sensitive = {});

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace decept
