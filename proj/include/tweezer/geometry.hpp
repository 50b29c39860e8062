#pragma once

#include <map>
#include <string>
#include <vector>

namespace tweezer {

/// Point in the tweezer plane, micrometres.
struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

enum class SiteRole { Buffer, Target };

std::string to_string(SiteRole role);
SiteRole parse_site_role(const std::string& text);

struct TrapSite {
  int id = 0;
  Position pos;
  SiteRole role = SiteRole::Buffer;
};

/// Euclidean distance in µm.
double distance(const Position& a, const Position& b);

/// Centered hexagonal lattice: the center point followed by ring 1, ring 2, ...
/// Ring k holds 6k points walked counter-clockwise starting on the +x axis.
std::vector<Position> build_hex_grid(int rings, double pitch);

/// Trap layout of the tweezer array plus the reservoir focus.
///
/// Construction validates the layout: unique ids, finite coordinates, minimum
/// site spacing of effective_pitch and containment of every site and the
/// reservoir inside the transport scan box. The object is immutable afterwards.
class ArrayLayout {
 public:
  ArrayLayout(std::vector<TrapSite> sites, double base_pitch, double effective_pitch,
              Position reservoir_pos, double scan_range,
              std::map<std::string, std::string> metadata = {});

  const std::vector<TrapSite>& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  const TrapSite& site(std::size_t index) const { return sites_.at(index); }

  /// Index of the site with the given id; throws std::out_of_range if absent.
  std::size_t index_of(int id) const;

  double base_pitch() const { return base_pitch_; }
  double effective_pitch() const { return effective_pitch_; }
  const Position& reservoir_pos() const { return reservoir_pos_; }
  /// Full side length of the square reachable by the transport tweezers.
  double scan_range() const { return scan_range_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  Position centroid() const;
  std::vector<std::size_t> indices_with_role(SiteRole role) const;
  std::size_t count(SiteRole role) const { return indices_with_role(role).size(); }

 private:
  std::vector<TrapSite> sites_;
  double base_pitch_;
  double effective_pitch_;
  Position reservoir_pos_;
  double scan_range_;
  std::map<std::string, std::string> metadata_;
};

inline constexpr const char* kPaperLayoutName = "paper-hex-6";

/// Seven buffer traps (filled hexagon next to the reservoir) and a six-site
/// target ring shifted four lattice columns away, both at 15.8 µm pitch.
/// The reservoir sits 41 µm from the nearest buffer trap on the far side.
ArrayLayout paper_layout();

/// Resolves a layout preset by name; throws std::invalid_argument otherwise.
ArrayLayout layout_preset(const std::string& name);

}  // namespace tweezer
