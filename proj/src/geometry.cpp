#include "tweezer/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace tweezer {

std::string to_string(SiteRole role) {
  return role == SiteRole::Buffer ? "buffer" : "target";
}

SiteRole parse_site_role(const std::string& text) {
  if (text == "buffer") return SiteRole::Buffer;
  if (text == "target") return SiteRole::Target;
  throw std::invalid_argument("unknown site role '" + text + "' (expected buffer|target)");
}

double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

std::vector<Position> build_hex_grid(int rings, double pitch) {
  if (rings < 0) throw std::invalid_argument("build_hex_grid: rings must be nonnegative");
  if (!(pitch > 0.0)) throw std::invalid_argument("build_hex_grid: pitch must be positive");

  std::vector<Position> out;
  out.reserve(1 + 3 * static_cast<std::size_t>(rings) * (rings + 1));
  out.push_back({0.0, 0.0});

  std::array<Position, 6> unit{};
  for (int j = 0; j < 6; ++j) {
    const double angle = j * std::numbers::pi / 3.0;
    unit[j] = {std::cos(angle), std::sin(angle)};
  }
  for (int k = 1; k <= rings; ++k) {
    for (int j = 0; j < 6; ++j) {
      const Position& a = unit[j];
      const Position& b = unit[(j + 1) % 6];
      for (int s = 0; s < k; ++s) {
        // corner j plus s steps along the edge toward corner j+1
        out.push_back({pitch * (k * a.x + s * (b.x - a.x)), pitch * (k * a.y + s * (b.y - a.y))});
      }
    }
  }
  return out;
}

ArrayLayout::ArrayLayout(std::vector<TrapSite> sites, double base_pitch, double effective_pitch,
                         Position reservoir_pos, double scan_range,
                         std::map<std::string, std::string> metadata)
    : sites_(std::move(sites)),
      base_pitch_(base_pitch),
      effective_pitch_(effective_pitch),
      reservoir_pos_(reservoir_pos),
      scan_range_(scan_range),
      metadata_(std::move(metadata)) {
  if (sites_.empty()) throw std::invalid_argument("layout: no trap sites");
  if (!(base_pitch_ > 0.0) || !(effective_pitch_ > 0.0))
    throw std::invalid_argument("layout: pitches must be positive");
  if (!(scan_range_ > 0.0)) throw std::invalid_argument("layout: scan_range must be positive");

  std::set<int> ids;
  for (const auto& s : sites_) {
    if (!std::isfinite(s.pos.x) || !std::isfinite(s.pos.y))
      throw std::invalid_argument("layout: site " + std::to_string(s.id) + " has non-finite coordinates");
    if (!ids.insert(s.id).second)
      throw std::invalid_argument("layout: duplicate site id " + std::to_string(s.id));
  }
  if (!std::isfinite(reservoir_pos_.x) || !std::isfinite(reservoir_pos_.y))
    throw std::invalid_argument("layout: reservoir position is not finite");

  const double min_allowed = effective_pitch_ * (1.0 - 1e-9);
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    for (std::size_t j = i + 1; j < sites_.size(); ++j) {
      if (distance(sites_[i].pos, sites_[j].pos) < min_allowed) {
        throw std::invalid_argument("layout: sites " + std::to_string(sites_[i].id) + " and " +
                                    std::to_string(sites_[j].id) +
                                    " are closer than the effective pitch");
      }
    }
  }

  const Position c = centroid();
  const double half = 0.5 * scan_range_;
  auto inside = [&](const Position& p) {
    return std::abs(p.x - c.x) <= half && std::abs(p.y - c.y) <= half;
  };
  for (const auto& s : sites_) {
    if (!inside(s.pos))
      throw std::invalid_argument("layout: site " + std::to_string(s.id) + " lies outside the scan range");
  }
  if (!inside(reservoir_pos_)) throw std::invalid_argument("layout: reservoir lies outside the scan range");
}

std::size_t ArrayLayout::index_of(int id) const {
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i].id == id) return i;
  }
  throw std::out_of_range("layout: no site with id " + std::to_string(id));
}

Position ArrayLayout::centroid() const {
  Position c;
  for (const auto& s : sites_) {
    c.x += s.pos.x;
    c.y += s.pos.y;
  }
  c.x /= static_cast<double>(sites_.size());
  c.y /= static_cast<double>(sites_.size());
  return c;
}

std::vector<std::size_t> ArrayLayout::indices_with_role(SiteRole role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i].role == role) out.push_back(i);
  }
  return out;
}

ArrayLayout paper_layout() {
  constexpr double kBasePitch = 7.9;
  constexpr double kPitch = 2.0 * kBasePitch;
  constexpr double kReservoirGap = 41.0;
  constexpr int kTargetColumns = 4;

  std::vector<TrapSite> sites;
  int id = 0;
  for (const auto& p : build_hex_grid(1, kPitch)) {
    sites.push_back({id++, p, SiteRole::Buffer});
  }
  const auto ring = build_hex_grid(1, kPitch);
  const double target_cx = kTargetColumns * kPitch;
  for (std::size_t i = 1; i < ring.size(); ++i) {
    sites.push_back({id++, {target_cx + ring[i].x, ring[i].y}, SiteRole::Target});
  }
  // nearest buffer trap to the reservoir is the hexagon vertex at (-pitch, 0)
  const Position reservoir{-kPitch - kReservoirGap, 0.0};

  std::map<std::string, std::string> meta{
      {"array_trap_depth_uK", "600"},
      {"reservoir_trap_depth_uK", "600"},
      {"transport_depth_reservoir_uK", "800"},
      {"transport_depth_buffer_uK", "1600"},
      {"array_waist_um", "2.0"},
      {"reservoir_waist_um", "14.6"},
      {"transport_waist_um", "2.2"},
  };
  return ArrayLayout(std::move(sites), kBasePitch, kPitch, reservoir, 250.0, std::move(meta));
}

ArrayLayout layout_preset(const std::string& name) {
  if (name == kPaperLayoutName) return paper_layout();
  throw std::invalid_argument("unknown layout preset '" + name + "'");
}

}  // namespace tweezer
