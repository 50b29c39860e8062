#include "tweezer/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace tweezer {

namespace pt = boost::property_tree;

SuccessDefinition parse_success_definition(const std::string& text) {
  if (text == "first" || text == "first-achievement") return SuccessDefinition::FirstAchievement;
  if (text == "maintained") return SuccessDefinition::Maintained;
  throw std::invalid_argument("unknown success definition '" + text + "' (expected first|maintained)");
}

std::string to_string(SuccessDefinition d) {
  return d == SuccessDefinition::FirstAchievement ? "first" : "maintained";
}

CiMethod parse_ci_method(const std::string& text) {
  if (text == "normal") return CiMethod::Normal;
  if (text == "wilson") return CiMethod::Wilson;
  throw std::invalid_argument("unknown interval method '" + text + "' (expected normal|wilson)");
}

std::string to_string(CiMethod m) { return m == CiMethod::Normal ? "normal" : "wilson"; }

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void ExperimentConfig::resolve() {
  models.extraction.p_blockade =
      p_blockade.value_or(ExtractionModel::blockade_for_plateau(p_blockade_plateau,
                                                                models.extraction.mean_ensemble_at_full));
}

void ExperimentConfig::validate() const {
  if (replicas < 1) throw std::invalid_argument("invalid config key 'experiment.replicas': must be >= 1");
  if (cycles < 1) throw std::invalid_argument("invalid config key 'experiment.cycles': must be >= 1");
  if (threads < 0) throw std::invalid_argument("invalid config key 'experiment.threads': must be >= 0");
  if (!(p_blockade_plateau >= 0.0 && p_blockade_plateau <= 1.0))
    throw std::invalid_argument("invalid config key 'stochastic.p_blockade_plateau': must be in [0, 1]");
  models.validate();
}

namespace {

double parse_number(const std::string& key, const std::string& text) {
  std::string t = text;
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
  std::size_t start = 0;
  while (start < t.size() && std::isspace(static_cast<unsigned char>(t[start]))) ++start;
  t = t.substr(start);
  if (t == "inf" || t == "+inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid config key '" + key + "': '" + text + "' is not a number");
  }
}

std::vector<std::string> split_fields(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t a = item.find_first_not_of(" \t");
    std::size_t b = item.find_last_not_of(" \t");
    out.push_back(a == std::string::npos ? std::string{} : item.substr(a, b - a + 1));
  }
  return out;
}

Position parse_position(const std::string& key, const std::string& text) {
  const auto f = split_fields(text);
  if (f.size() != 2) throw std::invalid_argument("invalid config key '" + key + "': expected 'x, y'");
  return {parse_number(key, f[0]), parse_number(key, f[1])};
}

long long parse_integer(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (!std::isfinite(v) || v != std::floor(v))
    throw std::invalid_argument("invalid config key '" + key + "': '" + text + "' is not an integer");
  return static_cast<long long>(v);
}

struct InlineLayout {
  std::vector<TrapSite> sites;
  std::optional<double> base_pitch, effective_pitch, scan_range;
  std::optional<Position> reservoir;
};

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }

  ExperimentConfig c;
  auto& m = c.models;
  InlineLayout inline_layout;
  std::string preset;

  using Setter = void (*)(ExperimentConfig&, const std::string&, const std::string&);
  static const std::map<std::string, Setter> setters = {
      {"experiment.replicas", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.replicas = static_cast<int>(parse_integer(k, v));
       }},
      {"experiment.cycles", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.cycles = static_cast<int>(parse_integer(k, v));
       }},
      {"experiment.seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         try {
           std::size_t used = 0;
           c.seed = std::stoull(v, &used);
           if (used != v.size()) throw std::invalid_argument("trailing");
         } catch (const std::exception&) {
           throw std::invalid_argument("invalid config key '" + k + "': '" + v + "' is not an unsigned integer");
         }
       }},
      {"experiment.threads", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.threads = static_cast<int>(parse_integer(k, v));
       }},
      {"experiment.success_definition", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.success = parse_success_definition(v);
       }},
      {"experiment.confidence_interval", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.ci = parse_ci_method(v);
       }},
      {"stochastic.lifetime_array_s", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.loss.lifetime_array = parse_number(k, v);
       }},
      {"stochastic.lifetime_reservoir_s", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.loss.lifetime_reservoir = parse_number(k, v);
       }},
      {"stochastic.p_transport", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.transport.p_success = parse_number(k, v);
       }},
      {"stochastic.p_blockade_plateau", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.p_blockade_plateau = parse_number(k, v);
       }},
      {"stochastic.p_blockade", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.p_blockade = parse_number(k, v);
       }},
      {"stochastic.mean_ensemble_at_full", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.extraction.mean_ensemble_at_full = parse_number(k, v);
       }},
      {"stochastic.n_reference", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.extraction.n_reference = parse_number(k, v);
       }},
      {"stochastic.reservoir_mean", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.reservoir_mean = parse_number(k, v);
       }},
      {"stochastic.refill_rate", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.refill_rate = parse_number(k, v);
       }},
      {"stochastic.transport_failure", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.models.transport_failure = parse_transport_failure(v);
       }},
      {"timing.t_mot", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.timing.t_mot = parse_number(k, v);
       }},
      {"timing.t_molasses", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.timing.t_molasses = parse_number(k, v);
       }},
      {"timing.t_reservoir_transfer", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.timing.t_reservoir_transfer = parse_number(k, v);
       }},
      {"timing.t_image", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.timing.t_image = parse_number(k, v);
       }},
      {"timing.image_loss_window", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.timing.image_loss_window = parse_number(k, v);
       }},
      {"timing.t_analysis_fill", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.timing.t_analysis_fill = parse_number(k, v);
       }},
      {"timing.t_buffer_refill", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.timing.t_buffer_refill = parse_number(k, v);
       }},
      {"timing.t_ramp", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.transport.t_ramp = parse_number(k, v);
       }},
      {"timing.t_move", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.transport.t_move = parse_number(k, v);
       }},
      {"planner.strategy", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.models.planner.strategy = parse_fill_strategy(v);
       }},
      {"planner.move_duration", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.models.planner.duration = parse_move_duration(v);
       }},
      {"planner.speed_um_per_s", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.models.planner.speed_um_per_s = parse_number(k, v);
       }},
  };

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw std::invalid_argument("config: key '" + section + "' must live inside a [section]");
    for (const auto& [name, leaf] : body) {
      const std::string key = section + "." + name;
      const std::string value = leaf.data();
      if (section == "layout") {
        try {
          if (name == "preset") {
            preset = value;
          } else if (name == "base_pitch") {
            inline_layout.base_pitch = parse_number(key, value);
          } else if (name == "effective_pitch") {
            inline_layout.effective_pitch = parse_number(key, value);
          } else if (name == "scan_range") {
            inline_layout.scan_range = parse_number(key, value);
          } else if (name == "reservoir") {
            inline_layout.reservoir = parse_position(key, value);
          } else if (name.rfind("site_", 0) == 0) {
            const int id = static_cast<int>(parse_integer(key, name.substr(5)));
            const auto f = split_fields(value);
            if (f.size() != 3) throw std::invalid_argument("invalid config key '" + key + "': expected 'x, y, role'");
            inline_layout.sites.push_back({id, {parse_number(key, f[0]), parse_number(key, f[1])}, parse_site_role(f[2])});
          } else {
            throw std::invalid_argument("unknown config key '" + key + "'");
          }
        } catch (const std::invalid_argument& e) {
          const std::string msg = e.what();
          if (msg.find(key) != std::string::npos) throw;
          throw std::invalid_argument("invalid config key '" + key + "': " + msg);
        }
        continue;
      }
      const auto it = setters.find(key);
      if (it == setters.end()) throw std::invalid_argument("unknown config key '" + key + "'");
      try {
        it->second(c, key, value);
      } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        if (msg.find(key) != std::string::npos) throw;
        throw std::invalid_argument("invalid config key '" + key + "': " + msg);
      }
    }
  }

  const bool has_inline = !inline_layout.sites.empty();
  if (has_inline) {
    if (!preset.empty() && preset != "inline")
      throw std::invalid_argument("invalid config key 'layout.preset': inline sites given with preset '" + preset + "'");
    if (!inline_layout.base_pitch || !inline_layout.effective_pitch || !inline_layout.scan_range ||
        !inline_layout.reservoir)
      throw std::invalid_argument(
          "invalid config key 'layout': inline layouts need base_pitch, effective_pitch, scan_range and reservoir");
    try {
      m.layout = ArrayLayout(inline_layout.sites, *inline_layout.base_pitch, *inline_layout.effective_pitch,
                             *inline_layout.reservoir, *inline_layout.scan_range);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string("invalid config key 'layout': ") + e.what());
    }
    c.layout_name = "inline";
  } else {
    if (preset == "inline") throw std::invalid_argument("invalid config key 'layout.preset': inline without sites");
    if (!preset.empty()) {
      try {
        m.layout = layout_preset(preset);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("invalid config key 'layout.preset': ") + e.what());
      }
      c.layout_name = preset;
    }
  }

  c.resolve();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string write_config(const ExperimentConfig& c) {
  const auto& m = c.models;
  std::ostringstream out;
  auto kv = [&](const std::string& k, const std::string& v) { out << k << " = " << v << "\n"; };
  auto num = [&](const std::string& k, double v) { kv(k, format_double(v)); };

  out << "[experiment]\n";
  kv("replicas", std::to_string(c.replicas));
  kv("cycles", std::to_string(c.cycles));
  kv("seed", std::to_string(c.seed));
  kv("threads", std::to_string(c.threads));
  kv("success_definition", to_string(c.success));
  kv("confidence_interval", to_string(c.ci));

  out << "\n[layout]\n";
  if (c.layout_name == "inline") {
    kv("preset", "inline");
    num("base_pitch", m.layout.base_pitch());
    num("effective_pitch", m.layout.effective_pitch());
    num("scan_range", m.layout.scan_range());
    kv("reservoir", format_double(m.layout.reservoir_pos().x) + ", " + format_double(m.layout.reservoir_pos().y));
    for (const auto& s : m.layout.sites()) {
      kv("site_" + std::to_string(s.id),
         format_double(s.pos.x) + ", " + format_double(s.pos.y) + ", " + to_string(s.role));
    }
  } else {
    kv("preset", c.layout_name);
  }

  out << "\n[stochastic]\n";
  num("lifetime_array_s", m.loss.lifetime_array);
  num("lifetime_reservoir_s", m.loss.lifetime_reservoir);
  num("p_transport", m.transport.p_success);
  num("p_blockade_plateau", c.p_blockade_plateau);
  if (c.p_blockade) num("p_blockade", *c.p_blockade);
  num("mean_ensemble_at_full", m.extraction.mean_ensemble_at_full);
  num("n_reference", m.extraction.n_reference);
  num("reservoir_mean", m.reservoir_mean);
  num("refill_rate", m.refill_rate);
  kv("transport_failure", to_string(m.transport_failure));

  out << "\n[timing]\n";
  num("t_mot", m.timing.t_mot);
  num("t_molasses", m.timing.t_molasses);
  num("t_reservoir_transfer", m.timing.t_reservoir_transfer);
  num("t_image", m.timing.t_image);
  num("image_loss_window", m.timing.image_loss_time());
  num("t_analysis_fill", m.timing.t_analysis_fill);
  num("t_buffer_refill", m.timing.t_buffer_refill);
  num("t_ramp", m.transport.t_ramp);
  num("t_move", m.transport.t_move);

  out << "\n[planner]\n";
  kv("strategy", to_string(m.planner.strategy));
  kv("move_duration", to_string(m.planner.duration));
  num("speed_um_per_s", m.planner.speed_um_per_s);
  return out.str();
}

}  // namespace tweezer
