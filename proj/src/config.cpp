#include "rasterfusion/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include "rasterfusion/errors.hpp"

namespace rasterfusion {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  char prev = 0;
  for (char c : key) {
    const bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '_';
    if (!word && c != '.') return false;
    if (c == '.' && prev == '.') return false;
    prev = c;
  }
  return true;
}

[[noreturn]] void fail(int line, const std::string& key, const std::string& what) {
  throw UsageError("config line " + std::to_string(line) + ", key '" + key + "': " + what);
}

class Entries {
 public:
  explicit Entries(std::map<std::string, Entry> m) : map_(std::move(m)) {}

  const Entry* find(const std::string& key) {
    const auto it = map_.find(key);
    if (it == map_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  const Entry& require(const std::string& key) {
    const Entry* e = find(key);
    if (!e) throw UsageError("config: missing required key '" + key + "'");
    return *e;
  }

  double real(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const Entry* e = fallback ? find(key) : &require(key);
    if (!e) return *fallback;
    double v = 0.0;
    const auto* end = e->value.data() + e->value.size();
    const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (e->value.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v)) {
      fail(e->line, key, "expected a number, got '" + e->value + "'");
    }
    return v;
  }

  std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
    const Entry* e = fallback ? find(key) : &require(key);
    if (!e) return *fallback;
    std::uint64_t v = 0;
    const auto* end = e->value.data() + e->value.size();
    const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (e->value.empty() || ec != std::errc{} || ptr != end) {
      fail(e->line, key, "expected a non-negative integer, got '" + e->value + "'");
    }
    return v;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const Entry* e = find(key);
    return e ? e->value : fallback;
  }

  const std::map<std::string, Entry>& all() const { return map_; }
  bool used(const std::string& key) const { return used_.count(key) != 0; }

 private:
  std::map<std::string, Entry> map_;
  std::set<std::string> used_;
};

}  // namespace

Channel RunConfig::target_channel() const {
  for (const auto& m : modalities) {
    if (m.name == target) return m.channel;
  }
  throw UsageError("config: target modality '" + target + "' is not assigned to a channel");
}

std::size_t RunConfig::ha_period() const {
  if (model.ha_period > 0) return model.ha_period;
  const auto per_day = static_cast<std::size_t>(86400 / window_length);
  return per_day == 0 ? 1 : per_day;
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  std::map<std::string, Entry> raw;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value', got '" +
                       line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      throw UsageError("config line " + std::to_string(line_no) + ": invalid key '" + key + "'");
    }
    if (const auto it = raw.find(key); it != raw.end()) {
      fail(line_no, key, "duplicate key (first set on line " + std::to_string(it->second.line) + ")");
    }
    raw[key] = {value, line_no};
  }

  Entries e(std::move(raw));
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.seed = e.integer("seed", 0);

  cfg.grid.lon_min = e.real("grid.lon_min");
  cfg.grid.lon_max = e.real("grid.lon_max");
  cfg.grid.lat_min = e.real("grid.lat_min");
  cfg.grid.lat_max = e.real("grid.lat_max");
  cfg.grid.rows = e.integer("grid.rows");
  cfg.grid.cols = e.integer("grid.cols");
  try {
    cfg.grid.validate();
  } catch (const DataError& err) {
    fail(e.require("grid.rows").line, "grid", err.what());
  }

  if (const Entry* start = e.find("window.start")) {
    const auto ts = parse_iso8601_utc(start->value);
    if (!ts) fail(start->line, "window.start", "expected an ISO-8601 UTC timestamp");
    cfg.window_start = *ts;
  }
  cfg.window_length = static_cast<std::int64_t>(e.integer("window.length"));
  if (cfg.window_length <= 0) fail(e.require("window.length").line, "window.length", "must be > 0");
  cfg.window_count = e.integer("window.count");
  if (cfg.window_count == 0) fail(e.require("window.count").line, "window.count", "must be >= 1");

  // modality.<name>.<field>
  std::map<std::string, ModalitySource> by_name;
  for (const auto& [key, entry] : e.all()) {
    if (key.rfind("modality.", 0) != 0) continue;
    const auto rest = key.substr(9);
    const auto dot = rest.find('.');
    if (dot == std::string::npos) fail(entry.line, key, "expected modality.<name>.<field>");
    auto& m = by_name[rest.substr(0, dot)];
    m.name = rest.substr(0, dot);
  }
  for (auto& [name, m] : by_name) {
    const std::string prefix = "modality." + name + ".";
    const Entry& src = e.require(prefix + "source");
    m.source = src.value;
    if (m.source.empty()) fail(src.line, prefix + "source", "empty source");
    const Entry& ch = e.require(prefix + "channel");
    try {
      m.channel = parse_channel(ch.value);
    } catch (const UsageError& err) {
      fail(ch.line, prefix + "channel", err.what());
    }
    m.line = ch.line;
    if (const Entry* agg = e.find(prefix + "aggregator")) {
      try {
        m.aggregator = parse_aggregator(agg->value);
      } catch (const UsageError& err) {
        fail(agg->line, prefix + "aggregator", err.what());
      }
    }
  }

  std::array<const ModalitySource*, 3> slots{};
  for (const auto& [name, m] : by_name) {
    auto& slot = slots[static_cast<std::size_t>(m.channel)];
    if (slot) {
      fail(m.line, "modality." + name + ".channel",
           "channel " + std::string(1, to_char(m.channel)) + " already assigned to modality '" +
               slot->name + "'");
    }
    slot = &m;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (!slots[i]) {
      throw UsageError(std::string("config: no modality assigned to channel ") + "RGB"[i] +
                       " (exactly three modalities are required)");
    }
    cfg.modalities.push_back(*slots[i]);
  }
  for (const auto& m : cfg.modalities) {
    if (m.synthetic() && m.name != "precipitation" && m.name != "congestion" && m.name != "tweets") {
      fail(m.line, "modality." + m.name + ".source",
           "synthetic sources exist only for precipitation, congestion and tweets");
    }
  }

  cfg.target = e.text("model.target", "congestion");
  bool target_found = false;
  for (const auto& m : cfg.modalities) target_found = target_found || m.name == cfg.target;
  if (!target_found) {
    fail(e.find("model.target") ? e.find("model.target")->line : 0, "model.target",
         "no modality named '" + cfg.target + "'");
  }

  auto& mc = cfg.model;
  mc.t_in = e.integer("model.t_in", mc.t_in);
  mc.t_out = e.integer("model.t_out", mc.t_out);
  mc.lr = e.real("model.lr", mc.lr);
  mc.epochs = e.integer("model.epochs", mc.epochs);
  mc.hidden = e.integer("model.hidden", mc.hidden);
  mc.var_lag = e.integer("model.var_lag", mc.var_lag);
  mc.ha_period = e.integer("model.ha_period", mc.ha_period);
  if (mc.t_in == 0 || mc.t_out == 0 || mc.t_out > mc.t_in) {
    fail(e.find("model.t_out") ? e.find("model.t_out")->line : 0, "model.t_out",
         "need 1 <= t_out <= t_in");
  }
  if (!(mc.lr >= 0.0)) fail(e.find("model.lr")->line, "model.lr", "must be >= 0");
  if (mc.hidden == 0) fail(e.find("model.hidden")->line, "model.hidden", "must be >= 1");
  if (mc.var_lag == 0 || mc.var_lag > mc.t_in) {
    fail(e.find("model.var_lag") ? e.find("model.var_lag")->line : 0, "model.var_lag",
         "need 1 <= var_lag <= t_in");
  }

  cfg.train_fraction = e.real("split.train_fraction", cfg.train_fraction);
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    fail(e.find("split.train_fraction")->line, "split.train_fraction", "must lie in (0, 1)");
  }
  const std::string mask = e.text("mask.policy", "road");
  if (mask == "road") {
    cfg.mask = MaskPolicy::Road;
  } else if (mask == "all") {
    cfg.mask = MaskPolicy::All;
  } else {
    fail(e.find("mask.policy")->line, "mask.policy", "expected 'road' or 'all'");
  }

  for (const auto& [key, entry] : e.all()) {
    if (!e.used(key)) fail(entry.line, key, "unknown key");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  return parse_config(in, path.parent_path());
}

}  // namespace rasterfusion
