#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sasim/error.hpp"
#include "sasim/io.hpp"

namespace sasim::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& source, const std::string& path, const std::string& what) {
  throw Error(kind, source + ": " + path + ": " + what);
}

class Reader {
 public:
  Reader(const std::string& source) : source_(source) {}

  [[noreturn]] void bad(const std::string& path, const std::string& what) const {
    fail(ErrorKind::case_parse, source_, path, what);
  }

  const json& object(const json& j, const std::string& path) const {
    if (!j.is_object()) bad(path, "expected an object");
    return j;
  }

  const json& array(const json& parent, const std::string& path, const char* key, bool required) const {
    static const json empty = json::array();
    if (!parent.contains(key)) {
      if (required) bad(path + key, "missing required array");
      return empty;
    }
    const json& j = parent.at(key);
    if (!j.is_array()) bad(path + key, "expected an array");
    return j;
  }

  void allow_only(const json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
    for (const auto& [k, _] : obj.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        bad(path + "." + k, "unknown field");
      }
    }
  }

  double number(const json& obj, const std::string& path, const char* key, std::optional<double> def = {}) const {
    const std::string p = path + "." + key;
    if (!obj.contains(key)) {
      if (def) return *def;
      bad(p, "missing required number");
    }
    const json& v = obj.at(key);
    if (!v.is_number()) bad(p, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad(p, "value is not finite");
    return d;
  }

  int integer(const json& obj, const std::string& path, const char* key) const {
    const std::string p = path + "." + key;
    if (!obj.contains(key)) bad(p, "missing required integer");
    const json& v = obj.at(key);
    if (!v.is_number_integer()) bad(p, "expected an integer");
    return v.get<int>();
  }

  std::array<double, 4> shares(const json& obj, const std::string& path, const char* key) const {
    const std::string p = path + "." + key;
    if (!obj.contains(key)) return {1.0, 0.0, 0.0, 0.0};
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 4) bad(p, "expected four shares [Z, I, P, motor]");
    std::array<double, 4> out{};
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (!v[i].is_number()) bad(p + "[" + std::to_string(i) + "]", "expected a number");
      out[i] = v[i].get<double>();
      if (!(out[i] >= 0.0 && out[i] <= 1.0)) bad(p + "[" + std::to_string(i) + "]", "share outside [0, 1]");
      sum += out[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg << "shares sum to " << sum << ", expected 1";
      bad(p, msg.str());
    }
    return out;
  }

 private:
  std::string source_;
};

std::string item(const char* array, std::size_t i) { return std::string(array) + "[" + std::to_string(i) + "]"; }

}  // namespace

double power_flow_mismatch(const Case& c) {
  const std::size_t n = c.bus_count();
  const auto v = c.power_flow_voltages();
  std::vector<Complex> yv(n, Complex{});
  for (const auto& br : c.branches) {
    const Complex y = 1.0 / Complex(br.r, br.x);
    const Complex half_b(0.0, 0.5 * br.b);
    const double t = br.tap;
    yv[br.from] += (y + half_b) / (t * t) * v[br.from] - y / t * v[br.to];
    yv[br.to] += (y + half_b) * v[br.to] - y / t * v[br.from];
  }
  std::vector<Complex> s(n, Complex{});
  for (const auto& g : c.generators) s[g.params.bus] += Complex(g.p, g.q);
  for (const auto& l : c.loads) s[l.zip.bus] -= Complex(l.zip.p0, l.zip.q0);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(v[i] * std::conj(yv[i]) - s[i]));
  return worst;
}

Case parse_case(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::case_parse, source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                           ": syntax error: " + e.what());
  }

  const Reader rd(source);
  rd.object(doc, "$");
  rd.allow_only(doc, "$", {"format_version", "name", "base_mva", "frequency_hz", "buses", "branches", "generators",
                           "loads", "motors", "notes"});
  if (!doc.contains("format_version")) rd.bad("$.format_version", "missing");
  if (!doc["format_version"].is_number_integer() || doc["format_version"].get<int>() != kCaseFormatVersion) {
    rd.bad("$.format_version", "unsupported version (expected " + std::to_string(kCaseFormatVersion) + ")");
  }

  Case c;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) rd.bad("$.name", "expected a string");
    c.name = doc["name"].get<std::string>();
  }
  c.base_mva = rd.number(doc, "$", "base_mva", 100.0);
  c.frequency_hz = rd.number(doc, "$", "frequency_hz", 60.0);
  if (!(c.base_mva > 0)) rd.bad("$.base_mva", "must be > 0");
  if (!(c.frequency_hz > 0)) rd.bad("$.frequency_hz", "must be > 0");
  const double omega_s = 2.0 * std::numbers::pi * c.frequency_hz;

  std::map<int, std::size_t> bus_of;
  const json& buses = rd.array(doc, "$.", "buses", true);
  if (buses.empty()) rd.bad("$.buses", "case has no buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string p = "$." + item("buses", i);
    const json& b = rd.object(buses[i], p);
    rd.allow_only(b, p, {"id", "base_kv", "vm", "va_deg"});
    Bus bus;
    bus.id = rd.integer(b, p, "id");
    bus.base_kv = rd.number(b, p, "base_kv", 0.0);
    bus.vm = rd.number(b, p, "vm");
    bus.va = rd.number(b, p, "va_deg") * std::numbers::pi / 180.0;
    if (!(bus.vm > 0)) rd.bad(p + ".vm", "must be > 0");
    if (!bus_of.emplace(bus.id, i).second) rd.bad(p + ".id", "duplicate bus id " + std::to_string(bus.id));
    c.buses.push_back(bus);
  }

  auto bus_ref = [&](const json& obj, const std::string& p, const char* key) {
    const int id = rd.integer(obj, p, key);
    const auto it = bus_of.find(id);
    if (it == bus_of.end()) fail(ErrorKind::case_reference, source, p + "." + key, "unknown bus id " + std::to_string(id));
    return it->second;
  };

  const json& branches = rd.array(doc, "$.", "branches", true);
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string p = "$." + item("branches", i);
    const json& b = rd.object(branches[i], p);
    rd.allow_only(b, p, {"from", "to", "r", "x", "b", "tap"});
    Branch br;
    br.from = bus_ref(b, p, "from");
    br.to = bus_ref(b, p, "to");
    br.r = rd.number(b, p, "r");
    br.x = rd.number(b, p, "x");
    br.b = rd.number(b, p, "b", 0.0);
    br.tap = rd.number(b, p, "tap", 1.0);
    if (br.from == br.to) rd.bad(p, "branch connects a bus to itself");
    if (br.r == 0.0 && br.x == 0.0) rd.bad(p, "zero series impedance");
    if (!(br.tap > 0)) rd.bad(p + ".tap", "must be > 0");
    c.branches.push_back(br);
  }

  const json& gens = rd.array(doc, "$.", "generators", false);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const std::string p = "$." + item("generators", i);
    const json& g = rd.object(gens[i], p);
    rd.allow_only(g, p, {"bus", "p", "q", "xd", "xd1", "xd2", "xq", "xq1", "xq2", "td01", "td02", "tq01", "tq02", "h",
                         "d", "ra", "ka", "te", "r", "tg"});
    GeneratorRecord rec;
    auto& gp = rec.params;
    gp.bus = bus_ref(g, p, "bus");
    rec.p = rd.number(g, p, "p");
    rec.q = rd.number(g, p, "q");
    gp.xd = rd.number(g, p, "xd");
    gp.xd1 = rd.number(g, p, "xd1");
    gp.xd2 = rd.number(g, p, "xd2");
    gp.xq = rd.number(g, p, "xq");
    gp.xq1 = rd.number(g, p, "xq1");
    gp.xq2 = rd.number(g, p, "xq2");
    gp.td01 = rd.number(g, p, "td01");
    gp.td02 = rd.number(g, p, "td02");
    gp.tq01 = rd.number(g, p, "tq01");
    gp.tq02 = rd.number(g, p, "tq02");
    gp.h = rd.number(g, p, "h");
    gp.d = rd.number(g, p, "d", 0.0);
    gp.ra = rd.number(g, p, "ra", 0.0);
    gp.ka = rd.number(g, p, "ka", 20.0);
    gp.te = rd.number(g, p, "te", 0.05);
    gp.droop = rd.number(g, p, "r", 0.05);
    gp.tg = rd.number(g, p, "tg", 0.5);
    gp.omega_s = omega_s;
    try {
      gp.validate();
    } catch (const Error& e) {
      rd.bad(p, e.what());
    }
    c.generators.push_back(rec);
  }

  const json& loads = rd.array(doc, "$.", "loads", false);
  std::set<std::size_t> load_buses;
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const std::string p = "$." + item("loads", i);
    const json& l = rd.object(loads[i], p);
    rd.allow_only(l, p, {"bus", "p", "q", "zip"});
    LoadRecord rec;
    auto& z = rec.zip;
    z.bus = bus_ref(l, p, "bus");
    if (!load_buses.insert(z.bus).second) rd.bad(p + ".bus", "more than one load at this bus");
    z.p0 = rd.number(l, p, "p");
    z.q0 = rd.number(l, p, "q");
    if (l.contains("zip")) {
      const json& zip = rd.object(l.at("zip"), p + ".zip");
      rd.allow_only(zip, p + ".zip", {"p", "q"});
      z.p_share = rd.shares(zip, p + ".zip", "p");
      z.q_share = rd.shares(zip, p + ".zip", "q");
    }
    z.v0 = std::polar(c.buses[z.bus].vm, c.buses[z.bus].va);
    c.loads.push_back(rec);
  }

  const json& motors = rd.array(doc, "$.", "motors", false);
  for (std::size_t i = 0; i < motors.size(); ++i) {
    const std::string p = "$." + item("motors", i);
    const json& m = rd.object(motors[i], p);
    rd.allow_only(m, p, {"bus", "h", "rs", "rr", "xs", "xs1", "xr", "f1", "f2", "lambda1", "lambda2"});
    MotorRecord rec;
    auto& mp = rec.params;
    mp.bus = bus_ref(m, p, "bus");
    mp.h = rd.number(m, p, "h");
    mp.rs = rd.number(m, p, "rs");
    mp.rr = rd.number(m, p, "rr");
    mp.xs = rd.number(m, p, "xs");
    mp.xs1 = rd.number(m, p, "xs1");
    mp.xr = rd.number(m, p, "xr");
    mp.f1 = rd.number(m, p, "f1", 0.0);
    mp.f2 = rd.number(m, p, "f2", 1.0);
    mp.lambda1 = rd.number(m, p, "lambda1", 0.0);
    mp.lambda2 = rd.number(m, p, "lambda2", 2.0);
    mp.omega_s = omega_s;
    try {
      mp.validate();
    } catch (const Error& e) {
      rd.bad(p, e.what());
    }
    const auto ld = std::find_if(c.loads.begin(), c.loads.end(), [&](const LoadRecord& l) { return l.zip.bus == mp.bus; });
    if (ld == c.loads.end() || !(ld->zip.p_share[3] > 0.0)) {
      fail(ErrorKind::case_reference, source, p + ".bus", "no load with a motor share at this bus");
    }
    c.motors.push_back(rec);
  }
  for (std::size_t i = 0; i < c.loads.size(); ++i) {
    const auto& z = c.loads[i].zip;
    const bool has_motor = std::any_of(c.motors.begin(), c.motors.end(), [&](const MotorRecord& m) { return m.params.bus == z.bus; });
    if ((z.p_share[3] > 0.0 || z.q_share[3] > 0.0) && !has_motor) {
      fail(ErrorKind::case_reference, source, "$." + item("loads", i) + ".zip", "motor share without a motor at the bus");
    }
  }

  const double mismatch = power_flow_mismatch(c);
  if (mismatch > 1e-6) {
    std::ostringstream msg;
    msg << "power-flow solution mismatch " << mismatch << " pu exceeds 1e-6";
    fail(ErrorKind::case_mismatch, source, "$.buses", msg.str());
  }
  return c;
}

Case load_case(const std::filesystem::path& path) { return parse_case(read_text(path), path.string()); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace sasim::io
