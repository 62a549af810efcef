#include "ddc/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace ddc::io {

using nlohmann::json;

json to_json(const Interval& a) { return json::array({a.lo(), a.hi()}); }

json to_json(const IntervalVector& a) {
  return json{{"lo", a.lo()}, {"hi", a.hi()}};
}

json to_json(const IntervalMatrix& a) {
  json lo = json::array(), hi = json::array();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    json lr = json::array(), hr = json::array();
    for (std::size_t c = 0; c < a.cols(); ++c) {
      lr.push_back(a(r, c).lo());
      hr.push_back(a(r, c).hi());
    }
    lo.push_back(lr);
    hi.push_back(hr);
  }
  return json{{"lo", lo}, {"hi", hi}};
}

json to_json(const EnvelopeSet& env) {
  json recs = json::array();
  for (const auto& r : env.records) {
    json j{{"x", r.x}, {"C", to_json(r.C)}};
    j["sample"] = r.sample ? json(*r.sample) : json(nullptr);
    recs.push_back(j);
  }
  return json{{"layout", env.layout == Layout::Plain ? "plain" : "factored"}, {"records", recs}};
}

void write_dataset(std::ostream& os, const Dataset& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& p = data[i];
    json j{{"t", data.timestamps()[i]}, {"x", p.x}, {"xdot", p.xdot}, {"u", p.u}};
    if (!p.xdot_pad.empty()) j["xdot_pad"] = p.xdot_pad;
    os << j.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& is) {
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      DataPoint p;
      p.x = j.at("x").get<Vec>();
      p.xdot = j.at("xdot").get<Vec>();
      p.u = j.at("u").get<Vec>();
      if (j.contains("xdot_pad")) p.xdot_pad = j["xdot_pad"].get<Vec>();
      d.append(j.at("t").get<double>(), std::move(p));
    } catch (const std::exception& e) {
      throw IoError("io: dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return d;
}

void write_dataset_file(const std::string& path, const Dataset& data) {
  std::ofstream os(path);
  if (!os) throw IoError("io: cannot open " + path + " for writing");
  os.precision(17);
  write_dataset(os, data);
  if (!os) throw IoError("io: write to " + path + " failed");
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("io: cannot open " + path);
  return read_dataset(is);
}

}  // namespace ddc::io
