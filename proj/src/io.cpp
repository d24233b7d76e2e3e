/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "imucal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imucal/error.hpp"

namespace imucal {

using nlohmann::json;

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view token, const std::string& where) {
  double value = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
    raise(Errc::parse_error, where + ": bad number '" + std::string(token) + "'");
  if (!std::isfinite(value)) raise(Errc::parse_error, where + ": non-finite value");
  return value;
}

std::int64_t parse_index(std::string_view token, const std::string& where) {
  std::int64_t value = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size() || value < 0)
    raise(Errc::parse_error, where + ": bad packet index '" + std::string(token) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot open '" + path + "' for writing");
  return out;
}

constexpr std::string_view stream_header = "packet_index,t,ax1,ay1,az1,ax2,ay2,az2,gx,gy,gz";

struct UnitHeader {
  std::string accel = "m/s^2";
  std::string gyro = "rad/s";
  double rate_hz = 0.0;
  std::string device = "unknown";
};

UnitHeader parse_unit_header(const std::string& line, const std::string& path) {
  constexpr std::string_view prefix = "# units:";
  if (line.rfind(prefix, 0) != 0)
    raise(Errc::parse_error, path + ":2: unit header mismatch, expected a '# units:' line");
  UnitHeader units;
  std::istringstream body(line.substr(prefix.size()));
  std::string token;
  bool saw_t = false;
  while (body >> token) {
    const std::size_t eq = token.find('=');
    if (eq == std::string::npos)
      raise(Errc::parse_error, path + ":2: malformed unit token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "t") {
      if (value != "s") raise(Errc::parse_error, path + ":2: unit header mismatch, t must be s");
      saw_t = true;
    } else if (key == "accel") {
      if (value != "m/s^2" && value != "lsb")
        raise(Errc::parse_error, path + ":2: unit header mismatch, accel must be m/s^2 or lsb");
      units.accel = value;
    } else if (key == "gyro") {
      if (value != "rad/s" && value != "lsb")
        raise(Errc::parse_error, path + ":2: unit header mismatch, gyro must be rad/s or lsb");
      units.gyro = value;
    } else if (key == "rate_hz") {
      units.rate_hz = parse_double(value, path + ":2");
    } else if (key == "device") {
      units.device = value;
    } else {
      raise(Errc::parse_error, path + ":2: unknown unit key '" + key + "'");
    }
  }
  if (!saw_t || units.rate_hz <= 0.0)
    raise(Errc::parse_error, path + ":2: unit header must declare t=s and rate_hz");
  return units;
}

EcPayload parse_hex_payload(std::string_view token, const std::string& where) {
  if (token.size() != 12) raise(Errc::parse_error, where + ": payload must be 12 hex chars");
  EcPayload payload{};
  for (std::size_t i = 0; i < payload.size(); ++i) {
    unsigned byte = 0;
    const auto res = std::from_chars(token.data() + 2 * i, token.data() + 2 * i + 2, byte, 16);
    if (res.ec != std::errc{} || res.ptr != token.data() + 2 * i + 2)
      raise(Errc::parse_error, where + ": bad hex '" + std::string(token) + "'");
    payload[i] = static_cast<std::uint8_t>(byte);
  }
  return payload;
}

std::string hex_payload(const EcPayload& payload) {
  static const char digits[] = "0123456789abcdef";
  std::string out(12, '0');
  for (std::size_t i = 0; i < payload.size(); ++i) {
    out[2 * i] = digits[payload[i] >> 4];
    out[2 * i + 1] = digits[payload[i] & 0xf];
  }
  return out;
}

}  // namespace

SampleStream read_stream(const std::string& path, AccelSource source) {
  std::ifstream in = open_input(path);
  std::string line;

  if (!std::getline(in, line) || line != stream_header)
    raise(Errc::parse_error, path + ":1: header mismatch, expected '" +
                                 std::string(stream_header) + "'");
  if (!std::getline(in, line)) raise(Errc::parse_error, path + ":2: missing unit header");
  const UnitHeader units = parse_unit_header(line, path);

  SampleStream stream;
  stream.sample_rate = units.rate_hz;
  stream.device_id = units.device;
  stream.accel_unit = units.accel;
  stream.gyro_unit = units.gyro;
  stream.accel_source = source;

  std::int64_t line_no = 2;
  std::int64_t last_index = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto fields = split(line, ',');
    if (fields.size() != 11)
      raise(Errc::parse_error, where + ": expected 11 fields, got " +
                                   std::to_string(fields.size()));
    Record rec;
    rec.packet_index = parse_index(fields[0], where);
    if (rec.packet_index <= last_index)
      raise(Errc::parse_error, where + ": non-monotonic packet_index " +
                                   std::to_string(rec.packet_index));
    last_index = rec.packet_index;
    rec.timestamp = parse_double(fields[1], where);
    for (int a = 0; a < 3; ++a) rec.accel_primary(a) = parse_double(fields[2 + a], where);
    for (int a = 0; a < 3; ++a) rec.accel_secondary(a) = parse_double(fields[5 + a], where);
    for (int a = 0; a < 3; ++a) rec.gyro(a) = parse_double(fields[8 + a], where);
    stream.records.push_back(rec);
  }
  return stream;
}

void write_stream(const std::string& path, const SampleStream& stream) {
  std::ofstream out = open_output(path);
  out << stream_header << '\n';
  out << "# units: t=s accel=" << stream.accel_unit << " gyro=" << stream.gyro_unit
      << " rate_hz=" << format_double(stream.sample_rate) << " device=" << stream.device_id
      << '\n';
  for (const Record& rec : stream.records) {
    out << rec.packet_index << ',' << format_double(rec.timestamp);
    for (int a = 0; a < 3; ++a) out << ',' << format_double(rec.accel_primary(a));
    for (int a = 0; a < 3; ++a) out << ',' << format_double(rec.accel_secondary(a));
    for (int a = 0; a < 3; ++a) out << ',' << format_double(rec.gyro(a));
    out << '\n';
  }
}

namespace {

// Pointer-to-member tables get unwieldy with nested Eigen members, so the
// parameter file is described as explicit accessor pairs instead.
struct ParamField {
  const char* key;
  double& (*ref)(CalibrationParams&);
};

template <int I>
double& accel_mis(CalibrationParams& p) { return p.accel.misalignment(I); }
template <int I>
double& accel_scale(CalibrationParams& p) { return p.accel.scale(I); }
template <int I>
double& accel_bias(CalibrationParams& p) { return p.accel.bias(I); }
template <int I>
double& gyro_mis(CalibrationParams& p) { return p.gyro.misalignment(I); }
template <int I>
double& gyro_scale(CalibrationParams& p) { return p.gyro.scale(I); }
template <int I>
double& gyro_bias(CalibrationParams& p) { return p.gyro.bias(I); }

constexpr ParamField param_fields[] = {
    {"accel.misalignment.yz", accel_mis<0>},
    {"accel.misalignment.zy", accel_mis<1>},
    {"accel.misalignment.zx", accel_mis<2>},
    {"accel.scale.x", accel_scale<0>},
    {"accel.scale.y", accel_scale<1>},
    {"accel.scale.z", accel_scale<2>},
    {"accel.bias.x", accel_bias<0>},
    {"accel.bias.y", accel_bias<1>},
    {"accel.bias.z", accel_bias<2>},
    {"gyro.misalignment.yz", gyro_mis<0>},
    {"gyro.misalignment.zy", gyro_mis<1>},
    {"gyro.misalignment.xz", gyro_mis<2>},
    {"gyro.misalignment.zx", gyro_mis<3>},
    {"gyro.misalignment.xy", gyro_mis<4>},
    {"gyro.misalignment.yx", gyro_mis<5>},
    {"gyro.scale.x", gyro_scale<0>},
    {"gyro.scale.y", gyro_scale<1>},
    {"gyro.scale.z", gyro_scale<2>},
    {"gyro.bias.x", gyro_bias<0>},
    {"gyro.bias.y", gyro_bias<1>},
    {"gyro.bias.z", gyro_bias<2>},
};

bool has_extension(const std::string& path, std::string_view ext) {
  return path.size() >= ext.size() &&
         path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
}

std::pair<std::string, std::string> split_key_value(const std::string& line,
                                                    const std::string& where) {
  const std::size_t eq = line.find('=');
  if (eq == std::string::npos)
    raise(Errc::parse_error, where + ": expected 'key = value'");
  auto trim = [](std::string s) {
    const auto from = s.find_first_not_of(" \t");
    const auto to = s.find_last_not_of(" \t");
    return from == std::string::npos ? std::string() : s.substr(from, to - from + 1);
  };
  return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

}  // namespace

std::string params_to_text(const CalibrationParams& params) {
  CalibrationParams copy = params;
  std::ostringstream out;
  for (const ParamField& field : param_fields)
    out << field.key << " = " << format_double(field.ref(copy)) << '\n';
  return out.str();
}

std::string params_to_json(const CalibrationParams& params) {
  CalibrationParams copy = params;
  json root;
  for (const ParamField& field : param_fields) {
    json* node = &root;
    std::string key = field.key;
    std::size_t dot;
    while ((dot = key.find('.')) != std::string::npos) {
      node = &(*node)[key.substr(0, dot)];
      key = key.substr(dot + 1);
    }
    (*node)[key] = field.ref(copy);
  }
  return root.dump(2) + "\n";
}

void save_params(const std::string& path, const CalibrationParams& params) {
  std::ofstream out = open_output(path);
  out << (has_extension(path, ".json") ? params_to_json(params) : params_to_text(params));
}

CalibrationParams load_params(const std::string& path) {
  std::ifstream in = open_input(path);
  CalibrationParams params;
  std::vector<bool> seen(std::size(param_fields), false);

  auto assign = [&](const std::string& key, double value, const std::string& where) {
    for (std::size_t i = 0; i < std::size(param_fields); ++i) {
      if (key == param_fields[i].key) {
        param_fields[i].ref(params) = value;
        seen[i] = true;
        return;
      }
    }
    raise(Errc::parse_error, where + ": unknown parameter key '" + key + "'");
  };

  if (has_extension(path, ".json")) {
    json root;
    try {
      in >> root;
    } catch (const json::exception& e) {
      raise(Errc::parse_error, path + ": " + e.what());
    }
    for (std::size_t i = 0; i < std::size(param_fields); ++i) {
      const json* node = &root;
      std::string key = param_fields[i].key;
      std::size_t dot;
      while ((dot = key.find('.')) != std::string::npos) {
        auto it = node->find(key.substr(0, dot));
        if (it == node->end())
          raise(Errc::parse_error, path + ": missing parameter '" +
                                       std::string(param_fields[i].key) + "'");
        node = &*it;
        key = key.substr(dot + 1);
      }
      auto it = node->find(key);
      if (it == node->end() || !it->is_number())
        raise(Errc::parse_error,
              path + ": missing parameter '" + std::string(param_fields[i].key) + "'");
      assign(param_fields[i].key, it->get<double>(), path);
    }
    return params;
  }

  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto [key, value] = split_key_value(line, where);
    assign(key, parse_double(value, where), where);
  }
  for (std::size_t i = 0; i < std::size(param_fields); ++i)
    if (!seen[i])
      raise(Errc::parse_error,
            path + ": missing parameter '" + std::string(param_fields[i].key) + "'");
  return params;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in = open_input(path);
  RunConfig config;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto [key, value] = split_key_value(line, where);

    auto as_int = [&]() { return static_cast<int>(parse_double(value, where)); };
    if (key == "detector.window_halfwidth") config.detector.window_halfwidth = parse_double(value, where);
    else if (key == "detector.k_max") config.detector.k_max = as_int();
    else if (key == "detector.min_segment_duration") config.detector.min_segment_duration = parse_double(value, where);
    else if (key == "detector.init_phase_duration") config.detector.init_phase_duration = parse_double(value, where);
    else if (key == "detector.direction_angle_threshold_deg") config.detector.direction_angle_threshold_deg = parse_double(value, where);
    else if (key == "detector.required_min_segments") config.detector.required_min_segments = as_int();
    else if (key == "detector.variance_floor") config.detector.variance_floor = parse_double(value, where);
    else if (key == "solver.max_iterations") config.solver.max_iterations = as_int();
    else if (key == "solver.gradient_tolerance") config.solver.gradient_tolerance = parse_double(value, where);
    else if (key == "solver.parameter_tolerance") config.solver.parameter_tolerance = parse_double(value, where);
    else if (key == "solver.initial_damping") config.solver.initial_damping = parse_double(value, where);
    else if (key == "solver.gravity_magnitude") config.solver.gravity_magnitude = parse_double(value, where);
    else if (key == "solver.initial_accel_scale") config.solver.initial_accel_scale = parse_double(value, where);
    else if (key == "solver.initial_gyro_scale") config.solver.initial_gyro_scale = parse_double(value, where);
    else if (key == "solver.integration_method") {
      if (value == "rk4") config.solver.integration_method = IntegrationMethod::rk4;
      else if (value == "euler") config.solver.integration_method = IntegrationMethod::euler;
      else raise(Errc::bad_config, where + ": integration_method must be rk4 or euler");
    } else if (key == "accel_source") {
      if (value == "primary") config.accel_source = AccelSource::primary;
      else if (value == "secondary") config.accel_source = AccelSource::secondary;
      else raise(Errc::bad_config, where + ": accel_source must be primary or secondary");
    } else if (key == "ec_window") {
      config.ec_window = as_int();
    } else {
      raise(Errc::bad_config, where + ": unknown config key '" + key + "'");
    }
  }
  return config;
}

std::vector<std::pair<std::int64_t, EcPayload>> read_payload_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || line != "packet_index,payload")
    raise(Errc::parse_error, path + ":1: expected header 'packet_index,payload'");
  std::vector<std::pair<std::int64_t, EcPayload>> out;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto fields = split(line, ',');
    if (fields.size() != 2) raise(Errc::parse_error, where + ": expected 2 fields");
    out.emplace_back(parse_index(fields[0], where), parse_hex_payload(fields[1], where));
  }
  return out;
}

void write_payload_csv(const std::string& path,
                       const std::vector<std::pair<std::int64_t, EcPayload>>& payloads) {
  std::ofstream out = open_output(path);
  out << "packet_index,payload\n";
  for (const auto& [index, payload] : payloads)
    out << index << ',' << hex_payload(payload) << '\n';
}

std::vector<EcPacket> read_ec_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || line != "packet_index,payload,parity")
    raise(Errc::parse_error, path + ":1: expected header 'packet_index,payload,parity'");
  std::vector<EcPacket> out;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto fields = split(line, ',');
    if (fields.size() != 3) raise(Errc::parse_error, where + ": expected 3 fields");
    EcPacket pkt;
    pkt.packet_index = parse_index(fields[0], where);
    pkt.payload = parse_hex_payload(fields[1], where);
    pkt.parity = parse_hex_payload(fields[2], where);
    out.push_back(pkt);
  }
  return out;
}

void write_ec_csv(const std::string& path, const std::vector<EcPacket>& packets) {
  std::ofstream out = open_output(path);
  out << "packet_index,payload,parity\n";
  for (const EcPacket& pkt : packets)
    out << pkt.packet_index << ',' << hex_payload(pkt.payload) << ',' << hex_payload(pkt.parity)
        << '\n';
}

void write_segments_csv(const std::string& path, const std::vector<StaticSegment>& segments,
                        const SampleStream& stream) {
  std::ofstream out = open_output(path);
  out << "start_index,end_index,start_t,end_t,duration,mean_ax,mean_ay,mean_az\n";
  for (const StaticSegment& seg : segments) {
    out << seg.start_index << ',' << seg.end_index << ','
        << format_double(stream.records[static_cast<std::size_t>(seg.start_index)].timestamp)
        << ','
        << format_double(stream.records[static_cast<std::size_t>(seg.end_index - 1)].timestamp)
        << ',' << format_double(seg.duration) << ',' << format_double(seg.mean_accel.x()) << ','
        << format_double(seg.mean_accel.y()) << ',' << format_double(seg.mean_accel.z()) << '\n';
  }
}

namespace {

void append_subset_rows(std::ostream& out, int n_eff, const std::string& run,
                        const SubsetDiffs& d) {
  out << n_eff << ',' << run << ",accel_bias," << format_double(d.accel_bias_mg) << ",mg\n";
  out << n_eff << ',' << run << ",accel_scale," << format_double(d.accel_scale_pct)
      << ",percent\n";
  out << n_eff << ',' << run << ",accel_misalignment,"
      << format_double(d.accel_misalignment_deg) << ",deg\n";
  out << n_eff << ',' << run << ",gyro_scale," << format_double(d.gyro_scale_pct)
      << ",percent\n";
  out << n_eff << ',' << run << ",gyro_misalignment," << format_double(d.gyro_misalignment_deg)
      << ",deg\n";
}

json diffs_to_json(const SubsetDiffs& d) {
  return json{{"accel_bias_mg", d.accel_bias_mg},
              {"accel_scale_pct", d.accel_scale_pct},
              {"accel_misalignment_deg", d.accel_misalignment_deg},
              {"gyro_scale_pct", d.gyro_scale_pct},
              {"gyro_misalignment_deg", d.gyro_misalignment_deg}};
}

}  // namespace

void write_eval_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out = open_output(path);
  out << "n_eff,run_id,subset,value,unit\n";
  for (const EvalCell& cell : report.cells)
    if (cell.diffs) append_subset_rows(out, cell.n_eff, std::to_string(cell.run_id), *cell.diffs);
  for (const EvalMeanRow& row : report.means)
    if (row.runs_ok > 0) append_subset_rows(out, row.n_eff, "mean", row.diffs);
}

void write_eval_json(const std::string& path, const EvalReport& report) {
  json root;
  root["n_values"] = report.n_values;
  root["cells"] = json::array();
  for (const EvalCell& cell : report.cells) {
    json c{{"n_eff", cell.n_eff}, {"run_id", cell.run_id}, {"ok", cell.diffs.has_value()}};
    if (cell.diffs)
      c["diffs"] = diffs_to_json(*cell.diffs);
    else
      c["error"] = cell.error;
    root["cells"].push_back(std::move(c));
  }
  root["means"] = json::array();
  for (const EvalMeanRow& row : report.means) {
    json m{{"n_eff", row.n_eff}, {"runs_ok", row.runs_ok}};
    if (row.runs_ok > 0) m["diffs"] = diffs_to_json(row.diffs);
    root["means"].push_back(std::move(m));
  }
  std::ofstream out = open_output(path);
  out << root.dump(2) << '\n';
}

std::string result_to_json(const CalibrationResult& result) {
  json root;
  root["k_selected"] = result.k_selected;
  root["segments_used"] = result.segments_used;
  root["accel_residual"] = result.accel_residual;
  root["gyro_residual"] = result.gyro_residual;
  root["accel_converged"] = result.accel_converged;
  root["gyro_converged"] = result.gyro_converged;
  root["params"] = json::parse(params_to_json(result.params));
  return root.dump(2) + "\n";
}

}  // namespace imucal
