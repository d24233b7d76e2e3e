/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imucal/calibration.hpp"
#include "imucal/ec_codec.hpp"
#include "imucal/error.hpp"
#include "imucal/eval.hpp"
#include "imucal/io.hpp"
#include "imucal/synth.hpp"

namespace {

using namespace imucal;

int exit_code(Errc code) {
  switch (code) {
    case Errc::parse_error: return 3;
    case Errc::io_error: return 3;
    case Errc::insufficient_data: return 4;
    case Errc::underdetermined: return 5;
    case Errc::diverged: return 6;
    case Errc::missing_motion_data: return 7;
    case Errc::inconsistent_parity: return 8;
    case Errc::bad_config: return 9;
  }
  return 1;
}

struct CommonOpts {
  std::string config_path;
  std::string accel_source = "primary";
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig config;
  if (!opts.config_path.empty()) {
    config = load_config(opts.config_path);
  } else if (const char* env = std::getenv("IMUCAL_CONFIG"); env != nullptr && *env != '\0') {
    config = load_config(env);
  }
  if (opts.accel_source == "secondary")
    config.accel_source = AccelSource::secondary;
  else if (opts.accel_source != "primary")
    raise(Errc::bad_config, "accel source must be primary or secondary");
  return config;
}

LossModel parse_loss(const std::string& spec) {
  LossModel model;
  const auto first = spec.find(':');
  const std::string kind = spec.substr(0, first);
  if (kind == "iid") {
    if (first == std::string::npos) raise(Errc::bad_config, "expected iid:<p>");
    model.kind = LossModel::Kind::iid;
    model.p = std::stod(spec.substr(first + 1));
  } else if (kind == "burst") {
    const auto second = spec.find(':', first + 1);
    if (first == std::string::npos || second == std::string::npos)
      raise(Errc::bad_config, "expected burst:<len>:<p>");
    model.kind = LossModel::Kind::burst;
    model.burst_len = std::stoi(spec.substr(first + 1, second - first - 1));
    model.p = std::stod(spec.substr(second + 1));
  } else {
    raise(Errc::bad_config, "loss model must be iid:<p> or burst:<len>:<p>");
  }
  return model;
}

void print_result(const CalibrationResult& result) {
  std::cout << "k = " << result.k_selected << ", segments = " << result.segments_used
            << ", accel residual = " << format_double(result.accel_residual)
            << ", gyro residual = " << format_double(result.gyro_residual) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-position IMU intrinsic calibration toolkit"};
  app.require_subcommand(1);

  CommonOpts common;

  // calibrate
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Run the full calibration pipeline");
  std::string cal_input, cal_out, cal_report;
  calibrate_cmd->add_option("input", cal_input, "raw stream CSV")->required();
  calibrate_cmd->add_option("--config", common.config_path, "run configuration file");
  calibrate_cmd->add_option("--accel-source", common.accel_source, "primary or secondary");
  calibrate_cmd->add_option("--out", cal_out, "parameter file (.json or text)")->required();
  calibrate_cmd->add_option("--report", cal_report, "calibration report JSON");

  // apply
  auto* apply_cmd = app.add_subcommand("apply", "Correct a raw stream with a parameter file");
  std::string apply_input, apply_params, apply_out;
  apply_cmd->add_option("input", apply_input, "raw stream CSV")->required();
  apply_cmd->add_option("--params", apply_params, "parameter file")->required();
  apply_cmd->add_option("--accel-source", common.accel_source, "primary or secondary");
  apply_cmd->add_option("--out", apply_out, "corrected stream CSV")->required();

  // detect-static
  auto* detect_cmd = app.add_subcommand("detect-static", "Report detected static segments");
  std::string det_input, det_out;
  int det_k = 0;
  detect_cmd->add_option("input", det_input, "raw stream CSV")->required();
  detect_cmd->add_option("--config", common.config_path, "run configuration file");
  detect_cmd->add_option("--accel-source", common.accel_source, "primary or secondary");
  detect_cmd->add_option("--k", det_k, "fixed threshold factor (default: sweep and select)");
  detect_cmd->add_option("--out", det_out, "segment CSV")->required();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic calibration sequence");
  std::string sim_truth, sim_out;
  int sim_n = 37;
  std::uint64_t sim_seed = 1;
  GroundTruth truth;
  sim_cmd->add_option("--n", sim_n, "number of static poses")->capture_default_str();
  sim_cmd->add_option("--seed", sim_seed, "RNG seed")->capture_default_str();
  sim_cmd->add_option("--truth", sim_truth, "ground-truth parameter file (default identity)");
  sim_cmd->add_option("--rate", truth.sample_rate, "sample rate, Hz")->capture_default_str();
  sim_cmd->add_option("--gravity", truth.gravity, "gravity, m/s^2")->capture_default_str();
  sim_cmd->add_option("--accel-noise", truth.accel_noise_sigma, "accel noise sigma, m/s^2")
      ->capture_default_str();
  sim_cmd->add_option("--gyro-noise", truth.gyro_noise_sigma, "gyro noise sigma, rad/s")
      ->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "output stream CSV")->required();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Orientation-count truncation study");
  std::vector<std::string> eval_inputs;
  std::vector<int> eval_n;
  std::string eval_csv, eval_json;
  eval_cmd->add_option("inputs", eval_inputs, "raw stream CSVs")->required();
  eval_cmd->add_option("--n-values", eval_n, "effective orientation counts")
      ->required()
      ->delimiter(',');
  eval_cmd->add_option("--config", common.config_path, "run configuration file");
  eval_cmd->add_option("--accel-source", common.accel_source, "primary or secondary");
  eval_cmd->add_option("--out-csv", eval_csv, "report CSV");
  eval_cmd->add_option("--out-json", eval_json, "report JSON");

  // ec-encode / ec-channel / ec-decode
  auto* enc_cmd = app.add_subcommand("ec-encode", "Add XOR-window parity to a payload stream");
  std::string enc_input, enc_out;
  int ec_window = 4;
  enc_cmd->add_option("input", enc_input, "payload CSV")->required();
  enc_cmd->add_option("--window", ec_window, "parity window M")->capture_default_str();
  enc_cmd->add_option("--out", enc_out, "encoded CSV")->required();

  auto* chan_cmd = app.add_subcommand("ec-channel", "Drop packets per a loss model");
  std::string chan_input, chan_out, chan_loss = "iid:0";
  std::uint64_t chan_seed = 1;
  chan_cmd->add_option("input", chan_input, "encoded CSV")->required();
  chan_cmd->add_option("--loss", chan_loss, "iid:<p> or burst:<len>:<p>")
      ->capture_default_str();
  chan_cmd->add_option("--seed", chan_seed, "RNG seed")->capture_default_str();
  chan_cmd->add_option("--out", chan_out, "received CSV")->required();

  auto* dec_cmd = app.add_subcommand("ec-decode", "Reconstruct lost payloads");
  std::string dec_input, dec_out;
  dec_cmd->add_option("input", dec_input, "received CSV")->required();
  dec_cmd->add_option("--window", ec_window, "parity window M")->capture_default_str();
  dec_cmd->add_option("--out", dec_out, "recovered payload CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*calibrate_cmd) {
      const RunConfig config = resolve_config(common);
      const SampleStream stream = read_stream(cal_input, config.accel_source);
      const CalibrationResult result = calibrate(stream, config.detector, config.solver);
      save_params(cal_out, result.params);
      if (!cal_report.empty()) {
        std::ofstream report(cal_report);
        if (!report) raise(Errc::io_error, "cannot open '" + cal_report + "' for writing");
        report << result_to_json(result);
      }
      print_result(result);
    } else if (*apply_cmd) {
      const RunConfig config = resolve_config(common);
      const CalibrationParams params = load_params(apply_params);
      SampleStream stream = read_stream(apply_input, config.accel_source);
      for (Record& rec : stream.records) {
        if (config.accel_source == AccelSource::primary)
          rec.accel_primary = correct_accel(rec.accel_primary, params.accel);
        else
          rec.accel_secondary = correct_accel(rec.accel_secondary, params.accel);
        rec.gyro = correct_gyro(rec.gyro, params.gyro);
      }
      write_stream(apply_out, stream);
    } else if (*detect_cmd) {
      const RunConfig config = resolve_config(common);
      const SampleStream stream = read_stream(det_input, config.accel_source);
      std::vector<StaticSegment> segments;
      int k = det_k;
      if (det_k > 0) {
        segments = extract_segments(stream, det_k, baseline_variance(stream, config.detector),
                                    config.detector);
      } else {
        AccelParams init;
        init.scale.setConstant(config.solver.initial_accel_scale);
        const ThresholdSelection sel =
            select_threshold(stream, config.detector, [&](const std::vector<StaticSegment>& s) {
              return calibrate_accel(s, init, config.solver).second;
            });
        segments = sel.segments;
        k = sel.k;
      }
      write_segments_csv(det_out, segments, stream);
      std::cout << "k = " << k << ", segments = " << segments.size() << '\n';
    } else if (*sim_cmd) {
      if (!sim_truth.empty()) truth.params = load_params(sim_truth);
      const SampleStream stream = make_protocol_sequence(sim_n, truth, sim_seed);
      write_stream(sim_out, stream);
      std::cout << "poses = " << sim_n << ", samples = " << stream.size() << '\n';
    } else if (*eval_cmd) {
      const RunConfig config = resolve_config(common);
      std::vector<SampleStream> streams;
      streams.reserve(eval_inputs.size());
      for (const std::string& path : eval_inputs)
        streams.push_back(read_stream(path, config.accel_source));
      const EvalReport report =
          truncation_sweep(streams, eval_n, config.detector, config.solver);
      if (!eval_csv.empty()) write_eval_csv(eval_csv, report);
      if (!eval_json.empty()) write_eval_json(eval_json, report);
      for (const EvalMeanRow& row : report.means)
        std::cout << "n_eff = " << row.n_eff << ", runs = " << row.runs_ok
                  << ", gyro scale err = " << format_double(row.diffs.gyro_scale_pct)
                  << " %\n";
    } else if (*enc_cmd) {
      const auto payloads = read_payload_csv(enc_input);
      EcEncoder encoder(ec_window);
      std::vector<EcPacket> packets;
      packets.reserve(payloads.size());
      for (const auto& [index, payload] : payloads) {
        EcPacket pkt = encoder.encode_next(payload);
        if (pkt.packet_index != index)
          raise(Errc::parse_error, "payload indices must be contiguous from 0");
        packets.push_back(pkt);
      }
      write_ec_csv(enc_out, packets);
    } else if (*chan_cmd) {
      const auto packets = read_ec_csv(chan_input);
      const auto received = channel_simulate(packets, parse_loss(chan_loss), chan_seed);
      write_ec_csv(chan_out, received);
      std::cout << "kept " << received.size() << " of " << packets.size() << " packets\n";
    } else if (*dec_cmd) {
      const auto received = read_ec_csv(dec_input);
      const DecodeResult decoded = decode_stream(received, ec_window);
      std::vector<std::pair<std::int64_t, EcPayload>> payloads(decoded.payloads.begin(),
                                                               decoded.payloads.end());
      write_payload_csv(dec_out, payloads);
      std::cout << "recovered stream: " << decoded.payloads.size() << " payloads, "
                << decoded.unrecovered.size() << " unrecoverable\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
