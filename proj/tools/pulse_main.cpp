// pulse: sparsity-aware spiking-CNN accelerator simulator.
//
// Subcommands:
//   profile    one-core profiling pass -> per-layer workload table
//   partition  split a neural-core budget across layers (water-filling)
//   run        full inference with cycle/throughput/resource reports
//   gen-random random manifest + weights + sample inputs at a given shape
//
// Exit codes: 0 ok, 2 validation/usage error, 3 I/O error, 4 oracle mismatch.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pulse/engine.hpp"
#include "pulse/manifest.hpp"
#include "pulse/model.hpp"
#include "pulse/oracle.hpp"
#include "pulse/partition.hpp"
#include "pulse/perf.hpp"
#include "pulse/testgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kReportFormatVersion = 1;

struct ProfileArgs {
  std::string manifest;
  std::vector<std::string> inputs;
  uint64_t seed = 0;
  uint32_t samples = 0;  // 0 = one per input
  std::string out_dir = ".";
  std::string format = "text";
};

struct PartitionArgs {
  std::string profile_file;
  uint32_t budget = 0;
  std::string out_dir = ".";
  std::string format = "text";
};

struct RunArgs {
  std::string manifest;
  std::string input;
  uint64_t seed = 0;
  bool oracle_check = false;
  std::string out_dir = ".";
  std::string format = "text";
};

struct GenArgs {
  std::string topology;
  uint32_t timesteps = 3;
  std::string beta = "0.15";
  uint32_t pop = 1;
  double weight_scale = 1.0;
  double sparsity_lo = 0.83;
  double sparsity_hi = 0.95;
  uint32_t inputs = 1;
  uint32_t nc = 1;
  uint32_t chunk = 1;
  double clock_mhz = 125.0;
  uint64_t seed = 0;
  std::string out_dir = ".";
};

void write_json(const fs::path& path, const json& doc) {
  pulse::save_text_file(path, doc.dump(2) + "\n");
}

std::vector<pulse::ImageTensor> load_inputs(const pulse::Model& model,
                                            const std::vector<std::string>& paths) {
  std::vector<pulse::ImageTensor> images;
  images.reserve(paths.size());
  for (const std::string& p : paths) {
    images.push_back(
        pulse::load_image(p, model.spec.in_c, model.spec.in_h, model.spec.in_w));
  }
  return images;
}

int do_profile(const ProfileArgs& args) {
  const pulse::Model model = pulse::load_manifest(args.manifest);
  const std::vector<pulse::ImageTensor> images = load_inputs(model, args.inputs);
  const pulse::WorkloadProfile profile =
      pulse::profile_workload(model.spec, model.weights, images, args.seed, args.samples);

  fs::create_directories(args.out_dir);
  write_json(fs::path(args.out_dir) / "profile.json", pulse::workload_profile_json(profile));
  pulse::save_text_file(fs::path(args.out_dir) / "profile.csv",
                        pulse::workload_profile_csv(profile));

  if (args.format == "json") {
    std::cout << pulse::workload_profile_json(profile).dump(2) << '\n';
  } else if (args.format == "csv") {
    std::cout << pulse::workload_profile_csv(profile);
  } else {
    std::cout << "profiled " << profile.topology << " over " << profile.samples
              << " sample(s), seed " << profile.seed << '\n'
              << pulse::workload_profile_text(profile);
  }
  return 0;
}

int do_partition(const PartitionArgs& args) {
  const pulse::WorkloadProfile profile =
      pulse::workload_profile_from_json(json::parse(pulse::load_text_file(args.profile_file)));
  const pulse::AllocationResult result = pulse::allocate(profile, args.budget);
  const json doc = pulse::allocation_json(profile, result, args.budget);

  fs::create_directories(args.out_dir);
  write_json(fs::path(args.out_dir) / "allocation.json", doc);

  if (args.format == "json") {
    std::cout << doc.dump(2) << '\n';
  } else {
    for (size_t i = 0; i < profile.rows.size(); ++i) {
      std::cout << profile.rows[i].name << ": nc_count=" << result.nc[i]
                << " (W=" << profile.rows[i].workload << ")\n";
    }
    std::cout << "used " << result.used_cores << " of " << args.budget
              << " cores; bottleneck " << profile.rows[result.bottleneck_row].name << " at "
              << result.bottleneck_workload << "/" << result.bottleneck_cores << " = "
              << result.bottleneck_value() << " work units per core\n";
  }
  return 0;
}

int do_run(const RunArgs& args) {
  const pulse::Model model = pulse::load_manifest(args.manifest);
  const pulse::ImageTensor image =
      pulse::load_image(args.input, model.spec.in_c, model.spec.in_h, model.spec.in_w);

  const pulse::RunResult run =
      pulse::run_network(model.spec, model.weights, model.hw, image, args.seed);
  const pulse::CycleReport cycles = pulse::estimate_cycles(model.spec, model.hw, run.counters);
  const pulse::ResourceReport resources = pulse::estimate_resources(model.spec, model.hw);

  bool oracle_match = true;
  std::string oracle_detail;
  if (args.oracle_check) {
    const pulse::OracleRun<pulse::FxpDatapath> ref =
        pulse::oracle_run<pulse::FxpDatapath>(model.spec, model.weights, image, args.seed);
    if (ref.input_spikes != run.input_spikes) {
      oracle_match = false;
      oracle_detail = "input spike trains differ";
    }
    for (size_t i = 0; oracle_match && i < run.layer_outputs.size(); ++i) {
      if (ref.layer_outputs[i] != run.layer_outputs[i]) {
        oracle_match = false;
        oracle_detail = "spike mismatch at layer " + std::to_string(i);
      }
    }
    if (oracle_match && (ref.predicted_class != run.predicted_class ||
                         ref.no_spike != run.no_spike)) {
      oracle_match = false;
      oracle_detail = "decoded prediction differs";
    }
  }

  json report{{"format_version", kReportFormatVersion},
              {"seed", args.seed},
              {"topology", pulse::render_topology(model.spec)},
              {"input", args.input},
              {"predicted_class", run.predicted_class},
              {"no_spike", run.no_spike},
              {"output_spikes", run.output_spike_counts},
              {"performance", pulse::cycle_report_json(cycles)},
              {"resources", pulse::resource_report_json(resources)}};
  if (args.oracle_check) {
    report["oracle_check"] = json{{"match", oracle_match}, {"detail", oracle_detail}};
  }

  fs::create_directories(args.out_dir);
  write_json(fs::path(args.out_dir) / "run_report.json", report);
  pulse::save_text_file(fs::path(args.out_dir) / "run_report.csv",
                        pulse::cycle_report_csv(cycles));
  std::string text = "predicted class: " + std::to_string(run.predicted_class) +
                     (run.no_spike ? " (no output spikes)" : "") + "\n" +
                     pulse::cycle_report_text(cycles);
  pulse::save_text_file(fs::path(args.out_dir) / "run_report.txt", text);

  if (args.format == "json") {
    std::cout << report.dump(2) << '\n';
  } else if (args.format == "csv") {
    std::cout << pulse::cycle_report_csv(cycles);
  } else {
    std::cout << text;
  }

  if (args.oracle_check && !oracle_match) {
    std::cerr << "error: oracle check failed: " << oracle_detail << '\n';
    return 4;
  }
  return 0;
}

int do_gen_random(const GenArgs& args) {
  pulse::Model model;
  model.spec = pulse::parse_topology(args.topology, args.pop);
  model.spec.timesteps = args.timesteps;
  model.spec.beta = pulse::encode(std::stod(args.beta));
  pulse::resolve_shapes(model.spec);
  pulse::validate_network(model.spec);
  model.weights = pulse::random_weights(model.spec, args.seed, args.weight_scale);
  model.hw = pulse::HardwareConfig::uniform(model.spec.layers.size(), args.nc, args.chunk);
  model.hw.clock_mhz = args.clock_mhz;
  pulse::validate_hardware(model.spec, model.hw);

  fs::create_directories(args.out_dir);
  const fs::path manifest_path = fs::path(args.out_dir) / "manifest.json";
  pulse::save_manifest(model, manifest_path, args.beta);
  for (uint32_t k = 0; k < args.inputs; ++k) {
    const pulse::ImageTensor img =
        pulse::random_image(model.spec.in_c, model.spec.in_h, model.spec.in_w,
                            args.seed + 1000 + k, args.sparsity_lo, args.sparsity_hi);
    pulse::save_image(fs::path(args.out_dir) / ("input_" + std::to_string(k) + ".bin"), img);
  }
  std::cout << "wrote " << manifest_path.string() << " and " << args.inputs
            << " input(s), seed " << args.seed << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pulse: sparsity-aware spiking-CNN accelerator simulator"};
  app.require_subcommand(1);

  const std::vector<std::string> formats{"json", "csv", "text"};

  ProfileArgs profile_args;
  CLI::App* profile = app.add_subcommand("profile", "profile per-layer workloads (one core per layer)");
  profile->add_option("--manifest", profile_args.manifest, "model manifest JSON")->required();
  profile->add_option("--input", profile_args.inputs, "sample input tensor (repeatable)")
      ->required();
  profile->add_option("--seed", profile_args.seed, "rate-coding seed (default 0)");
  profile->add_option("--samples", profile_args.samples,
                      "profiling runs; inputs are cycled (default: one per input)");
  profile->add_option("--out-dir", profile_args.out_dir, "report directory (default .)");
  profile->add_option("--format", profile_args.format, "stdout format")
      ->check(CLI::IsMember(formats));

  PartitionArgs partition_args;
  CLI::App* partition = app.add_subcommand("partition", "split a core budget across layers");
  partition->add_option("profile", partition_args.profile_file, "profile.json from `profile`")
      ->required();
  partition->add_option("--budget", partition_args.budget, "total neural cores")->required();
  partition->add_option("--out-dir", partition_args.out_dir, "report directory (default .)");
  partition->add_option("--format", partition_args.format, "stdout format")
      ->check(CLI::IsMember(formats));

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "run one inference and report cycles/throughput");
  run->add_option("--manifest", run_args.manifest, "model manifest JSON")->required();
  run->add_option("--input", run_args.input, "input tensor")->required();
  run->add_option("--seed", run_args.seed, "rate-coding seed (default 0)");
  run->add_flag("--oracle-check", run_args.oracle_check,
                "also run the dense reference simulator and fail on any bit mismatch");
  run->add_option("--out-dir", run_args.out_dir, "report directory (default .)");
  run->add_option("--format", run_args.format, "stdout format")->check(CLI::IsMember(formats));

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-random", "emit a random manifest + weights + inputs");
  gen->add_option("--topology", gen_args.topology, "e.g. 28x28-32C3-P2-10")->required();
  gen->add_option("--timesteps", gen_args.timesteps, "timesteps per inference (default 3)");
  gen->add_option("--beta", gen_args.beta, "leak factor as decimal string (default 0.15)");
  gen->add_option("--pop", gen_args.pop, "population neurons per class (default 1)");
  gen->add_option("--weight-scale", gen_args.weight_scale,
                  "weight range scale before 1/sqrt(fan_in) (default 1.0)");
  gen->add_option("--sparsity-lo", gen_args.sparsity_lo, "min input sparsity (default 0.83)");
  gen->add_option("--sparsity-hi", gen_args.sparsity_hi, "max input sparsity (default 0.95)");
  gen->add_option("--inputs", gen_args.inputs, "sample inputs to emit (default 1)");
  gen->add_option("--nc", gen_args.nc, "uniform nc_count (default 1)");
  gen->add_option("--chunk", gen_args.chunk, "uniform chunk_count (default 1)");
  gen->add_option("--clock", gen_args.clock_mhz, "clock in MHz (default 125)");
  gen->add_option("--seed", gen_args.seed, "generator seed (default 0)");
  gen->add_option("--out-dir", gen_args.out_dir, "output directory (default .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (profile->parsed()) return do_profile(profile_args);
    if (partition->parsed()) return do_partition(partition_args);
    if (run->parsed()) return do_run(run_args);
    if (gen->parsed()) return do_gen_random(gen_args);
  } catch (const pulse::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
