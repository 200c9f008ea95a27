// Copyright 2026 The isim-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "isimforge/bundle.hpp"
#include "isimforge/canonical_json.hpp"
#include "isimforge/dataset.hpp"
#include "isimforge/error.hpp"
#include "isimforge/fidelity.hpp"
#include "isimforge/isim.hpp"
#include "isimforge/parallel.hpp"
#include "isimforge/version.hpp"

namespace isimforge::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Bundles are sampled and written this many at a time to bound memory.
constexpr std::size_t kGenerateChunk = 512;

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::uint64_t random_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// Emits the run record that makes the invocation reproducible: tool
// version, seed, the output-affecting configuration and its digest, and
// the digest of the SCDKG involved.
void log_run(const CommonOptions& common, Io io, const std::string& command,
             const std::optional<std::uint64_t>& seed, const json& config,
             const std::string& scdkg_digest) {
  const json record = {{"command", command},
                       {"version", kVersion},
                       {"seed", seed ? json(*seed) : json(nullptr)},
                       {"config", config},
                       {"config_digest", sha256_hex(canonical_dump(config))},
                       {"scdkg_digest", scdkg_digest}};
  const auto line = canonical_dump(record);
  io.err << "run: " << line << '\n';
  if (common.log_file) {
    std::ofstream f(*common.log_file, std::ios::app);
    if (!f) throw IoError("cannot open log file " + common.log_file->string());
    f << line << '\n';
  }
}

// Reads a graph; any defect in the file is an input (exit 3) error.
Scdkg load_graph(const fs::path& path) {
  try {
    return load_scdkg(path);
  } catch (const IoError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

json sampler_json(const SamplerConfig& s) {
  return {{"max_objects", s.max_objects},
          {"max_iou", s.max_iou},
          {"max_retries", s.max_retries}};
}

void check_sampler_flags(ImageSize size, const SamplerConfig& s) {
  if (size.width < 32 || size.height < 32) {
    throw InvalidInput("image size must be at least 32x32");
  }
  if (s.max_objects == 0) throw InvalidInput("--max-objects must be >= 1");
  if (!(s.max_iou >= 0.0 && s.max_iou <= 1.0)) {
    throw InvalidInput("--max-iou must lie in [0, 1]");
  }
}

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  if (fs::exists(dir, ec) && !fs::is_directory(dir, ec)) {
    throw IoError("output path is not a directory: " + dir.string());
  }
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

bool has_xml_files(const fs::path& dir) {
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") return true;
  }
  return false;
}

Factors parse_factors(const std::vector<std::string>& names) {
  Factors f;
  for (const auto& n : names) {
    if (n == "aspect") f.aspect = true;
    else if (n == "scale") f.scale = true;
    else if (n == "location") f.location = true;
    else if (n == "p_id") f.p_id = true;
    else throw InvalidInput("unknown factor \"" + n + "\" (aspect, scale, location, p_id)");
  }
  return f;
}

Factors complement(Factors f) { return {!f.aspect, !f.scale, !f.location, !f.p_id}; }

std::vector<Layout> layouts_from_bundles(const fs::path& dir, std::size_t jobs) {
  const auto ids = list_bundles(dir);
  std::vector<Layout> layouts(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    const auto path = dir / (ids[i] + ".labels.json");
    json doc;
    try {
      doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
      throw IoError(path.string() + ": invalid JSON: " + e.what());
    }
    try {
      layouts[i] = layout_from_labels(doc);
    } catch (const InvalidInput& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  });
  return layouts;
}

// One character per cell, darker for larger probabilities.
std::string heat_cell(double p, double max_p) {
  static constexpr std::string_view ramp = " .:-=+*#%@";
  if (max_p <= 0.0) return " ";
  const auto level = static_cast<std::size_t>(
      std::min(1.0, p / max_p) * static_cast<double>(ramp.size() - 1) + 0.5);
  return std::string(1, ramp[level]);
}

}  // namespace

std::size_t default_jobs() {
  if (const char* env = std::getenv(kJobsEnv); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_fit(const FitOptions& o, const CommonOptions& common, Io io) {
  std::error_code ec;
  if (!fs::exists(o.annotations, ec)) {
    throw IoError("annotations path does not exist: " + o.annotations.string());
  }
  AnnotationFormat format = o.format;
  if (format == AnnotationFormat::kAuto) {
    format = fs::is_directory(o.annotations, ec) && has_xml_files(o.annotations)
                 ? AnnotationFormat::kVoc
                 : AnnotationFormat::kLabels;
  }
  if (format == AnnotationFormat::kVoc && !fs::is_directory(o.annotations, ec)) {
    throw InvalidInput("VOC annotations must be a directory: " + o.annotations.string());
  }
  const auto& c = o.config;
  const json config = {{"aspect_bins", c.aspect_bins},
                       {"scale_bins", c.scale_bins},
                       {"location_bins", {c.location_bins_x, c.location_bins_y}},
                       {"min_samples", c.min_samples},
                       {"smoothing", c.smoothing},
                       {"cooccurrence_prior", c.cooccurrence_prior},
                       {"format", format == AnnotationFormat::kVoc ? "voc" : "labels"}};

  DatasetSummary ds;
  try {
    ds = format == AnnotationFormat::kVoc ? load_voc_xml(o.annotations)
                                          : load_json_labels(o.annotations);
  } catch (const IoError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw IoError(e.what());
  }
  for (const auto& w : ds.warnings) io.err << "warning: " << w.source << ": " << w.message << '\n';
  for (const auto& e : ds.errors) io.err << "skipped: " << e.source << ": " << e.message << '\n';
  if (ds.annotation_count() == 0) {
    throw IoError("no annotations found under " + o.annotations.string());
  }

  const Scdkg g = fit_scdkg(ds, o.config);
  const auto digest = scdkg_digest(g);
  log_run(common, io, "fit", std::nullopt, config, digest);
  save_scdkg(g, o.out);

  if (common.json) {
    io.out << canonical_dump({{"scdkg", o.out.string()},
                              {"scdkg_digest", digest},
                              {"classes", g.class_count()},
                              {"images", ds.images.size()},
                              {"annotations", ds.annotation_count()},
                              {"warnings", ds.warnings.size()},
                              {"skipped_files", ds.errors.size()}},
                             2)
           << '\n';
  } else {
    io.out << "fitted " << g.class_count() << " classes from " << ds.images.size()
           << " images (" << ds.annotation_count() << " objects, " << ds.warnings.size()
           << " warnings, " << ds.errors.size() << " skipped files)\n"
           << "wrote " << o.out.string() << " (digest " << digest << ")\n";
  }
  return kExitOk;
}

int cmd_generate(const GenerateOptions& o, const CommonOptions& common, Io io) {
  if (o.count == 0) throw InvalidInput("--count must be >= 1");
  if (o.overwrite && o.resume) throw InvalidInput("--overwrite and --resume are exclusive");
  check_sampler_flags(o.image_size, o.sampler);
  ensure_output_dir(o.out_dir);
  const Scdkg g = load_graph(o.scdkg);
  const std::uint64_t seed = o.seed.value_or(random_seed());
  const auto digest = scdkg_digest(g);

  json config = sampler_json(o.sampler);
  config["seed"] = seed;
  config["count"] = o.count;
  config["image_size"] = {{"width", o.image_size.width}, {"height", o.image_size.height}};
  log_run(common, io, "generate", seed, config, digest);

  const auto policy = o.overwrite ? ExistingPolicy::kOverwrite
                      : o.resume  ? ExistingPolicy::kResume
                                  : ExistingPolicy::kFail;
  std::vector<Bundle> bundles;
  bundles.reserve(o.count);
  std::size_t objects = 0;
  for (std::size_t start = 0; start < o.count; start += kGenerateChunk) {
    const std::size_t n = std::min(kGenerateChunk, o.count - start);
    auto layouts = sample_batch(g, o.image_size, seed, n, o.sampler, common.jobs, start);
    std::vector<Bundle> chunk(n);
    parallel_for(n, common.jobs, [&](std::size_t i) {
      chunk[i] = write_bundle_files(layouts[i], o.out_dir, start + i, policy);
    });
    for (auto& b : chunk) {
      objects += b.layout.objects.size();
      bundles.push_back(std::move(b));
    }
  }
  update_manifest(o.out_dir, {digest, o.image_size, config}, bundles);

  if (common.json) {
    io.out << canonical_dump({{"out_dir", o.out_dir.string()},
                              {"bundles", bundles.size()},
                              {"objects", objects},
                              {"seed", seed},
                              {"scdkg_digest", digest}},
                             2)
           << '\n';
  } else {
    io.out << "wrote " << bundles.size() << " bundles (" << objects << " objects) to "
           << o.out_dir.string() << " with seed " << seed << '\n';
  }
  return kExitOk;
}

int cmd_validate(const ValidateOptions& o, const CommonOptions& common, Io io) {
  if (!(o.floor >= 0.0 && o.floor <= 1.0)) throw InvalidInput("--floor must lie in [0, 1]");
  const auto ids = list_bundles(o.bundle_dir);
  std::vector<VerifyReport> reports(ids.size());
  parallel_for(ids.size(), common.jobs, [&](std::size_t i) {
    reports[i] = verify_bundle(o.bundle_dir, ids[i], o.floor);
  });
  const auto failed = static_cast<std::size_t>(
      std::count_if(reports.begin(), reports.end(), [](const auto& r) { return !r.passed(); }));

  if (common.json) {
    json list = json::array();
    for (const auto& r : reports) {
      list.push_back({{"id", r.bundle_id},
                      {"passed", r.passed()},
                      {"acc_c", r.acc_c},
                      {"acc_n", r.acc_n},
                      {"sodi_consistent", r.sodi_consistent},
                      {"violations", r.violations},
                      {"notes", r.notes}});
    }
    io.out << canonical_dump({{"bundles", std::move(list)},
                              {"checked", reports.size()},
                              {"failed", failed}},
                             2)
           << '\n';
  } else {
    for (const auto& r : reports) {
      io.out << r.bundle_id << (r.passed() ? "  PASS" : "  FAIL") << "  acc_c=" << fixed(r.acc_c)
             << " acc_n=" << fixed(r.acc_n) << '\n';
      for (const auto& v : r.violations) io.out << "    violation: " << v << '\n';
      for (const auto& n : r.notes) io.out << "    note: " << n << '\n';
    }
    io.out << reports.size() - failed << " of " << reports.size() << " bundles passed\n";
  }
  if (reports.empty()) {
    io.err << "no bundles found in " << o.bundle_dir.string() << '\n';
    return kExitValidationFailed;
  }
  return failed == 0 ? kExitOk : kExitValidationFailed;
}

int cmd_fidelity(const FidelityOptions& o, const CommonOptions& common, Io io) {
  const bool from_bundles = o.bundle_dir.has_value();
  if (from_bundles == (o.sample > 0)) {
    throw InvalidInput("give exactly one of --bundles or --sample");
  }
  if (o.ablation_grid && from_bundles) {
    throw InvalidInput("--ablation-grid samples its own layouts; use --sample");
  }
  if (!from_bundles && o.sample < kMinFidelityLayouts) {
    throw InvalidInput("--sample must be at least " + std::to_string(kMinFidelityLayouts));
  }
  check_sampler_flags(o.image_size, o.sampler);
  const Factors disabled = parse_factors(o.disable);
  const Scdkg g = load_graph(o.scdkg);
  const auto digest = scdkg_digest(g);
  std::optional<std::uint64_t> seed;
  if (!from_bundles) seed = o.seed.value_or(random_seed());

  json config = sampler_json(o.sampler);
  config["source"] = from_bundles ? "bundles" : "sample";
  config["sample"] = o.sample;
  config["image_size"] = {{"width", o.image_size.width}, {"height", o.image_size.height}};
  config["disable"] = o.disable;
  config["ablation_grid"] = o.ablation_grid;
  log_run(common, io, "fidelity", seed, config, digest);

  if (o.ablation_grid) {
    std::vector<std::pair<AblationRow, FidelityReport>> rows;
    for (const auto& row : ablation_grid()) {
      const auto variant = ablate(g, complement(row.enabled));
      const auto layouts =
          sample_batch(variant, o.image_size, *seed, o.sample, o.sampler, common.jobs);
      rows.emplace_back(row, evaluate_fidelity(g, layouts, o.sampler.max_objects));
    }
    if (common.json) {
      json list = json::array();
      for (const auto& [row, r] : rows) {
        auto entry = fidelity_json(r, g.class_table);
        entry["row"] = row.index;
        entry["enabled"] = row.enabled.label();
        list.push_back(std::move(entry));
      }
      io.out << canonical_dump({{"rows", std::move(list)}}, 2) << '\n';
    } else {
      io.out << ablation_table(rows);
    }
    return kExitOk;
  }

  const auto layouts =
      from_bundles ? layouts_from_bundles(*o.bundle_dir, common.jobs)
                   : sample_batch(ablate(g, disabled), o.image_size, *seed, o.sample,
                                  o.sampler, common.jobs);
  for (const auto& l : layouts) {
    if (l.class_names != g.class_table.names()) {
      throw InvalidInput("bundles were generated from a graph with a different class table");
    }
  }
  const auto report = evaluate_fidelity(g, layouts, o.sampler.max_objects);
  if (common.json) {
    io.out << canonical_dump(fidelity_json(report, g.class_table), 2) << '\n';
  } else {
    io.out << fidelity_table(report, g.class_table);
  }
  return kExitOk;
}

int cmd_inspect(const InspectOptions& o, const CommonOptions& common, Io io) {
  const Scdkg g = load_graph(o.scdkg);
  const std::size_t m_count = g.class_count();
  const auto grays = gray_table(m_count);
  double mean_count = 0.0;
  for (std::size_t i = 0; i < g.p_in.bins(); ++i) {
    mean_count += g.p_in.probs()[i] * 0.5 * (g.p_in.edges()[i] + g.p_in.edges()[i + 1]);
  }

  if (common.json) {
    json classes = json::array();
    json p_id = json::array();
    for (std::size_t m = 0; m < m_count; ++m) {
      classes.push_back({{"class_id", m + 1},
                         {"class_name", g.class_table.names()[m]},
                         {"gray_value", grays[m]},
                         {"p_ic", g.p_ic.probs()[m]},
                         {"pooled_geometry", g.geometry[m] == g.geometry_all}});
      const auto row = g.p_id.row(m);
      p_id.push_back(std::vector<double>(row.begin(), row.end()));
    }
    io.out << canonical_dump({{"scdkg_digest", scdkg_digest(g)},
                              {"classes", std::move(classes)},
                              {"mean_objects_per_image", mean_count},
                              {"p_id", std::move(p_id)}},
                             2)
           << '\n';
    return kExitOk;
  }

  std::size_t name_width = 10;
  for (const auto& n : g.class_table.names()) name_width = std::max(name_width, n.size());
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  io.out << "SCDKG " << scdkg_digest(g) << '\n'
         << "classes: " << m_count << ", mean objects per image: " << fixed(mean_count, 2)
         << "\n\n"
         << " id  " << pad("class", name_width) << "  gray  p_ic    geometry\n";
  for (std::size_t m = 0; m < m_count; ++m) {
    char head[32];
    std::snprintf(head, sizeof head, "%3zu  ", m + 1);
    char gray[8];
    std::snprintf(gray, sizeof gray, "%4u", static_cast<unsigned>(grays[m]));
    io.out << head << pad(g.class_table.names()[m], name_width) << "  " << gray << "  "
           << fixed(g.p_ic.probs()[m]) << "  "
           << (g.geometry[m] == g.geometry_all ? "pooled" : "own") << '\n';
  }
  double max_p = 0.0;
  for (std::size_t r = 0; r < m_count; ++r)
    for (std::size_t c = 0; c < m_count; ++c) max_p = std::max(max_p, g.p_id(r, c));
  io.out << "\np_id (row = previous class, column = next class; ' ' low .. '@' "
         << fixed(max_p, 3) << ")\n";
  io.out << pad("", name_width + 2);
  for (std::size_t c = 0; c < m_count; ++c) io.out << (c + 1) % 10;
  io.out << '\n';
  for (std::size_t r = 0; r < m_count; ++r) {
    io.out << pad(g.class_table.names()[r], name_width) << " |";
    for (std::size_t c = 0; c < m_count; ++c) io.out << heat_cell(g.p_id(r, c), max_p);
    io.out << "|\n";
  }
  return kExitOk;
}

int run(const std::vector<std::string>& args, Io io) {
  CLI::App app{"Condition-bundle toolkit: fit a scene knowledge graph, sample layouts, "
               "export instance maps and prompts, and check them.",
               "isim_forge"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  CommonOptions common;
  std::optional<std::size_t> jobs;
  std::string log_file;
  app.add_flag("--json", common.json, "Machine-readable JSON on stdout");
  app.add_option("--jobs,-j", jobs,
                 std::string("Worker threads (default: $") + kJobsEnv + " or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--log", log_file, "Append the run record to this file");

  auto add_sampler = [](CLI::App* sub, ImageSize& size, SamplerConfig& s) {
    sub->add_option("--width", size.width, "Image width in pixels")->capture_default_str();
    sub->add_option("--height", size.height, "Image height in pixels")->capture_default_str();
    sub->add_option("--max-objects", s.max_objects, "Upper bound on objects per layout")
        ->capture_default_str();
    sub->add_option("--max-iou", s.max_iou,
                    "Same-class IoU above which geometry is redrawn (0 disables)")
        ->capture_default_str();
    sub->add_option("--max-retries", s.max_retries, "Redraws per object before accepting")
        ->capture_default_str();
  };

  FitOptions fit;
  std::string format = "auto";
  auto* fit_cmd = app.add_subcommand("fit", "Fit an SCDKG from annotations");
  fit_cmd->add_option("annotations", fit.annotations,
                      "VOC XML directory, labels JSON file, or directory of *.labels.json")
      ->required();
  fit_cmd->add_option("-o,--out", fit.out, "Output SCDKG file")->required();
  fit_cmd->add_option("--format", format, "Annotation format")
      ->check(CLI::IsMember({"auto", "voc", "labels"}))
      ->capture_default_str();
  fit_cmd->add_option("--aspect-bins", fit.config.aspect_bins)->capture_default_str();
  fit_cmd->add_option("--scale-bins", fit.config.scale_bins)->capture_default_str();
  fit_cmd->add_option("--location-bins-x", fit.config.location_bins_x)->capture_default_str();
  fit_cmd->add_option("--location-bins-y", fit.config.location_bins_y)->capture_default_str();
  fit_cmd->add_option("--min-samples", fit.config.min_samples,
                      "Classes with fewer objects use pooled geometry")
      ->capture_default_str();

  GenerateOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "Sample layouts and export condition bundles");
  gen_cmd->add_option("--scdkg", gen.scdkg, "SCDKG file")->required();
  gen_cmd->add_option("-o,--out", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("-n,--count", gen.count, "Number of bundles")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Base seed (random and logged when omitted)");
  add_sampler(gen_cmd, gen.image_size, gen.sampler);
  auto* overwrite = gen_cmd->add_flag("--overwrite", gen.overwrite, "Rewrite existing bundles");
  gen_cmd->add_flag("--resume", gen.resume, "Keep existing bundles and add missing ones")
      ->excludes(overwrite);

  ValidateOptions val;
  auto* val_cmd = app.add_subcommand("validate", "Verify every bundle in a directory");
  val_cmd->add_option("bundle_dir", val.bundle_dir, "Bundle directory")->required();
  val_cmd->add_option("--floor", val.floor, "Minimum acc_c and acc_n per bundle")
      ->capture_default_str();

  FidelityOptions fid;
  std::string bundles_dir;
  auto* fid_cmd = app.add_subcommand("fidelity", "Compare layouts against an SCDKG");
  fid_cmd->add_option("--scdkg", fid.scdkg, "SCDKG file")->required();
  auto* bundles_opt = fid_cmd->add_option("--bundles", bundles_dir, "Evaluate exported bundles");
  fid_cmd->add_option("--sample", fid.sample, "Evaluate this many freshly sampled layouts")
      ->excludes(bundles_opt);
  fid_cmd->add_option("--seed", fid.seed, "Base seed for --sample");
  fid_cmd->add_option("--disable", fid.disable,
                      "Ablate factors before sampling: aspect, scale, location, p_id")
      ->delimiter(',');
  fid_cmd->add_flag("--ablation-grid", fid.ablation_grid,
                    "Evaluate the nine-row factor grid (needs --sample)");
  add_sampler(fid_cmd, fid.image_size, fid.sampler);

  InspectOptions ins;
  auto* ins_cmd = app.add_subcommand("inspect", "Print class table, gray table and p_id");
  ins_cmd->add_option("scdkg", ins.scdkg, "SCDKG file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, io.out, io.err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  common.jobs = jobs.value_or(default_jobs());
  if (!log_file.empty()) common.log_file = log_file;
  if (!bundles_dir.empty()) fid.bundle_dir = bundles_dir;
  fit.format = format == "voc"      ? AnnotationFormat::kVoc
               : format == "labels" ? AnnotationFormat::kLabels
                                    : AnnotationFormat::kAuto;

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, common, io);
    if (gen_cmd->parsed()) return cmd_generate(gen, common, io);
    if (val_cmd->parsed()) return cmd_validate(val, common, io);
    if (fid_cmd->parsed()) return cmd_fidelity(fid, common, io);
    if (ins_cmd->parsed()) return cmd_inspect(ins, common, io);
  } catch (const IoError& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const InvalidInput& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace isimforge::cli
