// Copyright 2026 The simtrace Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point. Exit codes: 0 success, 1 domain error, 2 usage error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "simtrace/annotation.hpp"
#include "simtrace/evolution.hpp"
#include "simtrace/lm_bridge.hpp"
#include "simtrace/metrics.hpp"
#include "simtrace/optimizer.hpp"
#include "simtrace/parallel.hpp"
#include "simtrace/query.hpp"
#include "simtrace/reward.hpp"
#include "simtrace/scenes.hpp"
#include "simtrace/trace_io.hpp"

namespace fs = std::filesystem;
using namespace simtrace;

namespace {

constexpr const char* kDefaultG0 = "DETECT seed WHERE exists_object(o, dynamic, speed(o) > 100000)";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    write_text_file(out, text.back() == '\n' ? text : text + "\n");
  }
}

Action parse_action(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("--action expects x,y,r numbers, got '" + text + "'");
    }
  }
  if (v.size() != 3) throw UsageError("--action expects x,y,r, got '" + text + "'");
  return Action{{v[0], v[1]}, v[2]};
}

struct SceneArgs {
  std::string scene_file;
  std::string template_id;
  std::uint64_t variant = 0;
  std::string params;

  void add(CLI::App* cmd) {
    cmd->add_option("--scene", scene_file, "Scene JSON file");
    cmd->add_option("--template", template_id, "Scene template id (instead of --scene)");
    cmd->add_option("--variant", variant, "Template variant seed")->capture_default_str();
    cmd->add_option("--params", params, "Template parameter overrides as a JSON object");
  }

  Scene load() const {
    if (!scene_file.empty() && !template_id.empty()) throw UsageError("give either --scene or --template, not both");
    if (!scene_file.empty()) return parse_scene(read_text_file(scene_file));
    if (template_id.empty()) throw UsageError("a scene is required: --scene FILE or --template ID");
    SceneTemplate spec{template_id, Json::object(), variant};
    if (!params.empty()) spec.parameters = parse_json_text(params);
    return build_scene(spec);
  }
};

SimConfig load_sim(const std::string& path, int frames) {
  SimConfig c = path.empty() ? SimConfig{} : sim_config_from_json(parse_json_text(read_text_file(path)));
  if (frames > 0) c.timestep_count = frames;
  c.validate();
  return c;
}

PatternLibrary load_library_opt(const std::string& path) { return path.empty() ? PatternLibrary{} : load_library(path); }

std::vector<fs::path> json_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir);
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Trace> load_traces(const std::string& dir) {
  std::vector<Trace> out;
  for (const fs::path& p : json_files(dir)) out.push_back(load_trace(p));
  if (out.size() < 2) throw Error("need at least two traces in " + dir);
  return out;
}

std::size_t jobs_or_default(std::size_t jobs) { return jobs == 0 ? default_jobs() : jobs; }

struct EvolveArgs {
  EvolutionConfig config;
  FitnessOptions fitness;
  std::string g0_file;
  std::string backend = "mock";

  void add(CLI::App* cmd) {
    cmd->add_option("--islands", config.islands, "Number of islands")->capture_default_str();
    cmd->add_option("--prompt-size", config.prompt_size, "Parents per mutation request")->capture_default_str();
    cmd->add_option("--reset-period", config.reset_period, "Iterations between island resets")->capture_default_str();
    cmd->add_option("--budget", config.budget, "Mutation budget per label")->capture_default_str();
    cmd->add_option("--delta", config.delta, "Acceptance threshold on fitness")->capture_default_str();
    cmd->add_option("--temperature", config.temperature, "Island sampling temperature")->capture_default_str();
    cmd->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    cmd->add_option("--bins", fitness.bins, "Histogram bins")->capture_default_str();
    cmd->add_option("--samples", fitness.samples, "Resampling points for trace distance")->capture_default_str();
    cmd->add_flag("--directional", fitness.directional, "One-sided cross entropy for pattern distance");
    cmd->add_option("--g0", g0_file, "Initial detector source file (default: a never-firing detector)");
    cmd->add_option("--backend", backend, "mock, mock:<transcript.json> or http")->capture_default_str();
  }

  DetectorProgram g0() const { return parse_detector(g0_file.empty() ? kDefaultG0 : read_text_file(g0_file)); }
};

// ---------------------------------------------------------------- commands

int run_simulate(const SceneArgs& sa, const std::string& action_text, bool use_solution, std::uint64_t seed,
                 const std::string& config, int frames, const std::string& out, const std::string& scene_out) {
  Scene scene = sa.load();
  const SimConfig sim = load_sim(config, frames);
  if (!scene_out.empty()) emit(serialize_scene(scene), scene_out);
  Action action;
  if (use_solution) {
    if (!action_text.empty()) throw UsageError("give either --action or --solution");
    std::optional<Action> sol = scene.solution ? scene.solution : find_solution(scene, sim, seed);
    if (!sol) throw Error("no solving action found for this scene");
    action = *sol;
  } else {
    if (action_text.empty()) throw UsageError("--action x,y,r or --solution is required");
    action = parse_action(action_text);
  }
  emit(serialize_trace(simulate(scene, action, sim)), out);
  return 0;
}

int run_annotate(const std::vector<std::string>& traces, const std::string& library_path, const std::string& out,
                 const std::string& out_dir, bool strict, bool render, std::size_t jobs) {
  if (traces.size() > 1 && out_dir.empty()) throw UsageError("several --trace files need --out-dir");
  const PatternLibrary library = load_library_opt(library_path);
  AnnotateOptions opts;
  opts.strict = strict;
  auto results = parallel_map<std::pair<AnnotationMatrix, std::string>>(
      traces.size(), jobs_or_default(jobs), [&](std::size_t i) {
        const Trace trace = load_trace(traces[i]);
        AnnotationMatrix m = annotate(trace, library, opts);
        std::string text = render ? render_annotations(m, library) : canonical_dump(ast_to_json(m, traces[i])) + "\n";
        return std::make_pair(std::move(m), std::move(text));
      });
  for (std::size_t i = 0; i < traces.size(); ++i) {
    for (const std::string& w : results[i].first.warnings) std::cerr << "warning: " << traces[i] << ": " << w << '\n';
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      const std::string name = fs::path(traces[i]).stem().string() + (render ? ".txt" : ".ast.json");
      write_text_file(fs::path(out_dir) / name, results[i].second);
    } else if (render && results[i].second.empty()) {
      if (!out.empty() && out != "-") write_text_file(out, "");
    } else {
      emit(results[i].second, out);
    }
  }
  return 0;
}

int run_metrics(const std::string& ta, const std::string& tb, const std::string& aa, const std::string& ab,
                std::size_t bins, std::size_t samples, bool directional) {
  Json out = Json::object();
  if (!ta.empty() || !tb.empty()) {
    if (ta.empty() || tb.empty()) throw UsageError("--trace-a and --trace-b go together");
    out["dx"] = trace_distance(load_trace(ta), load_trace(tb), samples);
  }
  if (!aa.empty() || !ab.empty()) {
    if (aa.empty() || ab.empty()) throw UsageError("--ast-a and --ast-b go together");
    const AnnotationMatrix a = ast_from_json(parse_json_text(read_text_file(aa)));
    const AnnotationMatrix b = ast_from_json(parse_json_text(read_text_file(ab)));
    out["dp"] = annotation_distance(a, b, bins, directional);
    Json per = Json::object();
    std::set<std::string> uids(a.uids.begin(), a.uids.end());
    uids.insert(b.uids.begin(), b.uids.end());
    for (const std::string& u : uids)
      per[u] = column_distance(a.column(u), a.frames, b.column(u), b.frames, bins, directional);
    out["dp_per_uid"] = per;
  }
  if (out.empty()) throw UsageError("give --trace-a/--trace-b and/or --ast-a/--ast-b");
  emit(canonical_dump(out), "");
  return 0;
}

int run_evolve(const EvolveArgs& ea, const std::string& traces_dir, const std::string& library_path,
               const std::string& label, const std::string& description, const std::string& out,
               const std::string& log) {
  FitnessEvaluator evaluator(load_traces(traces_dir), load_library_opt(library_path), ea.fitness);
  auto backend = make_backend(ea.backend);
  MutationRequest ctx;
  ctx.label = label;
  ctx.description = description;
  ctx.library_labels = evaluator.library().labels();
  ctx.formattings = library_formattings(evaluator.library());
  const FunsearchResult r = funsearch([&](const DetectorProgram& p) { return evaluator.evaluate(p); }, ea.g0(),
                                      lm_mutator(*backend), ea.config, ctx);
  if (!out.empty()) emit(print_detector(r.best.program), out);
  if (!log.empty()) {
    std::string lines;
    for (const IterationLog& it : r.log)
      lines += canonical_dump(Json{{"iteration", it.iteration}, {"island", it.island}, {"parsed", it.parsed},
                                   {"inserted", it.inserted}, {"fitness", it.report.to_json()},
                                   {"best_so_far", std::isfinite(it.best_so_far) ? Json(it.best_so_far) : Json()},
                                   {"note", it.note}}) +
               "\n";
    emit(lines, log);
  }
  Json summary = r.best.report.to_json();
  summary["source"] = print_detector(r.best.program);
  summary["accepted"] = !r.best.report.degenerate && r.best.report.nu > ea.config.delta;
  std::cout << canonical_dump(summary) << '\n';
  return 0;
}

int run_discover(const EvolveArgs& ea, const std::string& traces_dir, const std::string& labels_path,
                 const std::string& library_path, const std::string& out, const std::string& log,
                 const std::string& manifest) {
  const Json labels_json = parse_json_text(read_text_file(labels_path));
  if (!labels_json.is_array()) throw SchemaError("$", "list of {label, description}");
  std::vector<LabelSpec> labels;
  for (std::size_t i = 0; i < labels_json.size(); ++i) {
    const Json& l = labels_json[i];
    if (!l.is_object() || !l.contains("label") || !l["label"].is_string())
      throw SchemaError("[" + std::to_string(i) + "].label", "string");
    labels.push_back({l["label"].get<std::string>(), l.value("description", std::string{})});
  }
  auto backend = make_backend(ea.backend);
  const DiscoveryResult r = discover(load_traces(traces_dir), labels, ea.g0(), lm_mutator(*backend), ea.config,
                                     load_library_opt(library_path), ea.fitness);
  emit(canonical_dump(library_to_json(r.library)), out);
  if (!log.empty()) emit(r.log_jsonl(), log);
  if (!manifest.empty()) emit(canonical_dump(backend->manifest()), manifest);
  Json summary = Json::array();
  for (const LabelOutcome& o : r.outcomes)
    summary.push_back(Json{{"label", o.label.label},
                           {"accepted", o.accepted},
                           {"uid", o.uid},
                           {"nu", o.best.report.degenerate ? Json() : Json(o.best.report.nu)}});
  std::cout << canonical_dump(summary) << '\n';
  return 0;
}

RewardProgram load_reward(const std::string& path, bool binary) {
  RewardProgram p = parse_reward(read_text_file(path));
  return binary ? binary_reward(std::move(p)) : p;
}

int run_reward_eval(const std::string& program_path, const std::string& ast_path, const std::string& trace_path,
                    const std::string& library_path, bool binary, bool swap_after) {
  const RewardProgram program = load_reward(program_path, binary);
  const Json ast_json = parse_json_text(read_text_file(ast_path));
  const AnnotationMatrix matrix = ast_from_json(ast_json);
  std::optional<Trace> trace;
  if (!trace_path.empty()) {
    trace = load_trace(trace_path);
  } else {
    const std::string ref = ast_trace_ref(ast_json);
    for (const fs::path& cand : {fs::path(ref), fs::path(ast_path).parent_path() / ref})
      if (!ref.empty() && fs::is_regular_file(cand)) {
        trace = load_trace(cand);
        break;
      }
  }
  const PatternLibrary library = load_library_opt(library_path);
  const Trace empty;
  EvalContext ctx = EvalContext::make(trace ? *trace : empty, matrix, library_path.empty() ? nullptr : &library);
  if (!trace) ctx.trace = nullptr;
  if (library_path.empty())
    for (std::size_t i = 0; i < matrix.uids.size(); ++i) ctx.known.emplace_back(matrix.uids[i], matrix.labels[i]);
  ctx.swap_after = swap_after;
  std::cout << canonical_dump(evaluate_reward(program, ctx).to_json()) << '\n';
  return 0;
}

int run_reward_synthesize(const std::string& goal, const SceneArgs& sa, const std::string& library_path,
                          const std::string& backend_spec, int retries, const std::string& out,
                          const std::string& manifest) {
  auto backend = make_backend(backend_spec);
  const PatternLibrary library = load_library_opt(library_path);
  try {
    const SynthesisResult r = synthesize_reward(goal, library, sa.load(), *backend, retries);
    emit(print_reward(r.program), out);
    std::cerr << "synthesized after " << r.attempts << " attempt(s)\n";
  } catch (const SynthesisError& e) {
    for (std::size_t i = 0; i < e.chain().size(); ++i)
      std::cerr << "attempt " << i + 1 << ": " << e.chain()[i] << '\n';
    if (!manifest.empty()) emit(canonical_dump(backend->manifest()), manifest);
    throw;
  }
  if (!manifest.empty()) emit(canonical_dump(backend->manifest()), manifest);
  return 0;
}

int run_optimize(const SceneArgs& sa, const std::string& reward_path, const std::string& library_path, bool binary,
                 AnnealConfig config, std::size_t runs, std::size_t jobs, const std::string& sim_config,
                 const std::string& target, double tolerance, const std::string& out, const std::string& heatmap,
                 const std::string& best_trace) {
  if (runs == 0) throw UsageError("--runs must be at least 1");
  const Scene scene = sa.load();
  const RewardProgram reward = load_reward(reward_path, binary);
  const PatternLibrary library = load_library_opt(library_path);
  const SimConfig sim = load_sim(sim_config, 0);
  std::optional<Vec2> goal;
  if (!target.empty()) {
    auto it = scene.targets.find(target);
    if (it == scene.targets.end()) throw Error("scene has no target '" + target + "'");
    goal = it->second;
  }
  check_reward_identifiers(reward, library);
  auto results = parallel_map<OptimizationRun>(runs, jobs_or_default(jobs), [&](std::size_t i) {
    AnnealConfig c = config;
    c.seed = config.seed + i;
    return anneal(scene, reward, library, c, sim);
  });
  Json all = Json::array();
  for (const OptimizationRun& run : results) {
    Json j = run.to_json();
    if (goal) j["success"] = run.best_trace && success_test(*run.best_trace, *goal, tolerance);
    all.push_back(std::move(j));
  }
  emit(canonical_dump(runs == 1 ? all[0] : all), out);
  if (!heatmap.empty()) {
    const Heatmap h = export_heatmap(results[0]);
    emit(fs::path(heatmap).extension() == ".json" ? canonical_dump(h.to_json()) : h.to_ppm(), heatmap);
  }
  if (!best_trace.empty() && results[0].best_trace) emit(serialize_trace(*results[0].best_trace), best_trace);
  return 0;
}

int run_qa(const std::string& trace_path, const std::string& template_id, const std::string& args_json,
           const Json& flag_args, const std::string& ast_path) {
  QuestionInstance q;
  q.template_id = template_id;
  q.args = args_json.empty() ? Json::object() : parse_json_text(args_json);
  if (!q.args.is_object()) throw UsageError("--args must be a JSON object");
  for (const auto& [k, v] : flag_args.items()) q.args[k] = v;
  const Trace trace = load_trace(trace_path);
  std::optional<AnnotationMatrix> ast;
  if (!ast_path.empty()) ast = ast_from_json(parse_json_text(read_text_file(ast_path)));
  const Json a = answer(q, trace, ast ? &*ast : nullptr);
  std::cout << canonical_dump(Json{{"template_id", q.template_id}, {"args", q.args}, {"question", q.text()},
                                   {"answer", a}})
            << '\n';
  return 0;
}

int run_benchmark(const std::string& scenes_dir, const std::vector<std::string>& templates, std::size_t variants,
                  const std::string& library_path, BenchmarkOptions options, const std::string& out) {
  std::vector<std::pair<std::string, Scene>> scenes;
  if (!scenes_dir.empty())
    for (const fs::path& p : json_files(scenes_dir)) scenes.emplace_back(p.filename().string(), parse_scene(read_text_file(p)));
  for (const std::string& id : templates)
    for (std::size_t v = 0; v < variants; ++v)
      scenes.emplace_back(id + ":" + std::to_string(v), build_scene(SceneTemplate{id, Json::object(), v}));
  if (scenes.empty()) throw UsageError("give --scenes DIR and/or --template IDs");
  options.jobs = jobs_or_default(options.jobs);
  auto solved = parallel_map<std::optional<Action>>(scenes.size(), options.jobs, [&](std::size_t i) {
    const Scene& s = scenes[i].second;
    return s.solution ? s.solution : find_solution(s, options.sim, options.seed + i);
  });
  std::vector<std::pair<std::string, Scene>> usable;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (!solved[i]) {
      std::cerr << "warning: no solution for " << scenes[i].first << ", skipped\n";
      continue;
    }
    scenes[i].second.solution = solved[i];
    usable.push_back(scenes[i]);
  }
  std::string lines;
  for (const BenchmarkItem& item : generate_benchmark(usable, load_library_opt(library_path), options))
    lines += canonical_dump(item.to_json()) + "\n";
  emit(lines, out);
  return 0;
}

int run_ablate(const std::string& library_path, const std::string& uid, const std::string& out) {
  const PatternLibrary full = load_library(library_path);
  const PatternLibrary kept = ablate(full, uid);
  Json removed = Json::array();
  for (const PatternDetector& d : full.detectors)
    if (!kept.find(d.uid)) removed.push_back(d.uid);
  emit(canonical_dump(library_to_json(kept)), out);
  std::cerr << "removed: " << removed.dump() << '\n';
  return 0;
}

int run_render(const std::string& trace_path, const std::string& out_dir, long frame, const std::string& out,
               int size) {
  const Trace trace = load_trace(trace_path);
  if (frame >= 0) {
    if (out.empty()) throw UsageError("--frame needs --out");
    if (static_cast<std::size_t>(frame) >= trace.frames.size()) throw Error("frame index out of range");
    write_text_file(out, render_frame_ppm(trace, static_cast<std::size_t>(frame), size));
    return 0;
  }
  if (out_dir.empty()) throw UsageError("--out-dir or --frame/--out is required");
  std::cerr << render_frames(trace, out_dir, size) << " frames written\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simtrace: physics traces, pattern detectors, reward programs and action search"};
  app.get_formatter()->column_width(34);
  app.require_subcommand(1);
  app.set_version_flag("--version", "simtrace 0.1.0");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Roll out one action in a scene and write the trace");
  SceneArgs sim_scene;
  sim_scene.add(sim);
  std::string sim_action, sim_config, sim_out, sim_scene_out;
  bool sim_solution = false;
  std::uint64_t sim_seed = 0;
  int sim_frames = 0;
  sim->add_option("--action", sim_action, "Red ball placement as x,y,r");
  sim->add_flag("--solution", sim_solution, "Use the scene's stored solution, searching for one if absent");
  sim->add_option("--seed", sim_seed, "Seed for the solution search")->capture_default_str();
  sim->add_option("--config", sim_config, "Simulator config JSON");
  sim->add_option("--frames", sim_frames, "Recorded frame count (overrides the config)");
  sim->add_option("--out", sim_out, "Trace output file (default: stdout)");
  sim->add_option("--scene-out", sim_scene_out, "Also write the scene JSON here");

  // annotate
  auto* ann = app.add_subcommand("annotate", "Run a pattern library over traces");
  std::vector<std::string> ann_traces;
  std::string ann_library, ann_out, ann_out_dir;
  bool ann_strict = false, ann_render = false;
  std::size_t ann_jobs = 1;
  ann->add_option("--trace", ann_traces, "Trace JSON file (repeatable)")->required()->check(CLI::ExistingFile);
  ann->add_option("--library", ann_library, "Pattern library JSON")->check(CLI::ExistingFile);
  ann->add_option("--out", ann_out, "Annotation output for a single trace (default: stdout)");
  ann->add_option("--out-dir", ann_out_dir, "Output directory when annotating several traces");
  ann->add_flag("--strict", ann_strict, "Abort on the first detector error instead of warning");
  ann->add_flag("--render", ann_render, "Print detector events as text instead of annotation JSON");
  ann->add_option("--jobs", ann_jobs, "Parallel traces (0 = hardware threads)")->capture_default_str();

  // metrics
  auto* met = app.add_subcommand("metrics", "Trace distance and pattern distance between two runs");
  std::string met_ta, met_tb, met_aa, met_ab;
  std::size_t met_bins = kDefaultBins, met_samples = kDefaultSamples;
  bool met_directional = false;
  met->add_option("--trace-a", met_ta, "First trace")->check(CLI::ExistingFile);
  met->add_option("--trace-b", met_tb, "Second trace")->check(CLI::ExistingFile);
  met->add_option("--ast-a", met_aa, "First annotation file")->check(CLI::ExistingFile);
  met->add_option("--ast-b", met_ab, "Second annotation file")->check(CLI::ExistingFile);
  met->add_option("--bins", met_bins, "Histogram bins")->capture_default_str();
  met->add_option("--samples", met_samples, "Resampling points for trace distance")->capture_default_str();
  met->add_flag("--directional", met_directional, "One-sided cross entropy");

  // evolve
  auto* evo = app.add_subcommand("evolve", "Evolve one detector for a label");
  EvolveArgs evo_args;
  evo_args.add(evo);
  std::string evo_traces, evo_library, evo_label, evo_description, evo_out, evo_log;
  evo->add_option("--traces", evo_traces, "Directory of trace JSON files")->required();
  evo->add_option("--library", evo_library, "Existing pattern library")->check(CLI::ExistingFile);
  evo->add_option("--label", evo_label, "Pattern label")->required();
  evo->add_option("--description", evo_description, "Pattern description");
  evo->add_option("--out", evo_out, "Write the best detector source here");
  evo->add_option("--log", evo_log, "Per-iteration JSON lines log");

  // discover
  auto* disc = app.add_subcommand("discover", "Grow a pattern library from a list of labels");
  EvolveArgs disc_args;
  disc_args.add(disc);
  std::string disc_traces, disc_labels, disc_library, disc_out, disc_log, disc_manifest;
  disc->add_option("--traces", disc_traces, "Directory of trace JSON files")->required();
  disc->add_option("--labels", disc_labels, "JSON list of {label, description}")->required()->check(CLI::ExistingFile);
  disc->add_option("--library", disc_library, "Starting library")->check(CLI::ExistingFile);
  disc->add_option("--out", disc_out, "Output library JSON")->required();
  disc->add_option("--log", disc_log, "Fitness log (JSON lines)");
  disc->add_option("--manifest", disc_manifest, "Language model exchange hashes");

  // reward
  auto* rew = app.add_subcommand("reward", "Parse, evaluate or synthesize reward programs");
  rew->require_subcommand(1);
  auto* rparse = rew->add_subcommand("parse", "Check a reward program and print its canonical form");
  std::string rparse_program;
  rparse->add_option("--program", rparse_program, "Reward DSL file")->required()->check(CLI::ExistingFile);
  auto* reval = rew->add_subcommand("eval", "Score a reward program on an annotated trace");
  std::string reval_program, reval_ast, reval_trace, reval_library;
  bool reval_binary = false, reval_swap = false;
  reval->add_option("--program", reval_program, "Reward DSL file")->required()->check(CLI::ExistingFile);
  reval->add_option("--ast", reval_ast, "Annotation file")->required()->check(CLI::ExistingFile);
  reval->add_option("--trace", reval_trace, "Trace file (default: the annotation's trace reference)")
      ->check(CLI::ExistingFile);
  reval->add_option("--library", reval_library, "Pattern library for identifier checks")->check(CLI::ExistingFile);
  reval->add_flag("--binary", reval_binary, "Score 0/1 from satisfaction only");
  reval->add_flag("--swap-after", reval_swap, "Read AFTER(a, b) as a before b");
  auto* rsyn = rew->add_subcommand("synthesize", "Ask the language model for a reward program");
  SceneArgs rsyn_scene;
  rsyn_scene.add(rsyn);
  std::string rsyn_goal, rsyn_library, rsyn_backend = "mock", rsyn_out, rsyn_manifest;
  int rsyn_retries = 3;
  rsyn->add_option("--goal", rsyn_goal, "Goal in natural language")->required();
  rsyn->add_option("--library", rsyn_library, "Pattern library")->check(CLI::ExistingFile);
  rsyn->add_option("--backend", rsyn_backend, "mock:<transcript.json> or http")->capture_default_str();
  rsyn->add_option("--retries", rsyn_retries, "Repair attempts after the first")->capture_default_str();
  rsyn->add_option("--out", rsyn_out, "Output DSL file (default: stdout)");
  rsyn->add_option("--manifest", rsyn_manifest, "Language model exchange hashes");

  // optimize
  auto* opt = app.add_subcommand("optimize", "Search the action space with simulated annealing");
  SceneArgs opt_scene;
  opt_scene.add(opt);
  AnnealConfig opt_config;
  std::string opt_reward, opt_library, opt_sim, opt_target, opt_out, opt_heatmap, opt_best;
  bool opt_binary = false;
  std::size_t opt_runs = 1, opt_jobs = 1;
  double opt_tol = 10.0;
  opt->add_option("--reward", opt_reward, "Reward DSL file")->required()->check(CLI::ExistingFile);
  opt->add_option("--library", opt_library, "Pattern library")->check(CLI::ExistingFile);
  opt->add_flag("--binary", opt_binary, "Use the 0/1 version of the reward");
  opt->add_option("--samples", opt_config.samples, "Rollouts per run")->capture_default_str();
  opt->add_option("--seed", opt_config.seed, "Seed of the first run")->capture_default_str();
  opt->add_option("--t0", opt_config.initial_temperature, "Initial temperature")->capture_default_str();
  opt->add_option("--cooling", opt_config.cooling, "Geometric cooling factor")->capture_default_str();
  opt->add_option("--sigma-x", opt_config.sigma_x, "Proposal sd in x")->capture_default_str();
  opt->add_option("--sigma-y", opt_config.sigma_y, "Proposal sd in y")->capture_default_str();
  opt->add_option("--sigma-r", opt_config.sigma_r, "Proposal sd in radius")->capture_default_str();
  opt->add_option("--runs", opt_runs, "Independent runs with seeds seed..seed+runs-1")->capture_default_str();
  opt->add_option("--jobs", opt_jobs, "Parallel runs (0 = hardware threads)")->capture_default_str();
  opt->add_option("--config", opt_sim, "Simulator config JSON");
  opt->add_option("--target", opt_target, "Scene target name for a success check");
  opt->add_option("--tolerance", opt_tol, "Success radius around the target")->capture_default_str();
  opt->add_option("--out", opt_out, "Run JSON (default: stdout)");
  opt->add_option("--heatmap", opt_heatmap, "Score heatmap of the first run (.ppm image or .json grid)");
  opt->add_option("--best-trace", opt_best, "Trace of the first run's best action");

  // qa
  auto* qa = app.add_subcommand("qa", "Answer a templated question about a trace, or build a benchmark");
  std::string qa_trace, qa_template, qa_args, qa_ast, qa_color, qa_color2, qa_pattern;
  double qa_t0 = -1, qa_t1 = -1, qa_split = -1;
  qa->add_option("--trace", qa_trace, "Trace file")->check(CLI::ExistingFile);
  qa->add_option("--template", qa_template, "Template id C1..C27");
  qa->add_option("--args", qa_args, "Template arguments as a JSON object");
  qa->add_option("--color", qa_color, "color argument");
  qa->add_option("--color2", qa_color2, "color2 argument");
  qa->add_option("--t0", qa_t0, "t0 argument (normalized time)");
  qa->add_option("--t1", qa_t1, "t1 argument (normalized time)");
  qa->add_option("--split", qa_split, "split argument (normalized time)");
  qa->add_option("--pattern", qa_pattern, "pattern argument (uid or label)");
  qa->add_option("--ast", qa_ast, "Annotation file, needed by pattern templates")->check(CLI::ExistingFile);
  qa->require_subcommand(0, 1);
  auto* bench = qa->add_subcommand("benchmark", "Generate question/answer items over scenes");
  std::string bench_scenes, bench_library, bench_out;
  std::vector<std::string> bench_templates;
  std::size_t bench_variants = 10;
  BenchmarkOptions bench_opts;
  bench->add_option("--scenes", bench_scenes, "Directory of scene JSON files");
  bench->add_option("--template", bench_templates, "Scene template ids (repeatable)");
  bench->add_option("--variants", bench_variants, "Variants per template")->capture_default_str();
  bench->add_option("--library", bench_library, "Pattern library")->check(CLI::ExistingFile);
  bench->add_option("--per-scene", bench_opts.per_scene, "Questions per scene")->capture_default_str();
  bench->add_option("--seed", bench_opts.seed, "Random seed")->capture_default_str();
  bench->add_option("--jobs", bench_opts.jobs, "Parallel scenes (0 = hardware threads)")->capture_default_str();
  bench->add_option("--out", bench_out, "JSON lines output (default: stdout)");

  // ablate
  auto* abl = app.add_subcommand("ablate", "Remove a pattern and everything that depends on it");
  std::string abl_library, abl_uid, abl_out;
  abl->add_option("--library", abl_library, "Pattern library")->required()->check(CLI::ExistingFile);
  abl->add_option("--uid", abl_uid, "Pattern uid to remove")->required();
  abl->add_option("--out", abl_out, "Output library (default: stdout)");

  // render
  auto* ren = app.add_subcommand("render", "Draw trace frames as PPM images");
  std::string ren_trace, ren_dir, ren_out;
  long ren_frame = -1;
  int ren_size = 256;
  ren->add_option("--trace", ren_trace, "Trace file")->required()->check(CLI::ExistingFile);
  ren->add_option("--out-dir", ren_dir, "Write every frame here");
  ren->add_option("--frame", ren_frame, "Single frame index");
  ren->add_option("--out", ren_out, "Output image for --frame");
  ren->add_option("--size", ren_size, "Image size in pixels")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return run_simulate(sim_scene, sim_action, sim_solution, sim_seed, sim_config, sim_frames, sim_out,
                          sim_scene_out);
    if (ann->parsed())
      return run_annotate(ann_traces, ann_library, ann_out, ann_out_dir, ann_strict, ann_render, ann_jobs);
    if (met->parsed())
      return run_metrics(met_ta, met_tb, met_aa, met_ab, met_bins, met_samples, met_directional);
    if (evo->parsed())
      return run_evolve(evo_args, evo_traces, evo_library, evo_label, evo_description, evo_out, evo_log);
    if (disc->parsed())
      return run_discover(disc_args, disc_traces, disc_labels, disc_library, disc_out, disc_log, disc_manifest);
    if (rparse->parsed()) {
      std::cout << print_reward(parse_reward(read_text_file(rparse_program))) << '\n';
      return 0;
    }
    if (reval->parsed())
      return run_reward_eval(reval_program, reval_ast, reval_trace, reval_library, reval_binary, reval_swap);
    if (rsyn->parsed())
      return run_reward_synthesize(rsyn_goal, rsyn_scene, rsyn_library, rsyn_backend, rsyn_retries, rsyn_out,
                                   rsyn_manifest);
    if (opt->parsed())
      return run_optimize(opt_scene, opt_reward, opt_library, opt_binary, opt_config, opt_runs, opt_jobs, opt_sim,
                          opt_target, opt_tol, opt_out, opt_heatmap, opt_best);
    if (bench->parsed())
      return run_benchmark(bench_scenes, bench_templates, bench_variants, bench_library, bench_opts, bench_out);
    if (qa->parsed()) {
      if (qa_trace.empty() || qa_template.empty()) throw UsageError("qa needs --trace and --template");
      Json flags = Json::object();
      if (!qa_color.empty()) flags["color"] = qa_color;
      if (!qa_color2.empty()) flags["color2"] = qa_color2;
      if (!qa_pattern.empty()) flags["pattern"] = qa_pattern;
      if (qa_t0 >= 0) flags["t0"] = qa_t0;
      if (qa_t1 >= 0) flags["t1"] = qa_t1;
      if (qa_split >= 0) flags["split"] = qa_split;
      return run_qa(qa_trace, qa_template, qa_args, flags, qa_ast);
    }
    if (abl->parsed()) return run_ablate(abl_library, abl_uid, abl_out);
    if (ren->parsed()) return run_render(ren_trace, ren_dir, ren_frame, ren_out, ren_size);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
