#include <unistd.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "yulverify/inference.hpp"
#include "yulverify/interpreter.hpp"
#include "yulverify/pipeline.hpp"
#include "yulverify/solver.hpp"
#include "yulverify/static_checks.hpp"

using namespace yulverify;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

yul::YulUnit load_unit(const std::string& path) { return yul::lower_unit_specs(yul::parse_yul(read_file(path), stem(path))); }

std::vector<Word> parse_args(const std::string& csv) {
  std::vector<Word> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_word_or_throw(item));
  return out;
}

std::map<std::string, vir::EcfAnswer> parse_ecf(const std::vector<std::string>& flags) {
  std::map<std::string, vir::EcfAnswer> out;
  for (const auto& f : flags) {
    auto eq = f.find('=');
    std::string v = eq == std::string::npos ? "" : f.substr(eq + 1);
    if (v != "pure" && v != "impure")
      throw Error(ErrorKind::PreconditionViolation, "--ecf expects <call>=pure|impure, got '" + f + "'");
    out[f.substr(0, eq)] = v == "pure" ? vir::EcfAnswer::Pure : vir::EcfAnswer::Impure;
  }
  return out;
}

// Asks on the terminal for external calls without an answer.
void prompt_ecf(const yul::YulUnit& parsed, std::map<std::string, vir::EcfAnswer>& ecf) {
  if (!isatty(STDIN_FILENO)) return;
  for (const auto& callee : pipeline::external_callees(yul::lower_unit_specs(parsed))) {
    while (!ecf.count(callee)) {
      std::cerr << "Is the external call `" << callee << "` effectively callback free? [pure/impure]: ";
      std::string line;
      if (!std::getline(std::cin, line)) return;
      if (line == "pure") ecf[callee] = vir::EcfAnswer::Pure;
      else if (line == "impure") ecf[callee] = vir::EcfAnswer::Impure;
    }
  }
}

solver::SolverConfig solver_config(const std::string& name, double timeout) {
  auto b = solver::parse_backend(name);
  if (!b) throw Error(ErrorKind::PreconditionViolation, "unknown solver '" + name + "'");
  auto cfg = solver::make_config(*b, timeout);
  if (!cfg) throw Error(ErrorKind::SolverError, "solver '" + name + "' is not installed");
  return *cfg;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
}

interp::Trace read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
  interp::Trace t;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) {
      c.erase(0, c.find_first_not_of(" \t"));
      c.erase(c.find_last_not_of(" \t") + 1);
      cells.push_back(c);
    }
    if (t.watched.empty()) {
      t.watched = cells;
      continue;
    }
    if (cells.size() != t.watched.size())
      throw Error(ErrorKind::SyntaxError, path + ": row width differs from header", Span{int(lineno), 1});
    interp::TraceRow row{t.rows.size(), {}};
    for (const auto& v : cells) row.values.push_back(parse_word_or_throw(v, Span{int(lineno), 1}));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string csv(const interp::Trace& t) {
  std::string out;
  for (size_t i = 0; i < t.watched.size(); ++i) out += (i ? "," : "") + t.watched[i];
  out += "\n";
  for (const auto& r : t.rows) {
    for (size_t i = 0; i < r.values.size(); ++i) out += (i ? "," : "") + r.values[i].get_str();
    out += "\n";
  }
  return out;
}

interp::RunOptions run_options(std::optional<unsigned> wrap_bits, uint64_t fuel) {
  interp::RunOptions o;
  o.fuel = fuel;
  if (wrap_bits) o.evm.wrap_bits = *wrap_bits;
  o.stubs.fallback = interp::Stub::havoc();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deductive verifier for annotated Yul"};
  app.require_subcommand(1);

  std::string file;
  std::string solver_name = "z3";
  double timeout = 5.0;
  unsigned jobs = 1;
  std::optional<unsigned> wrap_bits;
  unsigned degree = 3;
  std::vector<std::string> ecf_flags;
  std::string json_out;
  std::string deferred_dir;
  bool strict_deferred = false;
  bool storage_reduce = false;
  std::vector<std::string> t6;
  uint64_t seed = 1;
  uint64_t fuel = 200'000;
  std::string function;
  std::vector<std::string> runs;
  std::vector<std::string> csv_files;
  std::string pattern;
  std::string out_dir;

  auto add_solver = [&](CLI::App* c) {
    c->add_option("--solver", solver_name, "z3, z3-alt, cvc5 or cvc4");
    c->add_option("--timeout", timeout, "Per-obligation timeout in seconds")->check(CLI::PositiveNumber);
  };
  auto add_ecf = [&](CLI::App* c) {
    c->add_option("--ecf", ecf_flags, "ECF answer for an external call: <call>=pure|impure");
    c->add_option("--wrap-bits", wrap_bits, "Word width for modular arithmetic and overflow checks");
  };

  auto* verify = app.add_subcommand("verify", "Run the full pipeline and report verdicts");
  verify->add_option("file", file, "Annotated Yul unit")->required()->check(CLI::ExistingFile);
  add_solver(verify);
  add_ecf(verify);
  verify->add_option("--jobs", jobs, "Parallel solver processes")->check(CLI::PositiveNumber);
  verify->add_option("--degree", degree, "Degree bound for @learn loops")->check(CLI::Range(1, 6));
  verify->add_option("--json", json_out, "Write the JSON report here ('-' for stdout)");
  verify->add_option("--deferred-dir", deferred_dir, "Export deferred obligations here");
  verify->add_flag("--strict-deferred", strict_deferred, "Deferred obligations fail the run");
  verify->add_flag("--storage-reduce", storage_reduce, "Add the storage read-after-write hypothesis");
  verify->add_option("--t6", t6, "Tag the obligations of this function as T6");
  verify->add_option("--seed", seed, "Seed for invariant sampling");

  auto* trace = app.add_subcommand("trace", "Print loop-head traces of @learn loops as CSV");
  trace->add_option("file", file, "Annotated Yul unit")->required()->check(CLI::ExistingFile);
  trace->add_option("--function", function, "Entry function")->required();
  trace->add_option("--args", runs, "Comma-separated arguments")->expected(0, 1);
  trace->add_option("--wrap-bits", wrap_bits, "Word width for modular arithmetic");
  trace->add_option("--fuel", fuel, "Step budget");
  trace->add_option("--out-dir", out_dir, "Write <function>_<line>_<col>.csv files here");

  auto* infer_cmd = app.add_subcommand("infer", "Fit polynomial loop invariants");
  infer_cmd->add_option("inputs", csv_files, "Trace CSV files, or one Yul unit")->required();
  infer_cmd->add_option("--degree", degree, "Maximum monomial degree")->check(CLI::Range(1, 6));
  infer_cmd->add_option("--function", function, "Function holding the loop (Yul input)");
  infer_cmd->add_option("--run", runs, "Argument vector of one run, comma-separated (Yul input)");
  infer_cmd->add_option("--seed", seed, "Sampling seed when no --run is given");
  add_solver(infer_cmd);
  add_ecf(infer_cmd);
  bool validate = false;
  infer_cmd->add_flag("--validate", validate, "Discharge initiation and consecution (Yul input)");

  auto* check = app.add_subcommand("check", "Run static pattern checks and print findings as JSON");
  check->add_option("file", file, "Annotated Yul unit")->required()->check(CLI::ExistingFile);
  check->add_option("--pattern", pattern, "reentrancy or timestamp; default follows @check")
      ->check(CLI::IsMember({"reentrancy", "timestamp"}));

  auto* exp = app.add_subcommand("export-deferred", "Write deferred obligations for manual proof");
  exp->add_option("file", file, "Annotated Yul unit")->required()->check(CLI::ExistingFile);
  exp->add_option("--out-dir", out_dir, "Output directory")->required();
  add_ecf(exp);

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      yul::YulUnit parsed = yul::parse_yul(read_file(file), stem(file));
      pipeline::VerifyOptions opts;
      opts.solver = solver_config(solver_name, timeout);
      opts.jobs = jobs;
      opts.wrap_bits = wrap_bits;
      opts.degree = degree;
      opts.ecf = parse_ecf(ecf_flags);
      prompt_ecf(parsed, opts.ecf);
      opts.t6_functions = {t6.begin(), t6.end()};
      opts.storage_reduce = storage_reduce;
      opts.strict_deferred = strict_deferred;
      opts.sampling.seed = seed;
      if (!deferred_dir.empty()) opts.deferred_dir = deferred_dir;
      auto report = pipeline::verify_unit(parsed, opts);
      if (json_out != "-") std::cout << report.summary();
      if (!json_out.empty()) write_json(report.to_json(), json_out);
      return report.exit_code();
    }

    if (trace->parsed()) {
      yul::YulUnit unit = load_unit(file);
      auto traces = interp::collect_loop_traces(unit, function, runs.empty() ? std::vector<Word>{} : parse_args(runs[0]),
                                                evm::EvmState{}, run_options(wrap_bits, fuel));
      for (const auto& t : traces) {
        if (out_dir.empty()) {
          std::cout << "# " << t.function << " loop " << t.loop_id.str() << "\n" << csv(t);
          continue;
        }
        std::filesystem::create_directories(out_dir);
        auto path = std::filesystem::path(out_dir) /
                    (t.function + "_" + std::to_string(t.loop_id.line) + "_" + std::to_string(t.loop_id.col) + ".csv");
        std::ofstream(path) << csv(t);
        std::cout << path.string() << "\n";
      }
      return 0;
    }

    if (infer_cmd->parsed()) {
      bool yul_input = csv_files.size() == 1 && std::filesystem::path(csv_files[0]).extension() == ".yul";
      if (!yul_input) {
        std::vector<interp::Trace> traces;
        for (const auto& f : csv_files) traces.push_back(read_csv(f));
        for (auto& t : traces) t.loop_id = traces[0].loop_id;
        for (const auto& inv : infer::fit_invariants(infer::merge_traces(traces), degree))
          std::cout << "@inv " << inv.to_annotation() << "\n";
        return 0;
      }
      yul::YulUnit unit = load_unit(csv_files[0]);
      int status = 0;
      for (const auto& [fn, loop] : pipeline::learn_loops(unit)) {
        if (!function.empty() && fn != function) continue;
        std::vector<interp::Trace> traces;
        if (runs.empty()) {
          infer::SampleOptions so;
          so.seed = seed;
          traces = infer::sample_traces(unit, fn, loop, so);
        } else {
          std::vector<std::vector<Word>> arg_sets;
          for (const auto& r : runs) arg_sets.push_back(parse_args(r));
          traces = infer::traces_for_runs(unit, fn, loop, arg_sets);
        }
        std::cout << "# " << fn << " loop " << loop.str() << ": " << traces.size() << " runs\n";
        if (traces.empty()) {
          std::cout << "# no run reached the loop; supply @inv\n";
          status = 1;
          continue;
        }
        auto invs = infer::fit_invariants(infer::merge_traces(traces), degree);
        if (invs.empty()) std::cout << "# no candidate of degree <= " << degree << "; supply @inv\n";
        for (const auto& inv : invs) std::cout << "@inv " << inv.to_annotation() << "\n";
        if (validate && !invs.empty()) {
          auto v = infer::validate_invariants(invs, unit, fn, loop, solver_config(solver_name, timeout),
                                              parse_ecf(ecf_flags), wrap_bits);
          for (const auto& [ob, verdict] : v.results)
            std::cout << "# " << ob.id << " " << solver::to_string(verdict.status) << "\n";
          std::cout << "# " << infer::to_string(v.status) << "\n";
          if (v.status != infer::ValidationStatus::Valid) status = 1;
        }
      }
      return status;
    }

    if (check->parsed()) {
      yul::YulUnit unit = load_unit(file);
      std::vector<checks::PatternFinding> findings;
      if (pattern.empty()) {
        findings = checks::run_checks(unit);
      } else {
        for (const auto& f : unit.functions) {
          auto part = pattern == "reentrancy" ? checks::check_reentrancy(f, unit) : checks::check_timestamp(f, unit);
          findings.insert(findings.end(), part.begin(), part.end());
        }
      }
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& f : findings) arr.push_back(pipeline::finding_to_json(f));
      std::cout << nlohmann::json{{"unit", unit.name}, {"findings", arr}}.dump(2) << "\n";
      return findings.empty() ? 0 : 1;
    }

    if (exp->parsed()) {
      yul::YulUnit parsed = yul::parse_yul(read_file(file), stem(file));
      auto ecf = parse_ecf(ecf_flags);
      prompt_ecf(parsed, ecf);
      yul::YulUnit unit = yul::lower_unit_specs(parsed);
      auto ctx = vcgen::build_context(unit, ecf, wrap_bits);
      std::vector<vcgen::Obligation> deferred;
      for (const auto& f : unit.functions)
        for (auto& ob : vcgen::generate_vcs(ctx.functions.at(f.name), ctx))
          if (ob.deferred) deferred.push_back(std::move(ob));
      std::cout << solver::export_deferred(deferred, out_dir).to_json();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
