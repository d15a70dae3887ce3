#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "yulverify/common.hpp"
#include "yulverify/term.hpp"
#include "yulverify/vcgen.hpp"

namespace yulverify::solver {

// Z3Alt is z3 with the legacy arithmetic engine and a different seed.
enum class Backend { Z3, Z3Alt, Cvc5, Cvc4 };

std::string_view to_string(Backend b);
std::optional<Backend> parse_backend(std::string_view name);

enum class Logic { Auto, QuantifierFree, FirstOrder };

struct SolverConfig {
  Backend backend = Backend::Z3;
  std::string executable;
  double timeout = 5.0;  // seconds
  Logic logic = Logic::Auto;

  std::string name() const { return std::string(to_string(backend)); }
};

// Resolves the backend executable on PATH; nullopt when it is not installed.
std::optional<SolverConfig> make_config(Backend b, double timeout = 5.0);
std::vector<SolverConfig> available_configs(double timeout = 5.0);

struct SExpr {
  bool atom = true;
  std::string text;  // atoms; |quoted| symbols are stored unquoted
  std::vector<SExpr> items;

  bool is(std::string_view s) const { return atom && text == s; }
  std::string str() const;
};

// Parses a sequence of s-expressions; throws SolverError on unbalanced input.
std::vector<SExpr> parse_sexprs(std::string_view text);

struct Value;

struct FunDef {
  std::vector<std::string> params;
  SExpr body;
};

struct Value {
  enum Kind { Int, Bool, Array } kind = Int;
  Word num;
  bool flag = false;
  // Array: explicit points over `fallback`, or a function interpretation.
  std::vector<std::pair<Word, Value>> entries;
  std::shared_ptr<const Value> fallback;
  std::shared_ptr<const FunDef> fn;

  static Value of_int(const Word& w);
  static Value of_bool(bool b);
  std::string str() const;
};

struct Model {
  std::map<std::string, Value> consts;
  std::map<std::string, FunDef> funs;
};

// Accepts (model (define-fun ...)...), bare define-fun lists and ((x v) ...) bindings.
Model parse_model(const std::vector<SExpr>& sexprs);

// Evaluates a term under a model; nullopt on unknown symbols. Integer
// quantifiers are decided over the model's finite support.
std::optional<Value> evaluate(const logic::TermPtr& t, const Model& m);

// True when the model satisfies every decidable hypothesis and the negated goal.
// Missing constants take the solver's default completion (0, false, constant-0 arrays).
std::optional<bool> validate_model(const vcgen::Obligation& ob, const Model& m);

enum class Status { Verified, Refuted, Unknown, Timeout, SolverError };

std::string_view to_string(Status s);

struct Verdict {
  Status status = Status::SolverError;
  std::optional<Model> model;  // Refuted only
  double wall_time = 0;
  std::string backend;
  std::string message;
};

struct EmitOptions {
  Logic logic = Logic::Auto;
  // Closed subterms referenced more than once become define-fun.
  bool share = true;
};

std::string emit_smtlib(const vcgen::Obligation& ob, const EmitOptions& opts = {});

// Runs a script through the backend process; a deadline kill yields Timeout.
Verdict run_script(const std::string& script, const SolverConfig& cfg);
Verdict discharge(const vcgen::Obligation& ob, const SolverConfig& cfg);

// Bounded worker pool; results are in input order.
std::vector<Verdict> discharge_all(const std::vector<vcgen::Obligation>& obs, const SolverConfig& cfg,
                                   unsigned jobs);

struct ManifestEntry {
  std::string id;
  std::string file;
  std::string theorem;
  std::string function;
  std::string kind;
  std::string property_type;
  Span origin;
  std::string label;
};

struct DeferredManifest {
  std::vector<ManifestEntry> entries;
  std::string to_json() const;
};

// Neutral theorem statement for one deferred obligation.
std::string render_deferred(const vcgen::Obligation& ob, const std::string& theorem);

// Manifest entries (theorem names, files) without writing anything.
DeferredManifest deferred_manifest(const std::vector<vcgen::Obligation>& obs);

// Writes <dir>/<id>.sexp per obligation and <dir>/manifest.json.
DeferredManifest export_deferred(const std::vector<vcgen::Obligation>& obs, const std::filesystem::path& dir);

}  // namespace yulverify::solver
