#include "yulverify/inference.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <sstream>

namespace yulverify::infer {

MonomialBasis MonomialBasis::make(std::vector<std::string> variables, unsigned max_degree) {
  MonomialBasis b;
  b.variables = std::move(variables);
  b.max_degree = max_degree;
  const size_t n = b.variables.size();
  for (unsigned d = 0; d <= max_degree; ++d) {
    // Exponent vectors of total degree d in descending lexicographic order.
    std::vector<unsigned> e(n, 0);
    std::function<void(size_t, unsigned)> go = [&](size_t i, unsigned left) {
      if (i + 1 >= n) {
        if (n == 0) {
          if (left == 0) b.monomials.push_back(e);
          return;
        }
        e[i] = left;
        b.monomials.push_back(e);
        e[i] = 0;
        return;
      }
      for (unsigned k = left + 1; k-- > 0;) {
        e[i] = k;
        go(i + 1, left - k);
      }
      e[i] = 0;
    };
    go(0, d);
  }
  return b;
}

std::string MonomialBasis::render(size_t i) const {
  std::string s;
  for (size_t v = 0; v < variables.size(); ++v)
    for (unsigned k = 0; k < monomials[i][v]; ++k) s += (s.empty() ? "" : "*") + variables[v];
  return s.empty() ? "1" : s;
}

namespace {

// In-place reduced row echelon form; returns pivot columns.
std::vector<size_t> rref(Matrix& m) {
  std::vector<size_t> pivots;
  if (m.empty()) return pivots;
  const size_t cols = m[0].size();
  size_t row = 0;
  for (size_t c = 0; c < cols && row < m.size(); ++c) {
    size_t p = row;
    while (p < m.size() && sgn(m[p][c]) == 0) ++p;
    if (p == m.size()) continue;
    std::swap(m[p], m[row]);
    Rational inv = 1 / m[row][c];
    for (auto& x : m[row]) x *= inv;
    for (size_t r = 0; r < m.size(); ++r) {
      if (r == row || sgn(m[r][c]) == 0) continue;
      Rational f = m[r][c];
      for (size_t k = c; k < cols; ++k) m[r][k] -= f * m[row][k];
    }
    pivots.push_back(c);
    ++row;
  }
  return pivots;
}

}  // namespace

std::vector<std::vector<Rational>> nullspace(const Matrix& in) {
  if (in.empty()) return {};
  Matrix m = in;
  const size_t cols = m[0].size();
  auto pivots = rref(m);
  std::vector<bool> is_pivot(cols, false);
  for (size_t c : pivots) is_pivot[c] = true;
  std::vector<std::vector<Rational>> out;
  for (size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    std::vector<Rational> v(cols, 0);
    v[f] = 1;
    for (size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -m[r][f];
    out.push_back(std::move(v));
  }
  return out;
}

size_t rank(const Matrix& in) {
  Matrix m = in;
  return rref(m).size();
}

Matrix build_monomial_matrix(const interp::Trace& trace, const MonomialBasis& basis) {
  if (trace.rows.empty()) throw Error(ErrorKind::PreconditionViolation, "empty trace");
  Matrix m;
  for (const auto& row : trace.rows) {
    if (row.values.size() != basis.variables.size())
      throw Error(ErrorKind::PreconditionViolation, "trace row width does not match the basis");
    std::vector<Rational> r;
    for (const auto& e : basis.monomials) {
      Word p = 1;
      for (size_t v = 0; v < e.size(); ++v) {
        Word pw;
        mpz_pow_ui(pw.get_mpz_t(), row.values[v].get_mpz_t(), e[v]);
        p *= pw;
      }
      r.emplace_back(p);
    }
    m.push_back(std::move(r));
  }
  return m;
}

std::vector<Rational> normalize(std::vector<Rational> c) {
  auto last = std::find_if(c.rbegin(), c.rend(), [](const Rational& x) { return sgn(x) != 0; });
  if (last == c.rend()) throw Error(ErrorKind::PreconditionViolation, "zero polynomial");
  Word lcm = 1;
  for (const auto& x : c) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), x.get_den_mpz_t());
  Word g = 0;
  for (auto& x : c) {
    x *= lcm;
    x.canonicalize();
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_num_mpz_t());
  }
  if (sgn(*last) < 0) g = -g;
  for (auto& x : c) {
    x /= g;
    x.canonicalize();
  }
  return c;
}

Rational PolyInvariant::evaluate(const std::vector<Word>& values) const {
  Rational s = 0;
  for (size_t i = 0; i < basis.monomials.size(); ++i) {
    Word p = 1;
    for (size_t v = 0; v < values.size(); ++v) {
      Word pw;
      mpz_pow_ui(pw.get_mpz_t(), values[v].get_mpz_t(), basis.monomials[i][v]);
      p *= pw;
    }
    s += coefficients[i] * Rational(p);
  }
  return s;
}

std::string PolyInvariant::to_annotation() const {
  std::string out;
  Word constant = 0;
  std::vector<size_t> order(basis.monomials.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto degree = [&](size_t i) {
    unsigned d = 0;
    for (unsigned e : basis.monomials[i]) d += e;
    return d;
  };
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return degree(a) > degree(b); });
  for (size_t i : order) {
    const Rational& c = coefficients[i];
    if (sgn(c) == 0) continue;
    bool is_const = std::all_of(basis.monomials[i].begin(), basis.monomials[i].end(), [](unsigned e) { return e == 0; });
    if (is_const) {
      constant = c.get_num();
      continue;
    }
    Word mag = abs(c.get_num());
    std::string term = (mag == 1 ? "" : mag.get_str() + "*") + basis.render(i);
    if (out.empty()) out = (sgn(c) < 0 ? "-" : "") + term;
    else out += (sgn(c) < 0 ? " - " : " + ") + term;
  }
  if (sgn(constant) != 0) {
    if (out.empty()) out = constant.get_str();
    else out += (sgn(constant) < 0 ? " - " : " + ") + Word(abs(constant)).get_str();
  }
  return out + " = 0";
}

interp::Trace merge_traces(const std::vector<interp::Trace>& traces) {
  if (traces.empty()) throw Error(ErrorKind::PreconditionViolation, "no traces to merge");
  interp::Trace out = traces[0];
  out.rows.clear();
  for (const auto& t : traces) {
    if (t.watched != out.watched || t.loop_id != out.loop_id)
      throw Error(ErrorKind::PreconditionViolation, "traces of different loops cannot be merged");
    out.rows.insert(out.rows.end(), t.rows.begin(), t.rows.end());
  }
  return out;
}

std::vector<PolyInvariant> fit_invariants(const interp::Trace& trace, unsigned max_degree) {
  if (trace.rows.size() < 2) throw Error(ErrorKind::PreconditionViolation, "fitting needs at least two rows");
  if (max_degree < 1) throw Error(ErrorKind::PreconditionViolation, "degree must be at least 1");
  MonomialBasis basis = MonomialBasis::make(trace.watched, max_degree);
  Matrix m = build_monomial_matrix(trace, basis);
  std::vector<PolyInvariant> out;
  for (auto& v : nullspace(m)) out.push_back({basis, normalize(std::move(v))});
  return out;
}

namespace {

const yul::YulFunction& function_or_throw(const yul::YulUnit& unit, const std::string& name) {
  const yul::YulFunction* f = unit.find(name);
  if (!f) throw Error(ErrorKind::CalleeUnknown, "unknown function " + name);
  return *f;
}

bool satisfies_pre(const yul::YulFunction& f, const std::vector<Word>& args) {
  interp::SpecEnv env;
  evm::EvmState st;
  env.entry = &st;
  env.current = &st;
  for (size_t i = 0; i < f.params.size() && i < args.size(); ++i) {
    env.entry_values[f.params[i]] = args[i];
    env.current_values[f.params[i]] = args[i];
  }
  for (const auto& s : f.specs) {
    if (s.kind != spec::Directive::Pre || s.deferred) continue;
    auto v = interp::eval_form(s.form, env);
    if (!v || !*v) return false;
  }
  return true;
}

std::optional<interp::Trace> run_once(const yul::YulUnit& unit, const std::string& fn, Span loop,
                                      const std::vector<Word>& args, uint64_t fuel) {
  interp::RunOptions opts;
  opts.fuel = fuel;
  opts.stubs.fallback = interp::Stub::havoc();
  std::vector<interp::Trace> traces;
  try {
    traces = interp::collect_loop_traces(unit, fn, args, evm::EvmState{}, opts);
  } catch (const Error&) {
    return std::nullopt;
  }
  std::optional<interp::Trace> merged;
  for (auto& t : traces) {
    if (t.loop_id != loop || t.rows.empty()) continue;
    if (!merged) merged = t;
    else merged->rows.insert(merged->rows.end(), t.rows.begin(), t.rows.end());
  }
  return merged;
}

}  // namespace

std::vector<interp::Trace> traces_for_runs(const yul::YulUnit& unit, const std::string& function, Span loop,
                                           const std::vector<std::vector<Word>>& runs, uint64_t fuel) {
  function_or_throw(unit, function);
  std::vector<interp::Trace> out;
  for (const auto& args : runs)
    if (auto t = run_once(unit, function, loop, args, fuel)) out.push_back(std::move(*t));
  return out;
}

std::vector<interp::Trace> sample_traces(const yul::YulUnit& unit, const std::string& function, Span loop,
                                         const SampleOptions& opts) {
  const yul::YulFunction& f = function_or_throw(unit, function);
  std::mt19937_64 rng(opts.seed);
  gmp_randclass gen(gmp_randinit_default);
  gen.seed(static_cast<unsigned long>(opts.seed));
  std::set<std::vector<Word>> tried;
  std::vector<interp::Trace> out;
  for (size_t a = 0; a < opts.attempts && out.size() < opts.runs; ++a) {
    std::vector<Word> args;
    for (size_t i = 0; i < f.params.size(); ++i) args.push_back(gen.get_z_range(opts.max_arg));
    if (!tried.insert(args).second) continue;
    if (!satisfies_pre(f, args)) continue;
    if (auto t = run_once(unit, function, loop, args, opts.fuel)) out.push_back(std::move(*t));
  }
  return out;
}

spec::SpecItem to_spec_item(const PolyInvariant& inv, const yul::YulUnit& unit, const std::string& function,
                            Span loop) {
  const yul::YulFunction& f = function_or_throw(unit, function);
  spec::SpecItem item;
  item.kind = spec::Directive::Inv;
  item.form = spec::parse_form(inv.to_annotation(), loop);
  item.span = loop;
  item = spec::resolve_identifiers(item, unit.scope_for(&f));
  return yul::lower_spec_accessors(item, unit.state_vars);
}

std::string_view to_string(ValidationStatus s) {
  switch (s) {
    case ValidationStatus::Valid: return "valid";
    case ValidationStatus::Invalid: return "invalid";
    case ValidationStatus::NotApplicable: return "not-applicable";
  }
  return "?";
}

Validation validate_invariants(const std::vector<PolyInvariant>& invs, const yul::YulUnit& unit,
                               const std::string& function, Span loop, const solver::SolverConfig& cfg,
                               const std::map<std::string, vir::EcfAnswer>& ecf, std::optional<unsigned> wrap_bits) {
  Validation out;
  if (invs.empty()) return out;
  vcgen::VcContext ctx = vcgen::build_context(unit, ecf, wrap_bits);
  auto it = ctx.functions.find(function);
  if (it == ctx.functions.end()) throw Error(ErrorKind::CalleeUnknown, "unknown function " + function);
  auto& extra = it->second.extra_invariants[loop];
  for (const auto& inv : invs) extra.push_back(to_spec_item(inv, unit, function, loop));
  auto obs = vcgen::generate_vcs(it->second, ctx);
  bool ok = true;
  for (auto& ob : obs) {
    bool installed = ob.origin == loop && (ob.kind == vcgen::ObKind::InvInit || ob.kind == vcgen::ObKind::InvPreserve);
    bool sufficiency = ob.kind == vcgen::ObKind::Post;
    if (!installed && !sufficiency) continue;
    auto v = solver::discharge(ob, cfg);
    if (installed && v.status != solver::Status::Verified) ok = false;
    out.results.emplace_back(std::move(ob), std::move(v));
  }
  out.status = ok ? ValidationStatus::Valid : ValidationStatus::Invalid;
  return out;
}

}  // namespace yulverify::infer
