// One PASS/FAIL line per acceptance criterion; exits 1 if any criterion fails.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "../shared/differential.hpp"
#include "../shared/evm_properties.hpp"
#include "yulverify/inference.hpp"
#include "yulverify/pipeline.hpp"

using namespace yulverify;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kTriadSeconds = 10.0;
constexpr double kWrapSeconds = 5.0;
constexpr double kInferSeconds = 5.0;
constexpr double kPerObligationSeconds = 2.0;
constexpr int kPropertyCases = 1000;
constexpr size_t kDiffRuns = 100;
constexpr size_t kDiffFixtures = 20;
constexpr size_t kMinCorpusObligations = 40;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fixture(const std::string& name) { return std::string(YV_FIXTURE_DIR) + "/" + name; }

std::string read(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Result {
  bool pass = false;
  std::string detail;
};

std::vector<std::string> corpus() {
  std::vector<std::string> out;
  for (const auto& dir : {std::string(""), std::string("straight/")})
    for (const auto& e : fs::directory_iterator(fixture(dir)))
      if (e.path().extension() == ".yul") out.push_back(dir + e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

pipeline::VerifyOptions corpus_options(const std::string& name, const solver::SolverConfig& cfg) {
  pipeline::VerifyOptions o;
  o.solver = cfg;
  o.ecf = {{"transferFrom", vir::EcfAnswer::Pure}};
  if (name.rfind("array_alloc", 0) == 0) o.wrap_bits = 64;
  return o;
}

pipeline::Report verify(const std::string& name, const pipeline::VerifyOptions& o) {
  return pipeline::verify_source(read(fixture(name)), name, o);
}

const pipeline::ObligationResult* find(const pipeline::Report& r, const std::string& id) {
  for (const auto& f : r.functions)
    for (const auto& o : f.obligations)
      if (o.obligation.id == id) return &o;
  return nullptr;
}

std::optional<solver::Status> status_of(const pipeline::Report& r, const std::string& id) {
  const auto* o = find(r, id);
  if (!o || !o->verdict) return std::nullopt;
  return o->verdict->status;
}

Result triad(const solver::SolverConfig& cfg) {
  auto t0 = Clock::now();
  auto buggy = verify("vote_buggy.yul", corpus_options("vote_buggy.yul", cfg));
  auto fixed = verify("vote_fixed.yul", corpus_options("vote_fixed.yul", cfg));
  double t = since(t0);

  std::vector<checks::PatternFinding> findings;
  for (const auto& f : buggy.functions)
    for (const auto& p : f.findings)
      if (p.pattern == checks::PatternKind::Reentrancy) findings.push_back(p);
  auto u = yul::lower_unit_specs(yul::parse_yul(read(fixture("vote_buggy.yul"))));
  Span transfer;
  for (const auto& s : vir::translate_function(*u.find("vote"), u).external_sites)
    if (s.callee == "transferFrom") transfer = s.span;
  bool a = findings.size() == 1 && findings[0].site == transfer;

  const auto* stakes = find(buggy, "vote.post.2");
  bool b = stakes && stakes->verdict && stakes->verdict->status == solver::Status::Refuted &&
           stakes->verdict->model &&
           solver::validate_model(stakes->obligation, *stakes->verdict->model) == std::optional<bool>(true) &&
           status_of(fixed, "vote.post.2") == solver::Status::Verified;
  bool c = status_of(buggy, "vote.post.1") == solver::Status::Verified &&
           status_of(fixed, "vote.post.1") == solver::Status::Verified;

  std::ostringstream d;
  d << "reentrancy findings=" << findings.size() << (a ? " at transferFrom" : "") << "; stakes post buggy="
    << (stakes && stakes->verdict ? solver::to_string(stakes->verdict->status) : "missing")
    << " fixed=" << (status_of(fixed, "vote.post.2") ? solver::to_string(*status_of(fixed, "vote.post.2")) : "missing")
    << "; revert post " << (c ? "Verified" : "not Verified") << "; " << t << "s";
  return {a && b && c && t < kTriadSeconds, d.str()};
}

Result wrap64(const solver::SolverConfig& cfg) {
  auto t0 = Clock::now();
  auto buggy = verify("array_alloc_buggy.yul", corpus_options("array_alloc_buggy.yul", cfg));
  auto fixed = verify("array_alloc_fixed.yul", corpus_options("array_alloc_fixed.yul", cfg));
  double t = since(t0);

  const Word w64 = pow2(64);
  size_t refuted = 0, oracle_ok = 0;
  Word mul_length = 0;
  for (const auto& f : buggy.functions)
    for (const auto& o : f.obligations) {
      if (o.obligation.kind != vcgen::ObKind::Overflow) continue;
      if (!o.verdict || o.verdict->status != solver::Status::Refuted || !o.verdict->model) continue;
      ++refuted;
      auto it = o.verdict->model->consts.find(vcgen::entry_name("length"));
      if (it == o.verdict->model->consts.end()) continue;
      Word len = it->second.num;
      bool is_mul = o.obligation.label.find("ovf.size.1") != std::string::npos;
      Word product = len * 32;
      bool overflows = is_mul ? product >= w64 : (product % w64) + 32 >= w64;
      if (is_mul) mul_length = len;
      if (overflows && len >= 0xffff && solver::validate_model(o.obligation, *o.verdict->model) == true) ++oracle_ok;
    }
  bool fixed_ok = fixed.overall().total > 0 && fixed.overall().verified == fixed.overall().total;
  bool family = mul_length >= pow2(59);

  std::ostringstream d;
  d << "overflow refuted=" << refuted << " oracle-checked=" << oracle_ok << " mul length=" << mul_length.get_str()
    << (family ? " (>= 2^59)" : " (< 2^59)") << "; fixed verified " << fixed.overall().verified << "/"
    << fixed.overall().total << "; " << t << "s";
  return {refuted == 2 && oracle_ok == 2 && family && fixed_ok && t < kWrapSeconds, d.str()};
}

Result evm_properties() {
  auto m = props::mload_violations(31337, kPropertyCases);
  auto s = props::storage_reduce_violations(4711, kPropertyCases);
  std::ostringstream d;
  d << "MLOAD " << kPropertyCases << " cases, " << m.size() << " failures; Storage Reduce " << kPropertyCases
    << " cases, " << s.size() << " failures";
  if (!m.empty()) d << "; first: " << m[0];
  if (!s.empty()) d << "; first: " << s[0];
  return {m.empty() && s.empty(), d.str()};
}

// 6y = x(x+1)(2x+1) - 2310 for the loop starting at (10, 0).
mpz_class closed_form(const mpz_class& x, const mpz_class& y) { return x * (x + 1) * (2 * x + 1) - 6 * y - 2310; }

Result inference(const solver::SolverConfig& cfg) {
  auto t0 = Clock::now();
  auto u = yul::lower_unit_specs(yul::parse_yul(read(fixture("vote_buggy.yul"))));
  Span loop;
  for (const auto& [fn, l] : pipeline::learn_loops(u))
    if (fn == "_lotteryReward") loop = l;
  auto merged = infer::merge_traces(infer::traces_for_runs(u, "_lotteryReward", loop, {{13}, {20}, {37}}));
  auto invs = infer::fit_invariants(merged, 3);
  if (invs.size() != 1) return {false, "expected one candidate, got " + std::to_string(invs.size())};
  const auto& inv = invs[0];

  bool residual = true;
  for (const auto& r : merged.rows) residual = residual && inv.evaluate(r.values) == 0;
  // Equal up to scale: the ratio to the closed form is one nonzero constant.
  std::mt19937_64 rng(5);
  std::optional<infer::Rational> ratio;
  bool proportional = true;
  for (int i = 0; i < 64 && proportional; ++i) {
    mpz_class x = static_cast<long>(rng() % 5000), y = static_cast<long>(rng() % 1000000);
    mpz_class c = closed_form(x, y);
    if (c == 0) continue;
    infer::Rational q = inv.evaluate({x, y}) / infer::Rational(c);
    if (!ratio) ratio = q;
    proportional = q == *ratio && q != 0;
  }

  auto v = infer::validate_invariants(invs, u, "_lotteryReward", loop, cfg, {{"transferFrom", vir::EcfAnswer::Pure}});
  bool init = false, preserve = false, all_verified = v.status == infer::ValidationStatus::Valid;
  for (const auto& [ob, verdict] : v.results) {
    all_verified = all_verified && verdict.status == solver::Status::Verified;
    init = init || ob.kind == vcgen::ObKind::InvInit;
    preserve = preserve || ob.kind == vcgen::ObKind::InvPreserve;
  }
  double t = since(t0);
  std::ostringstream d;
  d << inv.to_annotation() << "; rows=" << merged.rows.size() << " residual " << (residual ? "zero" : "NONZERO")
    << "; " << (proportional ? "proportional" : "not proportional") << " to closed form; init+preserve "
    << (all_verified && init && preserve ? "Verified" : "not Verified") << "; " << t << "s";
  return {residual && proportional && ratio && all_verified && init && preserve && t < kInferSeconds, d.str()};
}

Result differential(const solver::SolverConfig& cfg) {
  size_t fixtures = 0, runs = 0, violations = 0, not_verified = 0;
  std::string first;
  for (const auto& name : corpus()) {
    if (name.rfind("straight/", 0) != 0) continue;
    ++fixtures;
    auto report = verify(name, corpus_options(name, cfg));
    if (report.overall().verified != report.overall().total) ++not_verified;
    auto u = yul::lower_unit_specs(yul::parse_yul(read(fixture(name))));
    for (const auto& o : diff::check_unit(u, kDiffRuns, 4242)) {
      runs += o.accepted;
      if (o.accepted < kDiffRuns) ++violations;
      violations += o.failures.size();
      if (first.empty() && !o.failures.empty()) first = o.failures[0];
    }
  }
  std::ostringstream d;
  d << fixtures << " fixtures (" << not_verified << " not fully Verified), " << runs << " accepted runs, "
    << violations << " violations";
  if (!first.empty()) d << "; first: " << first;
  return {fixtures == kDiffFixtures && not_verified == 0 && violations == 0, d.str()};
}

std::map<std::string, std::optional<solver::Verdict>> verdicts(const solver::SolverConfig& cfg,
                                                                std::array<pipeline::Totals, 6>& by_type,
                                                                bool& consistent) {
  std::map<std::string, std::optional<solver::Verdict>> out;
  consistent = true;
  for (const auto& name : corpus()) {
    auto r = verify(name, corpus_options(name, cfg));
    pipeline::Totals sum;
    for (size_t i = 0; i < 6; ++i) {
      by_type[i] += r.by_type[i];
      sum += r.by_type[i];
    }
    auto all = r.overall();
    consistent = consistent && sum.total == all.total &&
                 all.total == all.verified + all.refuted + all.unknown + all.timeout + all.solver_error + all.deferred;
    for (const auto& f : r.functions)
      for (const auto& o : f.obligations) out[name + ":" + o.obligation.id] = o.verdict;
  }
  return out;
}

Result performance(const solver::SolverConfig& cfg) {
  std::array<pipeline::Totals, 6> by_type{};
  bool consistent = false;
  auto vs = verdicts(cfg, by_type, consistent);
  size_t discharged = 0, slow = 0, undecided = 0;
  double worst = 0;
  std::string worst_id;
  for (const auto& [id, v] : vs) {
    if (!v) continue;
    ++discharged;
    if (v->wall_time > worst) {
      worst = v->wall_time;
      worst_id = id;
    }
    if (v->wall_time >= kPerObligationSeconds) ++slow;
    if (v->status != solver::Status::Verified && v->status != solver::Status::Refuted) ++undecided;
  }
  bool spans = true;
  std::ostringstream d;
  d << discharged << " obligations; by type";
  for (size_t i = 0; i < 6; ++i) {
    d << " T" << i + 1 << "=" << by_type[i].total;
    if (i < 5) spans = spans && by_type[i].total > 0;
  }
  d << "; max " << worst << "s (" << worst_id << "); slow=" << slow << " undecided=" << undecided
    << "; totals " << (consistent ? "consistent" : "INCONSISTENT");
  return {discharged >= kMinCorpusObligations && spans && slow == 0 && undecided == 0 && consistent, d.str()};
}

Result agreement(const std::vector<solver::SolverConfig>& cfgs) {
  if (cfgs.size() < 2) return {false, "fewer than two backends configured"};
  std::vector<std::map<std::string, std::optional<solver::Verdict>>> runs;
  for (const auto& c : cfgs) {
    std::array<pipeline::Totals, 6> by_type{};
    bool consistent = false;
    runs.push_back(verdicts(c, by_type, consistent));
  }
  size_t compared = 0, contradictions = 0;
  std::string first;
  auto decided = [](const std::optional<solver::Verdict>& v) {
    return v && (v->status == solver::Status::Verified || v->status == solver::Status::Refuted);
  };
  for (size_t i = 0; i < runs.size(); ++i)
    for (size_t j = i + 1; j < runs.size(); ++j)
      for (const auto& [id, v] : runs[i]) {
        auto it = runs[j].find(id);
        if (it == runs[j].end() || !decided(v) || !decided(it->second)) continue;
        ++compared;
        if (v->status != it->second->status) {
          ++contradictions;
          if (first.empty()) first = id;
        }
      }
  std::ostringstream d;
  d << "backends";
  for (const auto& c : cfgs) d << " " << c.name();
  d << "; " << compared << " decided pairs, " << contradictions << " contradictions";
  if (!first.empty()) d << " (first: " << first << ")";
  return {contradictions == 0 && compared > 0, d.str()};
}

}  // namespace

int main() {
  auto z3 = solver::make_config(solver::Backend::Z3);
  auto configs = solver::available_configs();
  std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"vote triad", [&] { return z3 ? triad(*z3) : Result{false, "z3 not installed"}; }},
      {"64-bit overflow", [&] { return z3 ? wrap64(*z3) : Result{false, "z3 not installed"}; }},
      {"EVM properties", [] { return evm_properties(); }},
      {"invariant inference", [&] { return z3 ? inference(*z3) : Result{false, "z3 not installed"}; }},
      {"differential soundness", [&] { return z3 ? differential(*z3) : Result{false, "z3 not installed"}; }},
      {"per-obligation time", [&] { return z3 ? performance(*z3) : Result{false, "z3 not installed"}; }},
      {"solver agreement", [&] { return agreement(configs); }},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << r.detail
              << std::endl;
  }
  return failed ? 1 : 0;
}
