#include "yulverify/pipeline.hpp"

#include <chrono>
#include <functional>
#include <sstream>

namespace yulverify::pipeline {

void Totals::add(const ObligationResult& r) {
  ++total;
  if (!r.verdict) {
    ++deferred;
    return;
  }
  time += r.verdict->wall_time;
  switch (r.verdict->status) {
    case solver::Status::Verified: ++verified; break;
    case solver::Status::Refuted: ++refuted; break;
    case solver::Status::Unknown: ++unknown; break;
    case solver::Status::Timeout: ++timeout; break;
    case solver::Status::SolverError: ++solver_error; break;
  }
}

Totals& Totals::operator+=(const Totals& o) {
  total += o.total;
  verified += o.verified;
  refuted += o.refuted;
  unknown += o.unknown;
  timeout += o.timeout;
  solver_error += o.solver_error;
  deferred += o.deferred;
  time += o.time;
  return *this;
}

Totals Report::overall() const {
  Totals t;
  for (const auto& b : by_type) t += b;
  return t;
}

size_t Report::finding_count() const {
  size_t n = 0;
  for (const auto& f : functions) n += f.findings.size();
  return n;
}

int Report::exit_code() const {
  Totals t = overall();
  if (t.total - t.deferred != t.verified) return 1;
  if (strict_deferred && t.deferred > 0) return 1;
  return finding_count() == 0 ? 0 : 1;
}

namespace {

nlohmann::json totals_json(const Totals& t) {
  return {{"total", t.total},     {"verified", t.verified}, {"refuted", t.refuted},
          {"unknown", t.unknown}, {"timeout", t.timeout},   {"solver_error", t.solver_error},
          {"deferred", t.deferred}, {"time", t.time}};
}

nlohmann::json obligation_json(const ObligationResult& r) {
  const auto& ob = r.obligation;
  nlohmann::json j = {{"id", ob.id},
                      {"kind", std::string(vcgen::to_string(ob.kind))},
                      {"property_type", std::string(vcgen::to_string(ob.property_type))},
                      {"origin", ob.origin.str()},
                      {"label", ob.label},
                      {"deferred", ob.deferred}};
  if (!r.verdict) {
    j["status"] = "deferred";
    return j;
  }
  j["status"] = std::string(solver::to_string(r.verdict->status));
  j["wall_time"] = r.verdict->wall_time;
  j["backend"] = r.verdict->backend;
  if (!r.verdict->message.empty()) j["message"] = r.verdict->message;
  if (r.verdict->model) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [name, v] : r.verdict->model->consts) m[name] = v.str();
    j["model"] = m;
  }
  return j;
}

}  // namespace

nlohmann::json finding_to_json(const checks::PatternFinding& f) {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& s : f.witness) w.push_back(s.str());
  return {{"pattern", std::string(checks::to_string(f.pattern))},
          {"function", f.function},
          {"site", f.site.str()},
          {"sink", f.sink.str()},
          {"witness", w},
          {"message", f.message}};
}

nlohmann::json Report::to_json() const {
  nlohmann::json fns = nlohmann::json::array();
  for (const auto& f : functions) {
    nlohmann::json obs = nlohmann::json::array();
    for (const auto& r : f.obligations) obs.push_back(obligation_json(r));
    nlohmann::json finds = nlohmann::json::array();
    for (const auto& p : f.findings) finds.push_back(finding_to_json(p));
    nlohmann::json invs = nlohmann::json::array();
    for (const auto& l : f.invariants)
      invs.push_back({{"loop", l.loop.str()},
                      {"watched", l.watched},
                      {"runs", l.runs},
                      {"rows", l.rows},
                      {"candidates", l.candidates},
                      {"installed", l.installed},
                      {"status", std::string(infer::to_string(l.status))},
                      {"message", l.message}});
    fns.push_back({{"name", f.name}, {"obligations", obs}, {"findings", finds}, {"invariants", invs}});
  }
  nlohmann::json totals = nlohmann::json::object();
  for (size_t i = 0; i < by_type.size(); ++i) totals["T" + std::to_string(i + 1)] = totals_json(by_type[i]);
  totals["all"] = totals_json(overall());
  return {{"unit", unit},
          {"backend", backend},
          {"functions", fns},
          {"totals", totals},
          {"findings", finding_count()},
          {"deferred", nlohmann::json::parse(deferred.to_json())["obligations"]},
          {"strict_deferred", strict_deferred},
          {"wall_time", wall_time},
          {"exit_code", exit_code()}};
}

std::string Report::summary() const {
  std::ostringstream out;
  for (const auto& f : functions) {
    for (const auto& p : f.findings)
      out << "finding " << checks::to_string(p.pattern) << " " << p.function << " at " << p.site.str() << ": "
          << p.message << "\n";
    for (const auto& l : f.invariants) {
      out << "infer " << f.name << " loop " << l.loop.str() << ": " << infer::to_string(l.status);
      for (const auto& c : l.installed) out << "\n  @inv " << c;
      if (!l.message.empty()) out << "\n  " << l.message;
      out << "\n";
    }
    for (const auto& r : f.obligations) {
      out << r.obligation.id << " [" << vcgen::to_string(r.obligation.property_type) << "] ";
      if (!r.verdict) {
        out << "deferred";
      } else {
        out << solver::to_string(r.verdict->status);
        char buf[32];
        std::snprintf(buf, sizeof buf, " %.3fs", r.verdict->wall_time);
        out << buf;
      }
      out << "  " << r.obligation.label << "\n";
    }
  }
  Totals t = overall();
  out << "total " << t.total << ": verified " << t.verified << ", refuted " << t.refuted << ", unknown "
      << t.unknown << ", timeout " << t.timeout << ", error " << t.solver_error << ", deferred " << t.deferred
      << "; findings " << finding_count() << "\n";
  return out.str();
}

std::set<std::string> external_callees(const yul::YulUnit& unit) {
  std::set<std::string> out;
  for (const auto& f : unit.functions)
    for (const auto& s : vir::translate_function(f, unit).external_sites) out.insert(s.callee);
  return out;
}

std::vector<std::pair<std::string, Span>> learn_loops(const yul::YulUnit& unit) {
  std::vector<std::pair<std::string, Span>> out;
  for (const auto& f : unit.functions) {
    std::function<void(const yul::Block&)> walk = [&](const yul::Block& b) {
      for (const auto& st : b.stmts) {
        std::visit(
            [&](const auto& n) {
              using T = std::decay_t<decltype(n)>;
              if constexpr (std::is_same_v<T, yul::Block>) {
                walk(n);
              } else if constexpr (std::is_same_v<T, yul::If>) {
                walk(n.body);
              } else if constexpr (std::is_same_v<T, yul::Switch>) {
                for (const auto& c : n.cases) walk(c.body);
                if (n.default_body) walk(*n.default_body);
              } else if constexpr (std::is_same_v<T, yul::For>) {
                for (const auto& s : st->specs)
                  if (s.kind == spec::Directive::Learn) {
                    out.emplace_back(f.name, st->span);
                    break;
                  }
                walk(n.init);
                walk(n.body);
                walk(n.post);
              }
            },
            st->node);
      }
    };
    walk(f.body);
  }
  return out;
}

namespace {

bool init_and_preserve_hold(const infer::Validation& v, Span loop) {
  bool any = false;
  for (const auto& [ob, verdict] : v.results) {
    if (ob.origin != loop || (ob.kind != vcgen::ObKind::InvInit && ob.kind != vcgen::ObKind::InvPreserve)) continue;
    any = true;
    if (verdict.status != solver::Status::Verified) return false;
  }
  return any;
}

}  // namespace

InferredLoop infer_loop(const yul::YulUnit& unit, const std::string& function, Span loop, const VerifyOptions& opts,
                        std::vector<spec::SpecItem>& installed) {
  InferredLoop out;
  out.loop = loop;
  auto traces = infer::sample_traces(unit, function, loop, opts.sampling);
  out.runs = traces.size();
  for (const auto& t : traces) out.rows += t.rows.size();
  if (!traces.empty()) out.watched = traces.front().watched;
  if (traces.size() < 2 || out.rows < 2) {
    out.message = "fewer than two sampled runs reach the loop; supply @inv";
    return out;
  }
  auto invs = infer::fit_invariants(infer::merge_traces(traces), opts.degree);
  for (const auto& i : invs) out.candidates.push_back(i.to_annotation());
  if (invs.empty()) {
    out.message = "no polynomial equality of degree <= " + std::to_string(opts.degree) + " fits; supply @inv";
    return out;
  }
  std::vector<infer::PolyInvariant> keep;
  auto joint = infer::validate_invariants(invs, unit, function, loop, opts.solver, opts.ecf, opts.wrap_bits);
  if (init_and_preserve_hold(joint, loop)) {
    keep = invs;
  } else {
    for (const auto& i : invs) {
      auto v = infer::validate_invariants({i}, unit, function, loop, opts.solver, opts.ecf, opts.wrap_bits);
      if (init_and_preserve_hold(v, loop)) keep.push_back(i);
    }
  }
  for (const auto& i : keep) {
    out.installed.push_back(i.to_annotation());
    installed.push_back(infer::to_spec_item(i, unit, function, loop));
  }
  if (keep.empty()) {
    out.status = infer::ValidationStatus::Invalid;
    out.message = "no inferred invariant validated; supply @inv";
  } else {
    out.status = infer::ValidationStatus::Valid;
  }
  return out;
}

Report verify_unit(const yul::YulUnit& parsed, const VerifyOptions& opts) {
  auto start = std::chrono::steady_clock::now();
  Report report;
  report.unit = parsed.name;
  report.backend = opts.solver.name();
  report.strict_deferred = opts.strict_deferred;
  yul::YulUnit unit = yul::lower_unit_specs(parsed);

  std::map<std::string, size_t> index;
  for (const auto& f : unit.functions) {
    index[f.name] = report.functions.size();
    report.functions.push_back({f.name, {}, {}, {}});
  }
  for (auto& p : checks::run_checks(unit)) report.functions[index.at(p.function)].findings.push_back(std::move(p));

  std::map<std::string, std::map<Span, std::vector<spec::SpecItem>>> learned;
  for (const auto& [fn, loop] : learn_loops(unit)) {
    auto& items = learned[fn][loop];
    report.functions[index.at(fn)].invariants.push_back(infer_loop(unit, fn, loop, opts, items));
  }

  vcgen::VcContext ctx = vcgen::build_context(unit, opts.ecf, opts.wrap_bits);
  ctx.t6_functions = opts.t6_functions;
  ctx.storage_reduce = opts.storage_reduce;
  for (const auto& [fn, loops] : learned)
    for (const auto& [loop, items] : loops) {
      for (auto* m : {&ctx.functions, &ctx.plain}) {
        auto& extra = m->at(fn).extra_invariants[loop];
        extra.insert(extra.end(), items.begin(), items.end());
      }
    }

  std::vector<vcgen::Obligation> to_solve;
  std::vector<vcgen::Obligation> deferred;
  std::vector<std::pair<size_t, size_t>> slot;  // (function, obligation) per solved obligation
  for (const auto& f : unit.functions) {
    auto& fr = report.functions[index.at(f.name)];
    for (auto& ob : vcgen::generate_vcs(ctx.functions.at(f.name), ctx)) {
      if (ob.deferred) {
        deferred.push_back(ob);
      } else {
        slot.emplace_back(index.at(f.name), fr.obligations.size());
        to_solve.push_back(ob);
      }
      fr.obligations.push_back({std::move(ob), std::nullopt});
    }
  }
  auto verdicts = solver::discharge_all(to_solve, opts.solver, std::max(1u, opts.jobs));
  for (size_t i = 0; i < verdicts.size(); ++i)
    report.functions[slot[i].first].obligations[slot[i].second].verdict = std::move(verdicts[i]);

  report.deferred = opts.deferred_dir ? solver::export_deferred(deferred, *opts.deferred_dir)
                                      : solver::deferred_manifest(deferred);
  for (const auto& f : report.functions)
    for (const auto& r : f.obligations) report.by_type[static_cast<size_t>(r.obligation.property_type)].add(r);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Report verify_source(std::string_view text, const std::string& unit_name, const VerifyOptions& opts) {
  return verify_unit(yul::parse_yul(text, unit_name), opts);
}

}  // namespace yulverify::pipeline
