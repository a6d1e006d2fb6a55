#ifndef TEXP_CLI_HPP
#define TEXP_CLI_HPP

// Command-line driver: flag parsing, dispatch, and report formatting only;
// every query runs through the library headers.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "texp/dimacs.hpp"
#include "texp/discretize.hpp"
#include "texp/encode.hpp"
#include "texp/errors.hpp"
#include "texp/explain.hpp"
#include "texp/maxsat.hpp"
#include "texp/model.hpp"
#include "texp/model_io.hpp"
#include "texp/oracle.hpp"
#include "texp/sat_solver.hpp"
#include "texp/verify.hpp"

namespace texp::cli {

// Exit codes, also listed in --help:
//   0 success (including "no counterexample explanation exists")
//   2 invalid usage: bad flags, malformed values, model/instance mismatch
//   3 unreadable input: file missing or syntactically broken
//   4 time limit exceeded
//   5 internal error
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_parse = 3;
inline constexpr int exit_timeout = 4;
inline constexpr int exit_internal = 5;

using Json = nlohmann::ordered_json;

/** Line-delimited structured output ("texp/1" schema) or human text. */
class Emitter {
 public:
  Emitter(std::ostream& out, bool json) : out_(out), json_(json) {}

  bool json() const { return json_; }
  std::ostream& out() { return out_; }

  void header(const std::string& command, long long seed) {
    if (!json_) return;
    Json j;
    j["record"] = "header";
    j["schema"] = "texp/1";
    j["command"] = command;
    j["seed"] = seed;
    out_ << j.dump() << "\n";
  }

  void record(const Json& j) {
    if (json_) out_ << j.dump() << "\n";
  }

  void line(const std::string& s) {
    if (!json_) out_ << s << "\n";
  }

 private:
  std::ostream& out_;
  bool json_;
};

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(detail::trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(detail::trim(cur));
  return out;
}

struct InstanceSource {
  std::string inline_text;
  std::string file;
  std::string csv;
  long long row = -1;

  bool given() const { return !inline_text.empty() || !file.empty() || !csv.empty(); }
};

inline std::string read_line_from_file(const std::string& path, long long row) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string line;
  long long n = 0;
  while (std::getline(in, line)) {
    if (row < 0 && detail::trim(line).empty()) continue;  // first non-empty line
    if (row < 0 || n == row) return line;
    ++n;
  }
  if (row < 0) throw ParseError("'" + path + "' holds no instance line");
  throw ValidationError("row " + std::to_string(row) + " is past the end of '" + path + "'");
}

inline Instance load_instance(const Ensemble& e, const InstanceSource& s) {
  const int sources = (s.inline_text.empty() ? 0 : 1) + (s.file.empty() ? 0 : 1) + (s.csv.empty() ? 0 : 1);
  if (sources > 1)
    throw ValidationError("more than one instance source given: pick one of --instance, --instance-file, --csv/--row");
  if (!s.inline_text.empty()) return parse_instance(e, s.inline_text);
  if (!s.file.empty()) return parse_instance(e, read_line_from_file(s.file, -1));
  if (!s.csv.empty()) {
    if (s.row < 0) throw ValidationError("--csv needs --row");
    return parse_instance(e, read_line_from_file(s.csv, s.row));
  }
  throw ValidationError("no instance given: use --instance, --instance-file, or --csv/--row");
}

inline int feature_index(const Ensemble& e, const std::string& tok) {
  for (int i = 0; i < e.num_features(); ++i)
    if (e.features[static_cast<std::size_t>(i)].name == tok) return i;
  try {
    std::size_t used = 0;
    const int k = std::stoi(tok, &used);
    if (used == tok.size()) return k;
  } catch (const std::exception&) {
  }
  throw ValidationError("unknown feature '" + tok + "'");
}

inline std::vector<int> feature_list(const Ensemble& e, const std::string& csv) {
  std::vector<int> out;
  for (const std::string& tok : split_csv(csv))
    if (!tok.empty()) out.push_back(feature_index(e, tok));
  return out;
}

inline Json instance_to_json(const Ensemble& e, const Instance& x) {
  Json a = Json::array();
  for (std::size_t i = 0; i < x.size(); ++i) a.push_back(value_to_string(e.features[i], x[i]));
  return a;
}

inline Json scores_json(const Ensemble& e, const Instance& x) {
  Json a = Json::array();
  for (const Rat& s : class_scores(e, x)) a.push_back(s.to_string());
  return a;
}

inline std::string scores_text(const Ensemble& e, const Instance& x) {
  std::string t;
  for (const Rat& s : class_scores(e, x)) t += (t.empty() ? "" : " ") + s.to_string();
  return t;
}

inline std::string class_label(const Ensemble& e, int c) {
  return e.classes[static_cast<std::size_t>(c)];
}

/** "petal.length in [2.45, 3)" for ranges, "color = red" for discrete kinds. */
inline std::string feature_interval_desc(const Feature& f, const FeatureIntervals& fi, int k) {
  return f.name + (f.kind == FeatureKind::real_num ? " in " : " = ") +
         interval_to_string(f, fi, k);
}

struct ModeFlags {
  std::string path;  // "", "sat", "maxsat"
  std::string attack = "pairwise";
  std::string strictness = "index";
  bool no_strat = false;
  bool no_reuse = false;
  bool no_early = false;
  bool no_dynamic = false;
  double order_decay = 0.95;
  int order_period = 32;
};

inline void add_mode_flags(CLI::App* cmd, ModeFlags& mf) {
  cmd->add_option("--path", mf.path,
                  "query path: sat (vote attack, majority-vote forests) or maxsat (score "
                  "gap); default picked by the model variant")
      ->check(CLI::IsMember({"sat", "maxsat"}));
  cmd->add_option("--attack", mf.attack, "vote attack encoding (sat path)")
      ->check(CLI::IsMember({"pairwise", "two-comparator", "k2"}));
  cmd->add_option("--strictness", mf.strictness,
                  "score comparison: index (tie-break aware, default), nonstrict, strict")
      ->check(CLI::IsMember({"index", "nonstrict", "strict"}));
  cmd->add_flag("--no-stratification", mf.no_strat, "disable weight stratification");
  cmd->add_flag("--no-core-reuse", mf.no_reuse, "disable core reuse across queries");
  cmd->add_flag("--no-early-termination", mf.no_early, "always optimize to the exact maximum");
  cmd->add_flag("--no-dynamic-order", mf.no_dynamic, "keep opponent classes in index order");
  cmd->add_option("--order-decay", mf.order_decay, "opponent activity decay factor");
  cmd->add_option("--order-period", mf.order_period, "decay period in wins");
}

inline XpOptions to_options(const ModeFlags& mf) {
  XpOptions o;
  if (mf.path == "sat") o.mode = QueryMode::sat_votes;
  if (mf.path == "maxsat") o.mode = QueryMode::weighted_gap;
  if (mf.attack == "two-comparator") o.attack = AttackVariant::two_comparator;
  if (mf.attack == "k2") o.attack = AttackVariant::k2;
  if (mf.strictness == "nonstrict") o.strictness = GapStrictness::nonstrict;
  if (mf.strictness == "strict") o.strictness = GapStrictness::strict;
  o.stratification = !mf.no_strat;
  o.core_reuse = !mf.no_reuse;
  o.early_termination = !mf.no_early;
  o.dynamic_order = !mf.no_dynamic;
  o.order_decay = mf.order_decay;
  o.order_period = mf.order_period;
  return o;
}

inline std::optional<std::chrono::steady_clock::time_point> make_deadline(double seconds) {
  if (seconds <= 0) return std::nullopt;
  return std::chrono::steady_clock::now() +
         std::chrono::duration_cast<std::chrono::steady_clock::duration>(
             std::chrono::duration<double>(seconds));
}

inline double env_time_limit() {
  const char* s = std::getenv("TEXP_TIME_LIMIT");
  if (s == nullptr || *s == '\0') return 0.0;
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == nullptr || *end != '\0' || v < 0)
    throw ValidationError("TEXP_TIME_LIMIT must be a non-negative number of seconds");
  return v;
}

inline Ensemble load_model_checked(const std::string& path) {
  if (path.empty()) throw ValidationError("this command needs --model");
  return load_model_file(path);
}

// ---------------------------------------------------------------------------
// Command handlers.

inline void emit_explanation(Emitter& em, const Ensemble& e, const IntervalMap& imap,
                             const Instance& v, const Explanation& x) {
  Json j;
  j["record"] = "explanation";
  j["kind"] = x.kind == XpKind::axp ? "axp" : "cxp";
  j["features"] = x.features;
  Json names = Json::array();
  for (int f : x.features) names.push_back(e.features[static_cast<std::size_t>(f)].name);
  j["feature_names"] = names;
  // The interval each listed feature occupies: the constraint kept for a
  // sufficient set, the witness's position for a countering set.
  const Instance& where = x.kind == XpKind::cxp && x.witness.has_value() ? *x.witness : v;
  Json ivs = Json::array();
  std::string human;
  for (std::size_t i = 0; i < x.features.size(); ++i) {
    const auto f = static_cast<std::size_t>(x.features[i]);
    const std::string desc =
        feature_interval_desc(e.features[f], imap.feats[f], interval_of(imap.feats[f], where[f]));
    ivs.push_back(desc);
    if (i) human += ", ";
    human += desc;
  }
  j["intervals"] = ivs;
  std::string line = std::string(x.kind == XpKind::axp ? "axp" : "cxp") + " {";
  for (std::size_t i = 0; i < x.features.size(); ++i)
    line += (i ? "," : "") + std::to_string(x.features[i]);
  line += "}: " + human;
  if (x.witness.has_value()) {
    const int wc = predict(e, *x.witness);
    j["witness"] = instance_to_json(e, *x.witness);
    j["witness_class"] = wc;
    j["witness_label"] = class_label(e, wc);
    line += " | witness " + instance_to_string(e, *x.witness) + " -> " + std::to_string(wc) +
            " (" + class_label(e, wc) + ")";
  } else {
    j["witness"] = nullptr;
  }
  em.record(j);
  em.line(line);
}

inline void emit_stats(Emitter& em, const SessionStats& s) {
  Json j;
  j["record"] = "stats";
  j["entails_calls"] = s.entails_calls;
  j["sat_solves"] = s.sat_solves;
  j["maxsat_checks"] = s.maxsat_checks;
  em.record(j);
  em.line("stats: entails=" + std::to_string(s.entails_calls) +
          " sat=" + std::to_string(s.sat_solves) +
          " maxsat=" + std::to_string(s.maxsat_checks));
}

inline void emit_prediction(Emitter& em, const Ensemble& e, const Instance& v) {
  const std::vector<Rat> scores = class_scores(e, v);
  const int c = predict(e, v);
  Json j;
  j["record"] = "prediction";
  j["class"] = c;
  j["label"] = class_label(e, c);
  Json sc = Json::array();
  for (const Rat& s : scores) sc.push_back(s.to_string());
  j["scores"] = sc;
  em.record(j);
  std::string line = "prediction: " + std::to_string(c) + " (" + class_label(e, c) + ")  scores:";
  for (const Rat& s : scores) line += " " + s.to_string();
  em.line(line);
}

struct ExplainFlags {
  bool axp = false;
  bool cxp = false;
  bool smallest = false;
};

inline void run_explain(Emitter& em, const Ensemble& e, const Instance& v, const XpOptions& opt,
                        const ExplainFlags& ef, int jobs,
                        std::optional<std::chrono::steady_clock::time_point> deadline) {
  XpSession s(e, v, opt);
  s.set_deadline(deadline);
  emit_prediction(em, e, v);
  const bool want_axp = ef.axp || !ef.cxp;  // default: abductive
  if (want_axp)
    emit_explanation(em, e, s.imap(), v, ef.smallest ? s.smallest_axp() : s.find_axp());
  if (ef.cxp) {
    std::optional<Explanation> cx = ef.smallest ? s.smallest_cxp(jobs) : s.find_cxp();
    if (cx.has_value()) {
      emit_explanation(em, e, s.imap(), v, *cx);
    } else {
      Json j;
      j["record"] = "explanation";
      j["kind"] = "cxp";
      j["features"] = nullptr;
      j["note"] = "prediction is constant; no counterexample explanation exists";
      em.record(j);
      em.line("cxp: none (prediction is constant over the model's value grid)");
    }
  }
  emit_stats(em, s.stats());
}

inline void run_enumerate(Emitter& em, const Ensemble& e, const Instance& v,
                          const XpOptions& opt, long long limit, const std::string& kinds,
                          std::optional<std::chrono::steady_clock::time_point> deadline) {
  XpSession s(e, v, opt);
  s.set_deadline(deadline);
  emit_prediction(em, e, v);
  XpSession::EnumerateOptions eo;
  eo.limit = limit;
  eo.axps = kinds != "cxp";
  eo.cxps = kinds != "axp";
  const std::vector<Explanation> all = s.enumerate(eo);
  for (const Explanation& x : all) emit_explanation(em, e, s.imap(), v, x);
  Json j;
  j["record"] = "enumeration";
  j["count"] = all.size();
  j["exhausted"] = limit < 0 || static_cast<long long>(all.size()) < limit;
  em.record(j);
  em.line("enumerated " + std::to_string(all.size()) + " explanation(s)");
  emit_stats(em, s.stats());
}

inline void run_fairness(Emitter& em, const Ensemble& e, const std::vector<int>& prot,
                         std::optional<std::chrono::steady_clock::time_point> deadline) {
  const FairnessResult r = check_fairness(e, prot, deadline);
  Json j;
  j["record"] = "fairness";
  j["protected"] = prot;
  j["fair"] = r.fair;
  if (r.fair) {
    em.record(j);
    em.line("fair");
    return;
  }
  const WitnessPair& w = *r.witness;
  j["witness_a"] = instance_to_json(e, w.a);
  j["class_a"] = w.class_a;
  j["scores_a"] = scores_json(e, w.a);
  j["witness_b"] = instance_to_json(e, w.b);
  j["class_b"] = w.class_b;
  j["scores_b"] = scores_json(e, w.b);
  em.record(j);
  em.line("unfair");
  em.line("a: " + instance_to_string(e, w.a) + " -> " + std::to_string(w.class_a) + " (" +
          class_label(e, w.class_a) + ")  scores: " + scores_text(e, w.a));
  em.line("b: " + instance_to_string(e, w.b) + " -> " + std::to_string(w.class_b) + " (" +
          class_label(e, w.class_b) + ")  scores: " + scores_text(e, w.b));
}

inline void run_robustness(Emitter& em, const Ensemble& e, const Instance& v, int delta,
                           std::optional<std::chrono::steady_clock::time_point> deadline) {
  const RobustnessResult r = check_robustness(e, v, delta, deadline);
  Json j;
  j["record"] = "robustness";
  j["delta"] = delta;
  j["class"] = predict(e, v);
  j["scores"] = scores_json(e, v);
  j["robust"] = r.robust;
  if (r.robust) {
    em.record(j);
    em.line("robust (delta=" + std::to_string(delta) + ")");
    return;
  }
  j["witness"] = instance_to_json(e, *r.witness);
  j["witness_class"] = r.witness_class;
  j["witness_scores"] = scores_json(e, *r.witness);
  em.record(j);
  em.line("violated (delta=" + std::to_string(delta) + ")");
  em.line("witness: " + instance_to_string(e, *r.witness) + " -> " +
          std::to_string(r.witness_class) + " (" + class_label(e, r.witness_class) +
          ")  scores: " + scores_text(e, *r.witness));
}

/** Variable names for the dump sidecar: domain literals plus vote/path atoms. */
class NameMap {
 public:
  void put(Lit l, std::string name) { names_.emplace(l.var(), std::move(name)); }

  void add_domain(const Ensemble& e, const IntervalMap& imap, const DomainEncoding& dom) {
    for (std::size_t f = 0; f < imap.feats.size(); ++f) {
      const Feature& ft = e.features[f];
      const FeatureIntervals& fi = imap.feats[f];
      const FeatureLits& fl = dom.features()[f];
      for (std::size_t k = 0; k < fl.thresholds.size(); ++k)
        put(fl.thresholds[k],
            ft.name + (fi.splits[k].incl ? "<=" : "<") + fi.splits[k].value.to_string());
      for (std::size_t k = 0; k < fl.intervals.size(); ++k)
        put(fl.intervals[k], feature_interval_desc(ft, fi, static_cast<int>(k)));
    }
  }

  void write(std::ostream& os) const {
    os << "c variable semantics; unnamed variables are internal gadget variables\n";
    for (const auto& [var, name] : names_) os << "v " << var << " " << name << "\n";
  }

 private:
  std::map<int, std::string> names_;
};

inline void run_encode(Emitter& em, const Ensemble& e, const Instance& v, const XpOptions& opt,
                       const std::string& prefix) {
  const QueryMode mode = opt.mode.value_or(default_mode(e.variant));
  std::vector<std::string> files;
  const auto open_out = [](const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot write '" + path + "'");
    return os;
  };
  NameMap names;
  if (mode == QueryMode::sat_votes) {
    if (e.variant != Variant::rfmv)
      throw UsageError("the sat path requires a majority-vote forest");
    const IntervalMap imap = build_interval_map(e);
    const int target = predict(e, v);
    Cnf cnf;
    DomainEncoding dom(cnf, e, imap);
    VoteEncoding votes(dom);
    add_overtake_block(dom, votes, target, opt.attack);
    names.add_domain(e, imap, dom);
    for (int t = 0; t < e.num_trees(); ++t)
      for (int c = 0; c < e.num_classes(); ++c)
        if (std::optional<Lit> l = votes.vote(t, c); l.has_value())
          names.put(*l, "tree" + std::to_string(t) + " votes " + class_label(e, c));
    std::ofstream os = open_out(prefix + ".cnf");
    write_dimacs(os, cnf);
    files.push_back(prefix + ".cnf");
  } else {
    const Ensemble work = to_unified(e);
    const IntervalMap imap = build_interval_map(work);
    const int target = predict(work, v);
    Cnf hard;
    DomainEncoding dom(hard, work, imap);
    PathAtomEncoding atoms(dom);
    names.add_domain(work, imap, dom);
    for (int t = 0; t < work.num_trees(); ++t) {
      const auto& ta = atoms.tree_atoms()[static_cast<std::size_t>(t)];
      for (std::size_t p = 0; p < ta.size(); ++p)
        names.put(ta[p], "tree" + std::to_string(t) + " path" + std::to_string(p));
    }
    for (int c = 0; c < work.num_classes(); ++c) {
      if (c == target) continue;
      const Objective ob = score_gap_objective(atoms.atoms(), target, c);
      Wcnf w;
      w.hard = hard;
      w.softs = ob.softs;
      w.offset = ob.offset;
      const std::string path = prefix + ".opp" + std::to_string(c) + ".wcnf";
      std::ofstream os = open_out(path);
      write_wcnf(os, w);
      files.push_back(path);
    }
  }
  {
    std::ofstream os = open_out(prefix + ".map");
    names.write(os);
    files.push_back(prefix + ".map");
  }
  Json j;
  j["record"] = "encode";
  j["files"] = files;
  em.record(j);
  for (const std::string& f : files) em.line("wrote " + f);
}

inline void run_sat(Emitter& em, const std::string& path,
                    std::optional<std::chrono::steady_clock::time_point> deadline) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  const Cnf f = read_dimacs(in);
  SatSolver solver;
  solver.set_deadline(deadline);
  solver.load(f);
  const bool sat = solver.solve() == SatSolver::Result::sat;
  Json j;
  j["record"] = "sat";
  j["status"] = sat ? "sat" : "unsat";
  if (sat) {
    Json model = Json::array();
    std::string vline = "v";
    for (int v = 1; v <= f.num_vars(); ++v) {
      const int d = solver.model_value(lit(v)) ? v : -v;
      model.push_back(d);
      vline += " " + std::to_string(d);
    }
    j["model"] = model;
    em.record(j);
    em.line("s SATISFIABLE");
    em.line(vline + " 0");
  } else {
    em.record(j);
    em.line("s UNSATISFIABLE");
  }
}

inline void run_maxsat(Emitter& em, const std::string& path,
                       std::optional<std::chrono::steady_clock::time_point> deadline) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  const Wcnf w = read_wcnf(in);
  MaxSatEngine eng(w);
  eng.set_deadline(deadline);
  const OptResult r = eng.maximize();
  Json j;
  j["record"] = "maxsat";
  if (!r.feasible()) {
    j["status"] = "unsat";
    em.record(j);
    em.line("s UNSATISFIABLE");
    return;
  }
  j["status"] = "optimum";
  j["value"] = r.value.to_string();
  Json model = Json::array();
  std::string vline = "v";
  for (int v = 1; v <= w.hard.num_vars(); ++v) {
    const int d = r.model[static_cast<std::size_t>(v)] ? v : -v;
    model.push_back(d);
    vline += " " + std::to_string(d);
  }
  j["model"] = model;
  em.record(j);
  em.line("o " + r.value.to_string());
  em.line("s OPTIMUM FOUND");
  em.line(vline + " 0");
}

inline void run_oracle_xps(Emitter& em, const Ensemble& e, const Instance& v) {
  CellGrid g(e);
  const XpSets sets = brute_xps(g, v);
  Json j;
  j["record"] = "oracle_xps";
  j["axps"] = sets.axps;
  j["cxps"] = sets.cxps;
  em.record(j);
  std::ostringstream os;
  os << "axps:";
  for (const auto& a : sets.axps) {
    os << " {";
    for (std::size_t i = 0; i < a.size(); ++i) os << (i ? "," : "") << a[i];
    os << "}";
  }
  os << "  cxps:";
  for (const auto& c : sets.cxps) {
    os << " {";
    for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << c[i];
    os << "}";
  }
  em.line(os.str());
}

// ---------------------------------------------------------------------------

inline int report_error(Emitter& em, std::ostream& err, int code, const std::string& kind,
                        const std::string& message) {
  Json j;
  j["record"] = "error";
  j["code"] = code;
  j["kind"] = kind;
  j["message"] = message;
  em.record(j);
  err << "error: " << message << "\n";
  return code;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"exact explanations and verification for tree-ensemble classifiers"};
  app.footer(
      "environment:\n"
      "  TEXP_TIME_LIMIT   default --time-limit value in seconds\n"
      "exit codes:\n"
      "  0 success, 2 invalid usage or input semantics, 3 unreadable input,\n"
      "  4 time limit exceeded, 5 internal error");
  app.require_subcommand(1);

  std::string model_path;
  InstanceSource src;
  bool json = false;
  double time_limit = -1;
  long long seed = 0;
  int jobs = 1;
  app.add_option("--model,-m", model_path, "model file (JSON)");
  app.add_option("--instance,-i", src.inline_text, "comma-separated instance values");
  app.add_option("--instance-file", src.file, "file whose first non-empty line is the instance");
  app.add_option("--csv", src.csv, "CSV file of instances (no header handling)");
  app.add_option("--row", src.row, "0-based line index into --csv");
  app.add_flag("--json", json, "line-delimited structured output (schema texp/1)");
  app.add_option("--time-limit", time_limit,
                 "seconds per command, 0 = none (default: TEXP_TIME_LIMIT or none)");
  app.add_option("--seed", seed, "recorded in structured output; all queries are deterministic");
  app.add_option("--jobs", jobs, "parallel engine instances for per-opponent work")
      ->check(CLI::PositiveNumber);

  ModeFlags mf;
  ExplainFlags ef;
  long long limit = -1;
  std::string kinds = "both";
  std::string protected_csv;
  int delta = 0;
  std::string dump_prefix;
  std::string formula_path;

  CLI::App* predict_cmd = app.add_subcommand("predict", "classify an instance");
  CLI::App* explain_cmd = app.add_subcommand("explain", "explain one prediction");
  explain_cmd->add_flag("--axp", ef.axp, "abductive explanation (default)");
  explain_cmd->add_flag("--cxp", ef.cxp, "contrastive explanation");
  explain_cmd->add_flag("--smallest", ef.smallest, "globally smallest instead of any minimal");
  add_mode_flags(explain_cmd, mf);
  CLI::App* enum_cmd = app.add_subcommand("enumerate", "list explanations (both kinds)");
  enum_cmd->add_option("--limit", limit, "stop after this many (default: exhaust)");
  enum_cmd->add_option("--kinds", kinds, "axp, cxp, or both")
      ->check(CLI::IsMember({"axp", "cxp", "both"}));
  add_mode_flags(enum_cmd, mf);
  CLI::App* verify_cmd = app.add_subcommand("verify", "model-level verification");
  verify_cmd->require_subcommand(1);
  CLI::App* fair_cmd = verify_cmd->add_subcommand("fairness", "individual fairness");
  fair_cmd->add_option("--protected", protected_csv, "protected features (names or indexes)")
      ->required();
  CLI::App* robust_cmd = verify_cmd->add_subcommand("robustness", "pointwise robustness");
  robust_cmd->add_option("--delta", delta, "feature-change budget")->required();
  CLI::App* encode_cmd = app.add_subcommand("encode", "write the query formulas to files");
  encode_cmd->add_option("--dump", dump_prefix, "output path prefix")->required();
  add_mode_flags(encode_cmd, mf);
  CLI::App* sat_cmd = app.add_subcommand("sat", "solve a DIMACS CNF file");
  sat_cmd->add_option("file", formula_path, "CNF file")->required();
  CLI::App* maxsat_cmd = app.add_subcommand("maxsat", "maximize a weighted DIMACS file");
  maxsat_cmd->add_option("file", formula_path, "WCNF file")->required();
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "");
  oracle_cmd->group("");  // debugging aid, hidden from help
  oracle_cmd->require_subcommand(1);
  CLI::App* oracle_xps = oracle_cmd->add_subcommand("xps", "brute-force explanation sets");
  CLI::App* oracle_fair = oracle_cmd->add_subcommand("fairness", "brute-force fairness");
  oracle_fair->add_option("--protected", protected_csv, "protected features")->required();
  CLI::App* oracle_robust = oracle_cmd->add_subcommand("robustness", "brute-force robustness");
  oracle_robust->add_option("--delta", delta, "feature-change budget")->required();
  for (CLI::App* sub : app.get_subcommands({}))
    sub->fallthrough();
  for (CLI::App* sub : {fair_cmd, robust_cmd, oracle_xps, oracle_fair, oracle_robust})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }

  Emitter em(out, json);
  try {
    if (time_limit < 0) time_limit = env_time_limit();
    const auto deadline = make_deadline(time_limit);
    const XpOptions opt = to_options(mf);

    if (predict_cmd->parsed()) {
      em.header("predict", seed);
      const Ensemble e = load_model_checked(model_path);
      emit_prediction(em, e, load_instance(e, src));
    } else if (explain_cmd->parsed()) {
      em.header("explain", seed);
      const Ensemble e = load_model_checked(model_path);
      run_explain(em, e, load_instance(e, src), opt, ef, jobs, deadline);
    } else if (enum_cmd->parsed()) {
      em.header("enumerate", seed);
      const Ensemble e = load_model_checked(model_path);
      run_enumerate(em, e, load_instance(e, src), opt, limit, kinds, deadline);
    } else if (fair_cmd->parsed()) {
      em.header("verify fairness", seed);
      const Ensemble e = load_model_checked(model_path);
      run_fairness(em, e, feature_list(e, protected_csv), deadline);
    } else if (robust_cmd->parsed()) {
      em.header("verify robustness", seed);
      const Ensemble e = load_model_checked(model_path);
      run_robustness(em, e, load_instance(e, src), delta, deadline);
    } else if (encode_cmd->parsed()) {
      em.header("encode", seed);
      const Ensemble e = load_model_checked(model_path);
      run_encode(em, e, load_instance(e, src), opt, dump_prefix);
    } else if (sat_cmd->parsed()) {
      em.header("sat", seed);
      run_sat(em, formula_path, deadline);
    } else if (maxsat_cmd->parsed()) {
      em.header("maxsat", seed);
      run_maxsat(em, formula_path, deadline);
    } else if (oracle_xps->parsed()) {
      em.header("oracle xps", seed);
      const Ensemble e = load_model_checked(model_path);
      run_oracle_xps(em, e, load_instance(e, src));
    } else if (oracle_fair->parsed()) {
      em.header("oracle fairness", seed);
      const Ensemble e = load_model_checked(model_path);
      CellGrid g(e);
      const bool fair = brute_fair(g, feature_list(e, protected_csv));
      Json j;
      j["record"] = "oracle_fairness";
      j["fair"] = fair;
      em.record(j);
      em.line(fair ? "fair" : "unfair");
    } else if (oracle_robust->parsed()) {
      em.header("oracle robustness", seed);
      const Ensemble e = load_model_checked(model_path);
      const Instance v = load_instance(e, src);
      CellGrid g(e);
      const bool robust = brute_robust(g, v, delta);
      Json j;
      j["record"] = "oracle_robustness";
      j["delta"] = delta;
      j["robust"] = robust;
      em.record(j);
      em.line(robust ? "robust" : "violated");
    }
    return exit_ok;
  } catch (const ParseError& e) {
    return report_error(em, err, exit_parse, "parse", e.what());
  } catch (const TimeoutError& e) {
    return report_error(em, err, exit_timeout, "timeout", e.what());
  } catch (const BudgetError& e) {
    return report_error(em, err, exit_usage, "budget", e.what());
  } catch (const ValidationError& e) {
    return report_error(em, err, exit_usage, "validation", e.what());
  } catch (const UsageError& e) {
    return report_error(em, err, exit_usage, "usage", e.what());
  } catch (const std::exception& e) {
    return report_error(em, err, exit_internal, "internal", e.what());
  }
}

}  // namespace texp::cli

#endif  // TEXP_CLI_HPP
