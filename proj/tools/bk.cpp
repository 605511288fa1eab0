// bk: command-line front end for Bratteli diagram and invariant measure analyses.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bratteli/catalog.hpp"
#include "bratteli/criteria.hpp"
#include "bratteli/diagram.hpp"
#include "bratteli/error.hpp"
#include "bratteli/measure.hpp"
#include "bratteli/report.hpp"
#include "bratteli/stationary.hpp"
#include "bratteli/subdiagram.hpp"
#include "bratteli/vershik.hpp"
#include "bratteli/words.hpp"

#ifndef BK_VERSION
#define BK_VERSION "0.0.0"
#endif

using namespace bratteli;

namespace {

struct Common {
  std::string input;
  std::string family;
  std::string params = "{}";
  Level depth = 0;
  double eps = 1e-3;
  std::string out;
  std::string format = "json";
  std::optional<long> seed;
};

struct Loaded {
  std::shared_ptr<const BratteliDiagram> diagram;
  std::string digest;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(what + " is not valid JSON: " + e.what());
  }
}

Loaded load_diagram(const Common& c) {
  if (!c.input.empty() && !c.family.empty()) throw ArgumentError("give either a diagram file or --family");
  if (!c.family.empty()) {
    auto d = catalog::make(c.family, parse_json(c.params, "--params"));
    return {std::make_shared<const BratteliDiagram>(std::move(d)), digest(c.family + "\n" + c.params)};
  }
  if (c.input.empty()) throw ArgumentError("missing diagram file");
  const std::string bytes = read_file(c.input);
  auto d = BratteliDiagram::from_json(parse_json(bytes, "'" + c.input + "'"));
  return {std::make_shared<const BratteliDiagram>(std::move(d)), digest(bytes)};
}

// Any depth-limited verdict nested in the report.
void collect_warnings(const Json& j, Json& warnings) {
  if (j.is_object()) {
    if (j.contains("criterion") && j.contains("status") && j["status"].is_string()) {
      const std::string s = j["status"];
      if (s == "Evidence" || s == "Inconclusive") {
        warnings.push_back("depth-limited verdict (" + s + ") for " + j["criterion"].get<std::string>() +
                           " at depth " + j.value("depth", Json(0)).dump());
      }
    }
    for (const auto& [k, v] : j.items()) collect_warnings(v, warnings);
  } else if (j.is_array()) {
    for (const auto& v : j) collect_warnings(v, warnings);
  }
}

class Output {
 public:
  Output(const Common& c, std::string command) : c_(c) {
    doc_["tool"] = "bk";
    doc_["version"] = BK_VERSION;
    doc_["command"] = std::move(command);
    doc_["warnings"] = Json::array();
    if (c.seed) doc_["seed"] = *c.seed;
  }
  Json& doc() { return doc_; }
  void warn(const std::string& w) { doc_["warnings"].push_back(w); }
  void csv(std::string text) { csv_ = std::move(text); }

  void emit() {
    std::string body;
    if (c_.format == "csv") {
      if (!csv_) throw ArgumentError("command '" + doc_["command"].get<std::string>() + "' has no CSV output");
      body = *csv_;
    } else {
      Json found = Json::array();
      collect_warnings(doc_, found);
      for (const auto& w : found) doc_["warnings"].push_back(w);
      body = doc_.dump(2) + "\n";
    }
    if (c_.out.empty()) {
      std::cout << body;
    } else {
      std::ofstream f(c_.out, std::ios::binary);
      if (!f) throw ArgumentError("cannot write '" + c_.out + "'");
      f << body;
    }
  }

 private:
  const Common& c_;
  Json doc_;
  std::optional<std::string> csv_;
};

void add_common(CLI::App* sub, Common& c, bool diagram_input) {
  if (diagram_input) {
    sub->add_option("input", c.input, "Diagram JSON file");
    sub->add_option("--family", c.family, "Built-in family instead of a file");
    sub->add_option("--params", c.params, "Family parameters as JSON");
  }
  sub->add_option("--depth", c.depth, "Analysis depth");
  sub->add_option("--eps", c.eps, "Tolerance");
  sub->add_option("--out", c.out, "Write the report here instead of stdout");
  sub->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--seed", c.seed, "Reserved for randomized diagnostics");
}

Level or_default(Level v, Level d) { return v == 0 ? d : v; }

// ---------------------------------------------------------------------------

void run_analyze(const Common& c) {
  const auto in = load_diagram(c);
  const auto& d = *in.diagram;
  const Level depth = std::min(or_default(c.depth, 8), d.max_level());
  d.validate(depth);
  Output out(c, "analyze");
  auto& j = out.doc();
  j["input_digest"] = in.digest;
  j["diagram"] = {{"name", d.name()}, {"prefix_depth", d.prefix_depth()}, {"infinite", d.infinite()}};
  if (d.rule()) j["diagram"]["rule"] = d.rule()->to_json();
  Json levels = Json::array();
  std::ostringstream csv;
  csv << "level,vertex,height\n";
  for (Level n = 1; n <= depth; ++n) {
    const auto h = d.heights(n);
    levels.push_back({{"level", n}, {"size", d.level_size(n)}, {"heights", integer_array(h)}});
    for (std::size_t v = 0; v < h.size(); ++v) csv << n << ',' << v << ',' << h[v].get_str() << '\n';
  }
  j["levels"] = levels;
  const auto conn = d.connectivity(depth);
  j["connectivity"] = {{"depth", conn.depth}, {"connected", conn.connected}, {"components", conn.components}};
  const auto simple = d.simplicity(depth);
  j["simplicity"] = {{"depth", simple.depth},
                     {"simple_through_depth", simple.simple_through_depth},
                     {"proved", simple.proved},
                     {"failing_level", simple.failing_level ? Json(*simple.failing_level) : Json(nullptr)}};
  if (!simple.proved) out.warn("simplicity checked through depth " + std::to_string(depth) + " only");
  const auto rank = d.bounded_rank(depth);
  j["bounded_rank"] = rank ? Json(*rank) : Json(nullptr);
  const auto stat = d.stationary_matrix();
  j["stationary"] = stat ? matrix_json(*stat) : Json(nullptr);
  if (d.rule()) {
    const auto r = d.rule()->uniform_row_sum();
    j["uniform_row_sum"] = r ? Json(r->to_string()) : Json(nullptr);
  }
  out.csv(csv.str());
  out.emit();
}

void run_telescope(const Common& c, std::size_t targets, Level base, Level budget, const std::vector<Level>& levels) {
  const auto in = load_diagram(c);
  Output out(c, "telescope");
  auto& j = out.doc();
  j["input_digest"] = in.digest;
  if (!levels.empty()) {
    j["diagram"] = telescope(*in.diagram, levels).to_json();
    out.emit();
    return;
  }
  const auto s = greedy_telescoping(*in.diagram, targets, base, budget);
  Json blocks = Json::array();
  std::ostringstream csv;
  csv << "k,start,length,diameter\n";
  for (std::size_t k = 0; k < s.starts.size(); ++k) {
    blocks.push_back({{"k", k + 1}, {"start", s.starts[k]}, {"length", s.lengths[k]},
                      {"diameter", rational_json(s.diameters[k])}});
    csv << k + 1 << ',' << s.starts[k] << ',' << s.lengths[k] << ','
        << float_json(to_double(s.diameters[k])).dump() << '\n';
  }
  j["schedule"] = {{"targets", targets},
                   {"achieved", s.achieved},
                   {"stagnated", s.stagnated},
                   {"budget_exhausted", s.budget_exhausted},
                   {"levels_used", s.levels_used},
                   {"blocks", blocks}};
  if (s.achieved < targets) out.warn("telescoping reached " + std::to_string(s.achieved) + " of " +
                                     std::to_string(targets) + " targets");
  out.csv(csv.str());
  out.emit();
}

void run_measures(const Common& c, std::optional<Level> base) {
  const auto in = load_diagram(c);
  const Level m = or_default(c.depth, 16);
  const auto rep = count_measures(*in.diagram, m, c.eps, base);
  Output out(c, "measures");
  auto& j = out.doc();
  j["input_digest"] = in.digest;
  j["measures"] = rep.to_json();
  out.warn("slice polytope computed to depth " + std::to_string(m) + "; clusters approximate extreme points");
  std::ostringstream csv;
  csv << "cluster,members,vertex,value\n";
  for (std::size_t k = 0; k < rep.clusters.size(); ++k) {
    const auto& cl = rep.clusters[k];
    for (std::size_t v = 0; v < cl.representative.size(); ++v) {
      csv << k << ',' << cl.members.size() << ',' << v << ','
          << float_json(to_double(cl.representative[v])).dump() << '\n';
    }
  }
  out.csv(csv.str());
  out.emit();
}

void run_stationary(const Common& c) {
  const auto in = load_diagram(c);
  const auto& d = *in.diagram;
  const Level depth = or_default(c.depth, 10);
  const auto rep = stationary_measures(d);
  Output out(c, "stationary");
  auto& j = out.doc();
  j["input_digest"] = in.digest;
  j["stationary"] = rep.to_json(d, depth);
  std::ostringstream csv;
  csv << "class,level,vertex,value\n";
  for (const auto& m : rep.measures) {
    for (Level n = 1; n <= depth; ++n) {
      const auto vals = m.values_approx(d, n);
      for (std::size_t v = 0; v < vals.size(); ++v) {
        csv << m.class_id << ',' << n << ',' << v << ',' << float_json(vals[v]).dump() << '\n';
      }
    }
  }
  out.csv(csv.str());
  out.emit();
}

void run_ue(const Common& c, const std::string& criterion, UeOptions opts) {
  const auto in = load_diagram(c);
  const Level depth = or_default(c.depth, 64);
  std::vector<UeCriterion> which;
  if (criterion == "all") {
    which = {UeCriterion::RowDiff, UeCriterion::MinSum, UeCriterion::TauProduct,
             UeCriterion::PhiSum, UeCriterion::RatioSum, UeCriterion::NormGrowth};
  } else {
    which = {parse_criterion(criterion)};
  }
  Output out(c, "ue");
  auto& j = out.doc();
  j["input_digest"] = in.digest;
  Json verdicts = Json::array();
  std::ostringstream csv;
  csv << "criterion,index,value\n";
  for (auto w : which) {
    Verdict v;
    try {
      v = unique_ergodicity(*in.diagram, w, depth, opts);
    } catch (const Error& e) {
      // A criterion whose hypotheses fail is reported, not fatal, when running all.
      if (which.size() == 1 || e.numeric()) throw;
      v.criterion = to_string(w);
      v.status = Status::Inconclusive;
      v.depth = depth;
      v.note = std::string(e.kind()) + ": " + e.what();
    }
    for (std::size_t i = 0; i < v.trace.size(); ++i) {
      csv << v.criterion << ',' << i + 1 << ',' << float_json(v.trace[i]).dump() << '\n';
    }
    verdicts.push_back(v.to_json());
  }
  j["verdicts"] = verdicts;
  out.csv(csv.str());
  out.emit();
}

void run_count(const Common& c, const std::string& partition, bool skip_singular, std::size_t vanishing) {
  const auto in = load_diagram(c);
  const Level depth = or_default(c.depth, 32);
  Output out(c, "count");
  auto& j = out.doc();
  j["input_digest"] = in.digest;
  if (partition.empty()) {
    j["determinant"] = exact_count_determinant(*in.diagram, depth, skip_singular).to_json();
    out.emit();
    return;
  }
  BlockPartition p = partition == "singletons"
                         ? BlockPartition::singleton_blocks()
                         : BlockPartition::from_json(parse_json(read_file(partition), "'" + partition + "'"));
  try {
    j["blocks"] = blocks_analysis(*in.diagram, p, depth, vanishing).to_json();
  } catch (const RankError& e) {
    j["blocks"] = {{"skipped", e.what()}};
    out.warn(std::string("blocks analysis skipped: ") + e.what());
  }
  const auto chain = chain_analysis(*in.diagram, p, depth);
  j["chains"] = chain.to_json();
  std::ostringstream csv;
  csv << "prefix\n";
  for (const auto& pr : chain.prefixes) {
    for (std::size_t i = 0; i < pr.size(); ++i) csv << (i ? " " : "") << pr[i];
    csv << '\n';
  }
  out.csv(csv.str());
  out.emit();
}

void run_sub(const Common& c, const std::string& spec_path, const std::string& vertices, const std::string& measure,
             bool extend) {
  const auto in = load_diagram(c);
  const Level depth = or_default(c.depth, 32);
  SubdiagramSpec s;
  if (!spec_path.empty()) {
    s = SubdiagramSpec::from_json(parse_json(read_file(spec_path), "'" + spec_path + "'"));
  } else if (!vertices.empty()) {
    std::vector<std::size_t> w;
    std::stringstream ss(vertices);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        w.push_back(std::stoul(item));
      } catch (const std::exception&) {
        throw ArgumentError("--vertices expects comma separated indices");
      }
    }
    s = SubdiagramSpec::constant(std::move(w));
  } else {
    throw ArgumentError("give --spec or --vertices");
  }
  auto sub = std::make_shared<const BratteliDiagram>(restrict(*in.diagram, s));
  const TowerMeasure qbar = measure.empty()
                                ? odometer_measure(sub)
                                : TowerMeasure::from_json(sub, parse_json(read_file(measure), "'" + measure + "'"));
  const auto rep = extension_test(*in.diagram, s, qbar, depth);
  Output out(c, "sub");
  auto& j = out.doc();
  j["input_digest"] = in.digest;
  j["subdiagram"] = s.to_json();
  j["extension"] = rep.to_json();
  if (extend) j["extended_measure"] = extend_measure(in.diagram, s, qbar, depth).to_json(depth);
  std::ostringstream csv;
  csv << "n,towers,masses,growth\n";
  for (std::size_t i = 0; i < rep.series_towers.size(); ++i) {
    csv << i + 1 << ',' << float_json(to_double(rep.series_towers[i])).dump() << ','
        << float_json(to_double(rep.series_masses[i])).dump() << ','
        << float_json(to_double(rep.series_growth[i])).dump() << '\n';
  }
  out.csv(csv.str());
  out.emit();
}

void run_orbit(const Common& c, std::size_t steps, std::size_t window, const std::string& start_json,
               bool diagnostics) {
  const auto in = load_diagram(c);
  const auto& d = *in.diagram;
  const Level depth = or_default(c.depth, 8);
  const auto order = EdgeOrder::of(d);
  const FinitePath start = start_json.empty() ? minimal_path(d, order, depth, 0)
                                              : path_from_json(parse_json(start_json, "--start"));
  const auto stats = orbit_frequencies(d, order, start, steps, level_one_cylinders(d), window);
  Output out(c, "orbit");
  auto& j = out.doc();
  j["input_digest"] = in.digest;
  j["truncation_depth"] = start.size();
  j["order"] = order.to_json();
  j["orbit"] = stats.to_json();
  out.warn("orbit runs on the depth-" + std::to_string(start.size()) + " truncation; " +
           std::to_string(stats.wraps) + " wraps from maximal to minimal prefixes");
  if (diagnostics) j["diagnostics"] = order_diagnostics(d, order, depth).to_json();
  out.csv(stats.to_csv());
  out.emit();
}

struct WordArgs {
  std::string substitution;
  std::string word_file;
  std::string periodic;
  std::size_t length = 0;
  std::size_t complexity = 0;
  bool bounds = false;
  std::size_t special = 0;
  std::vector<std::string> returns;
  std::size_t recurrence = 0;
  std::optional<long> intervals;
  std::optional<char> start;
};

void run_word(const Common& c, const WordArgs& a) {
  const int sources = !a.substitution.empty() + !a.word_file.empty() + !a.periodic.empty();
  if (sources != 1) throw ArgumentError("give exactly one of --substitution, --word, --periodic");
  const std::size_t want = std::max<std::size_t>({a.complexity, a.special + 2, 64});
  const std::size_t length = a.length ? a.length : std::max<std::size_t>(20 * want, 2000);
  Word w;
  std::string digest_input;
  Json source;
  if (!a.substitution.empty()) {
    const auto rule = SubstitutionRule::parse(a.substitution);
    w = generate(rule, length, a.start);
    digest_input = rule.to_string();
    source = {{"substitution", rule.to_string()}, {"primitive", rule.primitive()}};
  } else if (!a.word_file.empty()) {
    w = Word::from_text(read_file(a.word_file), "file");
    digest_input = w.text;
    source = {{"file", a.word_file}};
  } else {
    w = Word::periodic(a.periodic, length);
    source = {{"periodic", a.periodic}};
  }
  digest_input += "\n" + std::to_string(w.size());

  Output out(c, "word");
  auto& j = out.doc();
  j["input_digest"] = digest(digest_input);
  source["length"] = w.size();
  source["alphabet"] = w.alphabet;
  source["prefix"] = w.text.substr(0, std::min<std::size_t>(w.size(), 64));
  j["word"] = source;

  std::optional<ComplexityProfile> prof;
  if (a.complexity || a.bounds) {
    prof = complexity_profile(w, a.complexity ? a.complexity : 50);
    j["complexity"] = prof->to_json();
    out.warn("complexity counts factors in a window of length " + std::to_string(w.size()) +
             " and is a lower bound for p(n)");
    out.csv(prof->to_csv());
  }
  std::optional<SpecialFactors> special;
  if (a.special || a.bounds) {
    special = special_factors(w, a.special ? a.special : std::min<std::size_t>(prof->max_length(), 30));
    j["special_factors"] = special->to_json();
  }
  if (!a.returns.empty()) {
    Json rs = Json::array();
    for (const auto& u : a.returns) rs.push_back(return_words(w, u).to_json());
    j["return_words"] = rs;
  }
  if (a.recurrence) j["recurrence_estimate"] = float_json(recurrence_estimate(w, a.recurrence));
  if (a.bounds) {
    BoundsInput bi;
    bi.regular_bispecial = special->regular;
    bi.min_frequencies = min_frequencies(w, std::min<std::size_t>(prof->max_length(), 30));
    bi.interval_count = a.intervals;
    j["bounds"] = measure_bounds(*prof, bi).to_json();
  }
  out.emit();
}

int fail(const char* kind, const std::string& message, int code) {
  std::cerr << Json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bratteli diagrams and their invariant measures"};
  app.set_version_flag("--version", BK_VERSION);
  app.require_subcommand(1);
  Common c;

  auto* analyze = app.add_subcommand("analyze", "Levels, heights, connectivity and simplicity");
  add_common(analyze, c, true);

  std::size_t targets = 8;
  Level base = 1;
  Level budget = Level(1) << 23;
  std::vector<Level> levels;
  auto* tele = app.add_subcommand("telescope", "Greedy telescoping schedule or explicit telescoping");
  add_common(tele, c, true);
  tele->add_option("--targets", targets, "Number of halving targets");
  tele->add_option("--base", base, "Starting level");
  tele->add_option("--budget", budget, "Maximum number of levels to multiply");
  tele->add_option("--levels", levels, "Explicit levels 0 < n1 < n2 < ...")->delimiter(',');

  std::optional<Level> mbase;
  auto* measures = app.add_subcommand("measures", "Approximate ergodic measures from slice polytopes");
  add_common(measures, c, true);
  measures->add_option("--base", mbase, "Base level of the slices");

  auto* stat = app.add_subcommand("stationary", "Frobenius classes and stationary measures");
  add_common(stat, c, true);

  std::string criterion = "all";
  UeOptions ue_opts;
  auto* ue = app.add_subcommand("ue", "Unique ergodicity criteria");
  add_common(ue, c, true);
  ue->add_option("--criterion", criterion, "row_diff, min_sum, tau_product, phi_sum, ratio_sum, norm_growth or all");
  ue->add_option("--base", ue_opts.base, "Starting level");
  ue->add_option("--budget", ue_opts.budget, "Maximum number of levels to multiply");

  std::string partition;
  bool skip_singular = false;
  std::size_t vanishing = 3;
  auto* count = app.add_subcommand("count", "Number of ergodic measures");
  add_common(count, c, true);
  count->add_option("--partition", partition, "Block partition JSON file, or 'singletons'");
  count->add_flag("--skip-singular", skip_singular, "Absorb leading singular levels");
  count->add_option("--vanishing-limit", vanishing, "Largest block subset scanned for vanishing towers");

  std::string spec_path, vertices, measure_path;
  bool extend = false;
  auto* sub = app.add_subcommand("sub", "Subdiagram thinness and measure extension");
  add_common(sub, c, true);
  sub->add_option("--spec", spec_path, "Subdiagram JSON file");
  sub->add_option("--vertices", vertices, "Same vertex set on every level, e.g. 0 or 0,2");
  sub->add_option("--measure", measure_path, "Invariant measure on the subdiagram (JSON)");
  sub->add_flag("--extend", extend, "Include the extended measure");

  std::size_t steps = 100000, window = 0;
  std::string start;
  bool diagnostics = false;
  auto* orbit = app.add_subcommand("orbit", "Vershik orbit frequencies on a truncation");
  add_common(orbit, c, true);
  orbit->add_option("--steps", steps, "Number of successor steps");
  orbit->add_option("--window", window, "Record cumulative frequencies every this many steps");
  orbit->add_option("--start", start, "Starting path as JSON [[source,target,slot],...]");
  orbit->add_flag("--diagnostics", diagnostics, "Count maximal and minimal prefixes");

  WordArgs wa;
  auto* word = app.add_subcommand("word", "Symbolic sequences, complexity and measure bounds");
  add_common(word, c, false);
  word->add_option("--substitution", wa.substitution, "Substitution such as a:ab,b:a");
  word->add_option("--word", wa.word_file, "Text file holding the word");
  word->add_option("--periodic", wa.periodic, "Repeat this pattern");
  word->add_option("--length", wa.length, "Prefix length");
  word->add_option("--start", wa.start, "Starting letter of the fixed point");
  word->add_option("--complexity", wa.complexity, "Largest factor length for p(n)");
  word->add_flag("--bounds", wa.bounds, "Report ergodic measure bounds");
  word->add_option("--special", wa.special, "Largest length for special factors");
  word->add_option("--returns", wa.returns, "Factors whose return words are listed")->delimiter(',');
  word->add_option("--recurrence", wa.recurrence, "Largest factor length for the recurrence estimate");
  word->add_option("--intervals", wa.intervals, "Number of exchanged intervals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("UsageError", e.what(), 1);
  }

  try {
    if (*analyze) run_analyze(c);
    else if (*tele) run_telescope(c, targets, base, budget, levels);
    else if (*measures) run_measures(c, mbase);
    else if (*stat) run_stationary(c);
    else if (*ue) run_ue(c, criterion, ue_opts);
    else if (*count) run_count(c, partition, skip_singular, vanishing);
    else if (*sub) run_sub(c, spec_path, vertices, measure_path, extend);
    else if (*orbit) run_orbit(c, steps, window, start, diagnostics);
    else if (*word) run_word(c, wa);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), e.numeric() ? 2 : 1);
  } catch (const std::exception& e) {
    return fail("InternalError", e.what(), 2);
  }
  return 0;
}
