#include "seqsql/nlqgen/nlqgen.hpp"

#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace seqsql {
namespace {

std::vector<std::string> split_tsv(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool skippable(const std::string& line) {
  return line.empty() || line[0] == '#';
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NlqError("cannot open " + path);
  return in;
}

// 'admit wt' -> admit wt, '' doubled quotes collapse
std::string strip_quotes(const std::string& lexeme) {
  if (lexeme.size() < 2 || lexeme.front() != '\'' || lexeme.back() != '\'')
    return lexeme;
  std::string out;
  for (size_t i = 1; i + 1 < lexeme.size(); ++i) {
    out += lexeme[i];
    if (lexeme[i] == '\'' && i + 2 < lexeme.size() && lexeme[i + 1] == '\'') ++i;
  }
  return out;
}

std::string prev_phrase(const std::string& original) {
  size_t i = original.size();
  while (i > 0 && std::isdigit(static_cast<unsigned char>(original[i - 1]))) --i;
  return "result" + original.substr(i);
}

std::string agg_phrase(const std::string& name) {
  if (name == "MAX") return "maximum";
  if (name == "MIN") return "minimum";
  if (name == "AVG") return "average";
  if (name == "SUM") return "total";
  if (name == "COUNT") return "number";
  std::string out;
  for (char c : name) out += static_cast<char>(std::tolower(c));
  return out;
}

std::string rank_phrase(const std::string& lexeme) {
  static const char* words[] = {"one", "two",   "three", "four",
                                "five", "six",  "seven", "eight",
                                "nine", "ten",  "eleven", "twelve"};
  try {
    size_t pos = 0;
    long n = std::stol(lexeme, &pos);
    if (pos == lexeme.size() && n >= 1 && n <= 12) return words[n - 1];
  } catch (const std::exception&) {
  }
  return lexeme;
}

const std::string& lexicon_phrase(const SchemaLexicon& lex,
                                  const std::string& key) {
  if (auto it = lex.find(key); it != lex.end()) return it->second;
  if (size_t dot = key.rfind('.'); dot != std::string::npos)
    if (auto it = lex.find(key.substr(dot + 1)); it != lex.end())
      return it->second;
  throw NlqError("lexicon miss: " + key);
}

const Slot& nth_slot(const SqlTemplate& tpl, SlotKind kind, size_t n,
                     const std::string& placeholder) {
  size_t seen = 0;
  for (const auto& slot : tpl.slots)
    if (slot.kind == kind && seen++ == n) return slot;
  throw NlqError("placeholder " + placeholder + " has no matching slot");
}

const Slot& named_time_slot(const SqlTemplate& tpl, const std::string& name) {
  for (const auto& slot : tpl.slots)
    if (slot.kind == SlotKind::TimeFilter && slot.placeholder == "[" + name + "]")
      return slot;
  throw NlqError("placeholder [" + name + "] has no matching slot");
}

// trailing ".N" ordinal, default 0
size_t take_ordinal(std::string& name) {
  size_t dot = name.rfind('.');
  if (dot == std::string::npos) return 0;
  std::string tail = name.substr(dot + 1);
  if (tail.empty() ||
      tail.find_first_not_of("0123456789") != std::string::npos)
    return 0;
  name.resize(dot);
  return std::stoul(tail);
}

std::string fill_placeholder(const std::string& raw, const SqlTemplate& tpl,
                             const NlqResources& res) {
  std::string name = raw;
  if (name.rfind("time_filter_", 0) == 0) {
    const Slot& slot = named_time_slot(tpl, name);
    if (auto it = res.time_lexicon.find(slot.original);
        it != res.time_lexicon.end())
      return it->second;
    return slot.original;
  }
  size_t n = take_ordinal(name);
  if (name == "SELECT.col")
    return lexicon_phrase(res.lexicon,
                          nth_slot(tpl, SlotKind::Column, n, raw).original);
  if (name == "FROM.table")
    return lexicon_phrase(res.lexicon,
                          nth_slot(tpl, SlotKind::Table, n, raw).original);
  if (name == "val_placeholder")
    return strip_quotes(nth_slot(tpl, SlotKind::Value, n, raw).original);
  if (name == "PREV")
    return prev_phrase(nth_slot(tpl, SlotKind::Prev, n, raw).original);
  if (name == "agg_function")
    return agg_phrase(nth_slot(tpl, SlotKind::Agg, n, raw).original);
  if (name == "n_rank")
    return rank_phrase(nth_slot(tpl, SlotKind::Rank, n, raw).original);
  throw NlqError("unknown placeholder [" + raw + "]");
}

std::vector<std::string> extract_placeholders(const std::string& text) {
  std::vector<std::string> out;
  size_t pos = 0;
  while ((pos = text.find('[', pos)) != std::string::npos) {
    size_t end = text.find(']', pos);
    if (end == std::string::npos) break;
    out.push_back(text.substr(pos + 1, end - pos - 1));
    pos = end + 1;
  }
  return out;
}

}  // namespace

const NlqTemplate* TemplateTable::find_sql(const std::string& sql_template) const {
  for (const auto& row : rows)
    if (row.sql_template == sql_template) return &row;
  return nullptr;
}

const NlqTemplate* TemplateTable::find_id(const std::string& template_id) const {
  for (const auto& row : rows)
    if (row.template_id == template_id) return &row;
  return nullptr;
}

TemplateTable load_templates(const std::string& path) {
  auto in = open_or_throw(path);
  TemplateTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (skippable(line)) continue;
    auto cols = split_tsv(line);
    if (cols.size() != 3)
      throw NlqError("malformed template row: " + line);
    if (table.find_id(cols[0]) || table.find_sql(cols[1]))
      throw NlqError("duplicate template row: " + cols[0]);
    table.rows.push_back(NlqTemplate{cols[0], cols[1], cols[2]});
  }
  return table;
}

static std::map<std::string, std::string> load_pairs(const std::string& path) {
  auto in = open_or_throw(path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (skippable(line)) continue;
    auto cols = split_tsv(line);
    if (cols.size() != 2) throw NlqError("malformed lexicon row: " + line);
    out[cols[0]] = cols[1];
  }
  return out;
}

SchemaLexicon load_lexicon(const std::string& path) { return load_pairs(path); }
TimeLexicon load_time_lexicon(const std::string& path) { return load_pairs(path); }

ParaphraseBank load_paraphrases(const std::string& path) {
  auto in = open_or_throw(path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.at("format_version").get<int>() != 1)
    throw NlqError("unsupported paraphrase bank version");
  ParaphraseBank bank;
  for (const auto& [id, variants] : doc.at("templates").items())
    bank[id] = variants.get<std::vector<std::string>>();
  return bank;
}

NlqResources load_nlq_resources(const std::string& data_dir) {
  NlqResources res;
  res.templates = load_templates(data_dir + "/templates.tsv");
  res.lexicon = load_lexicon(data_dir + "/lexicon.tsv");
  res.time_lexicon = load_time_lexicon(data_dir + "/time_lexicon.tsv");
  res.paraphrases = load_paraphrases(data_dir + "/paraphrases.json");
  return res;
}

SqlTemplate normalize_subquery(const SqlAst& ast, const MaskConfig& cfg) {
  return mask_template(ast, MaskPolicy::NlqNorm, cfg);
}

std::string generate_nlq(const SqlAst& ast, const NlqResources& res,
                         uint64_t seed, const MaskConfig& cfg) {
  SqlTemplate tpl = normalize_subquery(ast, cfg);
  const NlqTemplate* row = res.templates.find_sql(tpl.masked_text);
  if (!row) throw NlqError("unmatched template: " + tpl.masked_text);

  std::string wording = row->nlq_template;
  if (auto it = res.paraphrases.find(row->template_id);
      it != res.paraphrases.end() && !it->second.empty()) {
    std::mt19937_64 rng(seed);
    size_t pick = rng() % (it->second.size() + 1);
    if (pick > 0) wording = it->second[pick - 1];
  }

  std::string out;
  size_t pos = 0;
  while (pos < wording.size()) {
    size_t open = wording.find('[', pos);
    if (open == std::string::npos) {
      out += wording.substr(pos);
      break;
    }
    size_t close = wording.find(']', open);
    if (close == std::string::npos) {
      out += wording.substr(pos);
      break;
    }
    out += wording.substr(pos, open - pos);
    out += fill_placeholder(wording.substr(open + 1, close - open - 1), tpl, res);
    pos = close + 1;
  }
  return out;
}

bool nlq_covers_sql(const SqlAst& ast, const std::string& nlq,
                    const MaskConfig& cfg) {
  SqlTemplate tpl = normalize_subquery(ast, cfg);
  for (const auto& slot : tpl.slots) {
    if (slot.kind == SlotKind::Value &&
        nlq.find(strip_quotes(slot.original)) == std::string::npos)
      return false;
    if (slot.kind == SlotKind::Prev &&
        nlq.find(prev_phrase(slot.original)) == std::string::npos)
      return false;
  }
  return true;
}

ParaphraseCheck validate_paraphrase(const std::string& original,
                                    const std::string& paraphrase) {
  std::map<std::string, int> want;
  for (const auto& ph : extract_placeholders(original)) ++want[ph];
  std::map<std::string, int> have;
  for (const auto& ph : extract_placeholders(paraphrase)) ++have[ph];
  ParaphraseCheck check;
  for (const auto& [ph, n] : want) {
    int got = have.count(ph) ? have[ph] : 0;
    if (got < n) check.missing.push_back(ph);
    if (got > n) check.duplicated.push_back(ph);
  }
  for (const auto& [ph, n] : have)
    if (!want.count(ph)) check.duplicated.push_back(ph);
  check.ok = check.missing.empty() && check.duplicated.empty();
  return check;
}

std::vector<std::string> TurnCategories::names() const {
  std::vector<std::string> out;
  if (independent) out.push_back("independent");
  if (referential) out.push_back("referential");
  if (filtering) out.push_back("filtering");
  if (modifying) out.push_back("modifying");
  return out;
}

namespace {

// Prev slots compare by token kind only; re-decomposition shifts indices.
std::string slot_diff_key(const Slot& slot) {
  if (slot.kind != SlotKind::Prev) return slot.original;
  size_t i = slot.original.size();
  while (i > 0 && std::isdigit(static_cast<unsigned char>(slot.original[i - 1])))
    --i;
  return slot.original.substr(0, i);
}

bool one_slot_changed(const SqlTemplate& a, const SqlTemplate& b) {
  if (a.masked_text != b.masked_text || a.slots.size() != b.slots.size())
    return false;
  size_t diffs = 0;
  for (size_t i = 0; i < a.slots.size(); ++i)
    if (slot_diff_key(a.slots[i]) != slot_diff_key(b.slots[i])) ++diffs;
  return diffs == 1;
}

}  // namespace

TurnCategories categorize_turn(const DecompositionPlan& plan, size_t pos,
                               const MaskConfig& cfg) {
  if (pos >= plan.turns.size())
    throw std::out_of_range("categorize_turn: bad turn position");
  const TurnSql& turn = plan.turns[pos];
  TurnCategories cat;
  bool has_refs = !extract_token_refs(turn.ast).empty();
  cat.independent = !has_refs;
  cat.referential = has_refs;
  if (turn.ast.is_extension()) {
    auto kind = turn.ast.extension().kind;
    cat.filtering = kind == ExtClauseKind::WherePred ||
                    kind == ExtClauseKind::AndPred ||
                    kind == ExtClauseKind::HavingPred;
  }
  if (pos > 0)
    cat.modifying = one_slot_changed(
        mask_template(plan.turns[pos - 1].ast, MaskPolicy::NlqNorm, cfg),
        mask_template(turn.ast, MaskPolicy::NlqNorm, cfg));
  return cat;
}

}  // namespace seqsql
