#include "seqsql/splitkit/split.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "seqsql/sqlcore/parser.hpp"

namespace seqsql {
namespace {

std::string strip_token_indices(const std::string& text) {
  std::string out;
  size_t i = 0;
  while (i < text.size()) {
    out += text[i];
    ++i;
    for (const char* tok : {"PREV_QUERY", "PREV_RESULT"}) {
      size_t n = std::string(tok).size();
      if (out.size() >= n && out.compare(out.size() - n, n, tok) == 0)
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    }
  }
  return out;
}

}  // namespace

std::string component_key(const SqlAst& ast, const MaskConfig& cfg) {
  return strip_token_indices(
      mask_template(ast, MaskPolicy::Composition, cfg).masked_text);
}

std::string composition_key(const SqlAst& source, const MaskConfig& cfg) {
  return mask_template(source, MaskPolicy::Composition, cfg).masked_text;
}

std::vector<CompositionRecord> build_compositions(
    const std::vector<InteractionRecord>& corpus, const MaskConfig& cfg) {
  std::vector<CompositionRecord> out;
  std::map<std::string, size_t> index_of;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const InteractionRecord& rec = corpus[i];
    std::string goal = rec.source_sql.empty() && !rec.turns.empty()
                           ? rec.turns.back().sql
                           : rec.source_sql;
    std::string ckey = composition_key(parse_sql(goal), cfg);
    auto [it, inserted] = index_of.try_emplace(ckey, out.size());
    if (inserted) {
      CompositionRecord c;
      c.composition_id = static_cast<int>(out.size()) + 1;
      c.composition_template = ckey;
      out.push_back(std::move(c));
    }
    CompositionRecord& c = out[it->second];
    c.members.push_back(i);
    for (const auto& turn : rec.turns)
      c.component_set.insert(component_key(parse_sql(turn.sql), cfg));
  }
  return out;
}

SplitManifest greedy_split(const std::vector<CompositionRecord>& compositions) {
  SplitManifest m;
  std::map<int, const CompositionRecord*> by_id;
  for (const auto& c : compositions) {
    m.train.insert(c.composition_id);
    by_id[c.composition_id] = &c;
  }
  auto covered_by_train_without = [&](int candidate) {
    std::set<std::string> pool;
    for (int id : m.train)
      if (id != candidate)
        for (const auto& k : by_id[id]->component_set) pool.insert(k);
    auto subset = [&](const std::set<std::string>& s) {
      return std::all_of(s.begin(), s.end(),
                         [&](const std::string& k) { return pool.count(k) > 0; });
    };
    if (!subset(by_id[candidate]->component_set)) return false;
    for (int id : m.test)
      if (!subset(by_id[id]->component_set)) return false;
    return true;
  };
  for (;;) {
    int best = 0;
    size_t best_size = 0;
    for (int id : m.train) {
      if (!covered_by_train_without(id)) continue;
      size_t sz = by_id[id]->component_set.size();
      if (best == 0 || sz > best_size || (sz == best_size && id < best)) {
        best = id;
        best_size = sz;
      }
    }
    if (best == 0) break;
    m.train.erase(best);
    m.test.insert(best);
  }
  std::set<std::string> universe;
  for (const auto& c : compositions) {
    bool in_test = m.test.count(c.composition_id) > 0;
    (in_test ? m.test_interactions : m.train_interactions) += c.members.size();
    for (const auto& k : c.component_set) universe.insert(k);
  }
  m.component_universe = universe.size();
  return m;
}

bool coverage_holds(const std::vector<CompositionRecord>& compositions,
                    const SplitManifest& manifest) {
  std::set<std::string> pool;
  for (const auto& c : compositions)
    if (manifest.train.count(c.composition_id))
      for (const auto& k : c.component_set) pool.insert(k);
  for (const auto& c : compositions)
    if (manifest.test.count(c.composition_id))
      for (const auto& k : c.component_set)
        if (!pool.count(k)) return false;
  return true;
}

std::vector<CompositionRecord> load_composition_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  std::vector<CompositionRecord> out;
  for (const auto& jc : j.at("compositions")) {
    CompositionRecord c;
    c.composition_id = jc.at("composition_id").get<int>();
    c.composition_template = jc.value("template", "");
    for (const auto& k : jc.at("components"))
      c.component_set.insert(k.get<std::string>());
    out.push_back(std::move(c));
  }
  return out;
}

ContextGraph build_context_graph(const std::vector<InteractionRecord>& corpus,
                                 const MaskConfig& cfg) {
  ContextGraph g;
  g.values.resize(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i)
    for (const auto& turn : corpus[i].turns) {
      SqlTemplate tpl = mask_template(parse_sql(turn.sql), MaskPolicy::Bpe, cfg);
      for (const auto& slot : tpl.slots) g.values[i].insert(slot.original);
    }
  for (size_t i = 0; i < corpus.size(); ++i)
    for (const auto& v : g.values[i]) g.value_members[v].push_back(i);
  g.adjacency.resize(corpus.size());
  for (const auto& [value, members] : g.value_members)
    for (size_t a : members)
      for (size_t b : members)
        if (a != b) g.adjacency[a].insert(b);
  return g;
}

std::vector<InteractionRecord> generate_long_interactions(
    const std::vector<InteractionRecord>& corpus, const ContextGraph& graph,
    const LongGenOptions& opts) {
  std::vector<InteractionRecord> out;
  if (corpus.empty()) return out;
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<size_t> pick(0, corpus.size() - 1);
  for (size_t n = 0; n < opts.count; ++n) {
    size_t cur = pick(rng);
    std::set<size_t> used{cur};
    InteractionRecord rec;
    rec.interaction_id = "long" + std::to_string(n + 1);
    int offset = 0;
    auto append = [&](size_t idx) {
      for (const auto& turn : corpus[idx].turns) {
        InteractionTurn t = turn;
        t.index += offset;
        if (offset > 0) {
          SqlAst shifted = renumber_tokens(
              parse_sql(turn.sql), [&](int old) { return old + offset; });
          t.sql = render_sql(shifted);
        }
        rec.turns.push_back(std::move(t));
      }
      offset += static_cast<int>(corpus[idx].turns.size());
    };
    append(cur);
    while (rec.turns.size() < opts.target_turns) {
      std::vector<size_t> next;
      for (size_t nb : graph.adjacency[cur])
        if (!used.count(nb)) next.push_back(nb);
      if (next.empty()) break;  // sparse graph: partial record
      cur = next[std::uniform_int_distribution<size_t>(0, next.size() - 1)(rng)];
      used.insert(cur);
      append(cur);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace seqsql
