#include "tutorqa/kb.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"
#include "tutorqa/error.hpp"
#include "tutorqa/hash.hpp"

namespace tutorqa {

using nlohmann::json;

std::string to_string(EntityType t) {
  switch (t) {
    case EntityType::Menu: return "menu";
    case EntityType::Shortcut: return "shortcut";
    case EntityType::Dialog: return "dialog";
    case EntityType::Tool: return "tool";
    case EntityType::Key: return "key";
    case EntityType::Panel: return "panel";
    case EntityType::Item: return "item";
    case EntityType::Action: return "action";
  }
  return "menu";
}

EntityType entity_type_from_string(const std::string& s) {
  if (s == "menu") return EntityType::Menu;
  if (s == "shortcut") return EntityType::Shortcut;
  if (s == "dialog") return EntityType::Dialog;
  if (s == "tool") return EntityType::Tool;
  if (s == "key") return EntityType::Key;
  if (s == "panel") return EntityType::Panel;
  if (s == "item") return EntityType::Item;
  if (s == "action") return EntityType::Action;
  throw validation_error("unknown entity type: '" + s + "'");
}

bool entity_type_carries_options(EntityType t) {
  return t == EntityType::Dialog || t == EntityType::Tool || t == EntityType::Panel;
}

std::string to_string(RelationKind k) {
  switch (k) {
    case RelationKind::IsA: return "is_a";
    case RelationKind::BelongsTo: return "belongs_to";
    case RelationKind::IsShortcutOf: return "is_shortcut_of";
    case RelationKind::IsOpenedBy: return "is_opened_by";
    case RelationKind::HasOption: return "has_option";
  }
  return "is_a";
}

RelationKind relation_kind_from_string(const std::string& s) {
  if (s == "is_a") return RelationKind::IsA;
  if (s == "belongs_to") return RelationKind::BelongsTo;
  if (s == "is_shortcut_of") return RelationKind::IsShortcutOf;
  if (s == "is_opened_by") return RelationKind::IsOpenedBy;
  if (s == "has_option") return RelationKind::HasOption;
  throw validation_error("unknown relation kind: '" + s + "'");
}

namespace {

void check_id(const std::string& id, const std::string& what) {
  if (id.empty()) throw validation_error(what + " has empty id");
  for (char c : id) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      throw validation_error(what + " id '" + id + "' contains whitespace");
    }
  }
}

}  // namespace

KnowledgeBase KnowledgeBase::from_parts(std::vector<Entity> entities, std::vector<Relation> relations) {
  KnowledgeBase kb;
  kb.entities_ = std::move(entities);
  kb.relations_ = std::move(relations);
  kb.index_ids();

  for (const Entity& e : kb.entities_) {
    if (!e.options.empty() && !entity_type_carries_options(e.etype)) {
      throw validation_error("entity '" + e.id + "' of type '" + to_string(e.etype) +
                             "' carries options, only dialog/tool/panel may");
    }
  }
  for (const Relation& r : kb.relations_) {
    if (r.kind == RelationKind::HasOption) {
      throw validation_error("relation " + r.src + " -> " + r.dst +
                             ": has_option is implicit from option nesting");
    }
    if (!kb.has_candidate(r.src)) {
      throw validation_error("relation " + to_string(r.kind) + " references unknown src '" + r.src + "'");
    }
    if (!kb.has_candidate(r.dst)) {
      throw validation_error("relation " + to_string(r.kind) + " references unknown dst '" + r.dst + "'");
    }
  }
  return kb;
}

void KnowledgeBase::index_ids() {
  entity_idx_.clear();
  option_idx_.clear();
  option_count_ = 0;
  for (int i = 0; i < static_cast<int>(entities_.size()); ++i) {
    const Entity& e = entities_[i];
    check_id(e.id, "entity");
    if (entity_idx_.count(e.id) || option_idx_.count(e.id)) {
      throw validation_error("duplicate id '" + e.id + "' (entity '" + e.name + "')");
    }
    entity_idx_[e.id] = i;
    for (int j = 0; j < static_cast<int>(e.options.size()); ++j) {
      const OptionRec& o = e.options[j];
      check_id(o.id, "option");
      if (entity_idx_.count(o.id) || option_idx_.count(o.id)) {
        throw validation_error("duplicate id '" + o.id + "' (option of entity '" + e.id + "')");
      }
      option_idx_[o.id] = {i, j};
      ++option_count_;
    }
  }
}

bool KnowledgeBase::has_candidate(const std::string& id) const {
  return entity_idx_.count(id) > 0 || option_idx_.count(id) > 0;
}

bool KnowledgeBase::is_option(const std::string& id) const { return option_idx_.count(id) > 0; }

std::optional<EntityType> KnowledgeBase::entity_type_of(const std::string& id) const {
  auto it = entity_idx_.find(id);
  if (it == entity_idx_.end()) return std::nullopt;
  return entities_[it->second].etype;
}

std::optional<std::string> KnowledgeBase::option_parent(const std::string& id) const {
  auto it = option_idx_.find(id);
  if (it == option_idx_.end()) return std::nullopt;
  return entities_[it->second.first].id;
}

KnowledgeBase KnowledgeBase::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open KB file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw validation_error("KB parse error in " + path + ": " + e.what());
  }

  std::vector<Entity> entities;
  std::vector<Relation> relations;
  try {
    for (const json& je : doc.at("entities")) {
      Entity e;
      e.id = je.at("id").get<std::string>();
      e.name = je.at("name").get<std::string>();
      e.etype = entity_type_from_string(je.at("type").get<std::string>());
      if (je.contains("options")) {
        for (const json& jo : je.at("options")) {
          e.options.push_back({jo.at("id").get<std::string>(), jo.at("name").get<std::string>()});
        }
      }
      entities.push_back(std::move(e));
    }
    if (doc.contains("relations")) {
      for (const json& jr : doc.at("relations")) {
        Relation r;
        r.src = jr.at("src").get<std::string>();
        r.dst = jr.at("dst").get<std::string>();
        r.kind = relation_kind_from_string(jr.at("kind").get<std::string>());
        relations.push_back(std::move(r));
      }
    }
  } catch (const json::exception& e) {
    throw validation_error("KB schema error in " + path + ": " + e.what());
  }
  return from_parts(std::move(entities), std::move(relations));
}

void KnowledgeBase::save(const std::string& path) const {
  json doc;
  doc["entities"] = json::array();
  for (const Entity& e : entities_) {
    json je;
    je["id"] = e.id;
    je["name"] = e.name;
    je["type"] = to_string(e.etype);
    je["options"] = json::array();
    for (const OptionRec& o : e.options) je["options"].push_back({{"id", o.id}, {"name", o.name}});
    doc["entities"].push_back(std::move(je));
  }
  doc["relations"] = json::array();
  for (const Relation& r : relations_) {
    doc["relations"].push_back({{"src", r.src}, {"dst", r.dst}, {"kind", to_string(r.kind)}});
  }
  std::ofstream out(path);
  if (!out) throw runtime_error("cannot write KB file: " + path);
  out << doc.dump(2) << "\n";
}

uint64_t KnowledgeBase::fingerprint() const {
  uint64_t h = kFnvOffset;
  for (const Entity& e : entities_) {
    h = fnv1a_field(e.id, h);
    h = fnv1a_field(e.name, h);
    h = fnv1a_field(to_string(e.etype), h);
    for (const OptionRec& o : e.options) {
      h = fnv1a_field(o.id, h);
      h = fnv1a_field(o.name, h);
    }
  }
  // Relations hashed order-independently so formatting shuffles do not
  // change the fingerprint of an equivalent KB.
  uint64_t rel = 0;
  for (const Relation& r : relations_) {
    uint64_t one = kFnvOffset;
    one = fnv1a_field(r.src, one);
    one = fnv1a_field(r.dst, one);
    one = fnv1a_field(to_string(r.kind), one);
    rel += one;
  }
  return fnv1a_field(rel, h);
}

uint64_t AnswerPool::fingerprint() const {
  uint64_t h = kFnvOffset;
  for (const std::string& id : ids) h = fnv1a_field(id, h);
  return h;
}

size_t Graph::edge_count() const {
  size_t twice = 0;
  for (const auto& a : adjacency) twice += a.size();
  return twice / 2;
}

AnswerPool answer_pool(const KnowledgeBase& kb) {
  std::vector<std::string> ents;
  std::vector<std::string> opts;
  ents.reserve(kb.entity_count());
  opts.reserve(kb.option_count());
  for (const Entity& e : kb.entities()) {
    ents.push_back(e.id);
    for (const OptionRec& o : e.options) opts.push_back(o.id);
  }
  std::sort(ents.begin(), ents.end());
  std::sort(opts.begin(), opts.end());

  AnswerPool pool;
  pool.ids = std::move(ents);
  pool.ids.insert(pool.ids.end(), opts.begin(), opts.end());
  for (int i = 0; i < static_cast<int>(pool.ids.size()); ++i) pool.index[pool.ids[i]] = i;
  return pool;
}

Graph to_graph(const KnowledgeBase& kb) {
  AnswerPool pool = answer_pool(kb);
  Graph g;
  g.nodes = pool.ids;
  g.index = pool.index;
  g.adjacency.assign(g.nodes.size(), {});

  std::set<std::pair<int, int>> edges;
  auto add_edge = [&](const std::string& a, const std::string& b) {
    int u = pool.index_of(a);
    int v = pool.index_of(b);
    if (u == v) return;  // no self-loops
    edges.insert({std::min(u, v), std::max(u, v)});
  };
  for (const Relation& r : kb.relations()) add_edge(r.src, r.dst);
  for (const Entity& e : kb.entities()) {
    for (const OptionRec& o : e.options) add_edge(e.id, o.id);
  }
  for (const auto& [u, v] : edges) {
    g.adjacency[u].push_back(v);
    g.adjacency[v].push_back(u);
  }
  for (auto& a : g.adjacency) std::sort(a.begin(), a.end());
  return g;
}

}  // namespace tutorqa
