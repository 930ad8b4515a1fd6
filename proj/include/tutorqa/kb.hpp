#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace tutorqa {

enum class EntityType { Menu, Shortcut, Dialog, Tool, Key, Panel, Item, Action };

std::string to_string(EntityType t);
EntityType entity_type_from_string(const std::string& s);
// Only dialogs, tools and panels carry options.
bool entity_type_carries_options(EntityType t);

struct OptionRec {
  std::string id;
  std::string name;
};

struct Entity {
  std::string id;
  std::string name;
  EntityType etype = EntityType::Menu;
  std::vector<OptionRec> options;
};

enum class RelationKind { IsA, BelongsTo, IsShortcutOf, IsOpenedBy, HasOption };

std::string to_string(RelationKind k);
RelationKind relation_kind_from_string(const std::string& s);

struct Relation {
  std::string src;
  std::string dst;
  RelationKind kind = RelationKind::IsA;
};

// Ordered candidate set: every entity followed by every option, each block
// sorted lexicographically by id. Index positions are stable across loads.
struct AnswerPool {
  std::vector<std::string> ids;
  std::unordered_map<std::string, int> index;

  int size() const { return static_cast<int>(ids.size()); }
  // -1 when the id is not a candidate.
  int index_of(const std::string& id) const {
    auto it = index.find(id);
    return it == index.end() ? -1 : it->second;
  }
  uint64_t fingerprint() const;
};

// Undirected view of the knowledge base: one node per answer candidate,
// one edge per distinct relation pair plus option-to-parent edges.
struct Graph {
  std::vector<std::string> nodes;
  std::unordered_map<std::string, int> index;
  std::vector<std::vector<int>> adjacency;  // sorted, symmetric, no self-loops

  int node_count() const { return static_cast<int>(nodes.size()); }
  size_t edge_count() const;
};

class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  // Validates ids, relation endpoints and the option-type rule.
  static KnowledgeBase from_parts(std::vector<Entity> entities, std::vector<Relation> relations);
  static KnowledgeBase load(const std::string& path);
  void save(const std::string& path) const;

  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<Relation>& relations() const { return relations_; }

  size_t entity_count() const { return entities_.size(); }
  size_t option_count() const { return option_count_; }

  bool has_candidate(const std::string& id) const;
  bool is_option(const std::string& id) const;
  // Type of an entity candidate; nullopt for options and unknown ids.
  std::optional<EntityType> entity_type_of(const std::string& id) const;
  // Parent entity id for an option candidate.
  std::optional<std::string> option_parent(const std::string& id) const;

  uint64_t fingerprint() const;

 private:
  void index_ids();

  std::vector<Entity> entities_;
  std::vector<Relation> relations_;
  size_t option_count_ = 0;
  std::unordered_map<std::string, int> entity_idx_;
  std::unordered_map<std::string, std::pair<int, int>> option_idx_;  // id -> (entity, option)
};

AnswerPool answer_pool(const KnowledgeBase& kb);
Graph to_graph(const KnowledgeBase& kb);

}  // namespace tutorqa
