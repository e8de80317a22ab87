#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "srlkit/error.hpp"
#include "srlkit/tensor.hpp"

namespace srlkit {

// Argument span, 1-based inclusive token indices. Word-based data has
// start == end everywhere.
struct SpanArg {
  int start = 0;
  int end = 0;
  std::string role;

  bool operator==(const SpanArg&) const = default;
  bool overlaps(const SpanArg& o) const { return start <= o.end && o.start <= end; }
};

struct PredicateFrame {
  int predicate = 0;  // 1-based token index
  std::string sense;  // carried through verbatim, never modeled
  std::vector<SpanArg> arguments;

  bool operator==(const PredicateFrame&) const = default;
};

struct DepArc {
  int head = 0;  // 0 = root
  std::string rel;

  bool operator==(const DepArc&) const = default;
};

struct AnnotatedSentence {
  std::vector<std::string> tokens;
  std::vector<std::vector<std::string>> chars;  // per-token codepoints
  bool has_dep = false;
  std::vector<DepArc> dep;  // size n when has_dep
  std::vector<PredicateFrame> frames;
  // External per-token representations: [token][layer], each of dimension
  // d_ext. Empty when not loaded.
  std::vector<std::vector<Tensor>> ext_layers;

  int size() const { return static_cast<int>(tokens.size()); }
};

// Splits UTF-8 into codepoint strings; invalid bytes pass through singly.
inline std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    size_t len = 1;
    if ((c & 0x80) == 0x00) len = 1;
    else if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    if (i + len > s.size()) len = 1;
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

inline void fill_chars(AnnotatedSentence& s) {
  s.chars.clear();
  s.chars.reserve(s.tokens.size());
  for (const auto& t : s.tokens) s.chars.push_back(utf8_chars(t));
}

// Checks heads form a single-rooted tree over tokens 1..n (head 0 = root).
// Returns an empty string when valid, otherwise a description.
inline std::string tree_violation(const std::vector<int>& heads) {
  int n = static_cast<int>(heads.size());
  if (n == 0) return "empty sentence";
  int roots = 0;
  for (int m = 0; m < n; ++m) {
    if (heads[m] < 0 || heads[m] > n)
      return "head index " + std::to_string(heads[m]) + " out of range for token " +
             std::to_string(m + 1);
    if (heads[m] == m + 1) return "token " + std::to_string(m + 1) + " is its own head";
    if (heads[m] == 0) ++roots;
  }
  if (roots != 1) return "expected exactly one root, found " + std::to_string(roots);
  // cycle check: walk up from every token
  for (int m = 0; m < n; ++m) {
    int cur = m + 1, hops = 0;
    while (cur != 0) {
      cur = heads[cur - 1];
      if (++hops > n) return "cycle reachable from token " + std::to_string(m + 1);
    }
  }
  return "";
}

inline std::vector<int> head_vector(const AnnotatedSentence& s) {
  std::vector<int> h(s.tokens.size());
  for (size_t i = 0; i < s.dep.size(); ++i) h[i] = s.dep[i].head;
  return h;
}

// Dense id maps for words, characters, roles and dependency relations.
// The null role occupies the reserved id 0. Ids are assigned from sorted
// unique symbols, so builds are order-independent.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kNullRole = 0;
  static constexpr const char* kNullRoleName = "<eps>";

  std::vector<std::string> words{"<pad>", "<unk>"};
  std::vector<std::string> chars{"<pad>", "<unk>"};
  std::vector<std::string> roles{kNullRoleName};
  std::vector<std::string> rels;

  std::map<std::string, int> word_ids{{"<pad>", 0}, {"<unk>", 1}};
  std::map<std::string, int> char_ids{{"<pad>", 0}, {"<unk>", 1}};
  std::map<std::string, int> role_ids{{kNullRoleName, 0}};
  std::map<std::string, int> rel_ids;

  void build(const std::vector<const std::vector<AnnotatedSentence>*>& corpora) {
    std::set<std::string> w, c, r, d;
    for (auto* corpus : corpora) {
      for (const auto& s : *corpus) {
        for (const auto& tok : s.tokens) w.insert(tok);
        for (const auto& cs : s.chars)
          for (const auto& ch : cs) c.insert(ch);
        for (const auto& f : s.frames)
          for (const auto& a : f.arguments) r.insert(a.role);
        if (s.has_dep)
          for (const auto& arc : s.dep) d.insert(arc.rel);
      }
    }
    for (const auto& x : w) add(words, word_ids, x);
    for (const auto& x : c) add(chars, char_ids, x);
    for (const auto& x : r) add(roles, role_ids, x);
    for (const auto& x : d) add(rels, rel_ids, x);
  }

  int word(const std::string& w) const { return lookup(word_ids, w, kUnk); }
  int chr(const std::string& c) const { return lookup(char_ids, c, kUnk); }
  int role(const std::string& r) const {
    auto it = role_ids.find(r);
    if (it == role_ids.end()) throw ConfigError("unknown role label: " + r);
    return it->second;
  }
  int rel(const std::string& r) const {
    auto it = rel_ids.find(r);
    if (it == rel_ids.end()) throw ConfigError("unknown dependency relation: " + r);
    return it->second;
  }

  int n_words() const { return static_cast<int>(words.size()); }
  int n_chars() const { return static_cast<int>(chars.size()); }
  int n_roles() const { return static_cast<int>(roles.size()); }      // includes null
  int n_real_roles() const { return n_roles() - 1; }
  int n_rels() const { return static_cast<int>(rels.size()); }

  void save(std::ostream& out) const {
    auto dump = [&](const char* key, const std::vector<std::string>& xs) {
      out << key << " " << xs.size() << "\n";
      for (const auto& x : xs) out << x << "\n";
    };
    dump("words", words);
    dump("chars", chars);
    dump("roles", roles);
    dump("rels", rels);
  }

  static Vocabulary load(std::istream& in) {
    Vocabulary v;
    v.words.clear(); v.chars.clear(); v.roles.clear(); v.rels.clear();
    v.word_ids.clear(); v.char_ids.clear(); v.role_ids.clear(); v.rel_ids.clear();
    auto slurp = [&](const char* key, std::vector<std::string>& xs,
                     std::map<std::string, int>& ids) {
      std::string k;
      size_t count = 0;
      if (!(in >> k >> count) || k != key)
        throw IoError(std::string("malformed vocabulary section, expected ") + key);
      in.ignore();
      for (size_t i = 0; i < count; ++i) {
        std::string line;
        if (!std::getline(in, line)) throw IoError("truncated vocabulary");
        ids[line] = static_cast<int>(xs.size());
        xs.push_back(line);
      }
    };
    slurp("words", v.words, v.word_ids);
    slurp("chars", v.chars, v.char_ids);
    slurp("roles", v.roles, v.role_ids);
    slurp("rels", v.rels, v.rel_ids);
    return v;
  }

 private:
  static void add(std::vector<std::string>& xs, std::map<std::string, int>& ids,
                  const std::string& x) {
    if (ids.count(x)) return;
    ids[x] = static_cast<int>(xs.size());
    xs.push_back(x);
  }
  static int lookup(const std::map<std::string, int>& ids, const std::string& x,
                    int fallback) {
    auto it = ids.find(x);
    return it == ids.end() ? fallback : it->second;
  }
};

}  // namespace srlkit
