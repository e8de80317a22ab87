#pragma once

// Corpus format readers and writers: CoNLL-2009 columns (word-based SRL),
// CoNLL-X columns (dependency treebanks), and the words/props bracket pair
// (span-based SRL). Every reader throws ParseError with a location; every
// reader composed with its writer is the identity on well-formed input.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "srlkit/data.hpp"
#include "srlkit/error.hpp"

namespace srlkit {

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline int parse_int(const std::string& s, const std::string& what, long line_no) {
  try {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

struct Block {
  std::vector<std::string> lines;
  long first_line = 0;  // 1-based
};

inline std::vector<Block> blocks_of(const std::vector<std::string>& lines) {
  std::vector<Block> blocks;
  Block cur;
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    bool blank = line.find_first_not_of(" \t") == std::string::npos;
    if (blank) {
      if (!cur.lines.empty()) blocks.push_back(std::move(cur));
      cur = Block{};
    } else {
      if (cur.lines.empty()) cur.first_line = static_cast<long>(i + 1);
      cur.lines.push_back(line);
    }
  }
  if (!cur.lines.empty()) blocks.push_back(std::move(cur));
  return blocks;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CoNLL-2009 (word-based SRL + dependency columns)
// Columns: ID FORM LEMMA PLEMMA POS PPOS FEAT PFEAT HEAD PHEAD DEPREL PDEPREL
//          FILLPRED PRED APRED_1 ... APRED_k
// ---------------------------------------------------------------------------

inline std::vector<AnnotatedSentence> read_conll2009(const std::string& path) {
  auto lines = detail::read_lines(path);
  std::vector<AnnotatedSentence> out;
  for (const auto& block : detail::blocks_of(lines)) {
    AnnotatedSentence s;
    int n = static_cast<int>(block.lines.size());
    std::vector<std::vector<std::string>> rows;
    size_t width = 0;
    for (int i = 0; i < n; ++i) {
      long ln = block.first_line + i;
      auto cols = detail::split_ws(block.lines[i]);
      if (cols.size() < 14)
        throw ParseError("line " + std::to_string(ln) + ": expected at least 14 columns, got " +
                         std::to_string(cols.size()));
      if (i == 0) width = cols.size();
      if (cols.size() != width)
        throw ParseError("line " + std::to_string(ln) + ": ragged columns (" +
                         std::to_string(cols.size()) + " vs " + std::to_string(width) + ")");
      rows.push_back(std::move(cols));
    }
    bool any_head = false;
    std::vector<int> preds;  // rows with FILLPRED == Y
    for (int i = 0; i < n; ++i) {
      long ln = block.first_line + i;
      s.tokens.push_back(rows[i][1]);
      if (rows[i][8] != "_") {
        any_head = true;
        int head = detail::parse_int(rows[i][8], "head", ln);
        if (head < 0 || head > n)
          throw ParseError("line " + std::to_string(ln) + ": head " + std::to_string(head) +
                           " out of range for sentence of length " + std::to_string(n));
        s.dep.push_back({head, rows[i][10]});
      } else {
        s.dep.push_back({0, "_"});
      }
      if (rows[i][12] == "Y") preds.push_back(i + 1);
    }
    s.has_dep = any_head;
    if (any_head) {
      std::string bad = tree_violation(head_vector(s));
      if (!bad.empty())
        throw ParseError("line " + std::to_string(block.first_line) + ": " + bad);
    } else {
      s.dep.clear();
    }
    size_t apreds = width - 14;
    if (apreds != preds.size())
      throw ParseError("line " + std::to_string(block.first_line) + ": " +
                       std::to_string(apreds) + " argument columns for " +
                       std::to_string(preds.size()) + " marked predicates");
    for (size_t k = 0; k < preds.size(); ++k) {
      PredicateFrame f;
      f.predicate = preds[k];
      const std::string& sense = rows[preds[k] - 1][13];
      if (sense != "_") f.sense = sense;
      for (int i = 0; i < n; ++i) {
        const std::string& role = rows[i][14 + k];
        if (role != "_") f.arguments.push_back({i + 1, i + 1, role});
      }
      s.frames.push_back(std::move(f));
    }
    fill_chars(s);
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_conll2009(const std::vector<AnnotatedSentence>& corpus,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& s : corpus) {
    int n = s.size();
    std::vector<int> preds;
    for (const auto& f : s.frames) preds.push_back(f.predicate);
    for (int i = 0; i < n; ++i) {
      out << (i + 1) << "\t" << s.tokens[i];
      out << "\t_\t_\t_\t_\t_\t_";  // lemma/pos/feat slots unused
      if (s.has_dep)
        out << "\t" << s.dep[i].head << "\t_\t" << s.dep[i].rel << "\t_";
      else
        out << "\t_\t_\t_\t_";
      bool is_pred = false;
      std::string sense;
      for (const auto& f : s.frames)
        if (f.predicate == i + 1) {
          is_pred = true;
          sense = f.sense;
        }
      out << "\t" << (is_pred ? "Y" : "_");
      out << "\t" << (is_pred ? (sense.empty() ? "_" : sense) : "_");
      for (const auto& f : s.frames) {
        std::string role = "_";
        for (const auto& a : f.arguments)
          if (a.start == i + 1) role = a.role;
        out << "\t" << role;
      }
      out << "\n";
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// CoNLL-X dependency treebank
// Columns: ID FORM LEMMA CPOS POS FEATS HEAD DEPREL PHEAD PDEPREL
// ---------------------------------------------------------------------------

inline std::vector<AnnotatedSentence> read_dep_treebank(const std::string& path) {
  auto lines = detail::read_lines(path);
  std::vector<AnnotatedSentence> out;
  for (const auto& block : detail::blocks_of(lines)) {
    AnnotatedSentence s;
    int n = static_cast<int>(block.lines.size());
    for (int i = 0; i < n; ++i) {
      long ln = block.first_line + i;
      auto cols = detail::split_ws(block.lines[i]);
      if (cols.size() < 8)
        throw ParseError("line " + std::to_string(ln) + ": expected at least 8 columns, got " +
                         std::to_string(cols.size()));
      s.tokens.push_back(cols[1]);
      int head = detail::parse_int(cols[6], "head", ln);
      if (head < 0 || head > n)
        throw ParseError("line " + std::to_string(ln) + ": head " + std::to_string(head) +
                         " out of range for sentence of length " + std::to_string(n));
      if (head == i + 1)
        throw ParseError("line " + std::to_string(ln) + ": token " + std::to_string(i + 1) +
                         " is its own head");
      s.dep.push_back({head, cols[7]});
    }
    s.has_dep = true;
    std::string bad = tree_violation(head_vector(s));
    if (!bad.empty())
      throw ParseError("line " + std::to_string(block.first_line) + ": " + bad);
    fill_chars(s);
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_dep_treebank(const std::vector<AnnotatedSentence>& corpus,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& s : corpus) {
    for (int i = 0; i < s.size(); ++i)
      out << (i + 1) << "\t" << s.tokens[i] << "\t_\t_\t_\t_\t" << s.dep[i].head
          << "\t" << s.dep[i].rel << "\t_\t_\n";
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Span-based SRL: a words file (one token per line, blank line between
// sentences) plus an aligned props file with one bracket column per
// predicate. "(A0*" opens a span, "*)" closes it, "(A0*)" is a single token.
// ---------------------------------------------------------------------------

namespace detail {

struct PropsColumn {
  int predicate = 0;  // V span start, 1-based
  std::vector<SpanArg> args;
};

inline PropsColumn parse_props_column(const std::vector<std::string>& tags,
                                      long sent_ordinal) {
  PropsColumn out;
  std::string open_role;
  int open_start = 0;
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    std::string t = tags[i];
    size_t pos = 0;
    std::string opened;
    if (t[pos] == '(') {
      size_t star = t.find('*', pos);
      if (star == std::string::npos)
        throw ParseError("sentence " + std::to_string(sent_ordinal) +
                         ": malformed bracket tag '" + tags[i] + "'");
      opened = t.substr(pos + 1, star - pos - 1);
      if (opened.empty())
        throw ParseError("sentence " + std::to_string(sent_ordinal) +
                         ": empty role in tag '" + tags[i] + "'");
      if (!open_role.empty())
        throw ParseError("sentence " + std::to_string(sent_ordinal) +
                         ": nested span opened at token " + std::to_string(i + 1));
      open_role = opened;
      open_start = i + 1;
      pos = star;
    }
    if (t[pos] != '*')
      throw ParseError("sentence " + std::to_string(sent_ordinal) +
                       ": malformed bracket tag '" + tags[i] + "'");
    ++pos;
    if (pos < t.size()) {
      if (t.substr(pos) != ")")
        throw ParseError("sentence " + std::to_string(sent_ordinal) +
                         ": malformed bracket tag '" + tags[i] + "'");
      if (open_role.empty())
        throw ParseError("sentence " + std::to_string(sent_ordinal) +
                         ": span closed at token " + std::to_string(i + 1) +
                         " but none is open");
      if (open_role == "V") {
        if (out.predicate != 0)
          throw ParseError("sentence " + std::to_string(sent_ordinal) +
                           ": more than one V span in a predicate column");
        out.predicate = open_start;
      } else {
        out.args.push_back({open_start, i + 1, open_role});
      }
      open_role.clear();
    }
  }
  if (!open_role.empty())
    throw ParseError("sentence " + std::to_string(sent_ordinal) + ": role " +
                     open_role + " opened but never closed");
  if (out.predicate == 0)
    throw ParseError("sentence " + std::to_string(sent_ordinal) +
                     ": predicate column has no V span");
  return out;
}

}  // namespace detail

inline std::vector<AnnotatedSentence> read_span_props(const std::string& text_path,
                                                      const std::string& props_path) {
  auto word_blocks = detail::blocks_of(detail::read_lines(text_path));
  auto prop_blocks = detail::blocks_of(detail::read_lines(props_path));
  if (word_blocks.size() != prop_blocks.size())
    throw ParseError("words file has " + std::to_string(word_blocks.size()) +
                     " sentences but props file has " + std::to_string(prop_blocks.size()));
  std::vector<AnnotatedSentence> out;
  for (size_t si = 0; si < word_blocks.size(); ++si) {
    long ordinal = static_cast<long>(si + 1);
    AnnotatedSentence s;
    for (const auto& line : word_blocks[si].lines) {
      auto cols = detail::split_ws(line);
      s.tokens.push_back(cols[0]);
    }
    int n = s.size();
    if (static_cast<int>(prop_blocks[si].lines.size()) != n)
      throw ParseError("sentence " + std::to_string(ordinal) + ": words file has " +
                       std::to_string(n) + " tokens but props file has " +
                       std::to_string(prop_blocks[si].lines.size()));
    std::vector<std::vector<std::string>> rows;
    size_t width = 0;
    for (int i = 0; i < n; ++i) {
      auto cols = detail::split_ws(prop_blocks[si].lines[i]);
      if (cols.empty())
        throw ParseError("sentence " + std::to_string(ordinal) + ": empty props row");
      if (i == 0) width = cols.size();
      if (cols.size() != width)
        throw ParseError("sentence " + std::to_string(ordinal) + ": ragged props columns");
      rows.push_back(std::move(cols));
    }
    for (size_t k = 1; k < width; ++k) {
      std::vector<std::string> tags;
      for (int i = 0; i < n; ++i) tags.push_back(rows[i][k]);
      auto col = detail::parse_props_column(tags, ordinal);
      PredicateFrame f;
      f.predicate = col.predicate;
      f.arguments = std::move(col.args);
      s.frames.push_back(std::move(f));
    }
    fill_chars(s);
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_span_props(const std::vector<AnnotatedSentence>& corpus,
                             const std::string& text_path,
                             const std::string& props_path) {
  std::ofstream words(text_path), props(props_path);
  if (!words || !props) throw IoError("cannot write " + text_path + " / " + props_path);
  for (const auto& s : corpus) {
    std::vector<PredicateFrame> frames = s.frames;
    std::sort(frames.begin(), frames.end(),
              [](const auto& a, const auto& b) { return a.predicate < b.predicate; });
    for (int i = 0; i < s.size(); ++i) {
      words << s.tokens[i] << "\n";
      bool is_pred = false;
      for (const auto& f : frames) is_pred |= (f.predicate == i + 1);
      props << (is_pred ? s.tokens[i] : "-");
      for (const auto& f : frames) {
        std::string tag = "*";
        if (f.predicate == i + 1) tag = "(V*)";
        for (const auto& a : f.arguments) {
          if (a.start == i + 1 && a.end == i + 1) tag = "(" + a.role + "*)";
          else if (a.start == i + 1) tag = "(" + a.role + "*";
          else if (a.end == i + 1) tag = "*)";
        }
        props << "\t" << tag;
      }
      props << "\n";
    }
    words << "\n";
    props << "\n";
  }
}

}  // namespace srlkit
