#pragma once

// Word embedding files (word2vec text format) and external per-token
// representation files (the fixed contextual layers consumed by the input
// fusion).

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "srlkit/conll.hpp"
#include "srlkit/data.hpp"
#include "srlkit/error.hpp"
#include "srlkit/params.hpp"
#include "srlkit/tensor.hpp"

namespace srlkit {

// Text format: optional "V D" header, then one `word v_1 .. v_D` line each.
// Rows align with vocabulary word ids; words missing from the file get a
// seeded uniform draw in [-0.01, 0.01], the padding row stays zero.
inline Tensor load_word_embeddings(const std::string& path, const Vocabulary& vocab,
                                   std::mt19937_64& rng, int* dim_out = nullptr) {
  auto lines = detail::read_lines(path);
  size_t first = 0;
  long declared = -1;
  int dim = -1;
  if (!lines.empty()) {
    // header = exactly two full integers on the first line
    auto cols = detail::split_ws(lines[0]);
    auto as_int = [](const std::string& s, long& out) {
      char* end = nullptr;
      out = std::strtol(s.c_str(), &end, 10);
      return end == s.c_str() + s.size() && !s.empty();
    };
    long v = 0, d = 0;
    if (cols.size() == 2 && as_int(cols[0], v) && as_int(cols[1], d)) {
      declared = v;
      dim = static_cast<int>(d);
      first = 1;
    }
  }
  std::vector<std::pair<std::string, std::vector<double>>> entries;
  for (size_t li = first; li < lines.size(); ++li) {
    if (lines[li].find_first_not_of(" \t") == std::string::npos) continue;
    auto cols = detail::split_ws(lines[li]);
    if (cols.size() < 2)
      throw ParseError("line " + std::to_string(li + 1) + ": embedding row too short");
    int d = static_cast<int>(cols.size()) - 1;
    if (dim < 0) dim = d;
    if (d != dim)
      throw ParseError("line " + std::to_string(li + 1) + ": dimension " +
                       std::to_string(d) + " differs from " + std::to_string(dim));
    std::vector<double> v(d);
    for (int j = 0; j < d; ++j) {
      char* end = nullptr;
      v[j] = std::strtod(cols[j + 1].c_str(), &end);
      if (end == cols[j + 1].c_str())
        throw ParseError("line " + std::to_string(li + 1) + ": bad value '" +
                         cols[j + 1] + "'");
    }
    entries.emplace_back(cols[0], std::move(v));
  }
  if (declared >= 0 && declared != static_cast<long>(entries.size()))
    throw ParseError("header declares " + std::to_string(declared) +
                     " entries but file has " + std::to_string(entries.size()));
  if (dim <= 0) throw ParseError("embedding file is empty: " + path);

  Tensor table({vocab.n_words(), dim});
  std::vector<char> seen(vocab.n_words(), 0);
  seen[Vocabulary::kPad] = 1;  // padding row stays zero
  for (auto& [word, v] : entries) {
    auto it = vocab.word_ids.find(word);
    if (it == vocab.word_ids.end()) continue;
    for (int j = 0; j < dim; ++j) table.at(it->second, j) = v[j];
    seen[it->second] = 1;
  }
  for (int i = 0; i < vocab.n_words(); ++i) {
    if (seen[i]) continue;
    for (int j = 0; j < dim; ++j) table.at(i, j) = rand_uniform(rng, -0.01, 0.01);
  }
  if (dim_out) *dim_out = dim;
  return table;
}

// External representation file:
//   header line "K d_ext"
//   per sentence: "#sent <index> <n_tokens>", then n_tokens*K lines
//   "<token_index> <layer_index> v_1 ... v_{d_ext}", blank line terminates.
struct ExternalReps {
  int layers = 0;   // K
  int dim = 0;      // d_ext
  std::vector<std::vector<std::vector<Tensor>>> sentences;  // [sent][token][layer]
};

inline ExternalReps load_external_reps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  ExternalReps reps;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing K d_ext header");
  {
    auto cols = detail::split_ws(line);
    if (cols.size() != 2) throw ParseError(path + ": malformed header '" + line + "'");
    reps.layers = detail::parse_int(cols[0], "layer count", 1);
    reps.dim = detail::parse_int(cols[1], "dimension", 1);
    if (reps.layers < 1 || reps.dim < 1)
      throw ParseError(path + ": nonpositive K or d_ext");
  }
  long ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cols = detail::split_ws(line);
    if (cols.size() != 3 || cols[0] != "#sent")
      throw ParseError("line " + std::to_string(ln) + ": expected '#sent <index> <n>'");
    size_t index = detail::parse_int(cols[1], "sentence index", ln);
    int n = detail::parse_int(cols[2], "token count", ln);
    if (index != reps.sentences.size())
      throw ParseError("line " + std::to_string(ln) + ": sentence index " +
                       std::to_string(index) + " out of order");
    std::vector<std::vector<Tensor>> sent(
        n, std::vector<Tensor>(reps.layers, Tensor({reps.dim})));
    std::vector<std::vector<char>> got(n, std::vector<char>(reps.layers, 0));
    for (int r = 0; r < n * reps.layers; ++r) {
      if (!std::getline(in, line))
        throw ParseError("line " + std::to_string(ln) + ": truncated sentence block");
      ++ln;
      auto vcols = detail::split_ws(line);
      if (static_cast<int>(vcols.size()) != 2 + reps.dim)
        throw ParseError("line " + std::to_string(ln) + ": expected " +
                         std::to_string(2 + reps.dim) + " fields");
      int tok = detail::parse_int(vcols[0], "token index", ln);
      int layer = detail::parse_int(vcols[1], "layer index", ln);
      if (tok < 0 || tok >= n || layer < 0 || layer >= reps.layers)
        throw ParseError("line " + std::to_string(ln) + ": token/layer out of range");
      if (got[tok][layer])
        throw ParseError("line " + std::to_string(ln) + ": duplicate token/layer row");
      got[tok][layer] = 1;
      for (int j = 0; j < reps.dim; ++j)
        sent[tok][layer].at(j) = std::strtod(vcols[2 + j].c_str(), nullptr);
    }
    reps.sentences.push_back(std::move(sent));
  }
  return reps;
}

inline void write_external_reps(const ExternalReps& reps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << reps.layers << " " << reps.dim << "\n";
  for (size_t si = 0; si < reps.sentences.size(); ++si) {
    const auto& sent = reps.sentences[si];
    out << "#sent " << si << " " << sent.size() << "\n";
    for (size_t t = 0; t < sent.size(); ++t)
      for (int k = 0; k < reps.layers; ++k) {
        out << t << " " << k;
        for (int j = 0; j < reps.dim; ++j)
          out << " " << srlkit::detail::fmt_double(sent[t][k].at(j));
        out << "\n";
      }
    out << "\n";
  }
}

// Attaches loaded representations to a corpus by position.
inline void attach_external_reps(std::vector<AnnotatedSentence>& corpus,
                                 const ExternalReps& reps) {
  if (corpus.size() != reps.sentences.size())
    throw ParseError("external representations cover " +
                     std::to_string(reps.sentences.size()) + " sentences, corpus has " +
                     std::to_string(corpus.size()));
  for (size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].tokens.size() != reps.sentences[i].size())
      throw ParseError("sentence " + std::to_string(i) + ": corpus has " +
                       std::to_string(corpus[i].tokens.size()) +
                       " tokens but external file has " +
                       std::to_string(reps.sentences[i].size()) + " rows");
    corpus[i].ext_layers = reps.sentences[i];
  }
}

}  // namespace srlkit
