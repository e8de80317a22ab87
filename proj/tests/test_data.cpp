#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "srlkit/conll.hpp"
#include "srlkit/data.hpp"
#include "srlkit/embeddings.hpp"
#include "srlkit/synthetic.hpp"

using namespace srlkit;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("conll2009 fixture parses to one width-1 frame", "[data]") {
  AnnotatedSentence s;
  s.tokens = {"she", "sees", "him"};
  s.has_dep = true;
  s.dep = {{2, "subj"}, {0, "root"}, {2, "obj"}};
  s.frames = {{2, "see.01", {{1, 1, "A0"}, {3, 3, "A1"}}}};
  fill_chars(s);

  std::string path = tmp_path("srlkit_c09_fixture.conll");
  write_conll2009({s}, path);
  auto rt = read_conll2009(path);
  REQUIRE(rt.size() == 1);
  REQUIRE(rt[0].tokens == s.tokens);
  REQUIRE(rt[0].frames.size() == 1);
  REQUIRE(rt[0].frames[0] == s.frames[0]);
  REQUIRE(rt[0].dep == s.dep);

  // writer o reader is the identity on its own output
  std::string path2 = tmp_path("srlkit_c09_fixture2.conll");
  write_conll2009(rt, path2);
  REQUIRE(read_file(path) == read_file(path2));
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("conll2009 empty file gives empty corpus", "[data]") {
  std::string path = tmp_path("srlkit_c09_empty.conll");
  write_file(path, "");
  REQUIRE(read_conll2009(path).empty());
  std::remove(path.c_str());
}

TEST_CASE("conll2009 apred count must match marked predicates", "[data]") {
  // one fillpred=Y row but two apred columns
  std::string path = tmp_path("srlkit_c09_bad.conll");
  write_file(path,
             "1\ta\t_\t_\t_\t_\t_\t_\t2\t_\tsub\t_\t_\t_\tA0\t_\n"
             "2\tb\t_\t_\t_\t_\t_\t_\t0\t_\troot\t_\tY\tb.01\t_\tA1\n\n");
  REQUIRE_THROWS_AS(read_conll2009(path), ParseError);
  try {
    read_conll2009(path);
  } catch (const ParseError& e) {
    REQUIRE(std::string(e.what()).find("line 1") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("conll2009 ragged columns carry a line number", "[data]") {
  std::string path = tmp_path("srlkit_c09_ragged.conll");
  write_file(path,
             "1\ta\t_\t_\t_\t_\t_\t_\t2\t_\tsub\t_\t_\t_\n"
             "2\tb\t_\t_\t_\t_\t_\t_\t0\t_\troot\t_\t_\t_\textra\n\n");
  try {
    read_conll2009(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("props fixture with width-1 and width-2 arguments", "[data]") {
  std::string words = tmp_path("srlkit_props.words");
  std::string props = tmp_path("srlkit_props.props");
  write_file(words, "the\ncat\nsat\nvery\nstill\n\n");
  write_file(props,
             "-\t(A0*\n-\t*)\nsat\t(V*)\n-\t(A1*\n-\t*)\n\n");
  auto corpus = read_span_props(words, props);
  REQUIRE(corpus.size() == 1);
  REQUIRE(corpus[0].frames.size() == 1);
  const auto& f = corpus[0].frames[0];
  REQUIRE(f.predicate == 3);
  REQUIRE(f.arguments.size() == 2);
  REQUIRE(f.arguments[0] == SpanArg{1, 2, "A0"});
  REQUIRE(f.arguments[1] == SpanArg{4, 5, "A1"});

  std::string w2 = tmp_path("srlkit_props2.words"), p2 = tmp_path("srlkit_props2.props");
  write_span_props(corpus, w2, p2);
  auto rt = read_span_props(w2, p2);
  REQUIRE(rt.size() == 1);
  REQUIRE(rt[0].tokens == corpus[0].tokens);
  REQUIRE(rt[0].frames == corpus[0].frames);
  for (const auto& p : {words, props, w2, p2}) std::remove(p.c_str());
}

TEST_CASE("props sentence with zero predicates", "[data]") {
  std::string words = tmp_path("srlkit_props0.words");
  std::string props = tmp_path("srlkit_props0.props");
  write_file(words, "hello\nworld\n\n");
  write_file(props, "-\n-\n\n");
  auto corpus = read_span_props(words, props);
  REQUIRE(corpus.size() == 1);
  REQUIRE(corpus[0].frames.empty());
  std::remove(words.c_str());
  std::remove(props.c_str());
}

TEST_CASE("props unclosed span is rejected with the sentence ordinal", "[data]") {
  std::string words = tmp_path("srlkit_propsx.words");
  std::string props = tmp_path("srlkit_propsx.props");
  write_file(words, "a\nb\n\nc\nd\n\n");
  write_file(props, "-\t(V*)\n-\t*\n\nc\t(V*)\n-\t(A1*\n\n");
  try {
    read_span_props(words, props);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    std::string msg = e.what();
    REQUIRE(msg.find("sentence 2") != std::string::npos);
    REQUIRE(msg.find("A1") != std::string::npos);
  }
  std::remove(words.c_str());
  std::remove(props.c_str());
}

TEST_CASE("treebank round-trip and validation", "[data]") {
  SECTION("two-token tree rooted at the second token") {
    std::string path = tmp_path("srlkit_dep.conllx");
    write_file(path, "1\tdogs\t_\t_\t_\t_\t2\tsubj\t_\t_\n2\tbark\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
    auto corpus = read_dep_treebank(path);
    REQUIRE(corpus.size() == 1);
    REQUIRE(corpus[0].dep[0].head == 2);
    REQUIRE(corpus[0].dep[1].head == 0);
    std::string path2 = tmp_path("srlkit_dep2.conllx");
    write_dep_treebank(corpus, path2);
    REQUIRE(read_file(path) == read_file(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
  }
  SECTION("head out of range") {
    std::string path = tmp_path("srlkit_dep_oor.conllx");
    write_file(path, "1\ta\t_\t_\t_\t_\t3\tx\t_\t_\n2\tb\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
    REQUIRE_THROWS_AS(read_dep_treebank(path), ParseError);
    std::remove(path.c_str());
  }
  SECTION("self-loop head") {
    std::string path = tmp_path("srlkit_dep_self.conllx");
    write_file(path, "1\ta\t_\t_\t_\t_\t1\tx\t_\t_\n2\tb\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
    REQUIRE_THROWS_AS(read_dep_treebank(path), ParseError);
    std::remove(path.c_str());
  }
  SECTION("cycle") {
    std::string path = tmp_path("srlkit_dep_cycle.conllx");
    write_file(path,
               "1\ta\t_\t_\t_\t_\t2\tx\t_\t_\n2\tb\t_\t_\t_\t_\t1\tx\t_\t_\n"
               "3\tc\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
    REQUIRE_THROWS_AS(read_dep_treebank(path), ParseError);
    std::remove(path.c_str());
  }
}

TEST_CASE("word embedding loading", "[data]") {
  Vocabulary vocab;
  AnnotatedSentence s;
  s.tokens = {"alpha", "beta", "gamma"};
  fill_chars(s);
  std::vector<AnnotatedSentence> corpus{s};
  vocab.build({&corpus});

  SECTION("known rows equal file values exactly") {
    std::string path = tmp_path("srlkit_emb1.txt");
    write_file(path, "alpha 1 2 3 4\nbeta -1 0.5 0 2\n");
    std::mt19937_64 rng(3);
    int dim = 0;
    Tensor table = load_word_embeddings(path, vocab, rng, &dim);
    REQUIRE(dim == 4);
    int a = vocab.word("alpha");
    REQUIRE(table.at(a, 0) == 1.0);
    REQUIRE(table.at(a, 3) == 4.0);
    int b = vocab.word("beta");
    REQUIRE(table.at(b, 1) == 0.5);
    std::remove(path.c_str());
  }
  SECTION("missing words draw a seeded fallback") {
    std::string path = tmp_path("srlkit_emb2.txt");
    write_file(path, "alpha 1 2 3 4\n");
    std::mt19937_64 r1(42), r2(42), r3(43);
    Tensor t1 = load_word_embeddings(path, vocab, r1);
    Tensor t2 = load_word_embeddings(path, vocab, r2);
    Tensor t3 = load_word_embeddings(path, vocab, r3);
    int gid = vocab.word("gamma");
    for (int j = 0; j < 4; ++j) {
      REQUIRE(t1.at(gid, j) == t2.at(gid, j));
      REQUIRE(std::fabs(t1.at(gid, j)) <= 0.01);
    }
    bool differs = false;
    for (int j = 0; j < 4; ++j) differs |= (t1.at(gid, j) != t3.at(gid, j));
    REQUIRE(differs);
    std::remove(path.c_str());
  }
  SECTION("header count mismatch is a format error") {
    std::string path = tmp_path("srlkit_emb3.txt");
    write_file(path, "2 4\nalpha 1 2 3 4\nbeta 1 1 1 1\ngamma 0 0 0 1\n");
    std::mt19937_64 rng(1);
    REQUIRE_THROWS_AS(load_word_embeddings(path, vocab, rng), ParseError);
    std::remove(path.c_str());
  }
  SECTION("inconsistent dimensions are a format error") {
    std::string path = tmp_path("srlkit_emb4.txt");
    write_file(path, "alpha 1 2 3 4\nbeta 1 2 3\n");
    std::mt19937_64 rng(1);
    REQUIRE_THROWS_AS(load_word_embeddings(path, vocab, rng), ParseError);
    std::remove(path.c_str());
  }
}

TEST_CASE("external representation files", "[data]") {
  SECTION("K=4 d=8 round-trips exactly") {
    ExternalReps reps;
    reps.layers = 4;
    reps.dim = 8;
    std::mt19937_64 rng(11);
    for (int si = 0; si < 3; ++si) {
      int n = 2 + si;
      std::vector<std::vector<Tensor>> sent(n, std::vector<Tensor>(4, Tensor({8})));
      for (auto& tok : sent)
        for (auto& layer : tok)
          for (double& x : layer.v) x = rand_uniform(rng, -2.0, 2.0);
      reps.sentences.push_back(std::move(sent));
    }
    std::string path = tmp_path("srlkit_ext1.txt");
    write_external_reps(reps, path);
    ExternalReps rt = load_external_reps(path);
    REQUIRE(rt.layers == 4);
    REQUIRE(rt.dim == 8);
    REQUIRE(rt.sentences.size() == 3);
    for (size_t si = 0; si < 3; ++si)
      for (size_t t = 0; t < rt.sentences[si].size(); ++t)
        for (int k = 0; k < 4; ++k)
          for (int j = 0; j < 8; ++j)
            REQUIRE(rt.sentences[si][t][k].at(j) == reps.sentences[si][t][k].at(j));
    std::remove(path.c_str());
  }
  SECTION("K=1 degenerate file is accepted") {
    std::string path = tmp_path("srlkit_ext2.txt");
    write_file(path, "1 2\n#sent 0 1\n0 0 0.5 -0.5\n\n");
    ExternalReps reps = load_external_reps(path);
    REQUIRE(reps.layers == 1);
    REQUIRE(reps.sentences[0][0][0].at(1) == -0.5);
    std::remove(path.c_str());
  }
  SECTION("token count mismatch names the sentence") {
    std::string path = tmp_path("srlkit_ext3.txt");
    write_file(path, "1 2\n#sent 0 1\n0 0 0.5 -0.5\n\n");
    ExternalReps reps = load_external_reps(path);
    AnnotatedSentence s;
    s.tokens = {"a", "b", "c", "d", "e"};
    fill_chars(s);
    std::vector<AnnotatedSentence> corpus{s};
    try {
      attach_external_reps(corpus, reps);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      REQUIRE(std::string(e.what()).find("sentence 0") != std::string::npos);
    }
    std::remove(path.c_str());
  }
}

TEST_CASE("vocabulary build is order-independent and stable", "[data]") {
  SyntheticConfig cfg;
  cfg.seed = 5;
  cfg.srl_train = 20;
  auto corpus = gen_synthetic(cfg);

  Vocabulary v1;
  v1.build({&corpus.srl_train});
  auto reversed = corpus.srl_train;
  std::reverse(reversed.begin(), reversed.end());
  Vocabulary v2;
  v2.build({&reversed});
  REQUIRE(v1.words == v2.words);
  REQUIRE(v1.roles == v2.roles);
  REQUIRE(v1.rels == v2.rels);

  REQUIRE(v1.roles[Vocabulary::kNullRole] == Vocabulary::kNullRoleName);
  REQUIRE(std::count(v1.roles.begin(), v1.roles.end(), Vocabulary::kNullRoleName) == 1);

  std::stringstream ss;
  v1.save(ss);
  Vocabulary v3 = Vocabulary::load(ss);
  REQUIRE(v1.words == v3.words);
  REQUIRE(v1.chars == v3.chars);
  REQUIRE(v1.roles == v3.roles);
  REQUIRE(v1.rels == v3.rels);

  REQUIRE(v1.word("no-such-token") == Vocabulary::kUnk);
}

TEST_CASE("synthetic generator invariants", "[data]") {
  SyntheticConfig cfg;
  cfg.seed = 9;
  cfg.srl_train = 40;
  cfg.srl_dev = 10;
  cfg.dep_train = 30;
  cfg.dep_dev = 10;

  auto c1 = gen_synthetic(cfg);
  auto c2 = gen_synthetic(cfg);

  SECTION("same seed reproduces the corpora") {
    REQUIRE(c1.srl_train.size() == c2.srl_train.size());
    for (size_t i = 0; i < c1.srl_train.size(); ++i) {
      REQUIRE(c1.srl_train[i].tokens == c2.srl_train[i].tokens);
      REQUIRE(c1.srl_train[i].frames == c2.srl_train[i].frames);
      REQUIRE(c1.srl_train[i].dep == c2.srl_train[i].dep);
    }
  }
  SECTION("different seeds differ") {
    SyntheticConfig cfg2 = cfg;
    cfg2.seed = 10;
    auto c3 = gen_synthetic(cfg2);
    bool same = true;
    for (size_t i = 0; i < c1.srl_train.size() && same; ++i)
      same = c1.srl_train[i].tokens == c3.srl_train[i].tokens;
    REQUIRE_FALSE(same);
  }
  SECTION("A0 is always the subj dependent of its predicate") {
    for (const auto& s : c1.srl_train)
      for (const auto& f : s.frames)
        for (const auto& a : f.arguments) {
          if (a.role != "A0") continue;
          bool found = false;
          for (int t = a.start; t <= a.end; ++t)
            if (s.dep[t - 1].head == f.predicate && s.dep[t - 1].rel == "subj")
              found = true;
          REQUIRE(found);
        }
  }
  SECTION("generated trees are valid") {
    for (const auto* corpus : {&c1.srl_train, &c1.srl_dev, &c1.dep_train, &c1.dep_dev})
      for (const auto& s : *corpus) REQUIRE(tree_violation(head_vector(s)).empty());
  }
  SECTION("train and dev are disjoint") {
    std::set<std::vector<std::string>> train_keys;
    for (const auto& s : c1.srl_train) train_keys.insert(s.tokens);
    for (const auto& s : c1.srl_dev) REQUIRE(train_keys.count(s.tokens) == 0);
  }
  SECTION("size below one is rejected") {
    SyntheticConfig bad = cfg;
    bad.srl_train = 0;
    REQUIRE_THROWS_AS(gen_synthetic(bad), ConfigError);
  }
  SECTION("word mode forces width one") {
    SyntheticConfig w = cfg;
    w.word_mode = true;
    auto wc = gen_synthetic(w);
    for (const auto& s : wc.srl_train)
      for (const auto& f : s.frames)
        for (const auto& a : f.arguments) REQUIRE(a.start == a.end);
  }
}

TEST_CASE("synthetic corpora survive their format round-trips", "[data]") {
  SyntheticConfig cfg;
  cfg.seed = 21;
  cfg.srl_train = 15;
  auto c = gen_synthetic(cfg);

  SECTION("span props") {
    std::string w = tmp_path("srlkit_syn.words"), p = tmp_path("srlkit_syn.props");
    write_span_props(c.srl_train, w, p);
    auto rt = read_span_props(w, p);
    REQUIRE(rt.size() == c.srl_train.size());
    for (size_t i = 0; i < rt.size(); ++i) {
      REQUIRE(rt[i].tokens == c.srl_train[i].tokens);
      REQUIRE(rt[i].frames.size() == 1);
      REQUIRE(rt[i].frames[0].predicate == c.srl_train[i].frames[0].predicate);
      REQUIRE(rt[i].frames[0].arguments == c.srl_train[i].frames[0].arguments);
    }
    std::remove(w.c_str());
    std::remove(p.c_str());
  }
  SECTION("conll2009 for word mode") {
    SyntheticConfig wcfg = cfg;
    wcfg.word_mode = true;
    auto wc = gen_synthetic(wcfg);
    std::string path = tmp_path("srlkit_syn.conll09");
    write_conll2009(wc.srl_train, path);
    auto rt = read_conll2009(path);
    REQUIRE(rt.size() == wc.srl_train.size());
    for (size_t i = 0; i < rt.size(); ++i) {
      REQUIRE(rt[i].frames == wc.srl_train[i].frames);
      REQUIRE(rt[i].dep == wc.srl_train[i].dep);
    }
    std::remove(path.c_str());
  }
  SECTION("treebank") {
    std::string path = tmp_path("srlkit_syn.conllx");
    write_dep_treebank(c.dep_train, path);
    auto rt = read_dep_treebank(path);
    REQUIRE(rt.size() == c.dep_train.size());
    for (size_t i = 0; i < rt.size(); ++i) REQUIRE(rt[i].dep == c.dep_train[i].dep);
    std::remove(path.c_str());
  }
}

TEST_CASE("conll2009 head out of range carries the line number", "[data]") {
  std::string path = tmp_path("srlkit_c09_headoor.conll");
  write_file(path,
             "1\ta\t_\t_\t_\t_\t_\t_\t9\t_\tsub\t_\t_\t_\n"
             "2\tb\t_\t_\t_\t_\t_\t_\t0\t_\troot\t_\t_\t_\n\n");
  try {
    read_conll2009(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    std::string msg = e.what();
    REQUIRE(msg.find("line 1") != std::string::npos);
    REQUIRE(msg.find("out of range") != std::string::npos);
  }
  std::remove(path.c_str());
}
