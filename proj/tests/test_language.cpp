#include <gtest/gtest.h>

#include <regex>

#include "support.hpp"

using namespace paxray;
using namespace paxray::language;
using namespace testing_support;

namespace {

template <typename F>
std::string error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.qualified();
    }
    return "";
}

/// Regex restatement of the sentence rule.
std::vector<std::string> regex_split(const std::string& text) {
    static const std::regex boundary(R"([.?!;](?=\s|$)|\n)");
    std::vector<std::string> out;
    for (std::sregex_token_iterator it(text.begin(), text.end(), boundary, -1), end; it != end; ++it) {
        std::string s = *it;
        const auto b = s.find_first_not_of(" \t\r\n\f\v");
        if (b == std::string::npos) continue;
        const auto e = s.find_last_not_of(" \t\r\n\f\v");
        out.push_back(s.substr(b, e - b + 1));
    }
    return out;
}

Lexicon lexicon(std::initializer_list<std::pair<const char*, Category>> entries) {
    Lexicon lex;
    for (const auto& [s, c] : entries) lex.add(s, c);
    return lex;
}

EmbeddingTable unit_table(const std::vector<std::string>& words) {
    EmbeddingTable t(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::vector<double> v(words.size(), 0.0);
        v[i] = 1.0;
        t.add(words[i], v);
    }
    return t;
}

std::vector<double> row(const EmbeddingTable& t, const std::string& w) {
    const auto s = *t.find(w);
    return {s.begin(), s.end()};
}

void expect_near(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-12) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], tol) << "component " << k;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sentences and tokens
// ---------------------------------------------------------------------------

TEST(Sentences, Basic) {
    EXPECT_EQ(split_sentences("No pneumothorax. Heart size normal."),
              (std::vector<std::string>{"No pneumothorax", "Heart size normal"}));
    EXPECT_TRUE(split_sentences("").empty());
    EXPECT_EQ(split_sentences("Size 2.5 cm; stable"), (std::vector<std::string>{"Size 2.5 cm", "stable"}));
    EXPECT_EQ(split_sentences(Report{"r", "a\nb"}), (std::vector<std::string>{"a", "b"}));
}

TEST(Sentences, MatchRegexOracle) {
    Rng rng(200);
    const std::vector<std::string> pieces{"heart", "lung", " ", "  ", ".", ";", "!", "?", "\n", "\t", "2.5", "a.b", "x"};
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        const int n = rng.integer(0, 25);
        for (int i = 0; i < n; ++i) text += pieces[static_cast<std::size_t>(rng.integer(0, static_cast<int>(pieces.size()) - 1))];
        EXPECT_EQ(split_sentences(text), regex_split(text)) << '"' << text << '"';
    }
}

TEST(Tokens, LowercaseAndPunctuation) {
    EXPECT_EQ(tokenize("Left-sided  PLEURAL effusion, 6th rib."),
              (std::vector<std::string>{"left", "sided", "pleural", "effusion", "6th", "rib"}));
    EXPECT_TRUE(tokenize(" ,.;").empty());
}

// ---------------------------------------------------------------------------
// Lexicon and tagging
// ---------------------------------------------------------------------------

TEST(Lexicon, GoldenFileIsByteExact) {
    const auto bytes = read_bytes(golden_dir() / "lexicon.tsv");
    const auto lex = load_lexicon(golden_dir() / "lexicon.tsv");
    EXPECT_EQ(lex.size(), 4u);
    EXPECT_EQ(lex.find("right lung"), Category::A);
    EXPECT_EQ(lex.find("above"), Category::OM);
    EXPECT_EQ(serialize_lexicon(lex), bytes);
}

TEST(Lexicon, Errors) {
    EXPECT_EQ(error_of([] { (void)parse_lexicon("heart A\n"); }), "language.MalformedLine");
    EXPECT_EQ(error_of([] { (void)parse_lexicon("heart\tA\tB\n"); }), "language.MalformedLine");
    EXPECT_EQ(error_of([] { (void)parse_lexicon("heart\tX\n"); }), "language.InvalidCategory");
    EXPECT_EQ(error_of([] { (void)parse_lexicon("Heart\tA\n"); }), "language.MalformedLine");
    EXPECT_EQ(error_of([] { (void)parse_lexicon("a b c d\tA\n"); }), "language.MalformedLine");
    EXPECT_EQ(error_of([] { (void)parse_lexicon("heart\tA\nheart\tO\n"); }), "language.DuplicateEntry");
    EXPECT_EQ(error_of([] { (void)load_lexicon("/nonexistent/lex.tsv"); }), "language.MissingFile");
    EXPECT_EQ(parse_lexicon("\nheart\tA\r\n\n").size(), 1u);
}

TEST(Tagging, CategoryExample) {
    const auto lex = lexicon({{"heart", Category::A}, {"pneumothorax", Category::O}, {"above", Category::OM}});
    const auto p = tag_phrase("pneumothorax above the heart", lex);
    EXPECT_EQ(p.group(Category::A), (std::vector<std::string>{"heart"}));
    EXPECT_EQ(p.group(Category::O), (std::vector<std::string>{"pneumothorax"}));
    EXPECT_EQ(p.group(Category::OM), (std::vector<std::string>{"above"}));
    EXPECT_TRUE(p.group(Category::AM).empty());
    EXPECT_TRUE(p.is_anomaly);
}

TEST(Tagging, NoHits) {
    const auto p = tag_phrase("nothing to see", lexicon({{"heart", Category::A}}));
    for (const auto& g : p.groups) EXPECT_TRUE(g.empty());
    EXPECT_TRUE(p.matches.empty());
}

TEST(Tagging, LongestMatchWins) {
    const auto lex = lexicon({{"right lung", Category::A}, {"lung", Category::A}, {"right", Category::AM}});
    const auto p = tag_phrase("right lung", lex);
    ASSERT_EQ(p.matches.size(), 1u);
    EXPECT_EQ(p.matches[0], (Match{"right lung", Category::A, 0, 2}));
    EXPECT_EQ(p.group(Category::A), (std::vector<std::string>{"right", "lung"}));
    EXPECT_TRUE(p.group(Category::AM).empty());
}

TEST(Tagging, ThreeTokenFormsFirst) {
    const auto lex = lexicon({{"left lower lobe", Category::A}, {"left lower", Category::AM}, {"lobe", Category::A}});
    const auto p = tag_phrase("opacity in left lower lobe", lex);
    ASSERT_EQ(p.matches.size(), 1u);
    EXPECT_EQ(p.matches[0].surface, "left lower lobe");
}

TEST(Tagging, CaseInsensitiveAndDeterministic) {
    const auto lex = lexicon({{"heart", Category::A}, {"right lung", Category::A}, {"small", Category::OM},
                              {"effusion", Category::O}, {"upper", Category::AM}});
    Rng rng(201);
    const std::vector<std::string> words{"Heart", "RIGHT", "lung", "Small", "EFFUSION", "upper", "the", "of", ","};
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        for (int i = rng.integer(0, 8); i > 0; --i) text += words[static_cast<std::size_t>(rng.integer(0, 8))] + " ";
        std::string lower = text;
        for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        auto a = tag_phrase(text, lex), b = tag_phrase(lower, lex);
        EXPECT_EQ(a.groups, b.groups);
        EXPECT_EQ(a.matches, b.matches);
        EXPECT_EQ(tag_phrase(text, lex), a);
    }
}

TEST(Filtering, Precedence) {
    const auto lex = lexicon({{"heart", Category::A}, {"pneumothorax", Category::O}});
    auto obs = tag_phrase("pneumothorax", lex);
    auto anatomy = tag_phrase("heart", lex);
    auto flagged = tag_phrase("heart", lex);
    flagged.is_problem = true;
    auto vetoed = tag_phrase("pneumothorax", lex);
    vetoed.is_problem = false;
    auto anomalous = tag_phrase("heart", lex);
    anomalous.is_anomaly = true;
    const auto kept = filter_phrases({obs, anatomy, flagged, vetoed, anomalous});
    EXPECT_EQ(kept, (std::vector<TaggedPhrase>{obs, flagged, anomalous}));
}

TEST(Pretagged, ParsesGroupsAndVerdicts) {
    const auto j = nlohmann::json::parse(R"({"id":"r7","phrases":[
        {"text":"Left lung opacity","tokens":[{"word":"Left","cat":"AM"},{"word":"lung","cat":"A"},{"word":"opacity","cat":null}],
         "is_problem":true,"is_anomaly":false}]})");
    const auto r = pretagged_from_json(j);
    EXPECT_EQ(r.id, "r7");
    ASSERT_EQ(r.phrases.size(), 1u);
    const auto& p = r.phrases[0];
    EXPECT_EQ(p.tokens, (std::vector<std::string>{"left", "lung", "opacity"}));
    EXPECT_EQ(p.group(Category::AM), (std::vector<std::string>{"left"}));
    EXPECT_EQ(p.group(Category::A), (std::vector<std::string>{"lung"}));
    EXPECT_EQ(p.is_problem, true);
    EXPECT_FALSE(p.is_anomaly);
    EXPECT_EQ(filter_phrases(r.phrases).size(), 1u);
}

TEST(Pretagged, Errors) {
    EXPECT_EQ(error_of([] { (void)pretagged_from_json(nlohmann::json::parse(R"({"phrases":[]})")); }), "language.MalformedJson");
    EXPECT_EQ(error_of([] {
                  (void)pretagged_from_json(nlohmann::json::parse(R"({"id":"x","phrases":[{"tokens":[{"word":"a","cat":"Q"}]}]})"));
              }),
              "language.InvalidCategory");
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

TEST(Embeddings, ParseMinimal) {
    const auto t = parse_embeddings("2 3\na 1 0 0\nb 0 1 0");
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(t.dim(), 3u);
    EXPECT_EQ(row(t, "b"), (std::vector<double>{0, 1, 0}));
    EXPECT_FALSE(t.find("c"));
}

TEST(Embeddings, Errors) {
    EXPECT_EQ(error_of([] { (void)parse_embeddings("1 3\nc 1 0\n"); }), "language.DimensionMismatch");
    EXPECT_EQ(error_of([] { (void)parse_embeddings(""); }), "language.MalformedHeader");
    EXPECT_EQ(error_of([] { (void)parse_embeddings("two 3\n"); }), "language.MalformedHeader");
    EXPECT_EQ(error_of([] { (void)parse_embeddings("1 0\n"); }), "language.MalformedHeader");
    EXPECT_EQ(error_of([] { (void)parse_embeddings("2 1\na 1\na 2\n"); }), "language.DuplicateToken");
    EXPECT_EQ(error_of([] { (void)parse_embeddings("3 1\na 1\nb 2\n"); }), "language.CountMismatch");
    EXPECT_EQ(error_of([] { (void)parse_embeddings("1 1\na x\n"); }), "language.MalformedValue");
    EXPECT_EQ(error_of([] { (void)parse_embeddings("1 1\na nan\n"); }), "language.MalformedValue");
    EXPECT_EQ(error_of([] { (void)load_embeddings("/nonexistent/emb.txt"); }), "language.MissingFile");
}

TEST(Embeddings, GoldenFileIsByteExact) {
    const auto bytes = read_bytes(golden_dir() / "embeddings.txt");
    const auto t = load_embeddings(golden_dir() / "embeddings.txt");
    EXPECT_EQ(row(t, "b"), (std::vector<double>{-0.25, 0.001, 3}));
    EXPECT_EQ(serialize_embeddings(t), bytes);
}

TEST(Embeddings, RandomTableRoundTrips) {
    Rng rng(202);
    for (int trial = 0; trial < 5; ++trial) {
        EmbeddingTable t(static_cast<std::size_t>(rng.integer(1, 12)));
        for (int i = 0; i < 50; ++i) {
            std::vector<double> v(t.dim());
            for (double& x : v) x = rng.uniform(-10, 10) * std::pow(10.0, rng.integer(-6, 6));
            t.add("w" + std::to_string(i), v);
        }
        EXPECT_EQ(parse_embeddings(serialize_embeddings(t)), t);
    }
}

TEST(Embeddings, PhraseCombination) {
    const auto t = unit_table({"a", "b", "m", "o"});
    TaggedPhrase p;
    p.groups[0] = {"a"};
    expect_near(embed_phrase(p, t), row(t, "a"));
    p.groups[0] = {};
    EXPECT_TRUE(is_zero(embed_phrase(p, t)));
    p.groups[0] = {"a", "b"};
    p.groups[1] = {"m"};
    expect_near(embed_phrase(p, t), {0.5, 0.5, 1.0, 0.0});
    p.groups[0].push_back("unknown");
    expect_near(embed_phrase(p, t), {0.5, 0.5, 1.0, 0.0});
}

TEST(Embeddings, LabelText) {
    const auto t = unit_table({"rib", "left", "6th", "posterior", "heart"});
    const auto lex = lexicon({{"rib", Category::A}, {"left", Category::AM}, {"6th", Category::AM},
                              {"posterior", Category::AM}, {"heart", Category::A}});
    expect_near(embed_label_text({"heart", "heart", {}, {}}, lex, t), row(t, "heart"));
    const double third = 1.0 / 3.0;
    expect_near(embed_label_text({"x", "left 6th rib posterior", {}, {}}, lex, t), {1.0, third, third, third, 0.0});
    EXPECT_TRUE(is_zero(embed_label_text({"x", "spleen", {}, {}}, lex, t)));
}

TEST(Embeddings, SentenceMeanUsesEveryKnownWord) {
    const auto t = unit_table({"a", "b"});
    expect_near(embed_sentence_mean("A b zzz", t), {0.5, 0.5});
}

TEST(EmbeddingProperties, ObservationGroupsNeverContribute) {
    Rng rng(203);
    std::vector<std::string> vocab;
    for (int i = 0; i < 12; ++i) vocab.push_back("w" + std::to_string(i));
    EmbeddingTable t(5);
    for (const auto& w : vocab) {
        std::vector<double> v(5);
        for (double& x : v) x = rng.uniform(-1, 1);
        t.add(w, v);
    }
    auto draw = [&](int max) {
        std::vector<std::string> g;
        for (int i = rng.integer(0, max); i > 0; --i)
            g.push_back(rng.chance(0.8) ? vocab[static_cast<std::size_t>(rng.integer(0, 11))] : "oov");
        return g;
    };
    for (int trial = 0; trial < 200; ++trial) {
        TaggedPhrase p;
        for (auto& g : p.groups) g = draw(4);
        const auto base = embed_phrase(p, t);
        auto q = p;
        q.groups[2] = draw(4);
        q.groups[3] = draw(4);
        EXPECT_EQ(embed_phrase(q, t), base);
        auto r = p;
        rng.shuffle(r.groups[0]);
        rng.shuffle(r.groups[1]);
        expect_near(embed_phrase(r, t), base);
        bool known = false;
        for (int g : {0, 1})
            for (const auto& w : p.groups[static_cast<std::size_t>(g)]) known = known || t.find(w).has_value();
        EXPECT_EQ(is_zero(base), !known);
    }
}
