#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "paxray/container.hpp"
#include "paxray/error.hpp"
#include "paxray/taxonomy.hpp"

namespace paxray::language {

// ---------------------------------------------------------------------------
// Categories
// ---------------------------------------------------------------------------

/// Anatomy, anatomy modifier, observation, observation modifier.
enum class Category { A = 0, AM = 1, O = 2, OM = 3 };

[[nodiscard]] inline const char* category_name(Category c) noexcept {
    switch (c) {
        case Category::A:  return "A";
        case Category::AM: return "AM";
        case Category::O:  return "O";
        case Category::OM: return "OM";
    }
    return "";
}

[[nodiscard]] inline std::optional<Category> parse_category(std::string_view s) noexcept {
    if (s == "A") return Category::A;
    if (s == "AM") return Category::AM;
    if (s == "O") return Category::O;
    if (s == "OM") return Category::OM;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Text
// ---------------------------------------------------------------------------

struct Report {
    std::string id;
    std::string findings_text;
};

namespace detail {

inline bool is_space(char c) noexcept { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline bool is_word_char(char c) noexcept {
    const auto u = static_cast<unsigned char>(c);
    return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || (u >= '0' && u <= '9') || u >= 0x80;
}

inline std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace detail

/// Splits on '.', '?', '!' or ';' when followed by whitespace or end of text,
/// and on every newline. Fragments are trimmed; empty ones dropped.
[[nodiscard]] inline std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        const auto frag = detail::trim(text.substr(start, end - start));
        if (!frag.empty()) out.emplace_back(frag);
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        const bool terminal = c == '.' || c == '?' || c == '!' || c == ';';
        const bool boundary = i + 1 == text.size() || detail::is_space(text[i + 1]);
        if (c == '\n' || (terminal && boundary)) {
            flush(i);
            start = i + 1;
        }
    }
    if (start < text.size()) flush(text.size());
    return out;
}

[[nodiscard]] inline std::vector<std::string> split_sentences(const Report& r) { return split_sentences(r.findings_text); }

/// Lowercase ASCII words; every character that is not alphanumeric (or a
/// non-ASCII byte) separates tokens.
[[nodiscard]] inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (detail::is_word_char(c)) {
            cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

[[nodiscard]] inline std::string join(std::span<const std::string> words) {
    std::string s;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) s += ' ';
        s += words[i];
    }
    return s;
}

// ---------------------------------------------------------------------------
// Lexicon
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMaxSurfaceTokens = 3;

/// Surface form (1..3 lowercase tokens joined by single spaces) -> category.
class Lexicon {
public:
    void add(const std::string& surface, Category c) {
        const auto tokens = tokenize(surface);
        if (tokens.empty() || tokens.size() > kMaxSurfaceTokens || join(tokens) != surface)
            throw Error("language", "MalformedLine", "invalid surface form '" + surface + "'");
        if (!entries_.emplace(surface, c).second) throw Error("language", "DuplicateEntry", surface);
    }

    [[nodiscard]] std::optional<Category> find(const std::string& surface) const {
        const auto it = entries_.find(surface);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] const std::map<std::string, Category>& entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

    bool operator==(const Lexicon&) const = default;

private:
    std::map<std::string, Category> entries_;
};

/// TSV: `<surface form>\t<A|AM|O|OM>` per line. Blank lines are ignored.
[[nodiscard]] inline Lexicon parse_lexicon(std::string_view text) {
    Lexicon lex;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (detail::trim(line).empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos)
            throw Error("language", "MalformedLine", "line " + std::to_string(line_no));
        const auto cat = parse_category(line.substr(tab + 1));
        if (!cat) throw Error("language", "InvalidCategory", "line " + std::to_string(line_no));
        lex.add(std::string(line.substr(0, tab)), *cat);
    }
    return lex;
}

[[nodiscard]] inline std::string serialize_lexicon(const Lexicon& lex) {
    std::string out;
    for (const auto& [surface, cat] : lex.entries()) out += surface + "\t" + category_name(cat) + "\n";
    return out;
}

[[nodiscard]] inline Lexicon load_lexicon(const fs::path& p) {
    const auto bytes = paxray::detail::read_file(p, "language");
    return parse_lexicon(std::string_view(bytes.data(), bytes.size()));
}

// ---------------------------------------------------------------------------
// Tagging
// ---------------------------------------------------------------------------

struct Match {
    std::string surface;
    Category category;
    std::size_t begin;  // token range [begin, end)
    std::size_t end;

    bool operator==(const Match&) const = default;
};

/// A phrase with its words grouped by category; untagged words belong to no group.
struct TaggedPhrase {
    std::string raw_text;
    std::vector<std::string> tokens;
    std::array<std::vector<std::string>, 4> groups;
    std::vector<Match> matches;
    bool is_anomaly = false;
    std::optional<bool> is_problem;  // external classifier verdict, when supplied

    [[nodiscard]] const std::vector<std::string>& group(Category c) const noexcept {
        return groups[static_cast<std::size_t>(c)];
    }

    bool operator==(const TaggedPhrase&) const = default;
};

/// Greedy longest-match lookup (three-token forms first). Every token of a
/// matched form joins that form's category group.
[[nodiscard]] inline TaggedPhrase tag_phrase(std::string_view text, const Lexicon& lex) {
    TaggedPhrase p;
    p.raw_text = std::string(text);
    p.tokens = tokenize(text);
    std::size_t i = 0;
    while (i < p.tokens.size()) {
        bool matched = false;
        for (std::size_t n = std::min(kMaxSurfaceTokens, p.tokens.size() - i); n >= 1 && !matched; --n) {
            const auto surface = join(std::span(p.tokens).subspan(i, n));
            if (const auto cat = lex.find(surface)) {
                for (std::size_t k = i; k < i + n; ++k) p.groups[static_cast<std::size_t>(*cat)].push_back(p.tokens[k]);
                p.matches.push_back({surface, *cat, i, i + n});
                i += n;
                matched = true;
            }
        }
        if (!matched) ++i;
    }
    p.is_anomaly = !p.group(Category::O).empty();
    return p;
}

/// Keeps observation-bearing or anomalous phrases; an external problem
/// verdict overrides that rule.
[[nodiscard]] inline std::vector<TaggedPhrase> filter_phrases(const std::vector<TaggedPhrase>& phrases) {
    std::vector<TaggedPhrase> out;
    for (const auto& p : phrases) {
        const bool keep = p.is_problem ? *p.is_problem : (!p.group(Category::O).empty() || p.is_anomaly);
        if (keep) out.push_back(p);
    }
    return out;
}

struct PretaggedReport {
    std::string id;
    std::vector<TaggedPhrase> phrases;
};

/// `{"id", "phrases":[{"text","tokens":[{"word","cat"}],"is_problem","is_anomaly"}]}`
[[nodiscard]] inline PretaggedReport pretagged_from_json(const nlohmann::json& j) {
    PretaggedReport r;
    try {
        r.id = j.at("id").get<std::string>();
        for (const auto& jp : j.at("phrases")) {
            TaggedPhrase p;
            p.raw_text = jp.value("text", std::string{});
            for (const auto& jt : jp.at("tokens")) {
                auto words = tokenize(jt.at("word").get<std::string>());
                const auto& cat = jt.contains("cat") ? jt.at("cat") : nlohmann::json(nullptr);
                std::optional<Category> c;
                if (!cat.is_null()) {
                    c = parse_category(cat.get<std::string>());
                    if (!c) throw Error("language", "InvalidCategory", cat.get<std::string>());
                }
                const std::size_t begin = p.tokens.size();
                for (auto& w : words) {
                    if (c) p.groups[static_cast<std::size_t>(*c)].push_back(w);
                    p.tokens.push_back(std::move(w));
                }
                if (c && p.tokens.size() > begin)
                    p.matches.push_back({join(std::span(p.tokens).subspan(begin)), *c, begin, p.tokens.size()});
            }
            if (jp.contains("is_problem") && !jp.at("is_problem").is_null()) p.is_problem = jp.at("is_problem").get<bool>();
            p.is_anomaly = jp.contains("is_anomaly") && !jp.at("is_anomaly").is_null()
                               ? jp.at("is_anomaly").get<bool>()
                               : !p.group(Category::O).empty();
            r.phrases.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("language", "MalformedJson", e.what());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

/// Word -> d-dimensional vector store (word2vec text layout).
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    void add(const std::string& token, std::span<const double> v) {
        if (v.size() != dim_) throw Error("language", "DimensionMismatch", token);
        if (!index_.emplace(token, tokens_.size()).second) throw Error("language", "DuplicateToken", token);
        tokens_.push_back(token);
        values_.insert(values_.end(), v.begin(), v.end());
    }

    [[nodiscard]] std::optional<std::span<const double>> find(const std::string& token) const {
        const auto it = index_.find(token);
        if (it == index_.end()) return std::nullopt;
        return std::span<const double>(values_).subspan(it->second * dim_, dim_);
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
    [[nodiscard]] const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    bool operator==(const EmbeddingTable& o) const {
        return dim_ == o.dim_ && tokens_ == o.tokens_ && values_ == o.values_;
    }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> values_;
};

namespace detail {

inline std::vector<std::string_view> fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace detail

/// First line "<count> <dim>", then one row per token: the token followed by
/// dim decimal values.
[[nodiscard]] inline EmbeddingTable parse_embeddings(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
    }
    while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw Error("language", "MalformedHeader", "empty file");

    const auto head = detail::fields(lines.front());
    std::size_t count = 0, dim = 0;
    if (head.size() != 2 || !detail::parse_number(head[0], count) || !detail::parse_number(head[1], dim) || dim == 0)
        throw Error("language", "MalformedHeader", std::string(lines.front()));

    EmbeddingTable t(dim);
    std::vector<double> row(dim);
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const auto f = detail::fields(lines[l]);
        if (f.empty()) throw Error("language", "DimensionMismatch", "empty row at line " + std::to_string(l + 1));
        if (f.size() - 1 != dim)
            throw Error("language", "DimensionMismatch",
                        "line " + std::to_string(l + 1) + " has " + std::to_string(f.size() - 1) + " values");
        for (std::size_t k = 0; k < dim; ++k)
            if (!detail::parse_number(f[k + 1], row[k]) || !std::isfinite(row[k]))
                throw Error("language", "MalformedValue", "line " + std::to_string(l + 1));
        t.add(std::string(f[0]), row);
    }
    if (t.size() != count)
        throw Error("language", "CountMismatch",
                    "header declares " + std::to_string(count) + " rows, found " + std::to_string(t.size()));
    return t;
}

/// Shortest round-trip decimal formatting.
[[nodiscard]] inline std::string serialize_embeddings(const EmbeddingTable& t) {
    std::string out = std::to_string(t.size()) + " " + std::to_string(t.dim()) + "\n";
    char buf[64];
    for (const auto& tok : t.tokens()) {
        out += tok;
        const auto row = *t.find(tok);
        for (double v : row) {
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
            out += ' ';
            out.append(buf, ptr);
        }
        out += '\n';
    }
    return out;
}

[[nodiscard]] inline EmbeddingTable load_embeddings(const fs::path& p) {
    const auto bytes = paxray::detail::read_file(p, "language");
    return parse_embeddings(std::string_view(bytes.data(), bytes.size()));
}

/// Mean of the in-vocabulary words; zero vector when none are known.
[[nodiscard]] inline std::vector<double> mean_embedding(const std::vector<std::string>& words, const EmbeddingTable& t) {
    std::vector<double> out(t.dim(), 0.0);
    std::size_t n = 0;
    for (const auto& w : words) {
        const auto v = t.find(w);
        if (!v) continue;
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += (*v)[k];
        ++n;
    }
    if (n)
        for (double& x : out) x /= static_cast<double>(n);
    return out;
}

/// mean(anatomy) + mean(anatomy modifier); observation groups never contribute.
[[nodiscard]] inline std::vector<double> embed_phrase(const TaggedPhrase& p, const EmbeddingTable& t) {
    auto out = mean_embedding(p.group(Category::A), t);
    const auto am = mean_embedding(p.group(Category::AM), t);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += am[k];
    return out;
}

[[nodiscard]] inline std::vector<double> embed_label_text(const LabelNode& node, const Lexicon& lex,
                                                          const EmbeddingTable& t) {
    return embed_phrase(tag_phrase(node.display_name, lex), t);
}

/// Sentence-level variant: mean over every in-vocabulary word of the phrase.
[[nodiscard]] inline std::vector<double> embed_sentence_mean(std::string_view text, const EmbeddingTable& t) {
    return mean_embedding(tokenize(text), t);
}

[[nodiscard]] inline bool is_zero(std::span<const double> v) noexcept {
    for (double x : v)
        if (x != 0.0) return false;
    return true;
}

}  // namespace paxray::language
