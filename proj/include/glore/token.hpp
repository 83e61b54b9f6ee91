#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "glore/error.hpp"

namespace glore {

enum class TokenKind { LexicalWord, DependencyRelation };
enum class Direction { None, Left, Right };

/// One element of a dependency path. Dependency tokens always carry a
/// direction; lexical words never do. "<-nsubj" and "nsubj->" are distinct.
struct Token {
    TokenKind kind = TokenKind::LexicalWord;
    std::string text;
    Direction direction = Direction::None;

    static Token word(std::string text) {
        return {TokenKind::LexicalWord, std::move(text), Direction::None};
    }
    static Token dep(std::string label, Direction dir) {
        return {TokenKind::DependencyRelation, std::move(label), dir};
    }

    /// Serialized form: "<-label", "label->" or the bare word.
    std::string key() const {
        if (kind == TokenKind::LexicalWord)
            return text;
        return direction == Direction::Left ? "<-" + text : text + "->";
    }

    auto operator<=>(const Token&) const = default;
};

/// A lexicalized shortest dependency path, e.g. "<-nsubjpass born nmod:in->".
class TextualRelation {
public:
    TextualRelation() = default;

    /// Throws DataError for an empty sequence or a token violating the
    /// direction invariant.
    explicit TextualRelation(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
        if (tokens_.empty())
            throw DataError("textual relation has no tokens");
        for (const auto& t : tokens_) {
            if (t.text.empty())
                throw DataError("token with empty text");
            const bool is_dep = t.kind == TokenKind::DependencyRelation;
            if (is_dep == (t.direction == Direction::None))
                throw DataError("token '" + t.text + "' has inconsistent direction");
        }
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            if (i > 0)
                key_ += ' ';
            key_ += tokens_[i].key();
        }
    }

    const std::vector<Token>& tokens() const noexcept { return tokens_; }
    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }

    /// Space-separated token keys; parse(canonical_key()) == *this.
    const std::string& canonical_key() const noexcept { return key_; }

    friend bool operator==(const TextualRelation& a, const TextualRelation& b) {
        return a.tokens_ == b.tokens_;
    }
    friend auto operator<=>(const TextualRelation& a, const TextualRelation& b) {
        return a.key_ <=> b.key_;
    }

private:
    std::vector<Token> tokens_;
    std::string key_;
};

namespace detail {

inline bool is_path_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline Token parse_token(std::string_view s, std::size_t offset) {
    const bool left = s.starts_with("<-");
    const bool right = s.ends_with("->");
    if (left && right)
        throw ParseError("malformed direction marker in '" + std::string(s) + "'", offset);
    if (left || right) {
        const auto label = left ? s.substr(2) : s.substr(0, s.size() - 2);
        if (label.empty())
            throw ParseError("dependency token without label", offset);
        if (label.find("<-") != std::string_view::npos ||
            label.find("->") != std::string_view::npos)
            throw ParseError("malformed direction marker in '" + std::string(s) + "'", offset);
        return Token::dep(std::string(label), left ? Direction::Left : Direction::Right);
    }
    const auto inner = s.find("<-") != std::string_view::npos
                           ? s.find("<-")
                           : s.find("->");
    if (inner != std::string_view::npos)
        throw ParseError("malformed direction marker in '" + std::string(s) + "'",
                         offset + inner);
    return Token::word(std::string(s));
}

} // namespace detail

/// Tokenize a whitespace-separated path. Dependency tokens are written
/// "<-label" (left) or "label->" (right); anything else is a lexical word.
inline TextualRelation parse_textual_relation(std::string_view path) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && detail::is_path_space(path[i]))
            ++i;
        const std::size_t start = i;
        while (i < path.size() && !detail::is_path_space(path[i]))
            ++i;
        if (i > start)
            tokens.push_back(detail::parse_token(path.substr(start, i - start), start));
    }
    if (tokens.empty())
        throw ParseError("empty dependency path", path.size());
    return TextualRelation(std::move(tokens));
}

} // namespace glore
